"""Text renderings of single fits, operating characteristics and scenario sets."""

import csv
import enum
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

__all__ = [
    "Layout",
    "TableSpec",
    "round_half_away",
    "fmt_fixed",
    "render_single_fit",
    "render_oc",
    "render_comparison",
    "render_random_summary",
    "render",
    "scenarios_csv",
    "curve_rows",
    "design_summary_rows",
]

FORMATS = ("csv", "markdown", "json")
SINGLE_FIT_HEADER = ["Dose", "#DLT", "#Patient", "P(Under)", "P(Target)", "P(Over)"]


class Layout(enum.Enum):
    SINGLE_FIT = "single_fit"
    FIXED_SCENARIO = "fixed_scenario"
    RANDOM_SUMMARY = "random_summary"


@dataclass(frozen=True)
class TableSpec:
    layout: Layout = Layout.SINGLE_FIT
    format: str = "csv"

    def __post_init__(self):
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")


def round_half_away(x, places):
    """Round to ``places`` decimals, halves away from zero (on the decimal repr)."""
    q = Decimal(1).scaleb(-places)
    return Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP)


def fmt_fixed(x, places):
    return str(round_half_away(x, places))


def _dose_label(d):
    return f"{d:g}"


def _emit(header, rows, fmt):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unsupported tabular format {fmt!r}")


def render_single_fit(probs, data, model, fmt="csv"):
    """One row per dose: dose, DLTs, patients and the three interval probabilities."""
    rows = []
    for i, d in enumerate(model.doses):
        rows.append([
            _dose_label(d), data.y[i], data.n[i],
            fmt_fixed(probs.under[i], 3),
            fmt_fixed(probs.target[i], 3),
            fmt_fixed(probs.over[i], 3),
        ])
    if fmt == "json":
        return json.dumps(
            [
                {"dose": d, "dlt": data.y[i], "patients": data.n[i],
                 "p_under": float(probs.under[i]), "p_target": float(probs.target[i]),
                 "p_over": float(probs.over[i])}
                for i, d in enumerate(model.doses)
            ],
            indent=2,
        ) + "\n"
    return _emit(SINGLE_FIT_HEADER, rows, fmt)


def _oc_rows(ocs, mtd_index, model, markdown):
    def label(i):
        lab = _dose_label(model.doses[i])
        if i == mtd_index:
            return f"**{lab}**" if markdown else f"{lab}*"
        return lab

    rows = [["AllToxic"] + sum(([fmt_fixed(oc.all_toxic, 3), "-"] for oc in ocs), [])]
    for i in range(model.n_doses):
        rows.append([label(i)] + sum(
            ([fmt_fixed(oc.selection[i], 3), fmt_fixed(oc.mean_patients[i], 2)] for oc in ocs), []
        ))
    rows.append(["NotFound"] + sum(([fmt_fixed(oc.not_found, 3), "-"] for oc in ocs), []))
    rows.append(["Overall"] + sum((["", fmt_fixed(oc.mean_n, 2)] for oc in ocs), []))
    rows.append(["%DLT"] + sum(([fmt_fixed(oc.pct_dlt, 1), ""] for oc in ocs), []))
    return rows


def render_comparison(ocs, mtd_index, model, fmt="csv"):
    """Side-by-side table, one (Frequency, N) column pair per design.

    ``ocs`` maps a design label to its OperatingCharacteristics. Rows are
    AllToxic, one per dose (true MTD flagged), NotFound, Overall and %DLT.
    """
    labels = list(ocs)
    if fmt == "json":
        return json.dumps(
            {"mtd_index": mtd_index, "doses": list(model.doses),
             "designs": {k: v.to_dict() for k, v in ocs.items()}},
            indent=2,
        ) + "\n"
    header = ["MTD"]
    for lab in labels:
        header += [f"{lab} Frequency", f"{lab} N"]
    rows = _oc_rows([ocs[k] for k in labels], mtd_index, model, fmt == "markdown")
    return _emit(header, rows, fmt)


def render_oc(oc, mtd_index, model, fmt="csv", label="Design"):
    return render_comparison({label: oc}, mtd_index, model, fmt)


def render_random_summary(results, fmt="csv"):
    """Correct-MTD fractions by design (rows) and scenario setting (columns).

    ``results`` maps a column label such as ``"Clertant (0.16, 0.33)"`` to a
    mapping of design label to OperatingCharacteristics.
    """
    columns = list(results)
    designs = []
    for col in columns:
        for d in results[col]:
            if d not in designs:
                designs.append(d)
    if fmt == "json":
        return json.dumps(
            {col: {d: oc.correct for d, oc in results[col].items()} for col in columns},
            indent=2,
        ) + "\n"
    rows = [
        [d] + [fmt_fixed(results[c][d].correct, 3) if d in results[c] else "" for c in columns]
        for d in designs
    ]
    return _emit(["Design"] + [f"{c} %CorrectMTD" for c in columns], rows, fmt)


def render(obj, spec, **kwargs):
    """Dispatch on ``spec.layout``; keyword arguments go to the layout renderer."""
    if spec.layout is Layout.SINGLE_FIT:
        return render_single_fit(obj, kwargs["data"], kwargs["model"], spec.format)
    if spec.layout is Layout.FIXED_SCENARIO:
        ocs = obj if isinstance(obj, dict) else {kwargs.get("label", "Design"): obj}
        return render_comparison(ocs, kwargs.get("mtd_index"), kwargs["model"], spec.format)
    return render_random_summary(obj, spec.format)


def scenarios_csv(scenarios, doses=None, comments=()):
    """CSV with one row per (scenario, dose); ``dose_mg`` blank when doses unknown."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario_id", "dose_index", "dose_mg", "rate", "is_mtd"])
    for sid, sc in enumerate(scenarios):
        for i, r in enumerate(sc.rates):
            dose = _dose_label(doses[i]) if doses is not None else ""
            w.writerow([sid, i, dose, repr(float(r)), int(i == sc.mtd_index)])
    return buf.getvalue()


def curve_rows(scenarios, doses):
    """(label, dose, rate) rows for plotting dose-toxicity curves."""
    return [(sc.label, d, r) for sc in scenarios for d, r in zip(doses, sc.rates)]


def design_summary_rows(results):
    """(scenario, design, correct fraction, mean patients at the true MTD) rows.

    ``results`` maps a scenario label to ``(mtd_index, {design: oc})``.
    """
    rows = []
    for scen, (mtd, ocs) in results.items():
        for design, oc in ocs.items():
            at_mtd = float(oc.mean_patients[mtd]) if mtd is not None else float("nan")
            rows.append((scen, design, oc.correct, at_mtd))
    return rows
