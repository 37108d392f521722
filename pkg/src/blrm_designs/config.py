"""Run configuration files (TOML) and bundled presets."""

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import tomli
import tomli_w

from .decision import DesignConfig, Variant
from .posterior import BivariatePrior, ModelSpec, ToxicityIntervals, TrialData
from .scenarios import PaolettiParams, RandomScenarios, fixed_scenario, ScenarioSpec, true_mtd

__all__ = ["ConfigError", "default_mtd_threshold", "RunConfig", "load_config", "load_trial_data", "PRESETS"]

PRESETS = ("table1", "table5", "table6", "table7-clertant")

_SECTIONS = {
    "model": {"doses", "reference_dose"},
    "prior": {"mean", "cov"},
    "design": {
        "phi", "tti", "variants", "overdose_bound", "feasibility_bound", "g_exponent",
        "mtd_min_patients", "mtd_target_prob_threshold", "max_sample_size",
        "cohort_size", "start_dose_index",
    },
    "simulation": {"n_reps", "master_seed", "parallelism", "n_nodes"},
    "scenario": {"class", "shape", "rates", "paoletti_params"},
}


class ConfigError(ValueError):
    pass


def default_mtd_threshold(tti):
    """P(target) needed to declare an MTD: 0.4 for the narrow (0.20, 0.30) interval, else 0.5."""
    a, b = tti
    return 0.4 if (round(a, 10), round(b, 10)) == (0.2, 0.3) else 0.5


def _check_keys(raw):
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for sec, body in raw.items():
        if not isinstance(body, dict):
            raise ConfigError(f"section [{sec}] must be a table")
        extra = set(body) - _SECTIONS[sec]
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = field(default_factory=ModelSpec.default)
    prior: BivariatePrior = field(default_factory=BivariatePrior)
    phi: float = 0.25
    tti: tuple = (0.16, 0.33)
    variants: tuple = ("original", "d1", "d2", "d3", "d4")
    overdose_bound: float = 0.3
    feasibility_bound: float = 0.25
    g_exponent: float = 1.0
    mtd_min_patients: int = 6
    mtd_target_prob_threshold: float = None
    max_sample_size: int = 45
    cohort_size: int = 3
    start_dose_index: int = 0
    n_reps: int = 1000
    master_seed: int = 1
    parallelism: int = 1
    n_nodes: int = 64
    scenario_class: str = "fixed"
    shape: str = "s-shaped"
    rates: tuple = None
    paoletti_params: tuple = PaolettiParams().as_tuple()

    def __post_init__(self):
        # building every component runs its own validation
        try:
            self.intervals
            for v in self.variants:
                self.design(v)
            self.scenario_source()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_reps < 1 or self.parallelism < 1 or self.n_nodes < 4:
            raise ConfigError("n_reps and parallelism must be >= 1 and n_nodes >= 4")
        if self.start_dose_index >= self.model.n_doses:
            raise ConfigError("start dose index is beyond the dose grid")

    @property
    def target_threshold(self):
        if self.mtd_target_prob_threshold is None:
            return default_mtd_threshold(self.tti)
        return self.mtd_target_prob_threshold

    @property
    def intervals(self):
        return ToxicityIntervals(self.phi, self.tti[0], self.tti[1])

    def design(self, variant=None):
        return DesignConfig(
            intervals=self.intervals,
            variant=Variant.parse(variant or self.variants[0]),
            overdose_bound=self.overdose_bound,
            feasibility_bound=self.feasibility_bound,
            g_exponent=self.g_exponent,
            mtd_min_patients=self.mtd_min_patients,
            mtd_target_prob_threshold=self.target_threshold,
            max_sample_size=self.max_sample_size,
            cohort_size=self.cohort_size,
            start_dose_index=self.start_dose_index,
        )

    def scenario_source(self):
        if self.scenario_class == "fixed":
            if self.rates is not None:
                if len(self.rates) != self.model.n_doses:
                    raise ConfigError("scenario rates must match the dose grid")
                mtd = true_mtd(self.rates, self.phi, self.intervals)
                return ScenarioSpec(tuple(self.rates), mtd, "custom")
            return fixed_scenario(self.shape, self.model.doses, self.phi)
        if self.scenario_class in ("clertant", "paoletti"):
            return RandomScenarios(self.scenario_class, self.phi, PaolettiParams(*self.paoletti_params))
        raise ConfigError(f"unknown scenario class {self.scenario_class!r}")

    def with_overrides(self, **kwargs):
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self

    def to_dict(self):
        scenario = {"class": self.scenario_class, "shape": self.shape,
                    "paoletti_params": list(self.paoletti_params)}
        if self.rates is not None:
            scenario["rates"] = list(self.rates)
        return {
            "model": {"doses": list(self.model.doses), "reference_dose": self.model.reference_dose},
            "prior": {"mean": list(self.prior.mean), "cov": [list(r) for r in self.prior.cov]},
            "design": {
                "phi": self.phi,
                "tti": list(self.tti),
                "variants": list(self.variants),
                "overdose_bound": self.overdose_bound,
                "feasibility_bound": self.feasibility_bound,
                "g_exponent": self.g_exponent,
                "mtd_min_patients": self.mtd_min_patients,
                "mtd_target_prob_threshold": self.target_threshold,
                "max_sample_size": self.max_sample_size,
                "cohort_size": self.cohort_size,
                "start_dose_index": self.start_dose_index,
            },
            "simulation": {"n_reps": self.n_reps, "master_seed": self.master_seed,
                           "parallelism": self.parallelism, "n_nodes": self.n_nodes},
            "scenario": scenario,
        }

    def dumps(self):
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, raw):
        _check_keys(raw)
        kw = {}
        try:
            m = raw.get("model", {})
            if m:
                kw["model"] = ModelSpec(tuple(m.get("doses", ModelSpec.default().doses)),
                                        m.get("reference_dose", 100.0))
            p = raw.get("prior", {})
            if p:
                default = BivariatePrior()
                kw["prior"] = BivariatePrior(tuple(p.get("mean", default.mean)),
                                             tuple(tuple(r) for r in p.get("cov", default.cov)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        d = dict(raw.get("design", {}))
        if "tti" in d:
            d["tti"] = tuple(d["tti"])
        if "variants" in d:
            if isinstance(d["variants"], str):
                d["variants"] = [d["variants"]]
            try:
                d["variants"] = tuple(Variant.parse(v).value for v in d["variants"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        kw.update(d)
        kw.update(raw.get("simulation", {}))
        s = dict(raw.get("scenario", {}))
        if "class" in s:
            kw["scenario_class"] = s.pop("class")
        if "rates" in s:
            kw["rates"] = tuple(s.pop("rates"))
        if "paoletti_params" in s:
            kw["paoletti_params"] = tuple(s.pop("paoletti_params"))
        kw.update(s)
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _read_tree(path):
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomli.loads(text)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def load_config(path_or_preset):
    """Load a TOML (or JSON) config file or a bundled preset by name."""
    name = str(path_or_preset)
    if name in PRESETS or name.removesuffix(".toml") in PRESETS:
        ref = resources.files("blrm_designs") / "presets" / f"{name.removesuffix('.toml')}.toml"
        return RunConfig.from_dict(tomli.loads(ref.read_text()))
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return RunConfig.from_dict(_read_tree(path))


def load_trial_data(path, model):
    """Read per-dose ``n``, ``y`` and ``current_index`` from a TOML or JSON file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    raw = _read_tree(path)
    extra = set(raw) - {"n", "y", "current_index"}
    if extra:
        raise ConfigError(f"unknown keys in data file: {sorted(extra)}")
    try:
        data = TrialData(tuple(raw["n"]), tuple(raw["y"]))
        current = int(raw["current_index"])
    except KeyError as exc:
        raise ConfigError(f"data file is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if len(data) != model.n_doses:
        raise ConfigError("data length does not match the dose grid")
    if not 0 <= current < model.n_doses:
        raise ConfigError("current_index outside the dose grid")
    return data, current
