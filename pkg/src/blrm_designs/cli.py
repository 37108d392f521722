"""Command-line entry point: ``blrm-designs {recommend,simulate,scenario-gen,grid}``.

Exit codes: 0 success, 2 input error, 3 numerical error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, RunConfig, load_config, load_trial_data
from .decision import TrialState, Variant, next_action
from .posterior import ConvergenceError, interval_probs, quadrature_grid
from .scenarios import (
    PaolettiParams,
    ScenarioSpec,
    fixed_scenario,
    gen_clertant,
    gen_paoletti,
)
from .simulator import TrialFailure, run_batch

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _floats(text, n=None):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _tti(text):
    return _floats(text, 2)


def _design_flags(p):
    p.add_argument("--design", choices=[v.value for v in Variant], action="append",
                   help="design variant; repeat for several (default: from config)")
    p.add_argument("--tti", type=_tti, help="target toxicity interval as a,b")
    p.add_argument("--phi", type=float, help="target toxicity level")
    p.add_argument("--overdose-bound", type=float)
    p.add_argument("--alpha-f", type=float, help="feasibility bound for designs 1 and 3")
    p.add_argument("--g-exponent", type=float, help="exponent of g(r) = r^e for designs 2 and 4")
    p.add_argument("--format", choices=report.FORMATS, default="csv")
    p.add_argument("--out", type=Path, help="write output here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="blrm-designs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("recommend", help="fit cumulative data and recommend the next action")
    rec.add_argument("--config", default="table1", help="config file or preset name")
    rec.add_argument("--data", required=True, type=Path,
                     help="TOML/JSON file with n, y and current_index")
    _design_flags(rec)

    sim = sub.add_parser("simulate", help="simulate trials and tabulate operating characteristics")
    sim.add_argument("--config", default="table5", help="config file or preset name")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--threads", type=int, help="worker processes")
    sim.add_argument("--dump-config", type=Path, help="write the effective config here")
    _design_flags(sim)

    gen = sub.add_parser("scenario-gen", help="emit true dose-toxicity scenarios as CSV")
    gen.add_argument("--class", dest="scenario_class", required=True,
                     choices=["clertant", "paoletti", "fixed"])
    gen.add_argument("--shape", default="s-shaped", help="steep, s-shaped or flat (fixed class)")
    gen.add_argument("--n-scenarios", type=int, default=20)
    gen.add_argument("--n-doses", type=int, default=7)
    gen.add_argument("--phi", type=float, default=0.25)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--paoletti-params", type=lambda s: _floats(s, 5),
                     help="sigma0,mu1,sigma1,mu2,sigma2")
    gen.add_argument("--out", type=Path)

    grid = sub.add_parser("grid", help="dump the posterior quadrature grid as CSV")
    grid.add_argument("--config", default="table1")
    grid.add_argument("--data", required=True, type=Path)
    grid.add_argument("--out", type=Path)
    return parser


def _apply_flags(cfg, args):
    tti = getattr(args, "tti", None)
    return cfg.with_overrides(
        variants=tuple(args.design) if getattr(args, "design", None) else None,
        tti=tuple(tti) if tti else None,
        phi=args.phi,
        overdose_bound=args.overdose_bound,
        feasibility_bound=args.alpha_f,
        g_exponent=args.g_exponent,
        master_seed=getattr(args, "seed", None),
        n_reps=getattr(args, "reps", None),
        parallelism=getattr(args, "threads", None),
    )


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_recommend(args):
    cfg = _apply_flags(load_config(args.config), args)
    data, current = load_trial_data(args.data, cfg.model)
    probs = interval_probs(data, cfg.model, cfg.prior, cfg.intervals, n_nodes=cfg.n_nodes)
    state = TrialState(current, data)
    decisions = {
        Variant.parse(v).value: next_action(probs, state, cfg.design(v), cfg.model).to_dict()
        for v in cfg.variants
    }
    if args.format == "json":
        payload = {
            "fit": json.loads(report.render_single_fit(probs, data, cfg.model, "json")),
            "current_index": current,
            "decisions": decisions,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = report.render_single_fit(probs, data, cfg.model, args.format)
        text += "\n" + "\n".join(
            json.dumps({"design": k, **v}) for k, v in decisions.items()
        ) + "\n"
    _write(text, args.out)
    return EXIT_OK


def simulate_config(cfg):
    """Run every configured design; returns ``{design label: OperatingCharacteristics}``."""
    source = cfg.scenario_source()
    return {
        Variant.parse(v).label: run_batch(
            source, cfg.design(v), cfg.model, cfg.prior, cfg.n_reps,
            master_seed=cfg.master_seed, parallelism=cfg.parallelism, n_nodes=cfg.n_nodes,
        )
        for v in cfg.variants
    }


def cmd_simulate(args):
    cfg = _apply_flags(load_config(args.config), args)
    if args.dump_config:
        args.dump_config.write_text(cfg.dumps())
    ocs = simulate_config(cfg)
    source = cfg.scenario_source()
    if isinstance(source, ScenarioSpec):
        text = report.render_comparison(ocs, source.mtd_index, cfg.model, args.format)
    else:
        column = f"{source.kind.capitalize()} ({cfg.tti[0]:g}, {cfg.tti[1]:g})"
        text = report.render_random_summary({column: ocs}, args.format)
    _write(text, args.out)
    return EXIT_OK


def cmd_scenario_gen(args):
    if args.n_scenarios < 1 or args.n_doses < 2 or not 0 < args.phi < 1:
        raise ConfigError("need --n-scenarios >= 1, --n-doses >= 2 and 0 < --phi < 1")
    comments = [f"class={args.scenario_class} phi={args.phi:g} seed={args.seed}"]
    doses = None
    if args.scenario_class == "fixed":
        try:
            sc = fixed_scenario(args.shape)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        scenarios = [sc]
        doses = RunConfig().model.doses
        comments[0] = f"class=fixed shape={sc.label}"
    else:
        seq = np.random.SeedSequence(args.seed)
        rngs = [np.random.default_rng(s) for s in seq.spawn(args.n_scenarios)]
        if args.scenario_class == "clertant":
            scenarios = [gen_clertant(args.n_doses, args.phi, r) for r in rngs]
        else:
            try:
                params = PaolettiParams(*(args.paoletti_params or PaolettiParams().as_tuple()))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            comments.append(
                "paoletti_params sigma0,mu1,sigma1,mu2,sigma2="
                + ",".join(f"{v:g}" for v in params.as_tuple())
            )
            scenarios = [gen_paoletti(args.n_doses, args.phi, params, r) for r in rngs]
    _write(report.scenarios_csv(scenarios, doses, comments), args.out)
    return EXIT_OK


def cmd_grid(args):
    cfg = load_config(args.config)
    data, _ = load_trial_data(args.data, cfg.model)
    g = quadrature_grid(data, cfg.model, cfg.prior, n_nodes=cfg.n_nodes)
    lines = ["log_alpha,log_beta,weight,log_post"]
    lines += [
        f"{float(a)!r},{float(b)!r},{float(w)!r},{float(lp)!r}"
        for a, b, w, lp in zip(g.log_alpha, g.log_beta, g.weight, g.log_post)
    ]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


COMMANDS = {
    "recommend": cmd_recommend,
    "simulate": cmd_simulate,
    "scenario-gen": cmd_scenario_gen,
    "grid": cmd_grid,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, TrialFailure) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
