"""Trial simulation and operating characteristics."""

import enum
import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decision import Action, Decision, TrialState, next_action
from .posterior import DEFAULT_NODES, ConvergenceError, TrialData, interval_probs
from .scenarios import ScenarioSpec, true_mtd

__all__ = [
    "Terminal",
    "TrialOutcome",
    "OperatingCharacteristics",
    "TrialFailure",
    "replicate_rng",
    "run_trial",
    "run_batch",
    "cached_interval_probs",
]


class Terminal(enum.Enum):
    DECLARED_MTD = "declared_mtd"
    ALL_TOXIC = "all_toxic"
    NOT_FOUND = "not_found"


class TrialFailure(RuntimeError):
    """A replicate failed; carries the replicate index and trial trace."""

    def __init__(self, message, replicate=None, trace=(), cause=None):
        super().__init__(message)
        self.replicate = replicate
        self.trace = tuple(trace)
        self.cause = cause


@dataclass(frozen=True)
class TraceStep:
    dose_index: int
    dlts: int
    decision: Decision


@dataclass(frozen=True)
class TrialOutcome:
    terminal: Terminal
    mtd_index: int
    data: TrialData
    trace: tuple = field(repr=False)
    scenario: ScenarioSpec = field(default=None, repr=False)

    @property
    def patients(self):
        return self.data.n

    @property
    def dlts(self):
        return self.data.y

    @property
    def total_n(self):
        return self.data.total_n

    @property
    def total_dlt(self):
        return self.data.total_dlt


@dataclass(frozen=True, eq=False)
class OperatingCharacteristics:
    """Aggregate over replicates; frequencies are fractions of ``n_replicates``.

    ``correct`` is the fraction of replicates whose result matches that
    replicate's own true MTD (AllToxic counts as correct when the true MTD is
    below the lowest dose).
    """

    selection: np.ndarray
    all_toxic: float
    not_found: float
    mean_patients: np.ndarray
    mean_n: float
    dlt_rate: float
    correct: float
    n_replicates: int
    counts: dict = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, OperatingCharacteristics):
            return NotImplemented
        return self.counts == other.counts

    @property
    def pct_dlt(self):
        return 100.0 * self.dlt_rate

    def to_dict(self):
        return {
            "n_replicates": self.n_replicates,
            "selection": self.selection.tolist(),
            "all_toxic": self.all_toxic,
            "not_found": self.not_found,
            "mean_patients": self.mean_patients.tolist(),
            "mean_n": self.mean_n,
            "pct_dlt": self.pct_dlt,
            "correct": self.correct,
        }


@functools.lru_cache(maxsize=1 << 16)
def cached_interval_probs(data, model, prior, intervals, n_nodes=DEFAULT_NODES):
    """Memoised ``interval_probs``; every argument is hashable and immutable."""
    return interval_probs(data, model, prior, intervals, n_nodes=n_nodes)


def replicate_rng(master_seed, replicate):
    """Independent generator for one replicate, fixed by ``(master_seed, replicate)``."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(replicate,))
    return np.random.Generator(np.random.PCG64(seq))


def run_trial(scenario, design, model, prior, rng, n_nodes=DEFAULT_NODES):
    """Simulate one trial against true rates ``scenario.rates``.

    ``rng`` is a seed or ``numpy.random.Generator``. Each cohort's DLTs are
    drawn as ``cohort_size`` Bernoulli variables at the current dose.
    """
    if len(scenario) != model.n_doses:
        raise ValueError("scenario and model have different numbers of doses")
    rng = np.random.default_rng(rng)
    rates = scenario.rates
    intervals = design.intervals
    data = TrialData.empty(model.n_doses)
    current = design.start_dose_index
    trace = []
    while True:
        dlts = int(np.count_nonzero(rng.random(design.cohort_size) < rates[current]))
        data = data.add_cohort(current, design.cohort_size, dlts)
        try:
            probs = cached_interval_probs(data, model, prior, intervals, n_nodes)
        except ConvergenceError as exc:
            raise TrialFailure(str(exc), trace=trace, cause=exc) from exc
        decision = next_action(probs, TrialState(current, data), design, model)
        trace.append(TraceStep(current, dlts, decision))
        if decision.action is Action.STOP_ALL_TOXIC:
            return TrialOutcome(Terminal.ALL_TOXIC, None, data, tuple(trace), scenario)
        if decision.action is Action.DECLARE_MTD:
            return TrialOutcome(
                Terminal.DECLARED_MTD, decision.target_index, data, tuple(trace), scenario
            )
        if decision.action is Action.STOP_MAX_N:
            return TrialOutcome(Terminal.NOT_FOUND, None, data, tuple(trace), scenario)
        current = decision.target_index


def _draw_scenario(source, J, rng):
    if isinstance(source, ScenarioSpec):
        return source
    return source.draw(J, rng)


def _run_replicates(source, design, model, prior, master_seed, indices, n_nodes):
    """Run a block of replicates and return their integer tallies."""
    K = model.n_doses
    tallies = []
    for i in indices:
        rng = replicate_rng(master_seed, i)
        scenario = _draw_scenario(source, K, rng)
        try:
            out = run_trial(scenario, design, model, prior, rng, n_nodes)
        except TrialFailure as exc:
            exc.replicate = i
            raise
        except Exception as exc:
            raise TrialFailure(f"replicate {i} failed: {exc}", replicate=i, cause=exc) from exc
        truth = true_mtd(scenario.rates, design.intervals.phi, design.intervals)
        if isinstance(source, ScenarioSpec) and source.mtd_index is not None:
            truth = source.mtd_index
        if out.terminal is Terminal.DECLARED_MTD:
            correct = out.mtd_index == truth
        elif out.terminal is Terminal.ALL_TOXIC:
            correct = truth is None
        else:
            correct = False
        tallies.append((out.terminal, out.mtd_index, out.data.n, out.data.y, correct))
    return tallies


def _aggregate(tallies, K):
    selected = [0] * K
    all_toxic = not_found = correct = 0
    patients = [0] * K
    dlts = 0
    for terminal, mtd, n, y, ok in tallies:
        if terminal is Terminal.DECLARED_MTD:
            selected[mtd] += 1
        elif terminal is Terminal.ALL_TOXIC:
            all_toxic += 1
        else:
            not_found += 1
        for k in range(K):
            patients[k] += n[k]
        dlts += sum(y)
        correct += bool(ok)
    reps = len(tallies)
    total = sum(patients)
    counts = {
        "selected": tuple(selected),
        "all_toxic": all_toxic,
        "not_found": not_found,
        "patients": tuple(patients),
        "dlts": dlts,
        "correct": correct,
        "n_replicates": reps,
    }
    return OperatingCharacteristics(
        selection=np.array(selected) / reps,
        all_toxic=all_toxic / reps,
        not_found=not_found / reps,
        mean_patients=np.array(patients) / reps,
        mean_n=total / reps,
        dlt_rate=dlts / total if total else 0.0,
        correct=correct / reps,
        n_replicates=reps,
        counts=counts,
    )


def run_batch(source, design, model, prior, n_reps, master_seed=0, parallelism=1,
              n_nodes=DEFAULT_NODES):
    """Operating characteristics over ``n_reps`` simulated trials.

    Args:
        source: a fixed ``ScenarioSpec`` or a ``RandomScenarios`` recipe, from
            which a fresh scenario is drawn at the start of each replicate.
        parallelism: number of worker processes. Results do not depend on it:
            replicate ``i`` always uses the stream ``(master_seed, i)`` and the
            aggregation sums integer counts.

    Raises:
        TrialFailure: if any replicate fails; ``replicate`` names the index.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    K = model.n_doses
    if parallelism <= 1:
        tallies = _run_replicates(source, design, model, prior, master_seed, range(n_reps), n_nodes)
    else:
        n_chunks = min(n_reps, 4 * parallelism)
        chunks = [list(c) for c in np.array_split(np.arange(n_reps), n_chunks)]
        tallies = []
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [
                pool.submit(_run_replicates, source, design, model, prior, master_seed,
                            [int(i) for i in chunk], n_nodes)
                for chunk in chunks
            ]
            for fut in futures:
                tallies.extend(fut.result())
    return _aggregate(tallies, K)
