"""True dose-toxicity scenarios: three fixed parametric curves and two random classes."""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .posterior import PAPER_DOSES

__all__ = [
    "Shape",
    "ScenarioSpec",
    "PaolettiParams",
    "RandomScenarios",
    "ScenarioGenerationError",
    "fixed_curve",
    "fixed_scenario",
    "gen_clertant",
    "gen_paoletti",
    "true_mtd",
]

CLERTANT_MAX_ATTEMPTS = 10**6


class ScenarioGenerationError(RuntimeError):
    pass


class Shape(enum.Enum):
    STEEP = "steep"
    S_SHAPED = "s-shaped"
    FLAT = "flat"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        return cls({"sshaped": "s-shaped", "s": "s-shaped"}.get(key, key))


# dose (mg) that is the true MTD of each fixed curve on the 10..800 mg grid
_FIXED_MTD_DOSE = {Shape.STEEP: 100.0, Shape.S_SHAPED: 200.0, Shape.FLAT: 400.0}


@dataclass(frozen=True)
class ScenarioSpec:
    """True DLT rate per dose; ``mtd_index`` None means below the lowest dose."""

    rates: tuple
    mtd_index: int = None
    label: str = ""

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("rates must lie in [0, 1]")
        if any(b < a for a, b in zip(rates, rates[1:])):
            raise ValueError("rates must be nondecreasing")
        if self.mtd_index is not None and not 0 <= self.mtd_index < len(rates):
            raise ValueError("mtd_index out of range")
        object.__setattr__(self, "rates", rates)

    def __len__(self):
        return len(self.rates)


@dataclass(frozen=True)
class PaolettiParams:
    sigma0: float = 0.1
    mu1: float = 0.2
    sigma1: float = 0.3
    mu2: float = 0.2
    sigma2: float = 0.4

    def __post_init__(self):
        if min(self.sigma0, self.sigma1, self.sigma2) <= 0:
            raise ValueError("Paoletti standard deviations must be positive")

    def as_tuple(self):
        return (self.sigma0, self.mu1, self.sigma1, self.mu2, self.sigma2)


def fixed_curve(shape, dose):
    """True DLT rate of a fixed curve at ``dose`` (mg)."""
    shape = Shape.parse(shape)
    dose = np.asarray(dose, dtype=float)
    if np.any(dose <= 0):
        raise ValueError("dose must be positive")
    if shape is Shape.STEEP:
        # increasing logistic in log dose through 0.286 at 100 mg
        p = 1.0 / (1.0 + np.exp(0.916 - 1.2 * np.log(dose / 100.0)))
    elif shape is Shape.S_SHAPED:
        p = 0.6 / (1.0 + np.exp(-0.02 * (dose - 225.0)))
    else:
        p = 1.0 / (1.0 + np.exp(-2.0 * np.log(dose / 700.0)))
    return float(p) if p.ndim == 0 else p


def fixed_scenario(shape, doses=PAPER_DOSES, phi=0.25):
    shape = Shape.parse(shape)
    rates = tuple(fixed_curve(shape, doses))
    mtd_dose = _FIXED_MTD_DOSE[shape]
    if mtd_dose in tuple(float(d) for d in doses):
        mtd = tuple(float(d) for d in doses).index(mtd_dose)
    else:
        mtd = true_mtd(rates, phi)
    return ScenarioSpec(rates, mtd, shape.value)


def _closest(rates, phi):
    # argmin returns the first minimiser, so ties go to the lower dose
    return int(np.argmin(np.abs(np.asarray(rates) - phi)))


def true_mtd(rates, phi, intervals=None):
    """Index of the dose whose rate is closest to ``phi``.

    Returns None when ``intervals`` is given and every rate exceeds its upper
    bound, i.e. the MTD lies below the lowest dose.
    """
    rates = np.asarray(rates, dtype=float)
    if intervals is not None and np.all(rates > intervals.b):
        return None
    return _closest(rates, phi)


def gen_clertant(J, phi, rng=None):
    """Pseudo-uniform random scenario with ``J`` doses.

    The MTD index is drawn uniformly, an upper bound ``B = phi + (1 - phi) * M``
    with ``M ~ Beta(max(J - j, 0.5), 1)`` (``j`` counted from 1), and sorted
    ``U(0, B)`` samples are redrawn until dose ``j`` is the unique closest to
    ``phi``.
    """
    if J < 2 or not 0 < phi < 1:
        raise ValueError("need J >= 2 and 0 < phi < 1")
    rng = np.random.default_rng(rng)
    j = int(rng.integers(J))
    m = rng.beta(max(J - (j + 1), 0.5), 1.0)
    upper = phi + (1.0 - phi) * m
    for _ in range(CLERTANT_MAX_ATTEMPTS):
        rates = np.sort(rng.uniform(0.0, upper, J))
        dist = np.abs(rates - phi)
        others = np.delete(dist, j)
        if dist[j] < others.min():
            return ScenarioSpec(tuple(rates), j, "clertant")
    raise ScenarioGenerationError(
        f"no scenario with MTD at dose {j} after {CLERTANT_MAX_ATTEMPTS} attempts"
    )


def _z(p):
    return ndtri(np.clip(p, 1e-12, 1.0 - 1e-12))


def gen_paoletti(J, phi, params=None, rng=None):
    """Random scenario built outward from a perturbed rate at a uniform MTD.

    The MTD rate is ``Phi(eps)`` with ``eps ~ N(z(phi), sigma0^2)``. Its
    neighbours are placed so that the MTD stays closest to ``phi``; doses
    further away move by squared normal increments on the probit scale,
    downward below the MTD and upward above it.
    """
    if J < 2 or not 0 < phi < 1:
        raise ValueError("need J >= 2 and 0 < phi < 1")
    params = params or PaolettiParams()
    rng = np.random.default_rng(rng)
    j = int(rng.integers(J))
    z_phi = float(ndtri(phi))
    zs = np.empty(J)
    zs[j] = rng.normal(z_phi, params.sigma0)
    p_j = float(ndtr(zs[j]))
    z_j = zs[j]
    if j > 0:
        eps = rng.normal(params.mu1, params.sigma1)
        start = float(_z(2 * phi - p_j)) if z_j > z_phi else z_j
        zs[j - 1] = start - eps**2
    if j < J - 1:
        eps = rng.normal(params.mu2, params.sigma2)
        start = float(_z(2 * phi - p_j)) if z_j < z_phi else z_j
        zs[j + 1] = start + eps**2
    for k in range(j - 2, -1, -1):
        zs[k] = zs[k + 1] - rng.normal(params.mu1, params.sigma1) ** 2
    for k in range(j + 2, J):
        zs[k] = zs[k - 1] + rng.normal(params.mu2, params.sigma2) ** 2
    rates = ndtr(zs)
    return ScenarioSpec(tuple(rates), j, "paoletti")


@dataclass(frozen=True)
class RandomScenarios:
    """Recipe for drawing one random scenario per trial replicate."""

    kind: str
    phi: float = 0.25
    paoletti: PaolettiParams = PaolettiParams()

    def __post_init__(self):
        if self.kind not in ("clertant", "paoletti"):
            raise ValueError(f"unknown scenario class {self.kind!r}")

    def draw(self, J, rng):
        if self.kind == "clertant":
            return gen_clertant(J, self.phi, rng)
        return gen_paoletti(J, self.phi, self.paoletti, rng)

