"""Posterior computations for the two-parameter Bayesian logistic regression model.

The dose-toxicity model is ``logit(p) = log(alpha) + beta * log(d / d_ref)`` with a
bivariate normal prior on ``theta = (log alpha, log beta)``. Interval probabilities
are computed by deterministic quadrature centred at the posterior mode.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelSpec",
    "BivariatePrior",
    "TrialData",
    "ToxicityIntervals",
    "IntervalProbs",
    "PosteriorMode",
    "QuadratureGrid",
    "ConvergenceError",
    "dlt_prob",
    "log_posterior_unnormalized",
    "posterior_mode",
    "quadrature_grid",
    "interval_probs",
    "PAPER_DOSES",
]

PAPER_DOSES = (10.0, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0)

# Quadrature defaults: nodes per axis and half-width in standardised units.
DEFAULT_NODES = 64
DEFAULT_HALF_WIDTH = 10.0
# Grid is widened while the unnormalised density on its border exceeds this.
_EDGE_TOL = 1e-9
_MAX_WIDENINGS = 3
# Newton steps are capped to this sup-norm on the (log alpha, log beta) scale.
_MAX_STEP = 2.0


class ConvergenceError(RuntimeError):
    """Raised when the posterior mode search fails.

    Attributes:
        diagnostics: dict with the last iterate, gradient and iteration count.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ModelSpec:
    """Provisional dose grid and reference dose (both in mg)."""

    doses: tuple
    reference_dose: float

    def __post_init__(self):
        doses = tuple(float(d) for d in self.doses)
        object.__setattr__(self, "doses", doses)
        object.__setattr__(self, "reference_dose", float(self.reference_dose))
        if len(doses) < 2:
            raise ValueError("at least two provisional doses are required")
        if any(d <= 0 for d in doses):
            raise ValueError("doses must be positive")
        if any(b <= a for a, b in zip(doses, doses[1:])):
            raise ValueError("doses must be strictly increasing")
        if not self.reference_dose > 0:
            raise ValueError("reference dose must be positive")

    @classmethod
    def default(cls):
        """The 7-level grid 10..800 mg with reference dose 100 mg."""
        return cls(PAPER_DOSES, 100.0)

    @property
    def n_doses(self):
        return len(self.doses)

    @property
    def log_dose_ratio(self):
        return np.log(np.asarray(self.doses) / self.reference_dose)

    def dose_ratio(self, i):
        """Relative strength d[i+1] / d[i] of the next dose."""
        return self.doses[i + 1] / self.doses[i]


@dataclass(frozen=True)
class BivariatePrior:
    """Normal prior on (log alpha, log beta).

    ``mean`` is a 2-tuple, ``cov`` a 2x2 nested tuple. Both are stored as tuples
    so the prior is hashable.
    """

    mean: tuple = (-0.693, 0.0)
    cov: tuple = ((4.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        mean = tuple(float(m) for m in self.mean)
        cov = tuple(tuple(float(c) for c in row) for row in self.cov)
        if len(mean) != 2 or len(cov) != 2 or any(len(r) != 2 for r in cov):
            raise ValueError("prior mean must have length 2 and covariance be 2x2")
        c = np.array(cov)
        if not np.allclose(c, c.T, rtol=0, atol=1e-12):
            raise ValueError("prior covariance must be symmetric")
        if np.any(np.linalg.eigvalsh(c) <= 0):
            raise ValueError("prior covariance must be positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def mean_array(self):
        return np.array(self.mean)

    @property
    def cov_array(self):
        return np.array(self.cov)

    @property
    def precision(self):
        return np.linalg.inv(self.cov_array)

    def logpdf(self, theta):
        d = np.asarray(theta, dtype=float) - self.mean_array
        _, logdet = np.linalg.slogdet(self.cov_array)
        return float(-math.log(2 * math.pi) - 0.5 * logdet - 0.5 * d @ self.precision @ d)


@dataclass(frozen=True)
class TrialData:
    """Cumulative patients ``n`` and DLTs ``y`` per dose level."""

    n: tuple
    y: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        y = tuple(int(v) for v in self.y)
        if len(n) != len(y):
            raise ValueError("n and y must have the same length")
        for ni, yi in zip(n, y):
            if ni < 0 or yi < 0:
                raise ValueError("counts must be nonnegative")
            if yi > ni:
                raise ValueError(f"DLT count {yi} exceeds patient count {ni}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "y", y)

    @classmethod
    def empty(cls, k):
        return cls((0,) * k, (0,) * k)

    def __len__(self):
        return len(self.n)

    def add_cohort(self, index, size, dlts):
        """Return new data with a cohort of ``size`` patients at ``index``."""
        n = list(self.n)
        y = list(self.y)
        n[index] += size
        y[index] += dlts
        return TrialData(tuple(n), tuple(y))

    @property
    def total_n(self):
        return sum(self.n)

    @property
    def total_dlt(self):
        return sum(self.y)

    def check_model(self, model):
        if len(self) != model.n_doses:
            raise ValueError(
                f"data has {len(self)} dose levels but the model has {model.n_doses}"
            )


@dataclass(frozen=True)
class ToxicityIntervals:
    """Target toxicity level ``phi`` and target interval ``(a, b)``.

    Underdosing is ``[0, a]``, target ``(a, b)`` and overdosing ``[b, 1]``.
    """

    phi: float
    a: float
    b: float

    def __post_init__(self):
        if not 0 < self.a < self.phi < self.b < 1:
            raise ValueError(
                f"need 0 < a < phi < b < 1, got a={self.a}, phi={self.phi}, b={self.b}"
            )

    @property
    def under_width(self):
        return self.a

    @property
    def over_width(self):
        return 1.0 - self.b


@dataclass(frozen=True, eq=False)
class IntervalProbs:
    """Posterior probabilities of under/target/over-dosing per dose level."""

    under: np.ndarray
    target: np.ndarray
    over: np.ndarray

    def __post_init__(self):
        for name in ("under", "target", "over"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.under)

    def __eq__(self, other):
        if not isinstance(other, IntervalProbs):
            return NotImplemented
        return (
            np.array_equal(self.under, other.under)
            and np.array_equal(self.target, other.target)
            and np.array_equal(self.over, other.over)
        )

    def as_array(self):
        """(K, 3) array with columns under, target, over."""
        return np.column_stack([self.under, self.target, self.over])


@dataclass(frozen=True)
class PosteriorMode:
    theta: np.ndarray
    hessian: np.ndarray  # of the negative log posterior
    n_iter: int
    gradient: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class QuadratureGrid:
    """Flattened quadrature nodes; ``weight`` sums to one."""

    log_alpha: np.ndarray
    log_beta: np.ndarray
    weight: np.ndarray
    log_post: np.ndarray


def dlt_prob(theta, dose, reference_dose):
    """DLT probability at ``dose`` for ``theta = (log alpha, log beta)``.

    Works elementwise on array-valued doses.
    """
    dose = np.asarray(dose, dtype=float)
    if np.any(dose <= 0) or not reference_dose > 0:
        raise ValueError("dose and reference dose must be positive")
    log_alpha, log_beta = theta
    eta = log_alpha + math.exp(log_beta) * np.log(dose / reference_dose)
    p = 1.0 / (1.0 + np.exp(-eta))
    return float(p) if p.ndim == 0 else p


def _loglik(eta, n, y):
    # y*log(p) + (n-y)*log(1-p) = y*eta - n*log(1+e^eta); logaddexp keeps it finite
    return np.sum(y * eta - n * np.logaddexp(0.0, eta), axis=-1)


def log_posterior_unnormalized(theta, data, model, prior):
    """Log prior density plus binomial log likelihood at ``theta``."""
    data.check_model(model)
    n = np.asarray(data.n, dtype=float)
    y = np.asarray(data.y, dtype=float)
    eta = theta[0] + math.exp(theta[1]) * model.log_dose_ratio
    return prior.logpdf(theta) + float(_loglik(eta, n, y))


def _grad_hess(theta, n, y, x, prior_mean, prior_prec):
    """Log posterior (up to a constant), its gradient and Hessian."""
    u, v = theta
    if v > 700.0:
        return -math.inf, None, None
    beta = math.exp(v)
    bx = beta * x
    eta = u + bx
    p = _expit(eta)
    r = y - n * p
    w = n * p * (1.0 - p)
    d = theta - prior_mean
    pd = prior_prec @ d
    logp = float(_loglik(eta, n, y)) - 0.5 * float(d @ pd)
    grad = np.array([r.sum(), (r * bx).sum()]) - pd
    huv = -(w * bx).sum()
    hess = np.array(
        [[-w.sum(), huv], [huv, -(w * bx * bx).sum() + (r * bx).sum()]]
    ) - prior_prec
    return logp, grad, hess


def posterior_mode(data, model, prior, tol=1e-8, max_iter=100):
    """Find the posterior mode by damped Newton iteration from the prior mean.

    Returns:
        PosteriorMode with the mode, the Hessian of the negative log posterior
        there and the iteration count.

    Raises:
        ConvergenceError: if the sup-norm of the gradient does not drop below
            ``tol`` within ``max_iter`` iterations.
    """
    data.check_model(model)
    n = np.asarray(data.n, dtype=float)
    y = np.asarray(data.y, dtype=float)
    x = model.log_dose_ratio
    m = prior.mean_array
    prec = prior.precision

    theta = m.copy()
    logp, grad, hess = _grad_hess(theta, n, y, x, m, prec)
    for it in range(max_iter + 1):
        if np.max(np.abs(grad)) <= tol:
            neg_h = -hess
            if np.all(np.linalg.eigvalsh(neg_h) > 0):
                return PosteriorMode(theta, neg_h, it, grad)
        if it == max_iter:
            break
        neg_h = -hess
        shift = 0.0
        while True:
            try:
                np.linalg.cholesky(neg_h + shift * np.eye(2))
                break
            except np.linalg.LinAlgError:
                shift = max(2 * shift, 1e-6 * (1 + np.abs(neg_h).max()))
        step = np.linalg.solve(neg_h + shift * np.eye(2), grad)
        size = np.max(np.abs(step))
        if size > _MAX_STEP:
            step *= _MAX_STEP / size
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            c_logp, c_grad, c_hess = _grad_hess(cand, n, y, x, m, prec)
            if not np.isfinite(c_logp):
                t *= 0.5
                continue
            # near the mode the ascent is below rounding; tolerate that much
            if c_logp >= logp - 1e-12 * (1.0 + abs(logp)):
                break
            t *= 0.5
        else:
            # no ascent within rounding; accept only if already stationary
            break
        theta, logp, grad, hess = cand, c_logp, c_grad, c_hess
    raise ConvergenceError(
        "posterior mode search did not converge",
        {"theta": theta.tolist(), "gradient": grad.tolist(), "iterations": it,
         "n": data.n, "y": data.y},
    )


def _nodes(n_nodes):
    if isinstance(n_nodes, int):
        return n_nodes, n_nodes
    n_outer, n_inner = n_nodes
    return int(n_outer), int(n_inner)


def _build_grid(mode, data, model, prior, n_nodes, half_width):
    """Sheared, mode-centred tensor grid.

    The outer axis follows log beta; the inner axis follows log alpha given
    log beta (lower Cholesky factor in the order (log beta, log alpha)). Each
    inner line therefore runs along log alpha alone, which is what lets the
    interval events be cut exactly.
    """
    n_outer, n_inner = _nodes(n_nodes)
    cov = np.linalg.inv(mode.hessian)
    s_v = math.sqrt(cov[1, 1])
    slope = cov[0, 1] / cov[1, 1]
    s_u = math.sqrt(cov[0, 0] - cov[0, 1] ** 2 / cov[1, 1])
    u0, v0 = mode.theta

    # doses without patients contribute nothing to the likelihood
    occupied = np.flatnonzero(data.n)
    n = np.asarray(data.n, dtype=float)[occupied]
    y = np.asarray(data.y, dtype=float)[occupied]
    x = model.log_dose_ratio[occupied]
    m = prior.mean_array
    prec = prior.precision

    width = half_width
    for _ in range(_MAX_WIDENINGS + 1):
        z1 = np.linspace(-width, width, n_outer)
        z2 = np.linspace(-width, width, n_inner)
        v = v0 + s_v * z1
        centre = u0 + slope * s_v * z1
        u = centre[:, None] + s_u * z2[None, :]
        beta = np.exp(v)
        eta = u[:, :, None] + beta[:, None, None] * x
        d0 = u - m[0]
        d1 = (v - m[1])[:, None]
        logp = _loglik(eta, n, y) - 0.5 * (
            prec[0, 0] * d0 * d0 + 2 * prec[0, 1] * d0 * d1 + prec[1, 1] * d1 * d1
        )
        g = np.exp(logp - logp.max())
        # derivative of g along the inner axis, d/dz2 = s_u * d/d(log alpha)
        dlogp = (y - n * _expit(eta)).sum(axis=-1) - (prec[0, 0] * d0 + prec[0, 1] * d1)
        dg = g * dlogp * s_u
        edge = max(g[0].max(), g[-1].max(), g[:, 0].max(), g[:, -1].max())
        if edge <= _EDGE_TOL:
            break
        width *= 1.5
        n_outer = int(math.ceil(n_outer * 1.5))
        n_inner = int(math.ceil(n_inner * 1.5))
    return {
        "z1": z1, "z2": z2, "v": v, "u": u, "centre": centre, "s_u": s_u,
        "logp": logp, "g": g, "dg": dg,
    }


def _expit(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def quadrature_grid(data, model, prior, n_nodes=DEFAULT_NODES, half_width=DEFAULT_HALF_WIDTH):
    """Quadrature nodes and normalised weights for the joint posterior."""
    mode = posterior_mode(data, model, prior)
    grid = _build_grid(mode, data, model, prior, n_nodes, half_width)
    g = grid["g"]
    w = _trapezoid_weights(len(grid["z1"]))[:, None] * _trapezoid_weights(len(grid["z2"]))[None, :] * g
    w = w / w.sum()
    vv = np.broadcast_to(grid["v"][:, None], g.shape)
    return QuadratureGrid(
        log_alpha=grid["u"].ravel().copy(),
        log_beta=vv.ravel().copy(),
        weight=w.ravel(),
        log_post=(grid["logp"]).ravel().copy(),
    )


def _trapezoid_weights(k):
    w = np.ones(k)
    w[0] = w[-1] = 0.5
    return w


def _logit(p):
    return math.log(p / (1.0 - p))


def interval_probs(data, model, prior, intervals, n_nodes=DEFAULT_NODES,
                   half_width=DEFAULT_HALF_WIDTH):
    """Posterior probability that each dose's DLT rate is under/on/over target.

    Integration runs over a mode-centred grid scaled by the Laplace covariance.
    Along each inner line (fixed log beta) the posterior density is replaced by
    its cubic Hermite interpolant and the interval events, which are half-lines
    in log alpha, are cut at their exact location. The outer axis uses the
    trapezoid rule, which is spectrally accurate for the smooth line integrals.
    """
    data.check_model(model)
    mode = posterior_mode(data, model, prior)
    grid = _build_grid(mode, data, model, prior, n_nodes, half_width)
    z2 = grid["z2"]
    g = grid["g"]
    dg = grid["dg"]
    h = z2[1] - z2[0]
    n_inner = len(z2)

    # cumulative line integrals of the cubic Hermite interpolant at the nodes
    cells = 0.5 * h * (g[:, 1:] + g[:, :-1]) + h * h / 12.0 * (dg[:, :-1] - dg[:, 1:])
    cum = np.concatenate([np.zeros((g.shape[0], 1)), np.cumsum(cells, axis=1)], axis=1)
    line_total = cum[:, -1]
    outer_w = _trapezoid_weights(g.shape[0])
    total = float(outer_w @ line_total)

    x = model.log_dose_ratio
    beta = np.exp(grid["v"])
    cuts = np.array([_logit(intervals.a), _logit(intervals.b)])
    # tau[k, i, c]: inner coordinate where dose i crosses cut c on line k
    tau = (
        cuts[None, None, :] - beta[:, None, None] * x[None, :, None] - grid["centre"][:, None, None]
    ) / grid["s_u"]
    pos = np.clip((tau - z2[0]) / h, 0.0, n_inner - 1.0)
    j = np.minimum(np.floor(pos).astype(int), n_inner - 2)
    t = pos - j
    rows = np.arange(g.shape[0])[:, None, None]
    g0 = g[rows, j]
    g1 = g[rows, j + 1]
    d0 = h * dg[rows, j]
    d1 = h * dg[rows, j + 1]
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    # exact integral over [0, t] of the Hermite basis on the unit cell
    partial = (
        g0 * (0.5 * t4 - t3 + t)
        + d0 * (0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2)
        + g1 * (t3 - 0.5 * t4)
        + d1 * (0.25 * t4 - t3 / 3.0)
    )
    below = cum[rows, j] + h * partial
    mass = np.tensordot(outer_w, below, axes=(0, 0)) / total

    under = mass[:, 0]
    over = 1.0 - mass[:, 1]
    target = mass[:, 1] - mass[:, 0]
    return IntervalProbs(under=under, target=target, over=over)
