"""Reference computations that share no code with the quadrature engine."""

import math

import numpy as np
from scipy import integrate
from scipy.special import expit, logit

DOSES = np.array([10.0, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0])
PRIOR_MEAN = np.array([-0.693, 0.0])
PRIOR_SD = np.array([2.0, 1.0])

# Interval probabilities (under, target, over) at TTI (0.16, 0.33) from nested
# adaptive scipy quadrature of the unnormalised posterior (nested_quad_probs).
NESTED_QUAD = {
    "table1": (
        (3, 3, 3, 3, 0, 0, 0), (0, 0, 0, 0, 0, 0, 0),
        [[0.99659066, 0.00334762, 0.00006172],
         [0.98963284, 0.01010548, 0.00026168],
         [0.96422365, 0.03404467, 0.00173168],
         [0.79815952, 0.15821611, 0.04362437],
         [0.49705806, 0.20215941, 0.30078253],
         [0.34062601, 0.17384876, 0.48552523],
         [0.24904750, 0.14496293, 0.60598957]],
    ),
    "no_data": (
        (0,) * 7, (0,) * 7,
        [[0.73649656, 0.10563007, 0.15787337],
         [0.63234603, 0.13698897, 0.23066500],
         [0.50631544, 0.16679644, 0.32688812],
         [0.31468490, 0.18228614, 0.50302895],
         [0.18295853, 0.13889788, 0.67814359],
         [0.12228683, 0.10443982, 0.77327335],
         [0.08795134, 0.08094343, 0.83110523]],
    ),
    "mid_trial": (
        (3, 3, 3, 12, 15, 9, 0), (0, 0, 0, 1, 4, 5, 0),
        [[0.99693948, 0.00305130, 0.00000921],
         [0.99001112, 0.00995521, 0.00003367],
         [0.96333155, 0.03651799, 0.00015046],
         [0.76914751, 0.22869809, 0.00215441],
         [0.06062086, 0.73789954, 0.20147959],
         [0.00112372, 0.09261709, 0.90625919],
         [0.00022831, 0.01841963, 0.98135206]],
    ),
    "first_cohort_toxic": (
        (3, 0, 0, 0, 0, 0, 0), (3, 0, 0, 0, 0, 0, 0),
        [[0.00434066, 0.03350460, 0.96215474],
         [0.00105682, 0.01208674, 0.98685644],
         [0.00049498, 0.00642450, 0.99308051],
         [0.00027376, 0.00382097, 0.99590527],
         [0.00016808, 0.00246214, 0.99736978],
         [0.00011075, 0.00168083, 0.99820842],
         [0.00007680, 0.00119814, 0.99872506]],
    ),
}


def _log_post(u, v, n, y, x):
    eta = u + math.exp(v) * x
    ll = float(np.sum(y * eta - n * np.logaddexp(0.0, eta)))
    z = (np.array([u, v]) - PRIOR_MEAN) / PRIOR_SD
    return ll - 0.5 * float(z @ z)


def nested_quad_probs(n, y, dose_index, a=0.16, b=0.33, doses=DOSES, ref=100.0):
    """(under, target, over) at one dose by nested adaptive quadrature.

    The inner integral over log alpha is cut exactly at the interval edges.
    Slow (seconds per dose) but accurate to ~1e-9.
    """
    n, y = np.asarray(n, float), np.asarray(y, float)
    x = np.log(np.asarray(doses) / ref)
    # crude centring so the exponentials stay in range
    grid = [(_log_post(u, v, n, y, x), u, v)
            for u in np.linspace(-8, 8, 81) for v in np.linspace(-4, 4, 41)]
    lp0 = max(grid)[0]
    f = lambda u, v: math.exp(_log_post(u, v, n, y, x) - lp0)

    def inner(v, hi):
        return integrate.quad(lambda u: f(u, v), -40, hi, epsabs=1e-14, epsrel=1e-11, limit=200)[0]

    def outer(cut_fn):
        return integrate.quad(lambda v: inner(v, cut_fn(v)), -10, 8,
                              epsabs=1e-13, epsrel=1e-11, limit=200)[0]

    xi = x[dose_index]
    z = outer(lambda v: 30.0)
    lo = outer(lambda v: logit(a) - math.exp(v) * xi) / z
    hi = outer(lambda v: logit(b) - math.exp(v) * xi) / z
    return lo, hi - lo, 1.0 - hi


def prior_importance_probs(n, y, a, b, n_draws=10**6, seed=0, doses=DOSES, ref=100.0):
    """Interval probabilities by self-normalised importance sampling from the prior."""
    rng = np.random.default_rng(seed)
    theta = PRIOR_MEAN + PRIOR_SD * rng.standard_normal((n_draws, 2))
    x = np.log(np.asarray(doses) / ref)
    eta = theta[:, :1] + np.exp(theta[:, 1:]) * x
    n, y = np.asarray(n, float), np.asarray(y, float)
    logw = (eta * y - n * np.logaddexp(0.0, eta)).sum(axis=1)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    p = expit(eta)
    under = w @ (p <= a)
    over = w @ (p >= b)
    ess = 1.0 / np.sum(w**2)
    return np.column_stack([under, 1.0 - under - over, over]), ess


def dense_grid_mode(n, y, centre, half=(3.0, 3.0), k=1201, doses=DOSES, ref=100.0):
    """Argmax of the log posterior on a dense rectangular grid around ``centre``."""
    n, y = np.asarray(n, float), np.asarray(y, float)
    x = np.log(np.asarray(doses) / ref)
    u = np.linspace(centre[0] - half[0], centre[0] + half[0], k)
    v = np.linspace(centre[1] - half[1], centre[1] + half[1], k)
    U, V = np.meshgrid(u, v, indexing="ij")
    eta = U[..., None] + np.exp(V)[..., None] * x
    ll = (y * eta - n * np.logaddexp(0.0, eta)).sum(axis=-1)
    lp = ll - 0.5 * (((U - PRIOR_MEAN[0]) / PRIOR_SD[0]) ** 2 + ((V - PRIOR_MEAN[1]) / PRIOR_SD[1]) ** 2)
    i, j = np.unravel_index(np.argmax(lp), lp.shape)
    return np.array([u[i], v[j]]), u[1] - u[0]
