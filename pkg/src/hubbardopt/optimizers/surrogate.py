"""Bayesian model gradient descent: quadratic surrogate in a shrinking ball.

Each iteration evaluates a batch of points inside a trust ball, fits a
quadratic by Bayesian linear regression weighted by the reported standard
errors, and steps along the surrogate's gradient at the ball center.
Previously evaluated points still inside the ball re-enter the fit.
"""

import math

import numpy as np

STDERR_FLOOR = 1e-6


def _features(z: np.ndarray) -> np.ndarray:
    """[1, z_i, z_i z_j (i<=j)] monomials of one recentered point."""
    nu = z.size
    quad = np.outer(z, z)[np.triu_indices(nu)]
    return np.concatenate(([1.0], z, quad))


def _prior_scales(nu: int, l0: float) -> np.ndarray:
    """Prior stddev per monomial: l0^-degree."""
    n_quad = nu * (nu + 1) // 2
    return np.concatenate((
        [1.0],
        np.full(nu, 1.0 / l0),
        np.full(n_quad, 1.0 / l0 ** 2),
    ))


def fit_quadratic_gradient(points, values, stderrs, center, l0: float) -> np.ndarray:
    """Posterior-mean gradient of the quadratic surrogate at the center.

    Solved as an augmented least-squares system (likelihood rows weighted
    by 1/stderr, prior rows by the inverse prior scales), which stays
    well-posed with fewer points than features.
    """
    center = np.asarray(center, dtype=np.float64)
    nu = center.size
    phi = np.array([_features(np.asarray(p) - center) for p in points])
    w = 1.0 / np.maximum(np.asarray(stderrs, dtype=np.float64), STDERR_FLOOR)
    prior = _prior_scales(nu, l0)
    rows = np.vstack((phi * w[:, None], np.diag(1.0 / prior)))
    targets = np.concatenate((np.asarray(values) * w, np.zeros(prior.size)))
    beta, *_ = np.linalg.lstsq(rows, targets, rcond=None)
    return beta[1:nu + 1]


def sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float) -> np.ndarray:
    direction = rng.normal(size=center.size)
    direction /= np.linalg.norm(direction)
    r = radius * rng.random() ** (1.0 / center.size)
    return center + r * direction


def bayes_mgd(costfn, x0, hparams, rng, gradient=None, context=None):
    alpha, gamma, big_a = hparams["alpha"], hparams["gamma"], hparams["A"]
    delta, xi, eta, l0 = hparams["delta"], hparams["xi"], hparams["eta"], hparams["l0"]
    cost_se = context["cost_with_stderr"] if context and "cost_with_stderr" in context \
        else (lambda p: (costfn(p), 0.0))
    x = np.array(x0, dtype=np.float64)
    nu = x.size
    n_new = math.ceil(eta / 2.0 * (nu + 1) * (nu + 2))
    history: list[tuple[np.ndarray, float, float]] = []
    j = 1
    while True:
        delta_j = delta / j ** xi
        gamma_j = gamma / (j + big_a) ** alpha
        for _ in range(n_new):
            p = sample_ball(rng, x, delta_j)
            y, se = cost_se(p)
            history.append((p, y, se))
        inside = [(p, y, se) for (p, y, se) in history
                  if np.linalg.norm(p - x) <= delta_j]
        pts, ys, ses = zip(*inside)
        grad = fit_quadratic_gradient(pts, ys, ses, x, l0)
        x = x - gamma_j * grad
        j += 1
