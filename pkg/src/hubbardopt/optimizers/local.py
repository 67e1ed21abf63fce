"""Hill climber and the Nelder-Mead wrapper."""

import numpy as np
import scipy.optimize

TWO_PI = 2.0 * np.pi


def hill_climber(costfn, x0, hparams, rng, gradient=None, context=None):
    """Sample n Gaussian neighbours per iteration, keep the best seen.

    The current value only improves: a move happens when some candidate
    beats the best value found so far.
    """
    sigma = hparams["sigma"]
    n = int(hparams["n"])
    x = np.array(x0, dtype=np.float64)
    v = context["initial_value"] if context and "initial_value" in context else costfn(x)
    while True:
        best = x
        for _ in range(n):
            z = x + rng.normal(0.0, sigma, x.size)
            w = costfn(z)
            if w < v:
                v = w
                best = z
        x = best


def nelder_mead(costfn, x0, hparams, rng, gradient=None, context=None):
    """scipy simplex search run to the call budget.

    adaptive switches on dimension-dependent coefficients; bounds clips
    vertices to [-2pi, 2pi]^nu. Tolerances are set so the method only
    terminates on its own for noiseless costs.
    """
    bounds = None
    if hparams.get("bounds", True):
        bounds = [(-TWO_PI, TWO_PI)] * len(x0)
    scipy.optimize.minimize(
        costfn,
        np.asarray(x0, dtype=np.float64),
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "adaptive": bool(hparams.get("adaptive", True)),
            "maxiter": 10**9,
            "maxfev": 10**9,
            "xatol": 1e-12,
            "fatol": 1e-12,
        },
    )
