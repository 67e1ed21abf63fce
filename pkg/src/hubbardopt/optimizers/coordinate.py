"""Coordinate descent via exact trigonometric slice models.

Along one parameter the cost is a trigonometric polynomial of known
degree, so 2D+1 equally spaced samples over one period determine it
exactly (up to shot noise). Each coordinate moves to the global minimum
of its fitted slice model.
"""

import numpy as np

from ..ansatz import generator_spec, parameter_period

MODEL_SCAN_POINTS = 4096
NEWTON_STEPS = 4


class TrigSliceModel:
    """Degree-D trigonometric interpolation of samples on a period grid.

    Samples y_s are taken at phase offsets 2*pi*(s-D)/(2D+1), s = 0..2D,
    around the current point (scaled phase psi = 2*pi*offset/period).
    """

    def __init__(self, degree: int, samples: np.ndarray):
        n = 2 * degree + 1
        if samples.size != n:
            raise ValueError(f"need {n} samples for degree {degree}")
        self.degree = degree
        psi = 2.0 * np.pi * (np.arange(n) - degree) / n
        d = np.arange(degree + 1)
        # c_d = (1/n) sum_s y_s exp(-i d psi_s), d = 0..D
        self.coeffs = (samples @ np.exp(-1j * np.outer(psi, d))) / n

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=np.float64)
        d = np.arange(1, self.degree + 1)
        phases = np.exp(1j * np.multiply.outer(psi, d))
        return np.real(self.coeffs[0]) + 2.0 * np.real(phases @ self.coeffs[1:])

    def derivative(self, psi, order: int = 1):
        psi = np.asarray(psi, dtype=np.float64)
        d = np.arange(1, self.degree + 1)
        phases = np.exp(1j * np.multiply.outer(psi, d))
        return 2.0 * np.real(phases @ ((1j * d) ** order * self.coeffs[1:]))

    def global_min(self) -> float:
        """Minimizing phase in [-pi, pi): dense scan plus Newton polish."""
        grid = np.linspace(-np.pi, np.pi, MODEL_SCAN_POINTS, endpoint=False)
        vals = self(grid)
        psi = float(grid[np.argmin(vals)])
        best = float(vals.min())
        for _ in range(NEWTON_STEPS):
            d1 = float(self.derivative(psi, 1))
            d2 = float(self.derivative(psi, 2))
            if d2 <= 0:
                break
            step = d1 / d2
            cand = psi - step
            if abs(step) > 2.0 * np.pi / MODEL_SCAN_POINTS:
                break
            if float(self(cand)) <= best:
                psi, best = cand, float(self(cand))
        return psi


def slice_offsets(degree: int, period: float) -> np.ndarray:
    n = 2 * degree + 1
    return period * (np.arange(n) - degree) / n


def fit_slice(costfn, x: np.ndarray, index: int, degree: int, period: float) -> TrigSliceModel:
    """Sample one coordinate's slice on the interpolation grid and fit it."""
    samples = np.empty(2 * degree + 1)
    for s, off in enumerate(slice_offsets(degree, period)):
        p = x.copy()
        p[index] += off
        samples[s] = costfn(p)
    return TrigSliceModel(degree, samples)


def _slice_plan(context) -> list[tuple[int, float]]:
    if context and "slice_plan" in context:
        return context["slice_plan"]
    spec = context["spec"]
    plan = []
    for k in range(spec.nparams):
        _, _, degree = generator_spec(spec, k)
        plan.append((degree, parameter_period(spec, k)))
    return plan


def coordinate_descent(costfn, x0, hparams, rng, gradient=None, context=None):
    """Sweep the parameters, setting each to its slice-model minimum."""
    shuffle = bool(hparams.get("shuffle", False))
    plan = _slice_plan(context)
    x = np.array(x0, dtype=np.float64)
    order = np.arange(x.size)
    while True:
        if shuffle:
            rng.shuffle(order)
        for i in order:
            degree, period = plan[i]
            model = fit_slice(costfn, x, i, degree, period)
            x[i] += model.global_min() * period / (2.0 * np.pi)
