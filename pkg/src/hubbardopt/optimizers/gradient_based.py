"""SPSA and the gradient-descent family (GD, Momentum, AdaDelta, Adam).

The gradient-based methods receive a gradient closure (finite difference,
simultaneous perturbation, or exact); every 20 iterations they spend one
extra call evaluating at the current parameters so the trace contains
on-trajectory values.
"""

import numpy as np

ON_TRAJECTORY_EVERY = 20

ADADELTA_EPS = 1e-6
ADAM_EPS = 1e-8


def spsa(costfn, x0, hparams, rng, gradient=None, context=None):
    """Decaying-gain stochastic approximation with a built-in SP gradient."""
    alpha, gamma = hparams["alpha"], hparams["gamma"]
    a, c, big_a = hparams["a"], hparams["c"], hparams["A"]
    x = np.array(x0, dtype=np.float64)
    k = 1
    while True:
        a_k = a / (k + big_a) ** alpha
        c_k = c / k ** gamma
        delta = rng.integers(0, 2, x.size) * 2 - 1
        g = (costfn(x + c_k * delta) - costfn(x - c_k * delta)) / (2.0 * c_k * delta)
        x = x - a_k * g
        if k % ON_TRAJECTORY_EVERY == 0:
            costfn(x)
        k += 1


def _descend(costfn, x0, step_fn):
    x = np.array(x0, dtype=np.float64)
    t = 1
    while True:
        x = step_fn(x, t)
        if t % ON_TRAJECTORY_EVERY == 0:
            costfn(x)
        t += 1


def gd(costfn, x0, hparams, rng, gradient=None, context=None):
    eta = hparams["eta"]

    def step(x, t):
        return x - eta * gradient(x)

    _descend(costfn, x0, step)


def momentum(costfn, x0, hparams, rng, gradient=None, context=None):
    eta, gamma = hparams["eta"], hparams["gamma"]
    nesterov = bool(hparams.get("nesterov", False))
    vel = np.zeros(len(x0))

    def step(x, t):
        nonlocal vel
        g = gradient(x - gamma * vel) if nesterov else gradient(x)
        vel = gamma * vel + eta * g
        return x - vel

    _descend(costfn, x0, step)


def adadelta(costfn, x0, hparams, rng, gradient=None, context=None):
    rho = hparams["gamma"]
    acc_g = np.zeros(len(x0))
    acc_dx = np.zeros(len(x0))

    def step(x, t):
        nonlocal acc_g, acc_dx
        g = gradient(x)
        acc_g = rho * acc_g + (1 - rho) * g * g
        dx = -np.sqrt(acc_dx + ADADELTA_EPS) / np.sqrt(acc_g + ADADELTA_EPS) * g
        acc_dx = rho * acc_dx + (1 - rho) * dx * dx
        return x + dx

    _descend(costfn, x0, step)


def adam(costfn, x0, hparams, rng, gradient=None, context=None):
    alpha = hparams["alpha"]
    b1, b2 = hparams["beta1"], hparams["beta2"]
    nadam = bool(hparams.get("nadam", False))
    m = np.zeros(len(x0))
    v = np.zeros(len(x0))

    def step(x, t):
        nonlocal m, v
        g = gradient(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        if nadam:
            # Nesterov lookahead on the first moment
            m_hat = b1 * m_hat + (1 - b1) * g / (1 - b1 ** t)
        return x - alpha * m_hat / (np.sqrt(v_hat) + ADAM_EPS)

    _descend(costfn, x0, step)
