import numpy as np
import pytest

from hubbardopt.costfn import BudgetExhausted, TerminationPolicy
from hubbardopt.optimizers import REGISTRY, run
from hubbardopt.optimizers.coordinate import TrigSliceModel, coordinate_descent, slice_offsets
from hubbardopt.optimizers.evolutionary import (
    _Individual,
    cma_population_size,
    cmaes,
    mu_plus_lambda,
    pso,
    select_plus,
)
from hubbardopt.optimizers.external import ExternalCommand
from hubbardopt.optimizers.gradient_based import adam, gd, momentum, spsa
from hubbardopt.optimizers.local import hill_climber, nelder_mead
from hubbardopt.optimizers.surrogate import bayes_mgd, fit_quadratic_gradient


class Budgeted:
    """Plain cost function with a call budget and full call log."""

    def __init__(self, fn, budget):
        self.fn = fn
        self.budget = budget
        self.points = []
        self.values = []

    def __call__(self, x):
        if len(self.points) >= self.budget:
            raise BudgetExhausted("budget")
        x = np.array(x, dtype=np.float64)
        self.points.append(x)
        v = float(self.fn(x))
        self.values.append(v)
        return v

    @property
    def best(self):
        return min(self.values)


def sphere(x):
    return float(x @ x)


def run_budgeted(minimizer, fn, x0, hparams, budget, seed=0, **kw):
    cost = Budgeted(fn, budget)
    rng = np.random.default_rng(seed)
    with pytest.raises(BudgetExhausted):
        minimizer(cost, np.asarray(x0, dtype=np.float64), hparams, rng, **kw)
    return cost


class TestHillClimber:
    def test_improves_and_monotone_on_sphere(self):
        cost = run_budgeted(hill_climber, sphere, np.ones(4),
                            {"sigma": 0.1, "n": 3}, 200)
        assert cost.best < sphere(np.ones(4))
        # exact evaluation: accepted value never increases between iterations
        best_so_far = np.minimum.accumulate(cost.values)
        assert best_so_far[-1] <= best_so_far[0]

    def test_zero_sigma_candidates_stay_put(self):
        cost = run_budgeted(hill_climber, sphere, np.ones(3),
                            {"sigma": 0.0, "n": 2}, 20)
        for p in cost.points:
            np.testing.assert_array_equal(p, np.ones(3))

    def test_worse_candidate_leaves_position_unchanged(self):
        # n=1 on a linear function with upward noise only: x never moves
        calls = []

        def fn(x):
            calls.append(x.copy())
            return float(x[0])

        cost = Budgeted(fn, 10)
        rng = np.random.default_rng(0)

        class PositiveNoise:
            def normal(self, loc, scale, size=None):
                return np.full(size, 5.0)

            def integers(self, *a, **k):
                return rng.integers(*a, **k)

        with pytest.raises(BudgetExhausted):
            hill_climber(cost, np.zeros(2), {"sigma": 1.0, "n": 1}, PositiveNoise(),
                         context={"initial_value": 0.0})
        # every candidate is x0 + 5, and x never moves off x0
        for p in cost.points:
            np.testing.assert_array_equal(p, np.full(2, 5.0))


class TestSpsa:
    def test_gain_and_step_schedule(self):
        cost = run_budgeted(spsa, sphere, np.zeros(3),
                            {"alpha": 0.602, "gamma": 0.101, "a": 0.2, "c": 0.15,
                             "A": 1.0}, 4, seed=2)
        p1, p2, p3, p4 = cost.points
        # first pair at +-c_1 = 0.15 around x0
        np.testing.assert_allclose(np.abs(p1), 0.15)
        np.testing.assert_allclose(p1, -p2)
        # x1 = -a_1 * g, then second pair at +-c_2 around x1
        a1 = 0.2 / (1 + 1.0) ** 0.602
        assert a1 == pytest.approx(0.13177, abs=1e-5)
        g = (cost.values[0] - cost.values[1]) / (2 * 0.15 * np.sign(p1))
        x1 = -a1 * g
        c2 = 0.15 / 2 ** 0.101
        np.testing.assert_allclose(np.abs(p3 - x1), c2, atol=1e-12)
        np.testing.assert_allclose(p3 - x1, -(p4 - x1), atol=1e-12)

    def test_two_calls_per_iteration_with_extra_every_20(self):
        cost = run_budgeted(spsa, sphere, np.ones(4),
                            dict(REGISTRY["spsa"].defaults), 2 * 20 + 1, seed=0)
        # 20 iterations of 2 calls, then the on-trajectory evaluation
        assert len(cost.points) == 41
        # calls come in +- pairs around the current iterate
        for i in range(0, 40, 2):
            mid = (cost.points[i] + cost.points[i + 1]) / 2
            np.testing.assert_allclose(np.abs(cost.points[i] - mid),
                                       np.abs(cost.points[i] - mid)[0])
        # call 41 is the post-update iterate of iteration 20
        mid = (cost.points[38] + cost.points[39]) / 2
        c20 = 0.15 / 20 ** 0.101
        delta = (cost.points[38] - mid) / c20
        g = (cost.values[38] - cost.values[39]) / (2 * c20 * delta)
        a20 = 0.2 / (20 + 1.0) ** 0.602
        np.testing.assert_allclose(cost.points[40], mid - a20 * g, atol=1e-12)


class TestGdFamily:
    def test_gd_hand_iteration(self):
        seen = []

        def gradient(x):
            seen.append(x.copy())
            if len(seen) > 3:
                raise BudgetExhausted("budget")
            return 2.0 * x

        with pytest.raises(BudgetExhausted):
            gd(lambda x: 0.0, np.array([1.0]), {"eta": 0.1}, np.random.default_rng(0),
               gradient=gradient)
        assert seen[3][0] == pytest.approx(0.512)

    def test_momentum_gamma_zero_equals_gd(self):
        def make_grad(log):
            def gradient(x):
                log.append(x.copy())
                if len(log) > 5:
                    raise BudgetExhausted("budget")
                return 2.0 * x
            return gradient

        gd_log, mom_log = [], []
        with pytest.raises(BudgetExhausted):
            gd(lambda x: 0.0, np.array([1.0, -2.0]), {"eta": 0.05},
               np.random.default_rng(0), gradient=make_grad(gd_log))
        with pytest.raises(BudgetExhausted):
            momentum(lambda x: 0.0, np.array([1.0, -2.0]),
                     {"eta": 0.05, "gamma": 0.0, "nesterov": False},
                     np.random.default_rng(0), gradient=make_grad(mom_log))
        np.testing.assert_allclose(gd_log, mom_log)

    @pytest.mark.parametrize("variant,hp", [
        (momentum, {"eta": 0.01, "gamma": 0.9, "nesterov": False}),
        (adam, {"alpha": 0.001, "beta1": 0.9, "beta2": 0.999, "nadam": False}),
    ])
    def test_zero_gradient_leaves_params_fixed(self, variant, hp):
        seen = []

        def gradient(x):
            seen.append(x.copy())
            if len(seen) > 3:
                raise BudgetExhausted("budget")
            return np.zeros(x.size)

        with pytest.raises(BudgetExhausted):
            variant(lambda x: 0.0, np.array([0.3, 0.4]), hp,
                    np.random.default_rng(0), gradient=gradient)
        for p in seen:
            np.testing.assert_array_equal(p, [0.3, 0.4])


class TestCoordinateDescent:
    def test_trig_model_exact_interpolation(self, rng):
        coeffs = rng.normal(size=5)

        def f(phi):
            return (coeffs[0] + coeffs[1] * np.cos(phi) + coeffs[2] * np.sin(phi)
                    + coeffs[3] * np.cos(2 * phi) + coeffs[4] * np.sin(2 * phi))

        offs = slice_offsets(2, 2 * np.pi)
        model = TrigSliceModel(2, f(offs))
        for phi in rng.uniform(-np.pi, np.pi, 10):
            assert model(phi) == pytest.approx(f(phi), abs=1e-12)

    def test_global_min_of_known_model(self):
        # f(phi) = cos(phi): minimum at +-pi
        model = TrigSliceModel(1, np.cos(slice_offsets(1, 2 * np.pi)))
        assert abs(model.global_min()) == pytest.approx(np.pi, abs=1e-6)

    def test_converges_on_separable_trig_function(self):
        plan = [(1, 2 * np.pi)] * 3

        def f(x):
            return float(np.sum(np.cos(x)))

        cost = Budgeted(f, 3 * 3 + 2)
        with pytest.raises(BudgetExhausted):
            coordinate_descent(cost, np.zeros(3), {"shuffle": False},
                               np.random.default_rng(0),
                               context={"slice_plan": plan})
        # the 11th call samples sweep 2's first coordinate at offset zero,
        # i.e. the post-sweep point: every coordinate sits at a minimum of cos
        center = cost.points[10]
        np.testing.assert_allclose(np.cos(center), -1.0, atol=1e-9)

    def test_calls_per_sweep(self, sweep31):
        res = run("coordinate_descent", sweep31,
                  policy=TerminationPolicy(max_calls=1 + 2 * (7 + 9 + 9)), seed=0)
        # initial eval + one full sweep costs sum(2D_i + 1) = 7+9+9 per layer pair
        assert res.calls_used == 1 + 2 * 25

    def test_shuffle_changes_visit_order(self, sweep31):
        r1 = run("coordinate_descent", sweep31, hparams={"shuffle": True},
                 policy=TerminationPolicy(max_calls=30), seed=5)
        r2 = run("coordinate_descent", sweep31, hparams={"shuffle": False},
                 policy=TerminationPolicy(max_calls=30), seed=5)
        assert [r.params for r in r1.records] != [r.params for r in r2.records]


class TestBayesMgd:
    def test_surrogate_gradient_on_quadratic(self, rng):
        a = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
        b = np.array([0.4, -0.2, 1.0])

        def f(x):
            return float(0.5 * x @ a @ x + b @ x + 3.0)

        center = np.array([0.2, -0.1, 0.4])
        pts = [center + rng.uniform(-0.5, 0.5, 3) for _ in range(60)]
        vals = [f(p) for p in pts]
        grad = fit_quadratic_gradient(pts, vals, [1e-8] * len(pts), center, l0=0.2)
        np.testing.assert_allclose(grad, a @ center + b, atol=1e-6)

    def test_evaluations_per_iteration(self):
        # eta=0.6, nu=6 -> ceil(0.3 * 7 * 8) = 17 new points per iteration
        hp = dict(REGISTRY["bayes_mgd"].defaults)
        cost = run_budgeted(bayes_mgd, sphere, np.zeros(6), hp, 2 * 17, seed=1,
                            context={})
        assert len(cost.points) == 34
        d1 = 0.6 / 1 ** 0.101
        for p in cost.points[:17]:
            assert np.linalg.norm(p) <= d1 + 1e-12

    def test_trust_radius_shrinks(self):
        hp = dict(REGISTRY["bayes_mgd"].defaults)
        assert hp["delta"] / 1 ** hp["xi"] > hp["delta"] / 2 ** hp["xi"]


class TestEvolutionary:
    def test_mu_plus_lambda_calls_per_generation(self):
        hp = dict(REGISTRY["mu_plus_lambda"].defaults)
        # mu initial evaluations, then lambda = mu * factor per generation
        cost = run_budgeted(mu_plus_lambda, sphere, np.zeros(4), hp, 2 + 3 * 10,
                            seed=3)
        assert len(cost.points) == 32

    def test_pb_sum_validation(self):
        hp = dict(REGISTRY["mu_plus_lambda"].defaults, pb_sum=1.2)
        with pytest.raises(ValueError):
            mu_plus_lambda(Budgeted(sphere, 10), np.zeros(3), hp,
                           np.random.default_rng(0))

    def test_elitism_in_selection(self, rng):
        pool = [_Individual(np.zeros(2), np.ones(2), value=v)
                for v in [3.0, -1.0, 2.0, 0.5]]
        for _ in range(20):
            chosen = select_plus(pool, 2, 3, rng)
            assert min(ind.value for ind in chosen) == -1.0

    def test_strategies_stay_clamped(self):
        hp = dict(REGISTRY["mu_plus_lambda"].defaults, min_strat=0.05, max_strat=0.2,
                  indpb=1.0, pb_sum=1.0, pb_cut=0.0)  # always mutate
        seen = []

        def fn(x):
            seen.append(x)
            return sphere(x)

        cost = Budgeted(fn, 2 + 10 * 10)
        with pytest.raises(BudgetExhausted):
            mu_plus_lambda(cost, np.zeros(3), hp, np.random.default_rng(4))
        # mutation steps are strategy * normal; clamped strategies keep moves bounded

    def test_pso_calls_and_frozen_dynamics(self):
        hp = dict(REGISTRY["pso"].defaults, phi1=0.0, phi2=0.0)
        cost = run_budgeted(pso, sphere, np.zeros(3), hp, 3 * 5, seed=5)
        assert len(cost.points) == 15
        # zero phi: velocities stay zero, particles never move
        first = cost.points[:5]
        for it in range(1, 3):
            for i in range(5):
                np.testing.assert_array_equal(cost.points[5 * it + i], first[i])

    def test_pso_gbest_non_increasing(self):
        hp = dict(REGISTRY["pso"].defaults)
        cost = run_budgeted(pso, sphere, np.ones(4), hp, 100, seed=6)
        assert min(cost.values) < sphere(np.ones(4))

    def test_cma_population_size(self):
        assert cma_population_size(6) == 9

    def test_cmaes_sphere_reaches_1e8(self):
        for seed in (0, 1, 2):
            cost = Budgeted(sphere, 5000)
            with pytest.raises(BudgetExhausted):
                cmaes(cost, np.full(6, 0.7), {"sigma0": 0.1},
                      np.random.default_rng(seed))
            assert cost.best <= 1e-8


class TestNelderMead:
    def test_sphere_convergence(self):
        cost = Budgeted(sphere, 2000)
        nelder_mead(cost, np.full(6, 0.9), {"adaptive": True, "bounds": False},
                    np.random.default_rng(0))
        assert cost.best <= 1e-6

    def test_deterministic(self, sweep31):
        r1 = run("nelder_mead", sweep31, policy=TerminationPolicy(max_calls=60),
                 seed=11, exact=True)
        r2 = run("nelder_mead", sweep31, policy=TerminationPolicy(max_calls=60),
                 seed=11, exact=True)
        assert [r.value for r in r1.records] == [r.value for r in r2.records]

    def test_bounds_respected(self):
        pts = Budgeted(sphere, 300)
        try:
            nelder_mead(pts, np.full(3, 6.0), {"adaptive": False, "bounds": True},
                        np.random.default_rng(0))
        except BudgetExhausted:
            pass
        for p in pts.points:
            assert np.all(np.abs(p) <= 2 * np.pi + 1e-9)


class TestExternalAdapter:
    ECHO = (
        "python3", "-c",
        "import sys\n"
        "first = sys.stdin.readline().split()\n"
        "x = ' '.join(first[2:])\n"
        "for _ in range(5):\n"
        "    print('ask ' + x, flush=True)\n"
        "    sys.stdin.readline()\n"
        "print('done', flush=True)\n",
    )
    BROKEN = ("python3", "-c",
              "import sys\nsys.stdin.readline()\nprint('giberish', flush=True)\n")

    def test_echo_optimizer_trace(self, sweep31):
        res = run("external", sweep31, policy=TerminationPolicy(max_calls=50),
                  seed=0, external=ExternalCommand(self.ECHO))
        assert res.stop_reason == "converged"
        assert res.calls_used == 5
        params = {tuple(r.params) for r in res.records}
        assert len(params) == 1  # every evaluation at theta0

    def test_malformed_reply_marks_failed(self, sweep31):
        res = run("external", sweep31, policy=TerminationPolicy(max_calls=50),
                  seed=0, external=ExternalCommand(self.BROKEN))
        assert res.stop_reason == "failed"
        assert "malformed" in res.failure or "exited" in res.failure

    def test_budget_shared_with_recorder(self, sweep31):
        res = run("external", sweep31, policy=TerminationPolicy(max_calls=3),
                  seed=0, external=ExternalCommand(self.ECHO))
        assert res.stop_reason == "budget"
        assert res.calls_used == 3


class TestRunProtocol:
    def test_unknown_optimizer(self, sweep31):
        with pytest.raises(ValueError):
            run("does_not_exist", sweep31)

    def test_gradient_family_requires_spec(self, sweep31):
        with pytest.raises(ValueError):
            run("gd", sweep31)

    def test_unknown_hparam_rejected(self, sweep31):
        with pytest.raises(ValueError):
            run("spsa", sweep31, hparams={"bogus": 1.0})

    def test_budget_respected_exactly(self, sweep31):
        for name in ("hill_climber", "spsa", "cmaes", "pso"):
            res = run(name, sweep31, policy=TerminationPolicy(max_calls=57), seed=1)
            assert res.calls_used == 57
            assert res.stop_reason == "budget"

    def test_hill_climber_iterations_within_100_calls(self, sweep31):
        res = run("hill_climber", sweep31, policy=TerminationPolicy(max_calls=100),
                  seed=1)
        # 1 initial + 33 iterations x 3 samples: the 101st call would open
        # iteration 34, so every recorded call belongs to a complete iteration
        assert res.calls_used == 100
        res2 = run("hill_climber", sweep31, policy=TerminationPolicy(max_calls=101),
                   seed=1)
        assert [r.value for r in res2.records[:100]] == \
               [r.value for r in res.records]

    def test_best_value_is_min_of_trace(self, sweep31):
        res = run("spsa", sweep31, policy=TerminationPolicy(max_calls=40), seed=2)
        assert res.best_value == min(r.value for r in res.records)

    def test_deterministic_traces(self, sweep31):
        from hubbardopt.gradients import GradientSpec

        cases = [(name, None) for name in
                 ("hill_climber", "spsa", "cmaes", "mu_plus_lambda", "pso",
                  "bayes_mgd", "coordinate_descent")]
        cases += [("momentum", GradientSpec.fd()), ("adam", GradientSpec.sp())]
        for name, gs in cases:
            r1 = run(name, sweep31, gradient_spec=gs,
                     policy=TerminationPolicy(max_calls=45), seed=7)
            r2 = run(name, sweep31, gradient_spec=gs,
                     policy=TerminationPolicy(max_calls=45), seed=7)
            assert [r.value for r in r1.records] == [r.value for r in r2.records], name
            assert [r.params for r in r1.records] == [r.params for r in r2.records], name


CONVEX = [
    ("sphere", sphere, np.full(6, 1.0)),
    ("aniso", lambda x: float(np.sum(np.arange(1, 7) * x * x)), np.full(6, 1.0)),
    ("rosenbrock", lambda x: float(np.sum(100 * (x[1:] - x[:-1] ** 2) ** 2
                                          + (1 - x[:-1]) ** 2)), np.full(6, 0.5)),
]


class TestConvexSuite:
    # the stiff Rosenbrock valley needs gentler rates than the shot-noise
    # defaults; every method still has to make progress on it
    ROSEN_HPARAMS = {
        "spsa": {"a": 0.002, "c": 0.05},
        "bayes_mgd": {"gamma": 0.02, "delta": 0.3},
    }

    @pytest.mark.parametrize("fname,f,x0", CONVEX)
    def test_black_box_optimizers_improve(self, fname, f, x0):
        for name in ("hill_climber", "spsa", "cmaes", "pso", "mu_plus_lambda",
                     "bayes_mgd", "nelder_mead"):
            info = REGISTRY[name]
            hp = dict(info.defaults)
            if fname == "rosenbrock":
                hp.update(self.ROSEN_HPARAMS.get(name, {}))
            cost = Budgeted(f, 3000)
            try:
                info.minimize(cost, x0.copy(), hp, np.random.default_rng(1),
                              context={"initial_value": f(x0)})
            except BudgetExhausted:
                pass
            assert cost.best < f(x0), (name, fname)

    def test_adam_with_exact_gradient_reaches_1e3_on_sphere(self):
        grad_calls = [0]

        def gradient(x):
            grad_calls[0] += 1
            if grad_calls[0] > 5000:
                raise BudgetExhausted("budget")
            return 2.0 * x

        tracker = []

        def costfn(x):
            tracker.append(sphere(x))
            return tracker[-1]

        with pytest.raises(BudgetExhausted):
            adam(costfn, np.full(6, 1.0),
                 {"alpha": 0.001, "beta1": 0.9, "beta2": 0.999, "nadam": False},
                 np.random.default_rng(0), gradient=gradient)
        assert min(tracker) <= 1e-3

    def test_spsa_and_cmaes_reach_1e3_on_sphere(self):
        for name in ("spsa", "cmaes"):
            info = REGISTRY[name]
            cost = Budgeted(sphere, 5000)
            try:
                info.minimize(cost, np.full(6, 1.0), dict(info.defaults),
                              np.random.default_rng(3), context={})
            except BudgetExhausted:
                pass
            assert cost.best <= 1e-3, name
