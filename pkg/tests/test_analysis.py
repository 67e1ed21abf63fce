import csv
from pathlib import Path

import numpy as np
import pytest

from hubbardopt.analysis import (
    RunSummary,
    best_per_optimizer,
    calls_to_self_tolerance,
    calls_to_tolerance,
    emit_tables,
    optimizer_order,
    running_best,
    summarize_campaign,
    summarize_run,
    winners,
)
from hubbardopt.costfn import RunRecord


def rec(it, exact, value=None, nmeas=None):
    return RunRecord(it, exact if value is None else value, [0.0], exact,
                     nmeas or 100 * it, 0.0)


def series(values):
    return [rec(i + 1, v) for i, v in enumerate(values)]


class TestSummarize:
    def test_never_improving_run(self):
        records = series([-1.0, -0.5, -0.9])
        s = summarize_run(records, ground_energy=-2.0, grid_sites=2)
        assert s.final_best_exact == -1.0
        assert s.normalized_error == pytest.approx((-1.0 + 2.0) / 2)

    def test_calls_to_tolerance_fixture(self):
        values = [-1.0] * 136 + [-1.995] + [-1.9]
        records = series(values)
        assert calls_to_tolerance(records, -2.0, 0.01) == 137
        assert calls_to_tolerance(records, -2.0, 0.001) is None
        s = summarize_run(records, -2.0, 1)
        assert s.calls_to_tolerance[0.01] == 137

    def test_normalization_by_site_count(self):
        records = series([-1.0])
        e1 = summarize_run(records, -2.0, 2).normalized_error
        e2 = summarize_run(records, -2.0, 4).normalized_error
        assert e1 == pytest.approx(2 * e2)

    def test_noisy_fallback_when_no_shadow(self):
        records = [RunRecord(1, -1.5, [0.0], float("nan"), 100, 0.0)]
        s = summarize_run(records, -2.0, 2)
        assert s.noisy_fallback
        assert s.final_best_exact == -1.5

    def test_running_best_monotone(self):
        vals = np.array([-1.0, -0.5, -1.5, -1.2, -1.6])
        rb = running_best(vals)
        assert np.all(np.diff(rb) <= 0)
        assert rb[-1] == -1.6


class TestCallsToSelfTolerance:
    def test_constant_run(self):
        assert calls_to_self_tolerance(series([-1.0, -1.0, -1.0])) == 1

    def test_last_call_improvement(self):
        values = [-1.0] * 9 + [-1.5]
        assert calls_to_self_tolerance(series(values)) == 10

    def test_hand_computed_five_rows(self):
        # best is -1.40; first within 0.001 of it is call 3
        values = [-1.0, -1.2, -1.3995, -1.35, -1.40]
        assert calls_to_self_tolerance(series(values)) == 3


def summary(instance, optimizer, err, shots=1000, filling="half", hset="default",
            seed=0, best=None):
    return RunSummary(
        instance_id=instance, optimizer=optimizer, hparam_set=hset, seed_index=seed,
        final_best_exact=best if best is not None else -2.0 + err,
        normalized_error=err, calls_to_tolerance={0.01: 10, 0.001: None},
        calls_to_self_tolerance=5, total_calls=100, total_nmeas=300000,
        shots=shots, filling=filling, grid_sites=2)


class TestWinners:
    def test_single_optimizer_sweeps(self):
        w = winners([summary("i1", "spsa", 0.1), summary("i2", "spsa", 0.2)])
        assert w["all"] == {"spsa": 2}

    def test_tie_after_rounding_shared(self):
        a = summary("i1", "spsa", 0.1, best=-1.9000001)
        b = summary("i1", "adam_fd", 0.1, best=-1.9000004)
        w = winners([a, b])
        assert w["all"] == {"spsa": 1, "adam_fd": 1}

    def test_slicing_keys(self):
        rows = [
            summary("i1", "spsa", 0.1, shots=1000, filling="half"),
            summary("i2", "spsa", 0.1, shots=10000, filling="quarter"),
        ]
        w = winners(rows)
        assert set(w) == {"all", "shots_1000", "shots_10000",
                          "filling_half", "filling_quarter"}

    def test_best_per_optimizer_collapses_hparam_sets(self):
        rows = [
            summary("i1", "spsa", 0.3, hset="default", best=-1.7),
            summary("i1", "spsa", 0.1, hset="tuned", best=-1.9),
        ]
        best = best_per_optimizer(rows)
        assert len(best) == 1
        assert best[0].final_best_exact == -1.9


class TestEmitTables:
    def _rows(self):
        return [
            summary("i1", "adam_fd", 0.01),
            summary("i2", "adam_fd", 0.02),
            summary("i1", "adam_sp", 0.05),
            summary("i2", "adam_sp", 0.03),
            summary("i1", "spsa", 0.10),
            summary("i2", "spsa", 0.02),
        ]

    def test_ordering_by_mean_error(self):
        order = optimizer_order(self._rows())
        assert order == ["adam_fd", "adam_sp", "spsa"]

    def test_schema_and_round_trip(self, tmp_path):
        paths = emit_tables(self._rows(), tmp_path)
        assert set(paths) == {"final_errors", "error_stats", "calls_to_tolerance",
                              "winners", "fd_vs_sp"}
        with open(paths["final_errors"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["optimizer", "instance", "normalized_error"]
        assert len(rows) == 1 + 6
        assert float(rows[1][2]) == 0.01
        with open(paths["fd_vs_sp"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:4] == ["optimizer", "instance", "fd_error", "sp_error"]
        assert [r[0] for r in rows[1:]] == ["adam", "adam"]

    def test_empty_summaries_header_only(self, tmp_path):
        paths = emit_tables([], tmp_path)
        for path in paths.values():
            lines = Path(path).read_text().splitlines()
            assert len(lines) == 1

    def test_permutation_invariance(self, tmp_path):
        rows = self._rows()
        emit_tables(rows, tmp_path / "a")
        emit_tables(list(reversed(rows)), tmp_path / "b")
        for name in ("final_errors.csv", "error_stats.csv", "winners.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()


class TestSummarizeCampaign:
    def test_end_to_end_on_tiny_campaign(self, tmp_path):
        from hubbardopt.bench import build_plan, find_instance, run_campaign
        from hubbardopt.costfn import TerminationPolicy

        plan = build_plan([find_instance("b1_1x2_U4_half_L2_S1000")],
                          ["hill_climber", "cmaes"], seeds=1)
        run_campaign(plan, tmp_path, master_seed=1,
                     policy=TerminationPolicy(max_calls=40))
        summaries = summarize_campaign(tmp_path)
        assert len(summaries) == 2
        for s in summaries:
            assert s.total_calls == 40
            assert s.normalized_error >= -1e-9
            assert s.shots == 1000
        emit_tables(summaries, tmp_path / "tables")
        assert (tmp_path / "tables" / "winners.csv").exists()
