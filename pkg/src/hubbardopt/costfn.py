"""Exact and statistical cost functions, call recording, and the run log.

Every optimizer sees only the wrapped cost function; the recorder logs one
row per call (optionally shadowing the exact energy), enforces the call
and wall-clock budgets, and streams rows to CSV.
"""

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ansatz import spec_for, prepare_state
from .model import HubbardInstance
from .statevector import exact_expectation, sample_group

CSV_HEADER = ["iter", "value", "params", "exact value", "nmeas", "time"]
QNG_CSV_HEADER = ["iteration"] + CSV_HEADER
END_MARKER = "# end"


@dataclass(frozen=True)
class EnergyEstimate:
    """Sampled energy with its standard error and measurement count."""

    value: float
    stderr: float
    nmeas_this_call: int


@dataclass(frozen=True)
class TerminationPolicy:
    max_calls: int = 5000
    max_wall_seconds: float = 3600.0

    def __post_init__(self):
        if self.max_calls <= 0 or self.max_wall_seconds <= 0:
            raise ValueError("termination budgets must be positive")


class BudgetExhausted(Exception):
    """Stop request from the recorder; the run ends normally."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class RunRecord:
    iter: int
    value: float
    params: list[float]
    exact_value: float
    nmeas: int
    time: float
    iteration: int | None = None


def exact_cost(instance: HubbardInstance, params: np.ndarray) -> float:
    """Exact simulated energy: prepare the state and take <H> directly."""
    spec = spec_for(instance)
    state = prepare_state(instance, params)
    return exact_expectation(state, list(spec.groups), instance.params)


def statistical_cost(
    instance: HubbardInstance, params: np.ndarray, rng: np.random.Generator
) -> EnergyEstimate:
    """Shot-sampled energy estimate.

    Each nonempty group is measured with nshots shots; the estimate is
    t * (hopping-group means) + U * (onsite mean), and the standard error
    combines the per-group per-shot sample variances scaled by their
    coefficients.
    """
    spec = spec_for(instance)
    state = prepare_state(instance, params)
    value = 0.0
    var_sum = 0.0
    for group in spec.groups:
        coeff = instance.params.u if group.coefficient_role == "U" else instance.params.t
        batch = sample_group(state, group, instance.nshots, rng)
        value += coeff * batch.mean()
        var_sum += coeff * coeff * batch.variance()
    stderr = math.sqrt(var_sum / instance.nshots)
    return EnergyEstimate(value, stderr, len(spec.groups) * instance.nshots)


def measurements_per_call(instance: HubbardInstance) -> int:
    return len(spec_for(instance).groups) * instance.nshots


class CostRecorder:
    """Wraps a statistical cost function, logging every call.

    Calls beyond the policy raise BudgetExhausted before evaluating.
    The exact shadow doubles simulation cost and can be disabled for the
    largest instances. An optional stream receives each CSV row as it is
    produced.
    """

    def __init__(
        self,
        instance: HubbardInstance,
        policy: TerminationPolicy = TerminationPolicy(),
        seed: int = 0,
        exact_shadow: bool = True,
        stream: io.TextIOBase | None = None,
        qng_style: bool = False,
        deterministic_time: bool = False,
    ):
        self.instance = instance
        self.policy = policy
        self.seed = seed
        self.exact_shadow = exact_shadow
        # campaign traces zero the time column so reruns are byte-identical;
        # the wall-clock budget still uses the real clock
        self.deterministic_time = deterministic_time
        self.records: list[RunRecord] = []
        self._start: float | None = None
        self._nmeas = 0
        self._iteration: int | None = 0 if qng_style else None
        self._stream = stream
        self._writer = csv.writer(stream, lineterminator="\n") if stream else None
        if self._writer:
            self._writer.writerow(QNG_CSV_HEADER if qng_style else CSV_HEADER)

    @property
    def calls(self) -> int:
        return len(self.records)

    def set_iteration(self, iteration: int) -> None:
        """Stamp subsequent rows with an optimizer iteration index (QNG traces)."""
        self._iteration = iteration

    def _check_budget(self) -> None:
        if self.calls >= self.policy.max_calls:
            raise BudgetExhausted("budget")
        if self._start is not None and time.monotonic() - self._start > self.policy.max_wall_seconds:
            raise BudgetExhausted("wall-clock")

    def _record(self, value: float, params: np.ndarray, exact_value: float, nmeas: int) -> None:
        now = time.monotonic()
        if self._start is None:
            self._start = now
        rec = RunRecord(
            iter=self.calls + 1,
            value=value,
            params=[round(float(p), 6) for p in params],
            exact_value=exact_value,
            nmeas=self._nmeas + nmeas,
            time=0.0 if self.deterministic_time else now - self._start,
            iteration=self._iteration,
        )
        self._nmeas = rec.nmeas
        self.records.append(rec)
        if self._writer:
            self._writer.writerow(_format_row(rec, qng_style=rec.iteration is not None))
            self._stream.flush()

    def call_with_stderr(self, params: np.ndarray) -> tuple[float, float]:
        """Noisy value and standard error (for uncertainty-aware optimizers)."""
        self._check_budget()
        rng = np.random.default_rng([self.seed, self.calls])
        est = statistical_cost(self.instance, params, rng)
        exact = exact_cost(self.instance, params) if self.exact_shadow else math.nan
        self._record(est.value, params, exact, est.nmeas_this_call)
        return est.value, est.stderr

    def __call__(self, params: np.ndarray) -> float:
        return self.call_with_stderr(params)[0]

    def record_metric_call(self, params: np.ndarray, nmeas: int) -> None:
        """Account one non-energy measurement call (metric estimation)."""
        self._check_budget()
        self._record(math.nan, params, math.nan, nmeas)

    def finish(self) -> None:
        if self._stream:
            self._stream.write(END_MARKER + "\n")
            self._stream.flush()


class ExactCostRecorder(CostRecorder):
    """Recorder variant evaluating the exact cost (noiseless runs)."""

    def call_with_stderr(self, params: np.ndarray) -> tuple[float, float]:
        self._check_budget()
        value = exact_cost(self.instance, params)
        self._record(value, params, value, measurements_per_call(self.instance))
        return value, 0.0


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def _format_params(params: list[float]) -> str:
    return "[" + ", ".join(repr(round(float(p), 6)) for p in params) + "]"


def _format_row(rec: RunRecord, qng_style: bool = False) -> list[str]:
    row = [
        str(rec.iter),
        _format_float(rec.value),
        _format_params(rec.params),
        _format_float(rec.exact_value),
        str(rec.nmeas),
        _format_float(rec.time),
    ]
    if qng_style:
        row = [str(rec.iteration)] + row
    return row


def write_csv(records: list[RunRecord], path, end_marker: bool = False) -> None:
    """Serialize records; header and 6-decimal params exactly as published."""
    qng_style = bool(records) and records[0].iteration is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(QNG_CSV_HEADER if qng_style else CSV_HEADER)
        for rec in records:
            writer.writerow(_format_row(rec, qng_style=qng_style))
        if end_marker:
            fh.write(END_MARKER + "\n")


class CsvFormatError(ValueError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _parse_params(text: str) -> list[float]:
    inner = text.strip()
    if not (inner.startswith("[") and inner.endswith("]")):
        raise ValueError(f"params field not bracketed: {text!r}")
    inner = inner[1:-1].strip()
    return [float(tok) for tok in inner.split(",")] if inner else []

def read_csv(path) -> list[RunRecord]:
    """Parse a run log; raises CsvFormatError with the offending line number."""
    records = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh]
    data_lines = []
    for no, ln in enumerate(lines, start=1):
        if ln.startswith("#"):
            continue
        data_lines.append((no, ln))
    if not data_lines:
        raise CsvFormatError(path, 0, "empty file")
    header_no, header_line = data_lines[0]
    header = next(csv.reader([header_line]))
    if header == CSV_HEADER:
        qng_style = False
    elif header == QNG_CSV_HEADER:
        qng_style = True
    else:
        raise CsvFormatError(path, header_no, f"unexpected header {header!r}")
    for no, ln in data_lines[1:]:
        if not ln.strip():
            continue
        row = next(csv.reader([ln]))
        try:
            off = 1 if qng_style else 0
            records.append(
                RunRecord(
                    iter=int(row[off + 0]),
                    value=float(row[off + 1]),
                    params=_parse_params(row[off + 2]),
                    exact_value=float(row[off + 3]),
                    nmeas=int(row[off + 4]),
                    time=float(row[off + 5]),
                    iteration=int(row[0]) if qng_style else None,
                )
            )
        except (ValueError, IndexError) as exc:
            raise CsvFormatError(path, no, str(exc)) from exc
    return records


def is_complete_log(path) -> bool:
    """True when the file ends with the completion marker row."""
    try:
        with open(path, "rb") as fh:
            tail = fh.read()[-16:].decode("utf-8", errors="replace")
    except OSError:
        return False
    return tail.rstrip("\n").endswith(END_MARKER)
