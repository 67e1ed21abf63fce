"""Adapter for third-party optimizers running as external processes.

Line protocol over stdin/stdout, one message per line:

  to child:    init <nu> <x0_1> ... <x0_nu>
  from child:  ask <x_1> ... <x_nu>     -> evaluate, reply "tell <value>"
  from child:  done                     -> optimizer finished

The adapter shares the caller's recorded cost function, so budgets and
logging behave exactly as for native optimizers. A process exit or a
malformed line marks the run failed; the partial trace is kept.
"""

import subprocess
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExternalCommand:
    argv: tuple[str, ...]

    def __post_init__(self):
        if not self.argv:
            raise ValueError("external optimizer command is empty")


class ExternalRunFailed(RuntimeError):
    pass


def minimize(costfn, x0, hparams, rng, gradient=None, context=None,
             command: ExternalCommand | None = None):
    if command is None:
        raise ValueError("external adapter needs a command")
    x0 = np.asarray(x0, dtype=np.float64)
    proc = subprocess.Popen(
        list(command.argv),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
        bufsize=1,
    )
    try:
        proc.stdin.write("init %d %s\n" % (x0.size, " ".join(repr(float(v)) for v in x0)))
        proc.stdin.flush()
        while True:
            line = proc.stdout.readline()
            if not line:
                raise ExternalRunFailed(
                    f"process exited (code {proc.poll()}) without 'done'")
            parts = line.split()
            if parts[0] == "done":
                return
            if parts[0] != "ask" or len(parts) != x0.size + 1:
                raise ExternalRunFailed(f"malformed reply line: {line.strip()!r}")
            try:
                point = np.array([float(tok) for tok in parts[1:]])
            except ValueError as exc:
                raise ExternalRunFailed(f"malformed reply line: {line.strip()!r}") from exc
            value = costfn(point)
            proc.stdin.write(f"tell {float(value)!r}\n")
            proc.stdin.flush()
    except BrokenPipeError as exc:
        raise ExternalRunFailed("broken pipe to external optimizer") from exc
    finally:
        proc.kill()
        proc.wait()
