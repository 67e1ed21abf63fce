"""Kernel backend selection.

The compiled extension is used when importable; set ``HUBBARDOPT_KERNELS``
to ``python`` or ``cython`` to force a backend.
"""

import os

_choice = os.environ.get("HUBBARDOPT_KERNELS", "").lower()

if _choice == "python":
    from . import _kernels_py as _impl

    BACKEND = "python"
elif _choice == "cython":
    from . import _kernels_cy as _impl  # noqa: F401

    BACKEND = "cython"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

onsite_phase = _impl.onsite_phase
hopping_rotation = _impl.hopping_rotation
fswap = _impl.fswap
pair_hadamard = _impl.pair_hadamard
expect_onsite = _impl.expect_onsite
expect_hopping = _impl.expect_hopping
apply_circuit = _impl.apply_circuit

ONSITE = 0
HOPPING = 1
