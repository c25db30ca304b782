"""Backend selection for the hot numeric kernels.

The Darcy finite-volume solve dominates pool generation, so its
preconditioned conjugate-gradient loop exists twice: a numba ``@njit``
version and a vectorized pure-numpy fallback. The numba path is the
default; set ``NOBENCH_DISABLE_NUMBA=1`` (or any of 1/true/yes/on) to force
the numpy path, e.g. on machines where numba is unavailable or to compare
the two with ``benchmarks/bench_solver.py``.

Both paths run the same algorithm and converge to the same tolerance, but
their floating-point rounding differs in the last ulps, so pool digests are
reproducible per backend, not across backends.
"""

import os


def _env_disabled() -> bool:
    return os.environ.get("NOBENCH_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


if _env_disabled():
    from .numpy_impl import darcy_pcg

    BACKEND = "numpy"
else:
    try:
        from .numba_impl import darcy_pcg

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        from .numpy_impl import darcy_pcg

        BACKEND = "numpy"

__all__ = ["darcy_pcg", "BACKEND"]
