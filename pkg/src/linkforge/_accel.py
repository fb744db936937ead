"""JIT shim for the hot numeric kernels.

Kernels in :mod:`linkforge._kernels` are written in nopython-compatible
style and decorated with ``njit`` from this module.  When numba is
installed (and not disabled) they compile to machine code; otherwise the
same functions run as plain Python over numpy arrays.  Set
``LINKFORGE_NO_NUMBA=1`` to force the fallback path, e.g. to debug a
kernel or to benchmark the two modes against each other
(``benchmarks/bench_kernels.py``).
"""

import os


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


def _noop_njit(*args, **kwargs):
    # mirrors numba.njit's decorator-with-arguments form
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


NUMBA_DISABLED = _flag("LINKFORGE_NO_NUMBA")

if NUMBA_DISABLED:
    njit = _noop_njit
    prange = range
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit, prange  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        njit = _noop_njit
        prange = range
        NUMBA_ENABLED = False


def set_num_threads(n: int) -> None:
    """Bound the JIT thread pool; no-op on the fallback path."""
    if NUMBA_ENABLED and n >= 1:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
