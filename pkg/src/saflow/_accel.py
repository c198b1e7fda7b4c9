"""Optional numba acceleration.

Kernels in this package are written in the subset of numpy that numba can
compile.  When numba and rocket-fft (which teaches numba about ``np.fft``)
are importable, :func:`kernel` returns an ``@njit`` compiled function;
otherwise, or when ``SAFLOW_NUMBA=0`` is set in the environment, the same
source runs as plain numpy.
"""

import os

_FLAG = os.environ.get("SAFLOW_NUMBA", "1").strip().lower()


def _probe():
    if _FLAG in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
        import rocket_fft  # noqa: F401  (registers np.fft overloads)
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _probe()


def kernel(fn):
    """Compile ``fn`` with numba when enabled, else return it unchanged."""
    if not NUMBA_ENABLED:
        return fn
    import numba

    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
