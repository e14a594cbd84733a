"""Select between the numba-compiled kernels and the pure-numpy fallback.

Set ``CHARN_ECF_BACKEND=numpy`` to force the fallback (or ``numba`` to
require the compiled path). The default uses numba when it imports.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _resolve():
    requested = os.environ.get("CHARN_ECF_BACKEND", "").strip().lower()
    if requested in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if requested not in ("numba", "numpy"):
        raise ValueError(
            f"CHARN_ECF_BACKEND must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numba" and not HAS_NUMBA:
        raise ImportError("CHARN_ECF_BACKEND=numba but numba is not installed")
    return requested


BACKEND = _resolve()


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or an identity decorator without numba."""
    bare = len(args) == 1 and callable(args[0]) and not kwargs
    if not HAS_NUMBA:
        return args[0] if bare else (lambda f: f)
    kwargs.setdefault("cache", True)
    if bare:
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)
