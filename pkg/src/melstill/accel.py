"""Numba acceleration toggle.

Hot kernels ship in two variants: a numba ``@njit`` loop version and a pure
numpy version. The active path is chosen once at import time:

* ``MELSTILL_NUMBA=0`` (or ``off``/``false``) forces the numpy path;
* otherwise numba is used when importable.

``melstill.kernels`` exposes both variants so tests and the benchmark can
compare them directly regardless of the active path.
"""

import os

_FALSY = {"0", "off", "false", "no"}


def _numba_requested() -> bool:
    return os.environ.get("MELSTILL_NUMBA", "1").strip().lower() not in _FALSY


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)

    def wrap(fn):  # pragma: no cover - exercised only without numba
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
