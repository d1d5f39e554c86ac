"""Segmented per-drop reductions used by the Monte Carlo engine.

Each kernel exists as a numba ``@njit`` version and a pure-numpy version with
the same signature. The numba path is used unless numba is missing or
``DUDE_LAB_DISABLE_NUMBA=1`` is set in the environment.

Segments are described by an ``offsets`` array of length ``n + 1``: drop ``i``
owns ``[offsets[i], offsets[i+1])`` of the flat point arrays.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_disabled() -> bool:
    return os.environ.get("DUDE_LAB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


BACKEND = "numpy" if numba is None or _env_disabled() else "numba"


# numpy ---------------------------------------------------------------------------


def _nonempty_starts(offsets):
    counts = np.diff(offsets)
    nonempty = counts > 0
    return nonempty, offsets[:-1][nonempty]


def segment_nearest_numpy(x, y, offsets):
    out = np.full(offsets.size - 1, np.inf)
    if x.size == 0:
        return out
    nonempty, starts = _nonempty_starts(offsets)
    out[nonempty] = np.minimum.reduceat(np.hypot(x, y), starts)
    return out


def segment_interference_numpy(dist, marks, fades, offsets, alpha):
    out = np.zeros(offsets.size - 1)
    if dist.size == 0:
        return out
    nonempty, starts = _nonempty_starts(offsets)
    contrib = marks * fades * dist ** (-alpha)
    out[nonempty] = np.add.reduceat(contrib, starts)
    return out


# numba ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def segment_nearest_numba(x, y, offsets):
        n = offsets.size - 1
        out = np.empty(n)
        for i in range(n):
            best = np.inf
            for k in range(offsets[i], offsets[i + 1]):
                r = np.sqrt(x[k] * x[k] + y[k] * y[k])
                if r < best:
                    best = r
            out[i] = best
        return out

    @numba.njit(cache=True, nogil=True)
    def segment_interference_numba(dist, marks, fades, offsets, alpha):
        n = offsets.size - 1
        out = np.zeros(n)
        ia = int(alpha)
        if ia == alpha and ia <= 8:
            # repeated multiplication is ~5x cheaper than pow for the usual integer exponents
            for i in range(n):
                acc = 0.0
                for k in range(offsets[i], offsets[i + 1]):
                    r = dist[k]
                    g = r
                    for _ in range(ia - 1):
                        g *= r
                    acc += marks[k] * fades[k] / g
                out[i] = acc
            return out
        for i in range(n):
            acc = 0.0
            for k in range(offsets[i], offsets[i + 1]):
                acc += marks[k] * fades[k] * dist[k] ** -alpha
            out[i] = acc
        return out

else:  # pragma: no cover
    segment_nearest_numba = segment_nearest_numpy
    segment_interference_numba = segment_interference_numpy


KERNELS = {
    "numpy": (segment_nearest_numpy, segment_interference_numpy),
    "numba": (segment_nearest_numba, segment_interference_numba),
}


def kernels(backend: str | None = None):
    """(segment_nearest, segment_interference) for ``backend`` (default: active one)."""
    return KERNELS[backend or BACKEND]
