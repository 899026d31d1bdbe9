"""Hot inner loops with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and ``LLAB_DISABLE_NUMBA``
is unset (or ``0``).  Both paths return identical results; the test-suite
runs every kernel through both and compares.
"""
import os
import warnings

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


def _env_wants_numba():
    return os.environ.get("LLAB_DISABLE_NUMBA", "0").strip().lower() in _FALSY


_backend = "numba" if (HAVE_NUMBA and _env_wants_numba()) else "numpy"


def backend():
    return _backend


def set_backend(name):
    """Switch the active kernel path (``"numba"`` or ``"numpy"``)."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


def set_threads(count):
    if HAVE_NUMBA and count:
        # first use initialises the threading layer, which may complain about TBB
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", numba.NumbaWarning)
            numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# periodic (2d+1)-point stencil:  out = inv_h2 * (2d f - sum_nbrs f) + V f
# ---------------------------------------------------------------------------


@njit(cache=True)
def _stencil_1d(f, V, inv_h2, out):
    n0 = f.shape[0]
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        out[i] = inv_h2 * (2.0 * f[i] - f[ip] - f[im]) + V[i] * f[i]


@njit(cache=True)
def _stencil_2d(f, V, inv_h2, out):
    n0, n1 = f.shape
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            c = f[i, j]
            out[i, j] = (inv_h2 * (4.0 * c - f[ip, j] - f[im, j] - f[i, jp] - f[i, jm])
                         + V[i, j] * c)


@njit(cache=True)
def _stencil_3d(f, V, inv_h2, out):
    n0, n1, n2 = f.shape
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            for k in range(n2):
                kp = k + 1 if k + 1 < n2 else 0
                km = k - 1 if k > 0 else n2 - 1
                c = f[i, j, k]
                nb = (f[ip, j, k] + f[im, j, k] + f[i, jp, k] + f[i, jm, k]
                      + f[i, j, kp] + f[i, j, km])
                out[i, j, k] = inv_h2 * (6.0 * c - nb) + V[i, j, k] * c


_STENCILS = {1: _stencil_1d, 2: _stencil_2d, 3: _stencil_3d}


def stencil_apply_numba(f, V, inv_h2):
    out = np.empty_like(f)
    _STENCILS[f.ndim](f, V, inv_h2, out)
    return out


def stencil_apply_numpy(f, V, inv_h2):
    acc = 2.0 * f.ndim * f
    for axis in range(f.ndim):
        acc -= np.roll(f, 1, axis=axis)
        acc -= np.roll(f, -1, axis=axis)
    return inv_h2 * acc + V * f


def stencil_apply(f, V, inv_h2):
    f = np.ascontiguousarray(f, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    if _backend == "numba":
        return stencil_apply_numba(f, V, float(inv_h2))
    return stencil_apply_numpy(f, V, float(inv_h2))


# ---------------------------------------------------------------------------
# per-label reductions (cube min / max / sum)
# ---------------------------------------------------------------------------

_OPS = {"min": 0, "max": 1, "sum": 2}


@njit(cache=True)
def _segment_reduce(values, labels, nseg, op):
    out = np.empty(nseg)
    if op == 0:
        out[:] = np.inf
        for i in range(values.shape[0]):
            s = labels[i]
            if values[i] < out[s]:
                out[s] = values[i]
    elif op == 1:
        out[:] = -np.inf
        for i in range(values.shape[0]):
            s = labels[i]
            if values[i] > out[s]:
                out[s] = values[i]
    else:
        out[:] = 0.0
        for i in range(values.shape[0]):
            out[labels[i]] += values[i]
    return out


def segment_reduce_numba(values, labels, nseg, op):
    return _segment_reduce(values, labels, nseg, _OPS[op])


def segment_reduce_numpy(values, labels, nseg, op):
    if op == "sum":
        return np.bincount(labels, weights=values, minlength=nseg).astype(np.float64)
    if op == "min":
        out = np.full(nseg, np.inf)
        np.minimum.at(out, labels, values)
    else:
        out = np.full(nseg, -np.inf)
        np.maximum.at(out, labels, values)
    return out


def segment_reduce(values, labels, nseg, op):
    """Reduce ``values`` over each label class ``0..nseg-1``."""
    if op not in _OPS:
        raise ValueError(f"unknown reduction {op!r}")
    values = np.ascontiguousarray(values, dtype=np.float64).ravel()
    labels = np.ascontiguousarray(labels, dtype=np.int64).ravel()
    if _backend == "numba":
        return segment_reduce_numba(values, labels, int(nseg), op)
    return segment_reduce_numpy(values, labels, int(nseg), op)


# ---------------------------------------------------------------------------
# local minima with plateau merging on the periodic lattice
# ---------------------------------------------------------------------------


def _neighbor_table(shape):
    """(npts, 2d) table of linear indices of periodic neighbours."""
    idx = np.arange(int(np.prod(shape)), dtype=np.int64).reshape(shape)
    cols = []
    for axis in range(len(shape)):
        cols.append(np.roll(idx, -1, axis=axis).ravel())
        cols.append(np.roll(idx, 1, axis=axis).ravel())
    return np.stack(cols, axis=1)


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _plateau_minima(w, nbrs):
    npts = w.shape[0]
    parent = np.arange(npts)
    for i in range(npts):
        for k in range(nbrs.shape[1]):
            j = nbrs[i, k]
            if w[j] == w[i]:
                a = _find(parent, i)
                b = _find(parent, j)
                if a != b:
                    # smaller index becomes the root
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
    ok = np.ones(npts, dtype=np.bool_)
    for i in range(npts):
        for k in range(nbrs.shape[1]):
            if w[nbrs[i, k]] < w[i]:
                ok[_find(parent, i)] = False
                break
    count = 0
    for i in range(npts):
        if _find(parent, i) == i and ok[i]:
            count += 1
    reps = np.empty(count, dtype=np.int64)
    c = 0
    for i in range(npts):
        if parent[i] == i and ok[i]:
            reps[c] = i
            c += 1
    return reps


def plateau_minima_numba(w, shape):
    return _plateau_minima(w, _neighbor_table(shape))


def plateau_minima_numpy(w, shape):
    nbrs = _neighbor_table(shape)
    npts = w.shape[0]
    rows = np.repeat(np.arange(npts), nbrs.shape[1])
    cols = nbrs.ravel()
    same = w[rows] == w[cols]
    graph = coo_matrix((np.ones(same.sum()), (rows[same], cols[same])), shape=(npts, npts))
    ncomp, comp = connected_components(graph, directed=False)
    has_lower = (w[nbrs] < w[:, None]).any(axis=1)
    bad = np.bincount(comp, weights=has_lower, minlength=ncomp) > 0
    rep = np.full(ncomp, npts, dtype=np.int64)
    np.minimum.at(rep, comp, np.arange(npts))
    return np.sort(rep[~bad])


def plateau_minima(w, shape):
    """Linear indices (ascending) of one representative per local-minimum plateau."""
    w = np.ascontiguousarray(w, dtype=np.float64).ravel()
    if _backend == "numba":
        return plateau_minima_numba(w, tuple(shape))
    return plateau_minima_numpy(w, tuple(shape))
