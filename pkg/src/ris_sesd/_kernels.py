"""Hot search kernels, JIT-compiled with numba when available.

Set ``RIS_SESD_DISABLE_NUMBA=1`` to run the plain Python/numpy path. Both
paths execute the same source; ``sesd_search_py`` is always the
interpreted version so benchmarks can compare the two in one process.
"""

import os

import numpy as np

_FLAG = os.environ.get("RIS_SESD_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError("disabled by RIS_SESD_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def sesd_search_py(R, c, points, best_idx, radius):
    """Depth-first Schnorr-Euchner search for ``min ||c - R x||^2``.

    ``R`` is upper triangular with nonzero diagonal, ``x`` ranges over
    ``points**N``. Layers are visited from the last row up; siblings in
    ascending order of their layer metric (stable, so ties go to the lower
    alphabet index). A branch is pruned once its partial metric reaches the
    incumbent radius. ``radius`` is the initial bound (``inf`` for none).

    Writes the minimiser's alphabet indices into ``best_idx`` (untouched if no leaf
    beats ``radius``) and returns
    ``(best_metric, nodes_visited, leaves_reached)``.
    """
    N = R.shape[0]
    P = points.shape[0]
    order = np.empty((N, P), dtype=np.int64)
    cost = np.empty((N, P), dtype=np.float64)
    pos = np.zeros(N, dtype=np.int64)
    dist = np.zeros(N + 1, dtype=np.float64)
    idx = np.zeros(N, dtype=np.int64)
    x = np.zeros(N, dtype=np.complex128)
    best = radius
    nodes = 0
    leaves = 0

    n = N - 1
    _expand(R, c, points, x, n, cost, order)
    pos[n] = 0
    while True:
        if pos[n] < P:
            m = order[n, pos[n]]
            pos[n] += 1
            d = dist[n + 1] + cost[n, m]
            if d >= best:
                # siblings are sorted, the rest cannot do better
                pos[n] = P
                continue
            nodes += 1
            idx[n] = m
            x[n] = points[m]
            dist[n] = d
            if n == 0:
                leaves += 1
                best = d
                for j in range(N):
                    best_idx[j] = idx[j]
            else:
                n -= 1
                _expand(R, c, points, x, n, cost, order)
                pos[n] = 0
        else:
            n += 1
            if n == N:
                break
    return best, nodes, leaves


def _expand_py(R, c, points, x, n, cost, order):
    N = R.shape[0]
    P = points.shape[0]
    center = c[n]
    for j in range(n + 1, N):
        center -= R[n, j] * x[j]
    r = R[n, n]
    for m in range(P):
        e = center - r * points[m]
        cost[n, m] = e.real * e.real + e.imag * e.imag
    # insertion sort keeps equal costs in index order
    for m in range(P):
        order[n, m] = m
    for i in range(1, P):
        key = order[n, i]
        j = i - 1
        while j >= 0 and cost[n, order[n, j]] > cost[n, key]:
            order[n, j + 1] = order[n, j]
            j -= 1
        order[n, j + 1] = key


if HAVE_NUMBA:
    _expand = njit(cache=True)(_expand_py)
    sesd_search = njit(cache=True)(sesd_search_py)
    # the interpreted copy must call the interpreted helper
    _py_globals = dict(sesd_search_py.__globals__)
    _py_globals["_expand"] = _expand_py
    import types

    sesd_search_py = types.FunctionType(sesd_search_py.__code__, _py_globals, "sesd_search_py")
else:
    _expand = _expand_py
    sesd_search = sesd_search_py
