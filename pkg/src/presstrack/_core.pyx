# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for box similarity and linear assignment.

Every function here has a line-for-line twin in ``_purepy.py``.  Both perform
the same floating-point operations in the same order, so the two backends
return bit-identical results.  Keep them in sync.
"""

from libc.math cimport INFINITY, isfinite
from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef inline double _span(double a0, double a1, double aw,
                         double b0, double b1, double bw,
                         double lo, double hi) noexcept nogil:
    # Reuse a stored width when the span is exactly one input's extent, so
    # that identical boxes give exactly 1.0.
    if lo == a0 and hi == a1:
        return aw
    if lo == b0 and hi == b1:
        return bw
    return hi - lo


cdef inline void _areas(double ax, double ay, double aw, double ah,
                        double bx, double by, double bw, double bh,
                        double* inter, double* union_, double* encl) noexcept nogil:
    cdef double ax2 = ax + aw
    cdef double ay2 = ay + ah
    cdef double bx2 = bx + bw
    cdef double by2 = by + bh
    cdef double lo, hi, iw, ih, ew, eh

    lo = ax if ax > bx else bx
    hi = ax2 if ax2 < bx2 else bx2
    iw = _span(ax, ax2, aw, bx, bx2, bw, lo, hi) if hi > lo else 0.0
    lo = ay if ay > by else by
    hi = ay2 if ay2 < by2 else by2
    ih = _span(ay, ay2, ah, by, by2, bh, lo, hi) if hi > lo else 0.0
    inter[0] = iw * ih

    union_[0] = aw * ah + bw * bh - inter[0]

    lo = ax if ax < bx else bx
    hi = ax2 if ax2 > bx2 else bx2
    ew = _span(ax, ax2, aw, bx, bx2, bw, lo, hi)
    lo = ay if ay < by else by
    hi = ay2 if ay2 > by2 else by2
    eh = _span(ay, ay2, ah, by, by2, bh, lo, hi)
    encl[0] = ew * eh


cdef inline double _sim(double ax, double ay, double aw, double ah,
                        double bx, double by, double bw, double bh,
                        bint use_uoe) noexcept nogil:
    cdef double inter, union_, encl, s
    _areas(ax, ay, aw, ah, bx, by, bw, bh, &inter, &union_, &encl)
    if use_uoe:
        s = union_ / encl
    else:
        s = inter / union_
    if s > 1.0:
        s = 1.0
    return s


def iou(a, b):
    return _sim(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], False)


def uoe(a, b):
    return _sim(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], True)


def pairwise(list a, list b, bint use_uoe):
    """Similarity matrix as a list of rows."""
    cdef Py_ssize_t i, j
    cdef object p, q
    cdef list out = []
    cdef list row
    for i in range(len(a)):
        p = a[i]
        row = []
        for j in range(len(b)):
            q = b[j]
            row.append(_sim(p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3], use_uoe))
        out.append(row)
    return out


cdef int _hungarian(double* a, int n, int m, int* p) noexcept nogil:
    # Shortest augmenting path with potentials on a dense n x m matrix,
    # n <= m, 1-based as in the classic formulation.  Every row gets a
    # column; on exit p[j] is the row (1-based, 0 = free) of column j.
    # Returns -1 on allocation failure.
    cdef double* u = <double*> malloc((n + 1) * sizeof(double))
    cdef double* v = <double*> malloc((m + 1) * sizeof(double))
    cdef double* minv = <double*> malloc((m + 1) * sizeof(double))
    cdef int* way = <int*> malloc((m + 1) * sizeof(int))
    cdef char* used = <char*> malloc((m + 1) * sizeof(char))
    cdef int i, j, i0, j0, j1
    cdef double delta, cur
    if u == NULL or v == NULL or minv == NULL or way == NULL or used == NULL:
        free(u); free(v); free(minv); free(way); free(used)
        return -1
    for i in range(n + 1):
        u[i] = 0.0
    for j in range(m + 1):
        v[j] = 0.0
        p[j] = 0
        way[j] = 0
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    free(u); free(v); free(minv); free(way); free(used)
    return 0


cdef list _solve(double* c, int n, int m, double unmatched):
    # c is row-major n x m, non-finite entries are infeasible.
    #
    # unmatched < 0: among matchings of maximum cardinality, minimum cost.
    # Every row of the (possibly transposed) problem is assigned; gated pairs
    # cost more than any feasible matching's total, so the optimum maximises
    # the number of real pairs first and then minimises cost.
    #
    # unmatched >= 0: minimise matched cost plus ``unmatched`` per unmatched
    # row.  Each row gets a private-cost dummy column so leaving it free is
    # always possible.
    cdef int rn, rm, i, j, r, cc
    cdef int nfeas = 0
    cdef bint flip
    cdef double cmax = 0.0
    cdef double pad, x
    cdef double* a
    cdef int* p
    cdef list matches = []
    if n == 0 or m == 0:
        return matches
    for i in range(n * m):
        if isfinite(c[i]):
            nfeas += 1
            if c[i] > cmax:
                cmax = c[i]
    if nfeas == 0:
        return matches
    if unmatched >= 0.0:
        flip = False
        rn = n
        rm = m + n
        pad = unmatched + cmax + 1.0
    else:
        flip = n > m
        pad = (m if flip else n) * cmax + 1.0
        rn = m if flip else n
        rm = n if flip else m
    a = <double*> malloc(rn * rm * sizeof(double))
    p = <int*> malloc((rm + 1) * sizeof(int))
    if a == NULL or p == NULL:
        free(a); free(p)
        raise MemoryError()
    for i in range(rn):
        for j in range(rm):
            if unmatched >= 0.0 and j >= m:
                a[i * rm + j] = unmatched
                continue
            x = c[j * m + i] if flip else c[i * m + j]
            a[i * rm + j] = x if isfinite(x) else pad
    if _hungarian(a, rn, rm, p) != 0:
        free(a); free(p)
        raise MemoryError()
    for j in range(1, rm + 1):
        if p[j] == 0:
            continue
        if flip:
            r = j - 1
            cc = p[j] - 1
        else:
            r = p[j] - 1
            cc = j - 1
        if cc < m and isfinite(c[r * m + cc]):
            matches.append((r, cc))
    free(a); free(p)
    matches.sort()
    return matches


def solve_flat(list costs, int n, int m, double unmatched=-1.0):
    """Assignment on a row-major flat cost list; ``inf`` marks gated pairs.

    With ``unmatched < 0`` the matching has maximum cardinality and minimum
    cost among those; otherwise each unmatched row costs ``unmatched``.
    Returns the matched ``(row, col)`` pairs sorted by row.
    """
    if len(costs) != n * m:
        raise ValueError("cost list length does not match shape")
    cdef double* c = <double*> malloc((n * m + 1) * sizeof(double))
    cdef int i
    if c == NULL:
        raise MemoryError()
    try:
        for i in range(n * m):
            c[i] = costs[i]
        return _solve(c, n, m, unmatched)
    finally:
        free(c)


def associate(list tracks, list dets, double threshold, bint use_uoe):
    """Gate, fuse confidence and solve for one frame.

    ``tracks`` holds ``(x, y, w, h)`` tuples and ``dets`` holds
    ``(x, y, w, h, conf)`` tuples.  Returns ``(track_idx, det_idx, sim)``
    triples where ``sim`` is the fused similarity of the matched pair.
    The matching maximises the total of ``sim - threshold`` over ungated
    pairs, i.e. an unmatched track costs as much as a pair on the gate.
    """
    cdef int n = len(tracks)
    cdef int m = len(dets)
    cdef int i, j
    cdef object p, q
    cdef double s
    cdef list out = []
    if n == 0 or m == 0:
        return out
    cdef double* c = <double*> malloc(n * m * sizeof(double))
    cdef double* sims = <double*> malloc(n * m * sizeof(double))
    if c == NULL or sims == NULL:
        free(c); free(sims)
        raise MemoryError()
    try:
        for i in range(n):
            p = tracks[i]
            for j in range(m):
                q = dets[j]
                s = _sim(p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3], use_uoe) * <double> q[4]
                sims[i * m + j] = s
                if s < threshold:
                    c[i * m + j] = INFINITY
                else:
                    c[i * m + j] = 1.0 - s
        for i, j in _solve(c, n, m, 1.0 - threshold):
            out.append((i, j, sims[i * m + j]))
        return out
    finally:
        free(c); free(sims)
