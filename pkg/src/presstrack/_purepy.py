"""Pure-Python fallback for the compiled kernels in ``_core.pyx``.

Operation order mirrors the Cython source exactly so both backends produce
bit-identical floats.  Keep them in sync.
"""

import math

BACKEND = "python"

_INF = math.inf
_isfinite = math.isfinite


def _span(a0, a1, aw, b0, b1, bw, lo, hi):
    if lo == a0 and hi == a1:
        return aw
    if lo == b0 and hi == b1:
        return bw
    return hi - lo


def _areas(ax, ay, aw, ah, bx, by, bw, bh):
    ax2 = ax + aw
    ay2 = ay + ah
    bx2 = bx + bw
    by2 = by + bh

    lo = ax if ax > bx else bx
    hi = ax2 if ax2 < bx2 else bx2
    iw = _span(ax, ax2, aw, bx, bx2, bw, lo, hi) if hi > lo else 0.0
    lo = ay if ay > by else by
    hi = ay2 if ay2 < by2 else by2
    ih = _span(ay, ay2, ah, by, by2, bh, lo, hi) if hi > lo else 0.0
    inter = iw * ih

    union = aw * ah + bw * bh - inter

    lo = ax if ax < bx else bx
    hi = ax2 if ax2 > bx2 else bx2
    ew = _span(ax, ax2, aw, bx, bx2, bw, lo, hi)
    lo = ay if ay < by else by
    hi = ay2 if ay2 > by2 else by2
    eh = _span(ay, ay2, ah, by, by2, bh, lo, hi)
    return inter, union, ew * eh


def _sim(ax, ay, aw, ah, bx, by, bw, bh, use_uoe):
    inter, union, encl = _areas(
        float(ax), float(ay), float(aw), float(ah),
        float(bx), float(by), float(bw), float(bh),
    )
    s = union / encl if use_uoe else inter / union
    if s > 1.0:
        s = 1.0
    return s


def iou(a, b):
    return _sim(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], False)


def uoe(a, b):
    return _sim(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], True)


def pairwise(a, b, use_uoe):
    """Similarity matrix as a list of rows."""
    return [
        [_sim(p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3], use_uoe) for q in b]
        for p in a
    ]


def _hungarian(a, n, m):
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = 0
            row = a[i0 - 1]
            ui = u[i0]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - ui - v[j]
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
    return p


def _solve(c, n, m, unmatched):
    if n == 0 or m == 0:
        return []
    cmax = 0.0
    nfeas = 0
    for x in c:
        if _isfinite(x):
            nfeas += 1
            if x > cmax:
                cmax = x
    if nfeas == 0:
        return []
    dummy = unmatched >= 0.0
    if dummy:
        flip = False
        rn, rm = n, m + n
        pad = unmatched + cmax + 1.0
    else:
        flip = n > m
        pad = (m if flip else n) * cmax + 1.0
        rn, rm = (m, n) if flip else (n, m)
    a = []
    for i in range(rn):
        row = []
        for j in range(rm):
            if dummy and j >= m:
                row.append(unmatched)
                continue
            x = c[j * m + i] if flip else c[i * m + j]
            row.append(x if _isfinite(x) else pad)
        a.append(row)
    p = _hungarian(a, rn, rm)
    matches = []
    for j in range(1, rm + 1):
        if p[j] == 0:
            continue
        r, cc = (j - 1, p[j] - 1) if flip else (p[j] - 1, j - 1)
        if cc < m and _isfinite(c[r * m + cc]):
            matches.append((r, cc))
    matches.sort()
    return matches


def solve_flat(costs, n, m, unmatched=-1.0):
    """Assignment on a row-major flat cost list; ``inf`` marks gated pairs."""
    if len(costs) != n * m:
        raise ValueError("cost list length does not match shape")
    return _solve([float(x) for x in costs], n, m, float(unmatched))


def associate(tracks, dets, threshold, use_uoe):
    """Gate, fuse confidence and solve for one frame (see ``_core.associate``)."""
    n = len(tracks)
    m = len(dets)
    if n == 0 or m == 0:
        return []
    c = [0.0] * (n * m)
    sims = [0.0] * (n * m)
    for i, p in enumerate(tracks):
        for j, q in enumerate(dets):
            s = _sim(p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3], use_uoe) * float(q[4])
            sims[i * m + j] = s
            c[i * m + j] = _INF if s < threshold else 1.0 - s
    return [(i, j, sims[i * m + j]) for i, j in _solve(c, n, m, 1.0 - threshold)]
