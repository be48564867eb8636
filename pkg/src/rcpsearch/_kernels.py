"""Hot numeric kernels, JIT-compiled with numba when available.

Every kernel exists in two variants: a numba ``@njit`` loop and a pure-numpy
fallback. The active set is chosen once at import time; set
``RCP_DISABLE_NUMBA=1`` to force the numpy path (or it is taken automatically
when numba cannot be imported). Both paths produce bit-identical results:
squared distances and linear forms are accumulated coordinate by coordinate
in the same order, and pair selection uses the same (d2, i, j) total order.

All coordinate inputs are C-contiguous float64 arrays, ids are int64.
A "no pair" result is (-1, -1, inf).
"""

from __future__ import annotations

import os

import numpy as np

INF = float("inf")

_env = os.environ.get("RCP_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _env in ("1", "true", "yes", "on")

if not _DISABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
else:
    njit = None

HAVE_NUMBA = njit is not None


# ---------------------------------------------------------------------------
# pure-numpy variants
# ---------------------------------------------------------------------------

_BLOCK = 64


def _sq_rows_np(xs, row):
    """Squared distance of every row of xs to ``row``, accumulated in
    coordinate order (bit-compatible with the jitted loops)."""
    d2 = (xs[:, 0] - row[0]) ** 2
    for c in range(1, xs.shape[1]):
        d2 += (xs[:, c] - row[c]) ** 2
    return d2


def _lex_best_np(d2, pi, pj, bi, bj, bd):
    """Merge candidate pairs into the running (bd, bi, bj) minimum."""
    m = d2.min()
    if m > bd:
        return bi, bj, bd
    sel = np.flatnonzero(d2 == m)
    lo = np.minimum(pi[sel], pj[sel])
    hi = np.maximum(pi[sel], pj[sel])
    k = np.lexsort((hi, lo))[0]
    ci, cj = int(lo[k]), int(hi[k])
    if m < bd or ci < bi or (ci == bi and cj < bj):
        return ci, cj, float(m)
    return bi, bj, bd


def _pair_scan_np(xs, ids):
    k = xs.shape[0]
    bi, bj, bd = -1, -1, INF
    if k < 2:
        return bi, bj, bd
    for s in range(1, k, _BLOCK):
        e = min(s + _BLOCK, k)
        for i in range(s, e):
            d2 = _sq_rows_np(xs[:i], xs[i])
            pi = ids[:i]
            pj = np.full(i, ids[i])
            bi, bj, bd = _lex_best_np(d2, pi, pj, bi, bj, bd)
    return bi, bj, bd


def _widest_axis_np(xs):
    ext = xs.max(axis=0) - xs.min(axis=0)
    return int(np.argmax(ext))


def _pair_best_np(xs, ids):
    """Closest pair by a plane sweep along the widest coordinate axis.

    Sweeps left in blocks and prunes a whole block once every candidate in it
    is separated by more than the current best along the sweep axis alone.
    """
    k = xs.shape[0]
    bi, bj, bd = -1, -1, INF
    if k < 2:
        return bi, bj, bd
    ax = _widest_axis_np(xs)
    order = np.argsort(xs[:, ax], kind="stable")
    xs = np.ascontiguousarray(xs[order])
    ids = ids[order]
    x0 = xs[:, ax]
    m = xs.shape[1]
    for i in range(1, k):
        hi = i
        while hi > 0:
            lo = max(0, hi - _BLOCK)
            dx = x0[i] - x0[lo:hi]
            dx2 = dx * dx
            if dx2.min() > bd:
                break
            ok = np.flatnonzero(dx2 <= bd)
            if ok.size:
                rows = lo + ok
                d2 = np.zeros(rows.size)
                for c in range(m):
                    d2 += (xs[i, c] - xs[rows, c]) ** 2
                pj = np.full(rows.size, ids[i])
                bi, bj, bd = _lex_best_np(d2, ids[rows], pj, bi, bj, bd)
            hi = lo
    return bi, bj, bd


def _pair_best_two_np(xs_a, ids_a, xs_b, ids_b):
    xs = np.ascontiguousarray(np.concatenate([xs_a, xs_b]))
    ids = np.concatenate([ids_a, ids_b])
    return _pair_best_np(xs, ids)


def _nearest_among_np(xs, ids, row, self_id):
    """Index and squared distance of the (d2, id)-minimal row, excluding
    the row whose id equals ``self_id``."""
    if xs.shape[0] == 0:
        return -1, INF
    d2 = _sq_rows_np(xs, row)
    d2 = np.where(ids == self_id, INF, d2)
    m = d2.min()
    if m == INF:
        return -1, INF
    sel = np.flatnonzero(d2 == m)
    return int(ids[sel].min()), float(m)


def _box_mask_np(coords, lo, hi):
    mask = (coords[:, 0] >= lo[0]) & (coords[:, 0] <= hi[0])
    for c in range(1, coords.shape[1]):
        mask &= (coords[:, c] >= lo[c]) & (coords[:, c] <= hi[c])
    return mask


def _polytope_mask_np(coords, rows, rhs):
    n = coords.shape[0]
    mask = np.ones(n, dtype=np.bool_)
    for m in range(rows.shape[0]):
        g = rows[m, 0] * coords[:, 0]
        for c in range(1, coords.shape[1]):
            g += rows[m, c] * coords[:, c]
        mask &= g <= rhs[m]
    return mask


def _ball_mask_np(coords, center, r2):
    return _sq_rows_np(coords, center) <= r2


def _linear_form_np(coords, coef, const):
    g = coef[0] * coords[:, 0]
    for c in range(1, coords.shape[1]):
        g += coef[c] * coords[:, c]
    return g + const


def _forms_cross_box_np(coefs, consts, lo, hi):
    """For linear forms g_m(x) = coefs[m]. x + consts[m], report whether the
    zero set of each form meets the closed box [lo, hi] (touching counts)."""
    gmin = consts.copy()
    gmax = consts.copy()
    for c in range(coefs.shape[1]):
        a = coefs[:, c] * lo[c]
        b = coefs[:, c] * hi[c]
        gmin += np.minimum(a, b)
        gmax += np.maximum(a, b)
    return (gmin <= 0.0) & (gmax >= 0.0)


def _best_entry_np(d2, ii, jj):
    if d2.shape[0] == 0:
        return -1, -1, INF
    m = d2.min()
    if m == INF:
        return -1, -1, INF
    sel = np.flatnonzero(d2 == m)
    k = np.lexsort((jj[sel], ii[sel]))[0]
    s = sel[k]
    return int(ii[s]), int(jj[s]), float(m)


# ---------------------------------------------------------------------------
# numba variants
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pair_scan_nb(xs, ids):
        k = xs.shape[0]
        m = xs.shape[1]
        bi = -1
        bj = -1
        bd = INF
        for i in range(k):
            for j in range(i + 1, k):
                d2 = (xs[i, 0] - xs[j, 0]) ** 2
                for c in range(1, m):
                    dc = xs[i, c] - xs[j, c]
                    d2 += dc * dc
                if d2 <= bd:
                    pi = ids[i]
                    pj = ids[j]
                    if pi > pj:
                        pi, pj = pj, pi
                    if d2 < bd or pi < bi or (pi == bi and pj < bj):
                        bd = d2
                        bi = pi
                        bj = pj
        return bi, bj, bd

    @njit(cache=True)
    def _pair_best_nb(xs, ids):
        k = xs.shape[0]
        m = xs.shape[1]
        bi = -1
        bj = -1
        bd = INF
        if k < 2:
            return bi, bj, bd
        ax = 0
        best_ext = -1.0
        for c in range(m):
            lo = xs[0, c]
            hi = xs[0, c]
            for t in range(1, k):
                v = xs[t, c]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            if hi - lo > best_ext:
                best_ext = hi - lo
                ax = c
        col = np.empty(k, dtype=np.float64)
        for t in range(k):
            col[t] = xs[t, ax]
        order = np.argsort(col)
        for oi in range(1, k):
            i = order[oi]
            xi = xs[i, ax]
            for oj in range(oi - 1, -1, -1):
                j = order[oj]
                dx = xi - xs[j, ax]
                if dx * dx > bd:
                    break
                d2 = 0.0
                for c in range(m):
                    dc = xs[i, c] - xs[j, c]
                    d2 += dc * dc
                if d2 <= bd:
                    pi = ids[i]
                    pj = ids[j]
                    if pi > pj:
                        pi, pj = pj, pi
                    if d2 < bd or pi < bi or (pi == bi and pj < bj):
                        bd = d2
                        bi = pi
                        bj = pj
        return bi, bj, bd

    @njit(cache=True)
    def _pair_best_two_nb(xs_a, ids_a, xs_b, ids_b):
        ka = xs_a.shape[0]
        kb = xs_b.shape[0]
        m = xs_a.shape[1]
        xs = np.empty((ka + kb, m), dtype=np.float64)
        ids = np.empty(ka + kb, dtype=np.int64)
        xs[:ka] = xs_a
        xs[ka:] = xs_b
        ids[:ka] = ids_a
        ids[ka:] = ids_b
        return _pair_best_nb(xs, ids)

    @njit(cache=True)
    def _nearest_among_nb(xs, ids, row, self_id):
        k = xs.shape[0]
        m = xs.shape[1]
        bj = -1
        bd = INF
        for t in range(k):
            if ids[t] == self_id:
                continue
            d2 = (xs[t, 0] - row[0]) ** 2
            for c in range(1, m):
                dc = xs[t, c] - row[c]
                d2 += dc * dc
            if d2 < bd or (d2 == bd and ids[t] < bj):
                bd = d2
                bj = ids[t]
        return bj, bd

    @njit(cache=True)
    def _box_mask_nb(coords, lo, hi):
        n = coords.shape[0]
        d = coords.shape[1]
        mask = np.empty(n, dtype=np.bool_)
        for t in range(n):
            ok = True
            for c in range(d):
                v = coords[t, c]
                if v < lo[c] or v > hi[c]:
                    ok = False
                    break
            mask[t] = ok
        return mask

    @njit(cache=True)
    def _polytope_mask_nb(coords, rows, rhs):
        n = coords.shape[0]
        d = coords.shape[1]
        nr = rows.shape[0]
        mask = np.empty(n, dtype=np.bool_)
        for t in range(n):
            ok = True
            for r in range(nr):
                g = rows[r, 0] * coords[t, 0]
                for c in range(1, d):
                    g += rows[r, c] * coords[t, c]
                if g > rhs[r]:
                    ok = False
                    break
            mask[t] = ok
        return mask

    @njit(cache=True)
    def _ball_mask_nb(coords, center, r2):
        n = coords.shape[0]
        d = coords.shape[1]
        mask = np.empty(n, dtype=np.bool_)
        for t in range(n):
            d2 = (coords[t, 0] - center[0]) ** 2
            for c in range(1, d):
                dc = coords[t, c] - center[c]
                d2 += dc * dc
            mask[t] = d2 <= r2
        return mask

    @njit(cache=True)
    def _linear_form_nb(coords, coef, const):
        n = coords.shape[0]
        d = coords.shape[1]
        out = np.empty(n, dtype=np.float64)
        for t in range(n):
            g = coef[0] * coords[t, 0]
            for c in range(1, d):
                g += coef[c] * coords[t, c]
            out[t] = g + const
        return out

    @njit(cache=True)
    def _forms_cross_box_nb(coefs, consts, lo, hi):
        n = coefs.shape[0]
        d = coefs.shape[1]
        out = np.empty(n, dtype=np.bool_)
        for t in range(n):
            gmin = consts[t]
            gmax = consts[t]
            for c in range(d):
                a = coefs[t, c] * lo[c]
                b = coefs[t, c] * hi[c]
                if a <= b:
                    gmin += a
                    gmax += b
                else:
                    gmin += b
                    gmax += a
            out[t] = gmin <= 0.0 and gmax >= 0.0
        return out

    @njit(cache=True)
    def _best_entry_nb(d2, ii, jj):
        bi = -1
        bj = -1
        bd = INF
        for t in range(d2.shape[0]):
            v = d2[t]
            if v == INF:
                continue
            if v < bd or (v == bd and (ii[t] < bi or (ii[t] == bi and jj[t] < bj))):
                bd = v
                bi = ii[t]
                bj = jj[t]
        return bi, bj, bd

    @njit(cache=True)
    def _pair_best_two_seeded_nb(xs_a, ids_a, xs_b, ids_b, si, sj, sd2):
        ka = xs_a.shape[0]
        kb = xs_b.shape[0]
        m = xs_a.shape[1]
        xs = np.empty((ka + kb, m), dtype=np.float64)
        ids = np.empty(ka + kb, dtype=np.int64)
        xs[:ka] = xs_a
        xs[ka:] = xs_b
        ids[:ka] = ids_a
        ids[ka:] = ids_b
        k = ka + kb
        bi = si
        bj = sj
        bd = sd2
        ax = 0
        best_ext = -1.0
        for c in range(m):
            lo = xs[0, c]
            hi = xs[0, c]
            for t in range(1, k):
                v = xs[t, c]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            if hi - lo > best_ext:
                best_ext = hi - lo
                ax = c
        col = np.empty(k, dtype=np.float64)
        for t in range(k):
            col[t] = xs[t, ax]
        order = np.argsort(col)
        for oi in range(1, k):
            i = order[oi]
            xi = xs[i, ax]
            for oj in range(oi - 1, -1, -1):
                j = order[oj]
                dx = xi - xs[j, ax]
                if dx * dx > bd:
                    break
                d2 = 0.0
                for c in range(m):
                    dc = xs[i, c] - xs[j, c]
                    d2 += dc * dc
                if d2 <= bd:
                    pi = ids[i]
                    pj = ids[j]
                    if pi > pj:
                        pi, pj = pj, pi
                    if d2 < bd or bi < 0 or pi < bi or (pi == bi and pj < bj):
                        bd = d2
                        bi = pi
                        bj = pj
        return bi, bj, bd

    @njit(cache=True)
    def _phi_table_nb(order, us, vs, sizes, child1, child2, band_start, band_len,
                      band_xs, band_ids, split_cap, tri_h,
                      out_i, out_j, out_d2):
        """Heavy-pair table, filled in nondecreasing size-sum order.

        Pairs with both sides below ``split_cap`` are answered from the two
        per-node closest pairs plus, only when the nodes' bounding boxes come
        closer than that seed distance, a seeded sweep over the union; larger
        pairs combine the three already-computed entries obtained by
        splitting the bigger node.
        """
        h = sizes.shape[0]
        m = band_xs.shape[1]
        intra_i = np.full(h, -1, dtype=np.int64)
        intra_j = np.full(h, -1, dtype=np.int64)
        intra_d2 = np.full(h, INF)
        blo = np.empty((h, m), dtype=np.float64)
        bhi = np.empty((h, m), dtype=np.float64)
        for u in range(h):
            sa = band_start[u]
            if sa < 0:
                continue
            l = band_len[u]
            intra_i[u], intra_j[u], intra_d2[u] = _pair_best_nb(
                band_xs[sa:sa + l], band_ids[sa:sa + l])
            for c in range(m):
                lo = band_xs[sa, c]
                hi = band_xs[sa, c]
                for t in range(1, l):
                    v = band_xs[sa + t, c]
                    if v < lo:
                        lo = v
                    elif v > hi:
                        hi = v
                blo[u, c] = lo
                bhi[u, c] = hi

        for t in range(order.shape[0]):
            p = order[t]
            u = us[p]
            v = vs[p]
            if sizes[u] < split_cap and sizes[v] < split_cap:
                if u == v:
                    bi = intra_i[u]
                    bj = intra_j[u]
                    bd = intra_d2[u]
                else:
                    bi = intra_i[u]
                    bj = intra_j[u]
                    bd = intra_d2[u]
                    v2 = intra_d2[v]
                    if v2 < bd or (v2 == bd and intra_i[v] >= 0 and (
                            intra_i[v] < bi or (intra_i[v] == bi and intra_j[v] < bj))):
                        bi = intra_i[v]
                        bj = intra_j[v]
                        bd = v2
                    gap2 = 0.0
                    for c in range(m):
                        g = blo[u, c] - bhi[v, c]
                        g2 = blo[v, c] - bhi[u, c]
                        if g2 > g:
                            g = g2
                        if g > 0.0:
                            gap2 += g * g
                    if not gap2 > bd:
                        sa = band_start[u]
                        sb = band_start[v]
                        bi, bj, bd = _pair_best_two_seeded_nb(
                            band_xs[sa:sa + band_len[u]], band_ids[sa:sa + band_len[u]],
                            band_xs[sb:sb + band_len[v]], band_ids[sb:sb + band_len[v]],
                            bi, bj, bd)
            else:
                if sizes[u] >= sizes[v]:
                    w = u
                    o = v
                else:
                    w = v
                    o = u
                w1 = child1[w]
                w2 = child2[w]
                bi = -1
                bj = -1
                bd = INF
                for s in range(3):
                    if s == 0:
                        a, b = w1, o
                    elif s == 1:
                        a, b = w2, o
                    else:
                        a, b = w1, w2
                    if a > b:
                        a, b = b, a
                    q = a * tri_h - (a * (a - 1)) // 2 + (b - a)
                    v2 = out_d2[q]
                    i2 = out_i[q]
                    j2 = out_j[q]
                    if v2 < bd or (v2 == bd and i2 >= 0 and (i2 < bi or (i2 == bi and j2 < bj))):
                        bd = v2
                        bi = i2
                        bj = j2
            q = u * tri_h - (u * (u - 1)) // 2 + (v - u)
            out_i[q] = bi
            out_j[q] = bj
            out_d2[q] = bd


def _pair_best_seeded_np(xs, ids, si, sj, sd2):
    k = xs.shape[0]
    bi, bj, bd = si, sj, sd2
    if k < 2:
        return bi, bj, bd
    ax = _widest_axis_np(xs)
    order = np.argsort(xs[:, ax], kind="stable")
    xs = np.ascontiguousarray(xs[order])
    ids = ids[order]
    x0 = xs[:, ax]
    m = xs.shape[1]
    for i in range(1, k):
        hi = i
        while hi > 0:
            lo = max(0, hi - _BLOCK)
            dx = x0[i] - x0[lo:hi]
            dx2 = dx * dx
            if dx2.min() > bd:
                break
            ok = np.flatnonzero(dx2 <= bd)
            if ok.size:
                rows = lo + ok
                d2 = np.zeros(rows.size)
                for c in range(m):
                    d2 += (xs[i, c] - xs[rows, c]) ** 2
                pj = np.full(rows.size, ids[i])
                bi, bj, bd = _lex_best_np(d2, ids[rows], pj, bi, bj, bd)
            hi = lo
    return bi, bj, bd


def _phi_table_np(order, us, vs, sizes, child1, child2, band_start, band_len,
                  band_xs, band_ids, split_cap, tri_h,
                  out_i, out_j, out_d2):
    def tri(a, b):
        return a * tri_h - (a * (a - 1)) // 2 + (b - a)

    h = sizes.shape[0]
    intra = [(-1, -1, INF)] * h
    boxes = [None] * h
    for u in range(h):
        sa, l = band_start[u], band_len[u]
        if sa < 0:
            continue
        blk = band_xs[sa:sa + l]
        intra[u] = _pair_best_np(blk, band_ids[sa:sa + l])
        boxes[u] = (blk.min(axis=0), blk.max(axis=0))

    def lex_better(i2, j2, v2, bi, bj, bd):
        return v2 < bd or (v2 == bd and i2 >= 0 and (i2 < bi or (i2 == bi and j2 < bj)))

    for p in order:
        u = int(us[p])
        v = int(vs[p])
        if sizes[u] < split_cap and sizes[v] < split_cap:
            bi, bj, bd = intra[u]
            if u != v:
                i2, j2, v2 = intra[v]
                if lex_better(i2, j2, v2, bi, bj, bd):
                    bi, bj, bd = i2, j2, v2
                (lo_u, hi_u), (lo_v, hi_v) = boxes[u], boxes[v]
                g = np.maximum(np.maximum(lo_u - hi_v, lo_v - hi_u), 0.0)
                gap2 = float((g * g).sum())
                if not gap2 > bd:
                    sa, la = band_start[u], band_len[u]
                    sb, lb = band_start[v], band_len[v]
                    xs = np.ascontiguousarray(
                        np.concatenate([band_xs[sa:sa + la], band_xs[sb:sb + lb]]))
                    ids = np.concatenate([band_ids[sa:sa + la], band_ids[sb:sb + lb]])
                    bi, bj, bd = _pair_best_seeded_np(xs, ids, bi, bj, bd)
        else:
            w, o = (u, v) if sizes[u] >= sizes[v] else (v, u)
            w1, w2 = int(child1[w]), int(child2[w])
            cand = [(min(w1, o), max(w1, o)), (min(w2, o), max(w2, o)), (w1, w2)]
            bi, bj, bd = -1, -1, INF
            for a, b in cand:
                q = tri(a, b)
                if lex_better(int(out_i[q]), int(out_j[q]), out_d2[q], bi, bj, bd):
                    bd, bi, bj = out_d2[q], int(out_i[q]), int(out_j[q])
        q = tri(u, v)
        out_i[q] = bi
        out_j[q] = bj
        out_d2[q] = bd


# ---------------------------------------------------------------------------
# active selection
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    pair_scan = _pair_scan_nb
    pair_best = _pair_best_nb
    pair_best_two = _pair_best_two_nb
    nearest_among = _nearest_among_nb
    box_mask = _box_mask_nb
    polytope_mask = _polytope_mask_nb
    ball_mask = _ball_mask_nb
    linear_form = _linear_form_nb
    forms_cross_box = _forms_cross_box_nb
    best_entry = _best_entry_nb
    phi_table = _phi_table_nb
    KERNEL_PATH = "numba"
else:
    pair_scan = _pair_scan_np
    pair_best = _pair_best_np
    pair_best_two = _pair_best_two_np
    nearest_among = _nearest_among_np
    box_mask = _box_mask_np
    polytope_mask = _polytope_mask_np
    ball_mask = _ball_mask_np
    linear_form = _linear_form_np
    forms_cross_box = _forms_cross_box_np
    best_entry = _best_entry_np
    phi_table = _phi_table_np
    KERNEL_PATH = "numpy"


def warmup():
    """Force JIT compilation of the full kernel set (no-op on the numpy path)."""
    xs = np.array([[0.0, 0.0], [1.0, 0.5], [0.25, 0.25]])
    ids = np.arange(3, dtype=np.int64)
    pair_scan(xs, ids)
    pair_best(xs, ids)
    pair_best_two(xs[:2], ids[:2], xs[2:], ids[2:])
    nearest_among(xs, ids, xs[0], 0)
    lo = np.zeros(2)
    hi = np.ones(2)
    box_mask(xs, lo, hi)
    polytope_mask(xs, np.array([[1.0, 1.0]]), np.array([1.0]))
    ball_mask(xs, lo, 1.0)
    linear_form(xs, np.ones(2), -0.5)
    forms_cross_box(np.array([[1.0, 1.0]]), np.array([-0.5]), lo, hi)
    best_entry(np.array([1.0, 1.0]), np.array([0, 1], dtype=np.int64),
               np.array([2, 3], dtype=np.int64))
