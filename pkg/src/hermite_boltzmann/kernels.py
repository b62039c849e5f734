"""Hot loops: tensor assembly and application of the quadratic form.

Each kernel exists twice, a numba-compiled loop and a numpy fallback.
Dispatch happens in :func:`assemble_entries` and :func:`quadratic_form` according to
:func:`hermite_boltzmann._accel.use_numba`.
"""
import numpy as np

from ._accel import njit, use_numba


@njit
def _rank3(a, b, c):
    d = a + b + c
    p = b + c
    return d * (d + 1) * (d + 2) // 6 + p * (p + 1) // 2 + c


@njit
def _assemble_numba(idx, gamma, a, inv_fact, pref, floor, capacity):
    n = idx.shape[0]
    out_k = np.empty(capacity, np.uint32)
    out_i = np.empty(capacity, np.uint32)
    out_j = np.empty(capacity, np.uint32)
    out_v = np.empty(capacity, np.float64)
    cnt = 0
    for k in range(n):
        k1, k2, k3 = idx[k, 0], idx[k, 1], idx[k, 2]
        pk = (k1 & 1) | ((k2 & 1) << 1) | ((k3 & 1) << 2)
        for i in range(n):
            i1, i2, i3 = idx[i, 0], idx[i, 1], idx[i, 2]
            for j in range(i, n):
                j1, j2, j3 = idx[j, 0], idx[j, 1], idx[j, 2]
                s1 = i1 + j1
                s2 = i2 + j2
                s3 = i3 + j3
                if ((s1 & 1) | ((s2 & 1) << 1) | ((s3 & 1) << 2)) != pk:
                    continue
                acc_ij = 0.0
                acc_ji = 0.0
                for p1 in range(min(s1, k1) + 1):
                    f1 = inv_fact[k1 - p1]
                    x1 = a[i1, j1, p1] * f1
                    y1 = a[j1, i1, p1] * f1
                    for p2 in range(min(s2, k2) + 1):
                        f2 = inv_fact[k2 - p2]
                        x2 = x1 * a[i2, j2, p2] * f2
                        y2 = y1 * a[j2, i2, p2] * f2
                        for p3 in range(min(s3, k3) + 1):
                            f3 = inv_fact[k3 - p3]
                            g = gamma[_rank3(s1 - p1, s2 - p2, s3 - p3),
                                      _rank3(k1 - p1, k2 - p2, k3 - p3)]
                            acc_ij += x2 * a[i3, j3, p3] * f3 * g
                            acc_ji += y2 * a[j3, i3, p3] * f3 * g
                val = 0.5 * pref[k1 + k2 + k3] * (acc_ij + acc_ji)
                if abs(val) > floor:
                    out_k[cnt] = k
                    out_i[cnt] = i
                    out_j[cnt] = j
                    out_v[cnt] = val
                    cnt += 1
    return out_k[:cnt], out_i[:cnt], out_j[:cnt], out_v[:cnt]


def _rank_np(t):
    return _rank_rows(t[..., 0], t[..., 1], t[..., 2])


def _rank_rows(a, b, c):
    d = a + b + c
    p = b + c
    return d * (d + 1) * (d + 2) // 6 + p * (p + 1) // 2 + c


def _assemble_numpy(idx, gamma, a, inv_fact, pref, floor):
    n = idx.shape[0]
    iu, ju = np.triu_indices(n)
    I = idx[iu]
    J = idx[ju]
    S = I + J
    spar = (S[:, 0] & 1) | ((S[:, 1] & 1) << 1) | ((S[:, 2] & 1) << 2)
    ks, is_, js, vs = [], [], [], []
    for k in range(n):
        kt = idx[k]
        pk = (kt[0] & 1) | ((kt[1] & 1) << 1) | ((kt[2] & 1) << 2)
        sel = np.nonzero(spar == pk)[0]
        if sel.size == 0:
            continue
        Is, Js, Ss = I[sel], J[sel], S[sel]
        acc = np.zeros(sel.size)
        for p1 in range(kt[0] + 1):
            for p2 in range(kt[1] + 1):
                for p3 in range(kt[2] + 1):
                    p = np.array([p1, p2, p3])
                    ok = np.all(Ss >= p, axis=1)
                    if not ok.any():
                        continue
                    rows = np.nonzero(ok)[0]
                    jp = Ss[rows] - p
                    g = gamma[_rank_np(jp), _rank_rows(kt[0] - p1, kt[1] - p2, kt[2] - p3)]
                    w_ij = np.ones(rows.size)
                    w_ji = np.ones(rows.size)
                    for s in range(3):
                        w_ij *= a[Is[rows, s], Js[rows, s], p[s]]
                        w_ji *= a[Js[rows, s], Is[rows, s], p[s]]
                    fac = inv_fact[kt[0] - p1] * inv_fact[kt[1] - p2] * inv_fact[kt[2] - p3]
                    acc[rows] += fac * (w_ij + w_ji) * g
        vals = 0.5 * pref[kt.sum()] * acc
        keep = np.abs(vals) > floor
        ks.append(np.full(keep.sum(), k, dtype=np.uint32))
        is_.append(iu[sel][keep].astype(np.uint32))
        js.append(ju[sel][keep].astype(np.uint32))
        vs.append(vals[keep])
    if not ks:
        empty = np.zeros(0, np.uint32)
        return empty, empty, empty, np.zeros(0)
    return (np.concatenate(ks), np.concatenate(is_), np.concatenate(js),
            np.concatenate(vs))


def parity_capacity(idx):
    """Number of ``(k, i <= j)`` triples allowed by per-component parity."""
    par = (idx[:, 0] & 1) | ((idx[:, 1] & 1) << 1) | ((idx[:, 2] & 1) << 2)
    c = np.bincount(par, minlength=8).astype(np.int64)
    pairs = np.zeros(8, np.int64)
    for p in range(8):
        pairs[0] += c[p] * (c[p] + 1) // 2
        for q in range(p + 1, 8):
            pairs[p ^ q] += c[p] * c[q]
    return int(sum(c[p] * pairs[p] for p in range(8)))


def assemble_entries(idx, gamma, a, inv_fact, pref, floor, numba=None):
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if use_numba(numba):
        return _assemble_numba(idx, np.ascontiguousarray(gamma), np.ascontiguousarray(a),
                               np.ascontiguousarray(inv_fact), np.ascontiguousarray(pref),
                               float(floor), parity_capacity(idx))
    return _assemble_numpy(idx, gamma, a, inv_fact, pref, floor)


# -- quadratic form ------------------------------------------------------

@njit
def _quadratic_numba(n, ks, is_, js, vals, f, out):
    for e in range(vals.shape[0]):
        i = is_[e]
        j = js[e]
        if i == j:
            out[ks[e]] += vals[e] * f[i] * f[j]
        else:
            out[ks[e]] += 2.0 * vals[e] * f[i] * f[j]
    return out


def quadratic_form(n, ks, is_, js, vals, weights, f, numba=None):
    """``Q_k = sum_{i<=j} w_ij A_k^{ij} f_i f_j`` over the stored upper triangle.

    ``weights`` is the numpy-path factor array (1 on the diagonal, 2 off it);
    the numba path recomputes it on the fly.
    """
    f = np.ascontiguousarray(f, dtype=float)
    if use_numba(numba):
        return _quadratic_numba(n, ks, is_, js, vals, f, np.zeros(n))
    return np.bincount(ks, weights=weights * vals * f[is_] * f[js], minlength=n)
