"""Pure numpy fallback for the coordinate-search kernel.

Mirrors the semantics of the compiled _power_ratio module step for step:
same candidate order, same strict-improvement tie-breaking, same refresh
policy.  Summation order differs (numpy uses pairwise sums), so results
agree with the compiled kernel to roughly 1e-12 relative rather than
bit for bit.
"""

import numpy as np


def _pw(v: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        return v
    if p == 2.0:
        return v * v
    if p == 1.5:
        return v * np.sqrt(v)
    return v**p


def refine_ratio(A, w_num, w_den, p, c0, maximize, max_iter, rel_tol, step_mags):
    """Greedy coordinate line search on the unit coefficient sphere.

    Returns (value, c); see the compiled twin for the contract.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    w_num = np.asarray(w_num, dtype=np.float64)
    w_den = np.asarray(w_den, dtype=np.float64)
    m, n = A.shape
    if c0.shape[0] != n or w_num.shape[0] != m or w_den.shape[0] != m:
        raise ValueError("kernel input shapes disagree")

    c = np.array(c0, dtype=np.float64)
    nv = np.sqrt(np.dot(c, c))
    if nv == 0.0:
        raise ValueError("zero start vector")
    c /= nv

    # candidate order: +mag, -mag for each magnitude, matching the C loop
    ts = np.empty(2 * step_mags.shape[0])
    ts[0::2] = step_mags
    ts[1::2] = -step_mags

    def ratio(yv):
        v = _pw(np.abs(yv), p)
        den = float(np.dot(w_den, v))
        if den <= 0.0:
            return 0.0, den
        return float(np.dot(w_num, v)) / den, den

    y = A @ c
    r, den = ratio(y)
    if den <= 0.0:
        raise ValueError("denominator vanishes at the start vector")

    sign = 1.0 if maximize else -1.0
    for _ in range(max_iter):
        r_prev = r
        for k in range(n):
            V = _pw(np.abs(y[None, :] + ts[:, None] * A[:, k][None, :]), p)
            nums = V @ w_num
            dens = V @ w_den
            ok = dens > 0.0
            rs = np.full(ts.shape[0], -np.inf)
            np.divide(nums, dens, out=rs, where=ok)
            rs[~ok] = -sign * np.inf
            idx = int(np.argmax(sign * rs))
            if sign * rs[idx] > sign * r:
                c[k] += ts[idx]
                c /= np.sqrt(np.dot(c, c))
                y = A @ c
                r, den = ratio(y)
        ref = max(abs(r_prev), 1e-300)
        if abs(r - r_prev) <= rel_tol * ref:
            break

    return float(r), c
