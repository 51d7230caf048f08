"""Pure-Python kernels; the reference the compiled ``_core`` must reproduce.

Parameter vector layout: lam, sigma, c, q, alpha, y3, d3, y4a, y4b, reversing.
Region codes: 0=R1, 1=R3, 2=R4, 3=R5, -1=escape band, -2=outside the square.
"""
import math

import numpy as np

STATUS_OK = 0
STATUS_ESCAPED = 1
STATUS_BUDGET = 2
# Newton gives up once an iterate is farther than this from the square's centre
BOX = 1e6


def _strips(pv):
    sig = pv[1]
    return ((0.0, 1.0 / sig), (pv[5], pv[5] + 1.0 / sig), (pv[7], pv[8]),
            (1.0 - 2.0 / (3.0 * sig), 1.0))


def region_code(pv, x, y):
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        return -2
    strips = _strips(pv)
    for r in (3, 2, 1, 0):
        lo, hi = strips[r]
        if lo <= y <= hi:
            return r
    return -1


def branch(pv, r, x, y):
    """Image and Jacobian entries (j11, j12, j21, j22) of branch ``r``."""
    lam, sig = pv[0], pv[1]
    if r == 0:
        return lam * x, sig * y, lam, 0.0, 0.0, sig
    if r == 1:
        return lam * x + pv[6], sig * (y - pv[5]), lam, 0.0, 0.0, sig
    if r == 3:
        if pv[9] != 0.0:
            return 1.0 - lam * x, sig * (1.0 - y), -lam, 0.0, 0.0, -sig
        return lam * x + (1.0 - lam), sig * y - (sig - 1.0), lam, 0.0, 0.0, sig
    c, q, a = pv[2], pv[3], pv[4]
    t = y - 0.5 * (pv[7] + pv[8])
    return q + a * t, c * a * a * t * t - lam * x, 0.0, a, -lam, 2.0 * c * a * a * t


def compose(codes, pv, x, y):
    """Apply the branches of ``codes`` in order; returns x, y and the product
    Jacobian as a flat 4-tuple."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    for r in codes:
        x, y, a11, a12, a21, a22 = branch(pv, r, x, y)
        m11, m12, m21, m22 = (a11 * m11 + a12 * m21, a11 * m12 + a12 * m22,
                              a21 * m11 + a22 * m21, a21 * m12 + a22 * m22)
    return x, y, (m11, m12, m21, m22)


def segments(codes, pv):
    """Collapse each run of affine symbols into one affine map.

    Returns a float array with one row per segment: ``(1, 0, 0, 0, 0)`` for a
    fold step, else ``(0, ax, bx, ay, by)`` for ``(x, y) -> (ax x + bx, ay y + by)``.
    Both kernels read the same rows, so their Newton iterates agree bit for bit.
    """
    lam, sig = pv[0], pv[1]
    coeff = {0: (lam, 0.0, sig, 0.0), 1: (lam, pv[6], sig, -sig * pv[5])}
    coeff[3] = (-lam, 1.0, -sig, sig) if pv[9] != 0.0 else (lam, 1.0 - lam, sig, -(sig - 1.0))
    rows = []
    run = None
    for r in codes:
        r = int(r)
        if r == 2:
            if run is not None:
                rows.append(run)
                run = None
            rows.append((1.0, 0.0, 0.0, 0.0, 0.0))
            continue
        a1, b1, a2, b2 = coeff[r]
        if run is None:
            run = (0.0, a1, b1, a2, b2)
        else:
            _, ax, bx, ay, by = run
            run = (0.0, a1 * ax, a1 * bx + b1, a2 * ay, a2 * by + b2)
    if run is not None:
        rows.append(run)
    return np.array(rows, dtype=np.float64)


def _seg_f(segs, pv, x, y):
    for fold, ax, bx, ay, by in segs:
        if fold != 0.0:
            t = y - 0.5 * (pv[7] + pv[8])
            x, y = pv[3] + pv[4] * t, pv[2] * pv[4] * pv[4] * t * t - pv[0] * x
        else:
            x, y = ax * x + bx, ay * y + by
    return x, y


def _seg_fj(segs, pv, x, y):
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    lam, a = pv[0], pv[4]
    for fold, ax, bx, ay, by in segs:
        if fold != 0.0:
            t = y - 0.5 * (pv[7] + pv[8])
            d = 2.0 * pv[2] * a * a * t
            x, y = pv[3] + a * t, pv[2] * a * a * t * t - lam * x
            m11, m12, m21, m22 = (a * m21, a * m22,
                                  -lam * m11 + d * m21, -lam * m12 + d * m22)
        else:
            x, y = ax * x + bx, ay * y + by
            m11, m12, m21, m22 = ax * m11, ax * m12, ay * m21, ay * m22
    return x, y, (m11, m12, m21, m22)


def _newton(segs, pv, x, y, max_iter, max_halvings, box):
    fx, fy, m = _seg_fj(segs, pv, x, y)
    fx -= x
    fy -= y
    fn = max(abs(fx), abs(fy))
    for _ in range(max_iter):
        a11, a12, a21, a22 = m[0] - 1.0, m[1], m[2], m[3] - 1.0
        det = a11 * a22 - a12 * a21
        if det == 0.0 or not math.isfinite(det):
            return x, y, fn, False
        dx = (-fx * a22 + fy * a12) / det
        dy = (-fy * a11 + fx * a21) / det
        if max(abs(dx), abs(dy)) <= 1e-15 * (1.0 + max(abs(x), abs(y))):
            return x, y, fn, True
        t = 1.0
        for _h in range(max_halvings + 1):
            nx, ny = x + t * dx, y + t * dy
            gx, gy = _seg_f(segs, pv, nx, ny)
            gx -= nx
            gy -= ny
            gn = max(abs(gx), abs(gy))
            if gn < fn:
                break
            t *= 0.5
        else:
            # no decrease: either converged to rounding level or stuck
            small = max(abs(dx), abs(dy)) <= 1e-12 * (1.0 + max(abs(x), abs(y)))
            return x, y, fn, small
        x, y, fn = nx, ny, gn
        if abs(x - 0.5) > box or abs(y - 0.5) > box:
            return x, y, fn, False
        if t * max(abs(dx), abs(dy)) <= 1e-15 * (1.0 + max(abs(x), abs(y))):
            return x, y, fn, True
        fx, fy, m = _seg_fj(segs, pv, x, y)
        fx -= x
        fy -= y
    return x, y, fn, False


def polish(codes, pv, x, y, sweeps=3):
    """Multiple-shooting refinement of a single-shooting solution.

    Returns the k orbit points (k x 2 array) and the largest per-step residual
    ``|branch(p_i) - p_{i+1}|`` (max norm).
    """
    k = len(codes)
    px = [0.0] * k
    py = [0.0] * k
    px[0], py[0] = x, y
    for i in range(k - 1):
        px[i + 1], py[i + 1] = branch(pv, codes[i], px[i], py[i])[:2]
    res = 0.0
    for _ in range(sweeps + 1):
        rx = [0.0] * k
        ry = [0.0] * k
        jac = []
        res = 0.0
        for i in range(k):
            bx, by, j11, j12, j21, j22 = branch(pv, codes[i], px[i], py[i])
            nxt = (i + 1) % k
            rx[i] = bx - px[nxt]
            ry[i] = by - py[nxt]
            res = max(res, abs(rx[i]), abs(ry[i]))
            jac.append((j11, j12, j21, j22))
        if res == 0.0:
            break
        # delta_{i+1} = J_i delta_i + r_i around the cycle
        a11, a12, a21, a22 = 1.0, 0.0, 0.0, 1.0
        bx, by = 0.0, 0.0
        for i in range(k):
            j11, j12, j21, j22 = jac[i]
            a11, a12, a21, a22 = (j11 * a11 + j12 * a21, j11 * a12 + j12 * a22,
                                  j21 * a11 + j22 * a21, j21 * a12 + j22 * a22)
            bx, by = j11 * bx + j12 * by + rx[i], j21 * bx + j22 * by + ry[i]
        c11, c12, c21, c22 = 1.0 - a11, -a12, -a21, 1.0 - a22
        det = c11 * c22 - c12 * c21
        if det == 0.0 or not math.isfinite(det):
            break
        dx = (bx * c22 - by * c12) / det
        dy = (by * c11 - bx * c21) / det
        for i in range(k):
            ndx = jac[i][0] * dx + jac[i][1] * dy + rx[i]
            ndy = jac[i][2] * dx + jac[i][3] * dy + ry[i]
            px[i] += dx
            py[i] += dy
            dx, dy = ndx, ndy
    out = np.empty((k, 2))
    out[:, 0] = px
    out[:, 1] = py
    return out, res


def in_strip_interior(pv, r, x, y, margin):
    """Strip membership, strict by ``margin`` on edges that border the escape
    band; edges lying on the boundary of the unit square stay closed."""
    lo, hi = _strips(pv)[r]
    lo = lo - 1e-12 if lo <= 0.0 else lo + margin
    hi = hi + 1e-12 if hi >= 1.0 else hi - margin
    return -1e-12 <= x <= 1.0 + 1e-12 and lo <= y <= hi


def solve_word(codes, pv, seeds, max_iter=200, max_halvings=30,
               margin=1e-9, res_tol=1e-10, dedup_tol=1e-9, box=BOX):
    """Damped Newton on ``Phi^k(p) - p`` from every seed.

    Returns ``(orbits, residuals, n_converged)`` where ``orbits`` has shape
    (n_solutions, k, 2): distinct, polished, in-region solutions in seed
    order.
    """
    codes = [int(c) for c in codes]
    pv = [float(v) for v in pv]
    k = len(codes)
    found = []
    resid = []
    n_conv = 0
    segs = [tuple(row) for row in segments(codes, pv)]
    for sx, sy in np.asarray(seeds, dtype=float):
        x, y, fn, ok = _newton(segs, pv, float(sx), float(sy), max_iter, max_halvings, box)
        if not ok:
            continue
        n_conv += 1
        if any(abs(x - o[0, 0]) < dedup_tol and abs(y - o[0, 1]) < dedup_tol for o in found):
            continue
        pts, res = polish(codes, pv, x, y)
        if not res < res_tol:
            continue
        if not all(in_strip_interior(pv, codes[i], pts[i, 0], pts[i, 1], margin)
                   for i in range(k)):
            continue
        if any(np.max(np.abs(pts[0] - o[0])) < dedup_tol for o in found):
            continue
        found.append(pts)
        resid.append(res)
    if found:
        orbits = np.stack(found)
    else:
        orbits = np.empty((0, k, 2))
    return orbits, np.array(resid, dtype=float), n_conv


def first_return_batch(pv, xs, ys, max_iter=1000):
    """Follow each start until the iterate after an R4 visit.

    Returns arrays ``n, x_end, y_end, x_prev, y_prev, status``; ``x_prev`` and
    ``y_prev`` locate the R4 point that produced the return.
    """
    pv = [float(v) for v in pv]
    m = len(xs)
    n_out = np.zeros(m, dtype=np.int64)
    xe = np.full(m, np.nan)
    ye = np.full(m, np.nan)
    xp = np.full(m, np.nan)
    yp = np.full(m, np.nan)
    st = np.zeros(m, dtype=np.int64)
    for j in range(m):
        x, y = float(xs[j]), float(ys[j])
        n = 0
        status = STATUS_BUDGET
        while n < max_iter:
            r = region_code(pv, x, y)
            if r < 0:
                status = STATUS_ESCAPED
                break
            nx, ny = branch(pv, r, x, y)[:2]
            n += 1
            if r == 2:
                if region_code(pv, nx, ny) < 0:
                    status = STATUS_ESCAPED
                else:
                    status = STATUS_OK
                    xp[j], yp[j], xe[j], ye[j] = x, y, nx, ny
                break
            x, y = nx, ny
        n_out[j] = n
        st[j] = status
    return n_out, xe, ye, xp, yp, st
