# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics identical to ``_core_py``."""
import numpy as np

from . import _core_py
cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()

STATUS_OK = 0
STATUS_ESCAPED = 1
STATUS_BUDGET = 2
BOX = 1e6


cdef struct Par:
    double lam, sig, c, q, a, y3, d3, y4a, y4b, yc
    bint rev
    double lo[4]
    double hi[4]


cdef Par _par(double[::1] pv) noexcept:
    cdef Par p
    p.lam = pv[0]; p.sig = pv[1]; p.c = pv[2]; p.q = pv[3]; p.a = pv[4]
    p.y3 = pv[5]; p.d3 = pv[6]; p.y4a = pv[7]; p.y4b = pv[8]
    p.rev = pv[9] != 0.0
    p.yc = 0.5 * (p.y4a + p.y4b)
    p.lo[0] = 0.0; p.hi[0] = 1.0 / p.sig
    p.lo[1] = p.y3; p.hi[1] = p.y3 + 1.0 / p.sig
    p.lo[2] = p.y4a; p.hi[2] = p.y4b
    p.lo[3] = 1.0 - 2.0 / (3.0 * p.sig); p.hi[3] = 1.0
    return p


cdef inline int _region(Par* p, double x, double y) noexcept nogil:
    cdef int r
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        return -2
    for r in range(3, -1, -1):
        if p.lo[r] <= y <= p.hi[r]:
            return r
    return -1


cdef inline void _branch(Par* p, int r, double x, double y, double* out) noexcept nogil:
    # out = x', y', j11, j12, j21, j22
    cdef double t
    if r == 0:
        out[0] = p.lam * x; out[1] = p.sig * y
        out[2] = p.lam; out[3] = 0.0; out[4] = 0.0; out[5] = p.sig
    elif r == 1:
        out[0] = p.lam * x + p.d3; out[1] = p.sig * (y - p.y3)
        out[2] = p.lam; out[3] = 0.0; out[4] = 0.0; out[5] = p.sig
    elif r == 3:
        if p.rev:
            out[0] = 1.0 - p.lam * x; out[1] = p.sig * (1.0 - y)
            out[2] = -p.lam; out[3] = 0.0; out[4] = 0.0; out[5] = -p.sig
        else:
            out[0] = p.lam * x + (1.0 - p.lam); out[1] = p.sig * y - (p.sig - 1.0)
            out[2] = p.lam; out[3] = 0.0; out[4] = 0.0; out[5] = p.sig
    else:
        t = y - p.yc
        out[0] = p.q + p.a * t
        out[1] = p.c * p.a * p.a * t * t - p.lam * x
        out[2] = 0.0; out[3] = p.a; out[4] = -p.lam
        out[5] = 2.0 * p.c * p.a * p.a * t


cdef inline void _compose(Par* p, const int* codes, Py_ssize_t k, double x, double y,
                          double* out) noexcept nogil:
    # out = x', y', m11, m12, m21, m22
    cdef double b[6]
    cdef double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0, n11, n12, n21, n22
    cdef Py_ssize_t i
    for i in range(k):
        _branch(p, codes[i], x, y, b)
        x = b[0]; y = b[1]
        n11 = b[2] * m11 + b[3] * m21
        n12 = b[2] * m12 + b[3] * m22
        n21 = b[4] * m11 + b[5] * m21
        n22 = b[4] * m12 + b[5] * m22
        m11 = n11; m12 = n12; m21 = n21; m22 = n22
    out[0] = x; out[1] = y; out[2] = m11; out[3] = m12; out[4] = m21; out[5] = m22


cdef inline double _norm(double a, double b) noexcept nogil:
    # same NaN behaviour as Python's max(abs(a), abs(b))
    a = fabs(a); b = fabs(b)
    return b if b > a else a


cdef inline void _seg_f(Par* p, const double* seg, Py_ssize_t ns, double x, double y,
                        double* out) noexcept nogil:
    cdef Py_ssize_t i
    cdef const double* g
    cdef double t, nx
    for i in range(ns):
        g = seg + 5 * i
        if g[0] != 0.0:
            t = y - p.yc
            nx = p.q + p.a * t
            y = p.c * p.a * p.a * t * t - p.lam * x
            x = nx
        else:
            x = g[1] * x + g[2]
            y = g[3] * y + g[4]
    out[0] = x; out[1] = y


cdef inline void _seg_fj(Par* p, const double* seg, Py_ssize_t ns, double x, double y,
                         double* out) noexcept nogil:
    cdef Py_ssize_t i
    cdef const double* g
    cdef double t, d, nx, m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0, n11, n12
    for i in range(ns):
        g = seg + 5 * i
        if g[0] != 0.0:
            t = y - p.yc
            d = 2.0 * p.c * p.a * p.a * t
            nx = p.q + p.a * t
            y = p.c * p.a * p.a * t * t - p.lam * x
            x = nx
            n11 = p.a * m21; n12 = p.a * m22
            m21 = -p.lam * m11 + d * m21
            m22 = -p.lam * m12 + d * m22
            m11 = n11; m12 = n12
        else:
            x = g[1] * x + g[2]
            y = g[3] * y + g[4]
            m11 = g[1] * m11; m12 = g[1] * m12
            m21 = g[3] * m21; m22 = g[3] * m22
    out[0] = x; out[1] = y; out[2] = m11; out[3] = m12; out[4] = m21; out[5] = m22


cdef bint _newton(Par* p, const double* seg, Py_ssize_t ns, double* xy, int max_iter,
                  int max_halvings, double box) noexcept nogil:
    cdef double o[6]
    cdef double x = xy[0], y = xy[1], fx, fy, fn, gx, gy, gn
    cdef double a11, a12, a21, a22, det, dx, dy, t, nx = 0.0, ny = 0.0
    cdef int it, h
    cdef bint dec
    _seg_fj(p, seg, ns, x, y, o)
    fx = o[0] - x; fy = o[1] - y; fn = _norm(fx, fy)
    for it in range(max_iter):
        a11 = o[2] - 1.0; a12 = o[3]; a21 = o[4]; a22 = o[5] - 1.0
        det = a11 * a22 - a12 * a21
        if det == 0.0 or not isfinite(det):
            xy[0] = x; xy[1] = y
            return False
        dx = (-fx * a22 + fy * a12) / det
        dy = (-fy * a11 + fx * a21) / det
        if _norm(dx, dy) <= 1e-15 * (1.0 + _norm(x, y)):
            xy[0] = x; xy[1] = y
            return True
        t = 1.0
        dec = False
        for h in range(max_halvings + 1):
            nx = x + t * dx; ny = y + t * dy
            _seg_f(p, seg, ns, nx, ny, o)
            gx = o[0] - nx; gy = o[1] - ny; gn = _norm(gx, gy)
            if gn < fn:
                dec = True
                break
            t *= 0.5
        if not dec:
            xy[0] = x; xy[1] = y
            return _norm(dx, dy) <= 1e-12 * (1.0 + _norm(x, y))
        x = nx; y = ny; fn = gn
        if fabs(x - 0.5) > box or fabs(y - 0.5) > box:
            xy[0] = x; xy[1] = y
            return False
        if t * _norm(dx, dy) <= 1e-15 * (1.0 + _norm(x, y)):
            xy[0] = x; xy[1] = y
            return True
        _seg_fj(p, seg, ns, x, y, o)
        fx = o[0] - x; fy = o[1] - y
    xy[0] = x; xy[1] = y
    return False


cdef double _polish(Par* p, const int* codes, Py_ssize_t k, double* pts, double* jac,
                    double* r, int sweeps) noexcept nogil:
    # pts is k x 2, jac k x 4, r k x 2, all row-major
    cdef Py_ssize_t i, nxt
    cdef double b[6]
    cdef double res = 0.0, a11, a12, a21, a22, n11, n12, n21, n22, bx, by, nbx
    cdef double c11, c12, c21, c22, det, dx, dy, ndx, ndy
    cdef int s
    for i in range(k - 1):
        _branch(p, codes[i], pts[2 * i], pts[2 * i + 1], b)
        pts[2 * (i + 1)] = b[0]; pts[2 * (i + 1) + 1] = b[1]
    for s in range(sweeps + 1):
        res = 0.0
        for i in range(k):
            _branch(p, codes[i], pts[2 * i], pts[2 * i + 1], b)
            nxt = i + 1
            if nxt == k:
                nxt = 0
            r[2 * i] = b[0] - pts[2 * nxt]; r[2 * i + 1] = b[1] - pts[2 * nxt + 1]
            if fabs(r[2 * i]) > res:
                res = fabs(r[2 * i])
            if fabs(r[2 * i + 1]) > res:
                res = fabs(r[2 * i + 1])
            jac[4 * i] = b[2]; jac[4 * i + 1] = b[3]; jac[4 * i + 2] = b[4]; jac[4 * i + 3] = b[5]
        if res == 0.0:
            break
        a11 = 1.0; a12 = 0.0; a21 = 0.0; a22 = 1.0; bx = 0.0; by = 0.0
        for i in range(k):
            n11 = jac[4 * i] * a11 + jac[4 * i + 1] * a21
            n12 = jac[4 * i] * a12 + jac[4 * i + 1] * a22
            n21 = jac[4 * i + 2] * a11 + jac[4 * i + 3] * a21
            n22 = jac[4 * i + 2] * a12 + jac[4 * i + 3] * a22
            a11 = n11; a12 = n12; a21 = n21; a22 = n22
            nbx = jac[4 * i] * bx + jac[4 * i + 1] * by + r[2 * i]
            by = jac[4 * i + 2] * bx + jac[4 * i + 3] * by + r[2 * i + 1]
            bx = nbx
        c11 = 1.0 - a11; c12 = -a12; c21 = -a21; c22 = 1.0 - a22
        det = c11 * c22 - c12 * c21
        if det == 0.0 or not isfinite(det):
            break
        dx = (bx * c22 - by * c12) / det
        dy = (by * c11 - bx * c21) / det
        for i in range(k):
            ndx = jac[4 * i] * dx + jac[4 * i + 1] * dy + r[2 * i]
            ndy = jac[4 * i + 2] * dx + jac[4 * i + 3] * dy + r[2 * i + 1]
            pts[2 * i] += dx
            pts[2 * i + 1] += dy
            dx = ndx; dy = ndy
    return res


cdef inline bint _interior(Par* p, int r, double x, double y, double margin) noexcept nogil:
    cdef double lo = p.lo[r], hi = p.hi[r]
    if lo <= 0.0:
        lo = lo - 1e-12
    else:
        lo = lo + margin
    if hi >= 1.0:
        hi = hi + 1e-12
    else:
        hi = hi - margin
    return -1e-12 <= x <= 1.0 + 1e-12 and lo <= y <= hi


def region_code(double[::1] pv, double x, double y):
    cdef Par p = _par(pv)
    return _region(&p, x, y)


def compose(codes, double[::1] pv, double x, double y):
    cdef int[::1] cv = np.ascontiguousarray(codes, dtype=np.intc)
    cdef Par p = _par(pv)
    cdef double o[6]
    _compose(&p, &cv[0], cv.shape[0], x, y, o)
    return o[0], o[1], (o[2], o[3], o[4], o[5])


def polish(codes, double[::1] pv, double x, double y, int sweeps=3):
    cdef int[::1] cv = np.ascontiguousarray(codes, dtype=np.intc)
    cdef Par p = _par(pv)
    k = cv.shape[0]
    pts = np.zeros((k, 2))
    cdef double[:, ::1] pm = pts
    cdef double[:, ::1] jac = np.zeros((k, 4))
    cdef double[:, ::1] r = np.zeros((k, 2))
    pm[0, 0] = x; pm[0, 1] = y
    res = _polish(&p, &cv[0], k, &pm[0, 0], &jac[0, 0], &r[0, 0], sweeps)
    return pts, res


def solve_word(codes, double[::1] pv, seeds, int max_iter=200, int max_halvings=30,
               double margin=1e-9, double res_tol=1e-10, double dedup_tol=1e-9,
               double box=BOX):
    cdef int[::1] cv = np.ascontiguousarray(codes, dtype=np.intc)
    cdef double[:, ::1] sd = np.ascontiguousarray(seeds, dtype=np.float64)
    cdef double[:, ::1] sg = _core_py.segments(cv, pv)
    cdef Par p = _par(pv)
    cdef Py_ssize_t k = cv.shape[0], m = sd.shape[0], s, i, j, nfound = 0
    cdef double xy[2]
    cdef double res
    cdef bint ok, dup
    cdef int n_conv = 0
    out_np = np.zeros((m, k, 2))
    cdef double[:, :, ::1] out = out_np
    resid_np = np.zeros(m)
    cdef double[::1] resid = resid_np
    cdef double[:, ::1] jac = np.zeros((k, 4))
    cdef double[:, ::1] r = np.zeros((k, 2))
    with nogil:
        for s in range(m):
            xy[0] = sd[s, 0]; xy[1] = sd[s, 1]
            if not _newton(&p, &sg[0, 0], sg.shape[0], xy, max_iter, max_halvings, box):
                continue
            n_conv += 1
            dup = False
            for j in range(nfound):
                if fabs(xy[0] - out[j, 0, 0]) < dedup_tol and fabs(xy[1] - out[j, 0, 1]) < dedup_tol:
                    dup = True
                    break
            if dup:
                continue
            out[nfound, 0, 0] = xy[0]; out[nfound, 0, 1] = xy[1]
            res = _polish(&p, &cv[0], k, &out[nfound, 0, 0], &jac[0, 0], &r[0, 0], 3)
            if not res < res_tol:
                continue
            ok = True
            for i in range(k):
                if not _interior(&p, cv[i], out[nfound, i, 0], out[nfound, i, 1], margin):
                    ok = False
                    break
            if not ok:
                continue
            for j in range(nfound):
                if _norm(out[nfound, 0, 0] - out[j, 0, 0], out[nfound, 0, 1] - out[j, 0, 1]) < dedup_tol:
                    ok = False
                    break
            if not ok:
                continue
            resid[nfound] = res
            nfound += 1
    return out_np[:nfound].copy(), resid_np[:nfound].copy(), n_conv


def first_return_batch(double[::1] pv, xs, ys, int max_iter=1000):
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Par p = _par(pv)
    cdef Py_ssize_t m = xv.shape[0], j
    n_np = np.zeros(m, dtype=np.int64)
    xe_np = np.full(m, np.nan); ye_np = np.full(m, np.nan)
    xp_np = np.full(m, np.nan); yp_np = np.full(m, np.nan)
    st_np = np.zeros(m, dtype=np.int64)
    cdef long long[::1] nv = n_np
    cdef long long[::1] st = st_np
    cdef double[::1] xe = xe_np, ye = ye_np, xp = xp_np, yp = yp_np
    cdef double b[6]
    cdef double x, y
    cdef int n, rg, status
    with nogil:
        for j in range(m):
            x = xv[j]; y = yv[j]
            n = 0
            status = 2
            while n < max_iter:
                rg = _region(&p, x, y)
                if rg < 0:
                    status = 1
                    break
                _branch(&p, rg, x, y, b)
                n += 1
                if rg == 2:
                    if _region(&p, b[0], b[1]) < 0:
                        status = 1
                    else:
                        status = 0
                        xp[j] = x; yp[j] = y; xe[j] = b[0]; ye[j] = b[1]
                    break
                x = b[0]; y = b[1]
            nv[j] = n
            st[j] = status
    return n_np, xe_np, ye_np, xp_np, yp_np, st_np
