# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: smooth/sliding steppers with event location, and the
pairwise shifted-distance matrices.  Mirrors fpe._pykernels exactly; see that
module for the semantics and status codes."""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

STATUS_LIMIT = 0
STATUS_SIGMA = 1
STATUS_DOMAIN = 2
STATUS_FOLD = 3
STATUS_STALL = 4
STATUS_STOPCOORD = 5

DEF P_X1 = 0
DEF P_X2 = 1
DEF P_Y1 = 2
DEF P_Y2 = 3
DEF P_F = 4
DEF P_FX = 5
DEF P_FY = 6


cdef struct Pack:
    const double* coefs
    const int* degx
    const int* degy
    const int* off
    const double* domain
    double speed_bound


cdef inline double _peval(Pack* pk, int which, double x, double y) noexcept nogil:
    cdef double out = 0.0, c
    cdef int k, m
    for k in range(pk.off[which], pk.off[which + 1]):
        c = pk.coefs[k]
        for m in range(pk.degx[k]):
            c *= x
        for m in range(pk.degy[k]):
            c *= y
        out += c
    return out


cdef inline void _field(Pack* pk, int field, double x, double y,
                        double* u, double* v) noexcept nogil:
    if field == 0:
        u[0] = _peval(pk, P_X1, x, y)
        v[0] = _peval(pk, P_X2, x, y)
    else:
        u[0] = _peval(pk, P_Y1, x, y)
        v[0] = _peval(pk, P_Y2, x, y)


cdef inline void _rk4(Pack* pk, int field, double x, double y, double h,
                      double* xo, double* yo) noexcept nogil:
    cdef double u1, v1, u2, v2, u3, v3, u4, v4
    _field(pk, field, x, y, &u1, &v1)
    _field(pk, field, x + 0.5 * h * u1, y + 0.5 * h * v1, &u2, &v2)
    _field(pk, field, x + 0.5 * h * u2, y + 0.5 * h * v2, &u3, &v3)
    _field(pk, field, x + h * u3, y + h * v3, &u4, &v4)
    xo[0] = x + h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
    yo[0] = y + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4)


cdef inline void _slide_vel(Pack* pk, double x, double y,
                            double* u, double* v) noexcept nogil:
    cdef double fx = _peval(pk, P_FX, x, y)
    cdef double fy = _peval(pk, P_FY, x, y)
    cdef double xf = fx * _peval(pk, P_X1, x, y) + fy * _peval(pk, P_X2, x, y)
    cdef double yf = fx * _peval(pk, P_Y1, x, y) + fy * _peval(pk, P_Y2, x, y)
    cdef double den = yf - xf
    if den == 0.0:
        den = 1e-300
    u[0] = (yf * _peval(pk, P_X1, x, y) - xf * _peval(pk, P_Y1, x, y)) / den
    v[0] = (yf * _peval(pk, P_X2, x, y) - xf * _peval(pk, P_Y2, x, y)) / den


cdef inline void _rk4_slide(Pack* pk, double x, double y, double h,
                            double* xo, double* yo) noexcept nogil:
    cdef double u1, v1, u2, v2, u3, v3, u4, v4
    _slide_vel(pk, x, y, &u1, &v1)
    _slide_vel(pk, x + 0.5 * h * u1, y + 0.5 * h * v1, &u2, &v2)
    _slide_vel(pk, x + 0.5 * h * u2, y + 0.5 * h * v2, &u3, &v3)
    _slide_vel(pk, x + h * u3, y + h * v3, &u4, &v4)
    xo[0] = x + h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
    yo[0] = y + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4)


cdef inline void _newton_project(Pack* pk, double* x, double* y, int iters) noexcept nogil:
    cdef double fv, gx, gy, g2
    cdef int k
    for k in range(iters):
        fv = _peval(pk, P_F, x[0], y[0])
        gx = _peval(pk, P_FX, x[0], y[0])
        gy = _peval(pk, P_FY, x[0], y[0])
        g2 = gx * gx + gy * gy
        if g2 == 0.0:
            break
        x[0] -= fv * gx / g2
        y[0] -= fv * gy / g2


cdef inline bint _in_domain(Pack* pk, double x, double y) noexcept nogil:
    return (pk.domain[0] <= x <= pk.domain[1]
            and pk.domain[2] <= y <= pk.domain[3])


cdef inline void _lie_pair(Pack* pk, double x, double y,
                           double* xf, double* yf) noexcept nogil:
    cdef double fx = _peval(pk, P_FX, x, y)
    cdef double fy = _peval(pk, P_FY, x, y)
    xf[0] = fx * _peval(pk, P_X1, x, y) + fy * _peval(pk, P_X2, x, y)
    yf[0] = fx * _peval(pk, P_Y1, x, y) + fy * _peval(pk, P_Y2, x, y)


cdef Pack _make_pack(const double[::1] coefs, const int[::1] degx,
                     const int[::1] degy, const int[::1] off,
                     const double[::1] domain, double speed_bound):
    cdef Pack pk
    pk.coefs = &coefs[0]
    pk.degx = &degx[0]
    pk.degy = &degy[0]
    pk.off = &off[0]
    pk.domain = &domain[0]
    pk.speed_bound = speed_bound
    return pk


def _pack_views(pack):
    return (np.ascontiguousarray(pack.coefs), np.ascontiguousarray(pack.degx),
            np.ascontiguousarray(pack.degy), np.ascontiguousarray(pack.off),
            np.ascontiguousarray(pack.domain), float(pack.speed_bound))


def flow_segment(pack, int field, double x0, double y0, double h,
                 double t_limit, grid_t, extra_t, double tol_f,
                 double tol_event, double touch_check):
    coefs, degx, degy, off, domain, speed = _pack_views(pack)
    cdef const double[::1] c_coefs = coefs
    cdef const int[::1] c_degx = degx
    cdef const int[::1] c_degy = degy
    cdef const int[::1] c_off = off
    cdef const double[::1] c_dom = domain
    cdef Pack pk = _make_pack(c_coefs, c_degx, c_degy, c_off, c_dom, speed)

    grid_arr = np.asarray(grid_t, dtype=np.float64)
    extra_arr = np.asarray(extra_t, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grid_xy = np.empty((grid_arr.shape[0], 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] extra_xy = np.empty((extra_arr.shape[0], 2))

    # merged targets, matching _pykernels._merge_targets ordering
    times, kinds, starts = _merged(grid_arr, extra_arr, t_limit)
    cdef const double[::1] c_times = times
    cdef const long[::1] c_kinds = kinds
    cdef const long[::1] c_starts = starts

    cdef double t = 0.0, x = x0, y = y0
    cdef double f_prev = _peval(&pk, P_F, x, y)
    cdef bint armed = fabs(f_prev) > 10.0 * tol_f
    cdef double tm2 = t, tm1 = t, xm2 = x, ym2 = y, xm1 = x, ym1 = y
    cdef double fm1 = f_prev, fm2
    cdef int ig = 0, ie = 0
    cdef Py_ssize_t ti, kk
    cdef double tgt, h_step, xn, yn, tn, f_new, te, xe, ye, tt, xt, yt, ft
    cdef int status = STATUS_LIMIT

    for ti in range(c_times.shape[0]):
        tgt = c_times[ti]
        while t < tgt:
            h_step = h if tgt - t > h else tgt - t
            xm2 = xm1; ym2 = ym1; tm2 = tm1
            xm1 = x; ym1 = y; tm1 = t
            fm2 = fm1
            fm1 = f_prev
            _rk4(&pk, field, x, y, h_step, &xn, &yn)
            tn = tgt if tgt - t <= h else t + h_step
            f_new = _peval(&pk, P_F, xn, yn)

            if armed and ((f_new > 0.0) != (f_prev > 0.0)):
                te = _bisect_sign(&pk, field, x, y, t, h_step, f_prev,
                                  tol_event, &xe, &ye)
                _newton_project(&pk, &xe, &ye, 2)
                return (grid_xy[:ig], extra_xy[:ie], STATUS_SIGMA, te, xe, ye)
            if (not armed) and fabs(f_new) > 10.0 * tol_f:
                armed = True
            if (armed and fabs(fm1) < touch_check and fabs(fm1) <= fabs(fm2)
                    and fabs(fm1) <= fabs(f_new) and t > tm2):
                tt = _refine_touch(&pk, field, xm2, ym2, tm2, tn - tm2,
                                   tol_event, &xt, &yt, &ft)
                if fabs(ft) <= tol_f:
                    _newton_project(&pk, &xt, &yt, 2)
                    return (grid_xy[:ig], extra_xy[:ie], STATUS_SIGMA, tt, xt, yt)
            x = xn; y = yn; t = tn; f_prev = f_new
            if not _in_domain(&pk, x, y):
                return (grid_xy[:ig], extra_xy[:ie], STATUS_DOMAIN, t, x, y)
        for kk in range(c_starts[ti], c_starts[ti + 1]):
            if c_kinds[kk] == 0:
                grid_xy[ig, 0] = x; grid_xy[ig, 1] = y; ig += 1
            elif c_kinds[kk] == 1:
                extra_xy[ie, 0] = x; extra_xy[ie, 1] = y; ie += 1
    return (grid_xy[:ig], extra_xy[:ie], status, t, x, y)


def slide_segment(pack, double x0, double y0, double h, double t_limit,
                  grid_t, extra_t, double tol_f, double tol_event,
                  int stop_axis=-1, double stop_val=0.0, int stop_dir=0):
    coefs, degx, degy, off, domain, speed = _pack_views(pack)
    cdef const double[::1] c_coefs = coefs
    cdef const int[::1] c_degx = degx
    cdef const int[::1] c_degy = degy
    cdef const int[::1] c_off = off
    cdef const double[::1] c_dom = domain
    cdef Pack pk = _make_pack(c_coefs, c_degx, c_degy, c_off, c_dom, speed)

    grid_arr = np.asarray(grid_t, dtype=np.float64)
    extra_arr = np.asarray(extra_t, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grid_xy = np.empty((grid_arr.shape[0], 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] extra_xy = np.empty((extra_arr.shape[0], 2))
    times, kinds, starts = _merged(grid_arr, extra_arr, t_limit)
    cdef const double[::1] c_times = times
    cdef const long[::1] c_kinds = kinds
    cdef const long[::1] c_starts = starts

    cdef double t = 0.0, x = x0, y = y0
    _newton_project(&pk, &x, &y, 2)
    cdef double xf, yf
    _lie_pair(&pk, x, y, &xf, &yf)
    cdef double q_prev = xf * yf
    cdef bint q_armed = q_prev < -1e-12
    cdef int ig = 0, ie = 0
    cdef double vmin = 1e-12 * (pk.speed_bound if pk.speed_bound > 1.0 else 1.0)
    cdef Py_ssize_t ti, kk
    cdef double tgt, h_step, u, v, xn, yn, tn, q_new, te, xe, ye, c_new, c0
    cdef int status = STATUS_LIMIT

    for ti in range(c_times.shape[0]):
        tgt = c_times[ti]
        while t < tgt:
            h_step = h if tgt - t > h else tgt - t
            _slide_vel(&pk, x, y, &u, &v)
            if u * u + v * v < vmin * vmin:
                return (grid_xy[:ig], extra_xy[:ie], STATUS_STALL, t, x, y)
            _rk4_slide(&pk, x, y, h_step, &xn, &yn)
            _newton_project(&pk, &xn, &yn, 1)
            tn = tgt if tgt - t <= h else t + h_step
            _lie_pair(&pk, xn, yn, &xf, &yf)
            q_new = xf * yf
            if q_armed and q_new > 1e-14:
                te = _bisect_fold(&pk, x, y, t, h_step, tol_event, &xe, &ye)
                return (grid_xy[:ig], extra_xy[:ie], STATUS_FOLD, te, xe, ye)
            if (not q_armed) and q_new < -1e-12:
                q_armed = True
            if stop_dir != 0:
                c_new = xn if stop_axis == 0 else yn
                if stop_dir * (c_new - stop_val) >= 0.0:
                    te = _bisect_coord(&pk, x, y, t, h_step, stop_axis,
                                       stop_val, tol_event, &xe, &ye)
                    return (grid_xy[:ig], extra_xy[:ie], STATUS_STOPCOORD, te, xe, ye)
            x = xn; y = yn; t = tn; q_prev = q_new
            if not _in_domain(&pk, x, y):
                return (grid_xy[:ig], extra_xy[:ie], STATUS_DOMAIN, t, x, y)
        for kk in range(c_starts[ti], c_starts[ti + 1]):
            if c_kinds[kk] == 0:
                grid_xy[ig, 0] = x; grid_xy[ig, 1] = y; ig += 1
            elif c_kinds[kk] == 1:
                extra_xy[ie, 0] = x; extra_xy[ie, 1] = y; ie += 1
    return (grid_xy[:ig], extra_xy[:ie], status, t, x, y)


def _merged(grid_arr, extra_arr, double t_limit):
    events = [(float(tv), 0) for tv in grid_arr] + [(float(tv), 1) for tv in extra_arr]
    events.append((t_limit, 2))
    events.sort(key=lambda e: (e[0], e[1]))
    times, kinds, starts = [], [], [0]
    for tv, kind in events:
        if times and times[-1] == tv:
            kinds.append(kind)
            starts[-1] += 1
        else:
            times.append(tv)
            kinds.append(kind)
            starts.append(starts[-1] + 1)
    return (np.asarray(times, dtype=np.float64),
            np.asarray(kinds, dtype=np.int64),
            np.asarray(starts, dtype=np.int64))


cdef double _bisect_sign(Pack* pk, int field, double x, double y, double t,
                         double h_step, double f_at_start, double tol_event,
                         double* xe, double* ye) noexcept nogil:
    cdef double lo = 0.0, hi = h_step, mid, xm, ym
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        _rk4(pk, field, x, y, mid, &xm, &ym)
        if (_peval(pk, P_F, xm, ym) > 0.0) == (f_at_start > 0.0):
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    _rk4(pk, field, x, y, mid, &xm, &ym)
    xe[0] = xm; ye[0] = ym
    return t + mid


cdef double _refine_touch(Pack* pk, int field, double x0, double y0, double t0,
                          double span, double tol_event,
                          double* xt, double* yt, double* ft) noexcept nogil:
    cdef double inv_phi = (sqrt(5.0) - 1.0) / 2.0
    cdef double lo = 0.0, hi = span
    cdef double a = hi - inv_phi * (hi - lo)
    cdef double b = lo + inv_phi * (hi - lo)
    cdef double fa, fb, xa, ya, xb, yb
    _rk4(pk, field, x0, y0, a, &xa, &ya)
    fa = fabs(_peval(pk, P_F, xa, ya))
    _rk4(pk, field, x0, y0, b, &xb, &yb)
    fb = fabs(_peval(pk, P_F, xb, yb))
    while hi - lo > tol_event:
        if fa < fb:
            hi = b; b = a; fb = fa
            xb = xa; yb = ya
            a = hi - inv_phi * (hi - lo)
            _rk4(pk, field, x0, y0, a, &xa, &ya)
            fa = fabs(_peval(pk, P_F, xa, ya))
        else:
            lo = a; a = b; fa = fb
            xa = xb; ya = yb
            b = lo + inv_phi * (hi - lo)
            _rk4(pk, field, x0, y0, b, &xb, &yb)
            fb = fabs(_peval(pk, P_F, xb, yb))
    if fa < fb:
        xt[0] = xa; yt[0] = ya; ft[0] = fa
        return t0 + a
    xt[0] = xb; yt[0] = yb; ft[0] = fb
    return t0 + b


cdef double _bisect_fold(Pack* pk, double x, double y, double t, double h_step,
                         double tol_event, double* xe, double* ye) noexcept nogil:
    cdef double lo = 0.0, hi = h_step, mid, xm, ym, xf, yf
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        _rk4_slide(pk, x, y, mid, &xm, &ym)
        _newton_project(pk, &xm, &ym, 1)
        _lie_pair(pk, xm, ym, &xf, &yf)
        if xf * yf <= 0.0:
            lo = mid
        else:
            hi = mid
    _rk4_slide(pk, x, y, lo, &xm, &ym)
    _newton_project(pk, &xm, &ym, 2)
    xe[0] = xm; ye[0] = ym
    return t + lo


cdef double _bisect_coord(Pack* pk, double x, double y, double t, double h_step,
                          int axis, double val, double tol_event,
                          double* xe, double* ye) noexcept nogil:
    cdef double lo = 0.0, hi = h_step, mid, xm, ym, c, c0
    c0 = x if axis == 0 else y
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        _rk4_slide(pk, x, y, mid, &xm, &ym)
        _newton_project(pk, &xm, &ym, 1)
        c = xm if axis == 0 else ym
        if (c - val) * (c0 - val) > 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    _rk4_slide(pk, x, y, mid, &xm, &ym)
    _newton_project(pk, &xm, &ym, 2)
    xe[0] = xm; ye[0] = ym
    return t + mid


def pair_rhos(P, int spu, wmat, int threads=1):
    """All-pairs weighted slot-integral distances; see _pykernels.pair_rhos."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3] Pa = np.ascontiguousarray(P, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef Py_ssize_t N = Pa.shape[0], T = Pa.shape[1]
    cdef Py_ssize_t n_shifts = W.shape[0], n_slots = W.shape[1]
    if n_slots * spu + 1 != T:
        raise ValueError("slot count inconsistent with sample count")
    cdef cnp.ndarray[cnp.float32_t, ndim=2] out = np.empty(
        (N * (N - 1) // 2, n_shifts), dtype=np.float32)
    cdef double[:, :, ::1] Pv = Pa
    cdef double[:, ::1] Wv = W
    cdef float[:, ::1] Ov = out
    cdef Py_ssize_t i, j, k, s, m, pos
    cdef double acc, dx, dy, dprev, dcur
    cdef double inv = 1.0
    cdef int c_spu = spu
    cdef int nt = threads if threads > 0 else 1

    cdef double[:, ::1] slot_buf = np.empty((nt, n_slots))
    cdef Py_ssize_t tid

    for i in prange(N - 1, nogil=True, schedule="dynamic", num_threads=nt):
        tid = _thread_id()
        pos = i * N - i * (i + 1) // 2 - i - 1
        for j in range(i + 1, N):
            # trapezoid integrals of |gamma_i - gamma_j| per unit slot
            for k in range(n_slots):
                acc = 0.0
                for m in range(k * c_spu, (k + 1) * c_spu + 1):
                    dx = Pv[i, m, 0] - Pv[j, m, 0]
                    dy = Pv[i, m, 1] - Pv[j, m, 1]
                    dcur = sqrt(dx * dx + dy * dy)
                    if m == k * c_spu or m == (k + 1) * c_spu:
                        acc = acc + 0.5 * dcur
                    else:
                        acc = acc + dcur
                slot_buf[tid, k] = acc / c_spu
            for s in range(n_shifts):
                acc = 0.0
                for k in range(n_slots):
                    acc = acc + Wv[s, k] * slot_buf[tid, k]
                Ov[pos + j, s] = <float> acc
    return out


cdef extern from *:
    """
    #ifdef _OPENMP
    #include <omp.h>
    static int fpe_thread_id(void) { return omp_get_thread_num(); }
    #else
    static int fpe_thread_id(void) { return 0; }
    #endif
    """
    int fpe_thread_id() nogil


cdef inline Py_ssize_t _thread_id() noexcept nogil:
    return <Py_ssize_t> fpe_thread_id()


def pair_rhos_sym(pats, wmat, int threads=1):
    """Symbolic all-pairs weighted disagreements (exact dyadic sums)."""
    cdef cnp.ndarray[cnp.int8_t, ndim=2] A = np.ascontiguousarray(pats, dtype=np.int8)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef Py_ssize_t N = A.shape[0], L = A.shape[1], n_shifts = W.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty(
        (N * (N - 1) // 2, n_shifts), dtype=np.float64)
    cdef signed char[:, ::1] Av = A
    cdef double[:, ::1] Wv = W
    cdef double[:, ::1] Ov = out
    cdef Py_ssize_t i, j, l, s, pos
    cdef double acc
    cdef int nt = threads if threads > 0 else 1

    for i in prange(N - 1, nogil=True, schedule="dynamic", num_threads=nt):
        pos = i * N - i * (i + 1) // 2 - i - 1
        for j in range(i + 1, N):
            for s in range(n_shifts):
                acc = 0.0
                for l in range(L):
                    if Av[i, l] != Av[j, l]:
                        acc = acc + Wv[s, l]
                Ov[pos + j, s] = acc
    return out
