"""Pure-python reference implementation of the hot kernels.

The compiled extension (fpe._kernels) mirrors these routines exactly; this
module is the import-time fallback and the semantic reference for the parity
tests.  Everything operates on SystemPack, the flattened polynomial form of a
PiecewiseSystem, so the integrators never call back into python objects.

Status codes returned by the steppers:
    0  reached the local time limit
    1  Sigma event (transversal sign change or tangential touch, projected)
    2  left the domain
    3  slide left the closure of the sliding/escaping set (fold boundary)
    4  sliding field vanished (pseudo-equilibrium)
    5  slide reached the requested stop coordinate
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

STATUS_LIMIT = 0
STATUS_SIGMA = 1
STATUS_DOMAIN = 2
STATUS_FOLD = 3
STATUS_STALL = 4
STATUS_STOPCOORD = 5

# polynomial slots in a SystemPack
_X1, _X2, _Y1, _Y2, _F, _FX, _FY = range(7)


class SystemPack:
    """Flattened polynomial data: X1 X2 Y1 Y2 F FX FY."""

    __slots__ = ("coefs", "degx", "degy", "off", "domain", "speed_bound")

    def __init__(self, polys, domain, speed_bound):
        coefs, degx, degy, off = [], [], [], [0]
        for p in polys:
            c, dx, dy = p.pack()
            coefs.extend(c)
            degx.extend(dx)
            degy.extend(dy)
            off.append(len(coefs))
        self.coefs = np.asarray(coefs, dtype=np.float64)
        self.degx = np.asarray(degx, dtype=np.int32)
        self.degy = np.asarray(degy, dtype=np.int32)
        self.off = np.asarray(off, dtype=np.int32)
        self.domain = np.asarray(domain, dtype=np.float64)
        self.speed_bound = float(speed_bound)

    @classmethod
    def from_system(cls, sys):
        if not (sys.X.is_polynomial and sys.Y.is_polynomial and sys.f.poly is not None):
            raise TypeError("kernel path needs polynomial fields and f")
        f = sys.f.poly
        polys = (sys.X.polys[0], sys.X.polys[1], sys.Y.polys[0], sys.Y.polys[1],
                 f, f.partial("x"), f.partial("y"))
        return cls(polys, sys.domain, sys.speed_bound)


def _peval(pack, which, x, y):
    out = 0.0
    for k in range(pack.off[which], pack.off[which + 1]):
        c = pack.coefs[k]
        for _ in range(pack.degx[k]):
            c *= x
        for _ in range(pack.degy[k]):
            c *= y
        out += c
    return out


def _field(pack, field, x, y):
    if field == 0:
        return _peval(pack, _X1, x, y), _peval(pack, _X2, x, y)
    return _peval(pack, _Y1, x, y), _peval(pack, _Y2, x, y)


def _rk4(pack, field, x, y, h):
    u1, v1 = _field(pack, field, x, y)
    u2, v2 = _field(pack, field, x + 0.5 * h * u1, y + 0.5 * h * v1)
    u3, v3 = _field(pack, field, x + 0.5 * h * u2, y + 0.5 * h * v2)
    u4, v4 = _field(pack, field, x + h * u3, y + h * v3)
    return (x + h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4),
            y + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4))


def _slide_vel(pack, x, y, den_floor=1e-300):
    xf = (_peval(pack, _FX, x, y) * _peval(pack, _X1, x, y)
          + _peval(pack, _FY, x, y) * _peval(pack, _X2, x, y))
    yf = (_peval(pack, _FX, x, y) * _peval(pack, _Y1, x, y)
          + _peval(pack, _FY, x, y) * _peval(pack, _Y2, x, y))
    den = yf - xf
    if den == 0.0:
        den = den_floor
    u = (yf * _peval(pack, _X1, x, y) - xf * _peval(pack, _Y1, x, y)) / den
    v = (yf * _peval(pack, _X2, x, y) - xf * _peval(pack, _Y2, x, y)) / den
    return u, v


def _rk4_slide(pack, x, y, h):
    u1, v1 = _slide_vel(pack, x, y)
    u2, v2 = _slide_vel(pack, x + 0.5 * h * u1, y + 0.5 * h * v1)
    u3, v3 = _slide_vel(pack, x + 0.5 * h * u2, y + 0.5 * h * v2)
    u4, v4 = _slide_vel(pack, x + h * u3, y + h * v3)
    return (x + h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4),
            y + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4))


def _newton_project(pack, x, y, iters=2):
    for _ in range(iters):
        fv = _peval(pack, _F, x, y)
        gx = _peval(pack, _FX, x, y)
        gy = _peval(pack, _FY, x, y)
        g2 = gx * gx + gy * gy
        if g2 == 0.0:
            break
        x -= fv * gx / g2
        y -= fv * gy / g2
    return x, y


def _in_domain(pack, x, y):
    d = pack.domain
    return d[0] <= x <= d[1] and d[2] <= y <= d[3]


def _lie_pair(pack, x, y):
    fx = _peval(pack, _FX, x, y)
    fy = _peval(pack, _FY, x, y)
    xf = fx * _peval(pack, _X1, x, y) + fy * _peval(pack, _X2, x, y)
    yf = fx * _peval(pack, _Y1, x, y) + fy * _peval(pack, _Y2, x, y)
    return xf, yf


def flow_segment(pack, field, x0, y0, h, t_limit, grid_t, extra_t,
                 tol_f, tol_event, touch_check):
    """Integrate one smooth field from (x0,y0) over local time [0, t_limit].

    Stores positions at the ascending local times grid_t / extra_t that are
    reached before the stop.  Stops at a Sigma event (sign change of f,
    located by bisection to tol_event, or a tangential touch with
    |f| <= tol_f at the refined minimum), at a domain exit, or at t_limit.
    Returns (n_grid, n_extra, status, t_end, x_end, y_end).
    """
    grid_xy = np.empty((len(grid_t), 2))
    extra_xy = np.empty((len(extra_t), 2))
    targets = _merge_targets(grid_t, extra_t, t_limit)

    t = 0.0
    x, y = float(x0), float(y0)
    f_prev = _peval(pack, _F, x, y)
    armed = abs(f_prev) > 10.0 * tol_f
    # ring of the two previous states for touch refinement
    tm2 = tm1 = t
    xm2 = xm1 = x
    ym2 = ym1 = y
    fm1 = f_prev
    ig = ie = 0

    for tgt, kinds in targets:
        while t < tgt:
            h_step = min(h, tgt - t)
            xm2, ym2, tm2 = xm1, ym1, tm1
            xm1, ym1, tm1 = x, y, t
            fm2 = fm1
            fm1 = f_prev
            xn, yn = _rk4(pack, field, x, y, h_step)
            tn = tgt if tgt - t <= h else t + h_step
            f_new = _peval(pack, _F, xn, yn)

            if armed and (f_new > 0.0) != (f_prev > 0.0):
                te, xe, ye = _bisect_sign(pack, field, x, y, t, h_step,
                                          f_prev, tol_event)
                xe, ye = _newton_project(pack, xe, ye)
                res = _finish(grid_xy, extra_xy, ig, ie, STATUS_SIGMA, te, xe, ye)
                return res
            if not armed and abs(f_new) > 10.0 * tol_f:
                armed = True
            # local minimum of |f| below the touch threshold: candidate touch
            if (armed and abs(fm1) < touch_check and abs(fm1) <= abs(fm2)
                    and abs(fm1) <= abs(f_new) and t > tm2):
                tt, xt, yt, ft = _refine_touch(pack, field, xm2, ym2, tm2,
                                               tn - tm2, tol_event)
                if abs(ft) <= tol_f:
                    xt, yt = _newton_project(pack, xt, yt)
                    return _finish(grid_xy, extra_xy, ig, ie, STATUS_SIGMA, tt, xt, yt)
            x, y, t, f_prev = xn, yn, tn, f_new
            if not _in_domain(pack, x, y):
                return _finish(grid_xy, extra_xy, ig, ie, STATUS_DOMAIN, t, x, y)
        for kind in kinds:
            if kind == 0:
                grid_xy[ig] = (x, y)
                ig += 1
            elif kind == 1:
                extra_xy[ie] = (x, y)
                ie += 1
    return _finish(grid_xy, extra_xy, ig, ie, STATUS_LIMIT, t, x, y)


def slide_segment(pack, x0, y0, h, t_limit, grid_t, extra_t, tol_f, tol_event,
                  stop_axis=-1, stop_val=0.0, stop_dir=0):
    """Integrate the Filippov sliding field along Sigma with reprojection.

    Runs while the projected point stays in the closure of the sliding and
    escaping regions (monitor q = Xf*Yf <= 0); a transition to q > 0 is
    bisected back to the fold boundary.  Optional stop coordinate: stop once
    coordinate `stop_axis` passes stop_val in direction stop_dir.
    """
    grid_xy = np.empty((len(grid_t), 2))
    extra_xy = np.empty((len(extra_t), 2))
    targets = _merge_targets(grid_t, extra_t, t_limit)

    t = 0.0
    x, y = _newton_project(pack, float(x0), float(y0))
    xf, yf = _lie_pair(pack, x, y)
    q_prev = xf * yf
    q_armed = q_prev < -1e-12
    ig = ie = 0
    vmin = 1e-12 * max(pack.speed_bound, 1.0)

    for tgt, kinds in targets:
        while t < tgt:
            h_step = min(h, tgt - t)
            u, v = _slide_vel(pack, x, y)
            if u * u + v * v < vmin * vmin:
                return _finish(grid_xy, extra_xy, ig, ie, STATUS_STALL, t, x, y)
            xn, yn = _rk4_slide(pack, x, y, h_step)
            xn, yn = _newton_project(pack, xn, yn, iters=1)
            tn = tgt if tgt - t <= h else t + h_step
            xf, yf = _lie_pair(pack, xn, yn)
            q_new = xf * yf
            if q_armed and q_new > 1e-14:
                te, xe, ye = _bisect_fold(pack, x, y, t, h_step, tol_event)
                return _finish(grid_xy, extra_xy, ig, ie, STATUS_FOLD, te, xe, ye)
            if not q_armed and q_new < -1e-12:
                q_armed = True
            if stop_dir != 0:
                c_new = xn if stop_axis == 0 else yn
                if stop_dir * (c_new - stop_val) >= 0.0:
                    te, xe, ye = _bisect_coord(pack, x, y, t, h_step,
                                               stop_axis, stop_val, tol_event)
                    return _finish(grid_xy, extra_xy, ig, ie, STATUS_STOPCOORD,
                                   te, xe, ye)
            x, y, t, q_prev = xn, yn, tn, q_new
            if not _in_domain(pack, x, y):
                return _finish(grid_xy, extra_xy, ig, ie, STATUS_DOMAIN, t, x, y)
        for kind in kinds:
            if kind == 0:
                grid_xy[ig] = (x, y)
                ig += 1
            elif kind == 1:
                extra_xy[ie] = (x, y)
                ie += 1
    return _finish(grid_xy, extra_xy, ig, ie, STATUS_LIMIT, t, x, y)


def _merge_targets(grid_t, extra_t, t_limit):
    """Ascending (time, [kinds]) with kind 0 = grid, 1 = extra, 2 = limit."""
    events = [(float(tv), 0) for tv in grid_t] + [(float(tv), 1) for tv in extra_t]
    events.append((float(t_limit), 2))
    events.sort(key=lambda e: (e[0], e[1]))
    merged = []
    for tv, kind in events:
        if merged and merged[-1][0] == tv:
            merged[-1][1].append(kind)
        else:
            merged.append((tv, [kind]))
    return merged


def _finish(grid_xy, extra_xy, ig, ie, status, t, x, y):
    return grid_xy[:ig], extra_xy[:ie], status, t, x, y


def _bisect_sign(pack, field, x, y, t, h_step, f_at_start, tol_event):
    lo, hi = 0.0, h_step
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        xm, ym = _rk4(pack, field, x, y, mid)
        if (_peval(pack, _F, xm, ym) > 0.0) == (f_at_start > 0.0):
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    xm, ym = _rk4(pack, field, x, y, mid)
    return t + mid, xm, ym


def _refine_touch(pack, field, x0, y0, t0, span, tol_event):
    """Golden-section minimum of |f| along the flow over [t0, t0+span]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, span
    a = hi - inv_phi * (hi - lo)
    b = lo + inv_phi * (hi - lo)

    def fabs_at(s):
        xs, ys = _rk4(pack, field, x0, y0, s)
        return abs(_peval(pack, _F, xs, ys)), xs, ys

    fa, xa, ya = fabs_at(a)
    fb, xb, yb = fabs_at(b)
    while hi - lo > tol_event:
        if fa < fb:
            hi, b, fb = b, a, fa
            a = hi - inv_phi * (hi - lo)
            fa, xa, ya = fabs_at(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + inv_phi * (hi - lo)
            fb, xb, yb = fabs_at(b)
    if fa < fb:
        return t0 + a, xa, ya, fa
    return t0 + b, xb, yb, fb


def _bisect_fold(pack, x, y, t, h_step, tol_event):
    lo, hi = 0.0, h_step
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        xm, ym = _rk4_slide(pack, x, y, mid)
        xm, ym = _newton_project(pack, xm, ym, iters=1)
        xf, yf = _lie_pair(pack, xm, ym)
        if xf * yf <= 0.0:
            lo = mid
        else:
            hi = mid
    xm, ym = _rk4_slide(pack, x, y, lo)
    xm, ym = _newton_project(pack, xm, ym)
    return t + lo, xm, ym


def _bisect_coord(pack, x, y, t, h_step, axis, val, tol_event):
    lo, hi = 0.0, h_step
    while hi - lo > tol_event:
        mid = 0.5 * (lo + hi)
        xm, ym = _rk4_slide(pack, x, y, mid)
        xm, ym = _newton_project(pack, xm, ym, iters=1)
        c = xm if axis == 0 else ym
        c0 = x if axis == 0 else y
        if (c - val) * (c0 - val) > 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    xm, ym = _rk4_slide(pack, x, y, mid)
    xm, ym = _newton_project(pack, xm, ym)
    return t + mid, xm, ym


def pair_rhos(P, spu, wmat, threads=1):
    """Shifted trajectory distances for all pairs i < j.

    P: (N, T, 2) sample arrays on a shared grid with spu samples per time
    unit; wmat: (n_shifts, n_slots) weights, wmat[s, k] multiplying the
    trapezoid integral of |gamma_i - gamma_j| over unit slot k.  Returns
    float32 (n_pairs, n_shifts), pair index = i*N - i*(i+1)/2 + (j-i-1).
    """
    P = np.asarray(P, dtype=np.float64)
    N, T, _ = P.shape
    n_shifts, n_slots = wmat.shape
    if n_slots * spu + 1 != T:
        raise ValueError("slot count inconsistent with sample count")
    out = np.empty((N * (N - 1) // 2, n_shifts), dtype=np.float32)
    # trapezoid weights over one slot
    tw = np.full(spu + 1, 1.0 / spu)
    tw[0] = tw[-1] = 0.5 / spu
    pos = 0
    for i in range(N):
        if i + 1 >= N:
            break
        d = P[i + 1:] - P[i]  # (M, T, 2)
        dist = np.sqrt(d[:, :, 0] ** 2 + d[:, :, 1] ** 2)
        slots = np.empty((dist.shape[0], n_slots))
        for k in range(n_slots):
            seg = dist[:, k * spu:(k + 1) * spu + 1]
            slots[:, k] = seg @ tw
        out[pos:pos + dist.shape[0]] = (slots @ wmat.T).astype(np.float32)
        pos += dist.shape[0]
    return out


def pair_rhos_sym(pats, wmat, threads=1):
    """Symbolic analogue of pair_rhos on itinerary patterns.

    pats: (N, L) small ints; wmat: (n_shifts, L) per-slot weights (dyadic, so
    the float64 sums are exact).  Output float64 (n_pairs, n_shifts) of
    weighted disagreement counts; multiply by the arc cost outside.
    """
    pats = np.asarray(pats)
    N, L = pats.shape
    n_shifts = wmat.shape[0]
    out = np.empty((N * (N - 1) // 2, n_shifts), dtype=np.float64)
    pos = 0
    for i in range(N):
        if i + 1 >= N:
            break
        diff = (pats[i + 1:] != pats[i]).astype(np.float64)  # (M, L)
        out[pos:pos + diff.shape[0]] = diff @ wmat.T
        pos += diff.shape[0]
    return out
