"""Pointwise analysis of planar piecewise-smooth systems.

A system is two smooth fields X (active on f >= 0) and Y (active on f <= 0)
glued along the switching line Sigma = {f = 0}.  Everything here is a pure
function of the point: Lie derivatives, region classification on Sigma, and
the Filippov sliding field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import Poly2


class DegenerateDenominator(ArithmeticError):
    """Sliding field requested where Yf - Xf vanishes to tolerance."""


class DegeneratePoint(ValueError):
    """First and second Lie derivatives both vanish to tolerance."""


@dataclass(frozen=True)
class Tolerances:
    tol_f: float = 1e-9
    tol_lie: float = 1e-9
    tol_event_time: float = 1e-10

    def __post_init__(self):
        if min(self.tol_f, self.tol_lie, self.tol_event_time) <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerances()

# PointClass kinds
SIGMA_PLUS = "sigma_plus"
SIGMA_MINUS = "sigma_minus"
CROSSING_POS = "crossing_pos"
CROSSING_NEG = "crossing_neg"
SLIDING = "sliding"
ESCAPING = "escaping"
FOLD = "fold"
TWO_FOLD = "two_fold"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class PointClass:
    """Classification of a point relative to Sigma.

    For kind == "fold", `which` is "X" or "Y" and `visible_x`/`visible_y`
    carries the visibility of that fold.  For kind == "two_fold" both
    visibility flags are set; an invisible-invisible two-fold is the singular
    tangency (trajectory convention: stay fixed), every other tangency is
    regular.  Visibility is side-aware: the fold of X is visible iff
    X^2f > 0, the fold of Y is visible iff Y^2f < 0.
    """

    kind: str
    which: str | None = None
    visible_x: bool | None = None
    visible_y: bool | None = None

    @property
    def on_switching_line(self) -> bool:
        return self.kind not in (SIGMA_PLUS, SIGMA_MINUS)

    @property
    def is_tangency(self) -> bool:
        return self.kind in (FOLD, TWO_FOLD)

    @property
    def is_singular_tangency(self) -> bool:
        return self.kind == TWO_FOLD and not self.visible_x and not self.visible_y


class PlanarField:
    """Velocity field on the plane, optionally with polynomial components."""

    def __init__(self, fn=None, polys: tuple[Poly2, Poly2] | None = None, name=""):
        if fn is None and polys is None:
            raise ValueError("need a callable or polynomial components")
        self.polys = polys
        self.name = name
        if fn is not None:
            self._fn = fn
        else:
            p1, p2 = polys
            self._fn = lambda x, y: (p1(x, y), p2(x, y))

    @property
    def is_polynomial(self) -> bool:
        return self.polys is not None

    def __call__(self, p):
        u, v = self._fn(p[0], p[1])
        return np.array([u, v], dtype=float)


class SwitchingFunction:
    """Scalar f with analytic gradient; 0 must be a regular value on Sigma."""

    def __init__(self, fn=None, grad=None, poly: Poly2 | None = None):
        if poly is not None:
            self.poly = poly
            self._fx = poly.partial("x")
            self._fy = poly.partial("y")
            self._fn = lambda x, y: poly(x, y)
            self._grad = lambda x, y: (self._fx(x, y), self._fy(x, y))
        else:
            if fn is None or grad is None:
                raise ValueError("non-polynomial f needs fn and grad")
            self.poly = None
            self._fn = fn
            self._grad = grad

    def __call__(self, p) -> float:
        return float(self._fn(p[0], p[1]))

    def grad(self, p):
        gx, gy = self._grad(p[0], p[1])
        return np.array([gx, gy], dtype=float)


class PiecewiseSystem:
    """Z = (X, Y) on an axis-aligned rectangular domain."""

    def __init__(self, X: PlanarField, Y: PlanarField, f: SwitchingFunction,
                 domain, speed_bound: float | None = None, name=""):
        self.X = X
        self.Y = Y
        self.f = f
        self.domain = tuple(float(v) for v in domain)  # xmin, xmax, ymin, ymax
        if self.domain[0] >= self.domain[1] or self.domain[2] >= self.domain[3]:
            raise ValueError("empty domain")
        self.name = name
        self.speed_bound = (
            float(speed_bound) if speed_bound is not None else self._measure_speed()
        )

    def _measure_speed(self, n=64, margin=1.02) -> float:
        xmin, xmax, ymin, ymax = self.domain
        xs, ys = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n))
        top = 0.0
        for fld in (self.X, self.Y):
            if fld.is_polynomial:
                u = fld.polys[0].eval_grid(xs, ys)
                v = fld.polys[1].eval_grid(xs, ys)
                top = max(top, float(np.hypot(u, v).max()))
            else:
                for x, y in zip(xs.ravel(), ys.ravel()):
                    u, v = fld._fn(x, y)
                    top = max(top, float(np.hypot(u, v)))
        return top * margin

    @property
    def diameter(self) -> float:
        xmin, xmax, ymin, ymax = self.domain
        return float(np.hypot(xmax - xmin, ymax - ymin))

    def contains(self, p, slack=0.0) -> bool:
        xmin, xmax, ymin, ymax = self.domain
        return (xmin - slack <= p[0] <= xmax + slack
                and ymin - slack <= p[1] <= ymax + slack)

    def field(self, which: str) -> PlanarField:
        return self.X if which == "X" else self.Y

    def reversed(self) -> "PiecewiseSystem":
        """Time reversal: (-X, -Y).  Sliding and escaping swap roles."""
        return PiecewiseSystem(
            X=_negate(self.X), Y=_negate(self.Y), f=self.f,
            domain=self.domain, speed_bound=self.speed_bound,
            name=self.name + ":reversed",
        )

    def rescaled(self, c: int) -> "PiecewiseSystem":
        """Fields divided by c (time dilation by factor c)."""
        if c < 1:
            raise ValueError("rescale factor must be >= 1")
        return PiecewiseSystem(
            X=_scale(self.X, 1.0 / c), Y=_scale(self.Y, 1.0 / c), f=self.f,
            domain=self.domain, speed_bound=self.speed_bound / c,
            name=self.name + (f":1/{c}" if c != 1 else ""),
        )


def _negate(fld: PlanarField) -> PlanarField:
    if fld.is_polynomial:
        return PlanarField(polys=(-fld.polys[0], -fld.polys[1]), name="-" + fld.name)
    fn = fld._fn
    return PlanarField(fn=lambda x, y: tuple(-c for c in fn(x, y)), name="-" + fld.name)


def _scale(fld: PlanarField, s: float) -> PlanarField:
    if fld.is_polynomial:
        return PlanarField(polys=(s * fld.polys[0], s * fld.polys[1]), name=fld.name)
    fn = fld._fn
    return PlanarField(fn=lambda x, y: tuple(s * c for c in fn(x, y)), name=fld.name)


def lie_derivative(field: PlanarField, f: SwitchingFunction, p, order: int = 1,
                   h_fd: float | None = None, diam: float = 1.0) -> float:
    """Xf(p) = <grad f(p), X(p)>; order 2 is X(Xf)(p).

    Order 2 uses the analytic polynomial form when both the field and f are
    polynomial; otherwise central finite differences of the order-1 value
    with step h_fd (default 1e-5 * domain diameter).
    """
    p = np.asarray(p, dtype=float)
    if order == 1:
        return float(np.dot(f.grad(p), field(p)))
    if order != 2:
        raise ValueError("order must be 1 or 2")
    if field.is_polynomial and f.poly is not None:
        lie1 = _lie1_poly(field, f)
        gx = lie1.partial("x")(p[0], p[1])
        gy = lie1.partial("y")(p[0], p[1])
        u, v = field(p)
        return float(gx * u + gy * v)
    h = h_fd if h_fd is not None else 1e-5 * diam
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    gx = (lie_derivative(field, f, p + ex) - lie_derivative(field, f, p - ex)) / (2 * h)
    gy = (lie_derivative(field, f, p + ey) - lie_derivative(field, f, p - ey)) / (2 * h)
    u, v = field(p)
    return float(gx * u + gy * v)


def _lie1_poly(field: PlanarField, f: SwitchingFunction) -> Poly2:
    fx = f.poly.partial("x")
    fy = f.poly.partial("y")
    return fx * field.polys[0] + fy * field.polys[1]


def classify_point(sys: PiecewiseSystem, p, tol: Tolerances = DEFAULT_TOL) -> PointClass:
    """Classify p by the signs of f, Xf, Yf and (at tangencies) X^2f, Y^2f."""
    p = np.asarray(p, dtype=float)
    fv = sys.f(p)
    if fv > tol.tol_f:
        return PointClass(SIGMA_PLUS)
    if fv < -tol.tol_f:
        return PointClass(SIGMA_MINUS)

    xf = lie_derivative(sys.X, sys.f, p, 1)
    yf = lie_derivative(sys.Y, sys.f, p, 1)
    x_tan = abs(xf) <= tol.tol_lie
    y_tan = abs(yf) <= tol.tol_lie

    if not x_tan and not y_tan:
        if xf > 0 and yf > 0:
            return PointClass(CROSSING_POS)
        if xf < 0 and yf < 0:
            return PointClass(CROSSING_NEG)
        if xf < 0 and yf > 0:
            return PointClass(SLIDING)
        return PointClass(ESCAPING)

    diam = sys.diameter
    if x_tan and y_tan:
        x2 = lie_derivative(sys.X, sys.f, p, 2, diam=diam)
        y2 = lie_derivative(sys.Y, sys.f, p, 2, diam=diam)
        if abs(x2) <= tol.tol_lie or abs(y2) <= tol.tol_lie:
            return PointClass(DEGENERATE)
        return PointClass(TWO_FOLD, visible_x=x2 > 0, visible_y=y2 < 0)
    if x_tan:
        x2 = lie_derivative(sys.X, sys.f, p, 2, diam=diam)
        if abs(x2) <= tol.tol_lie:
            return PointClass(DEGENERATE)
        return PointClass(FOLD, which="X", visible_x=x2 > 0)
    y2 = lie_derivative(sys.Y, sys.f, p, 2, diam=diam)
    if abs(y2) <= tol.tol_lie:
        return PointClass(DEGENERATE)
    return PointClass(FOLD, which="Y", visible_y=y2 < 0)


def sliding_field(sys: PiecewiseSystem, p, tol: Tolerances = DEFAULT_TOL):
    """Filippov sliding field Z^s(p) = (Yf X - Xf Y) / (Yf - Xf).

    Raises DegenerateDenominator when |Yf - Xf| <= tol_lie.  The result is
    tangent to Sigma up to round-off and is the convex combination
    lam*X + (1-lam)*Y with lam = Yf / (Yf - Xf).
    """
    p = np.asarray(p, dtype=float)
    xf = lie_derivative(sys.X, sys.f, p, 1)
    yf = lie_derivative(sys.Y, sys.f, p, 1)
    den = yf - xf
    if abs(den) <= tol.tol_lie:
        raise DegenerateDenominator(f"Yf - Xf = {den:.3e} at {tuple(p)}")
    return (yf * sys.X(p) - xf * sys.Y(p)) / den


def sliding_lambda(sys: PiecewiseSystem, p, tol: Tolerances = DEFAULT_TOL) -> float:
    """Convex weight of X in the sliding combination."""
    p = np.asarray(p, dtype=float)
    xf = lie_derivative(sys.X, sys.f, p, 1)
    yf = lie_derivative(sys.Y, sys.f, p, 1)
    den = yf - xf
    if abs(den) <= tol.tol_lie:
        raise DegenerateDenominator(f"Yf - Xf = {den:.3e} at {tuple(p)}")
    return float(yf / den)
