"""Bivariate polynomials stored as monomial triples [coeff, degx, degy].

This is the analytic form behind every built-in system and behind system
files loaded from JSON; it gives exact partial derivatives, which the
classifier needs for second Lie derivatives at tangency points.
"""

from __future__ import annotations

import numpy as np


class Poly2:
    __slots__ = ("terms",)

    def __init__(self, terms):
        acc: dict[tuple[int, int], float] = {}
        for c, i, j in terms:
            if i < 0 or j < 0:
                raise ValueError("negative monomial degree")
            key = (int(i), int(j))
            acc[key] = acc.get(key, 0.0) + float(c)
        self.terms = tuple(
            (c, i, j) for (i, j), c in sorted(acc.items()) if c != 0.0
        )

    @classmethod
    def from_json(cls, spec) -> "Poly2":
        return cls([(t[0], t[1], t[2]) for t in spec])

    def to_json(self):
        return [[c, i, j] for c, i, j in self.terms]

    def __call__(self, x, y):
        out = 0.0
        for c, i, j in self.terms:
            out += c * x**i * y**j
        return out

    def eval_grid(self, xs, ys):
        """Vectorized evaluation on broadcastable arrays."""
        out = np.zeros(np.broadcast(xs, ys).shape)
        for c, i, j in self.terms:
            out += c * np.asarray(xs) ** i * np.asarray(ys) ** j
        return out

    def partial(self, var: str) -> "Poly2":
        if var == "x":
            return Poly2([(c * i, i - 1, j) for c, i, j in self.terms if i > 0])
        if var == "y":
            return Poly2([(c * j, i, j - 1) for c, i, j in self.terms if j > 0])
        raise ValueError(var)

    def __add__(self, other: "Poly2") -> "Poly2":
        return Poly2(list(self.terms) + list(other.terms))

    def __mul__(self, other):
        if isinstance(other, Poly2):
            return Poly2(
                [
                    (c1 * c2, i1 + i2, j1 + j2)
                    for c1, i1, j1 in self.terms
                    for c2, i2, j2 in other.terms
                ]
            )
        return Poly2([(c * other, i, j) for c, i, j in self.terms])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def pack(self):
        """Flat (coeffs, degx, degy) arrays for the compiled kernels."""
        if not self.terms:
            return (
                np.zeros(1, dtype=np.float64),
                np.zeros(1, dtype=np.int32),
                np.zeros(1, dtype=np.int32),
            )
        c = np.array([t[0] for t in self.terms], dtype=np.float64)
        dx = np.array([t[1] for t in self.terms], dtype=np.int32)
        dy = np.array([t[2] for t in self.terms], dtype=np.int32)
        return c, dx, dy

    def __repr__(self):
        if not self.terms:
            return "Poly2(0)"
        bits = []
        for c, i, j in self.terms:
            s = f"{c:g}"
            if i:
                s += f"*x^{i}" if i > 1 else "*x"
            if j:
                s += f"*y^{j}" if j > 1 else "*y"
            bits.append(s)
        return "Poly2(" + " + ".join(bits) + ")"


def const(c: float) -> Poly2:
    return Poly2([(c, 0, 0)])


X = Poly2([(1.0, 1, 0)])
Y = Poly2([(1.0, 0, 1)])
