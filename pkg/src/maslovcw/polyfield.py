"""Polynomial tensor fields on the reference plane with exact derivatives."""

import numpy as np


class PolyField:
    """sum_{a+b<=degree} coeffs[(a, b)] * x**a * y**b with tensor coefficients."""

    def __init__(self, exponents, coeffs):
        self.exponents = [tuple(e) for e in exponents]
        self.coeffs = np.asarray(coeffs)
        if len(self.exponents) != len(self.coeffs):
            raise ValueError("one coefficient per exponent pair is required")

    @classmethod
    def random(cls, rng, shape, degree=3, scale=1.0, complex_=True, hermitian=False):
        exps = [(a, d - a) for d in range(degree + 1) for a in range(d + 1)]
        size = (len(exps),) + tuple(shape)
        c = rng.standard_normal(size)
        if complex_:
            c = c + 1j * rng.standard_normal(size)
        if hermitian:
            c = 0.5 * (c + np.conj(np.swapaxes(c, -1, -2)))
        # damp high-order terms so fields stay O(scale) on the unit disk
        damp = np.array([1.0 / (1 + a + b) for a, b in exps]).reshape((-1,) + (1,) * len(shape))
        return cls(exps, scale * c * damp)

    def _monomials(self, points, dx=0, dy=0):
        x, y = points[:, 0], points[:, 1]
        cols = []
        for a, b in self.exponents:
            if a < dx or b < dy:
                cols.append(np.zeros_like(x))
                continue
            fa = np.prod(np.arange(a - dx + 1, a + 1)) if dx else 1.0
            fb = np.prod(np.arange(b - dy + 1, b + 1)) if dy else 1.0
            cols.append(fa * fb * x ** (a - dx) * y ** (b - dy))
        return np.stack(cols, axis=1)

    def value(self, points):
        return np.tensordot(self._monomials(np.asarray(points, float)), self.coeffs, axes=1)

    def dx(self, points):
        return np.tensordot(self._monomials(np.asarray(points, float), dx=1), self.coeffs, axes=1)

    def dy(self, points):
        return np.tensordot(self._monomials(np.asarray(points, float), dy=1), self.coeffs, axes=1)

    def __mul__(self, s):
        return PolyField(self.exponents, self.coeffs * s)

    __rmul__ = __mul__
