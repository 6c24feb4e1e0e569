"""Deterministic integrands and their cell averages.

An integrand delivers exact (or quadrature) averages over dyadic cells, which
is all the Haar coefficients depend on. Built-ins cover the functions used by
the experiment harness; :meth:`IntegrandSpec.from_function` wraps arbitrary
point functions through midpoint sampling.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _validation as V
from .haar import CellField, SmoothnessSpec

__all__ = [
    "IntegrandSpec",
    "constant",
    "product_linear",
    "product_sine",
    "exp_family",
    "polynomial",
    "step_function",
    "BUILTINS",
    "builtin",
]

_GL_ORDER = 8


def _edges(K):
    return np.arange((1 << K) + 1) / (1 << K)


def _gauss_cell_average_1d(g, K, order=_GL_ORDER):
    # Gauss-Legendre average of g over each level-K interval
    nodes, weights = leggauss(order)
    e = _edges(K)
    lo, hi = e[:-1, None], e[1:, None]
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[None, :]
    return 0.5 * np.sum(g(x) * weights[None, :], axis=1)


def _outer(factors):
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


@dataclass(frozen=True, eq=False)
class IntegrandSpec:
    """A deterministic integrand ``f(x)`` or family ``f(z, x)`` on ``[0, 1]^d``.

    Parameters
    ----------
    d : int
    cell_average : callable
        ``cell_average(K)`` (or ``cell_average(z, K)`` for a family) returning
        the ``(2**K,)*d`` array of cell averages.
    exact : bool
        Whether ``cell_average`` is exact at any level. Inexact evaluators are
        sampled ``oversample`` levels finer than requested.
    z_grid : array, optional
        Strictly increasing parameter grid; its presence makes this a family.
    dz_cell_average : callable, optional
        Cell averages of the partial derivative in ``z``.
    smoothness : SmoothnessSpec, optional
        Metadata for bound checks; never enforced at run time.
    """

    d: int
    cell_average: Callable
    exact: bool = True
    z_grid: Optional[np.ndarray] = None
    dz_cell_average: Optional[Callable] = None
    smoothness: Optional[SmoothnessSpec] = None
    oversample: int = 2
    name: str = "custom"

    def __post_init__(self):
        V.check_dimension(self.d)
        if self.z_grid is not None:
            z = np.asarray(self.z_grid, dtype=float).ravel()
            if z.size == 0 or np.any(np.diff(z) <= 0):
                raise ValueError("z_grid must be nonempty and strictly increasing")
            object.__setattr__(self, "z_grid", V.frozen(z))

    @property
    def is_family(self):
        return self.z_grid is not None

    @classmethod
    def from_function(cls, func, d, oversample=2, smoothness=None, name="custom"):
        """Wrap a point function of ``d`` broadcastable coordinates (midpoint quadrature)."""

        def cell_average(K):
            return CellField.from_function(func, d, K, oversample=0).values

        return cls(d, cell_average, exact=False, smoothness=smoothness, oversample=oversample, name=name)

    def cell_field(self, k, z=None):
        """Cell averages as a CellField, at level ``k`` if exact, else ``k + oversample``."""
        K = k if self.exact else k + self.oversample
        if self.is_family:
            if z is None:
                raise ValueError(f"integrand {self.name!r} is a family; pass z")
            vals = self.cell_average(float(z), K)
        else:
            vals = self.cell_average(K)
        return CellField(self.d, K, vals)

    def dz_cell_field(self, k, z):
        if self.dz_cell_average is None:
            raise ValueError(f"integrand {self.name!r} has no z-derivative evaluator")
        K = k if self.exact else k + self.oversample
        return CellField(self.d, K, self.dz_cell_average(float(z), K))

    def at(self, z):
        """The member ``f(z, .)`` of a family as a plain integrand."""
        if not self.is_family:
            return self
        return IntegrandSpec(
            self.d,
            lambda K: self.cell_average(float(z), K),
            exact=self.exact,
            smoothness=self.smoothness,
            oversample=self.oversample,
            name=f"{self.name}@{z}",
        )

    def derivative_at(self, z):
        """``df/dz (z, .)`` as a plain integrand."""
        if self.dz_cell_average is None:
            raise ValueError(f"integrand {self.name!r} has no z-derivative evaluator")
        return IntegrandSpec(
            self.d,
            lambda K: self.dz_cell_average(float(z), K),
            exact=self.exact,
            oversample=self.oversample,
            name=f"d{self.name}/dz@{z}",
        )

    def with_z_grid(self, z_grid):
        return IntegrandSpec(
            self.d,
            self.cell_average,
            exact=self.exact,
            z_grid=z_grid,
            dz_cell_average=self.dz_cell_average,
            smoothness=self.smoothness,
            oversample=self.oversample,
            name=self.name,
        )


def constant(d, c=1.0):
    c = float(c)
    return IntegrandSpec(
        d,
        lambda K: np.full((1 << K,) * d, c),
        smoothness=SmoothnessSpec(d - 1, 1.0, max(abs(c), 1e-300)),
        name="constant",
    )


def product_linear(d):
    """``prod_s x_s``; the cell average is the product of cell midpoints."""

    def avg(K):
        mid = (np.arange(1 << K) + 0.5) / (1 << K)
        return _outer([mid] * d)

    return IntegrandSpec(d, avg, smoothness=SmoothnessSpec(d - 1, 1.0, 1.0), name="product-linear")


def product_sine(d):
    """``prod_s sin(pi x_s)`` with closed-form cell averages."""

    def avg(K):
        e = _edges(K)
        one = (np.cos(np.pi * e[:-1]) - np.cos(np.pi * e[1:])) * ((1 << K) / np.pi)
        return _outer([one] * d)

    # derivatives of order <= d-1 are bounded by pi**(d-1); the (d-1)-th ones are
    # Lipschitz with constant pi**d
    return IntegrandSpec(d, avg, smoothness=SmoothnessSpec(d - 1, 1.0, np.pi**d), name="product-sine")


def exp_family(d, z_grid=None):
    """``exp(z * sum_s x_s)`` with its z-derivative ``sum_s x_s exp(z sum x)``."""

    def avg(z, K):
        one = _gauss_cell_average_1d(lambda x: np.exp(z * x), K)
        return _outer([one] * d)

    def davg(z, K):
        e1 = _gauss_cell_average_1d(lambda x: np.exp(z * x), K)
        x1 = _gauss_cell_average_1d(lambda x: x * np.exp(z * x), K)
        total = np.zeros((1 << K,) * d)
        for s in range(d):
            total += _outer([x1 if t == s else e1 for t in range(d)])
        return total

    if z_grid is None:
        z_grid = np.linspace(0.0, 1.0, 11)
    return IntegrandSpec(d, avg, z_grid=z_grid, dz_cell_average=davg, name="exp-family")


def polynomial(coefficients):
    """Polynomial ``sum_e a_e prod_s x_s**e_s`` from a ``d``-dimensional coefficient array.

    Cell averages are exact: ``prod_s (b**(e+1) - a**(e+1)) / ((e + 1)(b - a))``.
    """
    coef = np.asarray(coefficients, dtype=float)
    d = coef.ndim
    V.check_dimension(d)

    def avg(K):
        e = _edges(K)
        lo, hi = e[:-1], e[1:]
        h = 1.0 / (1 << K)
        out = np.zeros((1 << K,) * d)
        for exps in zip(*np.nonzero(coef)):
            factors = [(hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * h) for p in exps]
            out += coef[exps] * _outer(factors)
        return out

    return IntegrandSpec(d, avg, name="polynomial")


def step_function(values):
    """Piecewise-constant integrand from its values on level-``m`` cells."""
    field = CellField.from_values(values)

    def avg(K):
        if K < field.K:
            return field.coarsen(field.K - K).values
        return field.refine(K).values

    return IntegrandSpec(field.d, avg, name="step")


BUILTINS = {
    "constant": constant,
    "product-linear": product_linear,
    "product-sine": product_sine,
    "exp-family": exp_family,
}


def builtin(name, d, **kwargs):
    """Construct a named built-in integrand."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown integrand {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(d, **kwargs)
