"""Haar-series versions of stochastic integrals.

For an integrand ``f`` and a realization ``mu`` the level-``k`` truncation is

    sum_{n in N_k} c_n(f) * integral chi_n dmu,

grouped into shells ``N_m \\ N_(m-1)``. The absolute shell sums are the tail
profile that stands in for the (unobservable) random constant bounding the
series.
"""

from dataclasses import dataclass

import numpy as np

from . import _validation as V
from .exceptions import ResolutionError
from .haar import CornerField, haar_forward, haar_inverse_array, shell_levels
from .measures import haar_integrals

__all__ = [
    "IntegralResult",
    "PathResult",
    "integrate",
    "integrate_param",
    "differentiate_param",
    "integrate_upper",
    "tail_profile",
    "riemann_stieltjes_sum",
]


@dataclass(frozen=True, eq=False)
class IntegralResult:
    """Level-``k`` truncation of the series with its signed shell increments.

    ``increments[0]`` is the ``N_0`` term, ``increments[m]`` the sum over the
    shell ``N_m \\ N_(m-1)``.
    """

    value: float
    increments: np.ndarray
    k: int

    @property
    def tails(self):
        return np.abs(self.increments[1:])

    @property
    def partial_values(self):
        """Running truncations at levels ``0..k``."""
        return np.cumsum(self.increments)


@dataclass(frozen=True, eq=False)
class PathResult:
    """Values of a Haar-series integral along a grid.

    For parameter paths ``grid`` is the z-grid and ``values`` is 1-D. For
    upper-limit paths ``grid`` holds the vertex coordinates of one axis and
    ``values`` is the ``(2**K + 1,)*d`` vertex array.
    """

    grid: np.ndarray
    values: np.ndarray
    sup_tails: np.ndarray
    k: int

    def __post_init__(self):
        if self.values.shape[0] != len(self.grid):
            raise ValueError("grid and values lengths differ")

    @property
    def tails(self):
        return self.sup_tails

    def as_corner_field(self):
        """Upper-limit path as a CornerField (d-dimensional vertex grid)."""
        n = len(self.grid) - 1
        return CornerField(self.values.ndim, n.bit_length() - 1, self.values)


def _check_resolution(sm, k, f):
    V.check_level(k, "k")
    if f.d != sm.d:
        raise ValueError(f"integrand dimension {f.d} does not match measure dimension {sm.d}")
    if k > sm.K:
        raise ResolutionError(f"truncation level k={k} needs a realization with K>={k}, got K={sm.K}")


def _shell_sums(products, shells, k):
    return np.array([products[shells == m].sum() for m in range(k + 1)])


def _coefficients(f, k, z=None, derivative=False):
    field = f.dz_cell_field(k, z) if derivative else f.cell_field(k, z)
    return haar_forward(field, k).coefficients


def integrate(f, sm, k):
    """Level-``k`` Haar-series integral of ``f`` against the realization ``sm``.

    Parameters
    ----------
    f : IntegrandSpec
        Non-family integrand (use :meth:`IntegrandSpec.at` to fix ``z``).
    sm : SMRealization
    k : int
        Truncation level, at most ``sm.K``.

    Returns
    -------
    IntegralResult
    """
    _check_resolution(sm, k, f)
    if f.is_family:
        raise ValueError("integrate needs a fixed integrand; use integrate_param for families")
    coeffs = _coefficients(f, k)
    products = coeffs * haar_integrals(sm, k)
    increments = _shell_sums(products, shell_levels(sm.d, k), k)
    return IntegralResult(float(products.sum()), increments, k)


def integrate_param(f, sm, k):
    """Parameter path ``z -> eta(z)`` over ``f.z_grid``.

    Haar integrals of ``sm`` are computed once and shared by every ``z``.
    ``sup_tails[m-1]`` is the maximum over the grid of the shell-``m`` term.
    """
    _check_resolution(sm, k, f)
    if not f.is_family:
        raise ValueError("integrate_param needs an integrand family with a z-grid")
    h = haar_integrals(sm, k)
    shells = shell_levels(sm.d, k)
    increments = np.array([_shell_sums(_coefficients(f, k, z) * h, shells, k) for z in f.z_grid])
    values = increments.sum(axis=1)
    sup_tails = np.abs(increments[:, 1:]).max(axis=0) if k else np.zeros(0)
    return PathResult(np.array(f.z_grid), values, sup_tails, k)


def differentiate_param(f, sm, k, z):
    """``d eta / dz`` at ``z``, computed as the series integral of ``df/dz``.

    Raises
    ------
    ValueError
        If ``f`` has no derivative evaluator.
    """
    if f.dz_cell_average is None:
        raise ValueError(f"integrand {f.name!r} has no z-derivative evaluator")
    return integrate(f.derivative_at(z), sm, k).value


def _cumulative(a):
    for axis in range(a.ndim):
        a = np.cumsum(a, axis=axis)
    return np.pad(a, [(1, 0)] * a.ndim)


def integrate_upper(f, sm, k):
    """Upper-limit path ``y -> xi(y)`` at every vertex of the realization grid.

    The integral over ``prod [0, y_s]`` of the level-``k`` partial sum equals a
    cumulative sum of partial-sum values times level-``K`` cell measures.
    ``sup_tails[m-1]`` is the maximum over vertices of the shell-``m`` term.
    """
    _check_resolution(sm, k, f)
    if f.is_family:
        raise ValueError("integrate_upper needs a fixed integrand")
    coeffs = _coefficients(f, k)
    cells = sm.cell_increments()
    partial = haar_inverse_array(coeffs, sm.d, sm.K)
    values = _cumulative(partial * cells)
    shells = shell_levels(sm.d, k)
    sup_tails = np.empty(k)
    for m in range(1, k + 1):
        shell_part = haar_inverse_array(np.where(shells == m, coeffs, 0.0), sm.d, sm.K)
        sup_tails[m - 1] = np.abs(_cumulative(shell_part * cells)).max()
    grid = np.arange((1 << sm.K) + 1) / (1 << sm.K)
    return PathResult(grid, values, sup_tails, k)


def tail_profile(result):
    """``[(level, tail), ...]`` for levels ``1..k``."""
    return [(m + 1, float(t)) for m, t in enumerate(result.tails)]


def riemann_stieltjes_sum(step_values, sm):
    """``sum_cells f(cell) * mu(cell)`` for ``f`` constant on level-``m`` cells, ``m <= K``."""
    step_values = np.asarray(step_values, dtype=float)
    m = step_values.shape[0].bit_length() - 1
    return float(np.sum(step_values * sm.cell_increments(m)))
