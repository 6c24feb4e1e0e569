"""Haar functions on [0, 1]^d, dyadic geometry and fast Haar transforms.

One-dimensional Haar functions are indexed by ``n >= 1``. ``n = 1`` is the
constant function; for ``n = 2**j + i`` with ``1 <= i <= 2**j`` the function is
``+2**(j/2)`` on the left half of ``((i-1)/2**j, i/2**j)``, ``-2**(j/2)`` on the
right half and zero elsewhere. At interior breakpoints the value is the
average of the one-sided limits, at 0 and 1 the one-sided limit.

Coefficient tensors store the coefficient of ``n = (n_1, ..., n_d)`` at array
position ``(n_1 - 1, ..., n_d - 1)``, so level ``j`` occupies the slice
``2**j : 2**(j+1)`` along each axis.
"""

from dataclasses import dataclass

import numpy as np

from . import _validation as V

__all__ = [
    "HaarIndex1D",
    "HaarIndexD",
    "CellField",
    "CornerField",
    "HaarCoeffTensor",
    "SmoothnessSpec",
    "haar_eval",
    "haar_basis",
    "haar_forward",
    "haar_inverse",
    "partial_sum_at",
    "partial_sum",
    "partial_sum_grid",
    "uniform_error_bound",
    "coeff_bound",
    "index_levels",
    "shell_levels",
]


def _split_index(n):
    if n < 2:
        return 0, 0
    j = (n - 1).bit_length() - 1
    return j, n - (1 << j)


@dataclass(frozen=True)
class HaarIndex1D:
    """One-dimensional Haar index ``n = 2**j + i``."""

    n: int

    def __post_init__(self):
        V.check_level(self.n, "n", minimum=1)

    @property
    def j(self):
        return _split_index(self.n)[0]

    @property
    def i(self):
        return _split_index(self.n)[1]

    @property
    def is_constant(self):
        return self.n == 1

    @property
    def support(self):
        """Closed support ``[(i-1) 2**-j, i 2**-j]`` as a ``(lo, hi)`` pair."""
        if self.n == 1:
            return 0.0, 1.0
        j, i = _split_index(self.n)
        return (i - 1) / 2.0**j, i / 2.0**j

    @property
    def plus_half(self):
        """Open left half where the function is positive."""
        lo, hi = self.support
        return lo, 0.5 * (lo + hi)

    @property
    def minus_half(self):
        """Open right half where the function is negative."""
        lo, hi = self.support
        return 0.5 * (lo + hi), hi

    @property
    def amplitude(self):
        return 1.0 if self.n == 1 else 2.0 ** (self.j / 2)


@dataclass(frozen=True)
class HaarIndexD:
    """Tensor Haar index ``(n_1, ..., n_d)``."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(n) for n in self.indices)
        if not idx:
            raise ValueError("a tensor Haar index needs at least one coordinate")
        for n in idx:
            V.check_level(n, "n", minimum=1)
        object.__setattr__(self, "indices", idx)

    @property
    def d(self):
        return len(self.indices)

    @property
    def axes(self):
        return tuple(HaarIndex1D(n) for n in self.indices)

    @property
    def levels(self):
        """Level profile ``(j_1, ..., j_d)`` with ``j_s = 0`` when ``n_s = 1``."""
        return tuple(_split_index(n)[0] for n in self.indices)

    @property
    def sorted_levels(self):
        """Ascending permutation ``j^(1) <= ... <= j^(d)`` of :attr:`levels`."""
        return tuple(sorted(self.levels))

    @property
    def active(self):
        """Coordinates ``s`` with ``n_s >= 2``."""
        return tuple(s for s, n in enumerate(self.indices) if n >= 2)

    def in_cube(self, k):
        """Membership in ``N_k = {1, ..., 2**k}^d``."""
        return all(n <= (1 << k) for n in self.indices)

    @property
    def shell(self):
        """Smallest ``m`` with the index in ``N_m``."""
        return max(0 if n == 1 else _split_index(n)[0] + 1 for n in self.indices)


@dataclass(frozen=True, eq=False)
class CellField:
    """Cell averages of a function on the ``2**K``-per-axis dyadic grid."""

    d: int
    K: int
    values: np.ndarray

    def __post_init__(self):
        V.check_dimension(self.d)
        V.check_level(self.K, "K")
        vals = V.check_cube_array(self.values, self.d, 1 << self.K)
        object.__setattr__(self, "values", V.frozen(vals))

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        if n < 1 or n & (n - 1):
            raise ValueError(f"cell count per axis must be a power of two, got {n}")
        return cls(values.ndim, n.bit_length() - 1, values)

    @classmethod
    def from_function(cls, func, d, K, oversample=2):
        """Approximate cell averages by midpoint sampling at level ``K + oversample``.

        The midpoint rule has error ``O(4**-(K + oversample))`` for twice
        differentiable ``func``. ``func`` receives ``d`` broadcastable coordinate
        arrays.
        """
        fine = K + oversample
        axes = [(np.arange(1 << fine) + 0.5) / (1 << fine)] * d
        grid = np.meshgrid(*axes, indexing="ij", sparse=True)
        sample = np.broadcast_to(np.asarray(func(*grid), dtype=float), (1 << fine,) * d)
        return cls(d, fine, sample).coarsen(oversample)

    @property
    def cell_volume(self):
        return 2.0 ** (-self.d * self.K)

    def coarsen(self, levels=1):
        """Average ``2**(d * levels)`` children into their parent cells."""
        levels = V.check_level(levels, "levels")
        V.check_levels_compatible(levels, self.K)
        if levels == 0:
            return self
        vals = _coarsen_array(self.values, levels)
        return CellField(self.d, self.K - levels, vals)

    def refine(self, K):
        """Resample as a piecewise-constant field on a finer grid."""
        V.check_levels_compatible(self.K, K)
        vals = self.values
        for axis in range(self.d):
            vals = np.repeat(vals, 1 << (K - self.K), axis=axis)
        return CellField(self.d, K, vals)

    def l2_norm_squared(self):
        return float(np.mean(self.values**2))

    def mean(self):
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class CornerField:
    """Values of a point function at the ``(2**K + 1)``-per-axis vertex grid."""

    d: int
    K: int
    values: np.ndarray

    def __post_init__(self):
        V.check_dimension(self.d)
        V.check_level(self.K, "K")
        vals = V.check_cube_array(self.values, self.d, (1 << self.K) + 1)
        object.__setattr__(self, "values", V.frozen(vals))

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.shape[0] - 1
        if n < 1 or n & (n - 1):
            raise ValueError(f"vertex count per axis must be 2**K + 1, got {n + 1}")
        return cls(values.ndim, n.bit_length() - 1, values)

    @classmethod
    def from_function(cls, func, d, K):
        axes = [np.arange((1 << K) + 1) / (1 << K)] * d
        grid = np.meshgrid(*axes, indexing="ij", sparse=True)
        vals = np.broadcast_to(np.asarray(func(*grid), dtype=float), ((1 << K) + 1,) * d)
        return cls(d, K, vals)

    @property
    def step(self):
        return 2.0**-self.K

    @property
    def coordinates(self):
        return np.arange((1 << self.K) + 1) / (1 << self.K)

    def subsample(self, K):
        """Restriction to the coarser vertex grid of level ``K``."""
        V.check_levels_compatible(K, self.K)
        stride = 1 << (self.K - K)
        sl = (slice(None, None, stride),) * self.d
        return CornerField(self.d, K, self.values[sl])

    def scaled(self, c):
        return CornerField(self.d, self.K, c * self.values)


@dataclass(frozen=True, eq=False)
class HaarCoeffTensor:
    """Coefficients ``c_n`` for ``n`` in ``N_k``, stored densely."""

    d: int
    k: int
    coefficients: np.ndarray

    def __post_init__(self):
        V.check_dimension(self.d)
        V.check_level(self.k, "k")
        vals = V.check_cube_array(self.coefficients, self.d, 1 << self.k, name="coefficients")
        object.__setattr__(self, "coefficients", V.frozen(vals))

    def __getitem__(self, idx):
        if isinstance(idx, HaarIndexD):
            idx = idx.indices
        idx = tuple(int(n) for n in np.atleast_1d(idx))
        if len(idx) != self.d or not all(1 <= n <= (1 << self.k) for n in idx):
            raise IndexError(f"index {idx} outside N_{self.k} for d={self.d}")
        return float(self.coefficients[tuple(n - 1 for n in idx)])

    def sum_of_squares(self):
        return float(np.sum(self.coefficients**2))

    def truncate(self, k):
        """Coefficients restricted to the sub-cube ``N_k``."""
        V.check_levels_compatible(k, self.k)
        sl = (slice(0, 1 << k),) * self.d
        return HaarCoeffTensor(self.d, k, self.coefficients[sl])

    def shell_mask(self, m):
        """Boolean mask of ``N_m minus N_(m-1)`` (``N_0`` alone for ``m = 0``)."""
        return shell_levels(self.d, self.k) == m


@dataclass(frozen=True)
class SmoothnessSpec:
    """Smoothness data of an integrand.

    ``l`` bounded derivative orders with bound ``c_f``; the ``l``-th
    derivatives are Hölder with exponent ``alpha_holder`` and the same constant.
    """

    l: int
    alpha_holder: float
    c_f: float

    def __post_init__(self):
        V.check_level(self.l, "l")
        if not 0.0 < self.alpha_holder <= 1.0:
            raise ValueError(f"alpha_holder must be in (0, 1], got {self.alpha_holder}")
        if not self.c_f > 0.0:
            raise ValueError(f"c_f must be positive, got {self.c_f}")

    def satisfies_smoothness_condition(self, d):
        """Whether ``l + alpha_holder > d / 2``, the condition for uniform convergence."""
        return self.l + self.alpha_holder > d / 2


# ---------------------------------------------------------------------------
# evaluation


def haar_eval(idx, x):
    """Evaluate the one-dimensional Haar function ``idx`` at ``x`` (scalar or array)."""
    if not isinstance(idx, HaarIndex1D):
        idx = HaarIndex1D(int(idx))
    scalar = np.ndim(x) == 0
    x = V.check_unit_coordinates(x)
    if idx.n == 1:
        out = np.ones_like(x, dtype=float)
        return float(out) if scalar else out
    a = idx.amplitude
    lo, hi = idx.support
    mid = 0.5 * (lo + hi)
    out = np.zeros_like(x, dtype=float)
    out = np.where((x > lo) & (x < mid), a, out)
    out = np.where((x > mid) & (x < hi), -a, out)
    # x == mid averages +a and -a to zero, already the default
    out = np.where(x == lo, a if lo == 0.0 else 0.5 * a, out)
    out = np.where(x == hi, -a if hi == 1.0 else -0.5 * a, out)
    return float(out) if scalar else out


def haar_basis(x, k):
    """Matrix ``B[p, n-1] = chi_n(x_p)`` for ``n = 1..2**k``.

    Each column is produced by :func:`haar_eval`, so the endpoint and
    breakpoint conventions are shared.
    """
    x = np.atleast_1d(V.check_unit_coordinates(x))
    return np.stack([haar_eval(HaarIndex1D(n), x) for n in range(1, (1 << k) + 1)], axis=-1)


def index_levels(k):
    """Per-axis shell level of positions ``0..2**k - 1``: 0 for ``n=1``, else ``j + 1``."""
    n = np.arange(1, (1 << k) + 1)
    lev = np.zeros(n.shape, dtype=np.int64)
    lev[1:] = np.floor(np.log2(n[1:] - 1)).astype(np.int64) + 1
    return lev


def shell_levels(d, k):
    """Array over ``N_k`` giving the shell ``m`` with ``n`` in ``N_m \\ N_(m-1)``."""
    lev = index_levels(k)
    grids = np.meshgrid(*([lev] * d), indexing="ij")
    return np.maximum.reduce(grids) if d > 1 else grids[0]


# ---------------------------------------------------------------------------
# transforms


def _coarsen_array(values, levels):
    d = values.ndim
    n = values.shape[0] >> levels
    shape = []
    for _ in range(d):
        shape += [n, 1 << levels]
    return values.reshape(shape).mean(axis=tuple(range(1, 2 * d, 2)))


def _forward_axis(a, k, K):
    # acts on the last axis: level-K cell averages -> 2**k Haar coefficients
    if K > k:
        a = a.reshape(*a.shape[:-1], 1 << k, 1 << (K - k)).mean(axis=-1)
    out = np.empty_like(a)
    cur = a
    for j in range(k - 1, -1, -1):
        left, right = cur[..., 0::2], cur[..., 1::2]
        out[..., 1 << j : 1 << (j + 1)] = (left - right) * 2.0 ** (-j / 2 - 1)
        cur = 0.5 * (left + right)
    out[..., 0] = cur[..., 0]
    return out


def _inverse_axis(c, k, K):
    cur = c[..., :1]
    for j in range(k):
        detail = c[..., 1 << j : 1 << (j + 1)] * 2.0 ** (j / 2)
        nxt = np.empty(c.shape[:-1] + (1 << (j + 1),))
        nxt[..., 0::2] = cur + detail
        nxt[..., 1::2] = cur - detail
        cur = nxt
    if K > k:
        cur = np.repeat(cur, 1 << (K - k), axis=-1)
    return cur


def _apply_axes(values, d, fn):
    out = values
    for axis in range(out.ndim - d, out.ndim):
        out = np.moveaxis(fn(np.moveaxis(out, axis, -1)), -1, axis)
    return out


def haar_forward_array(values, d, k):
    """Haar coefficients of the trailing ``d`` axes of ``values`` (leading axes are a batch)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    K = n.bit_length() - 1
    V.check_levels_compatible(k, K)
    return _apply_axes(values, d, lambda a: _forward_axis(a, k, K))


def haar_inverse_array(coefficients, d, K):
    """Inverse of :func:`haar_forward_array` onto the level-``K`` cell grid."""
    coefficients = np.asarray(coefficients, dtype=float)
    k = coefficients.shape[-1].bit_length() - 1
    V.check_levels_compatible(k, K)
    return _apply_axes(coefficients, d, lambda c: _inverse_axis(c, k, K))


def haar_forward(field, k=None):
    """Haar coefficients ``c_n = integral of f * chi_n`` for ``n`` in ``N_k``.

    The coefficients are exact inner products with the piecewise-constant
    field, computed by a per-axis average/difference pyramid.

    Parameters
    ----------
    field : CellField
    k : int, optional
        Truncation level, ``k <= field.K``. Defaults to ``field.K``.

    Returns
    -------
    HaarCoeffTensor
    """
    if k is None:
        k = field.K
    V.check_level(k, "k")
    V.check_levels_compatible(k, field.K)
    coeffs = haar_forward_array(field.values, field.d, k)
    return HaarCoeffTensor(field.d, k, coeffs)


def haar_inverse(coeffs, K=None):
    """Level-``k`` partial sum as a CellField at resolution ``K >= k``."""
    if K is None:
        K = coeffs.k
    V.check_level(K, "K")
    V.check_levels_compatible(coeffs.k, K)
    vals = haar_inverse_array(coeffs.coefficients, coeffs.d, K)
    return CellField(coeffs.d, K, vals)


# ---------------------------------------------------------------------------
# partial sums


def _contract(coefficients, bases):
    # bases[s] has shape (P_s, 2**k); result has shape (P_1, ..., P_d)
    out = coefficients
    for s, B in enumerate(bases):
        out = np.moveaxis(np.tensordot(B, out, axes=([1], [s])), 0, s)
    return out


def partial_sum_grid(coeffs, axes):
    """Evaluate the Fourier-Haar sum on the tensor grid ``axes[0] x ... x axes[d-1]``."""
    if len(axes) != coeffs.d:
        raise ValueError(f"expected {coeffs.d} coordinate axes, got {len(axes)}")
    bases = [haar_basis(np.asarray(a, dtype=float), coeffs.k) for a in axes]
    return _contract(coeffs.coefficients, bases)


def partial_sum(coeffs, points):
    """Evaluate the Fourier-Haar sum at each row of ``points`` (shape ``(P, d)``)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != coeffs.d:
        raise ValueError(f"points must have {coeffs.d} columns")
    V.check_unit_coordinates(points)
    bases = [haar_basis(points[:, s], coeffs.k) for s in range(coeffs.d)]
    # row-wise contraction: sum_n c_n prod_s B_s[p, n_s]
    out = np.broadcast_to(coeffs.coefficients, (points.shape[0],) + coeffs.coefficients.shape)
    for B in reversed(bases):
        out = np.einsum("p...i,pi->p...", out, B)
    return out


def partial_sum_at(coeffs, x):
    """Value of ``S_{2^k}^{(d)}(f, x)`` at a single point.

    Off the level-``k`` grid this is the average of ``f`` over the cell
    containing ``x``; on grid hyperplanes it is the coordinate-wise average of
    adjacent cells.
    """
    x = V.check_unit_point(x, coeffs.d)
    return float(partial_sum(coeffs, x[None, :])[0])


# ---------------------------------------------------------------------------
# bounds


def uniform_error_bound(modulus, k, d):
    """``sum_{l=0}^{d-1} modulus((2l + 1) 2**-k)``, a bound on ``sup |S f - f|``."""
    V.check_level(k, "k")
    V.check_dimension(d)
    return float(sum(modulus((2 * l + 1) * 2.0**-k) for l in range(d)))


def coeff_bound(spec, idx):
    """Upper bound on ``|c_n(f)|`` from the smoothness data of ``f``.

    ``C_f 2**(d-l-1) 2**(-sum_active j_s / 2) 2**-(j^(d) + ... + j^(d-l+1) + alpha j^(d-l))``
    with the ascending level profile ``j^(1) <= ... <= j^(d)``.

    Raises
    ------
    ValueError
        If ``spec.l >= d``; the Hölder term would reference a level that does not exist.
    """
    if not isinstance(idx, HaarIndexD):
        idx = HaarIndexD(tuple(idx))
    d, l = idx.d, spec.l
    if l >= d:
        raise ValueError(f"coefficient bound needs l <= d - 1, got l={l}, d={d}")
    levels = idx.levels
    js = idx.sorted_levels
    active_sum = sum(levels[s] for s in idx.active)
    top = sum(js[d - l :])
    exponent = (d - l - 1) - active_sum / 2 - (top + spec.alpha_holder * js[d - l - 1])
    return float(spec.c_f * 2.0**exponent)
