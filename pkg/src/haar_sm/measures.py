"""Simulated stochastic measures on the dyadic grid of [0, 1]^d.

A realization stores ``mu(x) = mu(prod [0, x_s])`` at every vertex of the
level-``K`` grid. Rectangle measures follow by inclusion-exclusion over the
corners, and integrals of tensor Haar functions are signed sums of rectangle
measures.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
import csv
import struct

import numpy as np
from scipy.linalg import cholesky, toeplitz

from . import _validation as V
from . import rng
from .exceptions import BudgetError, ResolutionError
from .haar import CornerField, HaarIndexD, haar_forward_array

__all__ = [
    "SMKind",
    "WienerSheet",
    "FBmSheet",
    "StableSheet",
    "LebesgueOracle",
    "SMRealization",
    "Rect",
    "simulate",
    "rect_increment",
    "haar_integral",
    "restricted_haar_integral",
    "haar_integrals",
    "cell_increments",
    "symmetric_stable",
    "write_field",
    "read_field",
    "export_csv",
    "MAX_RESOLUTION",
]

MAX_RESOLUTION = {1: 10, 2: 8, 3: 6}


class SMKind:
    """Base class of the simulated measure families."""

    tag = -1
    name = "abstract"
    random = True
    continuous_paths = True

    @property
    def params(self):
        """Parameters serialized into the field-file header."""
        return ()

    @classmethod
    def from_params(cls, d, params):
        raise NotImplementedError


@dataclass(frozen=True)
class LebesgueOracle(SMKind):
    """Deterministic Lebesgue measure, ``mu(x) = prod x_s``."""

    d: int
    tag = 0
    name = "lebesgue"
    random = False

    def __post_init__(self):
        V.check_dimension(self.d)

    @classmethod
    def from_params(cls, d, params):
        return cls(d)


@dataclass(frozen=True)
class WienerSheet(SMKind):
    """Brownian sheet with structural measure ``variance * Lebesgue``."""

    d: int
    variance: float = 1.0
    tag = 1
    name = "wiener"

    def __post_init__(self):
        V.check_dimension(self.d)
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")

    @property
    def params(self):
        return (float(self.variance),)

    @classmethod
    def from_params(cls, d, params):
        return cls(d, *params)


@dataclass(frozen=True)
class FBmSheet(SMKind):
    """Fractional Brownian sheet with per-axis Hurst exponents in (1/2, 1)."""

    hurst: tuple
    tag = 2
    name = "fbm"

    def __post_init__(self):
        hurst = tuple(float(h) for h in np.atleast_1d(self.hurst))
        V.check_dimension(len(hurst))
        for h in hurst:
            if not 0.5 < h < 1.0:
                raise ValueError(f"Hurst exponents must lie in (1/2, 1), got {h}; use WienerSheet for H = 1/2")
        object.__setattr__(self, "hurst", hurst)

    @property
    def d(self):
        return len(self.hurst)

    @property
    def params(self):
        return self.hurst

    @classmethod
    def from_params(cls, d, params):
        return cls(tuple(params))


@dataclass(frozen=True)
class StableSheet(SMKind):
    """Independently scattered symmetric alpha-stable measure.

    The cell measure of a set ``A`` is symmetric alpha-stable with scale
    ``scale * lambda(A)**(1/alpha)``. Paths are not continuous.
    """

    d: int
    alpha: float
    scale: float = 1.0
    tag = 3
    name = "stable"
    continuous_paths = False

    def __post_init__(self):
        V.check_dimension(self.d)
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"stability index must be in (0, 2), got {self.alpha}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def params(self):
        return (float(self.alpha), float(self.scale))

    @classmethod
    def from_params(cls, d, params):
        return cls(d, *params)


KINDS = {k.tag: k for k in (LebesgueOracle, WienerSheet, FBmSheet, StableSheet)}


@dataclass(frozen=True, eq=False)
class SMRealization:
    """One path of a stochastic measure sampled on the level-``K`` vertex grid."""

    kind: SMKind
    seed: int
    K: int
    sheet: CornerField
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.sheet.K != self.K or self.sheet.d != self.kind.d:
            raise ValueError("sheet shape does not match kind and resolution")
        vals = self.sheet.values
        for axis in range(self.d):
            if np.any(np.take(vals, 0, axis=axis) != 0.0):
                raise ValueError("mu(x) must vanish when a coordinate is 0")

    @property
    def d(self):
        return self.kind.d

    def value(self, x):
        """``mu(x)`` at a grid vertex ``x``."""
        idx = V.grid_index(V.check_unit_point(x, self.d), self.K)
        return float(self.sheet.values[tuple(idx)])

    def cell_increments(self, m=None):
        """Measures of the level-``m`` dyadic cells, shape ``(2**m,) * d``."""
        m = self.K if m is None else m
        V.check_levels_compatible(m, self.K)
        key = ("cells", m)
        if key not in self._cache:
            self._cache[key] = cell_increments(self.sheet.subsample(m).values)
        return self._cache[key]


@dataclass(frozen=True)
class Rect:
    """Closed axis-parallel rectangle ``prod [lower_s, upper_s]``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("lower and upper corners have different dimensions")
        V.check_unit_coordinates(np.array(lo + hi))
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"lower corner {lo} exceeds upper corner {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self):
        return len(self.lower)

    def intersect_lower_orthant(self, y):
        """Intersection with ``prod [0, y_s]`` (possibly degenerate)."""
        lo = tuple(min(a, t) for a, t in zip(self.lower, y))
        hi = tuple(min(b, t) for b, t in zip(self.upper, y))
        return Rect(lo, hi)


def cell_increments(vertex_values):
    """Inclusion-exclusion of vertex values into cell measures (one difference per axis)."""
    out = np.asarray(vertex_values, dtype=float)
    for axis in range(out.ndim):
        out = np.diff(out, axis=axis)
    return out


def _vertices_from_cells(cells):
    out = np.asarray(cells, dtype=float)
    for axis in range(out.ndim):
        out = np.cumsum(out, axis=axis)
    return np.pad(out, [(1, 0)] * out.ndim)


def symmetric_stable(alpha, u_angle, u_exp):
    """Standard symmetric alpha-stable variates from two uniform arrays.

    Chambers-Mallows-Stuck transform with ``V = pi (u_angle - 1/2)`` and
    ``W = -log(u_exp)``; the characteristic function is ``exp(-|t|**alpha)``.
    """
    v = np.pi * (np.asarray(u_angle) - 0.5)
    w = -np.log(u_exp)
    if alpha == 1.0:
        return np.tan(v)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
    )


@lru_cache(maxsize=32)
def _fgn_factor(hurst, K):
    # Cholesky factor of fractional Gaussian noise on 2**K steps of size 2**-K
    n = 1 << K
    lag = np.arange(n, dtype=float)
    two_h = 2.0 * hurst
    gamma = 0.5 * (np.abs(lag + 1) ** two_h - 2.0 * lag**two_h + np.abs(lag - 1) ** two_h)
    cov = toeplitz(gamma) * (2.0**-K) ** two_h
    factor = cholesky(cov, lower=True)
    factor.flags.writeable = False
    return factor


def _check_budget(d, K):
    limit = MAX_RESOLUTION[d]
    if K > limit:
        raise BudgetError(f"resolution K={K} exceeds the budget K<={limit} for d={d}")


def simulate(kind, K, seed, domain=0, chunk=None):
    """Simulate one realization of ``kind`` on the level-``K`` grid.

    Parameters
    ----------
    kind : SMKind
    K : int
        Grid resolution; ``2**K`` cells per axis.
    seed : int
        64-bit seed. Realizations are a deterministic function of
        ``(kind, K, seed, domain)``.
    domain : int, default=0
        Stream separator, used by experiment drivers to keep unrelated
        experiments on disjoint random streams.
    chunk : int, optional
        Number of variates drawn per RNG call. Does not change the output.

    Returns
    -------
    SMRealization
    """
    if not isinstance(kind, SMKind):
        raise TypeError(f"kind must be an SMKind, got {type(kind).__name__}")
    d = kind.d
    K = V.check_level(K, "K")
    _check_budget(d, K)
    n = 1 << K
    count = n**d
    volume = 2.0 ** (-d * K)

    if isinstance(kind, LebesgueOracle):
        axis = np.arange(n + 1) / n
        vertices = axis
        for _ in range(d - 1):
            vertices = np.multiply.outer(vertices, axis)
        return SMRealization(kind, int(seed), K, CornerField(d, K, vertices))

    if isinstance(kind, WienerSheet):
        z = rng.chunked(rng.normals, seed, kind.tag, count, chunk, domain)
        cells = z.reshape((n,) * d) * np.sqrt(volume * kind.variance)
    elif isinstance(kind, FBmSheet):
        z = rng.chunked(rng.normals, seed, kind.tag, count, chunk, domain).reshape((n,) * d)
        cells = z
        for axis, h in enumerate(kind.hurst):
            factor = _fgn_factor(h, K)
            cells = np.moveaxis(np.tensordot(factor, cells, axes=([1], [axis])), 0, axis)
    elif isinstance(kind, StableSheet):
        u = rng.chunked(rng.uniforms, seed, kind.tag, 2 * count, chunk, domain).reshape(count, 2)
        x = symmetric_stable(kind.alpha, u[:, 0], u[:, 1])
        cells = x.reshape((n,) * d) * (kind.scale * volume ** (1.0 / kind.alpha))
    else:
        raise TypeError(f"unsupported kind {kind!r}")

    vertices = _vertices_from_cells(cells)
    if not np.all(np.isfinite(vertices)):
        raise FloatingPointError("simulation produced non-finite values")
    return SMRealization(kind, int(seed), K, CornerField(d, K, vertices))


# ---------------------------------------------------------------------------
# queries


def _rect_indices(sm, rect):
    if rect.d != sm.d:
        raise ValueError(f"rectangle dimension {rect.d} does not match measure dimension {sm.d}")
    lo = V.grid_index(np.array(rect.lower), sm.K)
    hi = V.grid_index(np.array(rect.upper), sm.K)
    return lo, hi


def rect_increment(sm, rect):
    """``mu(rect)`` by inclusion-exclusion over the ``2**d`` corners.

    Raises
    ------
    GridAlignmentError
        If a corner is off the level-``K`` vertex grid.
    """
    lo, hi = _rect_indices(sm, rect)
    return _rect_increment_idx(sm.sheet.values, lo, hi)


def _rect_increment_idx(values, lo, hi):
    total = 0.0
    d = len(lo)
    for corner in product((0, 1), repeat=d):
        idx = tuple(int(hi[s]) if c else int(lo[s]) for s, c in enumerate(corner))
        sign = -1.0 if (d - sum(corner)) % 2 else 1.0
        total += sign * values[idx]
    return float(total)


def _haar_rectangles(sm, idx):
    # (sign, Rect) pairs; their signed sum times 2**(sum_active j/2) is the Haar integral
    if idx.d != sm.d:
        raise ValueError(f"index dimension {idx.d} does not match measure dimension {sm.d}")
    for s in idx.active:
        if idx.levels[s] + 1 > sm.K:
            raise ResolutionError(
                f"Haar index {idx.indices} needs level {idx.levels[s] + 1} > K={sm.K} to split its support"
            )
    choices = []
    for ax in idx.axes:
        if ax.is_constant:
            choices.append([(1.0, (0.0, 1.0))])
        else:
            choices.append([(1.0, ax.plus_half), (-1.0, ax.minus_half)])
    for combo in product(*choices):
        sign = float(np.prod([c[0] for c in combo]))
        yield sign, Rect(tuple(c[1][0] for c in combo), tuple(c[1][1] for c in combo))


def haar_integral(sm, idx):
    """Integral of the tensor Haar function ``idx`` against ``sm``.

    Computed directly as ``2**(sum_active j_s / 2)`` times the signed sum of
    the measures of the ``2**|active|`` half-interval products.
    """
    if not isinstance(idx, HaarIndexD):
        idx = HaarIndexD(tuple(idx))
    pieces = list(_haar_rectangles(sm, idx))
    scale = 2.0 ** (sum(idx.levels[s] for s in idx.active) / 2)
    return scale * sum(sign * rect_increment(sm, rect) for sign, rect in pieces)


def restricted_haar_integral(sm, idx, y):
    """Integral of the tensor Haar function ``idx`` over ``prod [0, y_s]``.

    ``y`` must be a vertex of the level-``K`` grid.
    """
    if not isinstance(idx, HaarIndexD):
        idx = HaarIndexD(tuple(idx))
    y = V.check_unit_point(y, sm.d)
    V.grid_index(y, sm.K)
    pieces = list(_haar_rectangles(sm, idx))
    scale = 2.0 ** (sum(idx.levels[s] for s in idx.active) / 2)
    return scale * sum(sign * rect_increment(sm, rect.intersect_lower_orthant(y)) for sign, rect in pieces)


def haar_integrals(sm, k):
    """All integrals ``integral chi_n dmu`` for ``n`` in ``N_k`` as a dense array.

    Since every ``chi_n`` with ``n`` in ``N_k`` is constant on level-``k``
    cells, the integrals are the Haar coefficients of the cell-measure density
    ``mu(cell) / |cell|``. Cached on the realization.
    """
    V.check_level(k, "k")
    if k > sm.K:
        raise ResolutionError(f"level k={k} needs resolution K>={k}, realization has K={sm.K}")
    key = ("haar", k)
    if key not in sm._cache:
        density = sm.cell_increments(k) * float(1 << (sm.d * k))
        out = haar_forward_array(density, sm.d, k)
        out.flags.writeable = False
        sm._cache[key] = out
    return sm._cache[key]


# ---------------------------------------------------------------------------
# I/O

_MAGIC = b"HSM1"
_HEADER = struct.Struct("<4sIIII")
_SEED = struct.Struct("<Q")


def write_field(path, sm):
    """Write a realization in the ``HSM1`` binary layout.

    Layout (little-endian): magic ``b"HSM1"``, ``uint32`` d, ``uint32`` K,
    ``uint32`` kind tag, ``uint32`` parameter count ``P``, ``P`` float64
    parameters, ``uint64`` seed, then the ``(2**K + 1)**d`` vertex values as
    float64 in row-major (C) order.
    """
    params = tuple(float(p) for p in sm.kind.params)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, sm.d, sm.K, sm.kind.tag, len(params)))
        fh.write(struct.pack(f"<{len(params)}d", *params))
        fh.write(_SEED.pack(int(sm.seed)))
        fh.write(np.ascontiguousarray(sm.sheet.values, dtype="<f8").tobytes())


def read_field(path):
    """Inverse of :func:`write_field`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size or data[:4] != _MAGIC:
        raise ValueError(f"{path} is not an HSM1 field file")
    _, d, K, tag, nparams = _HEADER.unpack_from(data, 0)
    offset = _HEADER.size
    params = struct.unpack_from(f"<{nparams}d", data, offset)
    offset += 8 * nparams
    (seed,) = _SEED.unpack_from(data, offset)
    offset += _SEED.size
    shape = ((1 << K) + 1,) * d
    expected = int(np.prod(shape)) * 8
    if len(data) - offset != expected:
        raise ValueError(f"{path}: expected {expected} bytes of vertex data, found {len(data) - offset}")
    values = np.frombuffer(data, dtype="<f8", offset=offset).reshape(shape)
    if tag not in KINDS:
        raise ValueError(f"{path}: unknown kind tag {tag}")
    kind = KINDS[tag].from_params(d, params)
    return SMRealization(kind, seed, K, CornerField(d, K, values))


def export_csv(path, field_or_sm):
    """Write vertex values as CSV with columns ``i_1, ..., i_d, value``."""
    corner = field_or_sm.sheet if isinstance(field_or_sm, SMRealization) else field_or_sm
    vals = corner.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"i_{s + 1}" for s in range(corner.d)] + ["value"])
        for idx in np.ndindex(vals.shape):
            writer.writerow(list(idx) + [repr(float(vals[idx]))])
