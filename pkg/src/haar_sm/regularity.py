"""Moduli of continuity, Besov norms and Hölder fits for vertex fields.

Shifts ``h`` range over integer multiples of the grid step with Euclidean
length at most ``r``. For ``d <= 2`` every such shift is considered; for
``d = 3`` only the axis, face-diagonal and body-diagonal directions are, which
can only under-estimate the moduli.
"""

from dataclasses import dataclass
from math import isqrt, log
import itertools
import json

import numpy as np
from numba import njit
from scipy.ndimage import maximum_filter1d
from scipy.stats import linregress

from .exceptions import AssumptionError, ResolutionError
from .haar import CornerField

__all__ = [
    "ModulusCurve",
    "BesovEstimate",
    "A3Diagnostic",
    "uniform_modulus",
    "lp_modulus",
    "modulus_curve",
    "besov_norm",
    "besov_norms",
    "holder_fit",
    "a3_diagnostic",
    "lp_norm",
]

# squared-radius slack so that r = m * 2**-K admits the shift of length m
_R2_SLACK = 1e-9

_DIRECTIONS_3D = [
    v
    for v in itertools.product((-1, 0, 1), repeat=3)
    if any(v) and next(c for c in v if c) > 0
]


@dataclass(frozen=True, eq=False)
class ModulusCurve:
    """Modulus values at radii ``2**-m``; ``flavor`` is ``"uniform"`` or ``"lp"``."""

    radii: np.ndarray
    values: np.ndarray
    flavor: str = "uniform"
    p: float = None

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,value\n")
            for r, v in zip(self.radii, self.values):
                fh.write(f"{float(r)!r},{float(v)!r}\n")


@dataclass(frozen=True)
class BesovEstimate:
    """Discretized ``B^alpha_{p,p}`` norm of a vertex field.

    ``modulus_integral`` covers radii in ``[2**-(K-1), 1]``; ``total`` is
    ``lp_norm + modulus_integral**(1/p)``. ``tail_estimate`` is the power-law
    extrapolation of the unresolved segment ``(0, 2**-(K-1))`` (``inf`` when
    the local decay is too slow for the integral to converge).
    """

    p: float
    alpha_besov: float
    lp_norm: float
    modulus_integral: float
    total: float
    K: int
    tail_estimate: float
    tail_exponent: float

    @property
    def total_extrapolated(self):
        return self.lp_norm + (self.modulus_integral + self.tail_estimate) ** (1.0 / self.p)

    def to_json(self):
        record = {k: getattr(self, k) for k in self.__dataclass_fields__}
        record["total_extrapolated"] = self.total_extrapolated
        return json.dumps({k: (None if not np.isfinite(v) else v) for k, v in record.items()}, sort_keys=True)


@dataclass(frozen=True, eq=False)
class A3Diagnostic:
    """Summands ``k**(d-2) * omega(mu, 2**-k)`` and their partial sums."""

    levels: np.ndarray
    summands: np.ndarray
    d: int

    @property
    def partial_sums(self):
        return np.cumsum(self.summands)

    @property
    def ratios(self):
        """``s_(k+1) / s_k``; NaN where ``s_k`` vanishes."""
        s = self.summands
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s[:-1] > 0, s[1:] / np.where(s[:-1] > 0, s[:-1], 1.0), np.nan)


# ---------------------------------------------------------------------------
# shifts and weights


def _radius_squared(field, r):
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if r > np.sqrt(field.d) * (1 + 1e-12):
        raise ValueError(f"radius {r} exceeds the cube diameter sqrt({field.d})")
    R2 = int(np.floor((r * (1 << field.K)) ** 2 + _R2_SLACK))
    if R2 < 1:
        raise ResolutionError(f"radius {r} is below the grid step 2**-{field.K}")
    return R2


def _half_shifts(d, R2):
    """Nonzero shifts with ``|h|**2 <= R2``, one of each ``{h, -h}`` pair, sorted by length."""
    R = isqrt(R2)
    if d == 3:
        out = []
        for v in _DIRECTIONS_3D:
            n2 = sum(c * c for c in v)
            t = 1
            while t * t * n2 <= R2:
                out.append(tuple(t * c for c in v))
                t += 1
    else:
        rng = range(-R, R + 1)
        out = [
            h
            for h in itertools.product(rng, repeat=d)
            if any(h) and next(c for c in h if c) > 0 and sum(c * c for c in h) <= R2
        ]
    out.sort(key=lambda h: (sum(c * c for c in h), h))
    return np.array(out, dtype=np.int64).reshape(-1, d)


def _trapezoid_weights(count, step):
    if count <= 1:
        return np.zeros(max(count, 0))
    w = np.full(count, step)
    w[0] = w[-1] = 0.5 * step
    return w


def lp_norm(field, p):
    """Trapezoidal ``L_p`` norm of the vertex field over the unit cube."""
    n = field.values.shape[0]
    w = _trapezoid_weights(n, field.step)
    weights = w
    for _ in range(field.d - 1):
        weights = np.multiply.outer(weights, w)
    return float(np.sum(weights * np.abs(field.values) ** p) ** (1.0 / p))


def _overlap_slices(h, n):
    src, dst = [], []
    for c in h:
        if c >= 0:
            src.append(slice(0, n - c))
            dst.append(slice(c, n))
        else:
            src.append(slice(-c, n))
            dst.append(slice(0, n + c))
    return tuple(src), tuple(dst)


def _shift_integral_numpy(u, h, p, step):
    src, dst = _overlap_slices(h, u.shape[0])
    diff = np.abs(u[dst] - u[src])
    return float(np.sum(diff**p)) * step**u.ndim


@njit(cache=True)
def _shift_integrals_2d(u, shifts, p, step):
    n0, n1 = u.shape
    out = np.empty(shifts.shape[0])
    for t in range(shifts.shape[0]):
        a = shifts[t, 0]
        b = shifts[t, 1]
        lo0 = 0 if a >= 0 else -a
        hi0 = n0 - a if a >= 0 else n0
        lo1 = 0 if b >= 0 else -b
        hi1 = n1 - b if b >= 0 else n1
        total = 0.0
        for i in range(lo0, hi0):
            for j in range(lo1, hi1):
                diff = abs(u[i + a, j + b] - u[i, j])
                if p == 2.0:
                    total += diff * diff
                elif p == 1.0:
                    total += diff
                else:
                    total += diff**p
        out[t] = total * step * step
    return out


def _shift_integrals(field, shifts, p):
    u = np.ascontiguousarray(field.values)
    if field.d == 2 and len(shifts):
        return _shift_integrals_2d(u, shifts, float(p), field.step)
    return np.array([_shift_integral_numpy(u, tuple(h), p, field.step) for h in shifts])


def _shift_sup(u, h):
    src, dst = _overlap_slices(h, u.shape[0])
    return float(np.max(np.abs(u[dst] - u[src])))


def _disk_sup_increment(u, R2):
    # max over vertex pairs at grid distance^2 <= R2 of |u(y) - u(x)|: the
    # disk is a union of row segments, each handled by a 1-D running maximum
    R = isqrt(R2)
    pad = float(u.min())
    if u.ndim == 1:
        top = maximum_filter1d(u, size=2 * R + 1, mode="constant", cval=pad)
        return float(np.max(top - u))
    n0 = u.shape[0]
    top = np.full_like(u, pad)
    rows = {}
    for dy in range(-R, R + 1):
        w = isqrt(R2 - dy * dy)
        if w not in rows:
            rows[w] = maximum_filter1d(u, size=2 * w + 1, axis=1, mode="constant", cval=pad)
        rm = rows[w]
        if dy >= 0:
            np.maximum(top[: n0 - dy], rm[dy:], out=top[: n0 - dy])
        else:
            np.maximum(top[-dy:], rm[: n0 + dy], out=top[-dy:])
    return float(np.max(top - u))


# ---------------------------------------------------------------------------
# moduli


def uniform_modulus(field, r):
    """``sup |u(x + h) - u(x)|`` over vertex pairs with ``|h| <= r``.

    Raises
    ------
    ResolutionError
        If ``r`` is below one grid step.
    """
    R2 = _radius_squared(field, r)
    u = np.asarray(field.values)
    if field.d <= 2:
        return _disk_sup_increment(u, R2)
    shifts = _half_shifts(field.d, R2)
    return max(_shift_sup(u, tuple(h)) for h in shifts)


def lp_modulus(field, p, r):
    """``sup_{|h| <= r} (integral over I_h of |u(x + h) - u(x)|**p dx)**(1/p)``.

    ``I_h`` is the set of vertices ``x`` with ``x + h`` in the cube; each
    vertex carries the cell volume ``2**(-d K)``.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    R2 = _radius_squared(field, r)
    shifts = _half_shifts(field.d, R2)
    return float(np.max(_shift_integrals(field, shifts, p)) ** (1.0 / p))


def _lp_curve(field, p, radii):
    R2s = [_radius_squared(field, r) for r in radii]
    shifts = _half_shifts(field.d, max(R2s))
    vals = _shift_integrals(field, shifts, p)
    norms = np.sum(shifts**2, axis=1)
    running = np.maximum.accumulate(vals)
    out = []
    for R2 in R2s:
        count = int(np.searchsorted(norms, R2, side="right"))
        out.append(running[count - 1] ** (1.0 / p))
    return np.array(out)


def modulus_curve(field, flavor="uniform", p=None, levels=None):
    """Moduli at radii ``2**-m`` for ``m`` in ``levels`` (default ``1..K``)."""
    if levels is None:
        levels = range(1, field.K + 1)
    levels = np.asarray(list(levels), dtype=int)
    radii = 2.0 ** -levels.astype(float)
    if flavor == "uniform":
        vals = np.array([uniform_modulus(field, r) for r in radii])
    elif flavor == "lp":
        if p is None:
            raise ValueError("the lp flavor needs p")
        vals = _lp_curve(field, p, radii)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    return ModulusCurve(radii, vals, flavor, p)


def besov_norm(field, p, alpha_besov):
    """Discretized Besov ``B^alpha_{p,p}`` norm.

    The radial integral ``integral_0^1 omega_p(f, r)**p r**(-alpha p - 1) dr``
    is evaluated on ``[2**-(K-1), 1]`` by the trapezoidal rule in ``log r`` with
    nodes ``r_m = 2**-m``. The segment below the finest node is reported
    separately as ``tail_estimate``: with ``s`` the log-log slope of
    ``omega_p**p`` over the two finest radii ``2**-(K-1)`` and ``2**-K``, it is
    ``omega_p(r_min)**p r_min**(-alpha p) / (s - alpha p)``.
    """
    return besov_norms(field, p, [alpha_besov])[0]


def besov_norms(field, p, alphas):
    """:func:`besov_norm` for several exponents sharing one modulus curve."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ValueError(f"alpha_besov must lie in (0, 1), got {a}")
    K = field.K
    if K < 2:
        raise ResolutionError("Besov estimates need K >= 2")
    levels = np.arange(0, K + 1)
    radii = 2.0 ** -levels.astype(float)
    omega_p = _lp_curve(field, p, radii) ** p
    norm = lp_norm(field, p)
    weights = np.full(K, log(2.0))
    weights[0] = weights[-1] = 0.5 * log(2.0)
    fine, finest = omega_p[K - 1], omega_p[K]
    s = float(np.log2(fine / finest)) if fine > 0 and finest > 0 else float("nan")
    out = []
    for a in alphas:
        ap = a * p
        g = omega_p[:K] * radii[:K] ** (-ap)
        integral = float(np.sum(weights * g))
        if fine == 0.0 or finest == 0.0:
            tail = 0.0
        else:
            tail = float(g[-1] / (s - ap)) if s > ap else float("inf")
        out.append(
            BesovEstimate(
                p=float(p),
                alpha_besov=float(a),
                lp_norm=norm,
                modulus_integral=integral,
                total=norm + integral ** (1.0 / p),
                K=K,
                tail_estimate=tail,
                tail_exponent=s,
            )
        )
    return out


def holder_fit(curve):
    """Log-log slope of the modulus over the finest half of the radii.

    Returns
    -------
    (exponent, r_squared) : tuple of float
    """
    radii = np.asarray(curve.radii, dtype=float)
    vals = np.asarray(curve.values, dtype=float)
    if radii.size < 3:
        raise ValueError("a Hölder fit needs at least 3 radii")
    order = np.argsort(radii)
    keep = order[: (radii.size + 1) // 2]
    r, v = radii[keep], vals[keep]
    ok = v > 0
    if ok.sum() < 2:
        raise ValueError("fewer than two positive modulus values among the finest radii")
    fit = linregress(np.log(r[ok]), np.log(v[ok]))
    return float(fit.slope), float(fit.rvalue**2)


def a3_diagnostic(sm):
    """Summands ``k**(d-2) omega(mu, 2**-k)``, ``k = 1..K-1``, of a realization.

    Raises
    ------
    AssumptionError
        For ``d = 1`` (the condition is vacuous) or when the measure does not
        have continuous paths.
    """
    if sm.d < 2:
        raise AssumptionError("assumption vacuous for d = 1")
    if not sm.kind.continuous_paths:
        raise AssumptionError(f"{sm.kind.name} paths are not continuous; the diagnostic requires continuity")
    levels = np.arange(1, sm.K)
    summands = np.array([k ** (sm.d - 2) * uniform_modulus(sm.sheet, 2.0**-k) for k in levels], dtype=float)
    return A3Diagnostic(levels, summands, sm.d)


def require_continuous(sm):
    """Raise :class:`AssumptionError` unless ``sm`` comes from a continuous-path kind."""
    if not sm.kind.continuous_paths:
        raise AssumptionError(f"{sm.kind.name} paths are not continuous")


def as_corner_field(obj):
    """Accept a CornerField, an SMRealization or an upper-limit PathResult."""
    if isinstance(obj, CornerField):
        return obj
    if hasattr(obj, "sheet"):
        return obj.sheet
    if hasattr(obj, "as_corner_field"):
        return obj.as_corner_field()
    raise TypeError(f"cannot interpret {type(obj).__name__} as a vertex field")
