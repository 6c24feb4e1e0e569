"""Input validation helpers shared by the public modules."""

import numbers

import numpy as np

from .exceptions import GridAlignmentError, ResolutionError

MAX_DIM = 3


def check_dimension(d):
    if not isinstance(d, numbers.Integral) or isinstance(d, bool):
        raise TypeError(f"dimension must be an integer, got {d!r}")
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {d}")
    return int(d)


def check_level(level, name="level", minimum=0):
    if not isinstance(level, numbers.Integral) or isinstance(level, bool):
        raise TypeError(f"{name} must be an integer, got {level!r}")
    if level < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {level}")
    return int(level)


def check_levels_compatible(k, K):
    """Require ``k <= K``; a coarse level cannot exceed the grid resolution."""
    if k > K:
        raise ResolutionError(f"level k={k} exceeds grid resolution K={K}")


def check_unit_point(x, d=None):
    """Return ``x`` as a float array of shape ``(d,)`` lying in the closed unit cube."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError(f"point must be one-dimensional, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise ValueError(f"point has {x.shape[0]} coordinates, expected {d}")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"point {x.tolist()} lies outside [0, 1]^{x.shape[0]}")
    return x


def check_unit_coordinates(x):
    """Array version of :func:`check_unit_point` without a shape constraint."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("coordinates must lie in [0, 1]")
    return x


def grid_index(x, K, atol=1e-12):
    """Map grid-aligned coordinates to integer vertex indices at resolution ``K``.

    Raises
    ------
    GridAlignmentError
        If any coordinate is further than ``atol`` (in grid units) from a vertex.
    """
    x = check_unit_coordinates(x)
    scaled = x * (1 << K)
    idx = np.rint(scaled)
    if np.any(np.abs(scaled - idx) > atol * max(1, 1 << K)):
        raise GridAlignmentError(f"coordinates {np.atleast_1d(x).tolist()} are not on the level-{K} vertex grid")
    return idx.astype(np.int64)


def check_cube_array(values, d, n, name="values"):
    """Require ``values`` to be a finite float array of shape ``(n,) * d``."""
    values = np.asarray(values, dtype=float)
    expected = (n,) * d
    if values.shape != expected:
        raise ValueError(f"{name} must have shape {expected}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains non-finite entries")
    return values


def frozen(values):
    """Return a read-only contiguous copy of ``values``."""
    out = np.array(values, dtype=float, copy=True, order="C")
    out.flags.writeable = False
    return out
