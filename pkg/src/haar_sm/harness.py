"""Experiment runner behind the ``haar-sm`` command.

Every experiment maps a list of seeds to CSV rows. Seed ``seed0 + i`` drives
an independent realization whose random stream is further separated by an
experiment-specific domain tag, so the same seed in two experiments never
shares variates. Rows are sorted before writing and floats are written with
``repr``; the bytes of every CSV depend only on the config.

CSV schemas
-----------
simulate      seed, corner, sup_abs        (plus one ``field_<seed>.hsm`` per seed)
integrate     seed, k, value
param-study   seed, z, value
upper-limit   seed, level, tail, value     (value is the path at the upper corner)
besov         seed, p, alpha, lp_norm, modulus_integral, total, K
convergence   seed, level, tail, value     (plus ``convergence_summary.csv``: level, mean_tail)
selftest      check, status, detail
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import json
import os
import time

import numpy as np

from ._version import __version__
from . import integrands as I
from .exceptions import ConfigError, HaarSMError
from .haar import CellField, haar_basis, haar_forward, haar_inverse
from .integral import integrate, integrate_param, integrate_upper
from .measures import (
    MAX_RESOLUTION,
    FBmSheet,
    LebesgueOracle,
    StableSheet,
    WienerSheet,
    haar_integrals,
    simulate,
    write_field,
)
from .regularity import besov_norms

__all__ = ["ExperimentConfig", "RunReport", "run", "selftest", "EXPERIMENTS", "load_config"]

EXPERIMENTS = ("simulate", "integrate", "param-study", "upper-limit", "besov", "convergence", "selftest")
SM_KINDS = ("lebesgue", "wiener", "fbm", "stable")

# stream domains; fixed forever so configs stay reproducible across versions
_DOMAIN = {name: i + 1 for i, name in enumerate(EXPERIMENTS)}

_COLUMNS = {
    "simulate": ("seed", "corner", "sup_abs"),
    "integrate": ("seed", "k", "value"),
    "param-study": ("seed", "z", "value"),
    "upper-limit": ("seed", "level", "tail", "value"),
    "besov": ("seed", "p", "alpha", "lp_norm", "modulus_integral", "total", "K"),
    "convergence": ("seed", "level", "tail", "value"),
    "selftest": ("check", "status", "detail"),
}
_KEYS = {
    "simulate": 1,
    "integrate": 2,
    "param-study": 2,
    "upper-limit": 2,
    "besov": 3,
    "convergence": 2,
    "selftest": 1,
}


@dataclass
class ExperimentConfig:
    """Complete description of one experiment run.

    ``k`` defaults to ``K``. ``integrand`` defaults to ``exp-family`` for
    ``param-study`` and ``product-linear`` otherwise. ``besov_levels`` lists the resolutions at which
    the Besov norm of the target is evaluated (default ``[K]``); coarser levels
    subsample the level-``K`` path. ``besov_target`` is ``"upper-limit"`` (the
    path of the Haar-series upper-limit integral) or ``"measure"``.
    """

    experiment: str = "integrate"
    kind: str = "wiener"
    d: int = 2
    K: int = 6
    k: int = None
    variance: float = 1.0
    hurst: list = None
    stable_alpha: float = 1.5
    stable_scale: float = 1.0
    integrand: str = None
    constant: float = 1.0
    z_grid: list = None
    p: float = 2.0
    alpha_besov: list = field(default_factory=lambda: [0.4])
    besov_levels: list = None
    besov_target: str = "upper-limit"
    seeds: list = None
    seed0: int = 0
    count: int = 1
    out: str = "haar-sm-out"

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def with_overrides(self, **overrides):
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(data)

    @property
    def integrand_name(self):
        if self.integrand is not None:
            return self.integrand
        return "exp-family" if self.experiment == "param-study" else "product-linear"

    @property
    def level(self):
        return self.K if self.k is None else self.k

    def seed_list(self):
        if self.seeds is not None:
            return [int(s) for s in self.seeds]
        return [self.seed0 + i for i in range(self.count)]

    def echo(self):
        """Config with the seed list expanded; re-running it reproduces the CSVs."""
        data = asdict(self)
        data["seeds"] = self.seed_list()
        return data

    def validate(self):
        _check_choice("experiment", self.experiment, EXPERIMENTS)
        _check_choice("kind", self.kind, SM_KINDS)
        _check_int("d", self.d, 1, 3)
        _check_int("K", self.K, 0, MAX_RESOLUTION.get(self.d, 0))
        if self.k is not None:
            _check_int("k", self.k, 0, self.K)
        _check_int("seed0", self.seed0, 0, 2**63)
        _check_int("count", self.count, 1, 10**7)
        if self.seeds is not None:
            if not isinstance(self.seeds, list) or not self.seeds:
                raise ConfigError("seeds", "must be a nonempty list of integers")
            for s in self.seeds:
                _check_int("seeds", s, 0, 2**63)
        if self.integrand_name not in I.BUILTINS:
            raise ConfigError("integrand", f"unknown built-in {self.integrand_name!r}; choose from {sorted(I.BUILTINS)}")
        if self.kind == "fbm":
            hurst = self.hurst if self.hurst is not None else [0.7] * self.d
            if not isinstance(hurst, list) or len(hurst) != self.d:
                raise ConfigError("hurst", f"needs one exponent per axis (d={self.d})")
        if self.z_grid is not None:
            z = np.asarray(self.z_grid, dtype=float)
            if z.ndim != 1 or z.size == 0 or np.any(np.diff(z) <= 0):
                raise ConfigError("z_grid", "must be a nonempty strictly increasing list")
        if not (isinstance(self.p, (int, float)) and self.p >= 1):
            raise ConfigError("p", f"must be >= 1, got {self.p!r}")
        alphas = self.alpha_besov if isinstance(self.alpha_besov, list) else [self.alpha_besov]
        if not alphas or not all(isinstance(a, (int, float)) and 0 < a < 1 for a in alphas):
            raise ConfigError("alpha_besov", f"values must lie in (0, 1), got {self.alpha_besov!r}")
        self.alpha_besov = [float(a) for a in alphas]
        if self.besov_levels is not None:
            if not isinstance(self.besov_levels, list) or not self.besov_levels:
                raise ConfigError("besov_levels", "must be a nonempty list")
            for lv in self.besov_levels:
                _check_int("besov_levels", lv, 2, self.K)
        _check_choice("besov_target", self.besov_target, ("upper-limit", "measure"))
        try:
            self.make_kind()
        except ValueError as exc:
            param = {"wiener": "variance", "fbm": "hurst", "stable": "stable_alpha"}.get(self.kind, "kind")
            raise ConfigError(param, str(exc)) from None
        if self.experiment in ("upper-limit", "besov") and self.kind == "stable":
            raise ConfigError("kind", "stable sheets violate path continuity; this diagnostic needs continuous paths")
        if self.experiment == "param-study" and self.integrand_name != "exp-family":
            raise ConfigError("integrand", "param-study needs a parametric family (exp-family)")
        if self.experiment != "param-study" and self.integrand_name == "exp-family":
            raise ConfigError("integrand", "exp-family is parametric; use the param-study experiment")
        if self.experiment == "besov" and self.K < 2:
            raise ConfigError("K", "Besov estimates need K >= 2")

    def make_kind(self):
        if self.kind == "lebesgue":
            return LebesgueOracle(self.d)
        if self.kind == "wiener":
            return WienerSheet(self.d, float(self.variance))
        if self.kind == "fbm":
            hurst = self.hurst if self.hurst is not None else [0.7] * self.d
            return FBmSheet(tuple(hurst))
        return StableSheet(self.d, float(self.stable_alpha), float(self.stable_scale))

    def make_integrand(self):
        name = self.integrand_name
        if name == "constant":
            return I.constant(self.d, self.constant)
        if name == "exp-family":
            return I.exp_family(self.d, self.z_grid)
        return I.builtin(name, self.d)


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(name, f"must be one of {list(choices)}, got {value!r}")


def _check_int(name, value, lo, hi):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(name, f"must be an integer, got {value!r}")
    if not lo <= value <= hi:
        raise ConfigError(name, f"must lie in [{lo}, {hi}], got {value}")


def load_config(path=None, **overrides):
    """Defaults, then the JSON file at ``path``, then non-None ``overrides``."""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@dataclass
class RunReport:
    """Rows, aggregates and provenance of one run."""

    experiment: str
    columns: tuple
    rows: list
    aggregates: dict
    tails: dict
    wall_clock: float
    config: dict
    version: str = __version__
    passed: bool = True

    def to_json(self):
        return json.dumps(
            {
                "experiment": self.experiment,
                "columns": list(self.columns),
                "rows": [list(r) for r in self.rows],
                "aggregates": self.aggregates,
                "tails": self.tails,
                "wall_clock": self.wall_clock,
                "config": self.config,
                "version": self.version,
                "passed": self.passed,
            },
            indent=2,
            default=_json_default,
        )


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# per-seed workers; each returns a list of row tuples


def _realize(cfg, seed):
    return simulate(cfg.make_kind(), cfg.K, seed, domain=_DOMAIN[cfg.experiment])


def _rows_simulate(cfg, seed):
    sm = _realize(cfg, seed)
    write_field(os.path.join(cfg.out, f"field_{seed}.hsm"), sm)
    corner = float(sm.sheet.values[(-1,) * cfg.d])
    return [(seed, corner, float(np.abs(sm.sheet.values).max()))]


def _rows_integrate(cfg, seed):
    res = integrate(cfg.make_integrand(), _realize(cfg, seed), cfg.level)
    return [(seed, cfg.level, res.value)]


def _rows_param(cfg, seed):
    path = integrate_param(cfg.make_integrand(), _realize(cfg, seed), cfg.level)
    return [(seed, float(z), float(v)) for z, v in zip(path.grid, path.values)]


def _rows_upper(cfg, seed):
    path = integrate_upper(cfg.make_integrand(), _realize(cfg, seed), cfg.level)
    corner = float(path.values[(-1,) * cfg.d])
    return [(seed, m + 1, float(t), corner) for m, t in enumerate(path.sup_tails)]


def _rows_besov(cfg, seed):
    sm = _realize(cfg, seed)
    if cfg.besov_target == "measure":
        target = sm.sheet
    else:
        target = integrate_upper(cfg.make_integrand(), sm, cfg.level).as_corner_field()
    rows = []
    for K in cfg.besov_levels or [cfg.K]:
        sub = target.subsample(K)
        for a, est in zip(cfg.alpha_besov, besov_norms(sub, cfg.p, cfg.alpha_besov)):
            rows.append((seed, float(cfg.p), float(a), est.lp_norm, est.modulus_integral, est.total, K))
    return rows


def _rows_convergence(cfg, seed):
    res = integrate(cfg.make_integrand(), _realize(cfg, seed), cfg.level)
    partial = res.partial_values
    return [(seed, m, float(abs(res.increments[m])), float(partial[m])) for m in range(1, cfg.level + 1)]


_WORKERS = {
    "simulate": _rows_simulate,
    "integrate": _rows_integrate,
    "param-study": _rows_param,
    "upper-limit": _rows_upper,
    "besov": _rows_besov,
    "convergence": _rows_convergence,
}


# ---------------------------------------------------------------------------
# output


def _format(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def _aggregates(columns, rows, nkeys):
    out = {}
    for j, name in enumerate(columns[nkeys:], start=nkeys):
        col = np.array([r[j] for r in rows], dtype=float)
        if col.size == 0:
            continue
        q = np.quantile(col, [0.05, 0.25, 0.5, 0.75, 0.95])
        out[name] = {
            "n": int(col.size),
            "mean": float(col.mean()),
            "var": float(col.var(ddof=1)) if col.size > 1 else 0.0,
            "quantiles": dict(zip(("q05", "q25", "q50", "q75", "q95"), map(float, q))),
        }
    return out


def _mean_tails(rows):
    levels = sorted({r[1] for r in rows})
    return {int(m): float(np.mean([r[2] for r in rows if r[1] == m])) for m in levels}


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("HAAR_SM_THREADS", "1") or 1)
    return max(1, int(threads))


def run(config, threads=None, write=True):
    """Run the experiment described by ``config``.

    Parameters
    ----------
    config : ExperimentConfig
    threads : int, optional
        Worker count; defaults to ``HAAR_SM_THREADS`` or 1. Never changes outputs.
    write : bool, default=True
        Write ``<experiment>.csv`` and ``report.json`` under ``config.out``.

    Returns
    -------
    RunReport
    """
    config.validate()
    start = time.perf_counter()
    exp = config.experiment
    if write:
        try:
            os.makedirs(config.out, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {config.out}: {exc}") from exc
    if exp == "selftest":
        checks = selftest()
        rows = [(name, "pass" if ok else "FAIL", detail) for name, ok, detail in checks]
        passed = all(ok for _, ok, _ in checks)
        aggregates, tails = {}, {}
    else:
        worker = _WORKERS[exp]
        seeds = config.seed_list()
        n = _threads(threads)
        if n == 1:
            chunks = [worker(config, s) for s in seeds]
        else:
            with ThreadPoolExecutor(max_workers=n) as pool:
                chunks = list(pool.map(lambda s: worker(config, s), seeds))
        nkeys = _KEYS[exp]
        rows = sorted((r for chunk in chunks for r in chunk), key=lambda r: r[:nkeys])
        passed = True
        aggregates = _aggregates(_COLUMNS[exp], rows, nkeys)
        tails = _mean_tails(rows) if exp in ("convergence", "upper-limit") else {}
    report = RunReport(
        experiment=exp,
        columns=_COLUMNS[exp],
        rows=rows,
        aggregates=aggregates,
        tails=tails,
        wall_clock=time.perf_counter() - start,
        config=config.echo(),
        passed=passed,
    )
    if write:
        write_csv(os.path.join(config.out, f"{exp}.csv"), report.columns, rows)
        if exp == "convergence":
            write_csv(
                os.path.join(config.out, "convergence_summary.csv"),
                ("level", "mean_tail"),
                sorted(tails.items()),
            )
        with open(os.path.join(config.out, "report.json"), "w") as fh:
            fh.write(report.to_json())
    return report


# ---------------------------------------------------------------------------
# self-test


def selftest(forward=haar_forward, tol=1e-12):
    """Fast deterministic invariant checks.

    ``forward`` is the coefficient path under test; replacing it allows fault
    injection. Returns ``[(name, passed, detail), ...]``.
    """
    checks = []
    rng = np.random.default_rng(20240101)

    def record(name, err, limit=tol):
        checks.append((name, bool(err <= limit), f"max error {err:.3e}"))

    # orthonormality of the 1-D basis via midpoint sampling on the level-k grid
    for k in (0, 3, 6):
        x = (np.arange(1 << k) + 0.5) / (1 << k)
        B = haar_basis(x, k)
        gram = B.T @ B / (1 << k)
        record(f"orthonormality-1d-k{k}", float(np.abs(gram - np.eye(1 << k)).max()))

    for d, K in ((1, 6), (2, 5), (3, 3)):
        field = CellField(d, K, rng.normal(size=(1 << K,) * d))
        try:
            coeffs = forward(field, K)
            parseval = abs(coeffs.sum_of_squares() - field.l2_norm_squared()) / field.l2_norm_squared()
            back = haar_inverse(coeffs, K)
            roundtrip = float(np.abs(back.values - field.values).max())
        except Exception as exc:  # a broken coefficient path is a failed check
            checks.append((f"parseval-d{d}", False, repr(exc)))
            checks.append((f"roundtrip-d{d}", False, repr(exc)))
            continue
        record(f"parseval-d{d}", parseval)
        record(f"roundtrip-d{d}", roundtrip)

    # Lebesgue oracle: series integral equals the exact integral of a polynomial
    for d in (1, 2):
        coef = rng.normal(size=(3,) * d)
        f = I.polynomial(coef)
        sm = simulate(LebesgueOracle(d), 5, 0)
        exact = sum(coef[e] * np.prod([1.0 / (p + 1) for p in e]) for e in np.ndindex(coef.shape))
        got = float(np.sum(forward(f.cell_field(5), 5).coefficients * haar_integrals(sm, 5)))
        record(f"lebesgue-oracle-d{d}", abs(got - exact), 1e-10)

    # telescoping: shell increments sum to the truncated value
    sm = simulate(WienerSheet(2), 5, 7, domain=_DOMAIN["selftest"])
    res = integrate(I.product_sine(2), sm, 5)
    record("telescoping", abs(res.increments.sum() - res.value))
    return checks


def is_numerical_failure(exc):
    return isinstance(exc, HaarSMError) and not isinstance(exc, ConfigError)
