import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import linregress

from haar_sm import (
    BudgetError,
    FBmSheet,
    GridAlignmentError,
    HaarIndexD,
    LebesgueOracle,
    Rect,
    ResolutionError,
    StableSheet,
    WienerSheet,
    haar_integral,
    haar_integrals,
    read_field,
    rect_increment,
    restricted_haar_integral,
    simulate,
    uniform_modulus,
    write_field,
)
from haar_sm.measures import export_csv, symmetric_stable

KINDS = [LebesgueOracle(2), WienerSheet(2), FBmSheet((0.6, 0.8)), StableSheet(2, 1.3), WienerSheet(3), StableSheet(1, 0.7)]


@pytest.mark.parametrize("kind", KINDS, ids=lambda k: f"{k.name}-d{k.d}")
@given(seed=st.integers(0, 2**64 - 1))
def test_faces_vanish(kind, seed):
    sm = simulate(kind, 3, seed)
    v = sm.sheet.values
    for s in range(kind.d):
        assert np.all(np.take(v, 0, axis=s) == 0.0)
    assert np.all(np.isfinite(v))


def test_lebesgue_value():
    sm = simulate(LebesgueOracle(2), 4, 0)
    assert sm.value([0.5, 0.25]) == 0.125


def test_determinism_and_chunking():
    for kind in (WienerSheet(2), FBmSheet((0.7, 0.55)), StableSheet(2, 1.5)):
        a = simulate(kind, 5, 123, domain=4)
        b = simulate(kind, 5, 123, domain=4, chunk=7)
        assert a.sheet.values.tobytes() == b.sheet.values.tobytes()
        assert a.sheet.values.tobytes() != simulate(kind, 5, 124, domain=4).sheet.values.tobytes()
        assert a.sheet.values.tobytes() != simulate(kind, 5, 123, domain=5).sheet.values.tobytes()


def test_parameter_ranges():
    with pytest.raises(ValueError):
        FBmSheet((0.5, 0.7))
    with pytest.raises(ValueError):
        StableSheet(2, 2.0)
    with pytest.raises(ValueError):
        StableSheet(2, 1.0, scale=0.0)
    with pytest.raises(BudgetError):
        simulate(WienerSheet(2), 9, 0)
    with pytest.raises(BudgetError):
        simulate(WienerSheet(3), 7, 0)


def test_wiener_total_variance():
    vals = np.array([simulate(WienerSheet(2), 6, s).value([1.0, 1.0]) for s in range(10_000)])
    assert abs(vals.var(ddof=1) - 1.0) < 0.05


def test_fbm_covariance():
    kind = FBmSheet((0.75,))
    pairs = np.array([[sm.value([0.5]), sm.value([1.0])] for sm in (simulate(kind, 4, s) for s in range(10_000))])
    cov = np.cov(pairs.T)[0, 1]
    assert abs(cov - 0.5) < 0.07 * 0.5


def test_fbm_axis_variance_product():
    kind = FBmSheet((0.6, 0.9))
    vals = np.array([simulate(kind, 3, s).value([0.5, 0.5]) for s in range(10_000)])
    expected = 0.5**1.2 * 0.5**1.8
    assert abs(vals.var(ddof=1) / expected - 1.0) < 0.07


@pytest.mark.parametrize("alpha", [1.2, 1.7])
def test_stable_scaling(alpha):
    kind = StableSheet(2, alpha)
    t = np.arange(1, 9) / 8
    samples = np.array([simulate(kind, 3, s).sheet.values[1:, -1] for s in range(10_000)])
    med = np.median(np.abs(samples), axis=0)
    slope = linregress(np.log(t), np.log(med)).slope
    assert abs(slope - 1 / alpha) < 0.1


def test_symmetric_stable_cauchy_case():
    u = (np.arange(1, 20_000) - 0.5) / 20_000
    rng = np.random.default_rng(0)
    x = symmetric_stable(1.0, rng.permutation(u), rng.uniform(size=u.size))
    # median of |Cauchy| is 1
    assert abs(np.median(np.abs(x)) - 1.0) < 0.03


# --- rectangles -------------------------------------------------------------


def test_rect_examples():
    sm = simulate(WienerSheet(2), 3, 1)
    assert rect_increment(sm, Rect([0, 0], [1, 1])) == sm.value([1, 1])
    a1, b1, a2, b2 = 0.25, 0.75, 0.125, 0.5
    expected = sm.value([b1, b2]) - sm.value([a1, b2]) - sm.value([b1, a2]) + sm.value([a1, a2])
    assert rect_increment(sm, Rect([a1, a2], [b1, b2])) == pytest.approx(expected, abs=1e-15)
    assert rect_increment(sm, Rect([0.25, 0.5], [0.25, 1.0])) == 0.0


def test_rect_rejects_off_grid():
    sm = simulate(WienerSheet(1), 3, 1)
    with pytest.raises(GridAlignmentError):
        rect_increment(sm, Rect([0.1], [0.5]))
    with pytest.raises(ValueError):
        Rect([0.5], [0.25])


@given(st.integers(0, 2**32), st.integers(0, 7), st.integers(1, 8), st.integers(0, 7), st.integers(1, 8), st.integers(0, 8), st.integers(0, 8))
def test_rect_additivity(seed, lo1, w1, lo2, w2, c1, c2):
    sm = simulate(WienerSheet(2), 3, seed)
    hi1, hi2 = min(lo1 + w1, 8), min(lo2 + w2, 8)
    s1 = lo1 + c1 % (hi1 - lo1 + 1)
    s2 = lo2 + c2 % (hi2 - lo2 + 1)
    g = lambda *v: np.array(v) / 8
    whole = rect_increment(sm, Rect(g(lo1, lo2), g(hi1, hi2)))
    parts = sum(
        rect_increment(sm, Rect(g(a, b), g(c, e)))
        for a, c in ((lo1, s1), (s1, hi1))
        for b, e in ((lo2, s2), (s2, hi2))
    )
    assert abs(whole - parts) <= 1e-12


# --- Haar integrals --------------------------------------------------------


def test_haar_integral_examples():
    sm = simulate(WienerSheet(2), 4, 3)
    assert haar_integral(sm, HaarIndexD((1, 1))) == pytest.approx(sm.value([1, 1]), abs=1e-15)
    leb = simulate(LebesgueOracle(2), 4, 0)
    for idx in ((2, 1), (3, 5), (1, 16), (8, 8)):
        assert abs(haar_integral(leb, HaarIndexD(idx))) < 1e-15


def test_haar_integral_d1_explicit():
    sm = simulate(WienerSheet(1), 4, 9)
    expected = sm.value([0.5]) - (sm.value([1.0]) - sm.value([0.5]))
    assert haar_integral(sm, HaarIndexD((2,))) == pytest.approx(expected, abs=1e-14)


def test_haar_integral_resolution():
    sm = simulate(WienerSheet(2), 3, 0)
    haar_integral(sm, HaarIndexD((8, 2)))
    with pytest.raises(ResolutionError):
        haar_integral(sm, HaarIndexD((9, 1)))
    with pytest.raises(ResolutionError):
        haar_integrals(sm, 4)


@pytest.mark.parametrize("kind", [WienerSheet(1), WienerSheet(2), FBmSheet((0.7, 0.6)), StableSheet(3, 1.1)], ids=lambda k: f"{k.name}-d{k.d}")
def test_vectorized_integrals_match_direct(kind):
    sm = simulate(kind, 3, 5)
    h = haar_integrals(sm, 3)
    scale = max(1.0, np.abs(h).max())
    for pos in np.ndindex(h.shape):
        idx = HaarIndexD(tuple(p + 1 for p in pos))
        assert abs(h[pos] - haar_integral(sm, idx)) <= 1e-12 * scale


def test_haar_integral_variance_d1():
    vals = np.array([haar_integral(simulate(WienerSheet(1), 4, s), HaarIndexD((2,))) for s in range(10_000)])
    assert abs(vals.var(ddof=1) - 1.0) < 0.05


def test_gaussian_isometry_covariance():
    samples = np.array([haar_integrals(simulate(WienerSheet(2), 2, s), 2).ravel() for s in range(10_000)])
    cov = np.cov(samples.T)
    assert np.all(np.abs(np.diag(cov) - 1.0) < 0.05)
    assert np.abs(cov - np.diag(np.diag(cov))).max() < 0.05


def test_restricted_examples():
    sm = simulate(WienerSheet(2), 3, 2)
    idx = HaarIndexD((3, 2))
    assert restricted_haar_integral(sm, idx, [1, 1]) == pytest.approx(haar_integral(sm, idx), abs=1e-15)
    assert restricted_haar_integral(sm, idx, [0.0, 0.5]) == 0.0
    for y in ([0.25, 0.5], [0.375, 1.0], [1.0, 0.125]):
        assert restricted_haar_integral(sm, HaarIndexD((1, 1)), y) == pytest.approx(sm.value(y), abs=1e-15)


@pytest.mark.parametrize("kind", [WienerSheet(2), FBmSheet((0.7, 0.7))], ids=lambda k: k.name)
def test_modulus_decreases_with_scale(kind):
    for seed in range(5):
        sm = simulate(kind, 6, seed)
        w = [uniform_modulus(sm.sheet, 2.0**-k) for k in range(1, 6)]
        assert all(a >= b for a, b in zip(w, w[1:]))


# --- I/O -------------------------------------------------------------------


@pytest.mark.parametrize("kind", [LebesgueOracle(1), WienerSheet(2), FBmSheet((0.6, 0.7, 0.8)), StableSheet(2, 1.4, 2.0)], ids=lambda k: k.name)
def test_field_file_round_trip(tmp_path, kind):
    sm = simulate(kind, 3, 2**63 + 5)
    path = tmp_path / "f.hsm"
    write_field(path, sm)
    back = read_field(path)
    assert back.kind == kind and back.seed == sm.seed and back.K == 3
    assert back.sheet.values.tobytes() == sm.sheet.values.tobytes()
    data = path.read_bytes()
    magic, d, K, tag, npar = struct.unpack_from("<4sIIII", data)
    assert (magic, d, K, tag, npar) == (b"HSM1", kind.d, 3, kind.tag, len(kind.params))
    assert len(data) == 20 + 8 * npar + 8 + 8 * 9**kind.d


def test_field_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.hsm"
    path.write_bytes(b"nope")
    with pytest.raises(ValueError):
        read_field(path)
    sm = simulate(WienerSheet(1), 2, 0)
    write_field(path, sm)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_field(path)


def test_csv_export(tmp_path):
    sm = simulate(WienerSheet(2), 2, 4)
    path = tmp_path / "f.csv"
    export_csv(path, sm)
    lines = path.read_text().splitlines()
    assert lines[0] == "i_1,i_2,value"
    assert len(lines) == 1 + 25
    i1, i2, v = lines[7].split(",")
    assert float(v) == sm.sheet.values[int(i1), int(i2)]
