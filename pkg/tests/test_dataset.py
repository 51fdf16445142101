import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddtruss.dataset import (MaterialDataset, compute_c, generate_synthetic, load_csv,
                             nearest_assignment, nearest_point, parse_curve, write_csv)
from ddtruss.errors import (DegenerateDataset, EmptyAllowedSet, EmptyDataset,
                            InvalidCurveSpec, ParseError)


def test_load_csv_without_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("0,0\n0.001,2e6\n")
    data = load_csv(path)
    assert data.d == 2
    assert data.point(1) == (0.001, 2e6)


def test_load_csv_with_header(tmp_path):
    rng = np.random.default_rng(0)
    rows = "\n".join(f"{e},{s}" for e, s in rng.normal(size=(300, 2)))
    path = tmp_path / "d.csv"
    path.write_text("strain,stress\n" + rows + "\n")
    assert load_csv(path).d == 300


def test_load_csv_reports_bad_row(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("strain,stress\n0.1,1\n0.2,abc\n")
    with pytest.raises(ParseError, match="row 3, column 2"):
        load_csv(path)


def test_load_csv_empty(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("strain,stress\n")
    with pytest.raises(EmptyDataset):
        load_csv(path)


def test_compute_c_mean_of_ratios():
    data = MaterialDataset.from_points([(0.001, 2e6), (0.002, 6e6)])
    assert compute_c(data).c == 2.5e9


def test_compute_c_skips_zero_strain():
    w = compute_c(MaterialDataset.from_points([(0, 0), (0.001, 2e6)]))
    assert w.c == pytest.approx(2e9, rel=1e-15)
    assert w.skipped == 1


def test_compute_c_degenerate():
    with pytest.raises(DegenerateDataset):
        compute_c(MaterialDataset.from_points([(0, 1), (0, 2)]))
    with pytest.raises(DegenerateDataset):
        compute_c(MaterialDataset.from_points([(0.001, -2e6)]))


@pytest.mark.parametrize("E", [1.0, 1.622e9, 2.1e11])
def test_compute_c_linear_data_returns_modulus(E):
    data = generate_synthetic(f"linear(E={E})", d=200, noise_std=0.0, seed=1)
    assert compute_c(data).c == pytest.approx(E, rel=1e-12)


def test_nearest_point_exact_hit():
    data = MaterialDataset.from_points([(1, 1), (0, 0), (2, 2)])
    assert nearest_point(0.0, 0.0, 1.0, 1.0, data) == (1, 0.0)


def test_nearest_point_weighted_distance():
    data = MaterialDataset.from_points([(0, 0), (3, 0)])
    j, dist = nearest_point(1.0, 0.0, 1.0, 2.0, data)
    assert j == 0
    assert dist == 1.0


def test_nearest_point_tie_goes_to_smallest_index():
    data = MaterialDataset.from_points([(0, 1), (0, -1)])
    assert nearest_point(0.0, 0.0, 1.0, 1.0, data)[0] == 0
    assert nearest_point(0.0, 0.0, 1.0, 1.0, data, allowed=[1, 0])[0] == 0


def test_nearest_point_empty_allowed():
    data = MaterialDataset.from_points([(0, 1)])
    with pytest.raises(EmptyAllowedSet):
        nearest_point(0.0, 0.0, 1.0, 1.0, data, allowed=[])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_nearest_point_is_exhaustive_argmin(seed, c, scale):
    rng = np.random.default_rng(seed)
    data = MaterialDataset(rng.normal(size=20), c * rng.normal(size=20))
    eps, sig = rng.normal(), c * rng.normal()
    allowed = np.sort(rng.choice(20, size=int(rng.integers(1, 21)), replace=False))
    j, dist = nearest_point(eps, sig, c, 0.7, data, allowed)
    scan = [(0.5 * 0.7 * c * (eps - data.strain[k]) ** 2
             + 0.5 * 0.7 / c * (sig - data.stress[k]) ** 2, k) for k in allowed]
    best = min(scan)
    assert (j, dist) == (best[1], pytest.approx(best[0], rel=1e-14))
    # volume scales the whole metric, so the argmin is unchanged
    assert nearest_point(eps, sig, c, 0.7 * scale, data, allowed)[0] == j


def test_nearest_assignment_matches_scalar_query():
    rng = np.random.default_rng(4)
    data = MaterialDataset(rng.normal(size=15), rng.normal(size=15))
    eps, sig, v = rng.normal(size=6), rng.normal(size=6), rng.uniform(0.1, 2, size=6)
    got = nearest_assignment(eps, sig, 1.3, v, data)
    want = [nearest_point(eps[i], sig[i], 1.3, v[i], data)[0] for i in range(6)]
    np.testing.assert_array_equal(got, want)


def test_synthetic_linear_exact_points():
    a = 0.01
    data = generate_synthetic("linear(E=1e9)", d=3, noise_std=0.0, strains=[-a, 0.0, a])
    np.testing.assert_array_equal(data.stress, [-1e9 * a, 0.0, 1e9 * a])


def test_synthetic_is_deterministic():
    a = generate_synthetic(d=50, seed=7)
    b = generate_synthetic(d=50, seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    c = generate_synthetic(d=50, seed=8)
    assert not np.array_equal(a.points, c.points)


def test_synthetic_cubic_softening_noiseless():
    data = generate_synthetic("cubic_softening(E=2e9, beta=1.5e12)", d=100, noise_std=0.0, seed=2)
    expected = 2e9 * data.strain - 1.5e12 * data.strain ** 3
    np.testing.assert_allclose(data.stress, expected, rtol=1e-15, atol=1e-9)


@pytest.mark.parametrize("spec", ["quadratic(E=1)", "linear(E=abc)", "linear", "linear(E=1, beta=2)"])
def test_invalid_curve_spec(spec):
    with pytest.raises(InvalidCurveSpec):
        parse_curve(spec)


def test_csv_roundtrip(tmp_path):
    data = generate_synthetic(d=300, seed=3)
    path = tmp_path / "d.csv"
    write_csv(data, path)
    again = load_csv(path)
    assert again.d == 300
    np.testing.assert_array_equal(again.points, data.points)
