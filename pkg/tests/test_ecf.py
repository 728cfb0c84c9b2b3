"""Empirical characteristic function: pointwise, gridded, persisted."""

import numpy as np
import pytest

from cfdeconv import ConfigError
from cfdeconv.ecf import SampleSet, ecf_eval, ecf_on_grid, export_csv, load_csv, second_moment


def make_samples(rows, d1=1, d2=1):
    return SampleSet(d1, d2, np.asarray(rows, dtype=np.float64))


class TestEcfEval:
    def test_single_zero_sample(self):
        s = make_samples([[0.0, 0.0]])
        for t in ([0.0, 0.0], [1.3, -2.0], [10.0, 0.5]):
            assert ecf_eval(s, np.array(t)) == 1.0

    def test_two_symmetric_samples_cosine(self):
        s = make_samples([[1.0, 0.0], [-1.0, 0.0]])
        got = ecf_eval(s, np.array([np.pi, 0.0]))
        assert got.real == pytest.approx(-1.0, abs=1e-15)
        assert got.imag == pytest.approx(0.0, abs=1e-15)

    def test_conjugate_symmetry(self, rng):
        s = make_samples(rng.normal(size=(64, 2)))
        for _ in range(20):
            t = rng.uniform(-3, 3, size=2)
            plus = ecf_eval(s, t)
            minus = ecf_eval(s, -t)
            assert abs(minus - np.conj(plus)) <= 1e-14

    def test_modulus_bounded_and_one_at_zero(self, rng):
        s = make_samples(rng.standard_t(3, size=(200, 2)))
        assert ecf_eval(s, np.zeros(2)) == 1.0
        pts = rng.uniform(-5, 5, size=(50, 2))
        vals = np.array([ecf_eval(s, t) for t in pts])
        assert np.all(np.abs(vals) <= 1.0 + 1e-12)

    def test_empty_sample_rejected(self):
        with pytest.raises(ConfigError):
            SampleSet(1, 1, np.zeros((0, 2)))

    def test_nonfinite_rejected(self):
        with pytest.raises(ConfigError):
            make_samples([[np.nan, 0.0]])


class TestEcfOnGrid:
    def test_degenerate_origin_grid(self):
        s = make_samples([[0.4, -0.2], [1.0, 0.3]])
        table = ecf_on_grid(s, [np.zeros(1), np.zeros(1)])
        assert table.full[0, 0] == 1.0
        assert table.first[0] == 1.0
        assert table.second[0] == 1.0

    def test_agreement_with_pointwise(self, rng):
        s = make_samples(rng.normal(size=(37, 2)))
        nodes = [np.sort(rng.uniform(-2, 2, 10)), np.sort(rng.uniform(-2, 2, 5))]
        table = ecf_on_grid(s, nodes)
        for i, t1 in enumerate(nodes[0]):
            for j, t2 in enumerate(nodes[1]):
                direct = ecf_eval(s, np.array([t1, t2]))
                assert abs(table.full[i, j] - direct) <= 1e-14
        for i, t1 in enumerate(nodes[0]):
            assert abs(table.first[i] - ecf_eval(s, np.array([t1, 0.0]))) <= 1e-14

    def test_monte_carlo_concentration(self):
        # n=1e4 symmetric-uniform draws: ecf at (1,0) near sin(1)/1
        rng = np.random.default_rng(7)
        n = 10_000
        data = rng.uniform(-1.0, 1.0, size=(n, 2))
        s = make_samples(data)
        got = ecf_eval(s, np.array([1.0, 0.0]))
        assert abs(got - 0.8414709848078965) <= 3.0 / np.sqrt(n)

    def test_modulus_bound_on_tables(self, rng):
        s = make_samples(rng.normal(size=(100, 2)))
        table = ecf_on_grid(s, [np.linspace(-4, 4, 9), np.linspace(-4, 4, 9)])
        assert np.all(np.abs(table.full) <= 1.0 + 1e-12)
        assert np.all(np.abs(table.first) <= 1.0 + 1e-12)
        assert np.all(np.abs(table.second) <= 1.0 + 1e-12)

    def test_determinism(self, rng):
        data = rng.normal(size=(51, 2))
        nodes = [np.linspace(-1, 1, 7), np.linspace(-2, 2, 6)]
        t1 = ecf_on_grid(make_samples(data), nodes)
        t2 = ecf_on_grid(make_samples(data.copy()), nodes)
        np.testing.assert_array_equal(t1.full, t2.full)
        np.testing.assert_array_equal(t1.first, t2.first)
        np.testing.assert_array_equal(t1.second, t2.second)


class TestSecondMoment:
    def test_all_zero(self):
        assert second_moment(make_samples([[0.0, 0.0], [0.0, 0.0]])) == 0.0

    def test_unit_rows(self):
        assert second_moment(make_samples([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(1.0)

    def test_law_of_large_numbers(self):
        rng = np.random.default_rng(11)
        s = make_samples(rng.normal(size=(100_000, 2)))
        assert second_moment(s) == pytest.approx(2.0, abs=0.05)


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path, rng):
        s = make_samples(rng.normal(size=(23, 3)), d1=2, d2=1)
        path = tmp_path / "samples.csv"
        export_csv(s, path)
        header = path.read_text().splitlines()[0]
        assert header == "y1,y2,y3"
        back = load_csv(path, 2, 1)
        assert (back.d1, back.d2) == (2, 1)
        np.testing.assert_array_equal(back.data, s.data)

    def test_dimension_mismatch_on_load(self, tmp_path, rng):
        s = make_samples(rng.normal(size=(5, 2)))
        path = tmp_path / "samples.csv"
        export_csv(s, path)
        with pytest.raises(ConfigError):
            load_csv(path, 2, 1)
