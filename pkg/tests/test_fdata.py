import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specop.errors import (ContractViolation, IllPosedProjectionError, InputSizeError,
                           ParseError)
from specop.fdata import (FunctionalSample, Grid, center, fourier_basis, fourier_smooth,
                          load_csv, write_csv)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def sample_arrays(min_T=4, max_T=12, min_k=1, max_k=6):
    return st.tuples(st.integers(min_T, max_T), st.integers(min_k, max_k)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


class TestGrid:
    def test_midpoint(self):
        np.testing.assert_allclose(Grid.midpoint(4).points, [0.125, 0.375, 0.625, 0.875])

    def test_endpoint(self):
        np.testing.assert_allclose(Grid.endpoint(3).points, [0.0, 0.5, 1.0])

    def test_rejects_unsorted(self):
        with pytest.raises(ContractViolation):
            Grid([0.5, 0.2])

    def test_rejects_outside_unit_interval(self):
        with pytest.raises(ContractViolation):
            Grid([0.5, 1.5])

    def test_equality(self):
        assert Grid.midpoint(5) == Grid.midpoint(5)
        assert Grid.midpoint(5) != Grid.endpoint(5)

    def test_points_read_only(self):
        with pytest.raises(ValueError):
            Grid.midpoint(3).points[0] = 0.9


class TestFunctionalSample:
    def test_minimum_length(self):
        with pytest.raises(InputSizeError):
            FunctionalSample.from_array(np.zeros((3, 2)))

    def test_nonfinite_rejected(self):
        vals = np.zeros((5, 2))
        vals[1, 1] = np.nan
        with pytest.raises(ContractViolation):
            FunctionalSample.from_array(vals)

    def test_centered_flag_checked(self):
        with pytest.raises(ContractViolation):
            FunctionalSample.from_array(np.ones((4, 2)), centered=True)

    def test_column_count_must_match_grid(self):
        with pytest.raises(ContractViolation):
            FunctionalSample(Grid.midpoint(3), np.zeros((4, 2)))

    def test_values_immutable(self):
        s = FunctionalSample.from_array(np.zeros((4, 2)))
        with pytest.raises(ValueError):
            s.values[0, 0] = 1.0


class TestLoadCSV:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1\n0\n-1\n0\n")
        s = load_csv(p)
        assert (s.T, s.k) == (4, 1)
        assert not s.centered
        np.testing.assert_array_equal(s.values[:, 0], [1, 0, -1, 0])

    def test_temperature_shape(self, tmp_path, rng):
        p = tmp_path / "temp.csv"
        np.savetxt(p, rng.standard_normal((92, 96)), delimiter=",")
        s = load_csv(p)
        assert (s.T, s.k) == (92, 96)
        np.testing.assert_allclose(s.grid.points, (2 * np.arange(1, 97) - 1) / 192)

    def test_ragged_row_names_row_two(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2,3,4,5\n1,2,3,4,5,6\n1,2,3,4,5\n1,2,3,4,5\n")
        with pytest.raises(ParseError, match="row 2"):
            load_csv(p)

    def test_non_numeric_cell_coordinates(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,4\n5,abc\n7,8\n")
        with pytest.raises(ParseError, match="row 3, column 2"):
            load_csv(p)

    def test_too_few_rows(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text("1,2\n3,4\n5,6\n")
        with pytest.raises(InputSizeError):
            load_csv(p)

    def test_grid_header(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("# grid: 0.1,0.7\n1,2\n3,4\n5,6\n7,8\n")
        np.testing.assert_array_equal(load_csv(p).grid.points, [0.1, 0.7])

    def test_grid_header_length_mismatch(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("# grid: 0.1,0.5,0.7\n1,2\n3,4\n5,6\n7,8\n")
        with pytest.raises(ParseError):
            load_csv(p)

    def test_endpoint_policy(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2,3\n" * 4)
        np.testing.assert_allclose(load_csv(p, grid_policy="endpoint").grid.points, [0, 0.5, 1])

    def test_semicolon_delimiter(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1;2\n3;4\n5;6\n7;8\n")
        assert load_csv(p, delimiter=";").k == 2

    @given(sample_arrays())
    def test_round_trip_bit_exact(self, tmp_path_factory, vals):
        p = tmp_path_factory.mktemp("rt") / "s.csv"
        s = FunctionalSample.from_array(vals)
        write_csv(s, p)
        back = load_csv(p)
        assert back.grid == s.grid
        np.testing.assert_array_equal(back.values, s.values)


class TestCenter:
    def test_constant_sample_vanishes(self):
        s = center(FunctionalSample.from_array(np.full((6, 3), 4.2)))
        np.testing.assert_allclose(s.values, 0.0, atol=1e-15)
        assert s.centered

    def test_hand_example(self):
        s = center(FunctionalSample.from_array([[1, 2], [3, 4], [1, 2], [3, 4]]))
        np.testing.assert_allclose(s.values, [[-1, -1], [1, 1], [-1, -1], [1, 1]])

    def test_already_centered_identical(self, rng):
        s = center(FunctionalSample.from_array(rng.standard_normal((10, 3))))
        assert center(s) is s

    @given(sample_arrays())
    def test_idempotent(self, vals):
        once = center(FunctionalSample.from_array(vals))
        twice = center(FunctionalSample(once.grid, once.values))
        np.testing.assert_allclose(twice.values, once.values, rtol=0,
                                   atol=1e-12 * max(1.0, np.abs(vals).max()))


class TestFourierSmooth:
    def test_basis_element_fixed_point(self):
        g = Grid.midpoint(21)
        curve = np.sqrt(2) * np.cos(2 * np.pi * g.points)
        s = FunctionalSample(g, np.tile(curve, (4, 1)))
        np.testing.assert_allclose(fourier_smooth(s, 21).values, s.values, rtol=0, atol=1e-8)

    def test_constant_with_one_basis_function(self):
        s = FunctionalSample.from_array(np.ones((4, 7)))
        np.testing.assert_allclose(fourier_smooth(s, 1).values, 1.0, atol=1e-14)

    def test_white_noise_into_three_dim_span(self, rng):
        g = Grid.midpoint(15)
        s = FunctionalSample(g, rng.standard_normal((6, 15)))
        out = fourier_smooth(s, 3).values
        # Least-squares oracle: residual of the output against span{1, cos, sin}.
        basis = np.column_stack([np.ones(15), np.cos(2 * np.pi * g.points), np.sin(2 * np.pi * g.points)])
        coef, *_ = np.linalg.lstsq(basis, out.T, rcond=None)
        assert np.abs(basis @ coef - out.T).max() <= 1e-8
        # On the midpoint grid the quadrature projection is the least-squares fit of the input.
        coef_in, *_ = np.linalg.lstsq(basis, s.values.T, rcond=None)
        np.testing.assert_allclose(out, (basis @ coef_in).T, atol=1e-12)

    def test_idempotent_on_endpoint_grid(self, rng):
        s = FunctionalSample(Grid.endpoint(30), rng.standard_normal((5, 30)))
        once = fourier_smooth(s, 9)
        np.testing.assert_allclose(fourier_smooth(once, 9).values, once.values, atol=1e-8)

    def test_even_basis_rejected(self, rng):
        with pytest.raises(ContractViolation):
            fourier_smooth(FunctionalSample.from_array(rng.standard_normal((4, 8))), 4)

    def test_too_many_basis_functions(self, rng):
        with pytest.raises(IllPosedProjectionError):
            fourier_smooth(FunctionalSample.from_array(rng.standard_normal((4, 5))), 7)

    def test_basis_orthonormal_on_midpoints(self):
        phi = fourier_basis(Grid.midpoint(21).points, 21)
        np.testing.assert_allclose(phi.T @ phi / 21, np.eye(21), atol=1e-12)

    @given(arrays(np.float64, (5, 11), elements=finite), arrays(np.float64, (5, 11), elements=finite),
           st.floats(-10, 10), st.floats(-10, 10))
    def test_linear(self, u, v, a, b):
        su = FunctionalSample.from_array(u)
        sv = FunctionalSample.from_array(v)
        lhs = fourier_smooth(FunctionalSample.from_array(a * u + b * v), 7).values
        rhs = a * fourier_smooth(su, 7).values + b * fourier_smooth(sv, 7).values
        scale = max(1.0, np.abs(a * u).max(), np.abs(b * v).max())
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10 * scale)
