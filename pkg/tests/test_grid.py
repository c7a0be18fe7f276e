"""Grid construction, latitude weights, and the weighted metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from climashift.errors import ContractError
from climashift.grid import (Field, build_grid, lat_weights, weighted_mse,
                             weighted_rmse, weighted_spatial_mean,
                             weights_from_latitudes)


class TestGridSpec:
    def test_cell_centers(self):
        g = build_grid(4, 6)
        assert np.allclose(g.lat_deg, [-67.5, -22.5, 22.5, 67.5])
        assert np.allclose(g.lon_deg, [30, 90, 150, 210, 270, 330])
        assert g.shape == (4, 6)
        assert g.n_cells == 24

    def test_single_row_grid(self):
        g = build_grid(1, 1)
        assert np.allclose(g.lat_deg, [0.0])
        assert np.allclose(g.lon_deg, [180.0])

    def test_invalid_sizes(self):
        with pytest.raises(ContractError):
            build_grid(0, 4)
        with pytest.raises(ContractError):
            build_grid(4, 0)

    def test_matches(self):
        assert build_grid(3, 5).matches(build_grid(3, 5))
        assert not build_grid(3, 5).matches(build_grid(5, 3))


class TestLatWeights:
    def test_symmetric_pair(self):
        # lat {-45, 45}: equal cosines normalize to w = {1, 1}
        w = weights_from_latitudes([-45.0, 45.0]).w
        assert np.allclose(w, [1.0, 1.0], rtol=0, atol=1e-12)

    def test_zero_sixty_case(self):
        # cos {1, 1/2}, mean 3/4 -> weights {4/3, 2/3}
        w = weights_from_latitudes([0.0, 60.0]).w
        assert abs(w[0] - 4.0 / 3.0) < 1e-12
        assert abs(w[1] - 2.0 / 3.0) < 1e-12

    def test_grid_weights_use_cell_centers(self):
        w = lat_weights(build_grid(3, 1)).w  # centers -60, 0, 60
        assert np.allclose(w, [0.75, 1.5, 0.75], rtol=0, atol=1e-12)

    def test_mean_one_for_all_sizes(self):
        for n_lat in range(1, 65):
            w = lat_weights(build_grid(n_lat, 2)).w
            assert abs(w.mean() - 1.0) < 1e-12
            assert (w > 0).all()


def _loop_reference(pred, truth, w):
    """Scalar triple-loop weighted MSE, one value per forecast."""
    out = []
    for f in range(pred.shape[0]):
        acc = 0.0
        for i in range(pred.shape[1]):
            for j in range(pred.shape[2]):
                d = pred[f, i, j] - truth[f, i, j]
                acc += w[i] * d * d
        out.append(acc / (pred.shape[1] * pred.shape[2]))
    return out


class TestWeightedMetrics:
    def test_hand_example(self):
        # lat {0, 60}, 1 lon, errors {1, 2}: (1/2)(4/3*1 + 2/3*4) = 2
        w = weights_from_latitudes([0.0, 60.0])
        pred = np.zeros((2, 1))
        truth = np.array([[1.0], [2.0]])
        assert abs(weighted_mse(pred, truth, w) - 2.0) < 1e-12

    def test_rmse_of_known_mse(self):
        # the same single forecast has weighted MSE 2, so RMSE is sqrt(2)
        w = weights_from_latitudes([0.0, 60.0])
        pred = np.zeros((1, 2, 1))
        truth = np.array([[[1.0], [2.0]]])
        assert abs(weighted_rmse(pred, truth, w) - np.sqrt(2.0)) < 1e-12

    def test_uniform_error_passthrough(self):
        g = build_grid(5, 7)
        w = lat_weights(g)
        for c in (-3.25, 0.5):
            pred = np.full((2, 5, 7), c)
            truth = np.zeros((2, 5, 7))
            assert abs(weighted_mse(pred, truth, w) - c * c) < 1e-12
            assert abs(weighted_rmse(pred, truth, w) - abs(c)) < 1e-12

    def test_rmse_is_mean_of_roots_not_root_of_mean(self):
        g = build_grid(2, 2)
        w = lat_weights(g)
        pred = np.zeros((2, 2, 2))
        truth = np.stack([np.full((2, 2), 1.0), np.full((2, 2), 3.0)])
        assert abs(weighted_rmse(pred, truth, w) - 2.0) < 1e-12
        assert abs(weighted_mse(pred, truth, w) - 5.0) < 1e-12

    def test_matches_loop_reference(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n_lat = int(rng.integers(1, 7))
            n_lon = int(rng.integers(1, 7))
            n_f = int(rng.integers(1, 5))
            g = build_grid(n_lat, n_lon)
            w = lat_weights(g)
            pred = rng.standard_normal((n_f, n_lat, n_lon))
            truth = rng.standard_normal((n_f, n_lat, n_lon))
            ref = _loop_reference(pred, truth, w.w)
            assert abs(weighted_mse(pred, truth, w) - np.mean(ref)) \
                <= 1e-12 * abs(np.mean(ref))
            ref_rmse = np.mean(np.sqrt(ref))
            assert abs(weighted_rmse(pred, truth, w) - ref_rmse) \
                <= 1e-12 * abs(ref_rmse)

    def test_shape_mismatch_raises(self):
        g = build_grid(2, 2)
        w = lat_weights(g)
        with pytest.raises(ContractError):
            weighted_mse(np.zeros((2, 2)), np.zeros((2, 3)), w)
        with pytest.raises(ContractError):
            weighted_mse(np.zeros((3, 2)), np.zeros((3, 2)), w)

    @given(st.integers(1, 6), st.integers(1, 6), st.floats(-100, 100))
    @settings(max_examples=40)
    def test_identical_fields_zero_error(self, n_lat, n_lon, fill):
        g = build_grid(n_lat, n_lon)
        w = lat_weights(g)
        x = np.full((n_lat, n_lon), fill)
        assert weighted_mse(x, x, w) == 0.0
        assert weighted_rmse(x, x, w) == 0.0


class TestField:
    def test_negative_pr_rejected(self):
        g = build_grid(2, 2)
        with pytest.raises(ContractError):
            Field(grid=g, values=np.full((2, 2), -1.0), variable="PR")

    def test_negative_tas_anomaly_ok(self):
        g = build_grid(2, 2)
        f = Field(grid=g, values=np.full((2, 2), -1.0), variable="TAS")
        assert f.units == "K"

    def test_non_finite_rejected(self):
        g = build_grid(2, 2)
        bad = np.full((2, 2), np.nan)
        with pytest.raises(ContractError):
            Field(grid=g, values=bad, variable="TAS")

    def test_weighted_spatial_mean_of_ones(self):
        g = build_grid(9, 5)
        w = lat_weights(g)
        assert abs(weighted_spatial_mean(np.ones((9, 5)), w) - 1.0) < 1e-12

    def test_weighted_spatial_mean_batched(self):
        g = build_grid(3, 2)
        w = lat_weights(g)
        vals = np.stack([np.ones((3, 2)), 2 * np.ones((3, 2))])
        out = weighted_spatial_mean(vals, w)
        assert np.allclose(out, [1.0, 2.0])
