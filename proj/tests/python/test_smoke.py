"""Smoke tests for the Python module against numpy and scikit-image."""

import math

import numpy as np
import pytest

import ttcast


def numpy_dmd_eigenvalues(z, rank):
    x, y = z[:, :-1], z[:, 1:]
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    u, s, v = u[:, :rank], s[:rank], vt[:rank].T
    return np.linalg.eigvals(u.T @ y @ v / s)


def sorted_complex(values):
    return np.array(sorted(values, key=lambda c: (round(c.real, 9), round(c.imag, 9))))


def test_dmd_matches_numpy_oracle():
    series, eigenvalues = ttcast.linear_fixture(3, 4, 30, 5, seed=2)
    z = series.reshape(12, 30, order="F")
    model = ttcast.dmd_fit(z, 5)
    np.testing.assert_allclose(sorted_complex(model.eigenvalues), sorted_complex(numpy_dmd_eigenvalues(z, 5)),
                               atol=1e-9)
    np.testing.assert_allclose(sorted_complex(model.eigenvalues), sorted_complex(eigenvalues), atol=1e-8)
    magnitudes = np.abs(model.eigenvalues)
    assert np.all(np.diff(magnitudes) <= 1e-12)


def test_ttdmd_forecasts_noiseless_field():
    series, _ = ttcast.linear_fixture(4, 5, 60, 6, seed=3)
    model = ttcast.ttdmd_fit(series[:, :, :50], rank=6)
    forecast = ttcast.ttdmd_forecast(model, series[:, :, :50], 10)
    assert forecast.shape == (4, 5, 10)
    np.testing.assert_allclose(forecast, series[:, :, 50:], atol=1e-7)
    with pytest.raises(ValueError):
        ttcast.ttdmd_forecast(model, series[:, :, :50], 3, anchor="middle")


def test_tt_decompose_round_trip():
    rng = np.random.default_rng(4)
    t = rng.standard_normal((3, 4, 5))
    cores = ttcast.tt_decompose(t)
    assert [c.shape[0] for c in cores][0] == 1 and cores[-1].shape[2] == 1
    np.testing.assert_allclose(ttcast.tt_reconstruct(cores), t, atol=1e-12)
    # contracting the cores with numpy gives the same tensor
    full = cores[0]
    for c in cores[1:]:
        full = np.tensordot(full, c, axes=([full.ndim - 1], [0]))
    np.testing.assert_allclose(full.reshape(t.shape), t, atol=1e-12)


def test_mar_recovers_bilinear_generator():
    rng = np.random.default_rng(5)
    a0 = np.linalg.qr(rng.standard_normal((3, 3)))[0] * 0.95
    b0 = np.linalg.qr(rng.standard_normal((4, 4)))[0] * 0.97
    frames = [rng.standard_normal((3, 4))]
    for _ in range(39):
        frames.append(a0 @ frames[-1] @ b0.T)
    series = np.stack(frames, axis=2)
    model = ttcast.mar_fit(series, max_iters=5000, rel_tol=1e-14, restarts=3)
    np.testing.assert_allclose(np.kron(model.b, model.a), np.kron(b0, a0), atol=1e-6)
    assert all(b <= a + 1e-12 for a, b in zip(model.loss_history, model.loss_history[1:]))
    pred = ttcast.mar_predict(model, frames[-1], 2)
    np.testing.assert_allclose(pred[:, :, 1], a0 @ a0 @ frames[-1] @ b0.T @ b0.T, atol=1e-8)


def test_point_metrics_and_report():
    assert ttcast.rmse(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(math.sqrt(12.5))
    assert ttcast.mae(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(3.5)
    assert ttcast.smape(np.array([100.0]), np.array([110.0])) == pytest.approx(100 * 10 / 105)
    target = ttcast.weather_fixture(6, 8, 20)
    report = ttcast.evaluate(target + 0.5, target)
    assert report["rmse"] == pytest.approx(0.5)
    assert len(report["framewise"]["ssim"]) == 20


def test_ssim_matches_scikit_image():
    metrics = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(6)
    for shape in [(12, 16), (9, 11), (30, 7)]:
        ref = rng.standard_normal(shape)
        test = ref + 0.4 * rng.standard_normal(shape)
        expected = metrics.structural_similarity(ref, test, data_range=4.0)
        assert ttcast.ssim(ref, test, 4.0) == pytest.approx(expected, abs=1e-12)


def test_haversine_and_clusters():
    assert ttcast.haversine(0, 0, 0, 180) == pytest.approx(math.pi * 6367.0)
    points = [(45 + 0.1 * i, 5 + 0.1 * j) for i in range(3) for j in range(3)]
    points += [(45 + 0.1 * i, 31 + 0.1 * j) for i in range(3) for j in range(3)]
    plan = ttcast.kmeans_haversine(points, 2, seed=1)
    assignment = plan["assignment"]
    assert len(set(assignment[:9])) == 1 and len(set(assignment[9:])) == 1
    assert assignment[0] != assignment[9]


def test_grid_csv_round_trip(tmp_path):
    values = np.arange(24, dtype=float).reshape(2, 3, 4, order="F") / 8
    path = str(tmp_path / "grid.csv")
    ttcast.save_grid_csv(values, [30.0, 30.5], [4.0, 4.5, 5.0], "2019-12-08", path)
    back, lats, lons, dates = ttcast.load_grid_csv(path)
    np.testing.assert_array_equal(back, values)
    assert lats == [30.0, 30.5] and lons == [4.0, 4.5, 5.0]
    assert dates == ["2019-12-08", "2019-12-09", "2019-12-10", "2019-12-11"]
