import json
import logging

import numpy as np
import pytest

from phasemoments.errors import CacheError
from phasemoments.kernels import (
    build_kernel_table,
    default_table_grid,
    get_kernel_table,
    load_kernel_table,
    save_kernel_table,
    verify_integral_equation,
)
from phasemoments.kernels.table import cache_path


def test_default_grid_shape():
    x = default_table_grid()
    assert x.size == 2401 and x[0] == -12.0 and x[-1] == 12.0
    assert x[1200] == 0.0


@pytest.mark.parametrize("k", range(1, 9))
def test_integral_equation_residuals(tables, k):
    assert np.max(verify_integral_equation(tables[k], 30)) < 1e-9


@pytest.mark.parametrize("k", range(1, 9))
def test_continuation_is_smooth_at_crossover(tables, k):
    t = tables[k]
    assert t.meta["continuation_mismatch"] < 2e-4
    edge = t.crossover_x
    inside, outside = t(np.array([edge - 1e-9, edge + 1e-9]))
    assert abs(inside - outside) < 2e-4


def test_table_interpolation_hits_nodes(tables):
    t = tables[3]
    np.testing.assert_allclose(t(t.x_grid[::37]), t.values[::37], rtol=0, atol=1e-15)


def test_table_parity(tables):
    x = np.linspace(0.013, 15.0, 50)
    for k, t in tables.items():
        np.testing.assert_allclose(t(-x), (-1) ** k * t(x), atol=1e-14)


def test_table_scalar_call(tables):
    assert isinstance(tables[1](0.5), float)
    assert tables[1](0.5) == pytest.approx(0.15473671991650, abs=1e-7)


def test_even_fit_residual_is_small(tables):
    for k in (2, 4, 6, 8):
        assert tables[k].meta["fit_residual"] < 1e-3
        assert tables[k].asymptote_constant is not None
    assert tables[1].asymptote_constant is None


def test_verification_requires_coverage():
    t = build_kernel_table(1, np.linspace(-5, 5, 501))
    with pytest.raises(ValueError, match="cover"):
        verify_integral_equation(t, 30)


@pytest.mark.parametrize("grid", [np.linspace(-3, 3, 100), np.linspace(-3, 2, 101), np.r_[-1, -0.5, 0, 0.6, 1]])
def test_grid_validation(grid):
    with pytest.raises(ValueError):
        build_kernel_table(1, grid)


def test_order_validation():
    with pytest.raises(ValueError):
        build_kernel_table(9)


def test_scaled_copy(tables):
    t = tables[2].scaled(3.0)
    x = np.array([0.5, 20.0])
    np.testing.assert_allclose(t(x), 3.0 * tables[2](x), rtol=1e-13)


def test_cache_round_trip(tmp_path, tables):
    path = tmp_path / "k4.json"
    save_kernel_table(tables[4], path)
    back = load_kernel_table(path)
    assert back.k == 4 and back.crossover_x == tables[4].crossover_x
    assert back.asymptote_constant == tables[4].asymptote_constant
    np.testing.assert_array_equal(back.values, tables[4].values)
    np.testing.assert_allclose(back.x_grid, tables[4].x_grid, atol=1e-13)
    header = json.loads(path.read_text())
    for key in ("format_version", "k", "grid_min", "grid_max", "n_points", "X_c", "C", "checksum"):
        assert key in header


def _corrupt(path):
    doc = json.loads(path.read_text())
    doc["values"][10] += 1e-3
    path.write_text(json.dumps(doc))


def test_corrupted_cache_detected(tmp_path, tables):
    path = tmp_path / "k2.json"
    save_kernel_table(tables[2], path)
    _corrupt(path)
    with pytest.raises(CacheError, match="checksum"):
        load_kernel_table(path)
    path.write_text("{not json")
    with pytest.raises(CacheError):
        load_kernel_table(path)


def test_get_kernel_table_rebuilds_corrupted_cache(tmp_path, caplog):
    grid = np.linspace(-6, 6, 241)
    first = get_kernel_table(1, tmp_path, grid)
    path = cache_path(tmp_path, 1, grid)
    assert path.exists()
    _corrupt(path)
    with caplog.at_level(logging.WARNING):
        again = get_kernel_table(1, tmp_path, grid)
    assert "checksum mismatch" in caplog.text
    np.testing.assert_array_equal(again.values, first.values)
    load_kernel_table(path)


def test_cache_is_reused(tmp_path, monkeypatch):
    grid = np.linspace(-6, 6, 241)
    get_kernel_table(2, tmp_path, grid)
    import phasemoments.kernels.table as table_mod

    def boom(*a, **k):
        raise AssertionError("table rebuilt despite valid cache")

    monkeypatch.setattr(table_mod, "build_kernel_table", boom)
    get_kernel_table(2, tmp_path, grid)


def test_scaled_table_residuals_reflect_linearity(tables):
    res = verify_integral_equation(tables[1].scaled(1.1), 5)
    np.testing.assert_allclose(res, 0.1, atol=1e-9)


@pytest.mark.parametrize("k", range(1, 9))
def test_approach_to_classical_form_beyond_four(tables, k):
    t = tables[k]
    x = np.linspace(4.0005, 11.9995, 1600)
    assert np.max(np.abs(t(x) - t.classical(x))) < 1e-3


def test_classical_continuation_examples(tables):
    assert tables[1](30.0) == 0.25 and tables[3](-30.0) == 0.75
    assert tables[2].classical(1.0) == tables[2].asymptote_constant
