import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riga.errors import ConfigError
from riga.integrators import TimeGrid
from riga.seed import (
    SeedCoefficients,
    SeedConfig,
    draw_coefficients,
    generate_seed,
    load_coefficients,
    save_coefficients,
)


def test_seed_is_reproducible():
    cfg = SeedConfig(M=4, T=3.0, A_m=0.2, rng_seed=11)
    grid = TimeGrid(2.0, 50)
    a = generate_seed(cfg, 3, grid)
    b = generate_seed(cfg, 3, grid)
    np.testing.assert_array_equal(a.values, b.values)
    c = generate_seed(SeedConfig(M=4, T=3.0, A_m=0.2, rng_seed=12), 3, grid)
    assert not np.array_equal(a.values, c.values)


@settings(max_examples=30, deadline=None)
@given(M=st.integers(1, 12), A_m=st.floats(0.0, 3.0), seed=st.integers(0, 2**31),
       window=st.booleans())
def test_seed_amplitude_bound(M, A_m, seed, window):
    cfg = SeedConfig(M=M, T=2.5, A_m=A_m, rng_seed=seed, apply_window=window)
    grid = TimeGrid(4.0, 64)
    u = generate_seed(cfg, 2, grid)
    assert u.max_abs() <= cfg.bound() + 1e-12
    coef = draw_coefficients(cfg, 2)
    assert np.all(np.abs(coef.a) <= A_m) and np.all(np.abs(coef.b) <= A_m)


def test_seed_matches_harmonic_sum():
    coef = SeedCoefficients(np.array([[0.5, -0.25]]), np.array([[0.1, 0.3]]))
    cfg = SeedConfig(M=2, T=2.0, A_m=1.0, apply_window=False, coefficients=coef)
    grid = TimeGrid(1.0, 10)
    t = grid.times
    expect = (0.5 * np.sin(np.pi * t) - 0.25 * np.sin(2 * np.pi * t)
              + 0.1 * np.cos(np.pi * t) + 0.3 * np.cos(2 * np.pi * t))
    np.testing.assert_allclose(generate_seed(cfg, 1, grid).values[0], expect, atol=1e-15)


def test_windowed_seed_vanishes_at_endpoints():
    grid = TimeGrid(3.0, 30)
    u = generate_seed(SeedConfig(M=3, T=1.7, A_m=1.0, rng_seed=1), 4, grid)
    np.testing.assert_array_equal(u.values[:, [0, -1]], 0.0)


def test_piecewise_seed_uses_left_edges():
    grid = TimeGrid(1.0, 8)
    cfg = SeedConfig(M=2, T=1.0, A_m=1.0, rng_seed=3, apply_window=False)
    pc = generate_seed(cfg, 2, grid, "piecewise")
    sm = generate_seed(cfg, 2, grid, "smooth")
    assert pc.length == 8
    np.testing.assert_array_equal(pc.values, sm.values[:, :-1])


def test_coefficient_file_roundtrip(tmp_path, rng):
    coef = SeedCoefficients(rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))
    path = tmp_path / "ab.json"
    save_coefficients(coef, path)
    back = load_coefficients(path)
    np.testing.assert_array_equal(back.a, coef.a)
    np.testing.assert_array_equal(back.b, coef.b)


def test_seed_config_validation():
    with pytest.raises(ConfigError):
        SeedConfig(M=0)
    with pytest.raises(ConfigError):
        SeedConfig(T=0.0)
    with pytest.raises(ConfigError):
        SeedConfig(A_m=-1.0)
    coef = SeedCoefficients(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ConfigError):
        draw_coefficients(SeedConfig(M=2, coefficients=coef), 3)
