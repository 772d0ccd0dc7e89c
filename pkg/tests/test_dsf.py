import numpy as np
import pytest

from critprobe.chain import ChainSpec
from critprobe.correlations import CorrelationSeries, averaged_correlations, correlation_sweep
from critprobe.dsf import MissingSeparationError, TransformConfig, dsf, half_line_fourier
from critprobe.exact import dsf_spectral_exact

CFG = TransformConfig(epsilon=0.15, t_max=60.0, dt=0.05)


def closed_form(omega, eps, omega0=1.0):
    return 1j / (omega - 2 * omega0 + 1j * eps)


def test_config_guards():
    with pytest.raises(ValueError):
        TransformConfig(epsilon=0.1, t_max=20.0)
    with pytest.raises(ValueError):
        TransformConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        TransformConfig(dt=0.5, band_top=6.0)
    TransformConfig(dt=0.05, band_top=6.0)
    scaled = TransformConfig.scaled(2.0)
    assert scaled.epsilon == 0.3 and scaled.t_max == 20.0 and scaled.dt == 0.025
    assert CFG.times.size == 1201 and CFG.times[-1] == pytest.approx(60.0)


def test_half_line_transform():
    t = CFG.times
    assert half_line_fourier(np.zeros(t.size), 0.7, CFG) == 0
    c = np.exp(-2j * t)
    omegas = np.linspace(-3, 3, 13)
    got = half_line_fourier(c, omegas, CFG)
    # finite horizon leaves exp(-eps T) = 1.2e-4 relative; compare with the exact finite integral
    z = 1j * (omegas - 2.0) - CFG.epsilon
    exact = (np.exp(z * CFG.t_max) - 1) / z
    assert np.max(np.abs(got - exact)) < 1e-5
    assert np.max(np.abs(got - closed_form(omegas, CFG.epsilon))) < 1e-3
    scalar = half_line_fourier(c, 0.5, CFG)
    assert isinstance(scalar, complex) and scalar == pytest.approx(got[7], rel=1e-13)


def test_long_horizon_meets_closed_form():
    cfg = TransformConfig(epsilon=0.15, t_max=120.0, dt=0.05)
    t = cfg.times
    for w in (-1.0, 0.5, 1.9, 2.0, 3.0):
        assert abs(half_line_fourier(np.exp(-2j * t), w, cfg) - closed_form(w, 0.15)) < 1e-4


def test_linearity(rng):
    t = CFG.times
    c1 = np.exp(-1.3j * t) * np.cos(0.2 * t)
    c2 = rng.normal(size=t.size) * np.exp(-0.1 * t)
    a, b = 0.3 - 1.2j, 2.1
    lhs = half_line_fourier(a * c1 + b * c2, 0.9, CFG)
    rhs = a * half_line_fourier(c1, 0.9, CFG) + b * half_line_fourier(c2, 0.9, CFG)
    assert abs(lhs - rhs) < 1e-12


def test_endpoint_correction_helps():
    t = np.arange(801) * 0.1
    cfg_on = TransformConfig(epsilon=0.15, t_max=80.0, dt=0.1)
    cfg_off = TransformConfig(epsilon=0.15, t_max=80.0, dt=0.1, endpoint_correction=False)
    exact = closed_form(1.0, 0.15) * (1 - np.exp((1j * (1.0 - 2.0) - 0.15) * 80.0))
    c = np.exp(-2j * t)
    assert abs(half_line_fourier(c, 1.0, cfg_on) - exact) < 0.05 * abs(
        half_line_fourier(c, 1.0, cfg_off) - exact)


def test_decoupled_chain_only_autocorrelation():
    spec = ChainSpec(6, 1.0, 0.0)
    corr = correlation_sweep(spec, 3, range(-2, 4), CFG.times)
    cfg = TransformConfig(epsilon=0.15, t_max=60.0, dt=0.05, n_max=2)
    for w in (0.0, 1.8, 2.5):
        z = 1j * (w - 2.0) - 0.15
        finite = (np.exp(z * 60.0) - 1) / z
        assert abs(dsf("xx", 0.0, w, corr, cfg) - finite) < 1e-6


def test_xy_antisymmetry_and_missing():
    spec = ChainSpec.from_lambda(6, 0.8)
    corr = correlation_sweep(spec, 3, range(-2, 3), CFG.times)
    w = np.linspace(-2, 2, 5)
    np.testing.assert_allclose(dsf("xy", 0.0, w, corr, CFG), -dsf("yx", 0.0, w, corr, CFG),
                               atol=1e-10)
    with pytest.raises(MissingSeparationError):
        dsf("xx", 0.0, w, corr, TransformConfig(epsilon=0.15, t_max=60.0, n_max=3))
    with pytest.raises(ValueError):
        dsf("xx", 0.0, w, corr, TransformConfig(epsilon=0.15, t_max=60.0, dt=0.1))


def test_nonzero_k_against_spectral_sum():
    spec = ChainSpec.from_lambda(6, 1.0)
    cfg = TransformConfig(epsilon=0.2, t_max=60.0, dt=0.05)
    corr = averaged_correlations(spec, cfg.times)
    w = np.linspace(-3, 3, 9)
    for k in (0.0, 0.7, np.pi):
        got = dsf("xx", k, w, corr, cfg)
        ref = dsf_spectral_exact(spec, "xx", w, 0.2, k)
        assert np.max(np.abs(got - ref)) < 2e-3


def test_broadening_convergence_off_resonance():
    # far below the band, Re S converges as eps shrinks: successive changes shrink
    spec = ChainSpec.from_lambda(6, 0.5)
    values = []
    for eps in (0.2, 0.1, 0.05):
        cfg = TransformConfig(epsilon=eps, t_max=8.0 / eps, dt=0.05)
        corr = averaged_correlations(spec, cfg.times)
        values.append(dsf("xx", 0.0, -1.0, corr, cfg).real)
    assert abs(values[2] - values[1]) < abs(values[1] - values[0])


def test_series_too_short():
    short = CorrelationSeries("xx", 0.05, 10, {0: np.ones(10)})
    with pytest.raises(ValueError):
        dsf("xx", 0.0, 0.0, {"xx": short}, CFG)
