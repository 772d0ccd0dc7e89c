import numpy as np
import pytest

from critprobe.chain import ChainSpec, open_spectrum
from critprobe.correlations import (CorrelationSeries, ContractionTable, averaged_correlations,
                                    contraction, correlation_sweep, default_anchor,
                                    derive_xy_yy, fd_weights, skew_stack, time_grid,
                                    xx_correlation)
from critprobe.exact import chain_correlation_exact, chain_system


def table(n, lam):
    return ContractionTable(open_spectrum(ChainSpec.from_lambda(n, lam)))


def test_equal_time_contractions():
    tab = table(7, 0.9)
    assert contraction("++", 3, 3, 0.0, tab) == pytest.approx(1.0)
    assert contraction("++", 2, 5, 0.0, tab) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        contraction("+x", 1, 1, 0.0, tab)
    with pytest.raises(ValueError):
        contraction("++", 0, 1, 0.0, tab)


def test_decoupled_contraction_against_oracle():
    # for J = 0 the +- contraction of a site with itself is +exp(-2i Omega t)
    t = np.linspace(0, 3, 7)
    tab = table(4, 0.0)
    got = np.array([contraction("+-", 2, 2, x, tab) for x in t])
    np.testing.assert_allclose(got, np.exp(-2j * t), atol=1e-14)
    # on site 1 (no string) phi^+ = sx and phi^- = s+ - s- = i sy
    xy = chain_correlation_exact(ChainSpec(4, 1.0, 0.0), 1, 0, t, "xy")
    np.testing.assert_allclose(got, 1j * xy, atol=1e-12)


def test_autocorrelation_is_not_constant():
    tab = table(6, 0.0)
    t = np.linspace(0, 2, 5)
    np.testing.assert_allclose(xx_correlation(3, 0, t, tab), np.exp(-2j * t), atol=1e-13)
    assert xx_correlation(3, 0, 0.0, tab) == pytest.approx(1.0)


def test_decoupled_chain_has_no_cross_correlation():
    tab = table(5, 0.0)
    t = np.linspace(0, 4, 9)
    for n in (1, 2, 3):
        assert np.max(np.abs(xx_correlation(1, n, t, tab))) < 1e-14


def test_single_point_against_oracle():
    spec = ChainSpec.from_lambda(6, 0.75)
    tab = ContractionTable(open_spectrum(spec))
    assert xx_correlation(2, 2, 0.7, tab) == pytest.approx(
        chain_correlation_exact(spec, 2, 2, 0.7), abs=1e-8)


def test_negative_separations_against_oracle():
    spec = ChainSpec.from_lambda(6, 1.2)
    tab = ContractionTable(open_spectrum(spec))
    chain = chain_system(spec)
    t = np.linspace(0, 3, 11)
    for j, n in [(5, -2), (4, -3), (2, -1), (6, -5)]:
        np.testing.assert_allclose(xx_correlation(j, n, t, tab),
                                   chain_correlation_exact(spec, j, n, t, "xx", chain), atol=1e-10)
    with pytest.raises(ValueError):
        xx_correlation(2, -2, t, tab)


def test_skew_stack_is_antisymmetric():
    tab = table(8, 0.6)
    stack = skew_stack(3, 4, np.linspace(0, 1, 4), tab)
    assert stack.shape == (4, 2 * (2 * 3 + 4 - 1), 2 * (2 * 3 + 4 - 1))
    assert np.max(np.abs(stack + stack.transpose(0, 2, 1))) < 1e-13


def test_fd_weights():
    np.testing.assert_allclose(fd_weights(np.arange(-2, 3), 1), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12],
                               atol=1e-12)
    np.testing.assert_allclose(fd_weights(np.array([-1, 0, 1]), 2), [1, -2, 1], atol=1e-12)


def test_derived_channels_closed_form():
    dt, omega = 0.01, 1.3
    t = dt * np.arange(400)
    xx = CorrelationSeries("xx", dt, t.size, {0: np.exp(-2j * omega * t)})
    xy, yx, yy = derive_xy_yy(xx, omega)
    np.testing.assert_allclose(xy.values[0], -1j * np.exp(-2j * omega * t), atol=1e-7)
    np.testing.assert_allclose(yx.values[0], -xy.values[0], atol=0)
    np.testing.assert_allclose(yy.values[0], np.exp(-2j * omega * t), atol=1e-6)
    const = CorrelationSeries("xx", dt, 20, {1: np.full(20, 0.3 + 0.1j)})
    for s in derive_xy_yy(const, omega):
        assert np.max(np.abs(s.values[1])) < 1e-12
    with pytest.raises(ValueError):
        derive_xy_yy(CorrelationSeries("xx", dt, 4, {0: np.ones(4)}), omega)


def test_sweep_against_oracle_all_channels():
    spec = ChainSpec.from_lambda(5, 0.75)
    t = time_grid(0.01, 2.0)
    corr = correlation_sweep(spec, 3, range(-2, 3), t)
    chain = chain_system(spec)
    for n in range(-2, 3):
        np.testing.assert_allclose(corr["xx"].values[n][::20],
                                   chain_correlation_exact(spec, 3, n, t[::20], "xx", chain),
                                   atol=1e-10)
        for ch in ("xy", "yy", "yx"):
            np.testing.assert_allclose(corr[ch].values[n][::20],
                                       chain_correlation_exact(spec, 3, n, t[::20], ch, chain),
                                       atol=5e-4)


def test_sweep_properties():
    spec = ChainSpec.from_lambda(10, 1.0)
    t = time_grid(0.05, 3.0)
    corr = correlation_sweep(spec, default_anchor(10), range(-4, 5), t)
    for n, series in corr["xx"].values.items():
        assert abs(series[0].imag) < 1e-8
        assert np.max(np.abs(series)) <= 1 + 1e-6
    np.testing.assert_array_equal(corr["yx"].values[2], -corr["xy"].values[2])
    assert corr["xx"].anchor == default_anchor(10)


def test_averaged_matches_manual_average():
    spec = ChainSpec.from_lambda(5, 0.6)
    t = time_grid(0.05, 1.0)
    avg = averaged_correlations(spec, t)
    tab = ContractionTable(open_spectrum(spec))
    manual = sum(xx_correlation(j, 2, t, tab) for j in range(1, 4)) / 5
    np.testing.assert_allclose(avg["xx"].values[2], manual, atol=1e-14)
    np.testing.assert_array_equal(avg["xx"].values[-2], avg["xx"].values[2])


def test_default_anchor_centres_the_pair():
    assert default_anchor(20) == 11
    assert default_anchor(20, 4) == 9
    assert default_anchor(7, 2) == 3


def test_grid_validation():
    spec = ChainSpec.from_lambda(4, 0.5)
    with pytest.raises(ValueError):
        correlation_sweep(spec, 2, [0], np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ValueError):
        correlation_sweep(spec, 2, [0], np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        correlation_sweep(ChainSpec(4, boundary="periodic"), 2, [0], time_grid(0.1, 1.0))
