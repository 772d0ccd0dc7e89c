import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critprobe.coupling import EffectiveCouplings, build_heff
from critprobe.dynamics import (TwoQubitDensity, basis_state, concurrence,
                                concurrence_trajectory, evolve, fidelity, random_density,
                                time_to_first_max)

BELL = np.array([0, 1, 1, 0]) / np.sqrt(2)
PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)


def test_density_validation():
    with pytest.raises(ValueError):
        TwoQubitDensity(np.eye(3) / 3)
    with pytest.raises(ValueError):
        TwoQubitDensity(np.eye(4))
    with pytest.raises(ValueError):
        TwoQubitDensity(np.diag([1.5, -0.5, 0, 0]))
    bad = np.eye(4) / 4 + 0.0j
    bad[0, 1] = 0.1j
    with pytest.raises(ValueError):
        TwoQubitDensity(bad)


def test_evolve_examples():
    h = build_heff(EffectiveCouplings(1.0, 1.0, 0.05, 0.0))
    rho0 = basis_state("eg")
    np.testing.assert_allclose(evolve(rho0, h, 0.0).matrix, rho0.matrix, atol=1e-15)
    for t in (0.3, 7.0, 31.0):
        assert evolve(rho0, h, t).matrix[2, 2].real == pytest.approx(np.sin(0.05 * t) ** 2, abs=1e-12)
    diag = build_heff(EffectiveCouplings(1.0, 0.7, 0.0, 0.0))
    mixed = TwoQubitDensity(np.diag([0.1, 0.2, 0.3, 0.4]))
    np.testing.assert_allclose(evolve(mixed, diag, 12.0).matrix, mixed.matrix, atol=1e-14)


def test_concurrence_examples():
    assert concurrence(TwoQubitDensity.pure(BELL)) == pytest.approx(1.0)
    assert concurrence(basis_state("eg")) == 0.0
    for p, expected in ((0.6, 0.4), (0.2, 0.0), (1.0, 1.0)):
        werner = p * np.outer(PHI_PLUS, PHI_PLUS) + (1 - p) * np.eye(4) / 4
        assert concurrence(TwoQubitDensity(werner)) == pytest.approx(expected, abs=1e-12)


def test_fidelity_examples(rng):
    rho = random_density(rng)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
    assert fidelity(basis_state("ee"), basis_state("gg")) == pytest.approx(0.0, abs=1e-15)
    for _ in range(50):
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        got = fidelity(TwoQubitDensity.pure(a), TwoQubitDensity.pure(b))
        assert got == pytest.approx(abs(np.vdot(a, b)), abs=1e-10)


def test_trajectory_analytic_and_sentinel():
    times = np.linspace(0, 100, 1001)
    c = EffectiveCouplings(1.0, 1.0, 0.02, 0.0)
    series = concurrence_trajectory(c, basis_state("eg"), times)
    np.testing.assert_allclose(series, np.abs(np.sin(0.04 * times)), atol=1e-8)
    zero = concurrence_trajectory(EffectiveCouplings(1.0, 1.0, 0.0, 0.0), basis_state("eg"), times)
    assert np.all(zero == 0)
    assert time_to_first_max(times, zero) == np.inf


def test_time_to_first_max_monotone_in_g1():
    times = np.linspace(0, 200, 20001)
    previous = np.inf
    for g1 in (0.005, 0.01, 0.02, 0.05):
        series = concurrence_trajectory(EffectiveCouplings(1, 1, g1, 0), basis_state("eg"), times)
        t_star = time_to_first_max(times, series)
        assert t_star < previous
        # 0.99 of the peak is reached slightly before pi / (4 g1)
        assert t_star == pytest.approx(np.arcsin(0.99) / (2 * g1), abs=0.02)
        previous = t_star


def test_double_flip_drives_ee():
    times = np.linspace(0, 100, 2001)
    c = EffectiveCouplings(0.0, 0.0, 0.0, 0.03)
    series = concurrence_trajectory(c, basis_state("ee"), times)
    np.testing.assert_allclose(series, np.abs(np.sin(0.06 * times)), atol=1e-8)


seeds = st.integers(0, 2**32 - 1)


def _local_unitary(rng):
    def haar():
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, r = np.linalg.qr(z)
        return q * (np.diag(r) / np.abs(np.diag(r)))
    return np.kron(haar(), haar())


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(1, 4))
def test_bounds_and_invariances(seed, rank):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, rank), random_density(rng)
    c = concurrence(a)
    assert 0.0 <= c <= 1.0
    f = fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(fidelity(b, a), abs=1e-9)
    u = _local_unitary(rng)
    assert concurrence(TwoQubitDensity(u @ a.matrix @ u.conj().T)) == pytest.approx(c, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.0, 500.0))
def test_evolution_preserves_trace_and_purity(seed, t):
    rng = np.random.default_rng(seed)
    c = EffectiveCouplings(*rng.normal(size=2), *(0.05 * rng.normal(size=2)))
    rho = random_density(rng, int(rng.integers(1, 5)))
    out = evolve(rho, build_heff(c), t).matrix
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    purity = np.trace(rho.matrix @ rho.matrix).real
    assert np.trace(out @ out).real == pytest.approx(purity, abs=1e-10)
