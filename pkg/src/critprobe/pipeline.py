"""End-to-end drivers: chain -> correlations -> DSF -> couplings, and sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainSpec, open_spectrum
from .correlations import averaged_correlations, correlation_sweep, default_anchor
from .coupling import DSF_KEYS, EffectiveCouplings, couplings_from_dsf
from .dsf import TransformConfig, dsf
from .exact import full_hamiltonian, ground_reduced_density, heff_ground_density
from .dynamics import basis_state, concurrence_trajectory, fidelity, time_to_first_max

__all__ = ["CouplingRow", "chain_correlations", "effective_couplings", "coupling_sweep",
           "parallel_map", "is_near_resonant", "fidelity_curve", "entanglement_times",
           "anchor_for"]


@dataclass(frozen=True)
class CouplingRow:
    lam: float
    couplings: EffectiveCouplings

    def as_tuple(self):
        c = self.couplings
        return (self.lam, c.mu_a, c.mu_b, c.g1, c.g2, c.residual_imag, int(c.near_resonant))


def chain_correlations(spec: ChainSpec, config: TransformConfig, anchor: int | None = None,
                       include_n0: bool = True):
    """Correlation series for the DSF.

    ``anchor=None`` gives site-averaged series over all pairs; an integer
    anchors at site j with separations ``|n| <= min(j-1, N-j)``.
    """
    times = config.times
    if anchor is None:
        corr = averaged_correlations(spec, times, config.n_max)
    else:
        reach = min(anchor - 1, spec.n_sites - anchor)
        if config.n_max is not None:
            reach = min(reach, config.n_max)
        corr = correlation_sweep(spec, anchor, range(-reach, reach + 1), times)
    if not include_n0:
        for series in corr.values():
            series.values[0] = np.zeros_like(series.values[0])
    return corr


def is_near_resonant(spec: ChainSpec, mu: float, epsilon: float) -> bool:
    """True when ``|mu - Lambda_p| < 3 eps`` for some quasiparticle energy."""
    energies = open_spectrum(spec).energies
    return bool(np.any(np.abs(abs(mu) - energies) < 3.0 * epsilon))


def effective_couplings(spec: ChainSpec, mu: float, j_a: float, j_b: float,
                        config: TransformConfig, anchor: int | None = None,
                        include_n0: bool = True) -> EffectiveCouplings:
    corr = chain_correlations(spec, config, anchor, include_n0)
    n_max = max(corr["xx"].values)
    cfg = replace(config, n_max=n_max)
    s = {(ch, sg): dsf(ch, 0.0, sg * mu, corr, cfg) for ch, sg in DSF_KEYS}
    return couplings_from_dsf(s, j_a, j_b, mu,
                              near_resonant=is_near_resonant(spec, mu, config.epsilon))


def _coupling_point(args):
    lam, template, mu, j_a, j_b, config, anchor, include_n0 = args
    spec = ChainSpec.from_lambda(template.n_sites, lam, template.field, template.boundary)
    return CouplingRow(float(lam), effective_couplings(spec, mu, j_a, j_b, config, anchor, include_n0))


def parallel_map(func, items, threads: int | None = None) -> list:
    """Ordered map, using a process pool when ``threads > 1``."""
    items = list(items)
    threads = threads or int(os.environ.get("PROBE_THREADS", "1"))
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


def coupling_sweep(lambdas, template: ChainSpec, mu: float, j_a: float, j_b: float,
                   config: TransformConfig, anchor: int | None = None, include_n0: bool = True,
                   threads: int | None = None) -> list[CouplingRow]:
    """Couplings at every lambda (J = lambda * field), ordered by lambda."""
    lams = sorted(float(x) for x in lambdas)
    if not all(np.isfinite(lams)):
        raise ValueError("lambda grid must be finite")
    jobs = [(lam, template, mu, j_a, j_b, config, anchor, include_n0) for lam in lams]
    return parallel_map(_coupling_point, jobs, threads)


def anchor_for(spec: ChainSpec, anchor: int | None) -> int:
    return default_anchor(spec.n_sites) if anchor is None else anchor


def _fidelity_point(args):
    lam, template, mu, j_a, j_b, config, anchor, include_n0 = args
    spec = ChainSpec.from_lambda(template.n_sites, lam, template.field, template.boundary)
    c = effective_couplings(spec, mu, j_a, j_b, config, anchor, include_n0)
    rho0 = ground_reduced_density(full_hamiltonian(spec, mu, j_a, j_b))
    return float(lam), fidelity(rho0, heff_ground_density(c))


def fidelity_curve(lambdas, template: ChainSpec, mu: float, j_a: float, j_b: float,
                   config: TransformConfig, anchor: int | None = None, include_n0: bool = True,
                   threads: int | None = None) -> list[tuple[float, float]]:
    """``(lambda, F)`` between the exact reduced ground state and the H_eff ground state."""
    if template.n_sites > 12:
        raise ValueError(f"fidelity needs the dense oracle: N={template.n_sites} > 12")
    lams = sorted(float(x) for x in lambdas)
    jobs = [(lam, template, mu, j_a, j_b, config, anchor, include_n0) for lam in lams]
    return parallel_map(_fidelity_point, jobs, threads)


def entanglement_times(rows: list[CouplingRow], times, initial: str = "eg",
                       threshold: float = 0.99) -> list[tuple[float, float, float]]:
    """Per row: ``(lambda, t*, max C)`` for the concurrence trajectory from ``initial``."""
    rho0 = basis_state(initial)
    out = []
    for row in rows:
        series = concurrence_trajectory(row.couplings, rho0, times)
        out.append((row.lam, time_to_first_max(times, series, threshold), float(series.max())))
    return out
