"""Two-qubit evolution, concurrence and Uhlmann fidelity."""

from __future__ import annotations

import numpy as np

from .coupling import EffectiveCouplings, TwoQubitHamiltonian, build_heff

__all__ = [
    "TwoQubitDensity",
    "basis_state",
    "evolve",
    "concurrence",
    "fidelity",
    "concurrence_trajectory",
    "time_to_first_max",
    "random_density",
]

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
_LABELS = ("ee", "eg", "ge", "gg")


class TwoQubitDensity:
    """Validated 4x4 density matrix (Hermitian, unit trace, PSD to 1e-10)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        rho = np.array(matrix, dtype=np.complex128)
        if rho.shape != (4, 4):
            raise ValueError(f"expected 4x4, got {rho.shape}")
        if check:
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(rho) - 1.0) > 1e-10:
                raise ValueError(f"trace {np.trace(rho).real:.12g} != 1")
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise ValueError("density matrix has negative eigenvalues")
        rho.setflags(write=False)
        self.matrix = rho

    @classmethod
    def pure(cls, vec) -> "TwoQubitDensity":
        v = np.asarray(vec, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


def _mat(x) -> np.ndarray:
    if isinstance(x, (TwoQubitDensity, TwoQubitHamiltonian)):
        return x.matrix
    return np.asarray(x, dtype=np.complex128)


def basis_state(label: str) -> TwoQubitDensity:
    """Projector on |ee>, |eg>, |ge> or |gg>."""
    v = np.zeros(4)
    v[_LABELS.index(label)] = 1.0
    return TwoQubitDensity.pure(v)


def _propagators(h: np.ndarray, times: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * np.outer(times, vals))
    return np.einsum("ik,tk,jk->tij", vecs, phases, vecs.conj())


def evolve(rho0, h, t: float) -> TwoQubitDensity:
    """``U rho0 U^+`` with ``U = exp(-i H t)``."""
    u = _propagators(_mat(h), np.array([float(t)]))[0]
    rho = u @ _mat(rho0) @ u.conj().T
    return TwoQubitDensity(0.5 * (rho + rho.conj().T), check=False)


def _factor(m: np.ndarray) -> np.ndarray:
    """``W`` with ``m = W W^+``, dropping eigenvalues at roundoff level.

    Working with W instead of ``sqrt(m)`` keeps square roots of roundoff
    (~1e-8 from 1e-16) out of near-pure results.
    """
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = vals > 16.0 * np.finfo(float).eps * max(float(vals[-1]), 0.0)
    return vecs[:, keep] * np.sqrt(vals[keep])


def concurrence(rho) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` (square roots of the eigenvalues of ``rho rho~``) are the
    singular values of ``W^T (sy x sy) W`` for any factor ``rho = W W^+``.
    """
    w = _factor(_mat(rho))
    lam = np.zeros(4)
    sv = np.linalg.svd(w.T @ _SYSY @ w, compute_uv=False)
    lam[:sv.size] = sv
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def fidelity(rho0, rho1) -> float:
    """Uhlmann fidelity ``tr sqrt(sqrt(rho1) rho0 sqrt(rho1))``.

    Evaluated as the trace norm of ``W0^+ W1`` with ``rho_i = W_i W_i^+``,
    which has the same value and is symmetric in its arguments by construction.
    """
    overlap = _factor(_mat(rho0)).conj().T @ _factor(_mat(rho1))
    if overlap.size == 0:
        return 0.0
    return float(min(1.0, np.sum(np.linalg.svd(overlap, compute_uv=False))))


def concurrence_trajectory(c: EffectiveCouplings, rho0, times) -> np.ndarray:
    """Concurrence of ``rho(t)`` under ``build_heff(c)`` at each time."""
    times = np.asarray(times, dtype=float)
    us = _propagators(build_heff(c).matrix, times)
    r0 = _mat(rho0)
    out = np.empty(times.size)
    for i, u in enumerate(us):
        out[i] = concurrence(u @ r0 @ u.conj().T)
    return out


def time_to_first_max(times, series, threshold: float = 0.99) -> float:
    """Earliest time with ``C >= threshold * max(C)``; ``inf`` if ``C`` is all zero."""
    series = np.asarray(series, dtype=float)
    peak = float(series.max()) if series.size else 0.0
    if peak <= 1e-12:
        return float("inf")
    idx = int(np.argmax(series >= threshold * peak))
    return float(np.asarray(times, dtype=float)[idx])


def random_density(rng: np.random.Generator, rank: int = 4) -> TwoQubitDensity:
    """``G G^+ / tr(G G^+)`` with a complex Gaussian ``4 x rank`` matrix G."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return TwoQubitDensity(rho / np.trace(rho).real)
