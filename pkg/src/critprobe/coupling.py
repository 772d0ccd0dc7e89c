"""Induced two-qubit Hamiltonian from dynamical structure factors.

Basis order is |ee>, |eg>, |ge>, |gg> throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "EffectiveCouplings",
    "TwoQubitHamiltonian",
    "couplings_from_dsf",
    "build_heff",
    "DSF_KEYS",
]

# (channel, sign of omega) pairs consumed by couplings_from_dsf
DSF_KEYS = (("xx", 1), ("yy", 1), ("xy", 1), ("xx", -1), ("yy", -1), ("xy", -1))


@dataclass(frozen=True)
class EffectiveCouplings:
    """Qubit splittings ``mu_a``, ``mu_b``, flip-flop ``g1``, double-flip ``g2``."""

    mu_a: float
    mu_b: float
    g1: float
    g2: float
    residual_imag: float = 0.0
    near_resonant: bool = False
    excluded_pairs: int = 0
    tags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for name in ("mu_a", "mu_b", "g1", "g2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu_a, self.mu_b, self.g1, self.g2)


@dataclass(frozen=True)
class TwoQubitHamiltonian:
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("two-qubit Hamiltonian is not Hermitian")
        m.setflags(write=False)


def couplings_from_dsf(s_values: Mapping[tuple[str, int], complex], j_a: float, j_b: float,
                       mu: float, near_resonant: bool = False) -> EffectiveCouplings:
    """Evaluate the four coupling formulas from k=0 structure factors.

    ``s_values[(channel, +1)]`` is ``S^channel(0, +mu)`` and
    ``s_values[(channel, -1)]`` is ``S^channel(0, -mu)`` for channels xx, yy, xy.
    Each coefficient is a real combination of Im/Re parts; the imaginary
    remainder of the corresponding complex combination is kept as
    ``residual_imag``.
    """
    s = {key: complex(s_values[key]) for key in DSF_KEYS}
    if not all(np.isfinite(v.real) and np.isfinite(v.imag) for v in s.values()):
        raise ValueError("non-finite DSF input")
    # Im z = Re(-i z): write every term as the real part of a complex number
    shift = (-1j * (s["xx", 1] + s["yy", 1] - s["xx", -1] - s["yy", -1])
             + 2.0 * (s["xy", 1] + s["xy", -1]))
    flip = (-1j * (s["xx", 1] + s["yy", 1] + s["xx", -1] + s["yy", -1])
            + 2.0 * (s["xy", 1] - s["xy", -1]))
    pair = -1j * (s["xx", 1] - s["yy", 1] + s["xx", -1] - s["yy", -1])
    mu_a = mu + j_a**2 * shift.real
    mu_b = mu + j_b**2 * shift.real
    g1 = j_a * j_b * flip.real
    g2 = j_a * j_b * pair.real
    residual = max(j_a**2 * abs(shift.imag), j_b**2 * abs(shift.imag),
                   abs(j_a * j_b) * abs(flip.imag), abs(j_a * j_b) * abs(pair.imag))
    return EffectiveCouplings(mu_a, mu_b, g1, g2, residual_imag=float(residual),
                              near_resonant=near_resonant)


def build_heff(c: EffectiveCouplings) -> TwoQubitHamiltonian:
    """``mu_a/2 szA + mu_b/2 szB + g1 (s+s- + h.c.) + g2 (s+s+ + h.c.)``."""
    h = np.diag([0.5 * (c.mu_a + c.mu_b), 0.5 * (c.mu_a - c.mu_b),
                 0.5 * (c.mu_b - c.mu_a), -0.5 * (c.mu_a + c.mu_b)]).astype(np.complex128)
    h[1, 2] = h[2, 1] = c.g1
    h[0, 3] = h[3, 0] = c.g2
    return TwoQubitHamiltonian(h)
