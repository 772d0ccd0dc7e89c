"""Transverse-field Ising chain and its free-fermion spectral data.

Open chains use

    H = Omega * sum_j sz_j + J * sum_{j<N} sx_j sx_{j+1},

which after Jordan-Wigner is ``sum c^+ A c + 1/2 sum (c^+ B c^+ + h.c.)``
with ``A = 2 Omega 1 + J (shift + shift^T)`` and ``B = J (shift - shift^T)``.
Periodic chains use the analytic quasiparticle grid with
``Lambda_k = sqrt(1 + lam^2 + 2 lam cos k)`` and energies ``2 Gamma Lambda_k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Boundary",
    "ChainSpec",
    "SpectralSolution",
    "SpectrumError",
    "periodic_spectrum",
    "open_spectrum",
    "spectrum",
    "energy_gap",
    "bdg_matrices",
]


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class SpectrumError(RuntimeError):
    """Eigen-solver failure for a given chain."""


@dataclass(frozen=True)
class ChainSpec:
    """Physical parameters of the chain.

    ``field`` is the transverse field (Gamma, or Omega for the open chain),
    ``coupling`` the nearest-neighbour x-x coupling J.
    """

    n_sites: int
    field: float = 1.0
    coupling: float = 0.0
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not self.field > 0 or not np.isfinite(self.field):
            raise ValueError(f"field must be positive and finite, got {self.field}")
        if not self.coupling >= 0 or not np.isfinite(self.coupling):
            raise ValueError(f"coupling must be finite and >= 0, got {self.coupling}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def lam(self) -> float:
        return self.coupling / self.field

    @classmethod
    def from_lambda(cls, n_sites: int, lam: float, field: float = 1.0,
                    boundary: Boundary | str = Boundary.OPEN) -> "ChainSpec":
        return cls(n_sites, field, lam * field, Boundary(boundary))


@dataclass(frozen=True)
class SpectralSolution:
    """Quasiparticle energies and the Bogoliubov rows Phi, Psi."""

    energies: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    boundary: Boundary
    spec: ChainSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        for arr in (self.energies, self.phi, self.psi):
            arr.setflags(write=False)


def periodic_spectrum(spec: ChainSpec) -> SpectralSolution:
    """Analytic spectrum of the periodic chain.

    Momenta ``k = 2 pi m / N`` with ``m = -N/2 .. N/2-1`` (even N) or
    ``-(N-1)/2 .. (N-1)/2`` (odd N). ``phi`` rows are sine vectors for
    ``k > 0`` and cosine vectors for ``k <= 0``.
    """
    if spec.boundary is not Boundary.PERIODIC:
        raise ValueError("periodic_spectrum needs a periodic ChainSpec")
    n, lam = spec.n_sites, spec.lam
    if n % 2 == 0:
        ms = np.arange(-n // 2, n // 2)
    else:
        ms = np.arange(-(n - 1) // 2, (n - 1) // 2 + 1)
    ks = 2.0 * np.pi * ms / n
    sites = np.arange(1, n + 1)

    def phi_row(k):
        if k > 0:
            return np.sqrt(2.0 / n) * np.sin(k * sites)
        return np.sqrt(2.0 / n) * np.cos(k * sites)

    lam_k = np.sqrt(np.maximum(1.0 + lam**2 + 2.0 * lam * np.cos(ks), 0.0))
    phi = np.empty((n, n))
    psi = np.empty((n, n))
    for row, (m, k) in enumerate(zip(ms, ks)):
        if m == -n // 2 and n % 2 == 0:
            # k = -pi: cos(k j) = (-1)^j, normalised by 1/sqrt(N) not sqrt(2/N)
            phi[row] = np.cos(k * sites) / np.sqrt(n)
            if np.isclose(lam, 1.0, rtol=0.0, atol=1e-14):
                lam_k[row] = 0.0
                # zero mode: psi = +phi (the sign is a gauge choice)
                psi[row] = phi[row]
                continue
        elif m == 0:
            phi[row] = np.full(n, 1.0 / np.sqrt(n))
        else:
            phi[row] = phi_row(k)
        partner = phi_row(-k) if k != 0 else np.zeros(n)
        if m == -n // 2 and n % 2 == 0:
            partner = np.zeros(n)  # sin(pi j) = 0
        psi[row] = -((1.0 + lam * np.cos(k)) * phi[row] + lam * np.sin(k) * partner) / lam_k[row]
    return SpectralSolution(2.0 * spec.field * lam_k, phi, psi, Boundary.PERIODIC, spec)


def bdg_matrices(spec: ChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """The open-chain ``A`` and ``B`` matrices."""
    n, om, j = spec.n_sites, spec.field, spec.coupling
    up = np.eye(n, k=1)
    a = 2.0 * om * np.eye(n) + j * (up + up.T)
    b = j * (up - up.T)
    return a, b


def open_spectrum(spec: ChainSpec) -> SpectralSolution:
    """Spectrum of the open chain from the SVD of ``A + B``.

    ``(A-B)(A+B) = M^T M`` with ``M = A + B``, so singular values are the
    energies, right singular vectors the Phi rows and left singular vectors
    the Psi rows (``Psi_k = Phi_k (A-B) / Lambda_k``; zero modes get the
    orthonormal completion returned by the SVD). Rows are sorted by energy.
    """
    if spec.boundary is not Boundary.OPEN:
        raise ValueError("open_spectrum needs an open ChainSpec")
    a, b = bdg_matrices(spec)
    try:
        u, s, vh = np.linalg.svd(a + b)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD failed for lambda={spec.lam}, N={spec.n_sites}: {exc}") from exc
    order = np.argsort(s, kind="stable")
    return SpectralSolution(s[order].copy(), vh[order].copy(), u.T[order].copy(), Boundary.OPEN, spec)


def spectrum(spec: ChainSpec) -> SpectralSolution:
    if spec.boundary is Boundary.OPEN:
        return open_spectrum(spec)
    return periodic_spectrum(spec)


def energy_gap(sol: SpectralSolution) -> float:
    """Smallest quasiparticle energy."""
    return float(np.min(sol.energies))
