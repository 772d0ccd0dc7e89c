"""Brute-force references at small N.

Tensor ordering is ``[spin A, spin B, site 1, ..., site N]`` with spin A the
leading (most significant) factor, so the two-spin block of any state
vector is ``psi.reshape(4, 2**N)`` in the order |ee>, |eg>, |ge>, |gg>.
Single-spin basis: index 0 = up = e, index 1 = down = g.

The chain Hamiltonian is ``Omega sum sz + J sum sx sx`` (plus the closing
bond for periodic boundaries); the qubits see ``mu/2 (szA + szB)`` and the
flip-flop coupling ``sum_a sum_j 2 J_a / sqrt(N) (s+_j s-_a + s-_j s+_a)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chain import Boundary, ChainSpec
from .coupling import EffectiveCouplings, TwoQubitHamiltonian, build_heff

__all__ = [
    "DenseSystem",
    "DegenerateGroundWarning",
    "MAX_FULL_SITES",
    "MAX_CORRELATION_SITES",
    "chain_hamiltonian",
    "chain_system",
    "full_hamiltonian",
    "ground_reduced_density",
    "frohlich_couplings_exact",
    "frohlich_couplings_full_basis",
    "chain_correlation_exact",
    "dsf_spectral_exact",
    "site_operator",
]

MAX_FULL_SITES = 12
MAX_CORRELATION_SITES = 8
_DENSE_DIM = 4096

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_SP = np.array([[0.0, 1.0], [0.0, 0.0]])  # |e><g|
_SM = _SP.T
_PAULI = {"x": _SX, "y": _SY, "z": _SZ, "+": _SP, "-": _SM}


class DegenerateGroundWarning(RuntimeWarning):
    pass


@dataclass
class DenseSystem:
    """Hamiltonian with (some of) its eigenpairs, ascending."""

    hamiltonian: object  # ndarray or sparse matrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_sites: int
    with_qubits: bool
    degenerate_ground: bool = False

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def site_operator(op: str, site: int, n_factors: int) -> sp.csr_matrix:
    """Pauli ``op`` on tensor factor ``site`` (0-based) of ``n_factors`` qubits."""
    mat = _PAULI[op]
    left = sp.identity(2**site, format="csr")
    right = sp.identity(2 ** (n_factors - site - 1), format="csr")
    out = sp.kron(sp.kron(left, sp.csr_matrix(mat)), right, format="csr")
    if op != "y":
        out = out.real
    return out


def _chain_terms(spec: ChainSpec, offset: int, n_factors: int):
    n = spec.n_sites
    h = sp.csr_matrix((2**n_factors, 2**n_factors))
    for j in range(n):
        h = h + spec.field * site_operator("z", offset + j, n_factors)
    bonds = [(j, j + 1) for j in range(n - 1)]
    if spec.boundary is Boundary.PERIODIC and n > 2:
        bonds.append((n - 1, 0))
    for a, b in bonds:
        h = h + spec.coupling * (site_operator("x", offset + a, n_factors)
                                 @ site_operator("x", offset + b, n_factors))
    return h


def chain_hamiltonian(spec: ChainSpec) -> sp.csr_matrix:
    return _chain_terms(spec, 0, spec.n_sites).tocsr()


def _diagonalize(h, n_sites, with_qubits, n_states=None) -> DenseSystem:
    dim = h.shape[0]
    if dim <= _DENSE_DIM and n_states is None:
        vals, vecs = np.linalg.eigh(h.toarray())
    else:
        k = min(n_states or 4, dim - 2)
        vals, vecs = spla.eigsh(h, k=k, which="SA", tol=1e-13)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    resid = np.linalg.norm(h @ vecs[:, :8] - vecs[:, :8] * vals[:8], axis=0)
    if np.any(resid > 1e-9):
        raise RuntimeError(f"eigen-residual {resid.max():.2e} exceeds 1e-9")
    degenerate = vals.size > 1 and vals[1] - vals[0] < 1e-10
    return DenseSystem(h, vals, vecs, n_sites, with_qubits, bool(degenerate))


def chain_system(spec: ChainSpec) -> DenseSystem:
    """Full eigendecomposition of the chain alone (dimension 2^N)."""
    if spec.n_sites > MAX_FULL_SITES:
        raise ValueError(f"dense chain refused: N={spec.n_sites} > {MAX_FULL_SITES} "
                         f"(dimension 2^N)")
    return _diagonalize(chain_hamiltonian(spec), spec.n_sites, False)


def full_hamiltonian(spec: ChainSpec, mu: float, j_a: float, j_b: float,
                     n_states: int | None = None) -> DenseSystem:
    """Qubits plus chain, ``H = H_C + H_E + H_I``.

    Dimensions up to 4096 (N <= 10) are diagonalized densely; larger
    systems, or an explicit ``n_states``, use a sparse Lanczos solve for the
    lowest states only.
    """
    n = spec.n_sites
    if n > MAX_FULL_SITES:
        raise ValueError(f"full Hamiltonian refused: N={n} > {MAX_FULL_SITES} would need "
                         f"dimension 2^{n + 2} = {2 ** (n + 2)}")
    nf = n + 2
    h = 0.5 * mu * (site_operator("z", 0, nf) + site_operator("z", 1, nf))
    h = h + _chain_terms(spec, 2, nf)
    for q, ja in ((0, j_a), (1, j_b)):
        if ja == 0:
            continue
        g = 2.0 * ja / np.sqrt(n)
        for j in range(n):
            h = h + g * (site_operator("+", 2 + j, nf) @ site_operator("-", q, nf)
                         + site_operator("-", 2 + j, nf) @ site_operator("+", q, nf))
    return _diagonalize(h.tocsr(), n, True, n_states)


def ground_reduced_density(sys: DenseSystem) -> np.ndarray:
    """Two-qubit reduced density matrix of the ground state."""
    if not sys.with_qubits:
        raise ValueError("ground_reduced_density needs a qubits+chain system")
    if sys.degenerate_ground:
        warnings.warn("ground state is degenerate; using the lowest-index eigenvector",
                      DegenerateGroundWarning, stacklevel=2)
    psi = sys.eigenvectors[:, 0].reshape(4, -1)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _chain_sum_op(op: str, n: int) -> sp.csr_matrix:
    return sum(site_operator(op, j, n) for j in range(n)).tocsr()


def frohlich_couplings_exact(spec: ChainSpec, mu: float, j_a: float, j_b: float,
                             chain: DenseSystem | None = None) -> EffectiveCouplings:
    """Second-order (Schrieffer-Wolff) couplings by direct summation.

    ``<s'|H_el|s> = 1/2 sum_{s'', m} <s'0|H_I|s''m><s''m|H_I|s0>
    [1/(E_s0 - E_s''m) + 1/(E_s'0 - E_s''m)]``, with chain eigenstates m.
    Terms whose denominator is below 1e-8 in magnitude with a nonzero
    numerator are dropped and counted in ``excluded_pairs``.
    """
    n = spec.n_sites
    chain = chain or chain_system(spec)
    e = chain.eigenvalues
    vecs = chain.eigenvectors
    ground = vecs[:, 0]
    a_m = vecs.T @ (_chain_sum_op("+", n) @ ground)  # <m|X+|0>
    b_m = vecs.T @ (_chain_sum_op("-", n) @ ground)  # <m|X-|0>
    omega_m = e - e[0]

    sz = np.diag([1.0, -1.0])
    ops = {
        "A+": np.kron(_SP, np.eye(2)), "A-": np.kron(_SM, np.eye(2)),
        "B+": np.kron(np.eye(2), _SP), "B-": np.kron(np.eye(2), _SM),
    }
    spin_e = 0.5 * mu * np.diag(np.kron(sz, np.eye(2)) + np.kron(np.eye(2), sz))
    g = {"A": 2.0 * j_a / np.sqrt(n), "B": 2.0 * j_b / np.sqrt(n)}
    # V[m] = <s''m|H_I|s0> as 4x4 in (s'', s)
    v = np.zeros((e.size, 4, 4))
    for q in "AB":
        v += g[q] * (ops[q + "-"][None] * a_m[:, None, None]
                     + ops[q + "+"][None] * b_m[:, None, None])
    # intermediate energy relative to E_0: spin_e[s''] + omega_m
    inter = spin_e[None, :] + omega_m[:, None]  # (m, s'')
    d_in = spin_e[None, None, :] - inter[:, :, None]   # E_s - E_s''m  (m, s'', s)
    numer = np.abs(v) > 1e-14
    small = np.abs(d_in) < 1e-8
    excluded = int(np.count_nonzero(small & numer))
    w_in = np.where(small, 0.0, 1.0 / np.where(small, 1.0, d_in))
    # H[s', s] = 1/2 sum_m sum_s'' V[m,s'',s'] V[m,s'',s] (w[m,s'',s] + w[m,s'',s'])
    h_el = 0.5 * (np.einsum("mka,mkb,mkb->ab", v, v, w_in)
                  + np.einsum("mka,mkb,mka->ab", v, v, w_in))
    h = np.diag(spin_e) + h_el
    return _project(h, excluded)


def frohlich_couplings_full_basis(spec: ChainSpec, mu: float, j_a: float, j_b: float) -> EffectiveCouplings:
    """Same quantity evaluated in the product eigenbasis of ``H_C + H_E``.

    Builds the generator ``S`` with ``<m|S|n> = <m|H_I|n>/(E_n - E_m)`` on the
    whole 2^(N+2) space and projects ``H_C + 1/2 [H_I, S]`` onto the chain
    ground state. Independent of :func:`frohlich_couplings_exact` apart
    from the chain diagonalization.
    """
    n = spec.n_sites
    if n > MAX_CORRELATION_SITES:
        raise ValueError(f"full-basis Frohlich sum refused for N={n} > {MAX_CORRELATION_SITES}")
    chain = chain_system(spec)
    nf = n + 2
    h_c = 0.5 * mu * (site_operator("z", 0, nf) + site_operator("z", 1, nf)).toarray()
    h_i = np.zeros((2**nf, 2**nf))
    for q, ja in ((0, j_a), (1, j_b)):
        gq = 2.0 * ja / np.sqrt(n)
        for j in range(n):
            h_i += gq * (site_operator("+", 2 + j, nf) @ site_operator("-", q, nf)
                         + site_operator("-", 2 + j, nf) @ site_operator("+", q, nf)).toarray()
    basis = np.kron(np.eye(4), chain.eigenvectors)
    energies = np.diag(h_c)[::2 ** n].repeat(2**n) + np.tile(chain.eigenvalues, 4)
    hi = basis.T @ h_i @ basis
    de = energies[None, :] - energies[:, None]  # E_n - E_m
    small = np.abs(de) < 1e-8
    s = np.where(small, 0.0, hi / np.where(small, 1.0, de))
    comm = 0.5 * (hi @ s - s @ hi)
    idx = np.arange(4) * 2**n  # (spin, chain ground)
    h = np.diag(energies[idx] - chain.eigenvalues[0]) + comm[np.ix_(idx, idx)]
    excluded = int(np.count_nonzero(small & (np.abs(hi) > 1e-14)))
    return _project(h, excluded)


def _project(h: np.ndarray, excluded: int) -> EffectiveCouplings:
    sz = np.diag([1.0, -1.0])
    mu_a = 2.0 * np.trace(h @ np.kron(sz, np.eye(2))).real / 4.0
    mu_b = 2.0 * np.trace(h @ np.kron(np.eye(2), sz)).real / 4.0
    g1 = 0.5 * (h[1, 2] + h[2, 1])
    g2 = 0.5 * (h[0, 3] + h[3, 0])
    herm = float(np.max(np.abs(h - h.conj().T)))
    return EffectiveCouplings(float(mu_a), float(mu_b), float(np.real(g1)), float(np.real(g2)),
                              residual_imag=herm, excluded_pairs=excluded)


def chain_correlation_exact(spec: ChainSpec, j: int, n: int, t, channel: str = "xx",
                            chain: DenseSystem | None = None):
    """``<0| e^{iHt} s^a_j e^{-iHt} s^b_{j+n} |0>`` by dense eigendecomposition."""
    big_n = spec.n_sites
    if big_n > MAX_CORRELATION_SITES:
        raise ValueError(f"dense correlation refused: N={big_n} > {MAX_CORRELATION_SITES}")
    if not (1 <= j <= big_n and 1 <= j + n <= big_n):
        raise ValueError(f"sites j={j}, j+n={j + n} outside 1..{big_n}")
    chain = chain or chain_system(spec)
    vecs, e = chain.eigenvectors, chain.eigenvalues
    left = (site_operator(channel[0], j - 1, big_n) @ vecs[:, 0]).conj() @ vecs  # <0|s^a|m>
    right = vecs.conj().T @ (site_operator(channel[1], j + n - 1, big_n) @ vecs[:, 0])  # <m|s^b|0>
    times = np.atleast_1d(np.asarray(t, dtype=float))
    phase = np.exp(1j * np.outer(times, e[0] - e))
    vals = phase @ (left * right)
    return complex(vals[0]) if np.ndim(t) == 0 else vals


def dsf_spectral_exact(spec: ChainSpec, channel: str, omegas, epsilon: float, k: float = 0.0,
                       chain: DenseSystem | None = None, anchor: int | None = None,
                       n_max: int | None = None):
    """Eigen-sum ``i sum_n e^{ikn} sum_m <0|s^a_j|m><m|s^b_{j+n}|0> / (E0-Em+w+i eps)``.

    With ``anchor=None`` the pair sum is site-averaged,
    ``(1/N) sum_{j,j'} e^{ik(j'-j)}``.
    """
    big_n = spec.n_sites
    if big_n > MAX_FULL_SITES:
        raise ValueError(f"spectral DSF refused: N={big_n} > {MAX_FULL_SITES}")
    chain = chain or chain_system(spec)
    vecs, e = chain.eigenvectors, chain.eigenvalues
    n_max = big_n - 1 if n_max is None else n_max
    anchors = range(1, big_n + 1) if anchor is None else [anchor]
    norm = big_n if anchor is None else 1
    left_rows = {}
    weights = np.zeros(e.size, dtype=np.complex128)
    for j in anchors:
        if j not in left_rows:
            left_rows[j] = (site_operator(channel[0], j - 1, big_n) @ vecs[:, 0]).conj() @ vecs
        for jp in range(1, big_n + 1):
            if abs(jp - j) > n_max:
                continue
            right = vecs.conj().T @ (site_operator(channel[1], jp - 1, big_n) @ vecs[:, 0])
            weights += np.exp(1j * k * (jp - j)) * left_rows[j] * right
    weights /= norm
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    vals = 1j * (weights[None, :] / (e[0] - e[None, :] + w[:, None] + 1j * epsilon)).sum(axis=1)
    return complex(vals[0]) if np.ndim(omegas) == 0 else vals


def heff_ground_density(c: EffectiveCouplings) -> np.ndarray:
    """Ground-state projector of ``build_heff(c)``."""
    h: TwoQubitHamiltonian = build_heff(c)
    _, vecs = np.linalg.eigh(h.matrix)
    v = vecs[:, 0]
    return np.outer(v, v.conj())
