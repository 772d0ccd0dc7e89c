"""Ground-state two-point functions of the open chain via Wick/Pfaffian.

With ``phi^+_j = c_j^+ + c_j`` and ``phi^-_j = c_j^+ - c_j``,

    sx_j = phi^+_1 phi^-_1 ... phi^+_{j-1} phi^-_{j-1} phi^+_j,

so ``<sx_j(t) sx_{j+n}>`` is the Pfaffian of the matrix of pairwise
contractions of a string of ``2(2j+n-1)`` operators. The y channels follow
from time derivatives of the x-x function:

    xy = (1/2 Omega) d/dt xx,   yx = -xy,   yy = -(1/2 Omega)^2 d^2/dt^2 xx.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import Boundary, ChainSpec, SpectralSolution, open_spectrum
from .pfaffian import pfaffian_batch

__all__ = [
    "ContractionTable",
    "CorrelationSeries",
    "contraction",
    "xx_correlation",
    "derive_xy_yy",
    "correlation_sweep",
    "averaged_correlations",
    "default_anchor",
    "time_grid",
    "CHANNELS",
]

CHANNELS = ("xx", "xy", "yx", "yy")
_KINDS = ("++", "+-", "-+", "--")


def time_grid(dt: float, t_max: float) -> np.ndarray:
    """Uniform grid ``0, dt, ..., t_max`` (t_max rounded to a whole step)."""
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    count = int(round(t_max / dt)) + 1
    return dt * np.arange(count)


class ContractionTable:
    """Elementary contractions of an open chain's ground state.

    ``<phi^a_j(t) phi^b_m>`` for ``a, b in {+, -}`` are

        ++ :  sum_p Phi_pj Phi_pm e^{-i L_p t}
        +- :  sum_p Phi_pj Psi_pm e^{-i L_p t}
        -+ : -sum_p Psi_pj Phi_pm e^{-i L_p t}
        -- : -sum_p Psi_pj Psi_pm e^{-i L_p t}
    """

    def __init__(self, sol: SpectralSolution):
        self.sol = sol
        self.n_sites = sol.phi.shape[0]
        self.equal_time = self.at(np.zeros(1))[:, 0]
        self.equal_time.setflags(write=False)
        self._cache_key = None
        self._cache = None

    def cached_at(self, times: np.ndarray) -> np.ndarray:
        """``at(times)``, memoised for the most recent grid."""
        key = (times.size, float(times[0]), float(times[-1]))
        if self._cache_key != key or not np.array_equal(self._cache[1], times):
            self._cache = (self.at(times), times.copy())
            self._cache_key = key
        return self._cache[0]

    def at(self, times) -> np.ndarray:
        """Contractions at each time, shape ``(4, T, N, N)`` in ``_KINDS`` order."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        phase = np.exp(-1j * np.outer(t, self.sol.energies))  # (T, P)
        phi, psi = self.sol.phi, self.sol.psi
        out = np.empty((4, t.size, self.n_sites, self.n_sites), dtype=np.complex128)
        for idx, (left, right, sign) in enumerate(
            ((phi, phi, 1.0), (phi, psi, 1.0), (psi, phi, -1.0), (psi, psi, -1.0))
        ):
            out[idx] = sign * np.einsum("pj,tp,pm->tjm", left, phase, right, optimize=True)
        return out


def contraction(kind: str, j: int, m: int, t: float, table: ContractionTable) -> complex:
    """Single contraction ``<phi^a_j(t) phi^b_m>`` with 1-based sites."""
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    n = table.n_sites
    if not (1 <= j <= n and 1 <= m <= n):
        raise ValueError(f"sites ({j}, {m}) outside 1..{n}")
    return complex(table.at([t])[_KINDS.index(kind), 0, j - 1, m - 1])


def _string_ops(site: int) -> tuple[np.ndarray, np.ndarray]:
    """(kind index 0/1 for +/-, 0-based site) of the string for sx_site."""
    kinds = [0, 1] * (site - 1) + [0]
    sites = [s for s in range(site - 1) for _ in (0, 1)] + [site - 1]
    return np.array(kinds), np.array(sites)


def _contraction_block(g: np.ndarray, ka, sa, kb, sb) -> np.ndarray:
    """Gather ``g[kind(a,b), ..., site_a, site_b]`` for operator lists a, b.

    ``g`` has shape ``(4, T, N, N)``; the result is ``(T, len(a), len(b))``.
    """
    kind = 2 * ka[:, None] + kb[None, :]
    return g[kind, :, sa[:, None], sb[None, :]].transpose(2, 0, 1)


def skew_stack(j: int, n: int, times, table: ContractionTable) -> np.ndarray:
    """Assemble the Wick matrices for ``<sx_j(t) sx_{j+n}>`` at every time."""
    ka, sa = _string_ops(j)
    kb, sb = _string_ops(j + n)
    g0 = table.equal_time[:, None]
    gt = table.cached_at(np.asarray(times, dtype=float))
    na, nb = ka.size, kb.size
    dim = na + nb
    stack = np.zeros((gt.shape[1], dim, dim), dtype=np.complex128)
    aa = np.triu(_contraction_block(g0, ka, sa, ka, sa)[0], 1)
    bb = np.triu(_contraction_block(g0, kb, sb, kb, sb)[0], 1)
    ab = _contraction_block(gt, ka, sa, kb, sb)
    stack[:, :na, :na] = aa - aa.T
    stack[:, na:, na:] = bb - bb.T
    stack[:, :na, na:] = ab
    stack[:, na:, :na] = -ab.transpose(0, 2, 1)
    return stack


def xx_correlation(j: int, n: int, t, table: ContractionTable):
    """``<sx_j(t) sx_{j+n}>`` for scalar or array ``t``.

    ``n = 0`` is the autocorrelation, equal to 1 only at ``t = 0``.
    Negative ``n`` uses the reflection symmetry of the open chain,
    ``<sx_j(t) sx_{j-|n|}> = <sx_{j'}(t) sx_{j'+|n|}>`` with ``j' = N+1-j``.
    """
    big_n = table.n_sites
    if not (1 <= j <= big_n and 1 <= j + n <= big_n):
        raise ValueError(f"sites j={j}, j+n={j + n} outside 1..{big_n}")
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if n < 0:
        j, n = big_n + 1 - j, -n
    vals = pfaffian_batch(skew_stack(j, n, times, table))
    return complex(vals[0]) if scalar else vals


@dataclass
class CorrelationSeries:
    """Correlation functions of one channel on a uniform time grid.

    ``values[n]`` holds ``<s^a_j(t) s^b_{j+n}>`` at ``t = dt * arange(count)``.
    ``anchor`` is the site j, or ``None`` for site-averaged series
    ``(1/N) sum_j <s^a_j(t) s^b_{j+n}>``.
    """

    channel: str
    dt: float
    count: int
    values: dict[int, np.ndarray] = field(default_factory=dict)
    anchor: int | None = None

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.count)

    @property
    def separations(self) -> list[int]:
        return sorted(self.values)


def fd_weights(offsets, order: int) -> np.ndarray:
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.size
    vander = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def _derivative(y: np.ndarray, h: float, order: int) -> np.ndarray:
    """4th-order accurate derivative along the last axis of a uniform grid."""
    m = y.shape[-1]
    width = 5 if order == 1 else 6
    out = np.empty_like(y)
    central = fd_weights(np.arange(-2, 3), order)
    out[..., 2:m - 2] = sum(w * y[..., 2 + k:m - 2 + k] for k, w in zip(range(-2, 3), central))
    for i in (0, 1):
        w = fd_weights(np.arange(width) - i, order)
        out[..., i] = y[..., :width] @ w
        w = fd_weights(np.arange(width) - (width - 1 - i), order)
        out[..., m - 1 - i] = y[..., m - width:] @ w
    return out / h**order


def derive_xy_yy(xx: CorrelationSeries, omega: float):
    """Return ``(xy, yx, yy)`` series derived from ``xx`` by finite differences."""
    if xx.count < 7:
        raise ValueError(f"time grid too short for derivatives: {xx.count} < 7 points")
    if xx.channel != "xx":
        raise ValueError(f"expected an xx series, got {xx.channel}")
    seps = xx.separations
    data = np.array([xx.values[n] for n in seps])
    d1 = _derivative(data, xx.dt, 1) / (2.0 * omega)
    d2 = -_derivative(data, xx.dt, 2) / (2.0 * omega) ** 2

    def make(channel, arr):
        return CorrelationSeries(channel, xx.dt, xx.count,
                                 {n: arr[i] for i, n in enumerate(seps)}, xx.anchor)

    return make("xy", d1), make("yx", -d1), make("yy", d2)


def default_anchor(n_sites: int, n: int = 0) -> int:
    """Anchor placing the pair (j, j+n) in the middle of the chain."""
    return (n_sites - n) // 2 + 1


def _open_table(spec: ChainSpec) -> ContractionTable:
    if spec.boundary is not Boundary.OPEN:
        raise ValueError("Pfaffian correlations are implemented for open chains only")
    return ContractionTable(open_spectrum(spec))


def correlation_sweep(spec: ChainSpec, j: int, n_list, times) -> dict[str, CorrelationSeries]:
    """All four channels for anchor ``j`` and separations ``n_list``."""
    times = np.asarray(times, dtype=float)
    dt = _grid_step(times)
    table = _open_table(spec)
    xx = CorrelationSeries("xx", dt, times.size, anchor=j)
    for n in sorted(set(int(n) for n in n_list)):
        xx.values[n] = xx_correlation(j, n, times, table)
    xy, yx, yy = derive_xy_yy(xx, spec.field)
    return {"xx": xx, "xy": xy, "yx": yx, "yy": yy}


def averaged_correlations(spec: ChainSpec, times, n_max: int | None = None) -> dict[str, CorrelationSeries]:
    """Site-averaged series ``(1/N) sum_j <s^a_j(t) s^b_{j+n}>``, ``|n| <= n_max``.

    Pairs with ``j + n`` outside the chain contribute nothing. Negative
    separations equal positive ones by reflection symmetry.
    """
    times = np.asarray(times, dtype=float)
    dt = _grid_step(times)
    big_n = spec.n_sites
    n_max = big_n - 1 if n_max is None else min(int(n_max), big_n - 1)
    table = _open_table(spec)
    xx = CorrelationSeries("xx", dt, times.size, anchor=None)
    for n in range(n_max + 1):
        acc = np.zeros(times.size, dtype=np.complex128)
        for j in range(1, big_n - n + 1):
            acc += xx_correlation(j, n, times, table)
        xx.values[n] = acc / big_n
        if n:
            xx.values[-n] = xx.values[n]
    xy, yx, yy = derive_xy_yy(xx, spec.field)
    return {"xx": xx, "xy": xy, "yx": yx, "yy": yy}


def _grid_step(times: np.ndarray) -> float:
    if times.ndim != 1 or times.size < 2 or times[0] != 0.0:
        raise ValueError("time grid must be 1-d, start at 0 and have >= 2 points")
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform and increasing")
    return dt
