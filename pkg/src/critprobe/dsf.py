"""Dynamical structure factors from correlation series.

    S^ab(k, w) = sum_n e^{ikn} int_0^T C_n(t) e^{(iw - eps) t} dt

with trapezoidal quadrature plus the leading Euler-Maclaurin endpoint
term ``-(h^2/12) (g'(T) - g'(0))``; ``eps`` replaces the infinitesimal damping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .correlations import CorrelationSeries, fd_weights

__all__ = ["TransformConfig", "DsfValue", "half_line_fourier", "dsf", "MissingSeparationError"]


class MissingSeparationError(KeyError):
    pass


@dataclass(frozen=True)
class TransformConfig:
    """Broadening, horizon, step and maximum separation of the transform.

    ``band_top`` (optional) enables the phase-resolution check
    ``dt < pi / (2 band_top)``.
    """

    epsilon: float = 0.15
    t_max: float = 40.0
    dt: float = 0.05
    n_max: int | None = None
    band_top: float | None = None
    endpoint_correction: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (self.t_max > 0 and self.dt > 0):
            raise ValueError("t_max and dt must be positive")
        if self.epsilon * self.t_max < 5.0 - 1e-12:
            raise ValueError(f"epsilon*t_max = {self.epsilon * self.t_max:.3g} < 5: "
                             "truncated tail not suppressed")
        if self.band_top is not None and not self.dt < np.pi / (2.0 * self.band_top):
            raise ValueError(f"dt = {self.dt} does not resolve band top {self.band_top}")

    @classmethod
    def scaled(cls, gamma: float, **kw) -> "TransformConfig":
        """Defaults in units of the field: eps = 0.15 G, T = 40/G, dt = 0.05/G."""
        base = dict(epsilon=0.15 * gamma, t_max=40.0 / gamma, dt=0.05 / gamma)
        base.update(kw)
        return cls(**base)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(int(round(self.t_max / self.dt)) + 1)


@dataclass(frozen=True)
class DsfValue:
    k: float
    omega: float
    value: complex


def _weights(count: int, dt: float) -> np.ndarray:
    w = np.full(count, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def half_line_fourier(series, omega, config: TransformConfig):
    """Trapezoidal ``int_0^T C(t) e^{(i w - eps) t} dt`` for scalar or array ``omega``.

    ``series`` is sampled at ``config.dt * arange(len(series))``; its span
    must reach ``config.t_max``.
    """
    c = np.asarray(series, dtype=np.complex128)
    count = int(round(config.t_max / config.dt)) + 1
    if c.ndim != 1 or c.size < count:
        raise ValueError(f"series has {c.size} samples, grid to t_max needs {count}")
    c = c[:count]
    t = config.dt * np.arange(count)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    z = 1j * w[:, None] - config.epsilon
    kernel = np.exp(z * t[None, :])
    vals = kernel @ (c * _weights(count, config.dt))
    if config.endpoint_correction and count >= 5:
        d0 = fd_weights(np.arange(5), 1) / config.dt
        d1 = fd_weights(np.arange(-4, 1), 1) / config.dt
        g_start = kernel[:, :5] * c[None, :5]
        g_end = kernel[:, -5:] * c[None, -5:]
        vals = vals - config.dt**2 / 12.0 * (g_end @ d1 - g_start @ d0)
    return complex(vals[0]) if np.ndim(omega) == 0 else vals


def dsf(channel: str, k: float, omega, correlations: Mapping[str, CorrelationSeries],
        config: TransformConfig):
    """``sum_{|n| <= n_max} e^{ikn} * half_line_fourier(C_n)``.

    ``correlations`` maps channel names to series; ``n_max`` defaults to
    the largest separation with both signs present.
    """
    series = correlations[channel]
    if abs(series.dt - config.dt) > 1e-12 * config.dt:
        raise ValueError(f"series step {series.dt} differs from config dt {config.dt}")
    n_max = config.n_max
    if n_max is None:
        n_max = max(n for n in series.values if -n in series.values)
    missing = [n for n in range(-n_max, n_max + 1) if n not in series.values]
    if missing:
        raise MissingSeparationError(f"{channel}: separations {missing} missing for n_max={n_max}")
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    total = np.zeros(w.size, dtype=np.complex128)
    for n in range(-n_max, n_max + 1):
        total += np.exp(1j * k * n) * half_line_fourier(series.values[n], w, config)
    if not np.all(np.isfinite(total)):
        raise FloatingPointError(f"non-finite DSF for channel {channel}")
    return complex(total[0]) if np.ndim(omega) == 0 else total
