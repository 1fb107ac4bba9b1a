"""Rayleigh block-fading link from the base station to the device.

Capacity is ``B log2(1 + psi * u / ((r / r0)**beta * (upsilon + 1)))`` with
``u = |h|**2 ~ Exp(1)`` held fixed over one delivery window of length ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BITS_PER_MBIT",
    "ChannelParams",
    "db_to_linear",
    "capacity",
    "deliverable_quality",
    "threshold_k",
    "threshold_l",
    "sample_channel_power",
]

BITS_PER_MBIT = 1e6
_LN2 = math.log(2.0)


def db_to_linear(db):
    return _scalar_or_array(10.0 ** (np.asarray(db, dtype=np.float64) / 10.0))


@dataclass(frozen=True)
class ChannelParams:
    """Link parameters in linear units.

    psi : transmit SNR.  upsilon : interference-to-noise ratio.
    B : bandwidth in Hz.  beta : path-loss exponent.
    r0 : path-loss reference distance in metres.
    """

    psi: float
    upsilon: float
    B: float
    beta: float = 3.0
    r0: float = 1.0

    def __post_init__(self):
        for name in ("psi", "upsilon", "B", "beta", "r0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.psi > 0:
            raise ValueError(f"psi must be positive, got {self.psi}")
        if not self.upsilon >= 0:
            raise ValueError(f"upsilon must be non-negative, got {self.upsilon}")
        if not self.B > 0:
            raise ValueError(f"bandwidth must be positive, got {self.B}")
        if not self.beta > 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.beta}")
        if not self.r0 > 0:
            raise ValueError(f"reference distance must be positive, got {self.r0}")

    @classmethod
    def from_db(cls, psi_db=25.0, upsilon_db=5.0, bandwidth_mhz=5.0, beta=3.0, r0_m=1.0):
        return cls(
            psi=db_to_linear(psi_db),
            upsilon=db_to_linear(upsilon_db),
            B=float(bandwidth_mhz) * 1e6,
            beta=beta,
            r0=r0_m,
        )

    @property
    def snr_scale(self):
        """Effective SNR at the reference distance, ``psi / (upsilon + 1)``."""
        return self.psi / (self.upsilon + 1.0)

    def path_loss(self, r):
        """Inverse channel gain ``(r / r0)**beta``."""
        return (np.asarray(r, dtype=np.float64) / self.r0) ** self.beta

    def rate_scale(self, lib):
        """Mbps of quality delivered per bit/s/Hz of spectral efficiency."""
        return self.B * lib.T / (lib.A * BITS_PER_MBIT)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(~np.isfinite(alpha)) or np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("alpha must lie in [0, 1]")
    return alpha


def capacity(u, r, params):
    """Shannon capacity in bit/s for channel power ``u`` at distance ``r``."""
    u = np.asarray(u, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise ValueError("distance must be positive")
    if np.any(u < 0):
        raise ValueError("channel power must be non-negative")
    gain = params.snr_scale * u / params.path_loss(r)
    return _scalar_or_array(params.B * np.log1p(gain) / _LN2)


def deliverable_quality(u, r, lib, params):
    """Quality the base station can push within the deadline, ``C T / A`` in Mbps."""
    return _scalar_or_array(np.asarray(capacity(u, r, params)) * lib.T / (lib.A * BITS_PER_MBIT))


def threshold_l(alpha, lib, params):
    """Distance-free outage threshold ``l(alpha)``.

    ``u >= l(alpha) * (r / r0)**beta`` is exactly the event that the
    uncached remainder arrives at full quality ``q_max``.
    """
    alpha = _check_alpha(alpha)
    exponent = lib.A * lib.q_max * (1.0 - alpha) * BITS_PER_MBIT / (lib.T * params.B)
    return _scalar_or_array(np.expm1(exponent * _LN2) / params.snr_scale)


def threshold_k(alpha, r, lib, params):
    """Channel-power threshold ``k(alpha) = l(alpha) * (r / r0)**beta`` at distance ``r``."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise ValueError("distance must be positive")
    return _scalar_or_array(np.asarray(threshold_l(alpha, lib, params)) * params.path_loss(r))


def sample_channel_power(rng, size=None):
    """Draw Rayleigh fading power ``|h|**2 ~ Exp(1)`` from ``rng``.

    ``rng`` is a :class:`numpy.random.Generator`; there is no module-level
    random state.
    """
    return rng.standard_exponential(size)
