"""Parameter containers shared by the physics modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class PUParams:
    """Fourth-order (two-frequency degenerate) oscillator parameters.

    omega_cap is the single frequency scale Omega: the classical equation of
    motion is q'''' = Omega^4 q, with solution rates {+-i*Omega, +-Omega}.
    """

    omega_cap: float
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_cap) and self.omega_cap > 0):
            raise ConfigError(f"omega_cap must be finite and > 0, got {self.omega_cap}")
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ConfigError(f"hbar must be finite and > 0, got {self.hbar}")


@dataclass(frozen=True)
class NonlocalParams:
    """Delay-oscillator parameters: base frequency omega and delay T >= 0.

    The characteristic function of the equation of motion
    q''(t) + (omega^2/2) (q(t-T) + q(t+T)) = 0 is
    Phi(u) = u + omega^2 cosh(T sqrt(u)), entire in u = z^2.
    """

    omega: float
    delay: float
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"omega must be finite and > 0, got {self.omega}")
        if not (math.isfinite(self.delay) and self.delay >= 0):
            raise ConfigError(f"delay must be finite and >= 0, got {self.delay}")
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ConfigError(f"hbar must be finite and > 0, got {self.hbar}")
