"""Canonical mechanics of the degenerate fourth-order oscillator.

The Lagrangian L = (qddot^2 - Omega^4 q^2)/2 has the equation of motion
q'''' = Omega^4 q, with solution rates {+i*Omega, -i*Omega, +Omega, -Omega}.
The canonical variables are (q1, q2; Pi1, Pi2) = (q, qdot; -q''', qddot) and

    H = Pi1 q2 + Pi2^2/2 + (Omega^4/2) q1^2.

A linear canonical map splits H into a harmonic oscillator minus an inverted
oscillator, both at frequency Omega; the growth observable X is the phase-space
direction that the flow dilates at exactly +Omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, OverflowGuard
from .params import PUParams

__all__ = [
    "PhaseState",
    "DecoupledState",
    "ClassicalSolutionCoeffs",
    "pu_lagrangian",
    "ostrogradsky_state",
    "hamiltonian_pu",
    "canonical_flow",
    "integrate_flow",
    "Trajectory",
    "decouple",
    "decouple_inverse",
    "decouple_matrix",
    "hamiltonian_decoupled",
    "x_observable",
    "x_in_decoupled",
    "fit_log_slope",
]

# max exponent argument before exp() overflows double precision
_EXP_GUARD = 700.0


def _require_finite(name, *vals):
    for v in vals:
        if not math.isfinite(v):
            raise ConfigError(f"{name} components must be finite, got {v}")


@dataclass(frozen=True)
class PhaseState:
    """Point of the canonical phase space (q1, q2; Pi1, Pi2)."""

    q1: float
    q2: float
    pi1: float
    pi2: float

    def __post_init__(self):
        _require_finite("PhaseState", self.q1, self.q2, self.pi1, self.pi2)

    def as_array(self):
        return np.array([self.q1, self.q2, self.pi1, self.pi2])


@dataclass(frozen=True)
class DecoupledState:
    """Point of the decoupled phase space (X1, P1; X2, P2).

    Factor 1 carries the harmonic oscillator, factor 2 the inverted one.
    """

    x1: float
    p1: float
    x2: float
    p2: float

    def __post_init__(self):
        _require_finite("DecoupledState", self.x1, self.p1, self.x2, self.p2)

    def as_array(self):
        return np.array([self.x1, self.p1, self.x2, self.p2])


@dataclass(frozen=True)
class ClassicalSolutionCoeffs:
    """Exact-solution coefficients on the four rates {+-i*Omega, +-Omega}.

    q(t) = 2 Re[c_osc e^{i Omega t}] + c_grow e^{Omega t} + c_decay e^{-Omega t}.
    The conjugate oscillatory coefficient is implied, so q(t) is real by
    construction.
    """

    c_osc: complex
    c_grow: float
    c_decay: float

    @classmethod
    def from_initial_conditions(cls, q, qdot, qddot, qdddot, params: PUParams):
        """Project initial data onto the four exact rates."""
        w = params.omega_cap
        w2, w3 = w * w, w * w * w
        # spectral projections of the 4x4 companion system
        c_grow = (w3 * q + w2 * qdot + w * qddot + qdddot) / (4 * w3)
        c_decay = (w3 * q - w2 * qdot + w * qddot - qdddot) / (4 * w3)
        c_osc = (w3 * q - 1j * w2 * qdot - w * qddot + 1j * qdddot) / (4 * w3)
        return cls(c_osc=complex(c_osc), c_grow=float(c_grow), c_decay=float(c_decay))

    def q_derivatives(self, t, params: PUParams, order=3):
        """q(t) and its first `order` time derivatives, exactly."""
        w = params.omega_cap
        if abs(w * t) > _EXP_GUARD:
            raise OverflowGuard(f"Omega*t = {w * t:g} exceeds the exp() guard")
        out = []
        for k in range(order + 1):
            val = (
                2 * ((1j * w) ** k * self.c_osc * np.exp(1j * w * t)).real
                + w**k * self.c_grow * math.exp(w * t)
                + (-w) ** k * self.c_decay * math.exp(-w * t)
            )
            out.append(float(val))
        return out

    def phase_state(self, t, params: PUParams) -> PhaseState:
        q, qd, qdd, qddd = self.q_derivatives(t, params, order=3)
        return ostrogradsky_state(q, qd, qdd, qddd)


def pu_lagrangian(q, qddot, params: PUParams):
    """L(q, qddot) = (qddot^2 - Omega^4 q^2) / 2."""
    w = params.omega_cap
    return 0.5 * (np.asarray(qddot) ** 2 - w**4 * np.asarray(q) ** 2)


def ostrogradsky_state(q, qdot, qddot, qdddot) -> PhaseState:
    """Canonical variables from jet data: (q, qdot; -q''', qddot)."""
    return PhaseState(q1=float(q), q2=float(qdot), pi1=float(-qdddot), pi2=float(qddot))


def hamiltonian_pu(s: PhaseState, params: PUParams):
    """H = Pi1 q2 + Pi2^2/2 + (Omega^4/2) q1^2. Linear in Pi1: unbounded below."""
    w = params.omega_cap
    return s.pi1 * s.q2 + 0.5 * s.pi2**2 + 0.5 * w**4 * s.q1**2


def canonical_flow(s: PhaseState, params: PUParams):
    """Hamiltonian vector field (q1', q2', Pi1', Pi2')."""
    w = params.omega_cap
    return np.array([s.q2, s.pi2, -(w**4) * s.q1, -s.pi1])


@dataclass
class Trajectory:
    """Dense sampling of a canonical flow solution."""

    t: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    params: PUParams

    def energy(self):
        w = self.params.omega_cap
        return self.pi1 * self.q2 + 0.5 * self.pi2**2 + 0.5 * w**4 * self.q1**2

    def energy_term_scale(self):
        """Scale of the individual Hamiltonian terms (conditioning of H)."""
        w = self.params.omega_cap
        return (
            np.abs(self.pi1 * self.q2) + 0.5 * self.pi2**2 + 0.5 * w**4 * self.q1**2
        )

    def x_observable(self):
        w = self.params.omega_cap
        return self.pi1 - w * self.pi2 - w**3 * self.q1 - w**2 * self.q2

    def state(self, i) -> PhaseState:
        return PhaseState(self.q1[i], self.q2[i], self.pi1[i], self.pi2[i])


def integrate_flow(s0: PhaseState, params: PUParams, t_max, n_samples=2001,
                   rtol=1e-10, atol=1e-12) -> Trajectory:
    """Integrate the canonical flow with adaptive RK45 on [0, t_max]."""
    if not (math.isfinite(t_max) and t_max > 0):
        raise ConfigError(f"t_max must be finite and > 0, got {t_max}")
    if params.omega_cap * t_max > _EXP_GUARD:
        raise OverflowGuard("growing mode would overflow over this horizon")
    w = params.omega_cap
    w4 = w**4

    def rhs(_t, y):
        return [y[1], y[3], -w4 * y[0], -y[2]]

    t_eval = np.linspace(0.0, t_max, n_samples)
    sol = solve_ivp(rhs, (0.0, t_max), s0.as_array(), method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval, dense_output=False)
    if not sol.success:  # pragma: no cover - linear system, should not happen
        raise RuntimeError(f"integrator failed: {sol.message}")
    y = sol.y
    return Trajectory(t=sol.t, q1=y[0], q2=y[1], pi1=y[2], pi2=y[3], params=params)


# --- decoupling map ---------------------------------------------------------
#
# Old in terms of new:
#   q1  = (X1 + X2) / (sqrt2 W),   q2  = (P1 - P2) / (sqrt2 W),
#   Pi1 = W (P1 + P2) / sqrt2,     Pi2 = W (-X1 + X2) / sqrt2.
# Solved for the new variables (stored explicitly, not inverted numerically):
#   X1 = (W q1 - Pi2/W)/sqrt2,  X2 = (W q1 + Pi2/W)/sqrt2,
#   P1 = (Pi1/W + W q2)/sqrt2,  P2 = (Pi1/W - W q2)/sqrt2.


def decouple(s: PhaseState, params: PUParams) -> DecoupledState:
    """Canonical map to (harmonic oscillator) x (inverted oscillator) variables."""
    w = params.omega_cap
    r = 1.0 / math.sqrt(2.0)
    return DecoupledState(
        x1=r * (w * s.q1 - s.pi2 / w),
        p1=r * (s.pi1 / w + w * s.q2),
        x2=r * (w * s.q1 + s.pi2 / w),
        p2=r * (s.pi1 / w - w * s.q2),
    )


def decouple_inverse(d: DecoupledState, params: PUParams) -> PhaseState:
    """Inverse map, the transformation in its original (old-from-new) form."""
    w = params.omega_cap
    r = 1.0 / math.sqrt(2.0)
    return PhaseState(
        q1=r * (d.x1 + d.x2) / w,
        q2=r * (d.p1 - d.p2) / w,
        pi1=r * w * (d.p1 + d.p2),
        pi2=r * w * (-d.x1 + d.x2),
    )


def decouple_matrix(params: PUParams, inverse=False):
    """Matrix of the (linear) decoupling map on (q1, q2, Pi1, Pi2) -> (X1, P1, X2, P2)."""
    w = params.omega_cap
    r = 1.0 / math.sqrt(2.0)
    if inverse:
        return np.array([
            [r / w, 0, r / w, 0],
            [0, r / w, 0, -r / w],
            [0, r * w, 0, r * w],
            [-r * w, 0, r * w, 0],
        ])  # columns: X1, P1, X2, P2 -> rows q1, q2, Pi1, Pi2
    return np.array([
        [r * w, 0, 0, -r / w],
        [0, r * w, r / w, 0],
        [r * w, 0, 0, r / w],
        [0, -r * w, r / w, 0],
    ])  # rows: X1, P1, X2, P2


def hamiltonian_decoupled(d: DecoupledState, params: PUParams):
    """H = (P1^2/2 + (Omega^2/2) X1^2) - (P2^2/2 - (Omega^2/2) X2^2).

    Harmonic minus inverted oscillator, both with frequency parameter Omega.
    The potential coefficient is quadratic in Omega; that is what the
    decoupling map actually produces and what keeps the flow rates at
    {+-i*Omega, +-Omega}.
    """
    w = params.omega_cap
    h_osc = 0.5 * d.p1**2 + 0.5 * w**2 * d.x1**2
    h_inv = 0.5 * d.p2**2 - 0.5 * w**2 * d.x2**2
    return h_osc - h_inv


def x_observable(s: PhaseState, params: PUParams):
    """Growth observable X = Pi1 - W Pi2 - W^3 q1 - W^2 q2.

    Satisfies {X, H} = Omega X, so X(t) = X(0) e^{Omega t} along the flow.
    """
    w = params.omega_cap
    return s.pi1 - w * s.pi2 - w**3 * s.q1 - w**2 * s.q2


def x_in_decoupled(d: DecoupledState, params: PUParams):
    """Same observable in decoupled variables: sqrt2 * Omega * (P2 - Omega X2)."""
    w = params.omega_cap
    return math.sqrt(2.0) * w * (d.p2 - w * d.x2)


def fit_log_slope(t, values):
    """Least-squares slope of log|values| against t.

    Used to extract exponential growth rates; caller windows the data.
    """
    t = np.asarray(t, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v <= 0):
        raise ConfigError("log-slope fit needs strictly nonzero samples")
    slope, _intercept = np.polyfit(t, np.log(v), 1)
    return float(slope)
