"""Quadratic-phase propagators, closed and discretized.

Everything here lives in one closed algebra: kernels of the form

    K(x, y) = P exp{(i/hbar) (a x^2 + c y^2 + b x y)}

with complex P, a, b, c.  Composing two of them over the shared endpoint
is a single Gaussian integral, so a Trotter chain of any length folds
analytically, with no oscillatory quadrature anywhere.  The closed-form
kernels for the free particle, the trigonometric (bounded) oscillator,
and the hyperbolic (inverted) oscillator are all instances, and evaluate
through the same dataclass.

Two diagnostics build on the kernels.  spectral_identity compares the
windowed Fourier transform of the return amplitude K(0, 0; t) against
the pointwise spectral sum over continuum eigenfunctions, which checks
the eigenfunction normalization end to end.  euclidean_pitfall continues
the return amplitude to imaginary time and reports, with a structured
verdict, why the periodicity it finds for the inverted oscillator means
no ground-state energy can be read off, while the bounded-oscillator
control produces a clean exponential decay.
"""

import cmath
import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import (
    CausticError,
    ConfigError,
    FresnelError,
    TailDominanceWarning,
)
from .params import PUParams
from .special import inverted_eigenfunction

# caustic / degenerate-time rejection scale for the closed forms
_CAUSTIC_TOL = 1e-12


def _check_omega_hbar(omega, hbar):
    if omega < 0:
        raise ConfigError("omega must be nonnegative")
    if hbar <= 0:
        raise ConfigError("hbar must be positive")


@dataclass(frozen=True)
class QuadraticKernel:
    """Gaussian kernel P exp{(i/hbar)(xx x^2 + yy y^2 + xy x y)}.

    Closed under composition: integrating out the shared endpoint of two
    such kernels yields a third, so long as the combined quadratic phase
    is Fresnel integrable (nonnegative imaginary part after the standard
    i-epsilon regularization).  Composition raises FresnelError when the
    intermediate Gaussian would diverge instead.
    """

    coeff_xx: complex
    coeff_yy: complex
    coeff_xy: complex
    prefactor: complex
    hbar: float = 1.0

    def evaluate(self, x, y):
        phase = (self.coeff_xx * x * x + self.coeff_yy * y * y
                 + self.coeff_xy * x * y)
        return self.prefactor * cmath.exp(1j * phase / self.hbar)

    def after(self, inner):
        """Kernel for self applied after inner: integrates the midpoint.

        With self = K2(x, z) and inner = K1(z, y) the z Gaussian has
        quadratic coefficient A = yy2 + xx1 and the result picks up
        sqrt(i pi hbar / A) plus shifted quadratic coefficients.
        """
        if not isinstance(inner, QuadraticKernel):
            raise ConfigError("composition requires another QuadraticKernel")
        if self.hbar != inner.hbar:
            raise ConfigError("kernels quantized with different hbar")
        a = self.coeff_yy + inner.coeff_xx
        if abs(a) == 0.0:
            raise FresnelError("flat intermediate phase; composition diverges")
        if a.imag < -1e-15 * abs(a):
            raise FresnelError(
                f"intermediate Gaussian grows (Im A = {a.imag:.3e} < 0)"
            )
        hbar = self.hbar
        pref = self.prefactor * inner.prefactor * cmath.sqrt(
            1j * math.pi * hbar / a)
        return QuadraticKernel(
            coeff_xx=self.coeff_xx - self.coeff_xy ** 2 / (4 * a),
            coeff_yy=inner.coeff_yy - inner.coeff_xy ** 2 / (4 * a),
            coeff_xy=-self.coeff_xy * inner.coeff_xy / (2 * a),
            prefactor=pref,
            hbar=hbar,
        )


def _pref_time(t, hbar):
    # (1 - i sgn t) / (2 sqrt(pi hbar |t|))
    return (1 - 1j * math.copysign(1.0, t)) / (2 * math.sqrt(
        math.pi * hbar * abs(t)))


def free_kernel(t, hbar=1.0):
    """Free-particle kernel as a QuadraticKernel."""
    _check_omega_hbar(0.0, hbar)
    if t == 0:
        raise ConfigError("kernel undefined at t = 0")
    return QuadraticKernel(
        coeff_xx=0.5 / t,
        coeff_yy=0.5 / t,
        coeff_xy=-1.0 / t,
        prefactor=_pref_time(t, hbar),
        hbar=hbar,
    )


def inverted_kernel(t, omega, hbar=1.0):
    """Hyperbolic-potential kernel; reduces to the free one as omega -> 0.

    The quadratic phase is real for real arguments, so the modulus of the
    kernel never depends on position; all position dependence sits in the
    phase.
    """
    _check_omega_hbar(omega, hbar)
    if t == 0:
        raise ConfigError("kernel undefined at t = 0")
    if omega == 0.0:
        return free_kernel(t, hbar)
    w = omega * t
    sh, ch = math.sinh(w), math.cosh(w)
    pref = _pref_time(t, hbar) * math.sqrt(w / sh)
    g = omega / (2 * sh)
    return QuadraticKernel(
        coeff_xx=g * ch,
        coeff_yy=g * ch,
        coeff_xy=-2 * g,
        prefactor=pref,
        hbar=hbar,
    )


def harmonic_kernel(t, omega, hbar=1.0):
    """Trigonometric-potential kernel; rejects focusing times.

    Branch convention: the square root of w / sin(w) is taken on the
    principal branch, which matches the omega -> 0 free limit and the
    formal omega -> i omega continuation of the hyperbolic kernel.
    """
    _check_omega_hbar(omega, hbar)
    if t == 0:
        raise ConfigError("kernel undefined at t = 0")
    if omega == 0.0:
        return free_kernel(t, hbar)
    w = omega * t
    if abs(math.remainder(w, math.pi)) <= _CAUSTIC_TOL * max(1.0, abs(w)):
        raise CausticError(
            f"omega t = {w:.6g} sits on a focusing time (multiple of pi)"
        )
    sn, cs = math.sin(w), math.cos(w)
    pref = _pref_time(t, hbar) * cmath.sqrt(w / sn)
    g = omega / (2 * sn)
    return QuadraticKernel(
        coeff_xx=g * cs,
        coeff_yy=g * cs,
        coeff_xy=-2 * g,
        prefactor=pref,
        hbar=hbar,
    )


def inverted_propagator(x, y, t, omega, hbar=1.0):
    """Closed-form amplitude <x| e^{-i H t / hbar} |y> for the inverted
    quadratic potential."""
    return inverted_kernel(t, omega, hbar).evaluate(x, y)


def harmonic_propagator(x, y, t, omega, hbar=1.0):
    """Closed-form oscillator amplitude away from focusing times."""
    return harmonic_kernel(t, omega, hbar).evaluate(x, y)


def free_propagator(x, y, t, hbar=1.0):
    return free_kernel(t, hbar).evaluate(x, y)


def pu_propagator(x1p, x2p, x1, x2, t, params: PUParams):
    """Product amplitude for the two decoupled degrees of freedom.

    The bounded coordinate propagates with the trigonometric kernel, the
    unbounded one with the hyperbolic kernel run backwards in time; the
    relative time reversal implements the opposite sign of the second
    decoupled Hamiltonian and is what keeps the product evolution
    unitary in the two-coordinate norm.
    """
    kb = harmonic_kernel(t, params.omega_cap, params.hbar)
    ku = inverted_kernel(-t, params.omega_cap, params.hbar)
    return kb.evaluate(x1p, x1) * ku.evaluate(x2p, x2)


def trotter_step(dt, omega, hbar=1.0, potential="inverted"):
    """Single midpoint-split short-time kernel.

    Kinetic phase (x - y)^2 / (2 dt) plus the potential evaluated at the
    midpoint, with sign +omega^2 for the inverted well and -omega^2 for
    the bounded one.
    """
    _check_omega_hbar(omega, hbar)
    if dt == 0:
        raise ConfigError("kernel undefined at t = 0")
    if potential == "inverted":
        s = 1.0
    elif potential == "harmonic":
        s = -1.0
    else:
        raise ConfigError("potential must be 'inverted' or 'harmonic'")
    w2dt = s * omega * omega * dt
    return QuadraticKernel(
        coeff_xx=0.5 / dt + w2dt / 8,
        coeff_yy=0.5 / dt + w2dt / 8,
        coeff_xy=-1.0 / dt + w2dt / 4,
        prefactor=_pref_time(dt, hbar),
        hbar=hbar,
    )


def trotter_kernel(t, omega, hbar=1.0, N=64, potential="inverted"):
    """N-step Trotter kernel folded analytically in the Gaussian algebra."""
    if N < 2:
        raise ConfigError("need at least 2 Trotter steps")
    step = trotter_step(t / N, omega, hbar, potential)
    total = step
    for _ in range(N - 1):
        total = step.after(total)
    return total


def trotter_propagator(x, y, t, omega, hbar=1.0, N=64, potential="inverted"):
    """Discretized amplitude; converges to the closed form as N grows.

    Midpoint splitting makes the step error O(dt^3), so the folded chain
    approaches the closed-form kernel at second order in 1/N.
    """
    return trotter_kernel(t, omega, hbar, N, potential).evaluate(x, y)


def _return_amplitude(t, omega, hbar):
    # K(0, 0; t) for the inverted kernel, vectorized over positive t
    t = np.asarray(t, dtype=float)
    return (1 - 1j) / 2 * np.sqrt(omega / (math.pi * hbar
                                           * np.sinh(omega * t)))


def spectral_identity(E_tilde, t_max, params: PUParams, window=0.2,
                      n_grid=16001):
    """Fourier transform of the return amplitude vs the spectral sum.

    lhs: integral over t in [-t_max, t_max] of e^{i E t / hbar} K(0,0;t)
    with a cosine taper over the trailing `window` fraction of the range.
    The integrand's 1/sqrt(|t|) singularity is regularized exactly by
    integrating in s = sqrt(t); the negative-time half is the complex
    conjugate of the positive half, so only one side is computed.

    rhs: 2 pi / omega times the sum over both eigenfunction branches of
    |psi_E(0)|^2.  Equality of lhs and rhs is the normalization check;
    both are returned so the caller sees the actual ratio.

    Emits TailDominanceWarning when the discarded |t| > t_max tail is
    estimated above 1% of the integral.
    """
    omega, hbar = params.omega_cap, params.hbar
    if t_max * omega < 20:
        raise ConfigError("t_max * omega >= 20 required for tail decay")
    if not (0 < window < 1):
        raise ConfigError("window fraction must lie in (0, 1)")
    if n_grid % 2 == 0 or n_grid < 1001:
        raise ConfigError("n_grid must be odd and at least 1001")

    s = np.linspace(0.0, math.sqrt(t_max), n_grid)
    t = s * s
    taper = np.ones_like(t)
    edge = t > (1 - window) * t_max
    u = (t[edge] - (1 - window) * t_max) / (window * t_max)
    taper[edge] = 0.5 * (1 + np.cos(math.pi * u))
    t_safe = t.copy()
    t_safe[0] = 1.0  # placeholder, overwritten by the s = 0 limit below
    integrand = 2 * s * taper * np.exp(1j * E_tilde * t / hbar) \
        * _return_amplitude(t_safe, omega, hbar)
    # 2 s K(0,0;s^2) has the finite limit (1-i)/sqrt(pi hbar) at s = 0
    integrand[0] = (1 - 1j) / math.sqrt(math.pi * hbar)
    half = complex(simpson(integrand, x=s))
    lhs = half + half.conjugate()

    tail = abs(_return_amplitude(t_max, omega, hbar)) * 2.0 / omega
    if tail > 0.01 * abs(lhs):
        warnings.warn(
            f"time-domain tail estimate {tail:.3e} exceeds 1% of |lhs|",
            TailDominanceWarning,
        )

    rhs = (2 * math.pi / omega) * sum(
        abs(inverted_eigenfunction(E_tilde, branch, 0.0, params)) ** 2
        for branch in (+1, -1)
    )
    return lhs, rhs


@dataclass(frozen=True)
class EuclideanVerdict:
    """Outcome of the imaginary-time continuation diagnostic."""

    periodic: bool
    period: float | None
    expected_period: float | None
    ground_energy_estimate: float | None
    message: str

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _detect_period(tau, values):
    # autocorrelation peak of the mean-removed, singularity-clipped signal
    good = np.isfinite(values)
    if good.sum() < 8:
        return None
    v = np.interp(tau, tau[good], values[good])
    v = np.minimum(v, np.quantile(v, 0.98))
    v = v - v.mean()
    ac = np.correlate(v, v, mode="full")[len(v) - 1:]
    if ac[0] <= 0:
        return None
    ac = ac / ac[0]
    # first interior local maximum above noise level, with a three-point
    # parabolic refinement of the peak position
    for k in range(2, len(ac) - 1):
        if ac[k] >= 0.2 and ac[k] >= ac[k - 1] and ac[k] > ac[k + 1]:
            denom = ac[k - 1] - 2 * ac[k] + ac[k + 1]
            shift = 0.0 if denom == 0 else \
                0.5 * (ac[k - 1] - ac[k + 1]) / denom
            dt = tau[1] - tau[0]
            return float((k + shift) * dt)
    return None


def euclidean_pitfall(tau_grid, omega, hbar=1.0, kind="inverted"):
    """Naive t -> -i tau continuation of the return amplitude.

    Returns (samples, verdict).  samples holds |K(0,0;-i tau)| on the
    grid with poles masked to NaN.  For the inverted well the modulus is
    periodic with period pi/omega, and the verdict explains that a
    periodic Euclidean amplitude admits no ground-energy readout: the
    would-be energies come out imaginary.  kind='harmonic' runs the
    bounded-oscillator control, whose monotone decay yields the ground
    energy from the log slope; kind='free' (or omega = 0) shows no
    periodicity either.
    """
    _check_omega_hbar(omega, hbar)
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or len(tau) < 16:
        raise ConfigError("need a 1-d grid with at least 16 points")
    if np.any(tau <= 0):
        raise ConfigError("tau must be positive")
    dt = np.diff(tau)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * dt[0]):
        raise ConfigError("period detection requires a uniform grid")
    if kind not in ("inverted", "harmonic", "free"):
        raise ConfigError("kind must be 'inverted', 'harmonic' or 'free'")
    if omega == 0.0:
        kind = "free"

    amp0 = math.sqrt(1.0 / (math.pi * hbar)) * math.sqrt(0.5)
    if kind == "inverted":
        s = np.sin(omega * tau)
        near_pole = np.abs(np.remainder(omega * tau + math.pi / 2,
                                        math.pi) - math.pi / 2) \
            <= 1e-9 * np.maximum(1.0, omega * tau)
        samples = np.where(
            near_pole, np.nan,
            amp0 * math.sqrt(omega) / np.sqrt(np.abs(s) + near_pole))
        period = _detect_period(tau, samples)
        expected = math.pi / omega
        # autocorrelation of the clipped singular signal carries a ~1%
        # systematic shift; accept within that or within grid resolution
        tol = max(3.0 * dt[0], 0.015 * expected)
        periodic = bool(period is not None
                        and abs(period - expected) <= tol)
        message = (
            "modulus of the continued amplitude repeats with period "
            "pi/omega; a periodic Euclidean amplitude means the would-be "
            "decay rates are imaginary, so no ground-state energy exists "
            "to extract for the unbounded-below well"
        )
        return samples, EuclideanVerdict(
            periodic=periodic,
            period=period,
            expected_period=expected,
            ground_energy_estimate=None,
            message=message,
        )

    if kind == "harmonic":
        samples = amp0 * math.sqrt(omega) / np.sqrt(np.sinh(omega * tau))
        half = tau >= tau[len(tau) // 2]
        slope = np.polyfit(tau[half], np.log(samples[half]), 1)[0]
        e0 = -hbar * slope
        return samples, EuclideanVerdict(
            periodic=False,
            period=None,
            expected_period=None,
            ground_energy_estimate=float(e0),
            message=(
                "monotone exponential decay; the log slope of the "
                "continued amplitude gives the ground-state energy"
            ),
        )

    samples = amp0 / np.sqrt(tau)
    return samples, EuclideanVerdict(
        periodic=False,
        period=_detect_period(tau, samples),
        expected_period=None,
        ground_energy_estimate=None,
        message="free-particle continuation: algebraic decay, no period",
    )
