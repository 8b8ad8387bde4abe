"""Hermite polynomials, parabolic cylinder functions, and exact eigenfunctions.

The parabolic cylinder evaluator accepts complex order and complex argument.
Every internal representation returns a value together with an error
estimate, and the dispatcher keeps whichever representation claims the
smallest error:

* a power series built from the two even/odd confluent-hypergeometric-type
  series, accumulated in extended precision (``np.clongdouble``); its
  estimate tracks the running peak of the even and odd partial sums, since
  the cancellation between those two pieces is what limits the result;
* the large-argument asymptotic expansion in the right half plane, truncated
  at its smallest term, with that term plus the conditioning of the
  exponential argument as the estimate;
* a convergent real-line quadrature, available for Re(order) < 0, covering
  the radii where the series has started cancelling but the asymptotic
  expansion has not yet converged;
* for orders the quadrature cannot reach, an upward order recurrence climbed
  from two quadrature-eligible base orders, with the error propagated
  through every step;
* reflection formulas mapping the left half plane onto arguments in the
  right half plane.

``Z_SWITCH`` is the series/asymptotic handover radius.  It was chosen
empirically by cross-validating both representations against a
high-precision reference (see ``scripts/calibrate_pcd_switch.py``); in a
band just above the switch both representations are evaluated and compared,
and representations that disagree while both claiming accuracy, or a best
estimate beyond 1e-6, raise :class:`AccuracyLoss` instead of returning bad
digits.  The evaluator is validated for |z| <= 50 and |nu| <= 50.  Larger
|z| is not rejected: the asymptotic branch only gains accuracy with |z| and
the guards stay active; the growth-observable scans rely on this for
arguments on the 45-degree ray out to |z| ~ 57.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import AccuracyLoss, ConfigError, OverflowGuard
from .params import PUParams

Z_SWITCH = 6.6
# width of the band above Z_SWITCH where series and asymptotic are
# cross-validated against each other on every call
CROSS_BAND = 0.8

_MAX_HERMITE = 200

# extended-precision constants; np.pi alone would cap the gamma prefactors
# at double accuracy, which the even/odd cancellation then amplifies
_PI_L = 4 * np.arctan(np.longdouble(1))
_LN2_L = np.log(np.longdouble(2))
_SQRT_2PI_L = np.sqrt(2 * _PI_L)

_EPS_EXT = float(np.finfo(np.longdouble).eps)

# Stirling series for log Gamma after shifting Re s >= 32; the Bernoulli
# tail B_24/(24*23*32^23) ~ 4e-33 is far below extended-precision roundoff.
# (A Spouge form was tried first and rejected: its alternating coefficient
# sum cancels internally and caps the result near 1e-13 regardless of the
# working precision, which the even/odd series cancellation then amplifies.)
_BERN_2N = np.array(
    [
        1 / np.longdouble(6),
        -1 / np.longdouble(30),
        1 / np.longdouble(42),
        -1 / np.longdouble(30),
        5 / np.longdouble(66),
        -691 / np.longdouble(2730),
        7 / np.longdouble(6),
        -3617 / np.longdouble(510),
        43867 / np.longdouble(798),
        -174611 / np.longdouble(330),
        854513 / np.longdouble(138),
        -236364091 / np.longdouble(2730),
    ]
)
_LN_2PI_L = np.log(2 * _PI_L)


def _gamma_ext_core(s):
    # Gamma(s) in extended precision for Re s >= 0.5
    m = int(max(0, math.ceil(32.0 - float(s.real))))
    t = s + m
    t2 = 1 / (t * t)
    acc = np.clongdouble(0)
    p = 1 / t
    for n in range(_BERN_2N.size):
        acc = acc + _BERN_2N[n] / ((2 * n + 2) * (2 * n + 1)) * p
        p = p * t2
    g = np.exp((t - 0.5) * np.log(t) - t + 0.5 * _LN_2PI_L + acc)
    for j in range(m):
        g = g / (s + j)
    return g


def _rgamma_ext(s):
    """1/Gamma(s) for complex s in extended precision; exact zero at poles."""
    if s.imag == 0 and s.real == round(s.real) and s.real <= 0:
        return np.clongdouble(0)
    if s.real >= 0.5:
        return 1 / _gamma_ext_core(s)
    # 1/Gamma(s) = sin(pi s) Gamma(1-s) / pi
    if abs(s.imag) * float(_PI_L) > 11000.0:
        raise OverflowGuard("reflection sine overflows extended range")
    return np.sin(_PI_L * s) * _gamma_ext_core(1 - s) / _PI_L


def hermite(n, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    Array-valued in x. n is capped at 200; values overflow float64 range
    well before that for large |x|, hence the guard.
    """
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ConfigError(f"Hermite index must be a nonnegative integer, got {n!r}")
    if n > _MAX_HERMITE:
        raise OverflowGuard(f"Hermite index {n} exceeds supported maximum {_MAX_HERMITE}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2 * x
    for k in range(1, n):
        h, h_prev = 2 * x * h - 2 * k * h_prev, h
    return h if h.ndim else float(h)


def _pcd_series(nu, z):
    """Power-series evaluation of D_nu(z); returns (value, relative error estimate).

    D_nu(z) = 2^{nu/2} e^{-z^2/4} [ sqrt(pi)/Gamma((1-nu)/2) M(-nu/2, 1/2, z^2/2)
                                    - sqrt(2 pi) z/Gamma(-nu/2) M((1-nu)/2, 3/2, z^2/2) ]

    The two Kummer sums are accumulated together in extended precision; the
    error estimate is the peak summand magnitude over the final magnitude
    times the extended-precision epsilon (cancellation model).
    """
    nu = np.clongdouble(nu)
    z = np.clongdouble(z)
    w = z * z / 2
    c_even = np.sqrt(_PI_L) * _rgamma_ext((1 - nu) / 2)
    c_odd = -_SQRT_2PI_L * z * _rgamma_ext(-nu / 2)

    a_e, a_o = -nu / 2, (1 - nu) / 2
    term_e = np.clongdouble(c_even)
    term_o = np.clongdouble(c_odd)
    sum_e = term_e
    sum_o = term_o
    # the error model needs the peak magnitude the two partial sums reach
    # before the even/odd cancellation collapses them
    peak = max(abs(sum_e), abs(sum_o))
    small_streak = 0
    n_used = 1
    for k in range(1000):
        term_e = term_e * w * (a_e + k) / ((0.5 + k) * (k + 1))
        term_o = term_o * w * (a_o + k) / ((1.5 + k) * (k + 1))
        sum_e = sum_e + term_e
        sum_o = sum_o + term_o
        peak = max(peak, abs(sum_e), abs(sum_o))
        n_used = k + 2
        total_mag = float(abs(sum_e + sum_o))
        if abs(term_e) + abs(term_o) <= 1e-26 * max(total_mag, 1e-290):
            small_streak += 1
            if small_streak >= 2:
                break
        else:
            small_streak = 0
    else:  # pragma: no cover - loop cap, unreachable in the supported region
        raise AccuracyLoss("power series failed to converge")

    total = sum_e + sum_o
    scale = np.exp((nu / 2) * _LN2_L - z * z / 4)
    value = scale * total
    mag = float(abs(total))
    est = float(peak) / mag * (16 + n_used) * 4 * _EPS_EXT if mag > 0 else math.inf
    return complex(value), est


def _pcd_asymptotic(nu, z):
    """Large-|z| expansion for Re z >= 0; returns (value, relative error estimate).

    D_nu(z) ~ e^{-z^2/4} z^nu sum_s (-1)^s (-nu)_{2s} / (s! 2^s z^{2s}),
    truncated at the smallest term, which also serves as the estimate.
    """
    nu = complex(nu)
    z = complex(z)
    zinv2 = 1.0 / (z * z)
    term = 1.0 + 0j
    total = term
    best = math.inf
    for s in range(200):
        nxt = term * (-(-nu + 2 * s) * (-nu + 2 * s + 1)) * zinv2 / (2 * (s + 1))
        if nxt == 0:  # terminating series: nu a nonnegative integer
            best = 0.0
            break
        if abs(nxt) >= abs(term):
            best = abs(nxt)
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            best = abs(term)
            break
    expo = -z * z / 4 + nu * np.log(z)
    if expo.real > 700.0:
        raise OverflowGuard("asymptotic prefactor exceeds float range")
    mag = abs(total)
    # second piece: conditioning of exp at a large argument
    est = 5 * best / mag + 4e-16 * (1 + abs(expo)) if mag > 0 else math.inf
    return np.exp(expo) * total, est


def _pcd_integral(nu, z):
    """Quadrature fallback for Re nu < 0; returns (value, relative error estimate).

    D_nu(z) = e^{-z^2/4}/Gamma(-nu) * 2 int_0^inf u^{-2nu-1} e^{-u^4/2 - z u^2} du
    (t = u^2 removes the endpoint singularity for the -1/2 - i eps family).
    Covers the band where neither the series nor the asymptotic expansion
    holds 1e-8 (moderate |z| with |Im nu| of a few); quadrature error is the
    estimate.
    """
    import warnings

    from scipy.integrate import quad

    a = -2 * nu - 1

    def f(u):
        if u == 0.0:
            return 2.0 + 0j if a == 0 else 0j
        return 2 * np.exp(a * np.log(u) - u**4 / 2 - z * u * u)

    u_max = 6.5
    kw = dict(limit=500, epsabs=1e-14, epsrel=1e-12)
    with warnings.catch_warnings():
        # roundoff warnings are expected in the hard corner; the inflated
        # error estimate below carries that information instead
        warnings.simplefilter("ignore")
        re, re_err = quad(lambda u: f(u).real, 0, u_max, **kw)
        im, im_err = quad(lambda u: f(u).imag, 0, u_max, **kw)
    raw = re + 1j * im
    if raw == 0:
        return 0j, math.inf
    value = np.exp(-z * z / 4) * complex(_rgamma_ext(np.clongdouble(-nu))) * raw
    # quad underreports on the oscillatory endpoint (u^{-2 i Im nu} rotates
    # ever faster as u -> 0), hence the safety factor
    est = 20 * (re_err + im_err) / abs(raw) + 1e-12
    return complex(value), est


_ACC_BAR = 1e-6


def _audit_pair(pairs, nu, z):
    # two independent representations both claiming accuracy must agree
    good = [(v, e) for v, e in pairs if e <= 1e-7]
    for i in range(len(good)):
        for j in range(i + 1, len(good)):
            v1, v2 = good[i][0], good[j][0]
            scale = max(abs(v1), abs(v2))
            if scale > 0 and abs(v1 - v2) > _ACC_BAR * scale:
                raise AccuracyLoss(
                    f"representation cross-validation disagrees by "
                    f"{abs(v1 - v2) / scale:.1e} at nu={nu}, z={z}"
                )


def _pcd_best(nu, z, allow_recurrence=True):
    # dispatch for Re z >= 0: series inside Z_SWITCH, asymptotic outside,
    # cross-validated in the handover band. Returns (value, error estimate);
    # the caller decides whether the estimate is acceptable.
    r = abs(z)
    if r <= Z_SWITCH:
        v, e = _pcd_series(nu, z)
        if e <= 1e-10:
            return v, e
        pairs = [(v, e)]
    else:
        va, ea = _pcd_asymptotic(nu, z)
        if ea <= 1e-10 and r > Z_SWITCH + CROSS_BAND:
            return va, ea
        pairs = [(va, ea)]
        pairs.append(_pcd_series(nu, z))
    best_v, best_e = min(pairs, key=lambda p: p[1])
    if best_e > 1e-8:
        if nu.real < -0.05:
            # handover corner, order low enough for the convergent integral
            pairs.append(_pcd_integral(nu, z))
        elif allow_recurrence:
            # order too high for the integral: climb D_{m+1} = z D_m - m D_{m-1}
            # from two base orders with Re < -0.05, propagating the error
            # through each step so instability shows up in the estimate
            k = int(math.floor(nu.real + 0.05)) + 1
            lo, elo = _pcd_best(nu - k - 1, z, allow_recurrence=False)
            hi, ehi = _pcd_best(nu - k, z, allow_recurrence=False)
            ok = True
            for j in range(k):
                m = nu - k + j
                val = z * hi - m * lo
                mag = abs(val)
                if mag == 0:
                    ok = False
                    break
                lever = abs(z * hi) + abs(m * lo)
                enew = (ehi * abs(z * hi) + elo * abs(m * lo) + 4e-16 * lever) / mag
                lo, elo, hi, ehi = hi, ehi, val, enew
            if ok:
                pairs.append((complex(hi), ehi + 1e-14))
        best_v, best_e = min(pairs, key=lambda p: p[1])
    _audit_pair(pairs, nu, z)
    return best_v, best_e


def _pcd_right(nu, z):
    v, e = _pcd_best(nu, z)
    if e > _ACC_BAR:
        raise AccuracyLoss(
            f"no representation reaches {_ACC_BAR:.0e} at nu={nu}, z={z} "
            f"(best estimate {e:.1e})"
        )
    return v


def _pcd_scalar(nu, z):
    nu = complex(nu)
    z = complex(z)
    if z == 0:
        # single surviving series term; exact zero for odd integer orders
        nu_l = np.clongdouble(nu)
        val = (
            np.exp(nu_l / 2 * _LN2_L)
            * np.sqrt(_PI_L)
            * _rgamma_ext((1 - nu_l) / 2)
        )
        return complex(val)
    if nu.imag == 0 and nu.real == round(nu.real) and 0 <= nu.real <= _MAX_HERMITE:
        # polynomial times Gaussian, exact at every point including the
        # polynomial roots where a relative cancellation estimate is moot
        n = int(nu.real)
        zl = np.clongdouble(z)
        w = zl / np.sqrt(np.clongdouble(2))
        hm, h = np.clongdouble(0), np.clongdouble(1)
        for k in range(n):
            hm, h = h, 2 * w * h - 2 * k * hm
        return complex(np.exp(-zl * zl / 4 - n * _LN2_L / 2) * h)
    if abs(z) <= Z_SWITCH or z.real >= 0:
        return _pcd_right(nu, z)
    # left half plane: reflect onto arguments with Re >= 0.  The sign of the
    # connection phases follows the sign of Im z.
    s = 1.0 if z.imag > 0 else -1.0
    a = np.exp(1j * math.pi * nu * s) * _pcd_right(nu, -z)
    rg = complex(_rgamma_ext(np.clongdouble(-nu)))
    if rg != 0:
        b = (
            math.sqrt(2 * math.pi)
            * rg
            * np.exp(1j * math.pi * (nu + 1) / 2 * s)
            * _pcd_right(-nu - 1, -1j * s * z)
        )
    else:
        b = 0.0
    return a + b


def parabolic_cylinder_d(nu, z):
    """Parabolic cylinder function D_nu(z), complex order and argument.

    Scalar z gives a complex scalar; array z maps elementwise. Raises
    AccuracyLoss rather than silently degrade (see module docstring).
    """
    if np.ndim(z) == 0:
        return _pcd_scalar(nu, z)
    z = np.asarray(z)
    out = np.empty(z.shape, dtype=complex)
    flat = z.ravel()
    out_flat = out.ravel()
    for i in range(flat.size):
        out_flat[i] = _pcd_scalar(nu, flat[i])
    return out


def parabolic_cylinder_d_prime(nu, z):
    """d/dz D_nu(z) via the ladder identity D'_nu = (z/2) D_nu - D_{nu+1}."""
    return np.asarray(z) / 2 * parabolic_cylinder_d(nu, z) - parabolic_cylinder_d(nu + 1, z)


def d_recurrence_residual(nu, z):
    """Relative defect of D_{nu+1} - z D_nu + nu D_{nu-1} = 0 at one point.

    The defect is scaled by the largest of the three terms, so the result is
    comparable across regimes where the function itself grows or decays by
    hundreds of orders.  An identically vanishing triple (all three terms
    zero) scores 0.0.
    """
    dm = parabolic_cylinder_d(nu - 1, z)
    d0 = parabolic_cylinder_d(nu, z)
    dp = parabolic_cylinder_d(nu + 1, z)
    scale = max(abs(dp), abs(z * d0), abs(nu * dm))
    if scale == 0.0:
        return 0.0
    return abs(dp - z * d0 + nu * dm) / scale


@dataclass(frozen=True)
class EigenLabel:
    """Quantum numbers of a full two-factor eigenfunction.

    n: oscillator level (integer >= 0); epsilon: continuous real label of
    the inverted factor; branch: +1 or -1 selecting the ray.
    """

    n: int
    epsilon: float
    branch: int = 1

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ConfigError(f"oscillator level must be a nonnegative integer, got {self.n!r}")
        if self.branch not in (1, -1):
            raise ConfigError(f"branch must be +1 or -1, got {self.branch!r}")
        if not math.isfinite(self.epsilon):
            raise ConfigError("epsilon must be finite")


def oscillator_eigenfunction(n, x, params: PUParams):
    """Normalized oscillator factor: Hermite times Gaussian, unit L2 norm."""
    w, hbar = params.omega_cap, params.hbar
    xi = np.sqrt(w / hbar) * np.asarray(x, dtype=float)
    log_norm = 0.25 * math.log(w / (math.pi * hbar)) - 0.5 * (n * math.log(2.0) + gammaln(n + 1))
    val = math.exp(log_norm) * hermite(n, xi) * np.exp(-xi * xi / 2)
    return val if np.ndim(x) else float(val)


def _inverted_prefactor(epsilon, params: PUParams):
    w, hbar = params.omega_cap, params.hbar
    y = math.pi * epsilon / (hbar * w)
    # log(cosh y) without overflow
    log_cosh = abs(y) + math.log1p(math.exp(-2 * abs(y))) - math.log(2.0)
    log_pref = 0.25 * math.log(2 * w / hbar) + y / 4 - 0.5 * (math.log(4 * math.pi) + log_cosh)
    return math.exp(log_pref)


def inverted_eigenfunction(epsilon, branch, x, params: PUParams):
    """Continuum eigenfunction of the inverted-oscillator factor.

    Satisfies (-(hbar^2/2) d^2/dx^2 - (Omega^2/2) x^2) psi = epsilon psi.
    The full prefactor, including the (2 Omega/hbar)^{1/4} scale and the
    epsilon-dependent normalization, is included.
    """
    if branch not in (1, -1):
        raise ConfigError(f"branch must be +1 or -1, got {branch!r}")
    w, hbar = params.omega_cap, params.hbar
    nu = -1j * epsilon / (hbar * w) - 0.5
    ray = branch * math.sqrt(2 * w / hbar) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    return _inverted_prefactor(epsilon, params) * parabolic_cylinder_d(nu, ray * np.asarray(x))


def inverted_eigenfunction_dx(epsilon, branch, x, params: PUParams):
    """d/dx of inverted_eigenfunction, exact via the D ladder identity."""
    if branch not in (1, -1):
        raise ConfigError(f"branch must be +1 or -1, got {branch!r}")
    w, hbar = params.omega_cap, params.hbar
    nu = -1j * epsilon / (hbar * w) - 0.5
    ray = branch * math.sqrt(2 * w / hbar) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    return _inverted_prefactor(epsilon, params) * ray * parabolic_cylinder_d_prime(nu, ray * np.asarray(x))


def pu_eigenfunction(label: EigenLabel, x1, x2, params: PUParams):
    """Full eigenfunction: oscillator factor in x1 times inverted factor in x2."""
    return oscillator_eigenfunction(label.n, x1, params) * inverted_eigenfunction(
        label.epsilon, label.branch, x2, params
    )


def pu_energy(label: EigenLabel, params: PUParams) -> float:
    """Energy bookkeeping: hbar Omega (n + 1/2) - epsilon."""
    return params.hbar * params.omega_cap * (label.n + 0.5) - label.epsilon
