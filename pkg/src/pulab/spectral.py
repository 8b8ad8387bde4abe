"""Mode decomposition of the delay-coupled oscillator.

The equation of motion q''(t) + (omega^2/2)(q(t-T) + q(t+T)) = 0 admits
exponential solutions e^{zt} exactly at the zeros of the entire function

    F(z) = z^2 + omega^2 cosh(T z),

which is even and real on the real axis, so zeros come in conjugate
quadruples {z, -z, zbar, -zbar} plus pure-imaginary pairs +-i Omega.  In
the variable u = z^2 the same function reads Phi(u) = u + omega^2 cosh(T
sqrt u); its real negative zeros u_i = -Omega_i^2 are the bounded
oscillator modes and its complex conjugate zero pairs are growing or
decaying rotating modes.  The decomposition stores one representative per
pair, the residue weights eta of omega^4/Phi(u) at each zero, and an
explicit bound on the truncated part of the mode sum.

Roots are found by Newton iteration from a rectangular grid over the upper
half plane (plus a bisection sweep along the imaginary axis, where the
bounded modes live), deduplicated deterministically, and the count is
audited against an argument-principle winding integral over the search
contour; a mismatch raises ContourMiss rather than returning a decomposition
that silently drops modes.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import polygamma

from .errors import ConfigError, ContourMiss, DegenerateModes, OverflowGuard, PoleHit
from .params import NonlocalParams

# |F(root)| <= ROOT_TOL * max(1, |z|^2) is the stored-root contract
ROOT_TOL = 1e-10
# Newton locates a tangent (double) root only to sqrt of the residual
# floor, where the slope is still ~1e-6; 1e-4 separates that cleanly from
# the ~2.5e-3 slope measured one excluded-ball width (1e-6 in delay) away
_DEGEN_TOL = 1e-4


def phi(z, p):
    """Characteristic function F(z) = z^2 + omega^2 cosh(T z).

    Stable for |Re(T z)| <= 700; beyond that cosh overflows and the call
    raises OverflowGuard instead of returning inf.
    """
    z = complex(z)
    if abs((p.delay * z).real) > 700.0:
        raise OverflowGuard(
            f"cosh argument Re(Tz) = {(p.delay * z).real:.1f} exceeds the "
            "double-precision exponent range"
        )
    return z * z + p.omega**2 * np.cosh(p.delay * z)


def _phi_prime(z, p):
    # dF/dz, same overflow envelope as phi
    return 2 * z + p.omega**2 * p.delay * np.sinh(p.delay * z)


def _phi_u(u, p):
    # Phi in the u = z^2 variable; sqrt branch is irrelevant since cosh is even
    return u + p.omega**2 * np.cosh(p.delay * np.sqrt(complex(u)))


def _phi_u_prime(u, p):
    # d Phi / du = 1 + omega^2 T sinh(T sqrt u) / (2 sqrt u), even in sqrt branch
    u = complex(u)
    if u == 0:
        return 1.0 + p.omega**2 * p.delay**2 / 2
    r = np.sqrt(u)
    return 1.0 + p.omega**2 * p.delay * np.sinh(p.delay * r) / (2 * r)


def _simple_zero_slope(u, p):
    # Phi' at a zero, raising DegenerateModes when its two parts cancel;
    # the comparison scale is the part magnitude, not |u|, so huge far
    # modes with O(1) slopes are not misflagged
    u = complex(u)
    dp = _phi_u_prime(u, p)
    scale = 1.0 + abs(dp - 1.0)
    if abs(dp) < _DEGEN_TOL * scale:
        raise DegenerateModes(
            f"double zero detected at u = {u:.6g}; the delay-frequency "
            "product sits on the excluded degenerate set"
        )
    return dp


def characteristic_residual(z, p):
    """|F(z)|; zero exactly when e^{zt} solves the delayed equation of motion."""
    return abs(phi(z, p))


@dataclass(frozen=True)
class RealMode:
    Omega: float
    eta: float | None = None
    sign: int | None = None


@dataclass(frozen=True)
class ComplexMode:
    omega_k: complex
    eta_k: complex | None = None


@dataclass(frozen=True)
class SpectrumGenerator:
    """One commuting generator of the decoupled quadratic Hamiltonian."""

    kind: str  # "oscillator" | "dilatation_rotation"
    Omega: float | None = None
    sign: int | None = None
    mu: float | None = None
    nu: float | None = None

    def spectrum_sample(self, lam=0.0, n=0, hbar=1.0):
        """Energy sample: sign*hbar*Omega*(n+1/2) for the oscillator kind,
        hbar*(mu*lam + nu*n) for the dilatation-rotation kind (lam real, n
        any integer)."""
        if self.kind == "oscillator":
            return self.sign * hbar * self.Omega * (n + 0.5)
        return hbar * (self.mu * lam + self.nu * n)


@dataclass(frozen=True)
class ModeDecomposition:
    """Roots and residue weights of the characteristic function.

    real_modes hold the bounded frequencies Omega_i (roots u_i = -Omega_i^2);
    complex_modes hold one representative omega_k per conjugate pair, with
    u_k = -omega_k^2.  truncation_K counts the retained complex pairs and
    tail_bound bounds the dropped part of sum |omega_k|^-2.
    """

    real_modes: tuple = ()
    complex_modes: tuple = ()
    truncation_K: int = 0
    tail_bound: float = 0.0
    params: NonlocalParams | None = field(default=None, compare=False)

    def roots_z(self):
        """Representative z-plane roots: i*Omega_i, then a_k + i b_k with
        growth rate a_k = Im omega_k and frequency b_k = Re omega_k."""
        out = [1j * m.Omega for m in self.real_modes]
        out += [m.omega_k.imag + 1j * m.omega_k.real for m in self.complex_modes]
        return out

    def to_json(self):
        def c(v):
            return [v.real, v.imag]

        doc = {
            "real_modes": [
                {"Omega": m.Omega, "eta": m.eta, "sign": m.sign}
                for m in self.real_modes
            ],
            "complex_modes": [
                {
                    "omega_k": c(m.omega_k),
                    "eta_k": None if m.eta_k is None else c(m.eta_k),
                }
                for m in self.complex_modes
            ],
            "truncation_K": self.truncation_K,
            "tail_bound": self.tail_bound,
        }
        if self.params is not None:
            doc["params"] = {
                "omega": self.params.omega,
                "delay": self.params.delay,
                "hbar": self.params.hbar,
            }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text):
        doc = json.loads(text)
        real = tuple(
            RealMode(m["Omega"], m.get("eta"), m.get("sign"))
            for m in doc["real_modes"]
        )
        cplx = tuple(
            ComplexMode(
                complex(*m["omega_k"]),
                None if m.get("eta_k") is None else complex(*m["eta_k"]),
            )
            for m in doc["complex_modes"]
        )
        params = None
        if "params" in doc:
            q = doc["params"]
            params = NonlocalParams(omega=q["omega"], delay=q["delay"], hbar=q["hbar"])
        return ModeDecomposition(
            real, cplx, doc["truncation_K"], doc["tail_bound"], params
        )


def winding_number(p, radius, n_start=256, max_depth=18):
    """Argument-principle count of F-zeros inside |z| = radius.

    Trapezoid accumulation of the argument of F along the circle, with
    recursive arc subdivision wherever the argument jumps by pi/2 or more
    between neighbouring samples, so winding cannot be lost to aliasing.
    Raises ContourMiss if the subdivision budget is exhausted or the total
    is not an integer to 1e-6.
    """

    def f(theta):
        return phi(radius * np.exp(1j * theta), p)

    def darg(a, b):
        # principal-value argument increment of F between angles a, b
        return math.remainder(np.angle(f(b)) - np.angle(f(a)), 2 * math.pi)

    total = 0.0
    stack = [(2 * math.pi * k / n_start, 2 * math.pi * (k + 1) / n_start, 0)
             for k in range(n_start)]
    while stack:
        a, b, depth = stack.pop()
        d = darg(a, b)
        if abs(d) < math.pi / 2:
            total += d
            continue
        if depth >= max_depth:
            raise ContourMiss(
                f"winding integrand not resolved near theta = {a:.6f} on "
                f"|z| = {radius}"
            )
        mid = (a + b) / 2
        stack.append((a, mid, depth + 1))
        stack.append((mid, b, depth + 1))
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 1e-6:
        raise ContourMiss(f"winding total {w} is not an integer")
    return int(round(w))


def _newton_root(z0, p, iters=60):
    z = complex(z0)
    for _ in range(iters):
        try:
            fz = phi(z, p)
        except OverflowGuard:
            return None
        if abs(fz) <= 1e-13 * max(1.0, abs(z) ** 2):
            return z
        dfz = _phi_prime(z, p)
        if dfz == 0:
            return None
        step = fz / dfz
        if not np.isfinite(step):
            return None
        z = z - step
    if abs(phi(z, p)) <= ROOT_TOL * max(1.0, abs(z) ** 2):
        return z
    return None


def _imaginary_axis_roots(p, radius):
    # bounded modes: g(y) = -y^2 + omega^2 cos(T y) = 0, y > 0.  Sign-change
    # bisection over a grid fine enough for the cos oscillation.
    g = lambda y: -y * y + p.omega**2 * math.cos(p.delay * y)
    y_hi = min(radius, p.omega * 1.0000001 + 1.0)
    n = max(64, int(8 * p.delay * y_hi / math.pi) + 8)
    if n > 50_000_000:
        raise ConfigError(
            f"imaginary-axis scan needs {n} nodes (omega*delay too large); "
            "reduce the search radius or the parameters"
        )
    ys = np.linspace(0.0, y_hi, n)
    vals = [g(y) for y in ys]
    roots = []
    for i in range(n - 1):
        a, b = ys[i], ys[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 and a > 0:
            roots.append(a)
            continue
        if fa * fb < 0:
            for _ in range(200):
                m = (a + b) / 2
                fm = g(m)
                if fa * fm <= 0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            roots.append((a + b) / 2)
    return roots


def find_modes(p, K=32, search_radius=40.0):
    """Locate the characteristic roots and audit the count.

    Returns every root with |u| <= search_radius^2 and at least K complex
    conjugate pairs (the search extends beyond the radius if needed to reach
    K).  Raises DegenerateModes near a double zero and ContourMiss when the
    winding count disagrees with the roots found.
    """
    if K < 1:
        raise ConfigError("K must be at least 1")
    if search_radius <= 0:
        raise ConfigError("search_radius must be positive")

    if p.delay == 0.0:
        d = ModeDecomposition(
            real_modes=(RealMode(Omega=p.omega),),
            complex_modes=(),
            truncation_K=0,
            tail_bound=0.0,
            params=p,
        )
        return d

    def collect(radius):
        # imaginary-axis sweep plus rectangular Newton grid, upper half plane
        found = []
        for y in _imaginary_axis_roots(p, radius):
            z = _newton_root(1j * y, p)
            if z is not None:
                found.append(1j * abs(z.imag))
        # grid spacing must resolve the ~2 pi / T vertical root spacing
        step = min(1.5, math.pi / (2 * p.delay)) if p.delay > 0 else 1.5
        n_re = max(9, int(2 * radius / step) + 1)
        n_im = max(5, int(radius / step) + 1)
        for re in np.linspace(-radius, radius, n_re):
            for im in np.linspace(0.0, radius, n_im):
                z = _newton_root(complex(re, im), p)
                if z is None:
                    continue
                if abs(z) > radius * 1.25:
                    continue
                if z.imag < 0:
                    z = z.conjugate()
                found.append(z)
        # deterministic dedup: sort, then merge within the relative radius
        found.sort(key=lambda z: (round(z.real, 12), round(z.imag, 12)))
        roots = []
        for z in found:
            if any(abs(z - r) <= 1e-6 * (1 + abs(z)) for r in roots):
                continue
            roots.append(z)
        return roots

    radius = float(search_radius)
    roots = collect(radius)

    def split(roots, radius):
        realm, cplx = [], []
        for z in roots:
            if abs(z) > radius:
                continue
            if abs(phi(z, p)) > ROOT_TOL * max(1.0, abs(z) ** 2):
                continue
            _simple_zero_slope(z * z, p)
            if abs(z.real) <= 1e-9 * (1 + abs(z)):
                realm.append(z.imag)
            else:
                # first-quadrant representative; omega_k = b + i a for z = a + i b
                a, b = abs(z.real), z.imag
                cplx.append(complex(b, a))
        realm.sort()
        # both upper-half members +-a + i b of a quadruple fold to the same
        # representative, so dedup again after folding
        cplx.sort(key=lambda w: (round(w.imag, 12), round(w.real, 12)))
        uniq = []
        for w in cplx:
            if any(abs(w - v) <= 1e-6 * (1 + abs(w)) for v in uniq):
                continue
            uniq.append(w)
        uniq.sort(key=lambda w: (w.real, w.imag))
        return realm, uniq

    realm, cplx = split(roots, radius)

    # top up to K pairs beyond the requested radius if necessary.  The far
    # quadruples follow cosh(Tz) ~ -z^2/omega^2, i.e. ring n sits near
    # Re z = ln(2|z|^2/omega^2)/T, Im z = 2 pi n / T minus a phase correction;
    # Newton from those seeds replaces any further disk search.
    if len(cplx) < K:
        T = p.delay
        wt2 = (p.omega * T) ** 2

        def ring_seed(m):
            # in W = Tz the far roots satisfy e^X = 2|W|^2/(omega T)^2 and
            # Y = pi (2m+1) + 2 arg W; a short fixed point pins the seed
            y = math.pi * (2 * m + 1)
            x = math.log(max(2 * y * y / wt2, 4.0))
            for _ in range(12):
                y = math.pi * (2 * m + 1) + 2 * math.atan2(y, x)
                x = math.log(2 * (x * x + y * y) / wt2)
            return complex(x / T, y / T)

        def ring_index(w):
            x, y = T * w.imag, T * w.real
            return int(round((y - math.pi - 2 * math.atan2(y, x)) / (2 * math.pi)))

        m = max((ring_index(w) for w in cplx), default=-1)
        misses = 0
        while len(cplx) < K and misses < 8:
            m += 1
            seed = ring_seed(m)
            hit = False
            for dy in (0.0, -1.0 / T, 1.0 / T):
                z = _newton_root(seed + 1j * dy, p)
                if z is None:
                    continue
                if z.imag < 0:
                    z = z.conjugate()
                # must be a genuine new quadruple, not a fall-back onto the
                # imaginary axis or an already-counted root
                if abs(z.real) <= 1e-9 * (1 + abs(z)) or abs(z) <= radius:
                    continue
                w = complex(z.imag, abs(z.real))
                if any(abs(w - v) <= 1e-6 * (1 + abs(w)) for v in cplx):
                    continue
                _simple_zero_slope(z * z, p)
                cplx.append(w)
                hit = True
                break
            misses = 0 if hit else misses + 1
        cplx.sort(key=lambda w: (w.real, w.imag))
        if len(cplx) < K:
            raise ContourMiss(
                f"asymptotic seeding stalled at {len(cplx)} of {K} complex pairs"
            )

    if not realm:
        raise ContourMiss("no bounded mode found; the search grid missed the "
                          "imaginary axis root")

    # winding audit on the original contour (nudged off any root)
    audit_r = radius
    zs = [1j * y for y in realm] + [complex(w.imag, w.real) for w in cplx]
    while any(abs(abs(z) - audit_r) < 1e-3 * audit_r for z in zs):
        audit_r *= 1.0 + 1e-3
    inside = sum(2 for y in realm if y <= audit_r)
    inside += sum(4 for w in cplx if abs(w) <= audit_r)
    w = winding_number(p, audit_r)
    if w != inside:
        raise ContourMiss(
            f"argument principle counts {w} roots inside |z| = {audit_r:.3f} "
            f"but the search found {inside}"
        )

    # tail of sum |omega_k|^-2 over dropped pairs: vertical spacing of the
    # far roots approaches 2 pi / T, so bound the tail by the polygamma sum
    # sum_{j>=1} (b_K + 0.9 * j * s)^-2 with s = 2 pi / T
    s = 2 * math.pi / p.delay
    b_last = max(w.real for w in cplx)
    x0 = b_last / (0.9 * s) + 1.0
    tail = float(polygamma(1, x0)) / (0.9 * s) ** 2

    return ModeDecomposition(
        real_modes=tuple(RealMode(Omega=y) for y in realm),
        complex_modes=tuple(ComplexMode(omega_k=w) for w in cplx),
        truncation_K=len(cplx),
        tail_bound=tail,
        params=p,
    )


def residues(d, p):
    """Populate the residue weights eta from omega^4 / Phi(u).

    At a simple zero u_r the partial-fraction weight is
    eta_r = omega^4 / (u_r^2 * Phi'(u_r)), with Phi' the u-derivative.
    """
    w4 = p.omega**4

    def weight(u):
        dp = _simple_zero_slope(u, p)
        return w4 / (u * u * dp)

    realm = []
    for m in d.real_modes:
        u = -m.Omega**2
        eta = weight(u)
        eta = float(eta.real) if isinstance(eta, complex) else float(eta)
        realm.append(replace(m, eta=eta, sign=int(math.copysign(1.0, eta))))
    cplx = []
    for m in d.complex_modes:
        u = -m.omega_k * m.omega_k
        cplx.append(replace(m, eta_k=complex(weight(u))))
    return replace(d, real_modes=tuple(realm), complex_modes=tuple(cplx))


def partial_fraction_eval(d, z):
    """Truncated mode expansion of omega^4 / Phi(z^2).

    Sum of eta_i Omega_i^2 / (1 + z^2/Omega_i^2) over real modes plus the
    conjugate-paired complex terms.  Raises PoleHit at a stored mode.
    """
    z = complex(z)
    z2 = z * z
    total = 0j
    for m in d.real_modes:
        if m.eta is None:
            raise ConfigError("residues not populated; call residues() first")
        den = 1 + z2 / m.Omega**2
        if abs(den) < 1e-10:
            raise PoleHit(f"evaluation point z = {z} sits on mode Omega = {m.Omega}")
        total += m.eta * m.Omega**2 / den
    for m in d.complex_modes:
        if m.eta_k is None:
            raise ConfigError("residues not populated; call residues() first")
        for wk, ek in ((m.omega_k, m.eta_k),
                       (m.omega_k.conjugate(), m.eta_k.conjugate())):
            den = 1 + z2 / (wk * wk)
            if abs(den) < 1e-10:
                raise PoleHit(f"evaluation point z = {z} sits on mode {wk}")
            total += ek * wk * wk / den
    return total


def spectrum_generators(d):
    """Commuting generator list: one oscillator per real mode (sign from the
    residue), one dilatation-rotation generator per complex pair with growth
    coefficient mu = Im omega_k and rotation coefficient nu = Re omega_k."""
    gens = []
    for m in d.real_modes:
        if m.sign is None:
            raise ConfigError("residues not populated; call residues() first")
        gens.append(SpectrumGenerator(kind="oscillator", Omega=m.Omega, sign=m.sign))
    for m in d.complex_modes:
        gens.append(
            SpectrumGenerator(
                kind="dilatation_rotation",
                mu=m.omega_k.imag,
                nu=m.omega_k.real,
            )
        )
    return gens


def mode_trajectory(d, amplitudes, t_grid):
    """Real trajectory q(t) = Re sum_r a_r e^{z_r t} over the stored roots.

    amplitudes align with roots_z() order: real modes first, then one entry
    per complex pair.  Guarded against overflow of the growing exponentials.
    """
    zs = d.roots_z()
    if len(amplitudes) != len(zs):
        raise ConfigError(
            f"need {len(zs)} amplitudes (one per stored mode), got {len(amplitudes)}"
        )
    t = np.asarray(t_grid, dtype=float)
    worst = max((abs(z.real) * np.max(np.abs(t)) for z in zs), default=0.0)
    if worst > 700.0:
        raise OverflowGuard(
            f"growing mode exponent Re(z)*t reaches {worst:.0f}; trajectory "
            "would overflow"
        )
    q = np.zeros_like(t)
    for a, z in zip(amplitudes, zs):
        q += (a * np.exp(z * t)).real
    return q


def mode_residual(d, amplitudes, t_grid, p):
    """Residual of the delayed equation of motion for the mode trajectory,
    evaluated with exact exponentials: max over the grid of
    |sum_r a_r F(z_r) e^{z_r t}| together with the trajectory scale."""
    zs = d.roots_z()
    t = np.asarray(t_grid, dtype=float)
    res = np.zeros_like(t, dtype=complex)
    scale = np.zeros_like(t)
    for a, z in zip(amplitudes, zs):
        ez = np.exp(z * t)
        res += a * phi(z, p) * ez
        scale += np.abs(a * ez) * max(1.0, abs(z) ** 2)
    return float(np.max(np.abs(res))), float(np.max(scale))
