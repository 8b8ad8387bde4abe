"""Tests for the delayed-oscillator mode decomposition.

Frozen values carry their construction with them.  Imaginary-axis roots
solve cos(T y) = (y / omega)^2 and are cross-checked against mpmath when
it is installed.  Complex quadruple representatives are re-verified
through the characteristic residual, which any claimed root must drive
below ROOT_TOL.  Completeness is audited against an independent
fixed-step winding integral written out in this file, not against the
package's own contour routine.
"""

import json
import math

import numpy as np
import pytest

from pulab.errors import (
    ConfigError,
    ContourMiss,
    DegenerateModes,
    OverflowGuard,
    PoleHit,
)
from pulab.params import NonlocalParams
from pulab.spectral import (
    ROOT_TOL,
    ModeDecomposition,
    characteristic_residual,
    find_modes,
    mode_residual,
    mode_trajectory,
    partial_fraction_eval,
    phi,
    residues,
    spectrum_generators,
    winding_number,
    _phi_u_prime,
)

P_REF = NonlocalParams(omega=1.0, delay=1.0)

# mpmath, 30 significant digits: F(1 + 2i) for omega = 1.3, T = 0.7
PHI_FROZEN_POINT = (1 + 2j, 1.3, 0.7,
                    -2.639459642332592992 + 5.263352916015891139j)

# omega = 1, T = 1 decomposition, radius 40: the bounded mode solves
# cos(y) = y^2, the six quadruple representatives omega_k = b + i a come
# from first-quadrant roots a + i b of F and satisfy the residual bound
# re-checked in test_frozen_roots_satisfy_residual below
OMEGA_1 = 0.8241323123025224
ETA_1 = 1.4998806114475525
OMEGA_K_FROZEN = [
    4.785712065288445 + 4.446982805247358j,
    11.638214819644677 + 5.825307650005876j,
    18.150545521795088 + 6.615272412238543j,
    24.564169174357723 + 7.1776556719405535j,
    30.933133661237942 + 7.615649920862159j,
    37.27761139155027 + 7.974681311177322j,
]

# double zero of Phi_u at omega = 1: tan(theta) + 2/theta = 0 on the
# branch cos(theta) > 0, sin(theta) < 0 (mpmath, residuals ~ 1e-31)
DELAY_DEGENERATE = 6.1205392770764976094
U_DEGENERATE = -0.9480353145950544986


def winding_oracle(p, radius, n=16384):
    # fixed-step unwrap of arg F around the circle; independent of the
    # package's adaptive subdivision
    theta = np.linspace(0.0, 2 * np.pi, n + 1)
    vals = np.array([phi(radius * np.exp(1j * t), p) for t in theta])
    total = np.unwrap(np.angle(vals))
    w = (total[-1] - total[0]) / (2 * np.pi)
    assert abs(w - round(w)) < 1e-6
    return int(round(w))


@pytest.fixture(scope="module")
def decomposition_t1():
    return residues(find_modes(P_REF, K=6), P_REF)


class TestCharacteristicFunction:
    def test_no_delay_reduces_to_polynomial(self):
        p = NonlocalParams(omega=1.0, delay=0.0)
        assert phi(0.0, p) == 1.0
        assert phi(1j, p) == 0.0
        assert characteristic_residual(1j, p) == 0.0

    def test_frozen_point(self):
        z, omega, delay, want = PHI_FROZEN_POINT
        got = phi(z, NonlocalParams(omega=omega, delay=delay))
        assert abs(got - want) <= 1e-15 * abs(want)

    def test_even_and_real_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            a = phi(z, P_REF)
            assert phi(-z, P_REF) == a
            assert abs(phi(z.conjugate(), P_REF) - a.conjugate()) <= 1e-15 * abs(a)

    def test_residual_at_origin_is_omega_squared(self):
        p = NonlocalParams(omega=1.3, delay=0.7)
        assert characteristic_residual(0.0, p) == pytest.approx(1.69, rel=1e-15)

    def test_overflow_guard(self):
        with pytest.raises(OverflowGuard):
            phi(701.0, P_REF)
        with pytest.raises(OverflowGuard):
            phi(-701.0 + 5j, P_REF)


class TestRootSearch:
    def test_frozen_decomposition(self, decomposition_t1):
        d = decomposition_t1
        assert len(d.real_modes) == 1
        assert d.real_modes[0].Omega == pytest.approx(OMEGA_1, rel=1e-13)
        assert d.real_modes[0].eta == pytest.approx(ETA_1, rel=1e-12)
        assert d.real_modes[0].sign == 1
        assert d.truncation_K == 6
        got = [m.omega_k for m in d.complex_modes]
        for g, w in zip(got, OMEGA_K_FROZEN):
            assert abs(g - w) <= 1e-12 * abs(w)

    def test_frozen_roots_satisfy_residual(self, decomposition_t1):
        # the one check a root table cannot survive by construction alone
        for z in decomposition_t1.roots_z():
            r = characteristic_residual(z, P_REF)
            assert r <= ROOT_TOL * max(1.0, abs(z) ** 2)

    def test_bounded_mode_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        y = mp.findroot(lambda t: mp.cos(t) - t * t, mp.mpf("0.82"))
        assert OMEGA_1 == pytest.approx(float(y), rel=1e-15)

    def test_deterministic(self, decomposition_t1):
        again = residues(find_modes(P_REF, K=6), P_REF)
        assert again.real_modes == decomposition_t1.real_modes
        assert again.complex_modes == decomposition_t1.complex_modes

    def test_no_delay_single_mode(self):
        p = NonlocalParams(omega=2.2, delay=0.0)
        d = residues(find_modes(p, K=8), p)
        assert len(d.real_modes) == 1 and not d.complex_modes
        assert d.real_modes[0].Omega == 2.2
        assert d.real_modes[0].eta == 1.0
        assert d.tail_bound == 0.0

    def test_small_delay_regression(self):
        # delay 1e-8 must reproduce the undelayed oscillator to 1e-6
        p = NonlocalParams(omega=1.0, delay=1e-8)
        d = residues(find_modes(p, K=2), p)
        assert d.real_modes[0].Omega == pytest.approx(1.0, abs=1e-6)
        assert d.real_modes[0].eta == pytest.approx(1.0, abs=1e-6)

    def test_winding_matches_independent_oracle(self):
        # 2 per bounded pair + 4 per quadruple, at three radii; the
        # package contour count must agree with the fixed-step unwrap
        expect = {12.0: 2 + 4 * 1, 25.0: 2 + 4 * 3, 40.0: 2 + 4 * 6}
        for r, n in expect.items():
            assert winding_oracle(P_REF, r) == n
            assert winding_number(P_REF, r) == n

    def test_search_radius_variants(self):
        for r in (12.0, 25.0, 40.0):
            d = find_modes(P_REF, K=1, search_radius=r)
            inside = sum(1 for m in d.complex_modes
                         if abs(m.omega_k) <= r)
            assert inside == {12.0: 1, 25.0: 3, 40.0: 6}[r]

    def test_degenerate_delay_detected(self):
        # tangency of Phi_u: simple-zero preconditions are violated and
        # the search must say so rather than return a huge residue
        p = NonlocalParams(omega=1.0, delay=DELAY_DEGENERATE)
        assert abs(float(np.real(_phi_u_prime(U_DEGENERATE, p)))) <= 1e-12
        assert characteristic_residual(
            1j * math.sqrt(-U_DEGENERATE), p) <= 1e-12
        with pytest.raises(DegenerateModes):
            find_modes(p, K=2, search_radius=2.0)

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            find_modes(P_REF, K=0)
        with pytest.raises(ConfigError):
            find_modes(P_REF, K=4, search_radius=-1.0)

    def test_winding_rejects_bad_grid(self):
        with pytest.raises(ContourMiss):
            winding_number(P_REF, 40.0, n_start=4, max_depth=1)


class TestResiduesAndPartialFraction:
    def test_residue_conjugation(self, decomposition_t1):
        # Schwarz symmetry of the weight function, relied on by the
        # evaluator when it adds conjugate terms explicitly
        for m in decomposition_t1.complex_modes:
            u = -m.omega_k ** 2
            w = P_REF.omega ** 4 / (u * u * _phi_u_prime(u, P_REF))
            wc = P_REF.omega ** 4 / (
                u.conjugate() ** 2 * _phi_u_prime(u.conjugate(), P_REF))
            assert abs(w - m.eta_k) <= 1e-12 * abs(w)
            assert abs(wc - w.conjugate()) <= 1e-12 * abs(w)

    def test_two_sided_convergence(self):
        # truncation error must fall as quadruples are added, from both
        # sides of the identity: random probe points and the origin
        rng = np.random.default_rng(7)
        zs = [complex(x, y) for x, y in
              zip(rng.uniform(-2, 2, 50), rng.uniform(-2, 2, 50))]
        errs = []
        for K in (4, 8, 16, 32, 64):
            d = residues(find_modes(P_REF, K=K), P_REF)
            e = max(abs(partial_fraction_eval(d, z) - 1.0 / phi(z, P_REF))
                    for z in zs)
            errs.append(e)
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= 5e-7

    def test_value_at_origin(self):
        # omega^4 / F(0) = omega^2 exactly; the truncated sum must land
        # within the measured K=64 error
        d = residues(find_modes(P_REF, K=64), P_REF)
        got = partial_fraction_eval(d, 0.0)
        assert abs(got - 1.0) <= 5e-7
        assert abs(got.imag) <= 1e-12

    def test_real_axis_reality(self, decomposition_t1):
        for z in np.linspace(-2.0, 2.0, 21):
            v = partial_fraction_eval(decomposition_t1, z)
            assert abs(v.imag) <= 1e-12 * max(1.0, abs(v))

    def test_pole_hit(self, decomposition_t1):
        with pytest.raises(PoleHit):
            partial_fraction_eval(decomposition_t1, 1j * OMEGA_1)

    def test_requires_populated_residues(self):
        d = find_modes(P_REF, K=4)
        with pytest.raises(ConfigError):
            partial_fraction_eval(d, 0.3)
        with pytest.raises(ConfigError):
            spectrum_generators(d)

    def test_tail_bound_honest_and_shrinking(self):
        # the bound must cover the actually dropped part of sum 1/|w|^2,
        # measured from a bigger run, and must shrink as K grows
        mags = sorted(abs(m.omega_k)
                      for m in find_modes(P_REF, K=24).complex_modes)
        tails = []
        for K in (6, 12):
            d = find_modes(P_REF, K=K)
            dropped = sum(1.0 / m ** 2 for m in mags[d.truncation_K:])
            assert d.tail_bound >= dropped
            tails.append(d.tail_bound)
        assert tails[0] > tails[1]


class TestSpectrumGenerators:
    def test_oscillator_generator(self, decomposition_t1):
        g = spectrum_generators(decomposition_t1)[0]
        assert g.kind == "oscillator"
        assert g.sign == 1
        assert g.Omega == pytest.approx(OMEGA_1, rel=1e-13)
        # sign * hbar * Omega * (n + 1/2)
        assert g.spectrum_sample(n=2, hbar=2.0) == pytest.approx(
            2.0 * OMEGA_1 * 2.5, rel=1e-13)

    def test_dilatation_rotation_generators(self, decomposition_t1):
        gens = spectrum_generators(decomposition_t1)[1:]
        assert len(gens) == 6
        for g, m in zip(gens, decomposition_t1.complex_modes):
            assert g.kind == "dilatation_rotation"
            assert g.mu == m.omega_k.imag
            assert g.nu == m.omega_k.real
            assert g.mu ** 2 + g.nu ** 2 == pytest.approx(
                abs(m.omega_k) ** 2, rel=1e-14)
            assert g.spectrum_sample(lam=0.7, n=3, hbar=2.0) == pytest.approx(
                2.0 * (g.mu * 0.7 + g.nu * 3), rel=1e-14)

    def test_growth_rate_matches_classical_envelope(self, decomposition_t1):
        # mu of the first quadruple is the log-slope of the trajectory
        # envelope, extracted with a quadrature pair so the fit is exact
        d = decomposition_t1
        t = np.linspace(0.0, 1.5, 300)
        amps = [0.0] * 7
        amps[1] = 0.01
        q_cos = mode_trajectory(d, amps, t)
        amps[1] = 0.01j
        q_sin = mode_trajectory(d, amps, t)
        env = np.hypot(q_cos, q_sin)
        slope = np.polyfit(t, np.log(env), 1)[0]
        mu = spectrum_generators(d)[1].mu
        assert slope == pytest.approx(mu, abs=1e-4)


class TestModeTrajectory:
    def test_bounded_mode_is_cosine(self, decomposition_t1):
        t = np.linspace(0.0, 10.0, 500)
        q = mode_trajectory(decomposition_t1, [1.0, 0, 0, 0, 0, 0, 0], t)
        assert np.max(np.abs(q - np.cos(OMEGA_1 * t))) <= 1e-13

    def test_solves_equation_of_motion(self, decomposition_t1):
        t = np.linspace(0.0, 2.0, 200)
        amps = [0.5, 0.01, 0.002j, 0, 0, 0, 0]
        res, scale = mode_residual(decomposition_t1, amps, t, P_REF)
        assert res <= 1e-10 * scale

    def test_zero_amplitudes(self, decomposition_t1):
        t = np.linspace(0.0, 1.0, 50)
        assert np.all(mode_trajectory(
            decomposition_t1, [0.0] * 7, t) == 0.0)

    def test_overflow_guard(self, decomposition_t1):
        # far quadruples grow like e^{8 t}; t = 200 walks past exp range
        with pytest.raises(OverflowGuard):
            mode_trajectory(decomposition_t1, [1.0] * 7,
                            np.linspace(0.0, 200.0, 10))

    def test_amplitude_count_checked(self, decomposition_t1):
        with pytest.raises(ConfigError):
            mode_trajectory(decomposition_t1, [1.0, 2.0],
                            np.linspace(0.0, 1.0, 10))


class TestSerialization:
    def test_round_trip(self, decomposition_t1):
        d = decomposition_t1
        again = ModeDecomposition.from_json(d.to_json())
        assert again.real_modes == d.real_modes
        assert again.complex_modes == d.complex_modes
        assert again.truncation_K == d.truncation_K
        assert again.tail_bound == d.tail_bound
        assert again.params == d.params

    def test_complex_stored_as_pairs(self, decomposition_t1):
        doc = json.loads(decomposition_t1.to_json())
        first = doc["complex_modes"][0]
        assert isinstance(first["omega_k"], list)
        assert len(first["omega_k"]) == 2
        w = complex(*first["omega_k"])
        assert w == decomposition_t1.complex_modes[0].omega_k
        assert doc["params"]["omega"] == 1.0
        assert doc["params"]["delay"] == 1.0
