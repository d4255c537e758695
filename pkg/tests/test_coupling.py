import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from leakycavity.coupling import (DriveSpec, MultiplePartnersWarning, coupling_data,
                                  effective_params, find_resonant_partner, geometry_factor,
                                  geometry_matrix, resonance_detunings, squeezing_parameter,
                                  wall_derivative)
from leakycavity.design import resonant_geometry, resonant_pair
from leakycavity.errors import GeometryError, ResonanceError
from leakycavity.spectral import (CavityGeometry, Dominance, build_mode, eigenfrequency_roots,
                                  lowest_mode, spectrum)


def fd_overlap(geom, mu_pos, nu, h):
    """m_{mu nu} from central differences of the mode on a0 (quadrature oracle)."""
    def mode_at(a0):
        g = geom.replace(a0=a0)
        return spectrum(g, mu_pos[1])[mu_pos[0]]

    fp, fm = mode_at(geom.a0 + h), mode_at(geom.a0 - h)
    integrand = lambda x: (fp(x) - fm(x)) / (2 * h) * nu(x)  # noqa: E731
    pieces = ((geom.a0, geom.b), (geom.b, geom.c))
    return sum(quad(integrand, lo, hi, limit=400, epsabs=1e-10)[0] for lo, hi in pieces)


class TestGeometryFactor:
    def test_diagonal_zero(self, generic):
        m = lowest_mode(spectrum(generic, 4.0))
        assert geometry_factor(generic, m, m) == 0.0

    def test_antisymmetric_first_eight(self, generic):
        modes = spectrum(generic, 10.0)[:8]
        m = geometry_matrix(generic, modes)
        assert np.max(np.abs(m + m.T)) < 1e-10

    def test_antisymmetric_tuned(self, tuned, tuned_spectrum):
        m = geometry_matrix(tuned, tuned_spectrum[:8])
        assert np.max(np.abs(m + m.T)) < 1e-10

    def test_boundary_formula(self, generic):
        # m_{mu nu} = f_mu'(a0) f_nu'(a0) / (W_mu^2 - W_nu^2)
        modes = spectrum(generic, 10.0)
        for i, mu in enumerate(modes):
            for nu in modes[i + 1:]:
                expected = mu.slope_at_wall() * nu.slope_at_wall() / (mu.omega_x ** 2 - nu.omega_x ** 2)
                assert geometry_factor(generic, mu, nu) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_finite_difference_oracle(self, generic):
        modes = spectrum(generic, 10.0)
        h = 1e-6 * generic.left_length
        for i, j in ((0, 1), (1, 3), (2, 0)):
            ref = fd_overlap(generic, (i, 10.0), modes[j], h)
            assert geometry_factor(generic, modes[i], modes[j]) == pytest.approx(ref, rel=1e-5, abs=1e-8)

    def test_wall_derivative_fd_pointwise(self, generic):
        m = spectrum(generic, 10.0)[2]
        x = np.linspace(0.05, 3.65, 37)
        h = 1e-6
        fp = spectrum(generic.replace(a0=h), 10.0)[2](x)
        fm = spectrum(generic.replace(a0=-h), 10.0)[2](x)
        assert np.allclose(wall_derivative(m, x), (fp - fm) / (2 * h), rtol=1e-5, atol=1e-6)

    def test_ideal_cavity_closed_form(self):
        d = 1.7
        g = CavityGeometry.ideal(0.0, d, d + 2.3)
        f1, f2 = build_mode(g, math.pi / d, 0), build_mode(g, 2 * math.pi / d, 1)
        # -(-1)^(1-2) 2*1*2 / ((2^2 - 1^2) d) up to the mode-phase convention
        assert abs(geometry_factor(g, f1, f2)) == pytest.approx(4 / (3 * d), rel=1e-12)
        assert geometry_factor(g, f1, f2) == pytest.approx(-4 / (3 * d), rel=1e-12)

    def test_cavity_reservoir_factor_order_eta(self):
        vals = []
        for gamma in (1e3, 1e4, 1e5):
            g = resonant_geometry(1.0, math.pi, gamma)
            mode_l, mode_r = resonant_pair(g)
            vals.append(abs(geometry_factor(g, mode_l, mode_r)) * gamma / mode_l.omega0)
        assert vals[-1] > 0
        assert (max(vals) - min(vals)) / np.mean(vals) < 0.02

    def test_mismatched_geometry(self, generic):
        other = generic.replace(gamma=2e3)
        with pytest.raises(GeometryError):
            geometry_factor(generic, lowest_mode(spectrum(generic, 4.0)), lowest_mode(spectrum(other, 4.0)))


class TestCouplingData:
    def test_delta_omega_amplitude(self, generic):
        modes = spectrum(generic, 6.0)
        cd = coupling_data(generic, DriveSpec(3e-4, 1.0), modes)
        for m, a in zip(modes, cd.delta_omega2_amp):
            assert a / m.omega_x ** 2 == 2 * 3e-4

    def test_drive_validation(self):
        with pytest.raises(GeometryError):
            DriveSpec(1.0, 1.0)
        with pytest.raises(GeometryError):
            DriveSpec(0.1, 0.0)
        assert DriveSpec(0.0, 2.0, 3.0).cycles == 6.0


class TestPartner:
    def test_tuned_partner_at_three(self, tuned, tuned_pair, tuned_spectrum):
        mode_l, mode_r = tuned_pair
        found = find_resonant_partner(tuned_spectrum, mode_l, 2 * mode_l.omega0)
        assert found is not None and found.index == mode_r.index
        assert found.dominance is Dominance.RIGHT
        assert found.omega0 == pytest.approx(3 * mode_l.omega0, rel=1e-13)

    def test_selectivity(self, tuned, tuned_pair, tuned_spectrum):
        mode_l = tuned_pair[0]
        eta = mode_l.eta_mu
        first20 = tuned_spectrum[:20]
        hits = {m.index for m, branch, det in resonance_detunings(first20, mode_l, 2 * mode_l.omega0)
                if det < 1e-2 * eta}
        assert len(hits) == 1

    def test_no_partner_when_detuned(self, tuned_pair, tuned_spectrum):
        mode_l = tuned_pair[0]
        assert find_resonant_partner(tuned_spectrum, mode_l, 2.05 * mode_l.omega0) is None

    @pytest.mark.parametrize("tol", [1e-3, 1e-2, 3e-2])
    def test_exhaustive_scan_oracle(self, tol):
        g = CavityGeometry(0.0, 1.0, 3.9, 1e3)
        # the lengths are commensurate at 10 pi, so the scan stops just below it
        roots = eigenfrequency_roots(g, 10 * math.pi - 0.05)
        modes = [build_mode(g, w, i) for i, w in enumerate(roots)]
        mode_l = lowest_mode(modes)
        omega = 2 * mode_l.omega0
        best = None
        for m in modes:
            if m.dominance is not Dominance.RIGHT:
                continue
            det = abs(abs(mode_l.omega0 - m.omega0) - omega) / omega
            if det < tol and (best is None or det < best[0]):
                best = (det, m.index)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultiplePartnersWarning)
            found = find_resonant_partner(modes, mode_l, omega, tol)
        assert (found is None) == (best is None)
        if found is not None:
            assert found.index == best[1]

    def test_multiple_partners_flagged(self):
        g = CavityGeometry(0.0, 1.0, 3.9, 1e3)
        modes = spectrum(g, 15.0)
        mode_l = lowest_mode(modes)
        with pytest.warns(MultiplePartnersWarning):
            find_resonant_partner(modes, mode_l, 2 * mode_l.omega0, tol=0.2)


class TestEffectiveParams:
    def test_xi_arithmetic(self):
        g = CavityGeometry(0.0, 0.01, 0.0391, 1e5)
        m = lowest_mode(spectrum(g, 400.0))
        assert squeezing_parameter(1e-8, m) == pytest.approx(2.5e-9 * m.omega0, rel=1e-15)

    def test_xi_transverse_suppression(self, generic):
        ratios = []
        for k in (0.0, 10.0, 100.0, 1000.0):
            g = generic.replace(k_perp=k)
            m = lowest_mode(spectrum(g, 4.0))
            ratios.append(squeezing_parameter(1e-4, m) / (1e-4 * m.omega0 / 4))
            assert ratios[-1] == pytest.approx((m.omega_x / m.omega0) ** 2, rel=1e-14)
        assert ratios == sorted(ratios, reverse=True) and ratios[-1] < 1e-5

    def test_chi_zero_without_partner(self, tuned, tuned_pair):
        mode_l = tuned_pair[0]
        p = effective_params(tuned, DriveSpec(1e-4, 2 * mode_l.omega0), mode_l)
        assert p.chi == 0.0 and p.xi > 0

    def test_chi_over_xi_order_eta(self, tuned_pair):
        mode_l, mode_r = tuned_pair
        g = mode_l.geometry
        p = effective_params(g, DriveSpec(1e-4, 2 * mode_l.omega0), mode_l, mode_r)
        ratio = abs(p.chi / p.xi) / mode_l.eta_mu
        assert 0.1 < ratio < 30

    def test_chi_gamma_converges(self):
        vals = []
        for gamma in (1e3, 1e4, 1e5):
            g = resonant_geometry(1.0, math.pi, gamma)
            mode_l, mode_r = resonant_pair(g)
            p = effective_params(g, DriveSpec(1e-4, 2 * mode_l.omega0), mode_l, mode_r)
            vals.append(p.chi * gamma / mode_l.omega0)
        assert (max(vals) - min(vals)) / abs(np.mean(vals)) < 0.01

    def test_xi_gamma_independent(self):
        xis = []
        for gamma in (1e3, 1e4, 1e5):
            g = resonant_geometry(1.0, math.pi, gamma)
            mode_l = resonant_pair(g)[0]
            xis.append(squeezing_parameter(1e-4, mode_l))
        eta = math.pi / 1e3
        assert (max(xis) - min(xis)) / xis[-1] < 2 * eta

    def test_detuned_rejected(self, tuned, tuned_pair):
        mode_l, mode_r = tuned_pair
        with pytest.raises(ResonanceError, match="detuned"):
            effective_params(tuned, DriveSpec(1e-4, 2 * mode_l.omega0 * (1 + 1e-6)), mode_l, mode_r)

    def test_symbolic_coefficients(self, tuned, tuned_pair, tuned_spectrum):
        import sympy
        from leakycavity import oracle
        modes = oracle.select_modes(tuned_spectrum, *tuned_pair)
        eps, omega = 1e-4, 2 * tuned_pair[0].omega0
        co = oracle.assemble_time_dependent_hamiltonian(tuned, DriveSpec(eps, omega), modes)
        t = sympy.symbols("t")
        a = tuned.a0 + eps * tuned.left_length * sympy.sin(omega * t)
        adot = sympy.lambdify(t, sympy.diff(a, t))
        for tv in (0.0, 0.37, 1.9):
            assert np.allclose(co.coupling(tv), co.m_geom * adot(tv), rtol=1e-13, atol=0)
        assert np.allclose(co.delta_omega2(0.0), 0.0)
