import numpy as np
import pytest

from dampedwave import dispersion as dsp
from dampedwave import pencil as pv
from dampedwave import quasimodes as qmm
from dampedwave.errors import HypothesisViolated, ParameterError, UnderResolved, WindowTooSmall

X2 = qmm.damping_monomial(1)       # a(x) = x^2
X4 = qmm.damping_monomial(2)       # a(x) = x^4
Q0 = qmm.constant_potential(0.0)


class TestAmplitude:
    def test_quadratic_damping(self):
        A = qmm.amplitude(-1.0, X2, Q0)
        assert A(2.0) == pytest.approx(7.0)
        assert A.deriv(2.0) == pytest.approx(8.0)
        # positive exactly beyond the turning point 1/sqrt(2)
        assert A(0.71) > 0 > A(0.70)

    def test_shifted_damping(self):
        A = qmm.amplitude(-1.0, qmm.damping_monomial(1, 3.0), Q0)
        assert A(2.0) == pytest.approx(2 * 4 + 5)

    def test_quartic_log_derivative_decays(self):
        A = qmm.amplitude(-2.0, X4, qmm.constant_potential(1.0))
        assert A(1.5) == pytest.approx(4 * 1.5**4 - 5)
        xs = np.array([5.0, 10.0, 50.0])
        ratios = np.abs(A.deriv(xs)) / A(xs)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_lambda_zero_rejected(self):
        with pytest.raises(ParameterError):
            qmm.amplitude(0.0, X2, Q0)

    def test_window_too_small(self):
        # m=1 window dips below the turning point of A = 2x^2 - 1
        with pytest.raises(WindowTooSmall):
            probe = qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=1)
            qmm.build_quasimode(probe)


class TestBuild:
    def test_rho_matches_left_edge_value(self):
        # |A'|/A decreases for the monomial dampings, so the sup over (m, inf)
        # is attained at t = m
        probe = qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=20)
        A = probe.amplitude
        assert probe.rho_m == pytest.approx(abs(A.deriv(20.0)) / A(20.0), rel=1e-6)

    def test_support_and_normalization(self):
        probe = qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=10)
        qm = qmm.build_quasimode(probe)
        left = probe.m * probe.rho_m ** -0.5
        right = (probe.m + 1) * probe.rho_m ** -0.5
        nonzero = qm.x[np.abs(qm.values) > 0]
        assert nonzero.min() >= left - 1e-9
        assert nonzero.max() <= right + 1e-9
        grad = (qm.values[1:] - qm.values[:-1]) / qm.h
        assert np.sqrt(qm.h) * np.linalg.norm(grad) == pytest.approx(1.0, abs=1e-12)

    def test_support_midpoint_drifts(self):
        mids, scales = [], []
        for m in (10, 20, 40):
            probe = qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=m)
            qm = qmm.build_quasimode(probe)
            mids.append(qm.support_midpoint)
            scales.append(m * probe.rho_m ** -0.5)
        assert all(a < b for a, b in zip(mids, mids[1:]))
        for mid, scale in zip(mids, scales):
            assert scale < mid < 1.3 * scale

    def test_max_points_budget(self):
        probe = qmm.EssentialProbe(lam=-5.0, a=X2, q=Q0, m=40)
        with pytest.raises(UnderResolved):
            qmm.build_quasimode(probe, max_points=1000)

    def test_constant_amplitude_residual_is_pure_cutoff_term(self):
        # constant amplitude isolates the cutoff-commutator contribution:
        # num^2 = 4 A0 ||cut'||^2 + ||cut''||^2, den^2 = A0 ||cut||^2 + ||cut'||^2
        a_const = qmm.PolyCoefficient(power=0, scale=0.0, offset=8.0)
        probe = qmm.EssentialProbe(lam=-1.0, a=a_const, q=Q0, m=5, rho_m=0.04)
        qm = qmm.build_quasimode(probe, points_per_wavelength=60)
        W = qm.window[1]
        A0 = 15.0   # A = -q - 2*lam*a - lam^2 = 16 - 1
        t = np.linspace(0, 1, 100001)
        cut = qmm.standard_bump(t)
        dcut = np.gradient(cut, t[1] - t[0])
        d2cut = np.gradient(dcut, t[1] - t[0])
        n0 = np.trapezoid(cut**2, t)
        n1 = np.trapezoid(dcut**2, t) / W**2
        n2 = np.trapezoid(d2cut**2, t) / W**4
        expected = np.sqrt((4 * A0 * n1 + n2) / (A0 * n0 + n1))
        assert qm.residual_ratio == pytest.approx(expected, rel=0.05)

    def test_plane_wave_naive_phase_residual_is_h2(self):
        # raw continuum phase on a uniform grid: the exact discrete-symbol
        # mismatch |4/h^2 sin^2(kh/2) - k^2| / k ~ k^3 h^2 / 12
        k = 3.0
        floors = []
        for ppw in (40, 80):
            h = 2 * np.pi / k / ppw
            x = h * np.arange(int(60.0 / h))
            vals = np.exp(1j * k * x)
            num, den = qmm._discrete_norms(vals, h, np.full(x.size, k * k))
            floors.append(num / den)
            assert num / den == pytest.approx(k**3 * h**2 / 12, rel=0.05)
        assert floors[0] / floors[1] == pytest.approx(4.0, rel=0.1)


class TestResidualDecay:
    @pytest.mark.parametrize("damping", [X2, X4], ids=["x2", "x4"])
    def test_sequence_decay_minimal_windows(self, damping):
        ratios = []
        for m in (10, 20, 40):
            probe = qmm.EssentialProbe(lam=-1.0, a=damping, q=Q0, m=m)
            ratios.append(qmm.build_quasimode(probe).residual_ratio)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_r40_below_r10(self):
        r10 = qmm.build_quasimode(qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=10)).residual_ratio
        r40 = qmm.build_quasimode(qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=40)).residual_ratio
        assert r40 < r10

    def test_decay_across_lambda_values(self):
        for lam in (-0.1, -5.0):
            rows = qmm.decay_experiment(lam, X2, Q0, [10, 20, 40])
            ratios = [r["ratio"] for r in rows]
            assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_residual_dominated_by_pencil_action(self):
        # the assembled tridiagonal pencil applied to the quasimode gives the
        # same residual (B = 0 here), up to discretization-level slack
        probe = qmm.EssentialProbe(lam=-1.0, a=X2, q=Q0, m=15)
        qm = qmm.build_quasimode(probe)
        params = dsp.PencilParams(1, 0.0, 0.0)
        gp = pv.GridPencil(
            params=params, L=0.0, N=qm.x.size,
            a0_diag=2.0 / qm.h**2 + np.zeros(qm.x.size),
            a0_off=np.full(qm.x.size - 1, -1.0 / qm.h**2),
            a1_diag=2.0 * qm.x**2,
        )
        t_phi = gp.t_apply(probe.lam, qm.values)
        grad = (qm.values[1:] - qm.values[:-1]) / qm.h
        pencil_ratio = np.linalg.norm(t_phi[1:-1]) / np.linalg.norm(grad)
        assert pencil_ratio <= qm.residual_ratio + 1e-10


class TestConeSequence:
    def test_zero_potential_slope(self):
        rows = qmm.cone_decay_experiment(Q0, [10, 20, 40, 80])
        slope = qmm.loglog_slope([r["m"] for r in rows], [r["ratio"] for r in rows])
        assert slope == pytest.approx(-0.5, abs=0.02)

    def test_lorentz_potential_decays(self):
        q = qmm.SampledCoefficient(lambda x: 1.0 / (1.0 + x**2))
        r5 = qmm.cone_sequence(q, 5).residual_ratio
        r20 = qmm.cone_sequence(q, 20).residual_ratio
        assert r20 < r5

    def test_constant_potential_rejected(self):
        q = qmm.constant_potential(1.0)
        with pytest.raises(HypothesisViolated):
            qmm.cone_sequence(q, 10)
