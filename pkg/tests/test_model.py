"""Parameter model: normalization, steady-state cubic, stability."""

import math

import numpy as np
import pytest
from scipy import constants

from optocool import (
    InvalidParams,
    NoStableBranch,
    NormalizedParams,
    PhysicalParams,
    denormalize,
    normalize,
    solve_steady_state,
    stability_check,
    thermal_occupancy,
)


def si_params(**overrides):
    base = dict(
        omega_m=2 * math.pi * 1.0e7,
        kappa=2 * math.pi * 1.0e6,
        gamma=2 * math.pi * 1.0e3,
        mass=1.0e-12,
        cavity_length=1.0e-3,
        omega_c=2 * math.pi * constants.c / 1.064e-6,
        delta_c=2 * math.pi * 1.0e6,
        drive_intensity=1.0e10,
        temperature=0.1,
    )
    base.update(overrides)
    return PhysicalParams(**base)


class TestThermalOccupancy:
    def test_zero_temperature_is_exact_zero(self):
        assert thermal_occupancy(0.0, 1e7) == 0.0

    def test_occupancy_one_at_ln2(self):
        omega = 1.0e8
        t = constants.hbar * omega / (constants.k * math.log(2.0))
        assert thermal_occupancy(t, omega) == pytest.approx(1.0, rel=1e-12)

    def test_occupancy_hundred(self):
        # invert n = 1/(exp(x) - 1) at n = 100: x = ln(1.01)
        omega = 2 * math.pi * 1.0e7
        t = constants.hbar * omega / (constants.k * math.log(1.01))
        assert thermal_occupancy(t, omega) == pytest.approx(100.0, rel=1e-10)

    def test_huge_ratio_underflows_to_zero(self):
        assert thermal_occupancy(1e-30, 1e10) == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(InvalidParams):
            thermal_occupancy(-1.0, 1e7)
        with pytest.raises(InvalidParams):
            thermal_occupancy(1.0, 0.0)


class TestParamTypes:
    def test_physical_invariants(self):
        with pytest.raises(InvalidParams):
            si_params(mass=-1.0)
        with pytest.raises(InvalidParams):
            si_params(gamma=2 * math.pi * 2.0e7)  # overdamped
        with pytest.raises(InvalidParams):
            si_params(drive_intensity=-1.0)

    def test_normalized_invariants(self):
        with pytest.raises(InvalidParams):
            NormalizedParams(b=0.0, phi=1, phi_nl=0, q_factor=100, n_t_i=0)
        with pytest.raises(InvalidParams):
            NormalizedParams(b=1, phi=1, phi_nl=-0.1, q_factor=100, n_t_i=0)
        with pytest.raises(InvalidParams):
            NormalizedParams(b=1, phi=1, phi_nl=0, q_factor=0.5, n_t_i=0)

    def test_coupling_constant_scaling(self):
        p = si_params()
        heavier = si_params(mass=4.0 * p.mass)
        assert heavier.coupling_constant == pytest.approx(
            p.coupling_constant / 2.0, rel=1e-12
        )
        longer = si_params(cavity_length=2.0 * p.cavity_length)
        assert longer.coupling_constant == pytest.approx(
            p.coupling_constant / 2.0, rel=1e-12
        )


class TestSteadyState:
    def test_no_drive_single_stable_root(self):
        for phi_c in (-3.0, 0.0, 0.5, 2.0, 10.0):
            ss = solve_steady_state(phi_c, 0.0)
            assert len(ss.branches) == 1
            br = ss.branches[0]
            assert br.u == 0.0
            assert br.phi_eff == phi_c
            assert br.stable and not br.marginal

    def test_double_root_factorization(self):
        # u^3 - 4u^2 + 5u - 2 = (u - 1)^2 (u - 2): expanding confirms the
        # coefficients of u (1 + phi_c^2) = 5 and -2 phi_c = -4 at P = 2
        ss = solve_steady_state(2.0, 2.0)
        us = [br.u for br in ss.branches]
        assert us == pytest.approx([1.0, 1.0, 2.0], abs=1e-6)
        assert [br.marginal for br in ss.branches] == [True, True, False]
        assert [br.stable for br in ss.branches] == [False, False, True]
        assert ss.branches[2].phi_eff == pytest.approx(0.0, abs=1e-9)

    def test_residuals_below_tolerance(self):
        for phi_c in (0.5, 2.0, 5.0):
            for drive in (0.1, 2.0, 40.0):
                ss = solve_steady_state(phi_c, drive)
                for br in ss.branches:
                    resid = br.u * (1 + (phi_c - br.u) ** 2) - drive
                    assert abs(resid) < 1e-9 * max(1.0, drive)

    def test_monotone_below_threshold(self):
        # discriminant scan oracle: phi_c = 0.5 < sqrt(3) never folds
        for drive in np.linspace(0.01, 10.0, 40):
            assert len(solve_steady_state(0.5, float(drive)).branches) == 1

    def test_bistability_only_above_sqrt3(self):
        saw_bistable = False
        for phi_c in np.linspace(0.2, 3.0, 29):
            for drive in np.linspace(0.05, 6.0, 60):
                branches = solve_steady_state(float(phi_c), float(drive)).branches
                distinct = len({round(br.u, 6) for br in branches})
                if distinct == 3:
                    assert phi_c > math.sqrt(3.0)
                    saw_bistable = True
        assert saw_bistable

    def test_branch_count_odd_with_multiplicity(self):
        for phi_c in np.linspace(0.3, 2.9, 14):
            for drive in np.linspace(0.0, 5.0, 26):
                n = len(solve_steady_state(float(phi_c), float(drive)).branches)
                assert n in (1, 3)

    def test_middle_branch_unstable(self):
        ss = solve_steady_state(2.0, 1.9)  # inside the bistable window
        assert len(ss.branches) == 3
        assert not ss.branches[1].stable

    def test_negative_drive_rejected(self):
        with pytest.raises(InvalidParams):
            solve_steady_state(1.0, -0.5)


class TestStabilityCheck:
    def test_resonant_drive(self):
        p = NormalizedParams(b=1, phi=0.0, phi_nl=5.0, q_factor=100, n_t_i=0)
        rep = stability_check(p)
        assert rep.margin == pytest.approx(1.0)
        assert rep.stable

    def test_blue_detuned_unstable(self):
        p = NormalizedParams(b=1, phi=-0.5, phi_nl=2.0, q_factor=100, n_t_i=0)
        rep = stability_check(p)
        assert rep.margin == pytest.approx(-0.75)
        assert not rep.stable

    def test_red_side_always_stable(self):
        for b in (0.5, 2.0, 10.0):
            for phi_nl in (0.0, 0.3, 5.0):
                p = NormalizedParams(b=b, phi=b, phi_nl=phi_nl, q_factor=50, n_t_i=1)
                assert stability_check(p).stable


class TestNormalize:
    def test_undriven_cavity(self):
        p = si_params(drive_intensity=0.0)
        n = normalize(p)
        assert n.phi_nl == 0.0
        assert n.phi == pytest.approx(p.delta_c / p.kappa, rel=1e-12)

    def test_si_ratios(self):
        p = si_params()
        n = normalize(p)
        assert n.b == pytest.approx(10.0, rel=1e-12)
        assert n.q_factor == pytest.approx(1.0e4, rel=1e-12)

    def test_detuning_locked_to_mechanical_frequency(self):
        # choose the drive so that the working branch sits at u, then pick
        # delta_c so the dressed detuning lands exactly on Omega_m
        p0 = si_params(drive_intensity=0.0)
        b = p0.omega_m / p0.kappa
        u = 0.05
        drive_norm = u * (1.0 + b * b)
        g = p0.coupling_constant
        a_in_sq = drive_norm * p0.omega_m * p0.kappa**2 / (2 * g * g)
        p = si_params(delta_c=(b + u) * p0.kappa, drive_intensity=a_in_sq)
        n = normalize(p)
        assert n.phi == pytest.approx(b, rel=1e-9)
        assert n.phi_nl == pytest.approx(u, rel=1e-9)

    def test_scale_invariance_of_normalization(self):
        # rescaling all rates by s (and the drive by s^4, T by s) leaves the
        # dimensionless point, and hence the stability margin, unchanged
        p = si_params()
        n = normalize(p)
        s = 7.3
        scaled = PhysicalParams(
            omega_m=p.omega_m * s,
            kappa=p.kappa * s,
            gamma=p.gamma * s,
            mass=p.mass,
            cavity_length=p.cavity_length,
            omega_c=p.omega_c,
            delta_c=p.delta_c * s,
            drive_intensity=p.drive_intensity * s**4,
            temperature=p.temperature * s,
        )
        m = normalize(scaled)
        assert m.b == pytest.approx(n.b, rel=1e-12)
        assert m.phi == pytest.approx(n.phi, rel=1e-9)
        assert m.phi_nl == pytest.approx(n.phi_nl, rel=1e-9)
        assert m.n_t_i == pytest.approx(n.n_t_i, rel=1e-9)
        assert stability_check(m).margin == pytest.approx(
            stability_check(n).margin, rel=1e-9
        )

    def test_no_stable_branch(self):
        # single real root deep on the blue side violates the static margin
        phi_c, u = -0.45, 2.0
        drive = u * (1 + (phi_c - u) ** 2)
        ss = solve_steady_state(phi_c, drive)
        assert len(ss.branches) == 1 and not ss.branches[0].stable
        p0 = si_params(drive_intensity=0.0)
        g = p0.coupling_constant
        a_in_sq = drive * p0.omega_m * p0.kappa**2 / (2 * g * g)
        p = si_params(delta_c=phi_c * p0.kappa, drive_intensity=a_in_sq)
        with pytest.raises(NoStableBranch):
            normalize(p)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "n",
        [
            NormalizedParams(b=10, phi=10, phi_nl=0.1, q_factor=1e4, n_t_i=100),
            NormalizedParams(b=2, phi=1.3, phi_nl=0.01, q_factor=500, n_t_i=0),
            NormalizedParams(b=0.7, phi=-0.2, phi_nl=0.05, q_factor=1e5, n_t_i=3.5),
        ],
    )
    def test_normalize_after_denormalize_is_identity(self, n):
        p = denormalize(n)
        ss = solve_steady_state(p.delta_c / p.kappa, p.drive_strength)
        branch = min(ss.branches, key=lambda br: abs(br.u - n.phi_nl))
        m = normalize(p, steady=ss, branch=branch)
        assert m.b == pytest.approx(n.b, rel=1e-12)
        assert m.phi == pytest.approx(n.phi, rel=1e-12, abs=1e-14)
        assert m.phi_nl == pytest.approx(n.phi_nl, rel=1e-12, abs=1e-16)
        assert m.q_factor == pytest.approx(n.q_factor, rel=1e-12)
        assert m.n_t_i == pytest.approx(n.n_t_i, rel=1e-12, abs=1e-16)
