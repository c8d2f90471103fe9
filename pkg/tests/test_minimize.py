"""Gradients, the quadratic field subproblem, and the descent driver."""

import numpy as np
import pytest

from mpwave import Grid, PhysParams
from mpwave import spectral
from mpwave.energy import energy_functional, field_energy
from mpwave.errors import InputError, SolverError
from mpwave.fields import inner, l2_norm_sq, random_fields
from mpwave.minimize import (
    MinimizeConfig,
    el_residual,
    grad_A,
    grad_psi,
    lagrange_theta,
    minimize,
    omega_from_theta,
    plane_wave_state,
    solve_vector_potential,
)

from conftest import params, rel


def lattice_energy(grid, p):
    """Energy of the plane wave on the lattice vector nearest m v / hbar."""
    dk = 2.0 * np.pi / grid.box_l
    kstar = np.round(p.mass * p.v_arr / (p.hbar * dk)) * dk
    k2 = float(kstar @ kstar)
    return p.lam * (
        p.hbar ** 2 * k2 / (2.0 * p.mass) - p.hbar * float(p.v_arr @ kstar)
    )


class TestGradients:
    """Both energy terms are quadratic, so a central difference matches
    the analytic gradient to rounding, not just to O(eps^2)."""

    def fd_psi(self, grid, p, psi, A, delta, eps=1e-3):
        e_plus = energy_functional(grid, p, psi + eps * delta, A).total
        e_minus = energy_functional(grid, p, psi - eps * delta, A).total
        return (e_plus - e_minus) / (2.0 * eps)

    def test_grad_psi_first_model(self, grid16, rng):
        p = params("S", v=0.2)
        psi, A = random_fields(grid16, p, seed=51)
        delta = rng.standard_normal(grid16.shape + (2,)) + 1j * rng.standard_normal(
            grid16.shape + (2,)
        )
        G = grad_psi(grid16, p, psi.data, A.data)
        slope = 2.0 * float(np.real(inner(grid16, G, delta)))
        fd = self.fd_psi(grid16, p, psi.data, A.data, delta)
        assert rel(fd, slope) < 1e-9

    def test_grad_psi_second_model(self, grid16, rng):
        # the spin-coupled operator identity behind grad_psi is exact
        # once single mode products stay inside the band
        p = params("P", v=0.2)
        mm = grid16.mode_cut // 2
        psi, A = random_fields(grid16, p, seed=52, max_mode=mm)
        delta = rng.standard_normal(grid16.shape + (2,)) + 1j * rng.standard_normal(
            grid16.shape + (2,)
        )
        G = grad_psi(grid16, p, psi.data, A.data)
        slope = 2.0 * float(np.real(inner(grid16, G, delta)))
        fd = self.fd_psi(grid16, p, psi.data, A.data, delta)
        assert rel(fd, slope) < 1e-9

    @pytest.mark.parametrize("model", ["S", "P"])
    def test_grad_A(self, grid16, rng, model):
        p = params(model, v=0.2)
        psi, A = random_fields(grid16, p, seed=53)
        raw = rng.standard_normal(grid16.shape + (3,))
        delta = spectral.zero_mean(grid16, spectral.helmholtz_project(grid16, raw))
        G = grad_A(grid16, p, psi.data, A.data)
        slope = float(grid16.integrate(np.sum(G * delta, axis=-1)))
        eps = 1e-3
        e_plus = energy_functional(grid16, p, psi.data, A.data + eps * delta).total
        e_minus = energy_functional(grid16, p, psi.data, A.data - eps * delta).total
        fd = (e_plus - e_minus) / (2.0 * eps)
        assert rel(fd, slope) < 1e-9

    @pytest.mark.parametrize("model", ["S", "P"])
    def test_multiplier_tangency(self, grid16, model):
        """<psi, G + hbar theta psi> = 0 at the measured multiplier.

        The identity rests on <psi, lap psi> = |grad psi|^2, which for
        the spin-coupled model is exact on band-limited states only.
        """
        p = params(model, v=0.15)
        mm = grid16.mode_cut // 2 if model == "P" else None
        psi, A = random_fields(grid16, p, seed=54, max_mode=mm)
        theta = lagrange_theta(grid16, p, psi.data, A.data)
        G = grad_psi(grid16, p, psi.data, A.data)
        proj = inner(grid16, psi.data, G + p.hbar * theta * psi.data)
        scale = np.sqrt(l2_norm_sq(grid16, G) * l2_norm_sq(grid16, psi.data))
        assert abs(proj) < 1e-12 * scale

    def test_theta_against_energy_at_zero_field(self, grid16):
        """With A = 0 the multiplier reduces to -E / (hbar lambda)."""
        p = params("S", v=0.1, hbar=0.9, mass=1.2)
        psi, _ = random_fields(grid16, p, seed=55)
        A = np.zeros(grid16.shape + (3,))
        theta = lagrange_theta(grid16, p, psi.data, A)
        total = energy_functional(grid16, p, psi.data, A).total
        assert rel(theta, -total / (p.hbar * p.lam)) < 1e-12

    def test_theta_matches_residual_report(self, grid16):
        p = params("P", v=0.1)
        psi, A = random_fields(grid16, p, seed=56, max_mode=grid16.mode_cut // 2)
        theta = lagrange_theta(grid16, p, psi.data, A.data)
        res = el_residual(grid16, p, psi.data, A.data)
        assert rel(theta, res.theta) < 1e-12

    def test_omega_formula(self, grid16):
        p = params("S", v=0.1)
        _, A = random_fields(grid16, p, seed=57)
        adot = spectral.directional_derivative(grid16, A.data, p.v_arr)
        expect = field_energy(grid16, p, A.data, adot) / p.hbar - 0.25
        assert rel(omega_from_theta(grid16, p, A.data, 0.25), expect) < 1e-14


class TestVectorPotentialSolve:
    @pytest.mark.parametrize("model", ["S", "P"])
    def test_stationarity_after_solve(self, grid16, model):
        p = params(model, v=0.2)
        psi, _ = random_fields(grid16, p, seed=61)
        A, n_ops = solve_vector_potential(grid16, p, psi.data, tol=1e-12)
        assert n_ops > 0
        res = el_residual(grid16, p, psi.data, A.data)
        assert res.a_rel < 1e-8
        div = spectral.divergence(grid16, A.data)
        assert np.max(np.abs(div)) < 1e-9 * max(np.max(np.abs(A.data)), 1e-30)
        assert np.max(np.abs(np.mean(A.data, axis=(0, 1, 2)))) < 1e-14

    def test_warm_start_stays_put(self, grid16):
        p = params("S", v=0.2)
        psi, _ = random_fields(grid16, p, seed=61)
        A, _ = solve_vector_potential(grid16, p, psi.data, tol=1e-12)
        A2, _ = solve_vector_potential(grid16, p, psi.data, A0=A.data, tol=1e-12)
        scale = max(np.max(np.abs(A.data)), 1e-30)
        assert np.max(np.abs(A2.data - A.data)) < 1e-6 * scale

    def test_superluminal_symbol_rejected(self, grid16):
        p = params("S", v=2.0)
        psi, _ = random_fields(grid16, p, seed=62)
        with pytest.raises(SolverError):
            solve_vector_potential(grid16, p, psi.data)


class TestPlaneWaveState:
    @pytest.mark.parametrize("model", ["S", "P"])
    def test_exactly_stationary(self, grid16, model):
        p = params(model, v=0.1)
        psi, A = plane_wave_state(grid16, p)
        res = el_residual(grid16, p, psi.data, A.data)
        assert res.max_rel < 1e-10
        br = energy_functional(grid16, p, psi.data, A.data)
        assert rel(br.total, lattice_energy(grid16, p)) < 1e-12

    def test_snaps_to_lattice(self, grid16):
        dk = 2.0 * np.pi / grid16.box_l
        psi, _ = plane_wave_state(grid16, params("S", v=0.12))
        ph = grid16.fft(psi.data[..., 0])
        idx = np.unravel_index(np.argmax(np.abs(ph)), ph.shape)
        k_at = np.array([grid16.k[a][idx] for a in range(3)])
        assert np.allclose(k_at, [dk, 0.0, 0.0])
        # below half a lattice spacing the carrier drops to zero
        psi0, _ = plane_wave_state(grid16, params("S", v=0.05))
        assert np.max(np.abs(psi0.data - psi0.data[0, 0, 0])) < 1e-12


class TestMinimize:
    @pytest.mark.parametrize("model", ["S", "P"])
    def test_plane_start_is_already_converged(self, grid16, model):
        p = params(model, v=0.1)
        rep = minimize(grid16, p, MinimizeConfig(init="plane"))
        assert rep.converged
        assert rep.iterations <= 20
        assert rel(rep.energy, lattice_energy(grid16, p)) < 1e-12

    @pytest.mark.parametrize("model", ["S", "P"])
    def test_trial_start_reaches_ground_state(self, grid16, model):
        p = params(model, v=0.1)
        rep = minimize(grid16, p, MinimizeConfig(init="trial"))
        assert rep.converged, rep.message
        assert rep.residual_psi < MinimizeConfig().residual_tol
        assert rel(rep.energy, lattice_energy(grid16, p)) < 1e-9
        assert rep.breakdown.mass_constraint == pytest.approx(p.lam, rel=1e-12)
        # the trace never moves uphill past line-search tolerance
        trace = np.asarray(rep.energy_trace, dtype=float)
        assert np.all(np.diff(trace) <= 1e-12)
        # report is self-consistent
        assert rel(
            rep.omega, omega_from_theta(grid16, p, rep.A.data, rep.theta)
        ) < 1e-12

    def test_given_init_requires_both_fields(self, grid16):
        p = params("S", v=0.1)
        with pytest.raises(InputError):
            minimize(grid16, p, MinimizeConfig(init="given"))

    def test_config_validation(self):
        with pytest.raises(InputError):
            MinimizeConfig(a_solver="nope")
        with pytest.raises(InputError):
            MinimizeConfig(init="nope")
