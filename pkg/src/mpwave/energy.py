"""Energy functionals, velocity thresholds, and a-priori bounds.

The variational energy of a state (psi, A) moving at velocity v is

    E = (1/2m) |grad_{j,A} psi|^2
        + (1/8 pi) ( |grad A|^2 - |((v/c).grad) A|^2 )
        + (psi, i hbar (v.grad) psi),

where grad_{j,A} is the plain covariant gradient for the scalar model
("S") and the spin-coupled one for model "P".  Completing the square in
the boost direction gives the equivalent "shifted" form

    E = (1/2m) |grad_{j,A+(mc/Q)v} psi|^2 - (Q/c)(psi, v.A psi)
        - (m v^2 / 2) |psi|^2
        + (1/8 pi) ( |grad A|^2 - |((v/c).grad) A|^2 ),

and because every gauge product in this package goes through the same
self-adjoint dealiased multiply, the two forms agree to rounding error
for arbitrary grid fields -- not just in the continuum limit.  The
coupling term is evaluated with the filtered density accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from . import pauli, spectral
from .errors import DomainGateError
from .fields import PhysParams, as_array, inner, l2_norm_sq
from .grid import Grid

#: Best constant in the Sobolev inequality |f|_{L^6} <= K_S |grad f|_{L^2}
#: on R^3, equal to (3 pi)^(-1/2) (4 / sqrt(pi))^(1/3).
K_SOBOLEV = 4.0 ** (1.0 / 3.0) / (np.sqrt(3.0) * np.pi ** (2.0 / 3.0))


def sobolev_constant() -> float:
    """Sharp constant K_S of the L^6 Sobolev embedding on R^3."""
    return K_SOBOLEV


@dataclass(frozen=True)
class EnergyBreakdown:
    """Termwise values of the variational energy (direct and shifted form)."""

    kinetic: float
    field: float
    drift: float
    total: float
    kinetic_shifted: float
    coupling: float
    rest: float
    total_shifted: float
    mass_constraint: float  # measured |psi|_{L^2}^2

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _wave_symbol(grid: Grid, p: PhysParams) -> np.ndarray:
    """Fourier symbol k^2 - (v.k)^2 / c^2 of the travelling wave operator.

    Positive away from k = 0 whenever |v| < c; vanishes identically at
    the zero mode, which is why that mode is frozen throughout.
    """
    kx, ky, kz = grid.k
    v = p.v_arr
    vk = v[0] * kx + v[1] * ky + v[2] * kz
    return grid.k2 - vk ** 2 / p.light_speed ** 2


def _grad_tensor_sq(grid: Grid, A: np.ndarray) -> float:
    """|grad (x) A|^2 = sum_{a,b} |d_a A_b|^2 over the box."""
    a_hat = grid.fft(A)
    total = 0.0
    for a in range(3):
        comp = grid.ifft(1j * grid.k[a][..., None] * a_hat)
        total += l2_norm_sq(grid, comp)
    return total


def _v_deriv_sq(grid: Grid, A: np.ndarray, v: np.ndarray) -> float:
    """|(v.grad) A|^2 over the box (not normalized by |v|)."""
    if not np.any(v):
        return 0.0
    dv = spectral.directional_derivative(grid, A, v)
    return l2_norm_sq(grid, dv)


def field_energy(grid: Grid, p: PhysParams, A, Adot) -> float:
    """Electromagnetic energy (1/8 pi) ( |curl A|^2 + |Adot / c|^2 )."""
    A = as_array(A)
    Adot = as_array(Adot)
    curl_sq = l2_norm_sq(grid, spectral.curl(grid, A))
    dot_sq = l2_norm_sq(grid, Adot) / p.light_speed ** 2
    return (curl_sq + dot_sq) / (8.0 * np.pi)


def energy_functional(grid: Grid, p: PhysParams, psi, A) -> EnergyBreakdown:
    """Evaluate the variational energy and its shifted decomposition."""
    psi = as_array(psi)
    A = as_array(A)
    v = p.v_arr
    two_m = 2.0 * p.mass

    if p.model == "P":
        gpsi = pauli.pauli_gradient(grid, p, psi, A)
        kinetic = l2_norm_sq(grid, gpsi) / two_m
        gpsi_sh = pauli.pauli_gradient(grid, p, psi, A, shift=p.mass * p.light_speed / p.charge * v)
        kinetic_sh = l2_norm_sq(grid, gpsi_sh) / two_m
    else:
        dpsi = pauli.covariant_gradient(grid, p, psi, A)
        kinetic = l2_norm_sq(grid, dpsi) / two_m
        dpsi_sh = pauli.covariant_gradient(
            grid, p, psi, A, shift=p.mass * p.light_speed / p.charge * v
        )
        kinetic_sh = l2_norm_sq(grid, dpsi_sh) / two_m

    field = (_grad_tensor_sq(grid, A) - _v_deriv_sq(grid, A, v) / p.light_speed ** 2) / (
        8.0 * np.pi
    )

    if np.any(v):
        vdpsi = spectral.directional_derivative(grid, psi, v)
        drift = float(np.real(inner(grid, psi, 1j * p.hbar * vdpsi)))
    else:
        drift = 0.0

    psi_low = spectral.dealias(grid, psi)
    dens_low = np.sum(np.abs(psi_low) ** 2, axis=-1)
    a_low = spectral.dealias(grid, A)
    coupling = -(p.charge / p.light_speed) * float(
        grid.integrate(dens_low * np.tensordot(a_low, v, axes=(-1, 0)))
    )

    lam_meas = l2_norm_sq(grid, psi)
    rest = -0.5 * p.mass * float(v @ v) * lam_meas

    total = kinetic + field + drift
    total_shifted = kinetic_sh + coupling + rest + field
    return EnergyBreakdown(
        kinetic=kinetic,
        field=field,
        drift=drift,
        total=total,
        kinetic_shifted=kinetic_sh,
        coupling=coupling,
        rest=rest,
        total_shifted=total_shifted,
        mass_constraint=lam_meas,
    )


def travelling_energy(grid: Grid, p: PhysParams, psi, A) -> float:
    """Energy carried by the travelling wave,

    E_trav = (1/2m)|grad_{j,A} psi|^2
             + lambda (1/8 pi)( |curl A|^2 + |((v/c).grad) A|^2 ).

    Note the plus sign on the convective term and the mass-constraint
    factor on the field part, in contrast with the variational energy.
    """
    psi = as_array(psi)
    A = as_array(A)
    if p.model == "P":
        kinetic = l2_norm_sq(grid, pauli.pauli_gradient(grid, p, psi, A)) / (2.0 * p.mass)
    else:
        kinetic = l2_norm_sq(grid, pauli.covariant_gradient(grid, p, psi, A)) / (2.0 * p.mass)
    curl_sq = l2_norm_sq(grid, spectral.curl(grid, A))
    conv_sq = _v_deriv_sq(grid, A, p.v_arr) / p.light_speed ** 2
    return kinetic + p.lam * (curl_sq + conv_sq) / (8.0 * np.pi)


def theta_thresholds(p: PhysParams) -> tuple[float, float]:
    """Velocity window (Theta_-, Theta_+) for boundedness from below."""
    c = p.light_speed
    if p.model == "S":
        return (-c, c)
    b = 8.0 * np.pi * K_SOBOLEV ** 3 * p.charge ** 2 * p.lam / p.hbar
    root = np.sqrt(b * b + c * c)
    return (-b - root, -b + root)


def speed_gate(p: PhysParams) -> tuple[float, float]:
    """Validate |v| against the admissible window, returning (lo, hi).

    Raises DomainGateError when |v| >= Theta_+; a zero velocity is let
    through with a warning since several quantities (thresholds, some
    bounds) degenerate there.
    """
    lo, hi = theta_thresholds(p)
    speed = p.speed
    if speed >= hi:
        raise DomainGateError(
            f"|v| = {speed:.6g} is not below the admissible threshold {hi:.6g} "
            f"for model {p.model}"
        )
    if speed == 0.0:
        warnings.warn(
            "v = 0: travelling-wave analysis degenerates to the static problem",
            stacklevel=2,
        )
    return (lo, hi)


@dataclass(frozen=True)
class BoundCheck:
    """One inequality: measured left side, computed right side."""

    lhs: float
    rhs: float
    applicable: bool

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs


@dataclass(frozen=True)
class AprioriBounds:
    """A-priori bounds evaluated on a concrete state.

    ``low_field_regime`` is True when |grad A| lies strictly below the
    case-splitting threshold; ``field_bound`` applies always, the first
    density bound only in the low-field regime and the second only in the
    complementary one.
    """

    low_field_regime: bool
    case_threshold: float
    grad_a_norm: float
    psi_l6: float
    excess: float
    field_bound: BoundCheck
    density_bound_low: BoundCheck
    density_bound_high: BoundCheck

    @property
    def all_hold(self) -> bool:
        return (
            self.field_bound.holds
            and self.density_bound_low.holds
            and self.density_bound_high.holds
        )


def psi_l6_norm(grid: Grid, psi) -> float:
    """L^6 norm of the pointwise spinor magnitude."""
    psi = as_array(psi)
    dens = np.sum(np.abs(psi) ** 2, axis=-1)
    return float(grid.integrate(dens ** 3)) ** (1.0 / 6.0)


def apriori_bounds(
    grid: Grid, p: PhysParams, psi, A, total: float | None = None
) -> AprioriBounds:
    """Check the universal field/density bounds on a given state.

    ``total`` may pass in a precomputed variational energy; otherwise it
    is evaluated here.  All bounds are expressed through the energy excess
    E + (m v^2 / 2) lambda, which is nonnegative whenever the lower bound
    theory applies.
    """
    speed_gate(p)
    if p.speed == 0.0:
        raise DomainGateError("a-priori bounds are stated for 0 < |v| only")
    if total is None:
        total = energy_functional(grid, p, psi, A).total

    c = p.light_speed
    v2 = p.speed ** 2
    lam = p.lam
    K = K_SOBOLEV
    lo, hi = theta_thresholds(p)
    gap = (hi - p.speed) * (p.speed - lo)
    c2mv2 = c * c - v2

    grad_a = np.sqrt(_grad_tensor_sq(grid, as_array(A)))
    psi6 = psi_l6_norm(grid, psi)
    excess = total + 0.5 * p.mass * v2 * lam

    case_threshold = (
        16.0 * np.pi * K * c * abs(p.charge) * lam ** 0.75 * p.speed / c2mv2 * psi6 ** 0.5
    )
    low = grad_a < case_threshold

    rhs_a = (
        2.0 ** 8 * np.pi ** 3 * K ** 6 * c ** 2 * p.charge ** 4 * p.mass * lam ** 3
        * v2 ** 2 / (p.hbar ** 2 * c2mv2 ** 2 * gap)
        + 16.0 * np.pi * c ** 2 / c2mv2 * excess
    )
    field_bound = BoundCheck(lhs=grad_a ** 2, rhs=rhs_a, applicable=True)

    rhs_low = (
        4.0 * p.mass * K ** 2 / p.hbar ** 2 * c2mv2 / gap * excess
        + 2.0 ** 6 * np.pi ** 2 * K ** 8 * p.charge ** 4 * p.mass ** 2 * lam ** 3
        * v2 ** 2 / (p.hbar ** 4 * gap ** 2)
    )
    density_bound_low = BoundCheck(lhs=psi6 ** 2, rhs=rhs_low, applicable=low)

    rhs_high = c2mv2 / (16.0 * np.pi * K ** 2 * p.charge ** 2 * lam ** 1.5 * v2) * excess
    density_bound_high = BoundCheck(lhs=psi6, rhs=rhs_high, applicable=not low)

    return AprioriBounds(
        low_field_regime=low,
        case_threshold=case_threshold,
        grad_a_norm=grad_a,
        psi_l6=psi6,
        excess=excess,
        field_bound=field_bound,
        density_bound_low=density_bound_low,
        density_bound_high=density_bound_high,
    )


__all__ = [
    "K_SOBOLEV",
    "sobolev_constant",
    "EnergyBreakdown",
    "field_energy",
    "energy_functional",
    "travelling_energy",
    "theta_thresholds",
    "speed_gate",
    "BoundCheck",
    "AprioriBounds",
    "psi_l6_norm",
    "apriori_bounds",
]
