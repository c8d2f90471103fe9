"""Covariant derivatives, Pauli algebra, and gauge currents.

Spinors are arrays of shape (n, n, n, 2) with the spin index last.  The
magnetic covariant derivative acting on a spinor is

    D_a psi = i*hbar d_a psi + (Q/c) A_a psi,        a = 1, 2, 3,

where the product A_a psi is evaluated through the dealiased multiply
(see :mod:`mpwave.spectral`), so each D_a is exactly self-adjoint for the
grid inner product.  The spin-coupled ("Pauli") gradient is sigma . D.

``covariant_laplacian`` returns sum_a D_a D_a psi for the scalar model and
the Lichnerowicz form for the spin-coupled model,

    (sigma . D)^2 psi = sum_a D_a D_a psi - (hbar*Q/c) sigma . B psi,

with B the curl of the dealiased vector potential.  The two sides of the
Lichnerowicz identity agree exactly whenever psi and A are band limited to
half the dealiasing cutoff (products of three such factors stay below the
grid Nyquist band); for rougher fields they differ by the aliasing residue
of the cubic terms only.
"""
from __future__ import annotations

import numpy as np

from . import spectral
from .fields import PhysParams, as_array
from .grid import Grid

#: Pauli matrices, shape (3, 2, 2).
SIGMA = np.array(
    [
        [[0.0 + 0.0j, 1.0 + 0.0j], [1.0 + 0.0j, 0.0 + 0.0j]],
        [[0.0 + 0.0j, 0.0 - 1.0j], [0.0 + 1.0j, 0.0 + 0.0j]],
        [[1.0 + 0.0j, 0.0 + 0.0j], [0.0 + 0.0j, -1.0 + 0.0j]],
    ]
)


_arr = as_array


def sigma_dot(vec: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Contract a 3-vector of scalar fields with the Pauli matrices.

    ``vec`` has shape (..., 3) or (3,), ``psi`` has shape (..., 2); the
    result is sum_a vec_a (sigma^a psi).
    """
    vec = np.asarray(vec)
    if vec.ndim == 1:
        mat = np.tensordot(vec, SIGMA, axes=(0, 0))
        return np.einsum("ij,...j->...i", mat, psi)
    out = np.zeros_like(psi, dtype=np.result_type(vec.dtype, psi.dtype, np.complex128))
    for a in range(3):
        out += vec[..., a, None] * np.einsum("ij,...j->...i", SIGMA[a], psi)
    return out


def sigma_identity_check(f: np.ndarray, g: np.ndarray) -> float:
    """Max-norm defect of (sigma.f)(sigma.g) = (f.g) I + i sigma.(f x g).

    ``f`` and ``g`` are complex 3-vectors (or arrays broadcastable against
    SIGMA contraction).  Returns the largest absolute entry of the
    difference of the two 2x2 matrix expressions.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    mf = np.tensordot(f, SIGMA, axes=(-1, 0))
    mg = np.tensordot(g, SIGMA, axes=(-1, 0))
    lhs = mf @ mg
    dot = np.sum(f * g, axis=-1)
    crs = np.cross(f, g)
    rhs = dot[..., None, None] * np.eye(2) + 1.0j * np.tensordot(crs, SIGMA, axes=(-1, 0))
    return float(np.max(np.abs(lhs - rhs)))


def _low_pass(grid: Grid, A, a_low) -> np.ndarray:
    """Resolve the optional cached dealiased vector potential."""
    if a_low is not None:
        return _arr(a_low)
    return spectral.dealias(grid, _arr(A))


def covariant_gradient(
    grid: Grid,
    p: PhysParams,
    psi,
    A,
    shift: np.ndarray | None = None,
    a_low: np.ndarray | None = None,
) -> np.ndarray:
    """All three components D_a psi, stacked as (n, n, n, 3, 2).

    ``shift`` is an optional constant 3-vector added to A.  A constant
    cannot alias, so it multiplies psi directly instead of passing through
    the dealiased product; this keeps the algebra of the boosted gauge
    field A + (mc/Q) v exact at grid level.

    ``a_low`` may carry a precomputed dealias(A) (it is recomputed here
    otherwise); callers that apply many derivatives against one A save
    the repeated band limiting.
    """
    psi = _arr(psi)
    a_low = _low_pass(grid, A, a_low)
    mask = grid.dealias_mask[..., None]
    out = np.empty(psi.shape[:3] + (3, 2), dtype=complex)
    psi_hat = grid.fft(psi)
    psi_low = grid.ifft(psi_hat * mask)
    kvec = grid.k
    coef = p.charge / p.light_speed
    for a in range(3):
        dpsi = grid.ifft(1j * kvec[a][..., None] * psi_hat)
        prod_hat = grid.fft(a_low[..., a, None] * psi_low)
        out[..., a, :] = 1j * p.hbar * dpsi + coef * grid.ifft(prod_hat * mask)
    if shift is not None:
        shift = np.asarray(shift, dtype=float)
        out += coef * shift[None, None, None, :, None] * psi[..., None, :]
    return out


def pauli_gradient(
    grid: Grid,
    p: PhysParams,
    psi,
    A,
    shift: np.ndarray | None = None,
    a_low: np.ndarray | None = None,
) -> np.ndarray:
    """sigma . D psi as an (n, n, n, 2) spinor."""
    dpsi = covariant_gradient(grid, p, psi, A, shift=shift, a_low=a_low)
    out = np.zeros(dpsi.shape[:3] + (2,), dtype=complex)
    for a in range(3):
        out += np.einsum("ij,...j->...i", SIGMA[a], dpsi[..., a, :])
    return out


def covariant_laplacian(
    grid: Grid,
    p: PhysParams,
    psi,
    A,
    model: str | None = None,
    a_low: np.ndarray | None = None,
) -> np.ndarray:
    """sum_a D_a D_a psi, plus the spin-curvature term for model "P".

    The scalar part reuses ``covariant_gradient`` for the inner derivative
    and applies each D_a once more, so self-adjointness of the individual
    factors carries over:  <psi, covariant_laplacian psi> = |D psi|^2
    exactly.  For model "P" the Lichnerowicz correction - (hbar Q / c)
    sigma . B psi is added, with B = curl of the dealiased A and the
    product again dealiased.
    """
    psi = _arr(psi)
    if model is None:
        model = p.model
    a_low = _low_pass(grid, A, a_low)
    mask = grid.dealias_mask[..., None]
    dpsi = covariant_gradient(grid, p, psi, A, a_low=a_low)
    kvec = grid.k
    coef = p.charge / p.light_speed
    acc_hat = np.zeros_like(psi)
    for a in range(3):
        comp_hat = grid.fft(dpsi[..., a, :])
        acc_hat += 1j * p.hbar * (1j * kvec[a][..., None]) * comp_hat
        comp_low = grid.ifft(comp_hat * mask)
        acc_hat += coef * mask * grid.fft(a_low[..., a, None] * comp_low)
    if model == "P":
        b_field = spectral.curl(grid, a_low)
        psi_low = grid.ifft(grid.fft(psi) * mask)
        for a in range(3):
            spin_a = b_field[..., a, None] * np.einsum("ij,...j->...i", SIGMA[a], psi_low)
            acc_hat -= p.hbar * coef * mask * grid.fft(spin_a)
    return grid.ifft(acc_hat)


def current(
    grid: Grid,
    p: PhysParams,
    psi,
    A,
    model: str | None = None,
    a_low: np.ndarray | None = None,
) -> np.ndarray:
    """Gauge current density J as a real (n, n, n, 3) array.

    J_a = -(Q/m) Re <psi, D_a psi>_C2             (model "S")
    J_a = -(Q/m) Re <psi, sigma^a (sigma.D psi)>  (model "P")

    Both use dealiased pairings (every factor filtered, the product
    refiltered) so that ``current`` is exactly the A-derivative of the
    kinetic energy evaluated by ``energy_functional``.
    """
    psi = _arr(psi)
    if model is None:
        model = p.model
    psi_low = spectral.dealias(grid, psi)
    if model == "P":
        gpsi = pauli_gradient(grid, p, psi, A, a_low=a_low)
        gpsi = spectral.dealias(grid, gpsi)
        out = np.empty(psi.shape[:3] + (3,), dtype=float)
        for a in range(3):
            pair = np.einsum("...i,ij,...j->...", np.conj(psi_low), SIGMA[a], gpsi)
            out[..., a] = spectral.dealias(grid, np.real(pair))
    else:
        dpsi = covariant_gradient(grid, p, psi, A, a_low=a_low)
        out = np.empty(psi.shape[:3] + (3,), dtype=float)
        for a in range(3):
            comp = spectral.dealias(grid, dpsi[..., a, :])
            pair = np.sum(np.conj(psi_low) * comp, axis=-1)
            out[..., a] = spectral.dealias(grid, np.real(pair))
    return -(p.charge / p.mass) * out


__all__ = [
    "SIGMA",
    "sigma_dot",
    "sigma_identity_check",
    "covariant_gradient",
    "pauli_gradient",
    "covariant_laplacian",
    "current",
]
