"""Structural diagnostics for the travelling-wave variational problem.

This module collects the constructions used to probe a state or the
functional itself rather than to optimize it:

* an explicit two-parameter trial family (localized bump wave function
  plus a compactly supported solenoidal vector potential) whose energy
  obeys a closed-form law in the amplitude and dilation, giving a
  negativity witness for the strict inequality  inf E < -(m v^2 / 2) lam;
* the concentration function sup_y mass(ball(y, r)) and its maximizer;
* a gauge-covariant splitting of a state into an inner and an outer
  piece whose energies should sum to the total up to a small defect;
* the Coulomb-type lower bound controlled by the density alone;
* a velocity sweep fitting the small-|v| energy law.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import spectral
from .energy import energy_functional, speed_gate, travelling_energy
from .errors import DomainGateError, InputError
from .fields import PhysParams, SpinorField, VectorField, as_array, l2_norm_sq, normalize_to_lambda
from .grid import Grid
from .minimize import MinimizeConfig, minimize

# -- smooth profiles -----------------------------------------------------------


def _bump(t: np.ndarray) -> np.ndarray:
    """Standard mollifier profile: exp(1 - 1/(1-t^2)) inside |t| < 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


def _bump_prime(t: np.ndarray) -> np.ndarray:
    """Derivative of ``_bump``, again supported in |t| < 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    om = 1.0 - ti * ti
    out[inside] = np.exp(1.0 - 1.0 / om) * (-2.0 * ti / om ** 2)
    return out


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


# -- trial family ---------------------------------------------------------------


@dataclass(frozen=True)
class TrialSpec:
    """Parameters of the bump trial family.

    The base pair lives at unit scale: the stream profile is a radial
    mollifier of radius ``base_radius`` generating the solenoidal
    A_0 = (d2 Xi, -d1 Xi, 0), and the wave-function bump of radius
    ``psi_radius`` is centered a distance ``psi_offset`` below the
    x2 = 0 plane, inside the region where d2 Xi > 0.  ``amplitude``
    and ``dilation`` are the two scan parameters (a, R); the scaled
    support must stay ``margin`` * box_l away from the box boundary.

    The default offset/radius pair was chosen by a small numerical
    study maximizing the coupling-to-cost quality of the base pair;
    see the shape study in the test suite for the measured value.
    """

    amplitude: float
    dilation: float
    psi_offset: float = 0.50
    psi_radius: float = 0.50
    base_radius: float = 1.0
    margin: float = 0.1

    def __post_init__(self):
        if self.amplitude <= 0 or self.dilation <= 0:
            raise InputError("trial amplitude and dilation must be positive")
        if self.psi_offset + self.psi_radius > self.base_radius + 1e-12:
            raise InputError("wave-function bump must stay inside the base ball")
        if self.psi_offset - self.psi_radius < -1e-12:
            raise InputError("wave-function bump must stay below the x2 = 0 plane")

    def support_radius(self) -> float:
        return self.dilation * self.base_radius

    @classmethod
    def fitted(cls, grid: Grid, amplitude: float, **kw) -> "TrialSpec":
        """Largest dilation that keeps the support inside the margin."""
        margin = kw.pop("margin", 0.1)
        base_radius = kw.get("base_radius", 1.0)
        R = (0.5 - margin) * grid.box_l / base_radius
        return cls(amplitude=amplitude, dilation=R, margin=margin, **kw)


def _check_fit(grid: Grid, spec: TrialSpec) -> None:
    limit = (0.5 - spec.margin) * grid.box_l
    if spec.support_radius() > limit + 1e-9:
        raise DomainGateError(
            f"trial support radius {spec.support_radius():.3g} exceeds the "
            f"fit limit {limit:.3g} for box {grid.box_l:g}"
        )


def _trial_raw(grid: Grid, p: PhysParams, spec: TrialSpec):
    """Sampled envelope (normalized) and vector potential of the family."""
    _check_fit(grid, spec)
    x, y, z = grid.coords()
    cx, cy, cz = grid.center()
    R = spec.dilation
    xs, ys, zs = (x - cx) / R, (y - cy) / R, (z - cz) / R

    r = np.sqrt(xs * xs + ys * ys + zs * zs)
    # d_a Xi = b'(r / r0) x_a / (r r0) with r0 the base radius
    r0 = spec.base_radius
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(r > 0, _bump_prime(r / r0) / (r * r0), 0.0)
    a_data = np.zeros(grid.shape + (3,), dtype=float)
    a_data[..., 0] = radial * ys
    a_data[..., 1] = -radial * xs
    scale = spec.amplitude * p.light_speed / p.charge
    a_data *= scale

    rb = np.sqrt(xs * xs + (ys + spec.psi_offset) ** 2 + zs * zs)
    env = _bump(rb / spec.psi_radius) * R ** (-1.5)
    env_norm = np.sqrt(float(np.sum(env ** 2)) * grid.cell)
    if env_norm == 0.0:
        raise DomainGateError("trial bump is unresolved on this grid")
    env *= np.sqrt(p.lam) / env_norm
    return env, a_data


def trial_fields(grid: Grid, p: PhysParams, spec: TrialSpec) -> tuple[SpinorField, VectorField]:
    """Sample the trial pair on the grid.

    The wave function is the boosted bump  R^{-3/2} e^{i(mv/hbar).x}
    psi_0(x'/R)  in the spin-up state, normalized to lambda in grid
    quadrature; the vector potential is (a c / Q) A_0(x'/R), projected
    onto the exactly solenoidal zero-mean subspace (a rounding-level
    correction for resolved profiles).
    """
    env, a_data = _trial_raw(grid, p, spec)
    x, y, z = grid.coords()
    v = p.v_arr
    carrier = np.exp(1j * (p.mass / p.hbar) * (v[0] * x + v[1] * y + v[2] * z))
    data = np.zeros(grid.shape + (2,), dtype=complex)
    data[..., 0] = env * carrier
    psi = normalize_to_lambda(SpinorField(grid, data), p.lam)
    a_data = spectral.zero_mean(grid, spectral.helmholtz_project(grid, a_data))
    return psi, VectorField(grid, a_data)


@dataclass(frozen=True)
class TrialEnergyTerms:
    """Closed-form energy law of the trial family, term by term."""

    envelope_kinetic: float
    diamagnetic: float
    coupling: float
    rest: float
    field: float
    spin: float
    total: float


def trial_energy_terms(grid: Grid, p: PhysParams, spec: TrialSpec) -> TrialEnergyTerms:
    """Evaluate the analytic energy law at (a, R).

    Each term is the grid quadrature of the corresponding base integral
    after substitution, so the only discrepancy against
    ``energy_functional(trial_fields(...))`` is the aliasing residue of
    the product quadratures -- spectrally small for resolved profiles.
    The carrier phase and the drift term cancel exactly and never enter.
    """
    env, a_data = _trial_raw(grid, p, spec)
    v = p.v_arr
    dens = env ** 2

    grad_env = spectral.gradient(grid, env)
    kin = p.hbar ** 2 / (2.0 * p.mass) * float(np.sum(np.abs(grad_env) ** 2)) * grid.cell
    a_sq = np.sum(a_data ** 2, axis=-1)
    dia = p.charge ** 2 / (2.0 * p.mass * p.light_speed ** 2) * float(
        np.sum(a_sq * dens)
    ) * grid.cell
    coup = -(p.charge / p.light_speed) * float(
        np.sum(np.tensordot(a_data, v, axes=(-1, 0)) * dens)
    ) * grid.cell
    lam_meas = float(np.sum(dens)) * grid.cell
    rest = -0.5 * p.mass * float(v @ v) * lam_meas

    a_hat = grid.fft(a_data)
    grad_sq = 0.0
    for a in range(3):
        comp = grid.ifft(1j * grid.k[a][..., None] * a_hat)
        grad_sq += float(np.sum(np.abs(comp) ** 2)) * grid.cell
    if np.any(v):
        dv = spectral.directional_derivative(grid, a_data, v)
        vdir_sq = float(np.sum(np.abs(dv) ** 2)) * grid.cell
    else:
        vdir_sq = 0.0
    field = (grad_sq - vdir_sq / p.light_speed ** 2) / (8.0 * np.pi)

    spin = 0.0
    if p.model == "P":
        b3 = spectral.curl(grid, a_data)[..., 2]
        spin = -(p.hbar * p.charge / (2.0 * p.mass * p.light_speed)) * float(
            np.sum(b3 * dens)
        ) * grid.cell

    total = kin + dia + coup + rest + field + spin
    return TrialEnergyTerms(
        envelope_kinetic=kin,
        diamagnetic=dia,
        coupling=coup,
        rest=rest,
        field=field,
        spin=spin,
        total=total,
    )


@dataclass(frozen=True)
class BaseQuadratures:
    """Unit-scale integrals of the base pair (psi_0 carrying lambda).

    n2        |grad psi_0|^2
    g2        |grad (x) A_0|^2
    g1v2      |(vhat . grad) A_0|^2
    m2        |A_0 psi_0|^2
    overlap   (psi_0, vhat . A_0 psi_0)
    spin      int <psi_0, sigma . curl A_0 psi_0>
    """

    n2: float
    g2: float
    g1v2: float
    m2: float
    overlap: float
    spin: float


def base_quadratures(grid: Grid, p: PhysParams, spec: TrialSpec | None = None) -> BaseQuadratures:
    """Measure the base integrals by sampling at the largest fitting scale.

    All quantities refer to the unit-scale pair (amplitude and gauge
    factors stripped); dilation covariance of each integral is used to
    undo the reference scaling.
    """
    if spec is None:
        spec = TrialSpec.fitted(grid, amplitude=1.0)
    ref = dataclasses.replace(
        spec, amplitude=1.0, dilation=TrialSpec.fitted(grid, 1.0, margin=spec.margin).dilation
    )
    R = ref.dilation
    env, _ = _trial_raw(grid, p, ref)
    one = dataclasses.replace(ref, amplitude=1.0)
    # strip the (a c / Q) factor to recover the bare geometric A_0
    _, a_scaled = _trial_raw(grid, p, one)
    a0 = a_scaled * (p.charge / p.light_speed)

    dens = env ** 2
    grad_env = spectral.gradient(grid, env)
    n2 = R ** 2 * float(np.sum(np.abs(grad_env) ** 2)) * grid.cell

    a_hat = grid.fft(a0)
    g2 = 0.0
    for a in range(3):
        comp = grid.ifft(1j * grid.k[a][..., None] * a_hat)
        g2 += float(np.sum(np.abs(comp) ** 2)) * grid.cell
    g2 /= R

    speed = p.speed
    vhat = p.v_arr / speed if speed > 0 else np.array([1.0, 0.0, 0.0])
    dv = spectral.directional_derivative(grid, a0, vhat)
    g1v2 = float(np.sum(np.abs(dv) ** 2)) * grid.cell / R

    m2 = float(np.sum(np.sum(a0 ** 2, axis=-1) * dens)) * grid.cell
    overlap = float(np.sum(np.tensordot(a0, vhat, axes=(-1, 0)) * dens)) * grid.cell
    spin = R * float(np.sum(spectral.curl(grid, a0)[..., 2] * dens)) * grid.cell
    return BaseQuadratures(n2=n2, g2=g2, g1v2=g1v2, m2=m2, overlap=overlap, spin=spin)


def effective_dilation(p: PhysParams, base: BaseQuadratures, a: float) -> float:
    """Energy-balancing dilation R_a of the trial family,

    R_a = ( (2 hbar |Q| / a) sqrt(pi / m) |grad psi_0| )^(2/3)
          ( c^2 |grad A_0|^2 - |(v.grad) A_0|^2 )^(-1/3),

    at which the field cost matches the envelope kinetic cost and the
    energy law becomes a polynomial in powers of a alone.
    """
    w = p.light_speed ** 2 * base.g2 - p.speed ** 2 * base.g1v2
    if w <= 0:
        raise DomainGateError(
            "field quadratic form is not positive: outside the bounded-energy regime"
        )
    num = (2.0 * p.hbar * abs(p.charge) / a) * np.sqrt(np.pi / p.mass) * np.sqrt(base.n2)
    return num ** (2.0 / 3.0) * w ** (-1.0 / 3.0)


@dataclass(frozen=True)
class WitnessRow:
    amplitude: float
    dilation: float
    energy: float
    margin: float


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of the negativity scan over the trial family."""

    found: bool
    amplitude: float | None
    dilation: float | None
    energy: float | None
    threshold: float
    best_margin: float
    slope_at_zero: float
    rows: tuple
    message: str


def negativity_witness(
    grid: Grid,
    p: PhysParams,
    spec: TrialSpec | None = None,
    num: int = 24,
    a_max: float | None = None,
) -> WitnessReport:
    """Scan the trial family along a -> (a, R_a) for energies below
    -(m v^2 / 2) lambda.

    The scan starts at the smallest amplitude whose balancing dilation
    still fits the box and increases a (shrinking R_a) until the bump
    falls under the resolution floor.  When the analytic slope at a = 0
    is negative yet no sampled point beats the threshold, the witness
    amplitude lies below the box-imposed cutoff: the report says so and
    quantifies the gap instead of manufacturing a pass.
    """
    speed_gate(p)
    if spec is None:
        spec = TrialSpec.fitted(grid, amplitude=1.0)
    base = base_quadratures(grid, p, spec)
    threshold = -0.5 * p.mass * p.speed ** 2 * p.lam

    r_cap = TrialSpec.fitted(grid, 1.0, margin=spec.margin).dilation
    w = p.light_speed ** 2 * base.g2 - p.speed ** 2 * base.g1v2
    a_of_r = lambda R: (
        2.0 * p.hbar * abs(p.charge) * np.sqrt(np.pi / p.mass) * np.sqrt(base.n2)
        / (R ** 1.5 * np.sqrt(w))
    )
    a_min = a_of_r(r_cap)
    r_floor = max(4.0 * grid.spacing, 1e-3 * r_cap)
    if a_max is None:
        a_max = a_of_r(r_floor)

    rows = []
    found = False
    hit = None
    for a in np.geomspace(a_min, a_max, num):
        R = min(effective_dilation(p, base, a), r_cap)
        spec_a = dataclasses.replace(spec, amplitude=float(a), dilation=float(R))
        psi, A = trial_fields(grid, p, spec_a)
        e = energy_functional(grid, p, psi, A).total
        rows.append(WitnessRow(float(a), float(R), float(e), float(e - threshold)))
        if not found and e < threshold:
            found = True
            hit = rows[-1]

    best = min(rows, key=lambda r: r.margin)
    slope = -p.speed * base.overlap
    if found:
        msg = (
            f"witness at a = {hit.amplitude:.6g}, R = {hit.dilation:.6g}: "
            f"E = {hit.energy:.6g} < {threshold:.6g}"
        )
    else:
        msg = (
            f"no witness on this box: best margin {best.margin:.3e} at "
            f"a = {best.amplitude:.3g} (dilation capped at {r_cap:.3g}; the "
            f"balancing dilation grows ~ 1/v^2, so enlarge the box to follow it)"
        )
    return WitnessReport(
        found=found,
        amplitude=hit.amplitude if found else None,
        dilation=hit.dilation if found else None,
        energy=hit.energy if found else None,
        threshold=threshold,
        best_margin=float(best.margin),
        slope_at_zero=float(slope),
        rows=tuple(rows),
        message=msg,
    )


# -- concentration --------------------------------------------------------------


def _min_image_dist(grid: Grid) -> np.ndarray:
    ax = grid.axis_coords()
    dx = np.minimum(ax, grid.box_l - ax)
    return np.sqrt(
        dx[:, None, None] ** 2 + dx[None, :, None] ** 2 + dx[None, None, :] ** 2
    )


def concentration_function(psi: SpinorField, radii) -> np.ndarray:
    """C(r) = sup_y integral of |psi|^2 over the (periodic) ball B(y, r).

    Evaluated for every radius by circular convolution of the density
    with the ball indicator; exact at grid resolution.
    """
    grid = psi.grid
    dens = psi.density()
    dens_hat = grid.fft(dens)
    dist = _min_image_dist(grid)
    out = np.empty(len(radii), dtype=float)
    for i, r in enumerate(radii):
        ind = (dist <= r).astype(float)
        mass = np.real(grid.ifft(dens_hat * grid.fft(ind))) * grid.cell
        out[i] = float(np.max(mass))
    return out


def centering(psi: SpinorField, radius: float) -> np.ndarray:
    """Position maximizing the mass in a ball of the given radius."""
    grid = psi.grid
    dens = psi.density()
    dist = _min_image_dist(grid)
    ind = (dist <= radius).astype(float)
    mass = np.real(grid.ifft(grid.fft(dens) * grid.fft(ind)))
    idx = np.unravel_index(int(np.argmax(mass)), grid.shape)
    ax = grid.axis_coords()
    return np.array([ax[idx[0]], ax[idx[1]], ax[idx[2]]])


# -- splitting -------------------------------------------------------------------


def _inner_profile(s: np.ndarray) -> np.ndarray:
    """1 on [0, 1], smooth descent to 0 on [1, 1.45]."""
    return 1.0 - _smoothstep((s - 1.0) / 0.45)


def _outer_profile(s: np.ndarray) -> np.ndarray:
    """0 on [0, 1.55], smooth ascent to 1 on [1.55, 2]."""
    return _smoothstep((s - 1.55) / 0.45)


@dataclass(frozen=True)
class SplitSpec:
    """Geometry of the inner/outer splitting.

    The wave function is cut at scales ``radius`` (inner) and
    2^(doublings-1) * radius (outer); both gauge cutoffs act at
    2^(gauge_level-1) * radius.  ``gauge_level = None`` picks the level
    whose transition shell carries the smallest L^6 mass of A, scanning
    {2, ..., doublings-2} when that range is nonempty (the nesting
    identities chi_A chi_psi = chi_psi then hold with room to spare) and
    {1, ..., doublings-1} otherwise.
    """

    center: tuple
    radius: float
    doublings: int = 3
    gauge_level: int | None = None

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("split radius must be positive")
        if self.doublings < 2:
            raise InputError("need at least two doublings to separate the scales")
        if self.gauge_level is not None and not (
            1 <= self.gauge_level <= self.doublings - 1
        ):
            raise InputError("gauge_level must lie in {1, ..., doublings-1}")


@dataclass(frozen=True)
class SplitPieces:
    psi_in: SpinorField
    A_in: VectorField
    psi_out: SpinorField
    A_out: VectorField
    u_in: np.ndarray
    u_out: np.ndarray
    gauge_level: int


def _periodic_dist(grid: Grid, center) -> np.ndarray:
    x, y, z = grid.coords()
    L = grid.box_l
    d = []
    for c, w in zip(center, (x, y, z)):
        raw = np.abs(w - c) % L
        d.append(np.minimum(raw, L - raw))
    return np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)


def _pick_gauge_level(grid: Grid, A: np.ndarray, spl: SplitSpec, dist: np.ndarray) -> int:
    if spl.gauge_level is not None:
        return spl.gauge_level
    candidates = list(range(2, spl.doublings - 1)) or list(range(1, spl.doublings))
    a_mag6 = np.sum(A ** 2, axis=-1) ** 3
    best, best_val = candidates[0], np.inf
    for m in candidates:
        lo, hi = 2 ** (m - 1) * spl.radius, 2 ** m * spl.radius
        shell = (dist >= lo) & (dist <= hi)
        val = float(np.sum(a_mag6[shell])) * grid.cell
        if val < best_val:
            best, best_val = m, val
    return best


def split_fields(grid: Grid, p: PhysParams, psi, A, spl: SplitSpec) -> SplitPieces:
    """Cut (psi, A) into gauge-covariant inner and outer pieces.

    Each piece uses the gradient part of the cut vector potential to
    re-gauge the wave function,

        u_l = poisson_solve(div(chi_l A)),
        psi_l = exp(i Q u_l / hbar c) chi_l^psi psi,
        A_l = chi_l^A A + grad u_l,

    which keeps A_l exactly solenoidal and cancels the worst cutoff
    artifacts in the covariant derivative.
    """
    psi_a = as_array(psi)
    A_a = as_array(A)
    if 2 ** spl.doublings * spl.radius > 0.5 * grid.box_l + 1e-9:
        raise DomainGateError(
            "outer cutoff does not complete inside the box: reduce radius or doublings"
        )
    dist = _periodic_dist(grid, spl.center)
    m = _pick_gauge_level(grid, A_a, spl, dist)

    chi_psi_in = _inner_profile(dist / spl.radius)
    chi_psi_out = _outer_profile(dist / (2 ** (spl.doublings - 1) * spl.radius))
    ga_scale = 2 ** (m - 1) * spl.radius
    chi_a_in = _inner_profile(dist / ga_scale)
    chi_a_out = _outer_profile(dist / ga_scale)

    pieces = []
    for chi_a, chi_p in ((chi_a_in, chi_psi_in), (chi_a_out, chi_psi_out)):
        cut = chi_a[..., None] * A_a
        # strip Nyquist planes so the Poisson gauge fix below cancels the
        # divergence exactly (odd multipliers are lossy on those planes)
        cut = np.real(grid.ifft(grid.fft(cut) * grid.nyquist_mask[..., None]))
        u = spectral.poisson_solve(grid, spectral.divergence(grid, cut))
        a_piece = cut + spectral.gradient(grid, u).real
        phase = np.exp(1j * p.charge / (p.hbar * p.light_speed) * u)
        psi_piece = phase[..., None] * chi_p[..., None] * psi_a
        pieces.append((psi_piece, a_piece, u))

    (psi_i, a_i, u_i), (psi_o, a_o, u_o) = pieces
    return SplitPieces(
        psi_in=SpinorField(grid, psi_i),
        A_in=VectorField(grid, a_i),
        psi_out=SpinorField(grid, psi_o),
        A_out=VectorField(grid, a_o),
        u_in=u_i,
        u_out=u_o,
        gauge_level=m,
    )


@dataclass(frozen=True)
class SplitReport:
    energy: float
    energy_in: float
    energy_out: float
    defect: float
    rel_defect: float
    mass: float
    mass_in: float
    mass_out: float
    mass_defect: float
    gauge_level: int


def split_energy_check(grid: Grid, p: PhysParams, psi, A, spl: SplitSpec) -> SplitReport:
    """Compare E(psi, A) against E(inner) + E(outer)."""
    pieces = split_fields(grid, p, psi, A, spl)
    e = energy_functional(grid, p, psi, A).total
    e_i = energy_functional(grid, p, pieces.psi_in, pieces.A_in).total
    e_o = energy_functional(grid, p, pieces.psi_out, pieces.A_out).total
    defect = e_i + e_o - e
    mass = l2_norm_sq(grid, as_array(psi))
    m_i = l2_norm_sq(grid, pieces.psi_in.data)
    m_o = l2_norm_sq(grid, pieces.psi_out.data)
    return SplitReport(
        energy=e,
        energy_in=e_i,
        energy_out=e_o,
        defect=defect,
        rel_defect=abs(defect) / max(abs(e), np.finfo(float).tiny),
        mass=mass,
        mass_in=m_i,
        mass_out=m_o,
        mass_defect=mass - m_i - m_o,
        gauge_level=pieces.gauge_level,
    )


# -- Coulomb-type lower bound -----------------------------------------------------


def coulomb_double_integral(grid: Grid, psi) -> float:
    """The density self-interaction  integral rho(x) rho(y) / |x-y|,

    realized on the torus through the zero-mean Green's function of the
    Laplacian: 4 pi <rho, u> with -lap u = rho - mean(rho).
    """
    psi_a = as_array(psi)
    dens = np.sum(np.abs(psi_a) ** 2, axis=-1)
    u = spectral.poisson_solve(grid, dens)
    return 4.0 * np.pi * float(np.real(np.sum(dens * u)) * grid.cell)


@dataclass(frozen=True)
class CoulombReport:
    energy: float
    bound: float
    double_integral: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-10 * max(1.0, abs(self.bound))


def coulomb_lower_bound(grid: Grid, p: PhysParams, psi, A, total: float | None = None) -> CoulombReport:
    """Check  E >= -Q^2 v^2/(c^2 - v^2) * self-interaction - (m v^2/2) lam."""
    if total is None:
        total = energy_functional(grid, p, psi, A).total
    I = coulomb_double_integral(grid, psi)
    v2 = p.speed ** 2
    bound = (
        -p.charge ** 2 * v2 / (p.light_speed ** 2 - v2) * I
        - 0.5 * p.mass * v2 * p.lam
    )
    return CoulombReport(energy=total, bound=bound, double_integral=I, slack=total - bound)


# -- velocity sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    speed: float
    energy_var: float
    energy_trav: float
    excess: float
    theta: float
    omega: float
    converged: bool
    iterations: int
    residual_psi: float
    residual_a: float


@dataclass(frozen=True)
class SweepResult:
    """Small-velocity energy law fit E_trav ~ alpha v^2 + beta |v|^3."""

    points: tuple
    alpha: float
    beta: float
    fit_residual: float
    alpha_target: float


def mass_sweep(
    grid: Grid,
    p: PhysParams,
    speeds,
    direction=(1.0, 0.0, 0.0),
    config: MinimizeConfig | None = None,
) -> SweepResult:
    """Minimize at each speed and fit the travelling energy law.

    The quadratic coefficient of E_trav(v) is compared against the
    effective-mass prediction m lambda / 2; the fit is least squares on
    the model alpha v^2 + beta |v|^3 through the origin.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    pts = []
    for s in speeds:
        ps = p.with_(v=tuple(s * direction))
        rep = minimize(grid, ps, config=config)
        etrav = travelling_energy(grid, ps, rep.psi, rep.A)
        pts.append(
            SweepPoint(
                speed=float(s),
                energy_var=rep.energy,
                energy_trav=float(etrav),
                excess=rep.energy + 0.5 * p.mass * s ** 2 * p.lam,
                theta=rep.theta,
                omega=rep.omega,
                converged=rep.converged,
                iterations=rep.iterations,
                residual_psi=rep.residual_psi,
                residual_a=rep.residual_a,
            )
        )
    v = np.array([q.speed for q in pts])
    e = np.array([q.energy_trav for q in pts])
    design = np.stack([v ** 2, np.abs(v) ** 3], axis=1)
    coef, *_ = np.linalg.lstsq(design, e, rcond=None)
    resid = float(np.linalg.norm(design @ coef - e))
    return SweepResult(
        points=tuple(pts),
        alpha=float(coef[0]),
        beta=float(coef[1]),
        fit_residual=resid,
        alpha_target=0.5 * p.mass * p.lam,
    )


__all__ = [
    "TrialSpec",
    "trial_fields",
    "TrialEnergyTerms",
    "trial_energy_terms",
    "BaseQuadratures",
    "base_quadratures",
    "effective_dilation",
    "WitnessRow",
    "WitnessReport",
    "negativity_witness",
    "concentration_function",
    "centering",
    "SplitSpec",
    "SplitPieces",
    "split_fields",
    "SplitReport",
    "split_energy_check",
    "coulomb_double_integral",
    "CoulombReport",
    "coulomb_lower_bound",
    "SweepPoint",
    "SweepResult",
    "mass_sweep",
]
