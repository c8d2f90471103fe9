"""Field containers and physical parameters.

Shapes are fixed project-wide: a spinor field is complex ``(n,n,n,2)``,
a vector field is real ``(n,n,n,3)``, a scalar field is complex
``(n,n,n)``.  The trailing axis is the component axis; grid axes come
first so FFTs run over axes (0,1,2) everywhere.

All reductions (norms, inner products, integrals) go through ``np.sum``,
whose pairwise summation order is fixed for a given array shape — this
is the project's deterministic-reduction convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid

MODELS = ("S", "P")


@dataclass(frozen=True)
class PhysParams:
    """Physical constants, constraint mass and boost velocity.

    ``model`` selects the covariant derivative: "S" (scalar/magnetic
    Schrödinger) or "P" (Pauli).  Defaults are the dimensionless desk
    units ħ = m = c = Q = λ = 1.
    """

    hbar: float = 1.0
    mass: float = 1.0
    light_speed: float = 1.0
    charge: float = 1.0
    lam: float = 1.0
    v: tuple[float, float, float] = (0.0, 0.0, 0.0)
    model: str = "S"

    def __post_init__(self) -> None:
        for name in ("hbar", "mass", "light_speed", "lam"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.charge == 0:
            raise ValueError("charge must be nonzero")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        v = np.asarray(self.v, dtype=float)
        if v.shape != (3,):
            raise ValueError("v must be a 3-vector")
        object.__setattr__(self, "v", tuple(float(c) for c in v))

    @property
    def v_arr(self) -> np.ndarray:
        return np.asarray(self.v, dtype=float)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))

    def with_(self, **kw) -> "PhysParams":
        return replace(self, **kw)


def _check(grid: Grid, data: np.ndarray, shape: tuple, kinds: tuple, what: str) -> None:
    if data.shape != shape:
        raise ValueError(f"{what} data must have shape {shape}, got {data.shape}")
    if data.dtype.kind not in kinds:
        raise ValueError(f"{what} dtype must be one of kinds {kinds}, got {data.dtype}")


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    data: np.ndarray  # complex (n,n,n)

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(np.asarray(self.data, dtype=np.complex128))
        _check(self.grid, d, self.grid.shape, ("c",), "ScalarField")
        object.__setattr__(self, "data", d)


@dataclass(frozen=True)
class SpinorField:
    """Two-component wave function ψ: box → ℂ²."""

    grid: Grid
    data: np.ndarray  # complex (n,n,n,2)

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(np.asarray(self.data, dtype=np.complex128))
        _check(self.grid, d, self.grid.shape + (2,), ("c",), "SpinorField")
        object.__setattr__(self, "data", d)

    def density(self) -> np.ndarray:
        """Pointwise |ψ|² = |ψ₁|² + |ψ₂|² (real (n,n,n))."""
        return np.sum(np.abs(self.data) ** 2, axis=-1)


@dataclass(frozen=True)
class VectorField:
    """Real 3-vector field (the magnetic potential lives here)."""

    grid: Grid
    data: np.ndarray  # float (n,n,n,3)

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        _check(self.grid, d, self.grid.shape + (3,), ("f",), "VectorField")
        object.__setattr__(self, "data", d)


AnyField = ScalarField | SpinorField | VectorField


# -- inner products ---------------------------------------------------------


def as_array(obj) -> np.ndarray:
    """Unwrap a field to its ndarray; ndarrays pass through untouched.

    (Plain ``getattr(obj, "data", obj)`` is a trap here: ndarrays expose
    a ``.data`` memoryview attribute of their own.)
    """
    if isinstance(obj, np.ndarray):
        return obj
    data = getattr(obj, "data", None)
    if isinstance(data, np.ndarray):
        return data
    return np.asarray(obj)


def inner(grid: Grid, f, g) -> complex:
    """Grid L² inner product ⟨f, g⟩ = h³ Σ f̄·g (all component axes summed)."""
    return complex(np.sum(np.conj(as_array(f)) * as_array(g)) * grid.cell)


def l2_norm_sq(grid: Grid, f) -> float:
    return float(np.sum(np.abs(as_array(f)) ** 2) * grid.cell)


def normalize_to_lambda(psi: SpinorField, lam: float) -> SpinorField:
    """Rescale ψ so that ‖ψ‖² = lam exactly in grid quadrature."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    nrm = l2_norm_sq(psi.grid, psi.data)
    if nrm == 0:
        raise ValueError("cannot normalize the zero field")
    return SpinorField(psi.grid, psi.data * np.sqrt(lam / nrm))


# -- transport ---------------------------------------------------------------


def translate(f: AnyField, shift) -> AnyField:
    """Periodic translation: (translate f)(x) = f(x - shift), spectrally exact.

    Works for each container type; component axes translate independently.
    """
    grid = f.grid
    s = np.asarray(shift, dtype=float)
    if s.shape != (3,):
        raise ValueError("shift must be a 3-vector")
    kx, ky, kz = grid.k
    phase = np.exp(-1j * (kx * s[0] + ky * s[1] + kz * s[2]))
    d = f.data
    if d.ndim == 4:
        phase = phase[..., None]
    out = grid.ifft(grid.fft(d) * phase)
    if isinstance(f, VectorField):
        return VectorField(grid, out.real)
    if isinstance(f, SpinorField):
        return SpinorField(grid, out)
    return ScalarField(grid, out)


# -- random ensembles ---------------------------------------------------------


def random_fields(
    grid: Grid,
    p: PhysParams,
    seed: int,
    corr_len: float = 2.0,
    *,
    max_mode: int | None = None,
    a_amp: float = 1.0,
) -> tuple[SpinorField, VectorField]:
    """Draw a smooth random constrained pair (ψ, A).

    ψ: complex Gaussian spectrum with envelope exp(-(|k| corr_len)²/2),
    normalized to ‖ψ‖² = p.lam.  A: same envelope, Helmholtz-projected
    (divergence-free), zero mean, rescaled to ‖A‖ = a_amp.

    ``max_mode`` optionally hard-truncates to integer modes |m| ≤ max_mode
    per axis (sharp band limit on top of the smooth envelope).
    """
    from . import spectral  # local import: spectral depends on this module

    rng = np.random.default_rng(seed)
    kx, ky, kz = grid.k
    kk = np.sqrt(grid.k2)
    env = np.exp(-0.5 * (kk * corr_len) ** 2)
    if max_mode is not None:
        dk = 2.0 * np.pi / grid.box_l
        m = np.rint(np.stack(grid.k) / dk).astype(int)
        keep = (
            (np.abs(m[0]) <= max_mode)
            & (np.abs(m[1]) <= max_mode)
            & (np.abs(m[2]) <= max_mode)
        )
        env = env * keep

    def draw_complex(shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    psi_hat = draw_complex(grid.shape + (2,)) * env[..., None]
    psi = SpinorField(grid, grid.ifft(psi_hat))
    psi = normalize_to_lambda(psi, p.lam)

    a_hat = draw_complex(grid.shape + (3,)) * env[..., None]
    a = grid.ifft(a_hat).real
    a = spectral.helmholtz_project(grid, a)
    a -= np.mean(a, axis=(0, 1, 2))
    nrm = np.sqrt(np.sum(a**2) * grid.cell)
    if nrm > 0:
        a *= a_amp / nrm
    return psi, VectorField(grid, a)


__all__ = [
    "MODELS",
    "PhysParams",
    "ScalarField",
    "SpinorField",
    "VectorField",
    "inner",
    "l2_norm_sq",
    "normalize_to_lambda",
    "translate",
    "random_fields",
]
