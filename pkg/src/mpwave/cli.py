"""Command-line front end.

Four commands cover the workflow:

* ``solve``  -- minimize at one velocity, persist the state and a report;
* ``sweep``  -- minimize over a list of speeds, emit CSV plus a fit line;
* ``trial``  -- scan the explicit trial family for the negativity witness;
* ``check``  -- run the invariant suite against a saved state file.

Configuration is a flat ``key = value`` text file with ``#`` comments;
command-line flags override file values.  All randomness flows from the
config seed, so identical configurations produce byte-identical
artifacts; wall-clock timestamps appear only in the ``run.log`` sidecar.
Exit codes: 0 success, 2 input error, 3 domain gate, 4 solver failure.
The environment variable ``MPW_THREADS`` bounds kernel parallelism.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, io as state_io, pauli, spectral
from .energy import apriori_bounds, energy_functional, speed_gate
from .errors import DomainGateError, InputError, MpwaveError, SolverError
from .fields import PhysParams
from .grid import Grid
from .minimize import MinimizeConfig, el_residual, minimize

_EXIT = {InputError: 2, DomainGateError: 3, SolverError: 4}


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {s!r}")


def _parse_vec3(s: str) -> tuple:
    parts = [q for q in s.replace(",", " ").split() if q]
    if len(parts) != 3:
        raise InputError(f"expected three comma-separated numbers, got {s!r}")
    try:
        return tuple(float(q) for q in parts)
    except ValueError as exc:
        raise InputError(f"bad vector {s!r}: {exc}") from None


def _parse_floats(s: str) -> tuple:
    parts = [q for q in s.replace(",", " ").split() if q]
    try:
        return tuple(float(q) for q in parts)
    except ValueError as exc:
        raise InputError(f"bad number list {s!r}: {exc}") from None


@dataclass
class RunConfig:
    """Everything one run needs, resolved from file plus flags."""

    model: str = "S"
    hbar: float = 1.0
    mass: float = 1.0
    light_speed: float = 1.0
    charge: float = 1.0
    lam: float = 1.0
    velocity: tuple = (0.1, 0.0, 0.0)
    grid_n: int = 32
    box_l: float = 40.0
    seed: int = 0
    output_dir: str = "."
    force_supercritical: bool = False
    speeds: tuple = ()
    direction: tuple = (1.0, 0.0, 0.0)
    trial_points: int = 24
    minimize: MinimizeConfig = field(default_factory=MinimizeConfig)

    def validate(self) -> None:
        if self.model not in ("S", "P"):
            raise InputError(f"model must be S or P, got {self.model!r}")
        if self.grid_n % 2 != 0 or self.grid_n < 8:
            raise InputError(f"grid_n must be even and >= 8, got {self.grid_n}")
        if not self.box_l > 0:
            raise InputError(f"box_l must be positive, got {self.box_l}")

    def grid(self) -> Grid:
        try:
            return Grid(n=self.grid_n, box_l=self.box_l)
        except ValueError as exc:
            raise InputError(str(exc)) from None

    def params(self) -> PhysParams:
        try:
            p = PhysParams(
                hbar=self.hbar,
                mass=self.mass,
                light_speed=self.light_speed,
                charge=self.charge,
                lam=self.lam,
                v=tuple(self.velocity),
                model=self.model,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if not self.force_supercritical:
            speed_gate(p)
        return p


# configuration keys: name -> (attribute path, parser)
_KEYS = {
    "model": ("model", str.strip),
    "hbar": ("hbar", float),
    "mass": ("mass", float),
    "light_speed": ("light_speed", float),
    "charge": ("charge", float),
    "lambda": ("lam", float),
    "v": ("velocity", _parse_vec3),
    "velocity": ("velocity", _parse_vec3),
    "grid_n": ("grid_n", int),
    "box_l": ("box_l", float),
    "seed": ("seed", int),
    "output_dir": ("output_dir", str.strip),
    "force_supercritical": ("force_supercritical", _parse_bool),
    "speeds": ("speeds", _parse_floats),
    "direction": ("direction", _parse_vec3),
    "trial_points": ("trial_points", int),
}

_MIN_TYPES = {f.name: f.type for f in dataclasses.fields(MinimizeConfig)}
_MIN_PARSERS = {"int": int, "float": float, "str": str.strip, "bool": _parse_bool}


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise InputError(f"{origin}:{lineno}: empty key or value")
        if key in pairs:
            raise InputError(f"{origin}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _apply_pairs(cfg: RunConfig, pairs: dict) -> RunConfig:
    updates = {}
    min_updates = {}
    for key, value in pairs.items():
        if key.startswith("minimize."):
            name = key[len("minimize."):]
            if name not in _MIN_TYPES:
                raise InputError(f"unknown config key {key!r}")
            parser = _MIN_PARSERS.get(_MIN_TYPES[name], str.strip)
            try:
                min_updates[name] = parser(value)
            except ValueError as exc:
                raise InputError(f"bad value for {key!r}: {exc}") from None
        elif key in _KEYS:
            attr, parser = _KEYS[key]
            try:
                updates[attr] = parser(value)
            except ValueError as exc:
                raise InputError(f"bad value for {key!r}: {exc}") from None
        else:
            raise InputError(f"unknown config key {key!r}")
    if min_updates:
        try:
            updates["minimize"] = dataclasses.replace(cfg.minimize, **min_updates)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return dataclasses.replace(cfg, **updates)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        cfg = _apply_pairs(cfg, parse_config_text(text, origin=args.config))
    overrides = {}
    if getattr(args, "v", None):
        overrides["velocity"] = _parse_vec3(args.v)
    if getattr(args, "model", None):
        overrides["model"] = args.model
    if getattr(args, "grid", None):
        overrides["grid_n"] = args.grid
    if getattr(args, "box", None):
        overrides["box_l"] = args.box
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "force", False):
        overrides["force_supercritical"] = True
    if getattr(args, "speeds", None):
        overrides["speeds"] = _parse_floats(args.speeds)
    cfg = dataclasses.replace(cfg, **overrides)
    if cfg.seed != RunConfig.seed or "seed" in overrides:
        cfg = dataclasses.replace(cfg, minimize=dataclasses.replace(cfg.minimize, seed=cfg.seed))
    if cfg.force_supercritical and not cfg.minimize.force:
        cfg = dataclasses.replace(cfg, minimize=dataclasses.replace(cfg.minimize, force=True))
    cfg.validate()
    return cfg


# -- artifacts ------------------------------------------------------------------


class _RunLog:
    """Sidecar log; the only artifact allowed to carry timestamps."""

    def __init__(self, directory: str):
        os.makedirs(directory, exist_ok=True)
        self.path = os.path.join(directory, "run.log")
        self._fh = open(self.path, "a")

    def write(self, msg: str) -> None:
        stamp = datetime.datetime.now().isoformat(timespec="seconds")
        self._fh.write(f"[{stamp}] {msg}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _write_lines(path: str, lines) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _report_lines(cfg: RunConfig, rep) -> list:
    lines = [
        f"model = {cfg.model}",
        f"grid_n = {cfg.grid_n}",
        f"box_l = {_fmt(cfg.box_l)}",
        f"velocity = {_fmt(cfg.velocity[0])},{_fmt(cfg.velocity[1])},{_fmt(cfg.velocity[2])}",
        f"seed = {cfg.seed}",
        f"converged = {str(rep.converged).lower()}",
        f"iterations = {rep.iterations}",
        f"energy = {_fmt(rep.energy)}",
        f"theta = {_fmt(rep.theta)}",
        f"omega = {_fmt(rep.omega)}",
        f"residual_psi = {_fmt(rep.residual_psi)}",
        f"residual_A = {_fmt(rep.residual_a)}",
        f"current_defect = {_fmt(rep.current_defect)}",
        f"message = {rep.message}",
    ]
    if rep.breakdown is not None:
        for key, val in rep.breakdown.as_dict().items():
            lines.append(f"energy.{key} = {_fmt(val)}")
    return lines


def run_solve(cfg: RunConfig) -> int:
    grid = cfg.grid()
    p = cfg.params()
    log = _RunLog(cfg.output_dir)
    log.write(f"solve start: model={cfg.model} n={cfg.grid_n} L={cfg.box_l} v={cfg.velocity}")
    try:
        rep = minimize(grid, p, config=cfg.minimize)
    except MpwaveError as exc:
        log.write(f"solve failed: {exc}")
        log.close()
        raise
    state_io.write_state(os.path.join(cfg.output_dir, "state.mpwf"), grid, p, rep.psi, rep.A)
    _write_lines(os.path.join(cfg.output_dir, "report.txt"), _report_lines(cfg, rep))
    rows = ["sample,energy"] + [f"{i},{_fmt(e)}" for i, e in enumerate(rep.energy_trace)]
    _write_lines(os.path.join(cfg.output_dir, "trace.csv"), rows)
    log.write(f"solve done: converged={rep.converged} iters={rep.iterations}")
    log.close()
    print(
        f"energy = {_fmt(rep.energy)}\ntheta = {_fmt(rep.theta)}\n"
        f"omega = {_fmt(rep.omega)}\n"
        f"residual_psi = {_fmt(rep.residual_psi)}\nresidual_A = {_fmt(rep.residual_a)}"
    )
    if not rep.converged:
        print(f"warning: not converged ({rep.message})", file=sys.stderr)
    return 0


def run_sweep(cfg: RunConfig) -> int:
    grid = cfg.grid()
    p = cfg.params()
    if not cfg.speeds:
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_lines(
            os.path.join(cfg.output_dir, "sweep.csv"),
            ["v_mag,energy,energy_minus_rest,theta,omega,residual_psi,residual_A,converged"],
        )
        print("empty speed list: header-only CSV written")
        return 0
    log = _RunLog(cfg.output_dir)
    log.write(f"sweep start: speeds={list(cfg.speeds)}")
    result = diagnostics.mass_sweep(
        grid, p, cfg.speeds, direction=cfg.direction, config=cfg.minimize
    )
    rows = ["v_mag,energy,energy_minus_rest,theta,omega,residual_psi,residual_A,converged"]
    for pt in result.points:
        rest = 0.5 * cfg.mass * pt.speed ** 2 * cfg.lam
        rows.append(
            ",".join(
                [
                    _fmt(pt.speed),
                    _fmt(pt.energy_trav),
                    _fmt(pt.energy_trav - rest),
                    _fmt(pt.theta),
                    _fmt(pt.omega),
                    _fmt(pt.residual_psi),
                    _fmt(pt.residual_a),
                    str(pt.converged).lower(),
                ]
            )
        )
    rows.append(
        f"# fit: alpha = {_fmt(result.alpha)}, beta = {_fmt(result.beta)}, "
        f"alpha_target = {_fmt(result.alpha_target)}, residual = {_fmt(result.fit_residual)}"
    )
    _write_lines(os.path.join(cfg.output_dir, "sweep.csv"), rows)
    log.write("sweep done")
    log.close()
    print(
        f"alpha = {_fmt(result.alpha)} (target {_fmt(result.alpha_target)}), "
        f"beta = {_fmt(result.beta)}"
    )
    return 0


def run_trial(cfg: RunConfig) -> int:
    grid = cfg.grid()
    p = cfg.params()
    report = diagnostics.negativity_witness(grid, p, num=cfg.trial_points)
    os.makedirs(cfg.output_dir, exist_ok=True)
    rows = ["amplitude,dilation,energy,margin"]
    for r in report.rows:
        rows.append(
            ",".join([_fmt(r.amplitude), _fmt(r.dilation), _fmt(r.energy), _fmt(r.margin)])
        )
    rows.append(f"# threshold = {_fmt(report.threshold)}")
    rows.append(f"# slope_at_zero = {_fmt(report.slope_at_zero)}")
    rows.append(f"# found = {str(report.found).lower()}")
    _write_lines(os.path.join(cfg.output_dir, "witness.csv"), rows)
    print(report.message)
    return 0


def _check_lines(grid, p, psi, A) -> tuple:
    """Invariant suite on a stored state; returns (lines, all_pass)."""
    lines = []
    ok = True

    def record(name: str, passed, detail: str) -> None:
        nonlocal ok
        if passed is None:
            lines.append(f"SKIP {name}: {detail}")
            return
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        if not passed:
            ok = False

    br = energy_functional(grid, p, psi, A)
    scale = max(abs(br.total), 1.0)
    defect = abs(br.total - br.total_shifted) / scale
    record("form-equivalence", defect < 1e-8, f"relative defect {defect:.3e}")

    # spin-coupled Laplacian vs iterated Dirac-type operator, on the
    # band-limited part of the state where the identity is exact
    cut = grid.n // 6
    mask = np.ones(grid.shape, dtype=bool)
    for a in range(3):
        mask &= np.abs(np.fft.fftfreq(grid.n, d=1.0 / grid.n)).reshape(
            [-1 if q == a else 1 for q in range(3)]
        ) <= cut
    psi_low = grid.ifft(grid.fft(psi.data) * mask[..., None])
    a_low = grid.ifft(grid.fft(A.data) * mask[..., None]).real
    pp = p.with_(model="P")
    lap = pauli.covariant_laplacian(grid, pp, psi_low, a_low, model="P")
    twice = pauli.pauli_gradient(grid, pp, psi_low, a_low)
    # sigma . D applied twice
    again = np.zeros_like(psi_low)
    dg = pauli.covariant_gradient(grid, pp, twice, a_low)
    for a in range(3):
        again += np.einsum("ij,...j->...i", pauli.SIGMA[a], dg[..., a, :])
    num = float(np.max(np.abs(lap - again)))
    den = max(float(np.max(np.abs(lap))), 1e-300)
    record("spin-laplacian-identity", num / den < 1e-8, f"relative defect {num / den:.3e}")

    # gauge function with only the lowest modes and a small amplitude:
    # exp(i u) then stays effectively band-limited and the covariance
    # identity survives the product truncation
    rng = np.random.default_rng(7)
    u_hat = np.zeros(grid.shape, dtype=complex)
    low = (slice(0, 2),) * 3
    u_hat[low] = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
    u = np.real(grid.ifft(u_hat))
    u *= 0.05 / max(np.max(np.abs(u)), 1e-300)
    phase = np.exp(1j * p.charge / (p.hbar * p.light_speed) * u)[..., None]
    lhs = pauli.covariant_gradient(
        grid, p, phase * psi_low, a_low + spectral.gradient(grid, u).real
    )
    rhs = phase[..., None] * pauli.covariant_gradient(grid, p, psi_low, a_low)
    gnum = float(np.max(np.abs(lhs - rhs)))
    gden = max(float(np.max(np.abs(rhs))), 1e-300)
    record("gauge-covariance", gnum / gden < 1e-6, f"relative defect {gnum / gden:.3e}")

    if p.speed > 0:
        try:
            bounds = apriori_bounds(grid, p, psi, A, total=br.total)
            record(
                "a-priori-bounds",
                bounds.all_hold,
                f"field {bounds.field_bound.lhs:.3e} <= {bounds.field_bound.rhs:.3e}, "
                f"low-field regime {bounds.low_field_regime}",
            )
        except DomainGateError as exc:
            record("a-priori-bounds", None, str(exc))
    else:
        record("a-priori-bounds", None, "static state (v = 0)")

    cb = diagnostics.coulomb_lower_bound(grid, p, psi, A, total=br.total)
    record(
        "coulomb-lower-bound",
        cb.holds,
        f"energy {cb.energy:.6e} >= bound {cb.bound:.6e}",
    )

    res = el_residual(grid, p, psi, A)
    if res.max_rel < 1e-3:
        record("stationarity", True, f"relative residual {res.max_rel:.3e}")
    else:
        record("stationarity", None, f"not a minimizer (residual {res.max_rel:.3e})")
    return lines, ok


def run_check(args: argparse.Namespace) -> int:
    grid, p, psi, A = state_io.read_state(args.state)
    lines, ok = _check_lines(grid, p, psi, A)
    print("\n".join(lines))
    print("all checks passed" if ok else "CHECK FAILED")
    return 0 if ok else 4


# -- entry point -----------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--out", help="output directory (default: current)")
    sub.add_argument("--v", help="velocity as 'vx,vy,vz'")
    sub.add_argument("--model", choices=("S", "P"), help="coupling model")
    sub.add_argument("--grid", type=int, help="grid points per axis")
    sub.add_argument("--box", type=float, help="box edge length")
    sub.add_argument("--seed", type=int, help="seed for all randomness")
    sub.add_argument(
        "--force",
        action="store_true",
        help="skip the subcritical speed gate (energy may be unbounded below)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpwave",
        description="travelling-wave solver for the coupled matter-field system",
        epilog="MPW_THREADS bounds kernel parallelism; exit codes: "
        "0 ok, 2 input error, 3 domain gate, 4 solver failure",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", help="minimize at one velocity and persist the state")
    _add_common(s)
    s.set_defaults(func=lambda a: run_solve(resolve_config(a)))

    s = subs.add_parser("sweep", help="minimize over a speed list, emit CSV and a fit")
    _add_common(s)
    s.add_argument("--speeds", help="comma-separated speed magnitudes")
    s.set_defaults(func=lambda a: run_sweep(resolve_config(a)))

    s = subs.add_parser("trial", help="scan the explicit trial family (negativity witness)")
    _add_common(s)
    s.set_defaults(func=lambda a: run_trial(resolve_config(a)))

    s = subs.add_parser("check", help="run the invariant suite on a saved state")
    s.add_argument("state", help="state file written by solve")
    s.set_defaults(func=run_check)

    return parser


def main(argv=None) -> int:
    threads = os.environ.get("MPW_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MpwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in _EXIT.items():
            if isinstance(exc, klass):
                return code
        return 2


if __name__ == "__main__":
    sys.exit(main())
