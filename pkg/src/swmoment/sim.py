"""Simulation front end: configuration, scenario presets, time loop, output."""

import configparser
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import build_basis, reconstruct_velocity
from .friction import (
    Coulomb,
    CoulombBottom,
    ManningBottom,
    MuI,
    MuIBottom,
    NewtonianManning,
    NewtonianSlip,
    SavageHutter,
    SlipBottom,
    derive_dimensionless,
    savage_hutter_violations,
)
from .scheme import (
    StepperConfig,
    apply_transmissive_bc,
    cfl_dt,
    make_grid,
    step_explicit,
    step_semi_implicit,
)
from .state import WetDryPolicy, to_conservative, to_primitive
from .topography import FlatBed, RunoffBed, TabulatedBed, eval_b

__all__ = [
    "SimConfig",
    "Snapshot",
    "RunResult",
    "preset",
    "build_model",
    "build_bed",
    "build_grid",
    "run",
    "write_snapshot",
    "emit_profile",
    "front_position",
    "config_from_mapping",
    "config_to_mapping",
    "read_config_file",
]

_BLOCK_IC = {"kind": "block", "h": 0.08, "x_lo": 0.3, "x_hi": 0.5}


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation run.

    Physical inputs (H, L, g, rho, friction parameters) are in SI units;
    dimensionless groups are derived internally. Angles are in radians.
    """

    N: int = 2
    J: int = 1000
    x_a: float = 0.0
    x_b: float = 1.0
    theta: float = math.pi / 4
    H: float = 0.1
    L: float = 10.0
    g: float = 9.81
    rho: float = 1200.0
    rho_s: float | None = None
    friction: str = "newtonian_slip"
    friction_params: dict = field(default_factory=dict)
    mode: str = "semi_implicit"
    cfl: float = 0.05
    newton_tol: float = 1e-6
    newton_max_iter: int = 50
    dt_max: float = 1e-3
    dt_fixed: float | None = None
    path_variable: str = "primitive"
    h_min: float = 1e-6
    quad_points: int = 32
    ic: dict = field(default_factory=lambda: dict(_BLOCK_IC))
    bathymetry: str = "flat"
    snapshot_times: tuple = (0.4, 0.6, 1.0)
    out_dir: str | None = None
    profile_resolution: int | None = None
    flip_topography_sign: bool = False
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.J < 3:
            raise ValueError("J must be at least 3")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not 0.0 <= self.theta < math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2)")
        times = tuple(float(t) for t in self.snapshot_times)
        if not times:
            raise ValueError("need at least one snapshot time")
        if any(t < 0.0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be nonnegative and strictly ascending")
        object.__setattr__(self, "snapshot_times", times)

    @property
    def eps(self) -> float:
        return self.H / self.L


@dataclass(frozen=True)
class Snapshot:
    """Per-cell solution record at one time: x, h, u_m, alpha (J, N), bottom
    velocity, and free surface h_s = h + b."""

    time: float
    x: np.ndarray
    h: np.ndarray
    u_m: np.ndarray
    alpha: np.ndarray
    u_bottom: np.ndarray
    h_s: np.ndarray


@dataclass(frozen=True)
class RunResult:
    snapshots: list
    diagnostics: dict
    config: SimConfig


def preset(example: int, **overrides) -> SimConfig:
    """Ready-made configurations for the four reference scenarios.

    1: Newtonian slip, N=2, semi-implicit.  2: slip/Manning bottom-friction
    comparison, N=2 (pass law="manning" and/or Lambda=/n= to sweep).
    3: Savage-Hutter, N=2, explicit (pass delta_deg=15 or 18).
    4: granular mu(I) with slip bottom, explicit, CFL=0.01, 8-point bulk
    quadrature (pass N=3..6 and bathymetry="runoff" for the curved bed).
    """
    common = dict(
        J=1000,
        theta=math.pi / 4,
        H=0.1,
        L=10.0,
        g=9.81,
        rho=1200.0,
        h_min=1e-6,
        snapshot_times=(0.4, 0.6, 1.0),
    )
    H = common["H"]
    # slip lengths are quoted dimensionless; the stored value is the physical
    # length in meters (dimensionless again after dividing by H internally)
    if example == 1:
        base = dict(
            common,
            N=2,
            friction="newtonian_slip",
            friction_params={"Lambda": 1e-4 * H, "eta": 0.01},
            mode="semi_implicit",
            cfl=0.05,
        )
    elif example == 2:
        law = overrides.pop("law", "slip")
        if law == "slip":
            params = {"Lambda": overrides.pop("Lambda", 0.0015) * H, "eta": 0.01}
            friction = "newtonian_slip"
        elif law == "manning":
            params = {"n": overrides.pop("n", 0.0165), "eta": 0.01}
            friction = "newtonian_manning"
        else:
            raise ValueError(f"unknown bottom-friction law {law!r}")
        base = dict(
            common,
            N=2,
            friction=friction,
            friction_params=params,
            mode="semi_implicit",
            cfl=0.05,
        )
    elif example == 3:
        delta_deg = overrides.pop("delta_deg", 15.0)
        base = dict(
            common,
            N=2,
            friction="savage_hutter",
            friction_params={"delta": math.radians(delta_deg), "phi_int": math.radians(20.0)},
            mode="explicit",
            cfl=0.05,
        )
    elif example == 4:
        base = dict(
            common,
            N=3,
            rho=1550.0,
            rho_s=2500.0,
            friction="mu_i",
            friction_params={
                "mu_s": 0.48,
                "mu_2": 0.73,
                "I0": 0.279,
                "d_s": 7e-4,
                "bottom": "slip",
                "Lambda": 0.001 * H,
                "eta0": 0.001,
            },
            mode="explicit",
            cfl=0.01,
            quad_points=8,
        )
    else:
        raise ValueError(f"unknown example id {example!r}")
    base.update(overrides)
    return SimConfig(**base)


def build_model(config: SimConfig):
    """Instantiate the friction model with dimensionless parameters derived
    from the configured SI inputs."""
    kind = config.friction
    p = config.friction_params
    scales = dict(H=config.H, L=config.L, g=config.g, theta=config.theta,
                  rho=config.rho, rho_s=config.rho_s)
    if kind == "newtonian_slip":
        d = derive_dimensionless(**scales, eta=p["eta"], Lambda=p["Lambda"])
        return NewtonianSlip(nu=d["nu"], lam=d["lam"])
    if kind == "newtonian_manning":
        d = derive_dimensionless(**scales, eta=p["eta"], n=p["n"])
        return NewtonianManning(n2=d["n2"], nu=d["nu"])
    if kind == "savage_hutter":
        return SavageHutter(delta=p["delta"], phi_int=p["phi_int"])
    if kind == "coulomb":
        return Coulomb(delta=p["delta"], mu=p["mu"])
    if kind == "mu_i":
        d = derive_dimensionless(**scales, I0=p["I0"], d_s=p["d_s"],
                                 eta0=p.get("eta0"), Lambda=p.get("Lambda"),
                                 n=p.get("n"))
        bottom = p.get("bottom", "slip")
        if bottom == "slip":
            law = SlipBottom(nu0=d["nu0"], lam=d["lam"])
        elif bottom == "manning":
            law = ManningBottom(n2=d["n2"])
        elif bottom == "coulomb":
            law = CoulombBottom(delta=p["delta"])
        elif bottom == "mu_i":
            law = MuIBottom()
        else:
            raise ValueError(f"unknown granular bottom law {bottom!r}")
        return MuI(mu_s=p["mu_s"], mu_2=p["mu_2"], c_I=d["c_I"], bottom_law=law,
                   quad_points=config.quad_points)
    raise ValueError(f"unknown friction model {kind!r}")


def build_bed(config: SimConfig):
    """Bathymetry object from the config: flat, runoff, or a sample file path."""
    spec = config.bathymetry
    if spec == "flat":
        return FlatBed()
    if spec == "runoff":
        return RunoffBed(theta=config.theta)
    return TabulatedBed.from_file(spec)


def build_grid(config: SimConfig, bed=None):
    """Grid with the configured initial condition in conservative variables."""
    if bed is None:
        bed = build_bed(config)
    policy = WetDryPolicy(h_min=config.h_min)
    grid = make_grid(config.x_a, config.x_b, config.J, config.N, policy, bed)
    ic = config.ic
    P = np.zeros((config.J, config.N + 2))
    if ic["kind"] == "block":
        # truly dry background: cells sitting exactly at h_min would turn wet
        # on any infinitesimal transport deposit
        inside = (grid.x >= ic["x_lo"]) & (grid.x <= ic["x_hi"])
        P[:, 0] = np.where(inside, ic["h"], 0.0)
    elif ic["kind"] == "uniform":
        P[:, 0] = ic["h"]
        P[:, 1] = ic.get("u_m", 0.0)
        alpha = ic.get("alpha", ())
        for j, a in enumerate(alpha):
            P[:, 2 + j] = a
    else:
        raise ValueError(f"unknown initial condition {ic['kind']!r}")
    U = grid.U.copy()
    U[1:-1] = to_conservative(P)
    grid = replace(grid, U=U)
    return apply_transmissive_bc(grid)


def _snapshot(grid, t: float, bed, policy: WetDryPolicy) -> Snapshot:
    U = grid.interior()
    P = to_primitive(U, policy)
    h = P[:, 0]
    alpha = P[:, 2:]
    u_bottom = P[:, 1] + np.sum(alpha, axis=1)
    b = np.asarray(eval_b(bed, grid.x), dtype=float)
    return Snapshot(time=t, x=grid.x.copy(), h=h.copy(), u_m=P[:, 1].copy(),
                    alpha=alpha.copy(), u_bottom=u_bottom, h_s=h + b)


def run(config: SimConfig) -> RunResult:
    """Time loop: apply boundary conditions, pick the CFL step (capped to land
    exactly on snapshot times), step, and record diagnostics."""
    basis = build_basis(config.N, quad_points=config.quad_points)
    model = build_model(config)
    bed = build_bed(config)
    grid = build_grid(config, bed)
    policy = grid.policy
    sconf = StepperConfig(
        mode=config.mode,
        cfl=config.cfl,
        newton_tol=config.newton_tol,
        newton_max_iter=config.newton_max_iter,
        dt_max=config.dt_max,
        dt_fixed=config.dt_fixed,
        path_variable=config.path_variable,
    )
    stepper = step_explicit if config.mode == "explicit" else step_semi_implicit
    eps, theta = config.eps, config.theta
    diag = {k: [] for k in ("time", "dt", "mass", "max_speed", "dry_cells",
                            "sh_violations", "newton_iters", "clamped_mass")}
    snapshots = []
    pending = list(config.snapshot_times)
    if pending[0] == 0.0:
        snapshots.append(_snapshot(grid, 0.0, bed, policy))
        pending.pop(0)
    t = 0.0
    steps = 0
    while pending:
        t_target = pending[0]
        while t < t_target:
            steps += 1
            if steps > config.max_steps:
                raise RuntimeError(f"exceeded {config.max_steps} steps at t={t:.8g}")
            grid = apply_transmissive_bc(grid)
            dt = cfl_dt(grid, sconf, eps, theta, basis)
            landed = t + dt >= t_target
            if landed:
                dt = t_target - t
            try:
                grid, info = stepper(grid, dt, model, eps, theta, basis, sconf,
                                     config.flip_topography_sign)
            except RuntimeError as exc:
                raise RuntimeError(f"step aborted at t={t:.8g}: {exc}") from exc
            t = t_target if landed else t + dt
            _record(diag, t, dt, grid, info, basis, policy)
        snapshots.append(_snapshot(grid, t_target, bed, policy))
        pending.pop(0)
    return RunResult(snapshots=snapshots,
                     diagnostics={k: np.asarray(v) for k, v in diag.items()},
                     config=config)


def _record(diag: dict, t: float, dt: float, grid, info: dict, basis,
            policy: WetDryPolicy) -> None:
    U = grid.interior()
    P = to_primitive(U, policy)
    wet = P[:, 0] > policy.h_min
    diag["time"].append(t)
    diag["dt"].append(dt)
    diag["mass"].append(float(np.sum(U[:, 0]) * grid.dx))
    diag["max_speed"].append(float(np.max(np.abs(P[wet, 1]), initial=0.0)))
    diag["dry_cells"].append(info.get("dry_cells", 0))
    diag["sh_violations"].append(savage_hutter_violations(P, basis, policy.h_min))
    diag["newton_iters"].append(info.get("newton_iters_total", 0))
    diag["clamped_mass"].append(info.get("clamped_mass", 0.0))


def write_snapshot(snapshot: Snapshot, path: str) -> None:
    """CSV with 17 significant digits, one row per interior cell."""
    N = snapshot.alpha.shape[1]
    header = ["x", "h", "u_m"] + [f"alpha_{i}" for i in range(1, N + 1)] + ["u_bottom", "h_s"]
    cols = np.column_stack([snapshot.x, snapshot.h, snapshot.u_m, snapshot.alpha,
                            snapshot.u_bottom, snapshot.h_s])
    try:
        with open(path, "w", newline="") as f:
            f.write(",".join(header) + "\n")
            for row in cols:
                f.write(",".join("%.17g" % v for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {path}: {exc}") from exc


def emit_profile(snapshot: Snapshot, basis, resolution: int, path: str | None = None) -> np.ndarray:
    """Vertical-velocity field u(x, zeta) as columnar (x, zeta, u) rows.

    zeta runs over `resolution` equispaced levels from bottom (0) to surface (1);
    rows are grouped by cell. Optionally written as a CSV for heat-map plotting.
    """
    if resolution < 2:
        raise ValueError("profile resolution must be at least 2")
    zeta = np.linspace(0.0, 1.0, resolution)
    J = len(snapshot.x)
    rows = np.empty((J * resolution, 3))
    for j in range(J):
        u = reconstruct_velocity(basis, snapshot.u_m[j], snapshot.alpha[j], zeta)
        block = slice(j * resolution, (j + 1) * resolution)
        rows[block, 0] = snapshot.x[j]
        rows[block, 1] = zeta
        rows[block, 2] = u
    if path is not None:
        try:
            with open(path, "w", newline="") as f:
                f.write("x,zeta,u\n")
                for row in rows:
                    f.write(",".join("%.17g" % v for v in row) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write profile to {path}: {exc}") from exc
    return rows


def front_position(snapshot: Snapshot, h_min: float) -> float:
    """Largest x whose height exceeds 10 * h_min (-inf if the flow is all dry).

    The factor 10 keeps desingularization noise in nearly-dry cells from
    registering as flow.
    """
    mask = snapshot.h > 10.0 * h_min
    if not np.any(mask):
        return -math.inf
    return float(snapshot.x[np.flatnonzero(mask)[-1]])


def write_summary(result: RunResult, path: str) -> None:
    """Parameters plus the per-step diagnostics series as a readable text file."""
    cfg = result.config
    d = result.diagnostics
    try:
        with open(path, "w", newline="") as f:
            f.write("# run summary\n")
            for section, mapping in config_to_mapping(cfg).items():
                for key, value in mapping.items():
                    f.write(f"{section}.{key} = {value}\n")
            f.write("# diagnostics\n")
            keys = list(d.keys())
            f.write(",".join(keys) + "\n")
            for i in range(len(d["time"])):
                f.write(",".join("%.17g" % float(d[k][i]) for k in keys) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def config_to_mapping(config: SimConfig) -> dict:
    """Flatten a SimConfig into {section: {key: string}} (the file format)."""
    model = {"N": config.N, "theta": config.theta, "friction": config.friction}
    for key, value in config.friction_params.items():
        model[_TO_FILE_KEY.get(key, key.lower())] = value
    mapping = {
        "model": model,
        "scaling": {"H": config.H, "L": config.L, "g": config.g, "rho": config.rho},
        "grid": {"J": config.J, "x_a": config.x_a, "x_b": config.x_b,
                 "bathymetry": config.bathymetry},
        "ic": dict(config.ic),
        "stepper": {"mode": config.mode, "cfl": config.cfl,
                    "newton_tol": config.newton_tol,
                    "newton_max_iter": config.newton_max_iter,
                    "dt_max": config.dt_max, "path_variable": config.path_variable,
                    "h_min": config.h_min, "quad_points": config.quad_points},
        "output": {"times": " ".join("%.17g" % t for t in config.snapshot_times),
                   "flip_topography_sign": config.flip_topography_sign},
    }
    if config.rho_s is not None:
        mapping["scaling"]["rho_s"] = config.rho_s
    if config.dt_fixed is not None:
        mapping["stepper"]["dt_fixed"] = config.dt_fixed
    if config.out_dir is not None:
        mapping["output"]["dir"] = config.out_dir
    if config.profile_resolution is not None:
        mapping["output"]["profile_resolution"] = config.profile_resolution
    if "alpha" in mapping["ic"]:
        mapping["ic"]["alpha"] = " ".join("%.17g" % a for a in mapping["ic"]["alpha"])
    return {s: {k: _fmt(v) for k, v in kv.items()} for s, kv in mapping.items()}


# the moment order already uses key "n" in [model], so the Manning coefficient
# gets the file key "manning_n"
_FRICTION_KEYS = {
    "newtonian_slip": ("lambda", "eta"),
    "newtonian_manning": ("manning_n", "eta"),
    "savage_hutter": ("delta", "phi_int"),
    "coulomb": ("delta", "mu"),
    "mu_i": ("mu_s", "mu_2", "i0", "d_s", "bottom", "lambda", "eta0", "manning_n", "delta"),
}

_CANONICAL = {"lambda": "Lambda", "i0": "I0", "manning_n": "n"}
_TO_FILE_KEY = {"Lambda": "lambda", "I0": "i0", "n": "manning_n"}


def config_from_mapping(mapping: dict) -> SimConfig:
    """Build a SimConfig from {section: {key: string}} (inverse of the above)."""
    sections = {s.lower(): {k.lower(): v for k, v in kv.items()} for s, kv in mapping.items()}
    model = sections.get("model", {})
    scaling = sections.get("scaling", {})
    grid = sections.get("grid", {})
    ic_sec = sections.get("ic", {})
    stepper = sections.get("stepper", {})
    output = sections.get("output", {})
    kw = {}
    if "n" in model:
        kw["N"] = int(model["n"])
    if "theta" in model:
        kw["theta"] = float(model["theta"])
    friction = model.get("friction", "newtonian_slip")
    kw["friction"] = friction
    if friction not in _FRICTION_KEYS:
        raise ValueError(f"unknown friction model {friction!r}")
    params = {}
    for key in _FRICTION_KEYS[friction]:
        if key in model:
            raw = model[key]
            params[_CANONICAL.get(key, key)] = raw if key == "bottom" else float(raw)
    kw["friction_params"] = params
    for key, cast in (("h", float), ("l", float), ("g", float), ("rho", float),
                      ("rho_s", float)):
        if key in scaling:
            kw[key.upper() if key in ("h", "l") else key] = cast(scaling[key])
    for key, cast in (("j", int), ("x_a", float), ("x_b", float)):
        if key in grid:
            kw[key.upper() if key == "j" else key] = cast(grid[key])
    if "bathymetry" in grid:
        kw["bathymetry"] = grid["bathymetry"]
    if ic_sec:
        ic = {"kind": ic_sec.get("kind", "block")}
        for key in ("h", "x_lo", "x_hi", "u_m"):
            if key in ic_sec:
                ic[key] = float(ic_sec[key])
        if "alpha" in ic_sec:
            ic["alpha"] = tuple(float(a) for a in ic_sec["alpha"].replace(",", " ").split())
        kw["ic"] = ic
    for key, cast in (("mode", str), ("cfl", float), ("newton_tol", float),
                      ("newton_max_iter", int), ("dt_max", float),
                      ("dt_fixed", float), ("path_variable", str),
                      ("h_min", float), ("quad_points", int)):
        if key in stepper:
            kw[key] = cast(stepper[key])
    if "times" in output:
        kw["snapshot_times"] = tuple(
            float(t) for t in output["times"].replace(",", " ").split())
    if "dir" in output:
        kw["out_dir"] = output["dir"]
    if "profile_resolution" in output:
        kw["profile_resolution"] = int(output["profile_resolution"])
    if "flip_topography_sign" in output:
        kw["flip_topography_sign"] = output["flip_topography_sign"].strip().lower() in ("true", "1", "yes")
    if "max_steps" in stepper:
        kw["max_steps"] = int(stepper["max_steps"])
    return SimConfig(**kw)


def read_config_file(path: str) -> dict:
    """Parse an INI-style config file into {section: {key: string}}."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    return {s: dict(parser.items(s)) for s in parser.sections()}


def write_outputs(result: RunResult, out_dir: str) -> list:
    """Write snapshot CSVs, the run summary, and optional profile fields."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    written = []
    for snap in result.snapshots:
        name = os.path.join(out_dir, f"snapshot_t{snap.time:g}.csv")
        write_snapshot(snap, name)
        written.append(name)
    if cfg.profile_resolution is not None:
        basis = build_basis(cfg.N, quad_points=cfg.quad_points)
        for snap in result.snapshots:
            name = os.path.join(out_dir, f"profile_t{snap.time:g}.csv")
            emit_profile(snap, basis, cfg.profile_resolution, name)
            written.append(name)
    summary = os.path.join(out_dir, "summary.txt")
    write_summary(result, summary)
    written.append(summary)
    return written
