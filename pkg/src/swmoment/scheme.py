"""Path-conservative polynomial-viscosity finite-volume scheme with wet-dry fronts."""

from dataclasses import dataclass, replace

import numpy as np

from .basis import MomentBasis
from .hswme import source_batch, source_split_batch, system_matrix_batch, wavespeeds_batch
from .state import WetDryPolicy, is_dry, to_primitive

__all__ = [
    "StepperConfig",
    "Grid",
    "make_grid",
    "apply_transmissive_bc",
    "roe_matrix",
    "viscosity_matrix",
    "fluctuations",
    "cfl_dt",
    "step_explicit",
    "step_semi_implicit",
]


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping controls.

    mode is "explicit" or "semi_implicit"; dt_fixed overrides the CFL-derived
    step (convergence studies); dt_max is the fallback step on an all-dry grid.
    """

    mode: str = "semi_implicit"
    cfl: float = 0.05
    newton_tol: float = 1e-6
    newton_max_iter: int = 50
    fd_eps: float = 1e-7
    dt_max: float = 1e-3
    dt_fixed: float | None = None
    path_variable: str = "primitive"

    def __post_init__(self):
        if self.mode not in ("explicit", "semi_implicit"):
            raise ValueError(f"unknown stepper mode {self.mode!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("CFL must lie in (0, 1]")
        if self.newton_tol <= 0.0:
            raise ValueError("Newton tolerance must be positive")
        if self.path_variable not in ("primitive", "conservative"):
            raise ValueError(f"unknown path variable {self.path_variable!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid: J interior cells plus one ghost cell on each side.

    U holds conservative rows (J+2, N+2); row 0 and row J+1 are ghosts.
    dbdx holds interior cell slopes (J,).
    """

    x: np.ndarray
    dx: float
    U: np.ndarray
    dbdx: np.ndarray
    policy: WetDryPolicy

    @property
    def J(self) -> int:
        return len(self.x)

    def interior(self) -> np.ndarray:
        return self.U[1:-1]


def make_grid(x_a: float, x_b: float, J: int, N: int, policy: WetDryPolicy, bed=None) -> Grid:
    """Grid over (x_a, x_b) with J cells, zero-initialized states and bed slopes."""
    if J < 3:
        raise ValueError("need at least 3 cells")
    if not x_b > x_a:
        raise ValueError("domain must satisfy x_a < x_b")
    dx = (x_b - x_a) / J
    x = x_a + dx * (np.arange(J) + 0.5)
    if bed is None:
        dbdx = np.zeros(J)
    else:
        from .topography import cell_slope

        dbdx = np.asarray(cell_slope(bed, x - 0.5 * dx, x + 0.5 * dx), dtype=float)
    return Grid(x=x, dx=dx, U=np.zeros((J + 2, N + 2)), dbdx=dbdx, policy=policy)


def apply_transmissive_bc(grid: Grid) -> Grid:
    """Copy the boundary cells into the ghost cells (waves exit freely)."""
    U = grid.U.copy()
    U[0] = U[1]
    U[-1] = U[-2]
    return replace(grid, U=U)


# activation margin for rewetting: a dry cell turns wet only once its
# transported depth clears this multiple of h_min, while a wet cell dries at
# h_min itself. Sub-threshold interface-viscosity deposits then accumulate as
# stored (velocity-free) mass instead of creeping one cell per step, which
# arrests the spurious upslope tail a quasi-static draining front would
# otherwise pump out; resolved fronts deposit far above the margin and are
# unaffected.
WETTING_HYSTERESIS = 50.0


def _stored_dry(U: np.ndarray, policy: WetDryPolicy) -> np.ndarray:
    """Dry cells, including stored ones below the rewetting margin.

    A stored cell keeps its transported depth but has had every velocity row
    zeroed exactly, which marks it as still-dry until the depth clears the
    activation margin; active cells always carry floating-point velocity
    residue, so the marker never misfires on resolved flow.
    """
    h = U[:, 0]
    dry = is_dry(h, policy)
    stored = (h <= WETTING_HYSTERESIS * policy.h_min) & np.all(U[:, 1:] == 0.0, axis=1)
    return dry | stored


def _path_matrices(U: np.ndarray, policy: WetDryPolicy, eps: float, theta: float,
                   basis: MomentBasis, path: str) -> tuple[np.ndarray, np.ndarray]:
    """Path-averaged matrices for all consecutive interfaces of U rows.

    Dry-wet interfaces use the wet state's matrix (constant path); dry-dry
    interfaces are flagged inert (no fluctuations). Returns (A, inert).
    """
    P = to_primitive(U, policy)
    wet = ~_stored_dry(U, policy)
    wet_l, wet_r = wet[:-1], wet[1:]
    inert = ~(wet_l | wet_r)
    if path == "primitive":
        left = np.where(wet_l[:, None], P[:-1], P[1:])
        right = np.where(wet_r[:, None], P[1:], P[:-1])
        nodes, weights = _PATH_RULE
        A = np.zeros((U.shape[0] - 1, U.shape[1], U.shape[1]))
        for s, w in zip(nodes, weights):
            A += w * system_matrix_batch(left + s * (right - left), eps, theta, basis)
    else:
        left = np.where(wet_l[:, None], U[:-1], U[1:])
        right = np.where(wet_r[:, None], U[1:], U[:-1])
        nodes, weights = _PATH_RULE
        A = np.zeros((U.shape[0] - 1, U.shape[1], U.shape[1]))
        for s, w in zip(nodes, weights):
            P_s = to_primitive(left + s * (right - left), policy)
            A += w * system_matrix_batch(P_s, eps, theta, basis)
    return A, inert


def roe_matrix(U_L, U_R, eps: float, theta: float, basis: MomentBasis,
               policy: WetDryPolicy, path: str = "primitive") -> np.ndarray:
    """Interface matrix: 3-point Gauss quadrature of the transport matrix along
    a linear path between the two states (primitive interpolation by default)."""
    U = np.stack([np.asarray(U_L, dtype=float), np.asarray(U_R, dtype=float)])
    A, _ = _path_matrices(U, policy, eps, theta, basis, path)
    return A[0]


def viscosity_matrix(A: np.ndarray, dx: float, dt: float) -> np.ndarray:
    """Q = (dx / 2 dt) I + (dt / 2 dx) A^2 (works on a matrix or a batch)."""
    if dx <= 0.0 or dt <= 0.0:
        raise ValueError("dx and dt must be positive")
    A = np.asarray(A, dtype=float)
    eye = np.eye(A.shape[-1])
    return (dx / (2.0 * dt)) * eye + (dt / (2.0 * dx)) * (A @ A)


def fluctuations(U_L, U_R, dx: float, dt: float, eps: float, theta: float,
                 basis: MomentBasis, policy: WetDryPolicy,
                 path: str = "primitive") -> tuple[np.ndarray, np.ndarray]:
    """Left/right-going interface fluctuations (D_minus, D_plus).

    D_plus + D_minus = A (U_R - U_L) with A the path-averaged matrix and the
    viscosity matrix Q splitting the jump. Inert interfaces (dry-dry, or a
    wet-dry front not advancing into the dry cell) carry no fluctuations.
    """
    U = np.stack([np.asarray(U_L, dtype=float), np.asarray(U_R, dtype=float)])
    A, inert = _path_matrices(U, policy, eps, theta, basis, path)
    if inert[0]:
        zero = np.zeros(U.shape[1])
        return zero, zero.copy()
    Q = viscosity_matrix(A[0], dx, dt)
    dU = U[1] - U[0]
    D_minus = 0.5 * (A[0] - Q) @ dU
    D_plus = 0.5 * (A[0] + Q) @ dU
    return D_minus, D_plus


def cfl_dt(grid: Grid, config: StepperConfig, eps: float, theta: float,
           basis: MomentBasis) -> float:
    """CFL time step cfl * dx / max wavespeed over wet cells; dt_max if all dry."""
    if config.dt_fixed is not None:
        return config.dt_fixed
    U = grid.interior()
    wet = ~is_dry(U[:, 0], grid.policy)
    if not np.any(wet):
        return config.dt_max
    P = to_primitive(U[wet], grid.policy)
    lam = np.max(wavespeeds_batch(P, eps, theta, basis))
    if lam <= 0.0:
        return config.dt_max
    # no upper cap here: the interface viscosity scales with dx/(2 dt), so
    # shrinking dt below the CFL step would only add diffusion
    return config.cfl * grid.dx / float(lam)


def _transport(grid: Grid, dt: float, eps: float, theta: float, basis: MomentBasis,
               path: str) -> np.ndarray:
    """Transport-only predictor for the interior cells."""
    U = grid.U
    A, inert = _path_matrices(U, grid.policy, eps, theta, basis, path)
    Q = viscosity_matrix(A, grid.dx, dt)
    dU = U[1:] - U[:-1]
    D_minus = 0.5 * np.einsum("kij,kj->ki", A - Q, dU)
    D_plus = 0.5 * np.einsum("kij,kj->ki", A + Q, dU)
    D_minus[inert] = 0.0
    D_plus[inert] = 0.0
    return U[1:-1] - (dt / grid.dx) * (D_plus[:-1] + D_minus[1:])


def _dry_after_transport(U_check: np.ndarray, was_dry: np.ndarray,
                         policy: WetDryPolicy) -> np.ndarray:
    """Dryness of the post-transport state with the rewetting margin."""
    h_check = U_check[:, 0]
    dry = is_dry(h_check, policy)
    dry |= was_dry & (h_check <= WETTING_HYSTERESIS * policy.h_min)
    return dry


def _finalize(U_check: np.ndarray, U_new: np.ndarray, dry_after: np.ndarray,
              policy: WetDryPolicy) -> tuple[np.ndarray, dict]:
    """Zero dry-cell velocities, keep their transported depth, clamp negatives."""
    out = U_new.copy()
    out[dry_after, 1:] = 0.0
    out[dry_after, 0] = U_check[dry_after, 0]
    clamped = 0.0
    negative = out[:, 0] < 0.0
    if np.any(negative):
        clamped = float(-np.sum(out[negative, 0]))
        out[negative, 0] = 0.0
    return out, {"dry_cells": int(np.sum(dry_after)), "clamped_mass": clamped}


def _check_finite(U: np.ndarray, stage: str) -> None:
    bad = ~np.all(np.isfinite(U), axis=1)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise RuntimeError(f"non-finite state after {stage} in cell {j + 1}")


def _limited_source(P: np.ndarray, dt: float, model, eps: float, theta: float,
                    dbdx: np.ndarray, basis: MomentBasis,
                    flip_topography_sign: bool) -> np.ndarray:
    """Explicit source with a dissipativity guard on the friction part.

    Friction damps the velocity profile; a forward-Euler step larger than the
    friction relaxation time would overshoot and reverse it, which diverges on
    thin cells near wet-dry fronts. The friction rows are scaled per cell so
    their energy projection onto the velocity profile is driven at most to
    zero within the step. The scale is 1 wherever the step resolves the
    friction time scale, so resolved cells see plain forward Euler.
    """
    S_drive, S_fric = source_split_batch(P, model, theta, eps, dbdx, basis,
                                         flip_topography_sign)
    N = basis.N
    # energy weights of (u_m, alpha_1..alpha_N): ∫ u(ζ)² dζ diagonalizes
    # to u_m² + Σ α_i²/(2i+1)
    w = 1.0 / (2.0 * np.arange(N + 1) + 1.0)
    v = P[:, 1:]
    dv = dt * S_fric[:, 1:] / P[:, 0][:, None]
    num = np.einsum("k,mk,mk->m", w, v, dv)
    den = np.einsum("k,mk,mk->m", w, dv, dv)
    gamma = np.ones(P.shape[0])
    overshoot = num < 0.0
    gamma[overshoot] = np.minimum(1.0, -num[overshoot] / den[overshoot])
    return S_drive + gamma[:, None] * S_fric


def step_explicit(grid: Grid, dt: float, model, eps: float, theta: float,
                  basis: MomentBasis, config: StepperConfig | None = None,
                  flip_topography_sign: bool = False) -> tuple[Grid, dict]:
    """Forward-Euler step: transport fluctuations plus the explicit source.

    The source is evaluated at the pre-step state and applied only to cells
    that are wet both before the step and after the transport predictor; its
    friction part is guarded against overshoot (see _limited_source).
    """
    path = config.path_variable if config is not None else "primitive"
    _check_finite(grid.interior(), "input")
    U_check = _transport(grid, dt, eps, theta, basis, path)
    _check_finite(U_check, "transport")
    U_n = grid.interior()
    was_dry = _stored_dry(U_n, grid.policy)
    dry_after = _dry_after_transport(U_check, was_dry, grid.policy)
    apply_src = ~was_dry & ~dry_after
    U_new = U_check.copy()
    if np.any(apply_src):
        P = to_primitive(U_n[apply_src], grid.policy)
        S = _limited_source(P, dt, model, eps, theta, grid.dbdx[apply_src],
                            basis, flip_topography_sign)
        U_new[apply_src] += dt * S
    _check_finite(U_new, "source")
    U_out, info = _finalize(U_check, U_new, dry_after, grid.policy)
    U_full = grid.U.copy()
    U_full[1:-1] = U_out
    return replace(grid, U=U_full), info


def step_semi_implicit(grid: Grid, dt: float, model, eps: float, theta: float,
                       basis: MomentBasis, config: StepperConfig,
                       flip_topography_sign: bool = False) -> tuple[Grid, dict]:
    """Splitting step: explicit transport predictor, then a per-cell implicit
    source solve U = U_check + dt S(U) by Newton iteration with a
    central-difference Jacobian. Cells dry after transport skip the solve."""
    _check_finite(grid.interior(), "input")
    U_check = _transport(grid, dt, eps, theta, basis, config.path_variable)
    _check_finite(U_check, "transport")
    was_dry = _stored_dry(grid.interior(), grid.policy)
    dry_after = _dry_after_transport(U_check, was_dry, grid.policy)
    wet_after = ~dry_after
    U_new = U_check.copy()
    iters_total = 0
    iters_max = 0
    if np.any(wet_after):
        idx = np.flatnonzero(wet_after)
        target = U_check[idx]
        dbdx = grid.dbdx[idx]
        policy = grid.policy

        def residual(V: np.ndarray) -> np.ndarray:
            P = to_primitive(V, policy)
            S = source_batch(P, model, theta, eps, dbdx, basis, flip_topography_sign)
            return V - target - dt * S

        V = target.copy()
        R = residual(V)
        active = np.max(np.abs(R), axis=1) >= config.newton_tol
        m = V.shape[1]
        iteration = 0
        while np.any(active):
            iteration += 1
            if iteration > config.newton_max_iter:
                j = int(idx[np.argmax(active)])
                r = float(np.max(np.abs(R[active])))
                raise RuntimeError(
                    f"Newton solve did not converge in cell {j + 1}: residual {r:.3e}"
                )
            Va = V[active]
            Ra = R[active]
            sub_db = dbdx[active]
            sub_target = target[active]

            def residual_sub(W: np.ndarray) -> np.ndarray:
                P = to_primitive(W, policy)
                S = source_batch(P, model, theta, eps, sub_db, basis, flip_topography_sign)
                return W - sub_target - dt * S

            eps_fd = config.fd_eps * np.maximum(1.0, np.abs(Va))
            Jm = np.empty((Va.shape[0], m, m))
            for c in range(m):
                Vp = Va.copy()
                Vm = Va.copy()
                Vp[:, c] += eps_fd[:, c]
                Vm[:, c] -= eps_fd[:, c]
                Jm[:, :, c] = (residual_sub(Vp) - residual_sub(Vm)) / (2.0 * eps_fd[:, c])[:, None]
            try:
                delta = np.linalg.solve(Jm, Ra[:, :, None])[:, :, 0]
            except np.linalg.LinAlgError as exc:
                j = int(idx[np.argmax(active)])
                raise RuntimeError(f"singular Newton Jacobian in cell {j + 1}") from exc
            Va = Va - delta
            V[active] = Va
            R[active] = residual_sub(Va)
            iters_total += int(np.sum(active))
            iters_max = max(iters_max, iteration)
            still = np.max(np.abs(R[active]), axis=1) >= config.newton_tol
            alive = np.flatnonzero(active)
            active[alive[~still]] = False
        U_new[idx] = V
    _check_finite(U_new, "implicit source")
    U_out, info = _finalize(U_check, U_new, dry_after, grid.policy)
    info["newton_iters_total"] = iters_total
    info["newton_iters_max"] = iters_max
    U_full = grid.U.copy()
    U_full[1:-1] = U_out
    return replace(grid, U=U_full), info


_SQRT15_OVER5 = np.sqrt(15.0) / 5.0
_PATH_RULE = (
    np.array([0.5 * (1.0 - _SQRT15_OVER5), 0.5, 0.5 * (1.0 + _SQRT15_OVER5)]),
    np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]),
)
