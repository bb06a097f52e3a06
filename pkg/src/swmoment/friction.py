"""Friction models: bottom stress, surface stress, and bulk moment terms.

Every model consumes primitive rows (h, u_m, alpha_1..alpha_N) — a single row or
a batch (M, N+2) — and produces the bottom stress, the (always zero) surface
stress, and the bulk terms T_i = int_0^1 phi_i' tau dzeta. Callers must skip
dry cells; heights must be positive here.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import MomentBasis, gauss_rule

__all__ = [
    "NewtonianSlip",
    "NewtonianManning",
    "SavageHutter",
    "Coulomb",
    "MuI",
    "SlipBottom",
    "ManningBottom",
    "CoulombBottom",
    "MuIBottom",
    "bottom_stress",
    "surface_stress",
    "bulk_terms",
    "muI_bulk_analytic_N1",
    "muI_bulk_analytic_N2",
    "muI_bulk_quadrature",
    "derive_dimensionless",
    "savage_hutter_violations",
]


def _as_rows(P) -> tuple[np.ndarray, bool]:
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        return P[None, :], True
    return P, False


def _require_wet(h: np.ndarray) -> None:
    if np.any(h <= 0.0):
        raise ValueError("friction evaluated on a non-positive height; dry cells must be skipped")


def _bottom_velocity(P: np.ndarray) -> np.ndarray:
    """u(0) = u_m + alpha_1 + ... + alpha_N, summed left to right."""
    out = P[:, 1].copy()
    for j in range(2, P.shape[1]):
        out += P[:, j]
    return out


def _bottom_shear(P: np.ndarray, basis: MomentBasis) -> np.ndarray:
    """d/dzeta u at zeta = 0: sum_j alpha_j phi_j'(0)."""
    dphi0 = basis.dphi[:, 0]
    return P[:, 2:] @ dphi0


class _StressFree:
    """Shared stress-free-surface behavior."""

    def surface_stress(self) -> float:
        return 0.0

    def stresses(self, P, basis: MomentBasis):
        """(bottom, surface, bulk) triple used by the source assembly."""
        return self.bottom_stress(P, basis), 0.0, self.bulk_terms(P, basis)


@dataclass(frozen=True)
class NewtonianSlip(_StressFree):
    """Navier slip bottom with Newtonian interior: nu viscosity, lam slip length."""

    nu: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError("slip length must be positive")
        if self.nu < 0.0:
            raise ValueError("viscosity must be nonnegative")

    def bottom_stress(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        out = (self.nu / self.lam) * _bottom_velocity(P)
        return out[0] if single else out

    def bulk_terms(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        T = (self.nu / P[:, 0])[:, None] * (P[:, 2:] @ basis.C.T)
        return T[0] if single else T


@dataclass(frozen=True)
class NewtonianManning(_StressFree):
    """Manning bottom friction with Newtonian interior: n2 Manning factor, nu viscosity."""

    n2: float
    nu: float

    def __post_init__(self):
        if self.n2 < 0.0 or self.nu < 0.0:
            raise ValueError("Manning factor and viscosity must be nonnegative")

    def bottom_stress(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        ub = _bottom_velocity(P)
        out = (self.n2 / np.cbrt(P[:, 0])) * ub * np.abs(ub)
        return out[0] if single else out

    def bulk_terms(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        T = (self.nu / P[:, 0])[:, None] * (P[:, 2:] @ basis.C.T)
        return T[0] if single else T


@dataclass(frozen=True)
class SavageHutter(_StressFree):
    """Coulomb bed friction at angle delta with constant interior friction tan(phi_int)."""

    delta: float
    phi_int: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= self.phi_int < math.pi / 2:
            raise ValueError("require 0 <= delta <= phi_int < pi/2")

    def bottom_stress(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        out = P[:, 0] * np.sign(_bottom_velocity(P)) * math.tan(self.delta)
        return out[0] if single else out

    def bulk_terms(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        T = np.broadcast_to((-math.tan(self.phi_int) * P[:, 0])[:, None], (P.shape[0], basis.N)).copy()
        return T[0] if single else T


@dataclass(frozen=True)
class Coulomb(_StressFree):
    """Coulomb bed friction at angle delta with constant bulk coefficient mu."""

    delta: float
    mu: float

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValueError("bulk friction coefficient must be nonnegative")

    def bottom_stress(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        out = P[:, 0] * np.sign(_bottom_velocity(P)) * math.tan(self.delta)
        return out[0] if single else out

    def bulk_terms(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        T = np.broadcast_to((-self.mu * P[:, 0])[:, None], (P.shape[0], basis.N)).copy()
        return T[0] if single else T


@dataclass(frozen=True)
class SlipBottom:
    """Navier slip bottom law for the granular model."""

    nu0: float
    lam: float


@dataclass(frozen=True)
class ManningBottom:
    """Manning bottom law for the granular model."""

    n2: float


@dataclass(frozen=True)
class CoulombBottom:
    """Coulomb bottom law for the granular model."""

    delta: float


@dataclass(frozen=True)
class MuIBottom:
    """Shear-rate-dependent granular bottom law (same mu(I) coefficients as the bulk)."""


def _bracket_series(C1: np.ndarray) -> np.ndarray:
    # sum_{k>=0} (-1)^k C1^k / (k+4), absolutely convergent for C1 < 1;
    # 60 Horner terms leave < 1e-18 relative truncation at C1 = 0.5.
    out = np.zeros_like(C1)
    for k in range(59, -1, -1):
        out = 1.0 / (k + 4.0) - C1 * out
    return out


def _bracket(C1: np.ndarray) -> np.ndarray:
    """1/(3C) - 1/(2C^2) + 1/C^3 - log(1+C)/C^4, stable for all C > 0."""
    C1 = np.asarray(C1, dtype=float)
    small = C1 < 0.5
    safe = np.where(small, 1.0, C1)  # keep the direct branch free of divide warnings
    direct = 1.0 / (3.0 * safe) - 1.0 / (2.0 * safe * safe) + 1.0 / safe**3 - np.log1p(safe) / safe**4
    return np.where(small, _bracket_series(np.where(small, C1, 0.0)), direct)


def muI_bulk_analytic_N1(h, alpha_1, params: "MuI"):
    """Closed-form bulk term for a linear velocity profile (alpha_1 <= 0).

    Returns the large-C1 limit -h*mu_s when |alpha_1| < 1e-12 * c_I * h^(3/2),
    and 0 at exactly alpha_1 = 0 (zero shear, sign convention sgn(0) = 0).
    """
    h = np.asarray(h, dtype=float)
    alpha_1 = np.asarray(alpha_1, dtype=float)
    _require_wet(h)
    if np.any(alpha_1 > 0.0):
        raise ValueError("closed form requires alpha_1 <= 0 (increasing velocity profile)")
    a = np.abs(alpha_1)
    scale = params.c_I * h**1.5
    tiny = a < 1e-12 * scale
    C1 = scale / np.where(tiny, 1.0, 2.0 * a)
    T1 = -h * params.mu_s - 4.0 * h * (params.mu_2 - params.mu_s) * _bracket(C1)
    T1 = np.where(tiny, -h * params.mu_s, T1)
    return np.where(alpha_1 == 0.0, 0.0, T1)[()]


def _stable_G(A: float, B: float, C: float) -> float:
    """int_0^1 dxi / (A xi^2 - C xi + B) for a quadratic with no root in [0,1]."""
    D = C * C - 4.0 * A * B
    w = (2.0 * B - C) / (2.0 * A)
    tau = D / ((2.0 * B - C) ** 2)
    if abs(tau) < 0.25:
        # merged arctan/artanh series around the degenerate discriminant
        s, t, k = 0.0, 1.0, 0
        while k == 0 or abs(t) / (2 * k + 1) > 1e-18 * abs(s):
            s += t / (2 * k + 1)
            t *= tau
            k += 1
            if k > 300:
                break
        return s / (A * w)
    if D < 0.0:
        a = math.sqrt(-D) / (2.0 * abs(A))
        val = math.atan(a / w)
        if w < 0.0:
            val += math.pi
        return val / (A * a)
    b = math.sqrt(D) / (2.0 * abs(A))
    if b < abs(w):
        return math.atanh(b / w) / (A * b)
    return 0.5 * math.log1p(2.0 * w / (b - w)) / (A * b)


def _rational_integral(p: list[float], A: float, B: float, C: float) -> float:
    """int_0^1 P(xi) / (A xi^2 - C xi + B) dxi by synthetic division."""
    p = list(p)
    n = len(p) - 1
    quotient = [0.0] * max(n - 1, 0)
    while n >= 2:
        c = p[n] / A
        quotient[n - 2] = c
        p[n] = 0.0
        p[n - 1] += C * c
        p[n - 2] -= B * c
        n -= 1
    r1 = p[1] if len(p) > 1 else 0.0
    r0 = p[0]
    poly_part = sum(c / (k + 1.0) for k, c in enumerate(quotient))
    log_part = (r1 / (2.0 * A)) * math.log(abs((A - C + B) / B))
    return poly_part + log_part + (r0 + r1 * C / (2.0 * A)) * _stable_G(A, B, C)


def _quad_interval(h: float, alpha: np.ndarray, params: "MuI", basis: MomentBasis,
                   lo: float, hi: float, points: int) -> np.ndarray:
    """Bulk quadrature on a xi-subinterval (used for interior shear sign changes)."""
    xi, w = gauss_rule(points)
    xi = lo + (hi - lo) * xi
    w = (hi - lo) * w
    return _bulk_quadrature_core(np.array([h]), alpha[None, :], params, basis, xi, w)[0]


def muI_bulk_analytic_N2(h: float, alpha_1: float, alpha_2: float, params: "MuI",
                         basis: MomentBasis) -> tuple[float, float]:
    """Bulk terms (T_1, T_2) for a quadratic velocity profile.

    Single-signed increasing profiles use the rational closed form when it is
    well-conditioned (|A| >= 0.5 * max(|B|, C); below that the division by A
    amplifies rounding up to ~1e11) and 32-point quadrature otherwise. An
    interior shear sign change is integrated per subinterval, split at the
    critical depth. All other regimes fall back to plain quadrature.
    """
    if h <= 0.0:
        raise ValueError("height must be positive")
    alpha = np.array([alpha_1, alpha_2], dtype=float)
    if alpha_2 == 0.0:
        return tuple(muI_bulk_quadrature(h, alpha, params, basis))
    zeta_star = 0.5 * (1.0 + alpha_1 / (3.0 * alpha_2))
    A = 12.0 * alpha_2
    B = 2.0 * alpha_1 - 6.0 * alpha_2
    C = params.c_I * h**1.5
    dmu = params.mu_2 - params.mu_s
    case_one = (alpha_2 > 0.0 and zeta_star <= 0.0) or (alpha_2 < 0.0 and zeta_star >= 1.0)
    if case_one:
        well_conditioned = abs(A) >= 0.5 * max(abs(B), C) and abs(B) >= 1e-8 * max(abs(A), C)
        if well_conditioned:
            J1 = _rational_integral([0.0, 0.0, 0.0, B, 0.0, A], A, B, C)
            J2 = _rational_integral([0.0, 0.0, 0.0, -B, 0.0, 2.0 * B - A, 0.0, 2.0 * A], A, B, C)
            return (-h * params.mu_s - 4.0 * h * dmu * J1,
                    -h * params.mu_s - 12.0 * h * dmu * J2)
        return tuple(muI_bulk_quadrature(h, alpha, params, basis, points=32))
    if 0.0 < zeta_star < 1.0:
        xi_star = math.sqrt(1.0 - zeta_star)
        points = max(params.quad_points, 16)
        T = (_quad_interval(h, alpha, params, basis, 0.0, xi_star, points)
             + _quad_interval(h, alpha, params, basis, xi_star, 1.0, points))
        return (T[0], T[1])
    return tuple(muI_bulk_quadrature(h, alpha, params, basis))


def _dphi_at_xi(basis: MomentBasis, xi: np.ndarray) -> np.ndarray:
    """phi_j' evaluated at zeta = 1 - xi^2, rows j = 1..N."""
    z = 1.0 - xi * xi
    out = np.zeros((basis.N, len(xi)))
    for j in range(basis.N):
        acc = np.zeros_like(z)
        for c in basis.dphi[j, ::-1]:
            acc = acc * z + c
        out[j] = acc
    return out


def _bulk_quadrature_core(h: np.ndarray, alpha: np.ndarray, params: "MuI",
                          basis: MomentBasis, xi: np.ndarray, w: np.ndarray) -> np.ndarray:
    dphi = _dphi_at_xi(basis, xi)  # (N, k)
    shear = alpha @ dphi  # (M, k)
    denom = (params.c_I * h**1.5)[:, None] * xi[None, :] + np.abs(shear)
    mu = params.mu_s + (params.mu_2 - params.mu_s) * np.abs(shear) / denom
    # d zeta = -2 xi d xi and (1 - zeta) = xi^2; orientation flip absorbed
    weight = w * 2.0 * xi**3
    integrand = mu * np.sign(shear) * weight[None, :]
    return h[:, None] * (integrand @ dphi.T)


def muI_bulk_quadrature(h, alpha, params: "MuI", basis: MomentBasis, points: int | None = None):
    """Gauss-Legendre approximation of the granular bulk integral.

    The integral is evaluated in the substituted variable xi = sqrt(1 - zeta),
    which removes the square-root endpoint singularity of the integrand's
    denominator (measured: 8 points reach ~4e-8 relative accuracy vs ~7e-6 in
    the unsubstituted variable). sgn(0) = 0 inside the integrand.
    """
    if points is None:
        points = params.quad_points
    if points < 2:
        raise ValueError("bulk quadrature needs at least 2 points")
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    alpha_arr = np.asarray(alpha, dtype=float)
    single = alpha_arr.ndim == 1
    alpha_arr = np.atleast_2d(alpha_arr)
    _require_wet(h_arr)
    xi, w = gauss_rule(points)
    T = _bulk_quadrature_core(h_arr, alpha_arr, params, basis, xi, w)
    return T[0] if single else T


@dataclass(frozen=True)
class MuI(_StressFree):
    """Granular friction with an inertial-number-dependent coefficient.

    The friction coefficient interpolates between mu_s and mu_2 with the local
    shear rate; c_I collects the dimensionless inertial scaling. The bottom law
    is selectable; the bulk uses closed forms for N <= 2 and quadrature above.
    """

    mu_s: float
    mu_2: float
    c_I: float
    bottom_law: object
    quad_points: int = 32

    def __post_init__(self):
        if not 0.0 < self.mu_s < self.mu_2:
            raise ValueError("require 0 < mu_s < mu_2")
        if not self.c_I > 0.0:
            raise ValueError("c_I must be positive")

    def bottom_stress(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        h = P[:, 0]
        law = self.bottom_law
        if isinstance(law, SlipBottom):
            out = (law.nu0 / law.lam) * _bottom_velocity(P)
        elif isinstance(law, ManningBottom):
            ub = _bottom_velocity(P)
            out = (law.n2 / np.cbrt(h)) * ub * np.abs(ub)
        elif isinstance(law, CoulombBottom):
            out = h * np.sign(_bottom_velocity(P)) * math.tan(law.delta)
        elif isinstance(law, MuIBottom):
            shear0 = _bottom_shear(P, basis)
            rate = np.abs(shear0)
            mu = self.mu_s + (self.mu_2 - self.mu_s) * rate / (self.c_I * h**1.5 + rate)
            out = mu * h * np.sign(shear0)
        else:
            raise TypeError(f"unsupported bottom law: {law!r}")
        return out[0] if single else out

    def bulk_terms(self, P, basis: MomentBasis):
        P, single = _as_rows(P)
        _require_wet(P[:, 0])
        h = P[:, 0]
        alpha = P[:, 2:]
        if basis.N == 1:
            a1 = alpha[:, 0]
            T = np.empty((P.shape[0], 1))
            increasing = a1 <= 0.0
            if np.any(increasing):
                T[increasing, 0] = muI_bulk_analytic_N1(h[increasing], a1[increasing], self)
            if np.any(~increasing):
                # decreasing profiles via the exact oddness of the bulk integral
                T[~increasing, 0] = -muI_bulk_analytic_N1(h[~increasing], -a1[~increasing], self)
        elif basis.N == 2:
            T = np.array([muI_bulk_analytic_N2(hr, a[0], a[1], self, basis) for hr, a in zip(h, alpha)])
        else:
            T = muI_bulk_quadrature(h, alpha, self, basis)
        return T[0] if single else T

    def stresses(self, P, basis: MomentBasis):
        """Bottom/surface/bulk stresses with static mobilization at zero shear.

        A profile with all moments exactly zero has no shear anywhere, so the
        raw laws return zero stress; the flowing-limit values (friction fully
        mobilized against the bottom-velocity direction) are used instead so a
        steadily sliding constant profile balances gravity exactly.
        """
        P, single = _as_rows(P)
        tau_b = np.atleast_1d(self.bottom_stress(P, basis))
        T = np.atleast_2d(self.bulk_terms(P, basis))
        static = np.all(P[:, 2:] == 0.0, axis=1)
        if np.any(static):
            s = np.sign(_bottom_velocity(P[static]))
            mobilized = self.mu_s * P[static, 0] * s
            if isinstance(self.bottom_law, MuIBottom):
                tau_b[static] = mobilized
            T[static, :] = -mobilized[:, None]
        if single:
            return tau_b[0], 0.0, T[0]
        return tau_b, 0.0, T


def bottom_stress(model, P, basis: MomentBasis):
    """Bottom stress of any friction model at a wet primitive state."""
    return model.bottom_stress(P, basis)


def surface_stress(model) -> float:
    """Surface stress; zero for every shipped model (stress-free surface)."""
    return model.surface_stress()


def bulk_terms(model, P, basis: MomentBasis):
    """Bulk terms T_1..T_N of any friction model at a wet primitive state."""
    return model.bulk_terms(P, basis)


def savage_hutter_violations(P, basis: MomentBasis, h_min: float) -> int:
    """Count wet cells violating the sliding-law assumptions.

    The Savage-Hutter derivation assumes a positive bottom velocity and a
    velocity profile increasing with height; violations are reported, never
    enforced.
    """
    P, _ = _as_rows(P)
    wet = P[:, 0] > h_min
    if not np.any(wet):
        return 0
    Pw = P[wet]
    bad_bottom = _bottom_velocity(Pw) <= 0.0
    zeta = np.linspace(0.0, 1.0, 9)
    shear = np.zeros((Pw.shape[0], len(zeta)))
    for j in range(basis.N):
        acc = np.zeros_like(zeta)
        for c in basis.dphi[j, ::-1]:
            acc = acc * zeta + c
        shear += Pw[:, 2 + j][:, None] * acc[None, :]
    bad_profile = np.any(shear < 0.0, axis=1)
    return int(np.sum(bad_bottom | bad_profile))


def derive_dimensionless(*, H: float, L: float, g: float, theta: float,
                         rho: float | None = None, rho_s: float | None = None,
                         eta: float | None = None, eta0: float | None = None,
                         Lambda: float | None = None, n: float | None = None,
                         I0: float | None = None, d_s: float | None = None) -> dict:
    """Derive dimensionless friction parameters from physical (SI) inputs.

    Returns U, eps, and whichever of nu, nu0, lam, n2, c_I the inputs permit.
    The velocity scale is U = sqrt(g L); stresses are scaled by rho g cos(theta) H.
    """
    if H <= 0.0 or L <= 0.0 or g <= 0.0:
        raise ValueError("H, L, g must be positive")
    if not 0.0 <= theta < math.pi / 2:
        raise ValueError("inclination angle must lie in [0, pi/2)")
    U = math.sqrt(g * L)
    out = {"U": U, "eps": H / L}
    cos_t = math.cos(theta)
    if eta is not None:
        out["nu"] = eta * U / (rho * g * cos_t * H * H)
    if eta0 is not None:
        out["nu0"] = eta0 * U / (rho * g * cos_t * H * H)
    if Lambda is not None:
        out["lam"] = Lambda / H
    if n is not None:
        out["n2"] = n * n * U * U / (H ** (4.0 / 3.0) * cos_t)
    if I0 is not None:
        if d_s is None or d_s <= 0.0 or rho_s is None:
            raise ValueError("the inertial scaling needs d_s > 0 and rho_s")
        out["c_I"] = (I0 * H / d_s) * math.sqrt((rho / rho_s) * (H / L) * cos_t)
    return out
