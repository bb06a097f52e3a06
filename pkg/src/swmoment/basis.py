"""Shifted Legendre basis on [0,1]: polynomials, coupling tensors, quadrature rules."""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

__all__ = [
    "MomentBasis",
    "build_basis",
    "eval_phi",
    "eval_dphi",
    "reconstruct_velocity",
    "gauss_rule",
    "phi_coefficients",
]

MAX_ORDER = 12


def phi_coefficients(j: int) -> list[Fraction]:
    """Exact monomial coefficients of the degree-j shifted Legendre polynomial.

    phi_j(z) = d^j/dz^j (z - z^2)^j / j!, normalized so phi_j(0) = 1.
    """
    if j < 0:
        raise ValueError(f"polynomial degree must be >= 0, got {j}")
    # (z - z^2)^j = sum_k C(j,k) (-1)^k z^(j+k); differentiate j times, divide by j!
    coeffs = [Fraction(0)] * (j + 1)
    for k in range(j + 1):
        c = Fraction(comb(j, k) * (-1) ** k)
        power = j + k  # exponent before differentiation
        falling = Fraction(factorial(power), factorial(power - j))
        coeffs[power - j] += c * falling / factorial(j)
    return coeffs


def _poly_mul(p: list[Fraction], q: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for a, ca in enumerate(p):
        for b, cb in enumerate(q):
            out[a + b] += ca * cb
    return out


def _poly_int01(p: list[Fraction]) -> Fraction:
    return sum((c / (m + 1) for m, c in enumerate(p)), Fraction(0))


def _poly_antideriv(p: list[Fraction]) -> list[Fraction]:
    return [Fraction(0)] + [c / (m + 1) for m, c in enumerate(p)]


def _poly_deriv(p: list[Fraction]) -> list[Fraction]:
    if len(p) == 1:
        return [Fraction(0)]
    return [c * m for m, c in enumerate(p)][1:]


@dataclass(frozen=True)
class MomentBasis:
    """Precomputed basis data for a moment order N.

    phi/dphi hold monomial coefficients row-wise (row j-1 for phi_j, ascending
    powers, zero padded). A and B are the rank-3 coupling tensors, C the
    derivative Gram matrix; all exact-rational results stored as floats.
    """

    N: int
    phi: np.ndarray  # (N, N+1)
    dphi: np.ndarray  # (N, N)
    A: np.ndarray  # (N, N, N)
    B: np.ndarray  # (N, N, N)
    C: np.ndarray  # (N, N)
    quad3: tuple[np.ndarray, np.ndarray]
    quad_k: tuple[np.ndarray, np.ndarray]


def build_basis(N: int, quad_points: int = 32) -> MomentBasis:
    """Build the order-N basis with exact tensor integration.

    A_ijk = (2i+1) int phi_i phi_j phi_k, B_ijk = (2i+1) int phi_i' (int_0^z phi_j) phi_k,
    C_ij = int phi_i' phi_j', all over [0,1] by exact monomial integration.
    """
    if not isinstance(N, int) or N < 1 or N > MAX_ORDER:
        raise ValueError(f"moment order must be an integer in [1, {MAX_ORDER}], got {N}")
    phis = [phi_coefficients(j) for j in range(1, N + 1)]
    dphis = [_poly_deriv(p) for p in phis]
    antis = [_poly_antideriv(p) for p in phis]

    A = np.zeros((N, N, N))
    B = np.zeros((N, N, N))
    C = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            C[i, j] = float(_poly_int01(_poly_mul(dphis[i], dphis[j])))
            for k in range(N):
                A[i, j, k] = float((2 * (i + 1) + 1) * _poly_int01(_poly_mul(_poly_mul(phis[i], phis[j]), phis[k])))
                B[i, j, k] = float((2 * (i + 1) + 1) * _poly_int01(_poly_mul(_poly_mul(dphis[i], antis[j]), phis[k])))

    phi_arr = np.zeros((N, N + 1))
    dphi_arr = np.zeros((N, max(N, 1)))
    for r, p in enumerate(phis):
        phi_arr[r, : len(p)] = [float(c) for c in p]
        d = dphis[r]
        dphi_arr[r, : len(d)] = [float(c) for c in d]
    return MomentBasis(
        N=N,
        phi=phi_arr,
        dphi=dphi_arr,
        A=A,
        B=B,
        C=C,
        quad3=gauss_rule(3),
        quad_k=gauss_rule(quad_points),
    )


def _horner(coeffs_row: np.ndarray, zeta):
    out = 0.0
    for c in coeffs_row[::-1]:
        out = out * zeta + c
    return out


def _check_eval_args(basis: MomentBasis, j: int, zeta) -> None:
    if not 1 <= j <= basis.N:
        raise ValueError(f"basis index must be in [1, {basis.N}], got {j}")
    z = np.asarray(zeta)
    if np.any(z < 0.0) or np.any(z > 1.0):
        raise ValueError("evaluation point must lie in [0, 1]")


def eval_phi(basis: MomentBasis, j: int, zeta):
    """Evaluate phi_j at zeta in [0,1] (scalar or array) by Horner's rule."""
    _check_eval_args(basis, j, zeta)
    return _horner(basis.phi[j - 1], zeta)


def eval_dphi(basis: MomentBasis, j: int, zeta):
    """Evaluate phi_j' at zeta in [0,1] (scalar or array)."""
    _check_eval_args(basis, j, zeta)
    return _horner(basis.dphi[j - 1], zeta)


def reconstruct_velocity(basis: MomentBasis, u_m: float, alpha, zeta):
    """Vertical velocity profile u_m + sum_j alpha_j phi_j(zeta).

    Summation runs j = 1..N left to right so that zeta = 0 yields exactly
    u_m + alpha_1 + ... + alpha_N.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1] != basis.N:
        raise ValueError(f"expected {basis.N} moments, got {alpha.shape[-1]}")
    out = u_m
    for j in range(1, basis.N + 1):
        out = out + alpha[..., j - 1] * eval_phi(basis, j, zeta)
    return out


def _legendre_and_deriv(k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Legendre P_k and P_k' on [-1,1] by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if k == 0:
        return p_prev, np.zeros_like(x)
    for n in range(1, k):
        p_next = ((2 * n + 1) * x * p - n * p_prev) / (n + 1)
        p_prev, p = p, p_next
    dp = k * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def _gauss_cached(k: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if not isinstance(k, int) or k < 1 or k > 64:
        raise ValueError(f"point count must be an integer in [1, 64], got {k}")
    if k == 1:
        return (0.5,), (1.0,)
    # Newton iteration from the Chebyshev-like initial guess, tolerance 1e-15.
    i = np.arange(1, k + 1)
    x = np.cos(np.pi * (i - 0.25) / (k + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_deriv(k, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_deriv(k, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    nodes = 0.5 * (1.0 - x)  # descending x maps to ascending nodes on [0,1]
    order = np.argsort(nodes)
    return tuple(nodes[order]), tuple((0.5 * w)[order])


def gauss_rule(k: int) -> tuple[np.ndarray, np.ndarray]:
    """k-point Gauss-Legendre nodes and weights on [0,1], k in 1..64."""
    nodes, weights = _gauss_cached(k)
    return np.array(nodes), np.array(weights)
