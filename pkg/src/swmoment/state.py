"""Conservative/primitive state conversion, desingularization, dryness classification."""

from dataclasses import dataclass

import numpy as np

__all__ = ["WetDryPolicy", "to_primitive", "to_conservative", "is_dry", "desingularized_velocity"]


@dataclass(frozen=True)
class WetDryPolicy:
    """Minimum-height threshold for wet/dry classification."""

    h_min: float

    def __post_init__(self):
        if not self.h_min > 0.0:
            raise ValueError(f"h_min must be positive, got {self.h_min}")


def is_dry(h, policy: WetDryPolicy):
    """A cell is dry iff h <= h_min (boundary included). Works elementwise."""
    return np.asarray(h) <= policy.h_min


def desingularized_velocity(h, hv, policy: WetDryPolicy):
    """Recover v from h*v as 2h*(hv)/(h^2 + max(h^2, h_min)).

    Equals exact division for h >= sqrt(h_min) and stays bounded for any h >= 0.
    """
    h = np.asarray(h, dtype=float)
    return 2.0 * h * np.asarray(hv, dtype=float) / (h * h + np.maximum(h * h, policy.h_min))


def to_primitive(U, policy: WetDryPolicy) -> np.ndarray:
    """Map conservative rows (h, h*u_m, h*alpha_i) to primitive rows (h, u_m, alpha_i).

    Velocities are desingularized; dry cells (h <= h_min) get zero velocities.
    """
    U = np.asarray(U, dtype=float)
    if not np.all(np.isfinite(U)):
        raise ValueError("conservative state contains NaN or Inf")
    h = U[..., 0]
    P = np.empty_like(U)
    P[..., 0] = h
    P[..., 1:] = desingularized_velocity(h[..., None], U[..., 1:], policy)
    P[..., 1:] = np.where(is_dry(h, policy)[..., None], 0.0, P[..., 1:])
    return P


def to_conservative(P) -> np.ndarray:
    """Map primitive rows (h, u_m, alpha_i) to conservative rows (h, h*u_m, h*alpha_i)."""
    P = np.asarray(P, dtype=float)
    if not np.all(np.isfinite(P)):
        raise ValueError("primitive state contains NaN or Inf")
    if np.any(P[..., 0] < 0.0):
        raise ValueError("negative height in primitive state")
    U = np.empty_like(P)
    U[..., 0] = P[..., 0]
    U[..., 1:] = P[..., 0][..., None] * P[..., 1:]
    return U
