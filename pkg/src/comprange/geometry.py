"""Hyperbolic geometry of the unit disk.

Pseudo-hyperbolic metric rho(z, w) = |(z - w) / (1 - conj(z) w)|, Bergman
metric beta = (1/2) log((1 + rho)/(1 - rho)), and the two equivalent disk
families D_eta(z) = {rho < eta} and D(z, r) = {beta < r} with eta = tanh(r).
Both are Euclidean disks; the closed-form center/radius realization is what
every Monte Carlo estimator samples from.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "check_interior",
    "pseudo_hyperbolic_distance",
    "bergman_distance",
    "eta_from_radius",
    "radius_from_eta",
    "BergmanDisk",
    "bergman_disk",
    "disk_area",
    "CarlesonBox",
    "carleson_box_area",
    "lens_area",
]

_INTERIOR_MARGIN = 1e-12


def check_interior(z, margin: float = _INTERIOR_MARGIN) -> None:
    """Reject points within ``margin`` of the unit circle.

    Near-boundary points make 1 - conj(z) w catastrophically small; failing
    loudly beats returning garbage distances.
    """
    a = np.abs(np.asarray(z))
    if np.any(a >= 1.0 - margin):
        raise DomainError(f"point with |z| = {float(np.max(a)):.17g} is not interior")


def pseudo_hyperbolic_distance(z, w):
    """rho(z, w) = |z - w| / |1 - conj(z) w|; vectorized over either argument.

    Symmetry holds to the last bit: the arguments are put in a canonical
    order first (complex multiplication is not order-symmetric in floating
    point once FMA contraction enters), and the quotient of absolute values
    avoids the rounding of a complex division.
    """
    check_interior(z)
    check_interior(w)
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex),
                               np.asarray(w, dtype=complex))
    swap = (w.real < z.real) | ((w.real == z.real) & (w.imag < z.imag))
    p = np.where(swap, w, z)
    q = np.where(swap, z, w)
    out = np.abs(p - q) / np.abs(1.0 - np.conj(p) * q)
    return float(out) if out.ndim == 0 else out


def bergman_distance(z, w):
    """beta(z, w) = (1/2) log((1 + rho)/(1 - rho))."""
    rho = pseudo_hyperbolic_distance(z, w)
    return 0.5 * np.log((1.0 + rho) / (1.0 - rho))


def eta_from_radius(r: float) -> float:
    """Pseudo-hyperbolic radius eta = tanh(r) of the Bergman ball of radius r."""
    if r <= 0.0:
        raise DomainError(f"bergman radius must be positive, got {r}")
    return float(np.tanh(r))


def radius_from_eta(eta: float) -> float:
    """Inverse of :func:`eta_from_radius`."""
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta must lie in (0, 1), got {eta}")
    return float(np.arctanh(eta))


@dataclass(frozen=True)
class BergmanDisk:
    """D(z, r) = D_eta(z) together with its Euclidean realization."""

    center: complex
    bergman_radius: float
    pseudo_radius: float
    euclidean_center: complex
    euclidean_radius: float

    def contains(self, w) -> np.ndarray | bool:
        """Euclidean membership test (vectorized)."""
        out = np.abs(np.asarray(w, dtype=complex) - self.euclidean_center) \
            < self.euclidean_radius
        return bool(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n points uniform w.r.t. area in the Euclidean realization."""
        radii = self.euclidean_radius * np.sqrt(rng.random(n))
        theta = 2.0 * np.pi * rng.random(n)
        return self.euclidean_center + radii * np.exp(1j * theta)


def bergman_disk(z: complex, r: float) -> BergmanDisk:
    """Construct D(z, r) with Euclidean center (1-s^2)z/(1-s^2|z|^2), s = tanh r."""
    check_interior(z)
    s = eta_from_radius(r)
    z = complex(z)
    denom = 1.0 - s * s * abs(z) ** 2
    return BergmanDisk(
        center=z,
        bergman_radius=float(r),
        pseudo_radius=s,
        euclidean_center=(1.0 - s * s) * z / denom,
        euclidean_radius=(1.0 - abs(z) ** 2) * s / denom,
    )


def disk_area(d: BergmanDisk) -> float:
    """Lebesgue area pi * R^2 of the Euclidean realization."""
    return float(np.pi * d.euclidean_radius**2)


@dataclass(frozen=True)
class CarlesonBox:
    """S(zeta, r) = {w in D : |w - zeta| < r} anchored at zeta on the circle."""

    anchor: complex
    radius: float

    def __post_init__(self):
        if abs(abs(self.anchor) - 1.0) > 1e-9:
            raise ValidationError(
                f"box anchor must lie on the unit circle, |anchor| = {abs(self.anchor)}"
            )
        if self.radius <= 0.0:
            raise ValidationError("box radius must be positive")

    def contains(self, w) -> np.ndarray | bool:
        w = np.asarray(w, dtype=complex)
        out = (np.abs(w - self.anchor) < self.radius) & (np.abs(w) < 1.0)
        return bool(out) if out.ndim == 0 else out


@lru_cache(maxsize=256)
def _box_area_cached(radius: float, resolution: int) -> float:
    # Rotation invariance: area depends on the radius only, so integrate the
    # box anchored at 1.  Midpoint tensor rule over the local bounding box;
    # the indicator integrand defeats anything higher order.
    r = radius
    if r >= 2.0:
        return float(np.pi)
    xs = np.linspace(max(-1.0, 1.0 - r), 1.0, resolution + 1)
    ys = np.linspace(-min(1.0, r), min(1.0, r), resolution + 1)
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    xm = 0.5 * (xs[:-1] + xs[1:])[:, None]
    ym = 0.5 * (ys[:-1] + ys[1:])[None, :]
    inside = (xm * xm + ym * ym < 1.0) & ((xm - 1.0) ** 2 + ym * ym < r * r)
    return float(inside.sum() * hx * hy)


def carleson_box_area(box: CarlesonBox, resolution: int = 2048) -> float:
    """Area of D \\cap S(zeta, r) by deterministic midpoint quadrature."""
    return _box_area_cached(float(box.radius), int(resolution))


def lens_area(d: float, r1: float, r2: float) -> float:
    """Exact intersection area of disks with radii r1, r2 at center distance d.

    Independent oracle for :func:`carleson_box_area` (d = 1, r1 = 1, r2 = r).
    """
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return float(np.pi * min(r1, r2) ** 2)
    a1 = np.arccos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
    a2 = np.arccos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
    s = 0.5 * np.sqrt(
        (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    )
    return float(r1 * r1 * a1 + r2 * r2 * a2 - s)
