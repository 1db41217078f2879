"""Analytic self-maps of the unit disk.

Each symbol knows its value and exact derivative (vectorized over complex
arrays).  Construction goes through :func:`build_symbol`, which validates the
descriptor, runs a boundary self-map check, and spot-checks the derivative
against central finite differences.

The crescent symbol is the Riemann map onto the lune between the unit circle
and an internally tangent circle.  Both boundary circles pass through the
tangency point, so the Moebius map w -> 1/(1 - conj(zeta) w) straightens them
into the parallel lines Re v = 1/2 and Re v = 1/(2 rho0); composing
disk -> half-plane -> strip -> lune gives a closed-form univalent map with a
closed-form inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError, SelfMapError, ValidationError

__all__ = [
    "SymbolMap",
    "Identity",
    "Scaled",
    "Power",
    "Mobius",
    "Blaschke",
    "AtomicSingular",
    "CrescentRegion",
    "Crescent",
    "Chain",
    "build_symbol",
    "crescent_map",
    "verify_self_map",
    "eval_with_derivative",
    "finite_difference_check",
]

_EVAL_MARGIN = 1e-12
_ATOMIC_CUTOFF = 1e-9


def _asplex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return complex(arr) if scalar else arr


class SymbolMap:
    """Base class: an analytic self-map of the disk with exact derivative."""

    kind: str = "abstract"

    def __call__(self, z):
        raise NotImplementedError

    def deriv(self, z):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        fields = ", ".join(f"{k}={v}" for k, v in self.describe().items() if k != "kind")
        return f"{self.kind}({fields})"


class Identity(SymbolMap):
    kind = "identity"

    def __call__(self, z):
        arr, scalar = _asplex(z)
        return _ret(arr, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        out = np.ones_like(arr)
        return _ret(out, scalar)

    def describe(self):
        return {"kind": "identity"}


class Scaled(SymbolMap):
    """phi(z) = c z for real c in (0, 1); image is the disk of radius c."""

    kind = "scaled"

    def __init__(self, c: float):
        if not 0.0 < c < 1.0:
            raise ValidationError(f"scaled: c must lie in (0, 1), got {c}")
        self.c = float(c)

    def __call__(self, z):
        arr, scalar = _asplex(z)
        return _ret(self.c * arr, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        return _ret(np.full_like(arr, self.c), scalar)

    def describe(self):
        return {"kind": "scaled", "c": self.c}


class Power(SymbolMap):
    """phi(z) = z^n; every target has n preimages counted with multiplicity."""

    kind = "power"

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise ValidationError(f"power: n must be an integer >= 1, got {n}")
        self.n = int(n)

    def __call__(self, z):
        arr, scalar = _asplex(z)
        return _ret(arr**self.n, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        return _ret(self.n * arr ** (self.n - 1), scalar)

    def describe(self):
        return {"kind": "power", "n": self.n}


class Mobius(SymbolMap):
    """Disk automorphism phi(z) = e^{i phase} (a - z)/(1 - conj(a) z)."""

    kind = "mobius"

    def __init__(self, a: complex, phase: float = 0.0):
        if abs(a) >= 1.0 - _EVAL_MARGIN:
            raise ValidationError(f"mobius: |a| must be < 1, got {abs(a)}")
        self.a = complex(a)
        self.phase = float(phase)
        self._rot = np.exp(1j * self.phase)

    def __call__(self, z):
        arr, scalar = _asplex(z)
        out = self._rot * (self.a - arr) / (1.0 - np.conj(self.a) * arr)
        return _ret(out, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        out = self._rot * (abs(self.a) ** 2 - 1.0) / (1.0 - np.conj(self.a) * arr) ** 2
        return _ret(out, scalar)

    def inverse(self, w):
        """phi is an automorphism; solve phi(z) = w exactly."""
        arr, scalar = _asplex(w)
        v = arr / self._rot
        out = (self.a - v) / (1.0 - np.conj(self.a) * v)
        return _ret(out, scalar)

    def describe(self):
        return {"kind": "mobius", "a": [self.a.real, self.a.imag], "phase": self.phase}


class Blaschke(SymbolMap):
    """Finite Blaschke product e^{i phase} prod (z - a_j)/(1 - conj(a_j) z)."""

    kind = "blaschke"

    def __init__(self, zeros, phase: float = 0.0):
        zeros = [complex(a) for a in zeros]
        if not zeros:
            raise ValidationError("blaschke: need at least one zero")
        for a in zeros:
            if abs(a) >= 1.0 - _EVAL_MARGIN:
                raise ValidationError(
                    f"blaschke: zeros must be strictly interior, got |a| = {abs(a)}"
                )
        self.zeros = tuple(zeros)
        self.phase = float(phase)
        self._rot = np.exp(1j * self.phase)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def _factors(self, arr):
        return [(arr - a) / (1.0 - np.conj(a) * arr) for a in self.zeros]

    def __call__(self, z):
        arr, scalar = _asplex(z)
        out = self._rot * np.ones_like(arr)
        for f in self._factors(arr):
            out = out * f
        return _ret(out, scalar)

    def deriv(self, z):
        # Product rule: robust at the zeros, where the log-derivative is not.
        arr, scalar = _asplex(z)
        factors = self._factors(arr)
        dfactors = [
            (1.0 - abs(a) ** 2) / (1.0 - np.conj(a) * arr) ** 2 for a in self.zeros
        ]
        out = np.zeros_like(arr)
        for j in range(len(self.zeros)):
            term = dfactors[j]
            for k, f in enumerate(factors):
                if k != j:
                    term = term * f
            out = out + term
        return _ret(self._rot * out, scalar)

    def rational_coeffs(self):
        """Ascending coefficients (P, Q) with phi = P/Q."""
        p = np.array([1.0 + 0.0j])
        q = np.array([1.0 + 0.0j])
        for a in self.zeros:
            p = np.convolve(p, np.array([-a, 1.0], dtype=complex))
            q = np.convolve(q, np.array([1.0, -np.conj(a)], dtype=complex))
        return self._rot * p, q

    def describe(self):
        return {
            "kind": "blaschke",
            "zeros": [[a.real, a.imag] for a in self.zeros],
            "phase": self.phase,
        }


class AtomicSingular(SymbolMap):
    """phi(z) = exp((z + 1)/(z - 1)): inner function with unbounded counting.

    Preimages of every target accumulate at z = 1, which makes it the stress
    case for truncated counting and the boundedness divergence flag.
    Evaluation within 1e-9 of z = 1 is refused outright.
    """

    kind = "atomic_singular"

    def _guard(self, arr):
        if np.any(np.abs(arr - 1.0) < _ATOMIC_CUTOFF):
            raise EvaluationError(
                "atomic_singular evaluated within 1e-9 of the singularity z = 1"
            )

    def __call__(self, z):
        arr, scalar = _asplex(z)
        self._guard(arr)
        return _ret(np.exp((arr + 1.0) / (arr - 1.0)), scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        self._guard(arr)
        out = np.exp((arr + 1.0) / (arr - 1.0)) * (-2.0) / (arr - 1.0) ** 2
        return _ret(out, scalar)

    def describe(self):
        return {"kind": "atomic_singular"}


@dataclass(frozen=True)
class CrescentRegion:
    """Lune Omega = D minus the closed disk of radius rho0 tangent at zeta."""

    zeta: complex
    rho0: float

    def __post_init__(self):
        if abs(abs(self.zeta) - 1.0) > 1e-9:
            raise ValidationError("crescent tangent point must lie on the circle")
        if not 0.0 < self.rho0 <= 0.5:
            raise ValidationError(
                f"crescent inner radius must lie in (0, 1/2], got {self.rho0}"
            )

    @property
    def inner_center(self) -> complex:
        return (1.0 - self.rho0) * self.zeta

    def contains(self, w, band: float = 0.0):
        """Membership in Omega; ``band`` shrinks both boundaries for tests."""
        arr = np.asarray(w, dtype=complex)
        out = (np.abs(arr) < 1.0 - band) & (
            np.abs(arr - self.inner_center) > self.rho0 + band
        )
        return bool(out) if out.ndim == 0 else out


class Crescent(SymbolMap):
    """Riemann map of the disk onto the lune of :class:`CrescentRegion`.

    Chain: disk automorphism sigma (normalization), u -> log((1+u)/(1-u))
    (disk to horizontal strip), affine rotation/scale onto the vertical strip
    1/2 < Re v < 1/(2 rho0), then w = zeta (1 - 1/v) back onto the lune.
    The normalization puts phi(0) on the midpoint -rho0 zeta of the lune's
    diameter through -zeta.
    """

    kind = "crescent"

    def __init__(self, zeta: complex = 1.0, rho0: float = 0.25):
        self.region = CrescentRegion(complex(zeta) / abs(complex(zeta)), float(rho0))
        zeta = self.region.zeta
        rho0 = self.region.rho0
        self.a = (1.0 / (2.0 * rho0) - 0.5) / np.pi
        self.b = (0.5 + 1.0 / (2.0 * rho0)) / 2.0
        # strip point of the normalization target w = -rho0 zeta
        v_star = 1.0 / (1.0 + rho0)
        self.z0 = complex(np.tanh(1j * (self.b - v_star) / (2.0 * self.a)))

    @property
    def zeta(self) -> complex:
        return self.region.zeta

    @property
    def rho0(self) -> float:
        return self.region.rho0

    def _sigma(self, arr):
        return (arr + self.z0) / (1.0 + np.conj(self.z0) * arr)

    def _v(self, arr):
        s = self._sigma(arr)
        return self.b + 1j * self.a * np.log((1.0 + s) / (1.0 - s))

    def __call__(self, z):
        arr, scalar = _asplex(z)
        out = self.zeta * (1.0 - 1.0 / self._v(arr))
        return _ret(out, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        s = self._sigma(arr)
        ds = (1.0 - abs(self.z0) ** 2) / (1.0 + np.conj(self.z0) * arr) ** 2
        dv = 1j * self.a * 2.0 / (1.0 - s * s) * ds
        out = self.zeta * dv / self._v(arr) ** 2
        return _ret(out, scalar)

    def inverse(self, w):
        """Inverse chain; only meaningful for w inside the lune."""
        arr, scalar = _asplex(w)
        v = 1.0 / (1.0 - np.conj(self.zeta) * arr)
        ell = (v - self.b) / (1j * self.a)
        u = np.tanh(0.5 * ell)
        out = (u - self.z0) / (1.0 - np.conj(self.z0) * u)
        return _ret(out, scalar)

    def describe(self):
        return {
            "kind": "crescent",
            "tangent_point": [self.zeta.real, self.zeta.imag],
            "inner_radius": self.rho0,
        }


class Chain(SymbolMap):
    """Composition of self-maps; parts apply left to right."""

    kind = "chain"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValidationError("chain: need at least one part")
        self.parts = tuple(parts)

    def __call__(self, z):
        arr, scalar = _asplex(z)
        for p in self.parts:
            arr = np.asarray(p(arr), dtype=complex)
        return _ret(arr, scalar)

    def deriv(self, z):
        arr, scalar = _asplex(z)
        out = np.ones_like(arr)
        for p in self.parts:
            out = out * np.asarray(p.deriv(arr), dtype=complex)
            arr = np.asarray(p(arr), dtype=complex)
        return _ret(out, scalar)

    def describe(self):
        return {"kind": "chain", "parts": [p.describe() for p in self.parts]}


def verify_self_map(phi: SymbolMap, n_samples: int = 4096,
                    radius: float = 1.0 - 1e-6) -> float:
    """1 minus the sampled sup of |phi| on the circle of the given radius.

    Positive means safely interior; anything below -1e-9 fails construction.
    """
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    vals = np.asarray(phi(radius * np.exp(1j * theta)))
    return float(1.0 - np.max(np.abs(vals)))


def finite_difference_check(phi: SymbolMap, n_points: int = 100, seed: int = 0,
                            h: float = 1e-6) -> float:
    """Max relative gap between phi.deriv and central differences."""
    rng = np.random.default_rng(seed)
    z = 0.85 * np.sqrt(rng.random(n_points)) * np.exp(2j * np.pi * rng.random(n_points))
    fd = (np.asarray(phi(z + h)) - np.asarray(phi(z - h))) / (2.0 * h)
    ex = np.asarray(phi.deriv(z))
    scale = np.maximum(np.abs(ex), 1e-12)
    return float(np.max(np.abs(fd - ex) / scale))


def _point(value, path: str) -> complex:
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValidationError(f"{path}: expected a number or [re, im] pair")


_KINDS = {
    "identity", "scaled", "power", "mobius", "blaschke",
    "crescent", "atomic_singular", "chain",
}


def build_symbol(desc: dict, validate: bool = True) -> SymbolMap:
    """Construct a symbol from its descriptor and verify the map invariants."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValidationError("symbol descriptor must be a dict with a 'kind' tag")
    kind = desc["kind"]
    if kind not in _KINDS:
        raise ValidationError(f"unknown symbol kind {kind!r}")
    extra = set(desc) - {"kind", "c", "n", "a", "phase", "zeros",
                         "tangent_point", "inner_radius", "parts"}
    if extra:
        raise ValidationError(f"symbol descriptor has unknown field(s) {sorted(extra)}")

    if kind == "identity":
        phi = Identity()
    elif kind == "scaled":
        phi = Scaled(desc["c"])
    elif kind == "power":
        phi = Power(desc["n"])
    elif kind == "mobius":
        phi = Mobius(_point(desc["a"], "a"), desc.get("phase", 0.0))
    elif kind == "blaschke":
        phi = Blaschke([_point(a, "zeros") for a in desc["zeros"]],
                       desc.get("phase", 0.0))
    elif kind == "crescent":
        phi = Crescent(_point(desc.get("tangent_point", [1.0, 0.0]), "tangent_point"),
                       desc.get("inner_radius", 0.25))
    elif kind == "atomic_singular":
        phi = AtomicSingular()
    else:
        phi = Chain([build_symbol(p, validate=False) for p in desc["parts"]])

    if validate:
        margin = verify_self_map(phi)
        if margin < -1e-9:
            raise SelfMapError(
                f"{kind}: boundary sample escapes the disk (margin {margin:.3e})"
            )
        fd = finite_difference_check(phi)
        if fd > 1e-6:
            raise ValidationError(
                f"{kind}: derivative disagrees with finite differences ({fd:.3e})"
            )
    return phi


def crescent_map(region: CrescentRegion) -> Crescent:
    """Riemann map for an already-validated lune."""
    return Crescent(region.zeta, region.rho0)


def eval_with_derivative(phi: SymbolMap, z):
    """(phi(z), phi'(z)) with the interior-domain guard applied."""
    arr, scalar = _asplex(z)
    if np.any(np.abs(arr) >= 1.0 - _EVAL_MARGIN):
        raise DomainError("evaluation point too close to the unit circle")
    return _ret(np.asarray(phi(arr)), scalar), _ret(np.asarray(phi.deriv(arr)), scalar)
