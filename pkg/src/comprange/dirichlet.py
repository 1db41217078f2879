"""Dirichlet-space machinery.

Norm convention: ||f||^2 = |f(0)|^2 + int_D |f'|^2 dA.  For power series
f = sum a_n z^n this is |a_0|^2 + pi sum n |a_n|^2, which is the exact route
used everywhere a coefficient representation exists; disk quadrature
(Gauss-Legendre in radius, trapezoid in angle) is the generic route and the
one the composition-operator functionals need.

The unit-sphere suprema of the tail functional and the Carleson bound are not
computable; they are lower-estimated over a TestFamily (monomial basis, seeded
random polynomials, normalized peak functions, normalized Bergman-kernel
probes).  Every report labels such numbers as family lower estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import MAX_DEGREE, FamilyConfig, QuadratureConfig
from .counting import count_batch, image_radial_features
from .errors import ValidationError
from .symbols import SymbolMap

__all__ = [
    "DiskQuadrature",
    "build_quadrature",
    "DirichletFunction",
    "PeakFunction",
    "BergmanProbe",
    "dirichlet_norm",
    "dirichlet_norm_quadrature",
    "inner_product",
    "inner_product_quadrature",
    "dirichlet_kernel",
    "kernel_reproduce_check",
    "peak_function",
    "composition_norm",
    "pushforward_integrals",
    "change_of_variables_residual",
    "TestFamily",
    "default_family",
    "BoundednessEstimate",
    "boundedness_estimate",
    "tail_functional",
    "peak_ratio_sequence",
]


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class DiskQuadrature:
    """Tensor rule on the disk |z| <= radial_truncation.

    Gauss-Legendre in radius (with the area Jacobian r folded into the
    weights) times an equally spaced periodic trapezoid rule in angle.
    """

    nodes: np.ndarray
    weights: np.ndarray
    radial_truncation: float
    radial_order: int
    angular_order: int

    def integrate(self, values: np.ndarray):
        return np.dot(self.weights, values)


def _radial_rule(order: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(order)
    r = lo + (hi - lo) * 0.5 * (x + 1.0)
    return r, (hi - lo) * 0.5 * w


def build_quadrature(radial_order: int = 160, angular_order: int = 512,
                     radial_truncation: float = 1.0 - 1e-6) -> DiskQuadrature:
    QuadratureConfig(radial_order, angular_order, radial_truncation).validate()
    return _tensor_rule([(0.0, radial_truncation)], radial_order,
                        angular_order, radial_truncation)


def _tensor_rule(segments, radial_order, angular_order, truncation):
    rs, rws = [], []
    for lo, hi in segments:
        r, w = _radial_rule(radial_order, lo, hi)
        rs.append(r)
        rws.append(w * r)
    r = np.concatenate(rs)
    rw = np.concatenate(rws)
    theta = 2.0 * np.pi * np.arange(angular_order) / angular_order
    ring = np.exp(1j * theta)
    nodes = (r[:, None] * ring[None, :]).ravel()
    weights = np.repeat(rw * (2.0 * np.pi / angular_order), angular_order)
    return DiskQuadrature(nodes, weights, truncation, radial_order, angular_order)


def build_panel_quadrature(splits, radial_order: int = 160,
                           angular_order: int = 512) -> DiskQuadrature:
    """Disk rule on [0, 1] radially, split at the given interior radii.

    Used for the w-side of change-of-variables checks, whose integrand jumps
    across image boundaries; aligning panel edges with radial jumps keeps the
    Gauss rule exact on each smooth piece.
    """
    edges = [0.0] + sorted(s for s in splits if 0.0 < s < 1.0) + [1.0]
    segments = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)
                if edges[i + 1] - edges[i] > 1e-14]
    return _tensor_rule(segments, radial_order, angular_order, 1.0)


# ---------------------------------------------------------------------------
# functions


class DirichletFunction:
    """Truncated power series f(z) = sum a_n z^n with exact norm bookkeeping."""

    def __init__(self, coefficients, label: str = ""):
        coeffs = np.atleast_1d(np.asarray(coefficients, dtype=complex))
        if coeffs.ndim != 1 or len(coeffs) == 0:
            raise ValidationError("coefficients must be a nonempty 1-D sequence")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ValidationError(f"degree exceeds the cap {MAX_DEGREE}")
        self.coefficients = coeffs
        self.label = label

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        return npoly.polyval(np.asarray(z, dtype=complex), self.coefficients)

    def value_at(self, z: complex) -> complex:
        return complex(npoly.polyval(complex(z), self.coefficients))

    @cached_property
    def _deriv_coeffs(self) -> np.ndarray:
        n = np.arange(1, len(self.coefficients))
        return self.coefficients[1:] * n

    def deriv_values(self, z):
        return npoly.polyval(np.asarray(z, dtype=complex), self._deriv_coeffs) \
            if len(self.coefficients) > 1 else np.zeros_like(np.asarray(z, dtype=complex))

    def deriv_abs2(self, z):
        return np.abs(self.deriv_values(z)) ** 2

    def derivative(self) -> "DirichletFunction":
        return DirichletFunction(self._deriv_coeffs if self.degree else [0.0],
                                 label=f"{self.label}'")

    @cached_property
    def norm(self) -> float:
        return dirichlet_norm(self)

    def norm_truncated(self, truncation: float) -> float:
        """sqrt(|f(0)|^2 + int_{|z|<=T} |f'|^2 dA), exactly."""
        a = self.coefficients
        n = np.arange(1, len(a))
        t2n = truncation ** (2 * n)
        return math.sqrt(abs(a[0]) ** 2 + math.pi * float(np.sum(n * np.abs(a[1:]) ** 2 * t2n)))

    def normalized(self, label: str | None = None) -> "DirichletFunction":
        nrm = self.norm
        if nrm == 0:
            raise ValidationError("cannot normalize the zero function")
        return DirichletFunction(self.coefficients / nrm, label or self.label)


def dirichlet_norm(f: DirichletFunction) -> float:
    a = f.coefficients
    n = np.arange(1, len(a))
    return math.sqrt(abs(a[0]) ** 2 + math.pi * float(np.sum(n * np.abs(a[1:]) ** 2)))


def dirichlet_norm_quadrature(f, quad: DiskQuadrature) -> float:
    val = abs(f.value_at(0.0)) ** 2
    return math.sqrt(val + float(np.real(quad.integrate(f.deriv_abs2(quad.nodes)))))


def inner_product(f: DirichletFunction, g: DirichletFunction) -> complex:
    """<f, g> = f(0) conj(g(0)) + pi sum n a_n conj(b_n)."""
    a, b = f.coefficients, g.coefficients
    m = min(len(a), len(b))
    n = np.arange(1, m)
    return complex(a[0] * np.conj(b[0])
                   + math.pi * np.sum(n * a[1:m] * np.conj(b[1:m])))


def inner_product_quadrature(f, g, quad: DiskQuadrature) -> complex:
    head = f.value_at(0.0) * np.conj(g.value_at(0.0))
    tail = quad.integrate(f.deriv_values(quad.nodes)
                          * np.conj(g.deriv_values(quad.nodes)))
    return complex(head + tail)


def dirichlet_kernel(w: complex, series_length: int = 800) -> DirichletFunction:
    """K_w(z) = 1 + (1/pi) sum_{n>=1} (z conj(w))^n / n, truncated."""
    n = np.arange(1, series_length + 1)
    coeffs = np.concatenate([[1.0], np.conj(complex(w)) ** n / (math.pi * n)])
    return DirichletFunction(coeffs, label=f"K_{w}")


def kernel_reproduce_check(f: DirichletFunction, w: complex,
                           series_length: int = 800) -> float:
    """|<f, K_w> - f(w)| via the coefficient pairing."""
    if abs(w) > 0.95:
        warnings.warn("kernel series tail is not controlled for |w| > 0.95",
                      stacklevel=2)
    k = dirichlet_kernel(w, series_length=max(series_length, f.degree))
    return abs(inner_product(f, k) - f.value_at(w))


# ---------------------------------------------------------------------------
# peak functions and kernel probes


def _log_binomials(k: int) -> np.ndarray:
    lg = math.lgamma
    return np.array([lg(k + 1) - lg(n + 1) - lg(k - n + 1) for n in range(k + 1)])


class PeakFunction(DirichletFunction):
    """f_k(z) = ((1 + conj(zeta) z)/2)^k, peaking at the boundary point zeta.

    Coefficients feed the exact norm; evaluation uses the closed form, which
    stays stable at k in the hundreds where the expanded polynomial would be
    wasteful.
    """

    def __init__(self, zeta: complex, k: int):
        zeta = complex(zeta)
        if abs(abs(zeta) - 1.0) > 1e-9:
            raise ValidationError("peak anchor must lie on the unit circle")
        if k < 1:
            raise ValidationError("peak exponent must be >= 1")
        logs = _log_binomials(k) - k * math.log(2.0)
        coeffs = np.exp(logs) * np.conj(zeta) ** np.arange(k + 1)
        super().__init__(coeffs, label=f"peak(zeta={zeta:.3g}, k={k})")
        self.zeta = zeta
        self.k = k

    def __call__(self, z):
        base = (1.0 + np.conj(self.zeta) * np.asarray(z, dtype=complex)) / 2.0
        return base**self.k

    def value_at(self, z: complex) -> complex:
        return complex(((1.0 + np.conj(self.zeta) * complex(z)) / 2.0) ** self.k)

    def deriv_values(self, z):
        base = (1.0 + np.conj(self.zeta) * np.asarray(z, dtype=complex)) / 2.0
        return (self.k * np.conj(self.zeta) / 2.0) * base ** (self.k - 1)

    def deriv_abs2(self, z):
        base = np.abs(1.0 + np.conj(self.zeta) * np.asarray(z, dtype=complex)) / 2.0
        return (self.k**2 / 4.0) * base ** (2 * (self.k - 1))


def peak_function(zeta: complex, k: int) -> PeakFunction:
    return PeakFunction(zeta, k)


class BergmanProbe:
    """Normalized Bergman kernel k_z(w) = (1 - |z|^2)/(1 - conj(z) w)^2.

    Not a polynomial; value, derivative and Dirichlet norm all have closed
    forms, so probes can sit close to the boundary without series truncation.
    """

    def __init__(self, anchor: complex, normalize: bool = True):
        anchor = complex(anchor)
        if abs(anchor) >= 1.0:
            raise ValidationError("Bergman probe anchor must be interior")
        self.anchor = anchor
        x = abs(anchor) ** 2
        raw2 = (1.0 - x) ** 2 + math.pi * x * (4.0 + 2.0 * x) / (1.0 - x) ** 2
        self._scale = 1.0 / math.sqrt(raw2) if normalize else 1.0
        self.label = f"bergman(z={anchor:.4g})"

    @property
    def norm(self) -> float:
        x = abs(self.anchor) ** 2
        raw2 = (1.0 - x) ** 2 + math.pi * x * (4.0 + 2.0 * x) / (1.0 - x) ** 2
        return self._scale * math.sqrt(raw2)

    def __call__(self, w):
        d = 1.0 - np.conj(self.anchor) * np.asarray(w, dtype=complex)
        return self._scale * (1.0 - abs(self.anchor) ** 2) / d**2

    def value_at(self, w: complex) -> complex:
        return complex(self(complex(w)))

    def deriv_values(self, w):
        d = 1.0 - np.conj(self.anchor) * np.asarray(w, dtype=complex)
        return self._scale * 2.0 * np.conj(self.anchor) \
            * (1.0 - abs(self.anchor) ** 2) / d**3

    def deriv_abs2(self, w):
        return np.abs(self.deriv_values(w)) ** 2


# ---------------------------------------------------------------------------
# composition functionals


def composition_norm(phi: SymbolMap, f, quad: DiskQuadrature) -> float:
    """||C_phi f|| = sqrt(|f(phi(0))|^2 + int |f'(phi)|^2 |phi'|^2 dA)."""
    head = abs(f.value_at(complex(phi(0.0)))) ** 2
    pv = np.asarray(phi(quad.nodes))
    pd2 = np.abs(np.asarray(phi.deriv(quad.nodes))) ** 2
    return math.sqrt(head + float(np.real(quad.integrate(f.deriv_abs2(pv) * pd2))))


def pushforward_integrals(phi: SymbolMap, members, quad: DiskQuadrature):
    """int |f'(phi)|^2 |phi'|^2 dA for each member, sharing the phi evaluation."""
    pv = np.asarray(phi(quad.nodes))
    pd2 = np.abs(np.asarray(phi.deriv(quad.nodes))) ** 2
    wpd = quad.weights * pd2
    return np.array([float(np.real(np.dot(wpd, f.deriv_abs2(pv)))) for f in members])


def change_of_variables_residual(phi: SymbolMap, f, eps: float = 1e-6,
                                 radial_order: int = 160,
                                 angular_order: int = 512) -> float:
    """Relative gap between the two sides of the counting identity

        int_{|z|<=1-eps} |(f o phi)'|^2 dA  =  int |f'(w)|^2 n_phi(w) dA(w),

    with n_phi truncated at the same radius so both sides measure the same
    region, and the w-grid split at the image jump radii.
    """
    zq = build_quadrature(radial_order, angular_order, 1.0 - eps)
    pv = np.asarray(phi(zq.nodes))
    pd2 = np.abs(np.asarray(phi.deriv(zq.nodes))) ** 2
    lhs = float(np.real(zq.integrate(f.deriv_abs2(pv) * pd2)))

    features = image_radial_features(phi, eps)
    splits = list(features["jump_radii"])
    if features["band"] is not None:
        splits.extend(features["band"])
    wq = build_panel_quadrature(splits, radial_order, angular_order)
    n = count_batch(phi, wq.nodes, eps)
    rhs = float(np.real(wq.integrate(f.deriv_abs2(wq.nodes) * n)))
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


# ---------------------------------------------------------------------------
# test families and the tail/boundedness functionals


@dataclass(frozen=True)
class TestFamily:
    """Finite stand-in for the unit sphere of the Dirichlet space."""

    members: tuple
    normalized: bool = True

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def labels(self):
        return [m.label for m in self.members]


def default_family(cfg: FamilyConfig = FamilyConfig()) -> TestFamily:
    cfg.validate()
    members = []
    for n in range(1, cfg.monomial_degree_max + 1):
        coeffs = np.zeros(n + 1, dtype=complex)
        coeffs[n] = 1.0 / math.sqrt(math.pi * n)
        members.append(DirichletFunction(coeffs, label=f"e_{n}"))
    rng = np.random.default_rng(cfg.random_seed)
    for j in range(cfg.random_count):
        coeffs = rng.standard_normal(cfg.random_degree + 1) \
            + 1j * rng.standard_normal(cfg.random_degree + 1)
        coeffs[0] = 0.0
        members.append(DirichletFunction(coeffs, label=f"rand_{j}").normalized())
    for j in range(cfg.peak_anchors):
        zeta = np.exp(2j * np.pi * j / cfg.peak_anchors)
        for k in cfg.peak_ks:
            pk = PeakFunction(zeta, k)
            members.append(
                DirichletFunction(pk.coefficients / pk.norm,
                                  label=f"peak_{j}_{k}"))
    for r in cfg.kernel_radii:
        for j in range(cfg.kernel_angles):
            anchor = r * np.exp(2j * np.pi * (j + 0.5) / cfg.kernel_angles)
            members.append(BergmanProbe(anchor))
    return TestFamily(tuple(members))


@dataclass(frozen=True)
class BoundednessEstimate:
    """Family lower estimate of the Carleson bound, with a divergence probe.

    ``coarse`` and ``refined`` integrate over |z| <= 1 - eps for the two eps
    of the probe pair; growth by ``factor`` of 2 or more marks the estimate
    as divergence suspected (the operator is then presumably unbounded).
    """

    value: float
    coarse: float
    refined: float
    growth: float
    divergence_suspected: bool
    argmax_label: str
    eps_pair: tuple[float, float]


def boundedness_estimate(phi: SymbolMap, family: TestFamily,
                         eps_pair: tuple[float, float] = (1e-2, 1e-3),
                         radial_order: int = 160,
                         angular_order: int = 512) -> BoundednessEstimate:
    e0, e1 = eps_pair
    coarse_q = build_quadrature(radial_order, angular_order, 1.0 - e0)
    refined_q = build_quadrature(radial_order, angular_order, 1.0 - e1)
    coarse = pushforward_integrals(phi, family.members, coarse_q)
    refined = pushforward_integrals(phi, family.members, refined_q)
    i = int(np.argmax(refined))
    growth = refined[i] / max(coarse[i], 1e-300)
    return BoundednessEstimate(
        value=float(refined[i]),
        coarse=float(coarse[i]),
        refined=float(refined[i]),
        growth=float(growth),
        divergence_suspected=bool(growth >= 2.0),
        argmax_label=family.members[i].label,
        eps_pair=(e0, e1),
    )


def tail_functional(phi: SymbolMap, k: int, family: TestFamily,
                    w_quad: DiskQuadrature, eps: float = 1e-3,
                    counts: np.ndarray | None = None) -> float:
    """Family lower estimate of sup_f int_{n_phi > k} |f'|^2 n_phi dA."""
    return tail_functional_sweep(phi, [k], family, w_quad, eps, counts)[k]


def tail_functional_sweep(phi: SymbolMap, ks, family: TestFamily,
                          w_quad: DiskQuadrature, eps: float = 1e-3,
                          counts: np.ndarray | None = None) -> dict[int, float]:
    """Tail estimates for several thresholds, sharing one counting pass."""
    n = count_batch(phi, w_quad.nodes, eps) if counts is None else counts
    out: dict[int, float] = {}
    deriv_cache = None
    for k in sorted(ks, reverse=True):
        mask = n > k
        if not np.any(mask):
            out[k] = 0.0
            continue
        if deriv_cache is None:
            deriv_cache = np.stack(
                [m.deriv_abs2(w_quad.nodes) for m in family.members])
        weighted = w_quad.weights[mask] * n[mask]
        out[k] = float(np.max(deriv_cache[:, mask] @ weighted))
    return dict(sorted(out.items()))


def peak_ratio_sequence(phi: SymbolMap, zeta: complex, ks,
                        quad: DiskQuadrature | None = None) -> list[float]:
    """r_k = ||C_phi f_k||^2 / ||f_k||^2 along increasing peak exponents.

    When zeta stays away from the closure of the image, r_k^{1/k} settles at
    the square of the image maximum of |f_zeta| (Laplace asymptotics of the
    concentrating integrals).
    """
    ks = list(ks)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("peak exponents must increase")
    if quad is None:
        quad = build_quadrature(320, 512, 1.0 - 1e-6)
    out = []
    pv = np.asarray(phi(quad.nodes))
    pd2 = np.abs(np.asarray(phi.deriv(quad.nodes))) ** 2
    phi0 = complex(phi(0.0))
    for k in ks:
        f = PeakFunction(zeta, k)
        num = abs(f.value_at(phi0)) ** 2 \
            + float(np.real(quad.integrate(f.deriv_abs2(pv) * pd2)))
        out.append(num / f.norm**2)
    return out
