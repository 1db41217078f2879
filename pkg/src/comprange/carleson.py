"""Closed-range criteria: coverage, reverse-Carleson ratios, classification.

Everything here is Monte Carlo over seeded, splittable streams: each grid
point draws from a generator derived from (master seed, stream, ring, angle),
so results are bit-identical across runs and independent of evaluation order.
Estimates are one-sided evidence, never proofs; the classifier's labels say
"evidence" on purpose.

The z-grids ride rings that crowd toward the unit circle, because every
failure mode of interest (image thinning, truncation bands, the crescent's
tangency) lives at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ClassifyConfig, DensityQuery, FamilyConfig, QuadratureConfig
from .counting import count_batch, in_image_batch, tau_batch
from .dirichlet import (
    BoundednessEstimate,
    TestFamily,
    boundedness_estimate,
    build_quadrature,
    default_family,
    tail_functional_sweep,
)
from .errors import CompRangeError, ValidationError
from .geometry import CarlesonBox, bergman_disk
from .symbols import Crescent, SymbolMap

__all__ = [
    "RingMinimum",
    "DeltaEstimate",
    "CriterionRecord",
    "Verdict",
    "BoundaryCheck",
    "ClassifyResult",
    "coverage_ratio",
    "reverse_carleson_ratio",
    "delta_infimum",
    "delta_table",
    "box_delta_infimum",
    "gc_density",
    "gc_density_min",
    "boundary_accumulation_check",
    "classify",
]

_STREAM_DISK = 0
_STREAM_BOX = 1
_STREAM_GC = 2

CRITERION_KEYS = (
    "main_thm_b", "main_thm_c", "prop21_boxes",
    "cor26_bounded_n", "tail_hypothesis", "thmZ_gc",
)


def _rng(seed: int, stream: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, i, j]))


@dataclass(frozen=True)
class RingMinimum:
    radius: float
    n_angles: int
    min_ratio: float
    argmin_angle: float
    stderr: float


@dataclass(frozen=True)
class DeltaEstimate:
    """Infimum-of-density record over the z-grid for one mode.

    mode is "coverage" (plain area ratio) or "alpha" (n_phi^alpha weighted);
    the per-ring minima expose boundary decay.
    """

    mode: str
    alpha: float | None
    bergman_radius: float
    delta: float
    argmin_z: complex
    per_ring: tuple[RingMinimum, ...]
    standard_error: float
    seed: int
    eps: float
    samples_per_disk: int
    failed_points: int = 0

    def ring_table(self):
        return [(rm.radius, rm.min_ratio) for rm in self.per_ring]


@dataclass(frozen=True)
class CriterionRecord:
    value: float
    threshold: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class Verdict:
    label: str
    branch: str
    criteria: dict[str, CriterionRecord]
    notes: str = ""


@dataclass(frozen=True)
class BoundaryCheck:
    passed: bool
    witness: tuple[complex, float] | None
    boxes_checked: int
    inconclusive_boxes: int
    min_hit_fraction: float


@dataclass(frozen=True)
class CountingStats:
    max_n: int
    histogram: dict[int, int]
    samples: int


@dataclass
class ClassifyResult:
    verdict: Verdict
    delta_coverage: DeltaEstimate
    delta_alpha: DeltaEstimate
    refined_coverage: DeltaEstimate | None
    tail: dict[int, float]
    boundedness: BoundednessEstimate
    boundary: BoundaryCheck
    gc_min: dict
    counting: CountingStats
    work: dict = field(default_factory=dict)
    degraded_stages: tuple = ()


# ---------------------------------------------------------------------------
# ring scans


def _grid(rings, angles):
    for i, (t, m) in enumerate(zip(rings, angles)):
        for j in range(m):
            yield i, j, t * np.exp(2j * np.pi * j / m)


def _point_ratios(phi: SymbolMap, z: complex, r: float, q: DensityQuery,
                  modes, i: int, j: int):
    """Ratio estimates (one per mode) at a single grid point."""
    disk = bergman_disk(z, r)
    samples = disk.sample(_rng(q.seed, _STREAM_DISK, i, j), q.samples_per_disk)
    counts = count_batch(phi, samples, q.eps)
    inside = in_image_batch(phi, samples, q.eps) if isinstance(phi, Crescent) \
        else counts >= 1
    out = []
    for mode in modes:
        if mode == "coverage":
            vals = inside.astype(float)
        else:
            vals = np.where(counts > 0, counts.astype(float), 1.0) ** float(mode)
            vals = np.where(counts > 0, vals, 0.0)
        out.append((float(vals.mean()),
                    float(vals.std(ddof=0) / math.sqrt(len(vals)))))
    return out, counts


def _ring_scan(phi: SymbolMap, r: float, q: DensityQuery, modes,
               rings=None, angles=None, collect_counts: bool = False):
    rings = tuple(q.rings if rings is None else rings)
    angles = tuple(q.angles if angles is None else angles)
    per_mode = [dict() for _ in modes]  # ring index -> running minimum record
    max_n = 0
    hist: dict[int, int] = {}
    total = 0
    failed = 0
    for i, j, z in _grid(rings, angles):
        try:
            ratios, counts = _point_ratios(phi, z, r, q, modes, i, j)
        except CompRangeError:
            failed += 1
            continue
        if collect_counts:
            mx = int(counts.max(initial=0))
            max_n = max(max_n, mx)
            binned = np.bincount(np.minimum(counts, 11))
            for val, cnt in enumerate(binned):
                if cnt:
                    hist[val] = hist.get(val, 0) + int(cnt)
            total += len(counts)
        for m, (ratio, err) in enumerate(ratios):
            best = per_mode[m].get(i)
            if best is None or ratio < best[0]:
                per_mode[m][i] = (ratio, z, err, len(range(angles[i])))
    n_points = sum(angles)
    if failed > 0.01 * n_points:
        raise ValidationError(
            f"more than 1% of grid points failed ({failed}/{n_points})")
    estimates = []
    for m, mode in enumerate(modes):
        ring_records = []
        delta, argmin_z, stderr = math.inf, 0.0 + 0.0j, 0.0
        for i, t in enumerate(rings):
            if i not in per_mode[m]:
                continue
            ratio, z, err, _ = per_mode[m][i]
            ring_records.append(RingMinimum(
                radius=float(t), n_angles=int(angles[i]), min_ratio=ratio,
                argmin_angle=float(np.angle(z)), stderr=err))
            if ratio < delta:
                delta, argmin_z, stderr = ratio, z, err
        estimates.append(DeltaEstimate(
            mode="coverage" if mode == "coverage" else "alpha",
            alpha=None if mode == "coverage" else float(mode),
            bergman_radius=float(r),
            delta=float(delta),
            argmin_z=complex(argmin_z),
            per_ring=tuple(ring_records),
            standard_error=stderr,
            seed=q.seed,
            eps=q.eps,
            samples_per_disk=q.samples_per_disk,
            failed_points=failed,
        ))
    stats = CountingStats(max_n=max_n, histogram=dict(sorted(hist.items())),
                          samples=total)
    return estimates, stats


def coverage_ratio(phi: SymbolMap, z: complex, r: float,
                   q: DensityQuery) -> tuple[float, float]:
    """Monte Carlo A(phi(D) cap D(z, r)) / A(D(z, r)) with its standard error."""
    q.validate()
    (out,), _ = _point_ratios(phi, z, r, q, ["coverage"], 0, 0)
    return out


def reverse_carleson_ratio(phi: SymbolMap, z: complex, r: float, alpha: float,
                           q: DensityQuery) -> tuple[float, float]:
    """Monte Carlo (1/A(D(z,r))) int_{phi(D) cap D(z,r)} n_phi^alpha dA."""
    if not 0.0 < alpha <= 1.0:
        raise ValidationError("alpha must lie in (0, 1]")
    q.validate()
    (out,), _ = _point_ratios(phi, z, r, q, [alpha], 0, 0)
    return out


def delta_infimum(phi: SymbolMap, r: float, alpha, q: DensityQuery,
                  rings=None, angles=None) -> DeltaEstimate:
    """Grid infimum of the density ratio; alpha="coverage" for the area mode."""
    q.validate()
    mode = "coverage" if alpha == "coverage" else float(alpha)
    (est,), _ = _ring_scan(phi, r, q, [mode], rings=rings, angles=angles)
    return est


def delta_table(phi: SymbolMap, r: float, alphas, q: DensityQuery,
                include_coverage: bool = True, rings=None, angles=None):
    """Delta estimates for several alpha modes sharing one sampling pass."""
    q.validate()
    modes = (["coverage"] if include_coverage else []) + [float(a) for a in alphas]
    estimates, stats = _ring_scan(phi, r, q, modes, rings=rings, angles=angles,
                                  collect_counts=True)
    table = {}
    for mode, est in zip(modes, estimates):
        key = "coverage" if mode == "coverage" else f"alpha={float(mode):g}"
        table[key] = est
    return table, stats


# ---------------------------------------------------------------------------
# Carleson boxes


def _box_samples(box: CarlesonBox, m: int, rng: np.random.Generator,
                 exclude_origin: float = 0.0) -> np.ndarray:
    """Uniform draws from D cap S(zeta, r) by rejection from the bounding box."""
    zx, zy = box.anchor.real, box.anchor.imag
    r = box.radius
    x0, x1 = max(-1.0, zx - r), min(1.0, zx + r)
    y0, y1 = max(-1.0, zy - r), min(1.0, zy + r)
    out = np.empty(0, dtype=complex)
    for _ in range(200):
        need = m - len(out)
        if need <= 0:
            break
        draw = max(4 * need, 64)
        w = (x0 + (x1 - x0) * rng.random(draw)) \
            + 1j * (y0 + (y1 - y0) * rng.random(draw))
        keep = box.contains(w)
        if exclude_origin > 0.0:
            keep &= np.abs(w) >= exclude_origin
        out = np.concatenate([out, w[keep]])
    if len(out) < m:
        raise ValidationError(f"box sampling exhausted for {box}")
    return out[:m]


def gc_density(phi: SymbolMap, c: float, zeta: complex, r: float,
               q: DensityQuery, box_index: int = 0) -> tuple[float, float]:
    """Monte Carlo A(G_c cap S(zeta, r)) / A(D cap S(zeta, r)), G_c = {tau > c}.

    tau is undefined at the origin; a 1e-6 neighborhood is excluded, which is
    measure-negligible for every box radius in use.
    """
    box = CarlesonBox(complex(zeta), float(r))
    rng = _rng(q.seed, _STREAM_GC, box_index, 0)
    w = _box_samples(box, q.samples_per_disk, rng, exclude_origin=1e-6)
    _, tau = tau_batch(phi, w, q.eps)
    vals = (tau > c).astype(float)
    return float(vals.mean()), float(vals.std(ddof=0) / math.sqrt(len(vals)))


def gc_density_min(phi: SymbolMap, c: float, q: DensityQuery,
                   zeta_count: int = 16, radii=(0.2, 0.1, 0.05)) -> dict:
    """Minimum G_c box density over a boundary grid (Hardy-space criterion)."""
    worst = math.inf
    by_radius = {}
    idx = 0
    for r in radii:
        rmin = math.inf
        for j in range(zeta_count):
            zeta = np.exp(2j * np.pi * j / zeta_count)
            val, _ = gc_density(phi, c, zeta, r, q, box_index=idx)
            rmin = min(rmin, val)
            idx += 1
        by_radius[r] = rmin
        worst = min(worst, rmin)
    return {"level": c, "value": worst, "by_radius": by_radius}


def box_delta_infimum(phi: SymbolMap, alpha, q: DensityQuery,
                      zeta_count: int = 16, radii=(0.2, 0.1, 0.05)) -> float:
    """Box-based counterpart of delta_infimum (reverse Carleson over S(zeta, r)).

    The density is taken against A(D cap S), so the coverage mode of the disk
    form and this box form pass or fail together on the test corpus.
    """
    worst = math.inf
    idx = 0
    for r in radii:
        for j in range(zeta_count):
            zeta = np.exp(2j * np.pi * j / zeta_count)
            box = CarlesonBox(complex(zeta), float(r))
            rng = _rng(q.seed, _STREAM_BOX, 512 + idx, 0)
            w = _box_samples(box, q.samples_per_disk, rng)
            counts = count_batch(phi, w, q.eps)
            if alpha == "coverage":
                if isinstance(phi, Crescent):
                    vals = np.asarray(
                        in_image_batch(phi, w, q.eps)).astype(float)
                else:
                    vals = (counts >= 1).astype(float)
            else:
                vals = np.where(counts > 0, counts.astype(float), 1.0) ** float(alpha)
                vals = np.where(counts > 0, vals, 0.0)
            worst = min(worst, float(vals.mean()))
            idx += 1
    return worst


def boundary_accumulation_check(phi: SymbolMap, q: DensityQuery,
                                boxes=None, zeta_count: int = 32,
                                radii=(0.2, 0.1, 0.05)) -> BoundaryCheck:
    """Does every boundary box meet the image?  Evidence for T in cl(phi(D)).

    A failing box is a witness that some boundary arc is missed, which is the
    contrapositive hook of the peak-function necessity argument.
    """
    if boxes is None:
        boxes = [CarlesonBox(complex(np.exp(2j * np.pi * j / zeta_count)), r)
                 for r in radii for j in range(zeta_count)]
    witness = None
    inconclusive = 0
    min_frac = 1.0
    for idx, box in enumerate(boxes):
        rng = _rng(q.seed, _STREAM_BOX, idx, 0)
        try:
            w = _box_samples(box, q.samples_per_disk, rng)
            hits = np.asarray(in_image_batch(phi, w, q.eps))
        except CompRangeError:
            inconclusive += 1
            continue
        frac = float(hits.mean())
        min_frac = min(min_frac, frac)
        if not hits.any() and witness is None:
            witness = (box.anchor, box.radius)
    return BoundaryCheck(
        passed=witness is None and inconclusive == 0,
        witness=witness,
        boxes_checked=len(boxes),
        inconclusive_boxes=inconclusive,
        min_hit_fraction=min_frac,
    )


# ---------------------------------------------------------------------------
# the classifier


def _refinement_rings(rings, count: int):
    """Continue the ring ladder toward the circle: gap halves each step."""
    t = max(rings)
    out = []
    for _ in range(count):
        t = 1.0 - (1.0 - t) / 2.0
        out.append(t)
    return tuple(out)


def classify(phi: SymbolMap, q: DensityQuery,
             ccfg: ClassifyConfig = ClassifyConfig(),
             family: TestFamily | None = None,
             family_cfg: FamilyConfig = FamilyConfig(),
             quad_cfg: QuadratureConfig = QuadratureConfig(),
             tail_ks=None) -> ClassifyResult:
    """Run every estimator and apply the decision procedure.

    Branches, in order: (i) boundedness divergence, (ii) boundary-box failure,
    (iii) small tail + coverage bounded below (sufficiency direction),
    (iv) bounded counting + boundary decay of the density (necessity for
    bounded n_phi), else inconclusive.  Degraded estimators downgrade the
    verdict instead of raising.
    """
    q.validate()
    ccfg.validate()
    if family is None:
        family = default_family(family_cfg)
    notes = []
    degraded = []
    work = {"grid_points": sum(q.angles), "mc_samples_per_point": q.samples_per_disk}

    def _stage(name, fn, fallback):
        try:
            return fn()
        except CompRangeError as exc:
            degraded.append(f"{name}: {exc}")
            return fallback

    bounded = _stage(
        "boundedness",
        lambda: boundedness_estimate(
            phi, family, eps_pair=ccfg.divergence_eps,
            radial_order=quad_cfg.radial_order,
            angular_order=quad_cfg.angular_order),
        BoundednessEstimate(math.nan, math.nan, math.nan, math.nan,
                            False, "unavailable", ccfg.divergence_eps))

    boundary = _stage(
        "boundary_check",
        lambda: boundary_accumulation_check(phi, q),
        BoundaryCheck(False, None, 0, 1, math.nan))

    r = q.bergman_radius
    empty_delta = DeltaEstimate("coverage", None, r, math.nan, 0.0 + 0.0j,
                                (), math.nan, q.seed, q.eps, q.samples_per_disk)
    table, stats = _stage(
        "delta_scan",
        lambda: delta_table(phi, r, [q.alpha], q, include_coverage=True),
        ({"coverage": empty_delta, f"alpha={q.alpha:g}": empty_delta},
         CountingStats(0, {}, 0)))
    delta_cov = table["coverage"]
    delta_alpha = table[f"alpha={q.alpha:g}"]

    w_quad = build_quadrature(quad_cfg.radial_order, quad_cfg.angular_order,
                              quad_cfg.radial_truncation)
    ks = sorted(set([ccfg.tail_k0] + list(tail_ks or [1, 2, 4, 16])))
    tail = _stage(
        "tail",
        lambda: tail_functional_sweep(phi, ks, family, w_quad, q.eps),
        {k: math.nan for k in ks})
    work["tail_grid_nodes"] = len(w_quad.nodes)

    gc_min = _stage(
        "gc_density",
        lambda: gc_density_min(phi, q.level, q),
        {"level": q.level, "value": math.nan, "by_radius": {}})

    refined = None
    decayed = False
    if not (bounded.divergence_suspected or not boundary.passed
            or (tail[ccfg.tail_k0] <= ccfg.tail_threshold
                and delta_cov.delta >= ccfg.delta0)):
        extra = _refinement_rings(q.rings, ccfg.refinement_rings)
        refined = _stage(
            "ring_refinement",
            lambda: delta_infimum(
                phi, r, "coverage", q,
                rings=tuple(q.rings) + extra,
                angles=tuple(q.angles) + (max(q.angles),) * len(extra)),
            None)
    if refined is not None:
        mins = [rm.min_ratio for rm in refined.per_ring[-(ccfg.refinement_rings + 1):]]
        errs = [rm.stderr for rm in refined.per_ring[-(ccfg.refinement_rings + 1):]]
        nonincreasing = all(
            b <= a + 2.0 * (ea + eb)
            for (a, ea), (b, eb) in zip(zip(mins, errs), zip(mins[1:], errs[1:])))
        decayed = refined.delta <= ccfg.delta_min and nonincreasing

    criteria = {
        "main_thm_b": CriterionRecord(
            value=delta_cov.delta, threshold=ccfg.delta0,
            passed=delta_cov.delta >= ccfg.delta0,
            detail="coverage density infimum over the z-grid"),
        "main_thm_c": CriterionRecord(
            value=delta_alpha.delta, threshold=ccfg.delta0,
            passed=delta_alpha.delta >= ccfg.delta0,
            detail=f"reverse Carleson infimum at alpha={q.alpha:g}"),
        "prop21_boxes": CriterionRecord(
            value=boundary.min_hit_fraction, threshold=0.0,
            passed=boundary.passed,
            detail="every boundary box meets the image"),
        "cor26_bounded_n": CriterionRecord(
            value=float(stats.max_n), threshold=float(ccfg.n_bound),
            passed=stats.max_n <= ccfg.n_bound,
            detail="max sampled counting value"),
        "tail_hypothesis": CriterionRecord(
            value=tail[ccfg.tail_k0], threshold=ccfg.tail_threshold,
            passed=tail[ccfg.tail_k0] <= ccfg.tail_threshold,
            detail=f"family tail estimate at k0={ccfg.tail_k0}"),
        "thmZ_gc": CriterionRecord(
            value=gc_min["value"], threshold=ccfg.delta0,
            passed=gc_min["value"] >= ccfg.delta0,
            detail=f"G_c box density at c={q.level:g} (Hardy-space criterion)"),
    }

    if bounded.divergence_suspected:
        label, branch = "unbounded_operator_evidence", "boundedness_divergence"
        notes.append(
            f"pushforward energy grew {bounded.growth:.2f}x under truncation "
            f"refinement (argmax {bounded.argmax_label})")
    elif not boundary.passed and boundary.inconclusive_boxes == 0:
        label, branch = "not_closed_evidence", "prop21"
        notes.append(f"empty boundary box at {witness_str(boundary.witness)}")
    elif criteria["tail_hypothesis"].passed and criteria["main_thm_b"].passed:
        label, branch = "closed_range_evidence", "main_thm_b"
        notes.append(
            f"coverage delta {delta_cov.delta:.4f} bounded away from zero "
            f"with vanishing tail")
    elif criteria["cor26_bounded_n"].passed and decayed:
        label, branch = "not_closed_evidence", "cor26"
        notes.append(
            f"counting bounded (max n = {stats.max_n}) while the coverage "
            f"density decays below {ccfg.delta_min:g} under ring refinement")
    else:
        label, branch = "inconclusive", "none"
        notes.append("no decision branch fired at the configured thresholds")
    if boundary.inconclusive_boxes:
        notes.append(f"{boundary.inconclusive_boxes} boundary boxes inconclusive")
    notes.extend(f"degraded estimator {d}" for d in degraded)

    verdict = Verdict(label=label, branch=branch, criteria=criteria,
                      notes="; ".join(notes))
    return ClassifyResult(
        verdict=verdict,
        delta_coverage=delta_cov,
        delta_alpha=delta_alpha,
        refined_coverage=refined,
        tail=tail,
        boundedness=bounded,
        boundary=boundary,
        gc_min=gc_min,
        counting=stats,
        work=work,
        degraded_stages=tuple(degraded),
    )


def witness_str(witness) -> str:
    if witness is None:
        return "none"
    anchor, radius = witness
    return f"S({anchor:.4g}, {radius:g})"
