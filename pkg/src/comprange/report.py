"""Scenario pipeline, JSON reports, ring tables, heatmaps and figures.

Reports are deterministic by construction: every Monte Carlo stream is seeded
from the scenario, floats serialize with round-trip repr, keys are sorted,
and timing information is recorded as work counters (samples, nodes, grid
points) rather than wall-clock seconds, so identical runs produce identical
bytes.  Wall time goes to stderr.

Images: the golden-testable artifact is a portable graymap (P2) plus a text
sidecar with the value mapping; matplotlib renders the presentation figures
(PNG) alongside the delimited ring table.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .carleson import ClassifyResult, DeltaEstimate, classify
from .config import ScenarioConfig
from .counting import count_batch, tau_batch
from .dirichlet import build_quadrature, peak_ratio_sequence
from .errors import CompRangeError
from .geometry import bergman_disk
from .symbols import Crescent, SymbolMap, build_symbol
from .counting import in_image_batch

VERSION = "0.1.0"

__all__ = [
    "VERSION",
    "RunReport",
    "run_scenario",
    "write_report_json",
    "write_rings_csv",
    "emit_heatmap",
    "render_figures",
]

HEATMAP_FIELDS = ("n_phi", "tau", "coverage", "gc_indicator")


def _cpoint(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _delta_dict(est: DeltaEstimate) -> dict:
    return {
        "mode": est.mode,
        "alpha": est.alpha,
        "bergman_radius": est.bergman_radius,
        "delta": est.delta,
        "standard_error": est.standard_error,
        "argmin_z": _cpoint(est.argmin_z),
        "eps": est.eps,
        "samples_per_disk": est.samples_per_disk,
        "failed_points": est.failed_points,
        "per_ring": [
            {
                "radius": rm.radius,
                "n_angles": rm.n_angles,
                "min_ratio": rm.min_ratio,
                "argmin_angle": rm.argmin_angle,
                "stderr": rm.stderr,
            }
            for rm in est.per_ring
        ],
    }


@dataclass
class RunReport:
    """Everything one scenario run produced, ready for serialization."""

    label: str
    scenario: dict
    result: ClassifyResult
    peak_ratios: dict
    seed: int

    def to_dict(self) -> dict:
        res = self.result
        v = res.verdict
        return {
            "schema_version": 1,
            "version": VERSION,
            "label": self.label,
            "seed": self.seed,
            "scenario": self.scenario,
            "verdict": {
                "label": v.label,
                "branch": v.branch,
                "notes": v.notes,
                "criteria": {
                    key: {
                        "value": rec.value,
                        "threshold": rec.threshold,
                        "passed": rec.passed,
                        "detail": rec.detail,
                    }
                    for key, rec in sorted(v.criteria.items())
                },
            },
            "delta_estimates": {
                "coverage": _delta_dict(res.delta_coverage),
                f"alpha={res.delta_alpha.alpha:g}": _delta_dict(res.delta_alpha),
            },
            "refined_coverage": None if res.refined_coverage is None
            else _delta_dict(res.refined_coverage),
            "tail_estimates": {
                f"k={k}": {"value": val, "kind": "family_lower_estimate"}
                for k, val in sorted(res.tail.items())
            },
            "peak_ratios": self.peak_ratios,
            "boundedness": {
                "value": res.boundedness.value,
                "coarse": res.boundedness.coarse,
                "refined": res.boundedness.refined,
                "growth": res.boundedness.growth,
                "divergence_suspected": res.boundedness.divergence_suspected,
                "argmax": res.boundedness.argmax_label,
                "eps_pair": list(res.boundedness.eps_pair),
                "kind": "family_lower_estimate",
            },
            "boundary_check": {
                "passed": res.boundary.passed,
                "witness": None if res.boundary.witness is None
                else {"anchor": _cpoint(res.boundary.witness[0]),
                      "radius": res.boundary.witness[1]},
                "boxes_checked": res.boundary.boxes_checked,
                "inconclusive_boxes": res.boundary.inconclusive_boxes,
                "min_hit_fraction": res.boundary.min_hit_fraction,
            },
            "gc_density": {
                "level": res.gc_min["level"],
                "value": res.gc_min["value"],
                "by_radius": {f"{r:g}": val
                              for r, val in res.gc_min["by_radius"].items()},
            },
            "counting": {
                "max_n": res.counting.max_n,
                "histogram": {str(k): v
                              for k, v in res.counting.histogram.items()},
                "samples": res.counting.samples,
            },
            "timings": {"kind": "deterministic_work_counters", **res.work},
        }


def run_scenario(cfg: ScenarioConfig,
                 out_dir: str | Path | None = None) -> tuple[RunReport, int]:
    """Full pipeline: build symbol, classify, peak table, artifacts on disk.

    Exit codes: 0 clean, 2 inconclusive with recorded estimator degradation.
    Config errors raise before any work happens.
    """
    cfg.validate()
    t0 = time.perf_counter()
    phi = build_symbol(cfg.symbol)
    result = classify(phi, cfg.query, cfg.classify,
                      family_cfg=cfg.family, quad_cfg=cfg.quadrature)

    anchor = phi.zeta if isinstance(phi, Crescent) else 1.0 + 0.0j
    ks = sorted(set(cfg.family.peak_ks))
    peak_quad = build_quadrature(
        max(cfg.quadrature.radial_order, 320), cfg.quadrature.angular_order,
        cfg.quadrature.radial_truncation)
    try:
        ratios = peak_ratio_sequence(phi, anchor, ks, quad=peak_quad)
        peak = {
            "anchor": _cpoint(anchor),
            "ks": list(ks),
            "ratio": ratios,
            "kth_root": [r ** (1.0 / k) for k, r in zip(ks, ratios)],
        }
    except CompRangeError as exc:
        peak = {"anchor": _cpoint(anchor), "ks": list(ks), "error": str(exc)}

    report = RunReport(
        label=cfg.label or cfg.symbol.get("kind", "scenario"),
        scenario=cfg.to_dict(),
        result=result,
        peak_ratios=peak,
        seed=cfg.query.seed,
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.outputs.report:
            write_report_json(report, out / "report.json")
        if cfg.outputs.rings:
            write_rings_csv(report, out / "rings.csv")
        if cfg.outputs.figures:
            render_figures(report, out)
        if cfg.outputs.heatmaps:
            for fld in ("n_phi", "tau"):
                emit_heatmap(fld, 128, cfg, out, phi=phi)
    print(f"[comprange] scenario {report.label}: {result.verdict.label} "
          f"({time.perf_counter() - t0:.1f}s wall)", file=sys.stderr)

    degraded = (result.delta_coverage.failed_points > 0
                or result.boundary.inconclusive_boxes > 0
                or len(result.degraded_stages) > 0)
    code = 2 if (result.verdict.label == "inconclusive" and degraded) else 0
    return report, code


def write_report_json(report: RunReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def rings_rows(report: RunReport):
    rows = []
    estimates = [report.result.delta_coverage, report.result.delta_alpha]
    if report.result.refined_coverage is not None:
        estimates.append(report.result.refined_coverage)
    seen = set()
    for est in estimates:
        mode = est.mode if est.alpha is None else f"alpha={est.alpha:g}"
        if est is report.result.refined_coverage:
            mode = "coverage_refined"
        if mode in seen:
            continue
        seen.add(mode)
        for rm in est.per_ring:
            rows.append([mode, rm.radius, rm.n_angles, rm.min_ratio,
                         rm.stderr, rm.argmin_angle])
    return rows


def write_rings_csv(report: RunReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "ring_radius", "n_angles", "min_ratio",
                         "stderr", "argmin_angle"])
        writer.writerows(rings_rows(report))


# ---------------------------------------------------------------------------
# heatmaps


def _heatmap_field(field: str, phi: SymbolMap, cfg: ScenarioConfig,
                   radii: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    q = cfg.query
    grid = radii[:, None] * np.exp(1j * thetas[None, :])
    flat = grid.ravel()
    if field == "n_phi":
        vals = count_batch(phi, flat, q.eps).astype(float)
    elif field == "tau":
        _, tau = tau_batch(phi, flat, q.eps)
        vals = np.where(np.abs(flat) < 1e-6, np.nan, tau)
    elif field == "gc_indicator":
        _, tau = tau_batch(phi, flat, q.eps)
        vals = np.where(np.abs(flat) < 1e-6, np.nan,
                        (tau > q.level).astype(float))
    elif field == "coverage":
        vals = np.empty(len(flat))
        for idx, z in enumerate(flat):
            disk = bergman_disk(z, q.bergman_radius)
            rng = np.random.default_rng(
                np.random.SeedSequence([q.seed, 3, idx]))
            s = disk.sample(rng, max(200, q.samples_per_disk // 4))
            vals[idx] = float(np.mean(in_image_batch(phi, s, q.eps)))
    else:
        raise CompRangeError(f"unknown heatmap field {field!r}")
    return vals.reshape(grid.shape)


def emit_heatmap(field: str, resolution: int, cfg: ScenarioConfig,
                 out_dir: str | Path, phi: SymbolMap | None = None,
                 png: bool = True) -> dict:
    """Sample a field on a polar grid; write PGM + sidecar (+ PNG figure).

    The PGM is the bit-exact artifact; min/max and the gray-level breakpoints
    land in the sidecar so the image is self-describing.
    """
    if resolution > 2048:
        raise CompRangeError("heatmap resolution is capped at 2048")
    if field not in HEATMAP_FIELDS:
        raise CompRangeError(f"unknown heatmap field {field!r}")
    if phi is None:
        phi = build_symbol(cfg.symbol)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nrad = max(8, resolution // 2)
    radii = (np.arange(nrad) + 0.5) / nrad * 0.999
    thetas = 2.0 * np.pi * np.arange(resolution) / resolution
    vals = _heatmap_field(field, phi, cfg, radii, thetas)

    sentinels = int(np.count_nonzero(~np.isfinite(vals)))
    finite = vals[np.isfinite(vals)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = float(finite.max()) if finite.size else 0.0
    span = vmax - vmin
    gray = np.zeros_like(vals)
    if span > 0:
        gray = (vals - vmin) / span * 255.0
    gray = np.where(np.isfinite(gray), np.clip(gray, 0, 255), 0.0)
    gray = gray.astype(np.uint8)

    pgm_path = out / f"{field}.pgm"
    lines = [f"P2", f"# comprange field={field} resolution={resolution}",
             f"{gray.shape[1]} {gray.shape[0]}", "255"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in gray)
    pgm_path.write_text("\n".join(lines) + "\n")

    breakpoints = [vmin + span * j / 8.0 for j in range(9)]
    sidecar = out / f"{field}.txt"
    sidecar.write_text("\n".join([
        f"field {field}",
        f"resolution {resolution}",
        f"rows {gray.shape[0]}",
        f"cols {gray.shape[1]}",
        f"min {vmin!r}",
        f"max {vmax!r}",
        f"sentinel_pixels {sentinels}",
        f"seed {cfg.query.seed}",
        f"symbol {json.dumps(cfg.symbol, sort_keys=True)}",
        "gray_breakpoints " + " ".join(repr(b) for b in breakpoints),
    ]) + "\n")

    paths = {"pgm": str(pgm_path), "sidecar": str(sidecar)}
    if png:
        paths["png"] = _heatmap_png(field, vals, radii, thetas, out)
    return paths


def _mpl():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _heatmap_png(field, vals, radii, thetas, out: Path) -> str:
    plt = _mpl()
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5, 4))
    tgrid = np.concatenate([thetas, [2.0 * np.pi]])
    rgrid = np.concatenate([[0.0], radii + radii[0]])
    mesh = ax.pcolormesh(tgrid, rgrid, np.nan_to_num(vals), cmap="viridis")
    ax.set_yticklabels([])
    ax.set_title(field)
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    path = out / f"{field}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_figures(report: RunReport, out_dir: str | Path) -> list[str]:
    """Matplotlib figures next to the delimited output: ring decay + peaks."""
    plt = _mpl()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    made = []

    fig, ax = plt.subplots(figsize=(6, 4))
    res = report.result
    series = [("coverage", res.delta_coverage)]
    series.append((f"alpha={res.delta_alpha.alpha:g}", res.delta_alpha))
    if res.refined_coverage is not None:
        series.append(("coverage refined", res.refined_coverage))
    for name, est in series:
        xs = [1.0 - rm.radius for rm in est.per_ring]
        ys = [max(rm.min_ratio, 1e-12) for rm in est.per_ring]
        ax.plot(xs, ys, marker="o", label=name)
    ax.axhline(0.05, color="gray", ls="--", lw=0.8, label="delta0")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("1 - |z| (ring)")
    ax.set_ylabel("min density ratio")
    ax.set_title(f"{report.label}: per-ring density minima")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = out / "delta_rings.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    made.append(str(p))

    if "ratio" in report.peak_ratios:
        fig, ax = plt.subplots(figsize=(6, 4))
        ks = report.peak_ratios["ks"]
        ax.plot(ks, report.peak_ratios["kth_root"], marker="s")
        ax.set_xlabel("k")
        ax.set_ylabel("r_k^{1/k}")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{report.label}: peak-ratio k-th roots")
        fig.tight_layout()
        p = out / "peak_ratios.png"
        fig.savefig(p, dpi=150)
        plt.close(fig)
        made.append(str(p))
    return made
