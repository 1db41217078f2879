"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here, not configurable.
"""

import dataclasses
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from comprange.carleson import boundary_accumulation_check, classify, coverage_ratio
from comprange.config import DensityQuery, load_scenario
from comprange.dirichlet import (
    DirichletFunction,
    boundedness_estimate,
    build_quadrature,
    composition_norm,
    default_family,
    dirichlet_norm,
    kernel_reproduce_check,
    peak_ratio_sequence,
    tail_functional_sweep,
)
from comprange.config import FamilyConfig
from comprange.geometry import bergman_disk, eta_from_radius
from comprange.report import run_scenario
from comprange.symbols import build_symbol
from comprange.verify import corpus_delta_tables

Q = DensityQuery()
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

EXPECTED_CLOSED = {
    "identity": True, "power2": True, "blaschke2": True,
    "scaled": False, "crescent": False,
}


def _report(num: int, ok: bool, detail: str, elapsed: float, limit: float):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail} " \
           f"[{elapsed:.1f}s / limit {limit:.0f}s]"
    print(line)
    assert ok, line
    assert elapsed < limit, line


@pytest.fixture(scope="module")
def corpus_tables():
    """Shared delta tables (coverage + four alphas) for criteria 7 and 8."""
    return corpus_delta_tables(Q, alphas=(0.25, 0.5, 0.75, 1.0))


def test_criterion_1_geometry_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(42)
    disagreements = 0
    for _ in range(100):
        z = complex(0.95 * math.sqrt(rng.random())
                    * np.exp(2j * math.pi * rng.random()))
        r = 0.05 + 2.95 * rng.random()
        d = bergman_disk(z, r)
        eta = eta_from_radius(r)
        w = 0.999999 * np.sqrt(rng.random(10_000)) \
            * np.exp(2j * np.pi * rng.random(10_000))
        rho = np.abs(z - w) / np.abs(1.0 - np.conj(z) * w)
        band = (np.abs(np.abs(w - d.euclidean_center) - d.euclidean_radius) < 1e-9) \
            | (np.abs(rho - eta) < 1e-9)
        disagreements += int(np.count_nonzero((d.contains(w) != (rho < eta)) & ~band))
    _report(1, disagreements == 0,
            f"Euclidean realization vs rho-oracle on 100x10^4 points: "
            f"{disagreements} disagreements", time.monotonic() - t0, 5.0)


def test_criterion_2_dirichlet_identities():
    t0 = time.monotonic()
    worst_norm = max(
        abs(dirichlet_norm(DirichletFunction(
            np.eye(n + 1, dtype=complex)[n] / math.sqrt(math.pi * n))) - 1.0)
        for n in range(1, 41))
    rng = np.random.default_rng(5)
    worst_res = 0.0
    for _ in range(20):
        f = DirichletFunction(rng.standard_normal(13)
                              + 1j * rng.standard_normal(13))
        w = 0.9 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        worst_res = max(worst_res, kernel_reproduce_check(f, complex(w)))
    ok = worst_norm <= 1e-10 and worst_res <= 1e-8
    _report(2, ok, f"basis norm error {worst_norm:.2e}, "
            f"kernel residual {worst_res:.2e}", time.monotonic() - t0, 5.0)


def test_criterion_3_change_of_variables():
    t0 = time.monotonic()
    from comprange.dirichlet import change_of_variables_residual
    rng = np.random.default_rng(6)
    rand8 = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    rand8[0] = 0.0
    funcs = [
        DirichletFunction([0, 1], label="z"),
        DirichletFunction([0, 0, 1], label="z^2"),
        DirichletFunction([0, 0, 0, 1 / math.sqrt(3 * math.pi)], label="e_3"),
        DirichletFunction(rand8, label="rand8").normalized(),
    ]
    symbols = [build_symbol(d) for d in (
        {"kind": "identity"}, {"kind": "power", "n": 2},
        {"kind": "blaschke", "zeros": [[0.5, 0.0], [-0.3, 0.0]]},
        {"kind": "scaled", "c": 0.5})]
    worst = max(change_of_variables_residual(phi, f)
                for phi in symbols for f in funcs)
    _report(3, worst <= 1e-4, f"max relative residual {worst:.2e} over 16 pairs",
            time.monotonic() - t0, 60.0)


def test_criterion_4_surjective_lower_bound():
    t0 = time.monotonic()
    quad = build_quadrature(160, 512, 1 - 1e-6)
    rng = np.random.default_rng(8)
    worst = math.inf
    for desc in ({"kind": "power", "n": 2},
                 {"kind": "blaschke",
                  "zeros": [[0.5, 0.0], [-0.3, 0.0], [0.0, 0.2]]}):
        phi = build_symbol(desc)
        for _ in range(50):
            coeffs = rng.standard_normal(21) + 1j * rng.standard_normal(21)
            coeffs[0] = 0.0
            f = DirichletFunction(coeffs).normalized()
            worst = min(worst, composition_norm(phi, f, quad) / f.norm)
    _report(4, worst >= 1.0 - 1e-6,
            f"min ||C_phi f||/||f|| = {worst:.6f} over 2x50 normalized f",
            time.monotonic() - t0, 60.0)


def test_criterion_5_peak_ratio_limit():
    t0 = time.monotonic()
    phi = build_symbol({"kind": "scaled", "c": 0.5})
    ks = [25, 50, 100, 200, 400]
    rs = peak_ratio_sequence(phi, 1.0, ks)
    decreasing = all(a > b for a, b in zip(rs, rs[1:]))
    roots = {k: r ** (1.0 / k) for k, r in zip(ks, rs)}
    gap = abs(roots[200] - roots[400])
    limit = roots[400]
    # the two analytic candidates: max|f_zeta| = 3/4 and its square 9/16.
    # Laplace asymptotics of the squared-norm ratio select the square; the
    # measured value is frozen as a regression constant.
    closer_to_square = abs(limit - 9 / 16) < abs(limit - 3 / 4)
    frozen = abs(limit - 0.5620) < 5e-3
    ok = decreasing and gap <= 1e-2 and 0.0 < limit < 1.0 \
        and closer_to_square and frozen
    _report(5, ok,
            f"r_k decreasing={decreasing}; roots k=200: {roots[200]:.6f}, "
            f"k=400: {roots[400]:.6f} (gap {gap:.2e}); limit near 9/16="
            f"{9 / 16:.4f}, not 3/4", time.monotonic() - t0, 120.0)


def test_criterion_6_crescent_example():
    t0 = time.monotonic()
    phi = build_symbol({"kind": "crescent", "tangent_point": [1.0, 0.0],
                        "inner_radius": 0.25})
    boundary = boundary_accumulation_check(phi, Q)
    covs = [coverage_ratio(phi, t, 1.0, Q)[0] for t in (0.9, 0.99, 0.999)]
    monotone = all(a >= b for a, b in zip(covs, covs[1:]))
    res = classify(phi, Q)
    ok = (boundary.passed and monotone and covs[-1] < 0.05
          and res.verdict.label == "not_closed_evidence"
          and res.verdict.branch == "cor26"
          and res.counting.max_n == 1)
    _report(6, ok,
            f"boundary pass={boundary.passed}, coverage {covs[0]:.3f} -> "
            f"{covs[1]:.3f} -> {covs[2]:.3f}, verdict {res.verdict.label} "
            f"via {res.verdict.branch} (max n = {res.counting.max_n})",
            time.monotonic() - t0, 120.0)


def test_criterion_7_coverage_carleson_consistency(corpus_tables):
    t0 = time.monotonic()
    family = default_family(FamilyConfig(monomial_degree_max=20, random_count=30))
    w_quad = build_quadrature(160, 512, 1 - 1e-6)
    failures = []
    for name, (table, stats, expect_closed) in corpus_tables.items():
        phi = build_symbol(dict(
            identity={"kind": "identity"},
            power2={"kind": "power", "n": 2},
            blaschke2={"kind": "blaschke", "zeros": [[0.5, 0], [-0.3, 0]]},
            scaled={"kind": "scaled", "c": 0.5},
            crescent={"kind": "crescent", "tangent_point": [1.0, 0.0],
                      "inner_radius": 0.25})[name])
        tail = tail_functional_sweep(phi, [8], family, w_quad, Q.eps)[8]
        if tail > 1e-6:
            failures.append((name, "tail", tail))
            continue
        b_pass = table["coverage"].delta >= 0.05
        c_pass = table["alpha=1"].delta >= 0.05
        if not (b_pass == c_pass == expect_closed):
            failures.append((name, "b/c", b_pass, c_pass, expect_closed))
    _report(7, not failures,
            f"(b) and (c) agree with the expected status on all 5 symbols"
            f"{'' if not failures else ': ' + repr(failures)}",
            time.monotonic() - t0, 600.0)


def test_criterion_8_alpha_sweep(corpus_tables):
    t0 = time.monotonic()
    failures = []
    for name, (table, _, expect_closed) in corpus_tables.items():
        votes = {mode: est.delta >= 0.05 for mode, est in table.items()}
        if len(set(votes.values())) != 1 or votes["coverage"] != expect_closed:
            failures.append((name, votes))
    _report(8, not failures,
            "delta classification identical across alpha in {1/4, 1/2, 3/4, 1}"
            f"{'' if not failures else ': ' + repr(failures)}",
            time.monotonic() - t0, 600.0)


def test_criterion_9_unbounded_stress():
    t0 = time.monotonic()
    phi = build_symbol({"kind": "atomic_singular"})
    family = default_family(FamilyConfig(monomial_degree_max=10, random_count=10))
    est = boundedness_estimate(phi, family, eps_pair=(1e-2, 1e-3))
    res = classify(phi, Q)
    ok = (est.growth >= 2.0 and est.divergence_suspected
          and res.verdict.label == "unbounded_operator_evidence")
    _report(9, ok,
            f"estimate grew {est.growth:.2f}x from eps=1e-2 to 1e-3; "
            f"verdict {res.verdict.label}", time.monotonic() - t0, 120.0)


def test_criterion_10_determinism(tmp_path):
    t0 = time.monotonic()
    identical = True
    detail = []
    for path in sorted(SCENARIOS.glob("*.json")):
        cfg = load_scenario(path)
        assert cfg.query.seed == 42
        cfg = dataclasses.replace(
            cfg, outputs=dataclasses.replace(cfg.outputs, figures=False))
        a = tmp_path / f"{path.stem}_a"
        b = tmp_path / f"{path.stem}_b"
        run_scenario(cfg, out_dir=a)
        run_scenario(cfg, out_dir=b)
        same = ((a / "report.json").read_bytes() == (b / "report.json").read_bytes()
                and (a / "rings.csv").read_bytes() == (b / "rings.csv").read_bytes())
        identical &= same
        detail.append(f"{path.stem}:{'ok' if same else 'DIFFERS'}")
    _report(10, identical,
            "byte-identical reports at seed 42 for the full scenario suite ("
            + ", ".join(detail) + ")", time.monotonic() - t0, 900.0)
