"""Module-invariant checks, tagged and runnable as a suite.

Each check is a plain function returning (passed, value, detail); the CLI
``verify`` verb and the pytest suite both call through this registry, so the
invariants live in exactly one place.  All randomness is seeded: two runs of
the same tag set produce identical summaries.
"""

from __future__ import annotations

import math

import numpy as np

from .carleson import box_delta_infimum, delta_table
from .config import DensityQuery
from .counting import (
    count_batch,
    in_image_batch,
    preimages,
)
from .dirichlet import (
    BergmanProbe,
    DirichletFunction,
    build_quadrature,
    change_of_variables_residual,
    composition_norm,
    pushforward_integrals,
)
from .geometry import (
    bergman_disk,
    carleson_box_area,
    CarlesonBox,
    disk_area,
    eta_from_radius,
    lens_area,
    pseudo_hyperbolic_distance,
    radius_from_eta,
)
from .symbols import (
    Blaschke,
    Chain,
    Crescent,
    Identity,
    Mobius,
    Power,
    Scaled,
    build_symbol,
    finite_difference_check,
    verify_self_map,
)

_REGISTRY: list[tuple[str, str]] = []

# frozen during development: area(D(z,1))/(1-|z|^2)^2 over |z| <= 0.999
AREA_RATIO_BRACKET = (1.8, 10.5)
# frozen: quadrature of int |k_z|^2 dA against the exact value pi, |z| <= 0.99
# (the high end is angular aliasing of the boundary-peaked integrand)
KZ_RATIO_BRACKET = (0.97, 1.03)


def check(name: str, tag: str):
    def wrap(fn):
        fn.check_name = name
        fn.check_tag = tag
        _REGISTRY.append((name, tag))
        globals()[f"check_{name}"] = fn
        return fn
    return wrap


def _rand_points(rng, n, rmax=0.95):
    return rmax * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


# ---------------------------------------------------------------------------
# geometry


@check("mobius_invariance", "geometry")
def _mobius_invariance():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        a, z, w = _rand_points(rng, 3, 0.9)
        psi = Mobius(a)
        lhs = pseudo_hyperbolic_distance(psi(z), psi(w))
        rhs = pseudo_hyperbolic_distance(z, w)
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-10, worst, "max |rho(psi z, psi w) - rho(z, w)|"


@check("metric_axioms", "geometry")
def _metric_axioms():
    rng = np.random.default_rng(43)
    worst = 0.0
    for _ in range(200):
        z, u, w = _rand_points(rng, 3, 0.9)
        if pseudo_hyperbolic_distance(z, w) != pseudo_hyperbolic_distance(w, z):
            return False, 1.0, "symmetry violated"
        a = pseudo_hyperbolic_distance(z, u)
        b = pseudo_hyperbolic_distance(u, w)
        bound = (a + b) / (1.0 + a * b)
        worst = max(worst, pseudo_hyperbolic_distance(z, w) - bound)
    return worst <= 1e-10, worst, "max triangle-bound excess"


@check("disk_realization", "geometry")
def _disk_realization():
    rng = np.random.default_rng(44)
    disagreements = 0
    for _ in range(100):
        z = complex(_rand_points(rng, 1, 0.95)[0])
        r = 0.05 + 2.95 * rng.random()
        d = bergman_disk(z, r)
        eta = eta_from_radius(r)
        w = _rand_points(rng, 10_000, 0.999999)
        rho = np.abs((z - w) / (1.0 - np.conj(z) * w))
        band = (np.abs(np.abs(w - d.euclidean_center) - d.euclidean_radius) < 1e-9) \
            | (np.abs(rho - eta) < 1e-9)
        disagreements += int(np.count_nonzero(
            (d.contains(w) != (rho < eta)) & ~band))
    return disagreements == 0, disagreements, "membership disagreements off the band"


@check("radius_eta_roundtrip", "geometry")
def _radius_eta_roundtrip():
    worst = max(abs(radius_from_eta(eta_from_radius(r)) - r)
                for r in (0.05, 0.37, 1.0, 2.5))
    return worst <= 1e-12, worst, "max round-trip error"


@check("box_area_oracle", "geometry")
def _box_area_oracle():
    worst = 0.0
    for r in (0.05, 0.1, 0.5, 1.0, 1.7, 2.5):
        approx = carleson_box_area(CarlesonBox(1.0 + 0.0j, r))
        exact = lens_area(1.0, 1.0, r)
        worst = max(worst, abs(approx - exact) / exact)
    return worst <= 1e-4, worst, "max relative error vs exact lens area"


@check("box_area_lens_scaling", "geometry")
def _box_area_lens_scaling():
    a1 = carleson_box_area(CarlesonBox(1.0 + 0.0j, 1e-2)) / 1e-4
    a2 = carleson_box_area(CarlesonBox(1.0 + 0.0j, 5e-3)) / 2.5e-5
    drift = abs(a1 - a2) / a1
    return drift <= 0.05, drift, "area/r^2 drift between r=1e-2 and 5e-3"


@check("area_ratio_bracket", "geometry")
def _area_ratio_bracket():
    lo, hi = math.inf, 0.0
    for t in (0.0, 0.5, 0.9, 0.99, 0.999):
        ratio = disk_area(bergman_disk(t, 1.0)) / (1.0 - t * t) ** 2
        lo, hi = min(lo, ratio), max(hi, ratio)
    ok = AREA_RATIO_BRACKET[0] <= lo and hi <= AREA_RATIO_BRACKET[1]
    return ok, (lo, hi), f"frozen bracket {AREA_RATIO_BRACKET}"


# ---------------------------------------------------------------------------
# symbols


@check("chain_rule", "symbols")
def _chain_rule():
    rng = np.random.default_rng(45)
    inner = Power(2)
    outer = Mobius(0.4 + 0.2j, 0.3)
    chain = Chain([inner, outer])
    z = _rand_points(rng, 100, 0.9)
    expected = outer.deriv(inner(z)) * inner.deriv(z)
    worst = float(np.max(np.abs(chain.deriv(z) - expected)
                         / np.maximum(np.abs(expected), 1e-12)))
    return worst <= 1e-8, worst, "chain derivative vs product rule"


@check("blaschke_degree", "symbols")
def _blaschke_degree():
    rng = np.random.default_rng(46)
    phi = Blaschke([0.5, -0.3, 0.2j])
    targets = _rand_points(rng, 50, 0.8)
    n = count_batch(phi, targets, 1e-3)
    bad = int(np.count_nonzero(n != 3))
    return bad == 0, bad, "targets missing the full degree-3 preimage count"


@check("crescent_inverse_identity", "symbols")
def _crescent_inverse_identity():
    rng = np.random.default_rng(47)
    phi = Crescent(1.0, 0.25)
    z = _rand_points(rng, 100, 0.97)
    worst = float(np.max(np.abs(phi.inverse(np.asarray(phi(z))) - z)))
    return worst <= 1e-8, worst, "max |inverse(phi(z)) - z|"


@check("self_map_margins", "symbols")
def _self_map_margins():
    margins = {
        "identity": verify_self_map(Identity()),
        "scaled": verify_self_map(Scaled(0.5)),
        "blaschke": verify_self_map(Blaschke([0.5, -0.3])),
        "crescent": verify_self_map(Crescent(1.0, 0.25)),
    }
    ok = (abs(margins["identity"] - 1e-6) < 1e-8
          and abs(margins["scaled"] - 0.5) < 1e-6
          and 0 < margins["blaschke"] < 1e-5
          and margins["crescent"] > 0)
    return ok, margins, "boundary margins per kind"


@check("derivative_fd", "symbols")
def _derivative_fd():
    worst = 0.0
    for desc in ({"kind": "identity"}, {"kind": "power", "n": 3},
                 {"kind": "mobius", "a": [0.3, 0.1]},
                 {"kind": "blaschke", "zeros": [[0.5, 0], [-0.3, 0]]},
                 {"kind": "crescent"}, {"kind": "atomic_singular"}):
        worst = max(worst, finite_difference_check(build_symbol(desc, validate=False)))
    return worst <= 1e-6, worst, "max FD relative error over kinds"


# ---------------------------------------------------------------------------
# counting


@check("argument_principle", "counting")
def _argument_principle():
    rng = np.random.default_rng(48)
    worst = 0.0
    for phi in (Power(2), Blaschke([0.5, -0.3])):
        targets = 0.1 + 0.7 * rng.random(50)
        angles = 2j * np.pi * rng.random(50)
        for w in targets * np.exp(angles):
            alg = preimages(phi, complex(w), 0.05)
            sub = preimages(phi, complex(w), 0.05, method="subdivision")
            if sum(m for _, m in alg) != sum(m for _, m in sub):
                return False, w, "multiset sizes differ"
            for (za, _), (zs, _) in zip(alg, sub):
                worst = max(worst, abs(za - zs))
    return worst <= 1e-10, worst, "max root gap, subdivision vs algebraic"


@check("pushforward_change_of_variables", "counting")
def _pushforward_change_of_variables():
    # For these symbols n_phi is a.e. constant (= degree), so the w-side
    # integral has the closed form d * pi * sum n |a_n|^2 over the full disk.
    quad = build_quadrature(160, 512, 1.0 - 1e-8)
    f = DirichletFunction([0.0, 0.5, 0.2j, 0.1], label="f")
    exact_energy = math.pi * sum(
        n * abs(c) ** 2 for n, c in enumerate(f.coefficients) if n)
    worst = 0.0
    for phi, deg in ((Identity(), 1), (Power(2), 2), (Blaschke([0.5, -0.3]), 2)):
        lhs = pushforward_integrals(phi, [f], quad)[0]
        worst = max(worst, abs(lhs - deg * exact_energy) / (deg * exact_energy))
    return worst <= 1e-5, worst, "pushforward vs n == degree closed form"


@check("crescent_region_agreement", "counting")
def _crescent_region_agreement():
    rng = np.random.default_rng(49)
    phi = Crescent(1.0, 0.25)
    w = _rand_points(rng, 10_000, 0.999999)
    member = in_image_batch(phi, w, 1e-3)
    exact = phi.region.contains(w)
    off_band = phi.region.contains(w, band=1e-6) | ~phi.region.contains(w, band=-1e-6)
    bad = int(np.count_nonzero((member != exact) & off_band))
    return bad == 0, bad, "in_image vs exact lune membership off a 1e-6 band"


@check("count_monotone_in_eps", "counting")
def _count_monotone_in_eps():
    rng = np.random.default_rng(50)
    w = _rand_points(rng, 200, 0.95)
    bad = 0
    for phi in (Identity(), Scaled(0.5), Power(3), Blaschke([0.5, -0.3]),
                Crescent(1.0, 0.25), build_symbol({"kind": "atomic_singular"})):
        prev = None
        for eps in (1e-1, 1e-2, 1e-3, 1e-4):
            n = count_batch(phi, w, eps)
            if prev is not None and np.any(n < prev):
                bad += 1
            prev = n
    return bad == 0, bad, "kinds violating n monotonicity as eps shrinks"


# ---------------------------------------------------------------------------
# dirichlet


@check("parseval", "dirichlet")
def _parseval():
    rng = np.random.default_rng(51)
    worst = 0.0
    for _ in range(20):
        c = rng.standard_normal(21) + 1j * rng.standard_normal(21)
        coeffs = np.array(
            [c[0]] + [c[n] / math.sqrt(math.pi * n) for n in range(1, 21)])
        f = DirichletFunction(coeffs)
        worst = max(worst, abs(f.norm**2 - float(np.sum(np.abs(c) ** 2)))
                    / float(np.sum(np.abs(c) ** 2)))
    return worst <= 1e-8, worst, "norm^2 vs sum |c_n|^2 on the e_n basis"


@check("surjective_lower_bound", "dirichlet")
def _surjective_lower_bound():
    rng = np.random.default_rng(52)
    quad = build_quadrature(120, 256, 1.0 - 1e-6)
    worst = math.inf
    for phi in (Power(2), Blaschke([0.5, -0.3, 0.2j])):
        for _ in range(25):
            coeffs = rng.standard_normal(13) + 1j * rng.standard_normal(13)
            coeffs[0] = 0.0
            f = DirichletFunction(coeffs).normalized()
            worst = min(worst, composition_norm(phi, f, quad) / f.norm)
    return worst >= 1.0 - 1e-6, worst, "min ||C_phi f|| / ||f|| over surjective symbols"


@check("kz_normalization", "dirichlet")
def _kz_normalization():
    quad = build_quadrature(160, 512, 1.0 - 1e-6)
    lo, hi = math.inf, 0.0
    for t in (0.0, 0.5, 0.9, 0.99):
        probe = BergmanProbe(t, normalize=False)
        val = float(np.real(quad.integrate(np.abs(probe(quad.nodes)) ** 2)))
        ratio = val / math.pi
        lo, hi = min(lo, ratio), max(hi, ratio)
    ok = KZ_RATIO_BRACKET[0] <= lo and hi <= KZ_RATIO_BRACKET[1]
    return ok, (lo, hi), f"int |k_z|^2 dA / pi within frozen {KZ_RATIO_BRACKET}"


@check("quadrature_exactness", "dirichlet")
def _quadrature_exactness():
    quad = build_quadrature(24, 64, 0.97)
    t = quad.radial_truncation
    worst = 0.0
    for a in range(0, 23):
        exact = math.pi * t ** (2 * a + 2) / (a + 1)
        val = quad.integrate(quad.nodes**a * np.conj(quad.nodes) ** a)
        worst = max(worst, abs(val - exact) / exact)
    off = abs(quad.integrate(quad.nodes**2 * np.conj(quad.nodes)))
    return worst <= 1e-10 and off <= 1e-12, worst, "monomial moments on the truncated disk"


# ---------------------------------------------------------------------------
# change of variables


@check("changevar_matrix", "changevar")
def _changevar_matrix():
    rng = np.random.default_rng(53)
    rand8 = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    rand8[0] = 0.0
    funcs = [
        DirichletFunction([0, 1], label="z"),
        DirichletFunction([0, 0, 1], label="z^2"),
        DirichletFunction([0, 0, 0, 1.0 / math.sqrt(3 * math.pi)], label="e_3"),
        DirichletFunction(rand8, label="rand8").normalized(),
    ]
    symbols = [Identity(), Power(2), Blaschke([0.5, -0.3]), Scaled(0.5)]
    worst = 0.0
    for phi in symbols:
        for f in funcs:
            worst = max(worst, change_of_variables_residual(phi, f))
    return worst <= 1e-4, worst, "max residual over the symbol x function matrix"


# ---------------------------------------------------------------------------
# carleson


@check("alpha_dominance", "carleson")
def _alpha_dominance():
    # shared samples make n^1 >= n^alpha >= 1_{image} exact per draw
    q = DensityQuery()
    rng = np.random.default_rng(54)
    worst = 0.0
    for phi in (Identity(), Power(2), Blaschke([0.5, -0.3]), Scaled(0.5),
                Mobius(0.3 + 0.2j)):
        for t in (0.0, 0.5, 0.9):
            disk = bergman_disk(t, 1.0)
            s = disk.sample(rng, 2000)
            n = count_batch(phi, s, q.eps).astype(float)
            prev = None
            for alpha in (0.25, 0.5, 0.75, 1.0):
                val = float(np.mean(np.where(n > 0, n**alpha, 0.0)))
                cov = float(np.mean(n > 0))
                worst = max(worst, cov - val)
                if prev is not None:
                    worst = max(worst, prev - val)
                prev = val
    return worst <= 1e-12, worst, "max dominance violation on shared samples"


_CORPUS = {
    "identity": ({"kind": "identity"}, True),
    "power2": ({"kind": "power", "n": 2}, True),
    "blaschke2": ({"kind": "blaschke", "zeros": [[0.5, 0], [-0.3, 0]]}, True),
    "scaled": ({"kind": "scaled", "c": 0.5}, False),
    "crescent": ({"kind": "crescent", "tangent_point": [1.0, 0.0],
                  "inner_radius": 0.25}, False),
}


def corpus_delta_tables(q: DensityQuery | None = None,
                        alphas=(0.25, 0.5, 0.75, 1.0)):
    """Shared-sample delta tables for the five-symbol test corpus."""
    q = q or DensityQuery()
    out = {}
    for name, (desc, expect_closed) in _CORPUS.items():
        table, stats = delta_table(build_symbol(desc), q.bergman_radius,
                                   alphas, q)
        out[name] = (table, stats, expect_closed)
    return out


@check("prop22_alpha_consistency", "carleson")
def _prop22_alpha_consistency():
    q = DensityQuery()
    bad = []
    for name, (table, _, expect_closed) in corpus_delta_tables(q).items():
        votes = {mode: est.delta >= 0.05 for mode, est in table.items()}
        if len(set(votes.values())) != 1 or votes["coverage"] != expect_closed:
            bad.append((name, votes))
    return not bad, bad, "alpha-sweep classification must agree per symbol"


@check("box_disk_equivalence", "carleson")
def _box_disk_equivalence():
    q = DensityQuery()
    bad = []
    for name, (desc, expect_closed) in _CORPUS.items():
        phi = build_symbol(desc)
        box_pass = box_delta_infimum(phi, 1.0, q, zeta_count=8) >= 0.05
        if box_pass != expect_closed:
            bad.append((name, box_pass))
    return not bad, bad, "box-based reverse Carleson must match the disk form"


@check("seeded_determinism", "carleson")
def _seeded_determinism():
    from .carleson import delta_infimum
    q = DensityQuery(rings=(0.0, 0.9), angles=(1, 32))
    phi = Blaschke([0.5, -0.3])
    a = delta_infimum(phi, 1.0, 0.5, q)
    b = delta_infimum(phi, 1.0, 0.5, q)
    same = (a.delta == b.delta and a.argmin_z == b.argmin_z
            and a.ring_table() == b.ring_table())
    return same, a.delta, "bit-identical DeltaEstimate across reruns"


# ---------------------------------------------------------------------------
# runner


ALL_TAGS = ("geometry", "symbols", "counting", "dirichlet", "changevar", "carleson")


def verify_suite(tags=("all",)) -> dict:
    """Run the registered checks for the requested tags; summary is stable."""
    tags = set(tags)
    if "all" in tags:
        tags = set(ALL_TAGS)
    unknown = tags - set(ALL_TAGS)
    if unknown:
        raise ValueError(f"unknown tags: {sorted(unknown)}")
    checks = []
    for name, tag in _REGISTRY:
        if tag not in tags:
            continue
        fn = globals()[f"check_{name}"]
        try:
            passed, value, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, value, detail = False, repr(exc), "check raised"
        checks.append({
            "name": name,
            "tag": tag,
            "passed": bool(passed),
            "value": repr(value),
            "detail": detail,
        })
    return {
        "tags": sorted(tags),
        "passed": sum(c["passed"] for c in checks),
        "failed": sum(not c["passed"] for c in checks),
        "checks": checks,
    }
