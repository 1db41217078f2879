"""Preimage sets and the counting functions n_phi, N_phi, tau_phi.

Preimages of a target w are the solutions of phi(z) = w with |z| <= 1 - eps;
the truncation is unavoidable because general symbols (the atomic singular
inner function above all) have preimages accumulating at the unit circle.
Counting is WITH multiplicity: that is what makes the change-of-variables
identity exact, and it agrees with the plain cardinality off the countable
set of critical values.

Three routes coexist:

* closed forms / algebraic root solves for the concrete kinds (polynomial,
  Moebius, Blaschke, crescent-inverse, atomic log-branch enumeration);
* a generic argument-principle path: winding numbers over circles, and an
  adaptive sector-subdivision search with Newton polishing;
* batched vectorized counting for the Monte Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_NUMERICS, NumericsConfig
from .errors import ContourError, ConvergenceError, ValidationError
from .symbols import (
    AtomicSingular,
    Blaschke,
    Chain,
    Crescent,
    Identity,
    Mobius,
    Power,
    Scaled,
    SymbolMap,
)

__all__ = [
    "CountingSample",
    "winding_count",
    "preimages",
    "counting_sample",
    "in_image",
    "in_image_batch",
    "count_batch",
    "nevanlinna_batch",
    "tau_batch",
    "image_radial_features",
    "polynomial_coeffs",
]

_EPS_MIN, _EPS_MAX = 1e-6, 1e-1


def _check_eps(eps: float) -> float:
    if not _EPS_MIN <= eps <= _EPS_MAX:
        raise ValidationError(f"truncation eps must lie in [1e-6, 1e-1], got {eps}")
    return float(eps)


@dataclass(frozen=True)
class CountingSample:
    """Preimage data of one target: n = sum of multiplicities within the
    truncation radius, nevanlinna = sum mult * log(1/|z_j|), tau = N / log(1/|w|).

    ``tail_bound`` bounds the Nevanlinna mass of preimages beyond the
    truncation radius when the symbol admits an exact accounting (None when
    unknown).
    """

    target: complex
    preimages: tuple
    n: int
    distinct_n: int
    nevanlinna: float
    tau: float
    tau_defined: bool
    truncation: float
    tail_bound: float | None


# ---------------------------------------------------------------------------
# polynomial structure


def polynomial_coeffs(phi: SymbolMap) -> np.ndarray | None:
    """Ascending coefficients when phi is a polynomial map, else None."""
    if isinstance(phi, Identity):
        return np.array([0.0, 1.0], dtype=complex)
    if isinstance(phi, Scaled):
        return np.array([0.0, phi.c], dtype=complex)
    if isinstance(phi, Power):
        c = np.zeros(phi.n + 1, dtype=complex)
        c[-1] = 1.0
        return c
    if isinstance(phi, Chain):
        parts = [polynomial_coeffs(p) for p in phi.parts]
        if any(p is None for p in parts):
            return None
        poly = np.polynomial.Polynomial(parts[0])
        for c in parts[1:]:
            poly = np.polynomial.Polynomial(c)(poly)
        return np.asarray(poly.coef, dtype=complex)
    return None


def _rational_coeffs(phi: SymbolMap):
    """(P, Q) ascending with phi = P/Q, for Moebius and Blaschke kinds."""
    if isinstance(phi, Mobius):
        rot = np.exp(1j * phi.phase)
        p = rot * np.array([phi.a, -1.0], dtype=complex)
        q = np.array([1.0, -np.conj(phi.a)], dtype=complex)
        return p, q
    if isinstance(phi, Blaschke):
        return phi.rational_coeffs()
    return None


# ---------------------------------------------------------------------------
# winding numbers


def _loop_winding(values: np.ndarray, w: complex):
    """(winding float, min |values - w|, max increment) along a closed loop."""
    g = values - w
    mn = float(np.min(np.abs(g)))
    if mn == 0.0:
        return math.nan, mn, math.pi
    inc = np.angle(np.roll(g, -1) / g)
    return float(inc.sum() / (2.0 * np.pi)), mn, float(np.max(np.abs(inc)))


def _circle_points(radius: float, m: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(m) / m
    return radius * np.exp(1j * theta)


def winding_count(phi: SymbolMap, w: complex, circle_radius: float,
                  cfg: NumericsConfig = DEFAULT_NUMERICS) -> int:
    """Number of solutions of phi(z) = w with |z| < circle_radius.

    Computed as the total argument change of phi - w along the circle; the
    radius is nudged when the contour passes too close to a preimage.
    """
    if not 0.0 < circle_radius < 1.0:
        raise ValidationError("circle_radius must lie in (0, 1)")
    w = complex(w)
    # preimages sitting on (or within sampling distance of) the contour make
    # the argument increments unresolvable; nudge the radius outward/inward
    # by growing steps until the increments settle
    shifts = [0.0]
    step = 2e-6
    while len(shifts) < cfg.contour_nudge_attempts:
        shifts += [step, -step]
        step *= 10.0
    for shift in shifts[:cfg.contour_nudge_attempts]:
        radius = circle_radius * (1.0 + shift)
        if not 0.0 < radius < 1.0:
            continue
        m = 512
        while m <= 1 << 17:
            total, mn, max_inc = _loop_winding(phi(_circle_points(radius, m)), w)
            if mn == 0.0:
                break  # sampled a preimage exactly: nudge the radius
            if max_inc < 1.5 and abs(total - round(total)) < 1e-3:
                return int(round(total))
            m *= 2
        else:
            continue
    raise ContourError(
        f"contour through zero: no clean circle near radius {circle_radius} for w={w}"
    )


def _winding_batch(phi: SymbolMap, ws: np.ndarray, radius: float,
                   cfg: NumericsConfig = DEFAULT_NUMERICS,
                   m: int = 8192) -> np.ndarray:
    """Winding counts of phi - w along one shared circle, vectorized over w."""
    vals = np.asarray(phi(_circle_points(radius, m)))
    out = np.empty(len(ws), dtype=np.int64)
    chunk = max(1, (1 << 22) // m)
    for lo in range(0, len(ws), chunk):
        wchunk = ws[lo:lo + chunk]
        g = vals[None, :] - wchunk[:, None]
        inc = np.angle(np.roll(g, -1, axis=1) / g)
        totals = inc.sum(axis=1) / (2.0 * np.pi)
        mins = np.min(np.abs(g), axis=1)
        maxinc = np.max(np.abs(inc), axis=1)
        counts = np.rint(totals).astype(np.int64)
        bad = ~np.isfinite(totals) | (mins == 0.0) | (maxinc >= 1.5) \
            | (np.abs(totals - counts) > 1e-3)
        for idx in np.nonzero(bad)[0]:
            counts[idx] = winding_count(phi, complex(wchunk[idx]), radius, cfg)
        out[lo:lo + chunk] = counts
    return out


# ---------------------------------------------------------------------------
# batched counting per kind


def _blaschke_roots_batch(p: np.ndarray, q: np.ndarray, ws: np.ndarray) -> np.ndarray:
    """Roots of P(z) - w Q(z) for each w; shape (len(ws), d)."""
    d = len(p) - 1
    ws = np.asarray(ws, dtype=complex)
    coeffs = p[None, :] - ws[:, None] * q[None, :]
    lead = coeffs[:, -1]
    # |w| < 1 and |prod a_j| < 1 keep the leading coefficient away from zero
    monic = coeffs / lead[:, None]
    if d == 1:
        return -monic[:, :1]
    if d == 2:
        b = monic[:, 1]
        c = monic[:, 0]
        disc = np.sqrt(b * b - 4.0 * c)
        flip = np.abs(b - disc) > np.abs(b + disc)
        disc = np.where(flip, -disc, disc)
        r1 = -(b + disc) / 2.0
        r1 = np.where(r1 == 0, -b / 2.0, r1)
        r2 = np.where(r1 != 0, c / np.where(r1 != 0, r1, 1.0), -b - r1)
        return np.stack([r1, r2], axis=1)
    comp = np.zeros((len(ws), d, d), dtype=complex)
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1.0
    comp[:, :, -1] = -monic[:, :d]
    out = np.empty((len(ws), d), dtype=complex)
    chunk = 1 << 14
    for lo in range(0, len(ws), chunk):
        out[lo:lo + chunk] = np.linalg.eigvals(comp[lo:lo + chunk])
    return out


def _atomic_z2_batch(ws: np.ndarray, eps: float, pad: float = 1.0):
    """|z_k|^2 of the log-branch preimages, masked to |z_k| <= 1 - eps.

    exp((z+1)/(z-1)) = w solves to z = (1 + L_k)/(L_k - 1) with
    L_k = log|w| + i(Arg w + 2 pi k); then |z_k|^2 = 1 + 4 log|w| / |L_k - 1|^2.
    Returns (z2 array (B, K), mask, L_k imag grid) chunk-friendly.
    """
    aw = np.abs(ws)
    th0 = np.angle(ws)
    la = np.where(aw > 0, np.log(np.maximum(aw, 1e-300)), -np.inf)
    x = la - 1.0
    cutoff = eps * (2.0 - eps)
    # widest |Im(L-1)| that can still satisfy |z| <= 1 - eps, padded
    with np.errstate(invalid="ignore"):
        ymax = np.sqrt(np.maximum(4.0 * (-la) / cutoff - x * x, 0.0))
    kmax = int(np.ceil((np.max(ymax, initial=0.0) * pad + np.pi) / (2.0 * np.pi)))
    ks = np.arange(-kmax, kmax + 1)
    y = th0[:, None] + 2.0 * np.pi * ks[None, :]
    mod2 = x[:, None] ** 2 + y * y
    z2 = 1.0 + 4.0 * la[:, None] / mod2
    mask = (z2 <= (1.0 - eps) ** 2) & (aw[:, None] > 0)
    return z2, mask, y


def _atomic_count(ws: np.ndarray, eps: float) -> np.ndarray:
    out = np.zeros(len(ws), dtype=np.int64)
    chunk = 4096
    for lo in range(0, len(ws), chunk):
        _, mask, _ = _atomic_z2_batch(ws[lo:lo + chunk], eps)
        out[lo:lo + chunk] = mask.sum(axis=1)
    return out


def _atomic_nevanlinna(ws: np.ndarray, eps: float):
    n = np.zeros(len(ws), dtype=np.int64)
    nev = np.zeros(len(ws))
    chunk = 4096
    for lo in range(0, len(ws), chunk):
        z2, mask, _ = _atomic_z2_batch(ws[lo:lo + chunk], eps)
        n[lo:lo + chunk] = mask.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = -0.5 * np.log(np.maximum(z2, 0.0))
        nev[lo:lo + chunk] = np.where(mask, logs, 0.0).sum(axis=1)
    return n, nev


def count_batch(phi: SymbolMap, ws, eps: float) -> np.ndarray:
    """n_phi(w) (with multiplicity, truncated at |z| <= 1 - eps), vectorized."""
    eps = _check_eps(eps)
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    t = 1.0 - eps
    if isinstance(phi, Identity):
        return (np.abs(ws) <= t).astype(np.int64)
    if isinstance(phi, Scaled):
        return (np.abs(ws) <= phi.c * t).astype(np.int64)
    if isinstance(phi, Power):
        return phi.n * (np.abs(ws) <= t**phi.n).astype(np.int64)
    if isinstance(phi, Mobius):
        return (np.abs(phi.inverse(ws)) <= t).astype(np.int64)
    if isinstance(phi, Blaschke):
        p, q = phi.rational_coeffs()
        roots = _blaschke_roots_batch(p, q, ws)
        return (np.abs(roots) <= t).sum(axis=1).astype(np.int64)
    if isinstance(phi, Crescent):
        inside = phi.region.contains(ws)
        z = phi.inverse(np.where(inside, ws, 0.0))
        return (inside & (np.abs(z) <= t)).astype(np.int64)
    if isinstance(phi, AtomicSingular):
        return _atomic_count(ws, eps)
    coeffs = polynomial_coeffs(phi)
    if coeffs is not None:
        roots = _blaschke_roots_batch(coeffs, np.array([1.0 + 0.0j]), ws) \
            if len(coeffs) == 2 else _poly_roots_batch(coeffs, ws)
        return (np.abs(roots) <= t).sum(axis=1).astype(np.int64)
    return _winding_batch(phi, ws, t)


def _poly_roots_batch(coeffs: np.ndarray, ws: np.ndarray) -> np.ndarray:
    """Roots of poly(z) - w for each w (batched companion eigenvalues)."""
    d = len(coeffs) - 1
    shifted = np.tile(coeffs, (len(ws), 1))
    shifted[:, 0] -= ws
    monic = shifted / shifted[:, -1][:, None]
    comp = np.zeros((len(ws), d, d), dtype=complex)
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1.0
    comp[:, :, -1] = -monic[:, :d]
    out = np.empty((len(ws), d), dtype=complex)
    chunk = 1 << 14
    for lo in range(0, len(ws), chunk):
        out[lo:lo + chunk] = np.linalg.eigvals(comp[lo:lo + chunk])
    return out


def nevanlinna_batch(phi: SymbolMap, ws, eps: float):
    """(n, N) arrays: truncated counting and Nevanlinna functions."""
    eps = _check_eps(eps)
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    t = 1.0 - eps
    aw = np.abs(ws)
    with np.errstate(divide="ignore"):
        neglog = -np.log(np.maximum(aw, 1e-300))
    if isinstance(phi, Identity):
        mask = aw <= t
        return mask.astype(np.int64), np.where(mask, neglog, 0.0)
    if isinstance(phi, Scaled):
        mask = aw <= phi.c * t
        return mask.astype(np.int64), np.where(mask, neglog + math.log(phi.c), 0.0)
    if isinstance(phi, Power):
        mask = aw <= t**phi.n
        return phi.n * mask.astype(np.int64), np.where(mask, neglog, 0.0)
    if isinstance(phi, Mobius):
        z = np.asarray(phi.inverse(ws))
        mask = np.abs(z) <= t
        with np.errstate(divide="ignore"):
            val = -np.log(np.maximum(np.abs(z), 1e-300))
        return mask.astype(np.int64), np.where(mask, val, 0.0)
    if isinstance(phi, Blaschke):
        p, q = phi.rational_coeffs()
        roots = _blaschke_roots_batch(p, q, ws)
        mask = np.abs(roots) <= t
        with np.errstate(divide="ignore"):
            logs = -np.log(np.maximum(np.abs(roots), 1e-300))
        return mask.sum(axis=1).astype(np.int64), np.where(mask, logs, 0.0).sum(axis=1)
    if isinstance(phi, Crescent):
        inside = phi.region.contains(ws)
        z = np.asarray(phi.inverse(np.where(inside, ws, 0.0)))
        mask = inside & (np.abs(z) <= t)
        with np.errstate(divide="ignore"):
            val = -np.log(np.maximum(np.abs(z), 1e-300))
        return mask.astype(np.int64), np.where(mask, val, 0.0)
    if isinstance(phi, AtomicSingular):
        return _atomic_nevanlinna(ws, eps)
    n = np.zeros(len(ws), dtype=np.int64)
    nev = np.zeros(len(ws))
    for i, w in enumerate(ws):
        pts = preimages(phi, complex(w), eps)
        n[i] = sum(m for _, m in pts)
        nev[i] = sum(m * math.log(1.0 / abs(z)) for z, m in pts if abs(z) > 0)
    return n, nev


def tau_batch(phi: SymbolMap, ws, eps: float):
    """(n, tau) with tau = N / log(1/|w|); caller excludes w near 0."""
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    n, nev = nevanlinna_batch(phi, ws, eps)
    aw = np.abs(ws)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(aw > 0, nev / -np.log(np.maximum(aw, 1e-300)), 0.0)
    return n, tau


def in_image_batch(phi: SymbolMap, ws, eps: float) -> np.ndarray:
    """Vectorized membership of w in the (truncated) image of phi.

    The crescent kind is overridden by the exact lune test: its conformal
    preimages crowd exponentially close to the circle near the tangency, so
    truncated counting would misreport the region the map actually fills.
    """
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    if isinstance(phi, Crescent):
        return np.asarray(phi.region.contains(ws))
    return count_batch(phi, ws, eps) >= 1


def in_image(phi: SymbolMap, w: complex, eps: float) -> bool:
    return bool(in_image_batch(phi, np.array([w]), eps)[0])


def image_radial_features(phi: SymbolMap, eps: float) -> dict:
    """Radial structure of the truncated image, for quadrature panel splits.

    ``jump_radii`` are exact circles across which n_phi jumps; ``band`` is a
    sampled [min, max] of |phi| on the truncation circle when the jump locus
    is a curve rather than a circle.
    """
    eps = _check_eps(eps)
    t = 1.0 - eps
    if isinstance(phi, Identity):
        return {"jump_radii": [t], "band": None}
    if isinstance(phi, Scaled):
        return {"jump_radii": [phi.c * t], "band": None}
    if isinstance(phi, Power):
        return {"jump_radii": [t**phi.n], "band": None}
    if isinstance(phi, AtomicSingular):
        return {"jump_radii": [], "band": None}
    vals = np.abs(np.asarray(phi(_circle_points(t, 8192))))
    return {"jump_radii": [], "band": (float(vals.min()), float(vals.max()))}


# ---------------------------------------------------------------------------
# full preimage lists


def _newton_polish(phi: SymbolMap, w: complex, z0: complex,
                   cfg: NumericsConfig) -> tuple[complex, float]:
    z = complex(z0)
    res = abs(complex(phi(z)) - w)
    for _ in range(cfg.newton_max_iter):
        if res <= cfg.newton_tol:
            break
        d = complex(phi.deriv(z))
        if d == 0:
            break
        step = (complex(phi(z)) - w) / d
        # halve the step while the residual refuses to drop
        for _ in range(30):
            cand = z - step
            if abs(cand) >= 1.0 - 1e-12:
                step *= 0.5
                continue
            cres = abs(complex(phi(cand)) - w)
            if cres < res:
                z, res = cand, cres
                break
            step *= 0.5
        else:
            break
    return z, res


def _cluster_roots(roots, tol: float = 1e-7):
    """Group a flat root list into (representative, multiplicity) pairs."""
    out: list[list] = []
    for z in sorted(roots, key=lambda u: (u.real, u.imag)):
        for grp in out:
            if abs(grp[0] - z) <= tol:
                grp[1] += 1
                grp[0] = grp[0] + (z - grp[0]) / grp[1]
                break
        else:
            out.append([z, 1])
    return [(complex(z), int(m)) for z, m in out]


def _algebraic_preimages(phi: SymbolMap, w: complex, eps: float,
                         cfg: NumericsConfig, truncate: bool = True):
    """Exact/algebraic preimage routes; None when the kind has no such route."""
    t = 1.0 - eps if truncate else 1.0 - 1e-15
    if isinstance(phi, Identity):
        return [(w, 1)] if abs(w) <= t else []
    if isinstance(phi, Scaled):
        z = w / phi.c
        return [(z, 1)] if abs(z) <= t else []
    if isinstance(phi, Power):
        if w == 0:
            return [(0.0 + 0.0j, phi.n)]
        r = abs(w) ** (1.0 / phi.n)
        if r > t:
            return []
        th = np.angle(w)
        return [
            (r * np.exp(1j * (th + 2.0 * np.pi * j) / phi.n), 1)
            for j in range(phi.n)
        ]
    if isinstance(phi, Mobius):
        z = complex(phi.inverse(w))
        return [(z, 1)] if abs(z) <= t else []
    if isinstance(phi, Crescent):
        if not phi.region.contains(w):
            return []
        z = complex(phi.inverse(w))
        return [(z, 1)] if abs(z) <= t else []
    if isinstance(phi, AtomicSingular):
        if w == 0:
            return []
        z2, mask, y = _atomic_z2_batch(np.array([w]), eps if truncate else 1e-15)
        la = math.log(abs(w))
        x = la - 1.0
        pts = []
        for yk in y[0][mask[0]]:
            lk = complex(la, yk)
            pts.append(((1.0 + lk) / (lk - 1.0), 1))
        return pts
    coeffs = polynomial_coeffs(phi)
    rational = _rational_coeffs(phi)
    if coeffs is None and rational is None:
        return None
    if rational is not None:
        p, q = rational
        shifted = p - w * np.pad(q, (0, len(p) - len(q)))
    else:
        shifted = coeffs.copy()
        shifted[0] -= w
    raw = np.polynomial.polynomial.polyroots(shifted)
    polished = []
    for z in raw:
        if abs(z) > t + 1e-6:
            continue
        zp, res = _newton_polish(phi, w, complex(z), cfg)
        if res <= 1e-10 and abs(zp) <= t + 1e-9:
            polished.append(zp)
    return _cluster_roots(polished)


# --- sector subdivision ----------------------------------------------------


def _cell_loop(cell, m: int) -> np.ndarray:
    if cell[0] == "disk":
        return _circle_points(cell[1], 4 * m)
    _, r0, r1, t0, t1 = cell
    ts = np.linspace(t0, t1, m, endpoint=False)
    rs = np.linspace(r1, r0, m, endpoint=False)
    outer = r1 * np.exp(1j * ts)
    down = rs * np.exp(1j * t1)
    inner = r0 * np.exp(1j * np.linspace(t1, t0, m, endpoint=False))
    up = rs[::-1] * np.exp(1j * t0)
    return np.concatenate([outer, down, inner, up])


def _grow(cell, attempt: int, r_cap: float):
    f = 2e-4 * (attempt + 1)
    if cell[0] == "disk":
        return ("disk", min(cell[1] * (1.0 + f), r_cap))
    _, r0, r1, t0, t1 = cell
    dr = (r1 - r0) * f + 1e-12
    dt = (t1 - t0) * f + 1e-12
    return ("sector", max(r0 - dr, 0.0), min(r1 + dr, r_cap), t0 - dt, t1 + dt)


def _cell_winding(phi, w, cell, cfg, r_cap):
    for attempt in range(cfg.contour_nudge_attempts):
        cur = cell if attempt == 0 else _grow(cell, attempt, r_cap)
        m = 64
        while m <= 4096:
            total, mn, max_inc = _loop_winding(phi(_cell_loop(cur, m)), w)
            if mn == 0.0:
                break
            if max_inc < 1.5 and abs(total - round(total)) < 1e-2:
                return int(round(total)), cur
            m *= 2
        else:
            continue
    raise ContourError(f"contour through zero at cell {cell} for w={w}")


def _split(cell):
    if cell[0] == "disk":
        r = cell[1]
        return [("disk", r / 2.0)] + [
            ("sector", r / 2.0, r, j * np.pi / 2.0, (j + 1) * np.pi / 2.0)
            for j in range(4)
        ]
    _, r0, r1, t0, t1 = cell
    rm, tm = 0.5 * (r0 + r1), 0.5 * (t0 + t1)
    return [
        ("sector", r0, rm, t0, tm), ("sector", r0, rm, tm, t1),
        ("sector", rm, r1, t0, tm), ("sector", rm, r1, tm, t1),
    ]


def _cell_size(cell):
    if cell[0] == "disk":
        return cell[1]
    _, r0, r1, t0, t1 = cell
    return max(r1 - r0, r1 * (t1 - t0))


def _subdivision_preimages(phi: SymbolMap, w: complex, eps: float,
                           cfg: NumericsConfig):
    radius = 1.0 - eps
    r_cap = min(radius * (1.0 + 1e-4), 1.0 - 1e-9)
    total = winding_count(phi, w, radius, cfg)
    if total == 0:
        return []
    stack = [(("disk", radius), 0)]
    raw: list[tuple[complex, int]] = []
    while stack:
        cell, depth = stack.pop()
        if depth > cfg.subdivision_max_depth:
            raise ConvergenceError(f"subdivision exceeded depth 40 at cell {cell}")
        wind, cur = _cell_winding(phi, w, cell, cfg, r_cap)
        if wind == 0:
            continue
        if _cell_size(cur) > 1e-4:
            stack.extend((c, depth + 1) for c in _split(cur))
            continue
        if cur[0] == "disk":
            center = 0.0 + 0.0j
        else:
            _, r0, r1, t0, t1 = cur
            center = 0.5 * (r0 + r1) * np.exp(0.5j * (t0 + t1))
        z, res = _newton_polish(phi, w, center, cfg)
        if res > 1e-10:
            raise ConvergenceError(
                f"Newton failed at cell {cur}: residual {res:.3e}"
            )
        raw.append((z, wind))
    # adjacent expanded cells can claim one root twice; keep the multiset
    # consistent with the global argument-principle count
    merged: list[list] = []
    for z, mult in raw:
        for grp in merged:
            if abs(grp[0] - z) <= 1e-6:
                grp[1] = max(grp[1], mult)
                break
        else:
            merged.append([z, mult])
    roots = [(complex(z), int(m)) for z, m in merged
             if abs(z) <= radius + 1e-9]
    found = sum(m for _, m in roots)
    if found != total:
        raise ConvergenceError(
            f"subdivision found {found} preimages, contour count is {total}"
        )
    return roots


def preimages(phi: SymbolMap, w: complex, eps: float, method: str = "auto",
              cfg: NumericsConfig = DEFAULT_NUMERICS):
    """All (preimage, multiplicity) pairs of w within |z| <= 1 - eps."""
    eps = _check_eps(eps)
    w = complex(w)
    if method == "auto":
        pts = _algebraic_preimages(phi, w, eps, cfg)
        if pts is not None:
            return sorted(pts, key=lambda p: (p[0].real, p[0].imag))
    elif method != "subdivision":
        raise ValidationError(f"unknown preimage method {method!r}")
    return sorted(_subdivision_preimages(phi, w, eps, cfg),
                  key=lambda p: (p[0].real, p[0].imag))


def _tail_bound(phi: SymbolMap, w: complex, eps: float,
                cfg: NumericsConfig) -> float | None:
    """Nevanlinna mass of the preimages excluded by the truncation."""
    if isinstance(phi, AtomicSingular):
        if w == 0:
            return 0.0
        z2, mask, y = _atomic_z2_batch(np.array([w]), eps, pad=16.0)
        la = math.log(abs(w))
        outside = (~mask[0]) & (z2[0] < 1.0)
        tail = float(np.sum(-0.5 * np.log(z2[0][outside])))
        ybig = float(np.max(np.abs(y[0]))) if y.size else 1.0
        # remaining branches: -log|z_k| ~ 2|log|w||/y_k^2, summed past ybig
        tail += 2.0 * abs(la) / (np.pi * ybig)
        return tail
    pts = _algebraic_preimages(phi, w, eps, cfg, truncate=False)
    if pts is None:
        return None
    t = 1.0 - eps
    return float(sum(m * math.log(1.0 / abs(z)) for z, m in pts
                     if abs(z) > t and abs(z) > 0))


def counting_sample(phi: SymbolMap, w: complex, eps: float,
                    method: str = "auto",
                    cfg: NumericsConfig = DEFAULT_NUMERICS) -> CountingSample:
    """Assemble the full counting record of one target."""
    w = complex(w)
    pts = preimages(phi, w, eps, method=method, cfg=cfg)
    n = sum(m for _, m in pts)
    nevanlinna = 0.0
    for z, m in pts:
        nevanlinna += m * (math.inf if z == 0 else math.log(1.0 / abs(z)))
    tau_defined = w != 0 and n > 0 and math.isfinite(nevanlinna)
    tau = nevanlinna / math.log(1.0 / abs(w)) if tau_defined else float("nan")
    if n == 0:
        nevanlinna = 0.0
    return CountingSample(
        target=w,
        preimages=tuple(pts),
        n=n,
        distinct_n=len(pts),
        nevanlinna=nevanlinna,
        tau=tau,
        tau_defined=tau_defined,
        truncation=1.0 - eps,
        tail_bound=_tail_bound(phi, w, eps, cfg),
    )
