"""Configuration dataclasses and strict scenario-file parsing.

Scenario files are JSON (schema-versioned, human-diffable).  Points on the
plane are stored as two-element ``[re, im]`` lists; everything else is plain
scalars.  Parsing is strict: unknown fields are rejected with the offending
path so config typos never pass silently.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, ValidationError

SCHEMA_VERSION = 1

#: hard cap on power-series length for coefficient-backed functions
MAX_DEGREE = 8192


@dataclass(frozen=True)
class NumericsConfig:
    """Shared numeric tolerances and iteration limits."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    boundary_margin: float = 1e-12   # interior ops reject |z| >= 1 - margin
    newton_max_iter: int = 50
    newton_tol: float = 1e-12
    contour_min_separation: float = 1e-8
    contour_nudge_attempts: int = 8
    subdivision_max_depth: int = 40


DEFAULT_NUMERICS = NumericsConfig()


@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss-Legendre (radial) x trapezoid (angular) disk rule parameters."""

    radial_order: int = 160
    angular_order: int = 512
    radial_truncation: float = 1.0 - 1e-6

    def validate(self) -> None:
        if self.radial_order < 4 or self.angular_order < 4:
            raise ValidationError("quadrature orders must be >= 4")
        if not 0.9 < self.radial_truncation < 1.0:
            raise ValidationError(
                f"radial_truncation must lie in (0.9, 1), got {self.radial_truncation}"
            )


@dataclass(frozen=True)
class DensityQuery:
    """Sampling plan for the reverse-Carleson / coverage estimators.

    ``rings`` and ``angles`` describe the z-grid (one entry of ``angles`` per
    ring); the grid concentrates toward the unit circle because every failure
    mode of interest lives at the boundary.  ``eps`` is the preimage-search
    truncation: roots with ``|z| > 1 - eps`` are not counted.
    """

    bergman_radius: float = 1.0
    alpha: float = 1.0
    level: float = 0.5
    rings: tuple[float, ...] = (0.0, 0.5, 0.9, 0.99, 0.999)
    angles: tuple[int, ...] = (1, 64, 128, 256, 512)
    seed: int = 42
    samples_per_disk: int = 1000
    eps: float = 1e-3

    def validate(self) -> None:
        if len(self.rings) == 0:
            raise ValidationError("density grid must contain at least one ring")
        if len(self.angles) != len(self.rings):
            raise ValidationError("angles must list one entry per ring")
        if any(not 0.0 <= t < 1.0 for t in self.rings):
            raise ValidationError("rings must lie in [0, 1)")
        if any(a < 1 for a in self.angles):
            raise ValidationError("each ring needs at least one angle")
        if self.samples_per_disk < 1000:
            raise ValidationError("samples_per_disk must be >= 1000")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("alpha must lie in (0, 1]")
        if self.bergman_radius <= 0.0:
            raise ValidationError("bergman_radius must be positive")
        if self.level <= 0.0:
            raise ValidationError("level must be positive")
        if not 1e-6 <= self.eps <= 1e-1:
            raise ValidationError("eps must lie in [1e-6, 1e-1]")


@dataclass(frozen=True)
class FamilyConfig:
    """Test-family recipe used to lower-estimate unit-sphere suprema."""

    monomial_degree_max: int = 40
    random_count: int = 100
    random_degree: int = 20
    random_seed: int = 7
    peak_ks: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    peak_anchors: int = 4
    # probe anchors stop at 0.95: the default angular order resolves the
    # probe energy there, while 0.99 anchors alias it by several percent
    kernel_radii: tuple[float, ...] = (0.5, 0.9, 0.95)
    kernel_angles: int = 4

    def validate(self) -> None:
        if self.monomial_degree_max < 1:
            raise ValidationError("monomial_degree_max must be >= 1")
        if self.random_degree < 1 or self.random_degree > MAX_DEGREE:
            raise ValidationError("random_degree out of range")
        if any(k < 1 for k in self.peak_ks):
            raise ValidationError("peak exponents must be >= 1")
        if any(not 0.0 < r < 1.0 for r in self.kernel_radii):
            raise ValidationError("kernel_radii must lie in (0, 1)")


@dataclass(frozen=True)
class ClassifyConfig:
    """Thresholds of the closed-range decision procedure.

    delta0 separates "bounded away from zero" coverage from boundary decay;
    delta_min with two extra boundary rings confirms the decay regime.  The
    boundedness divergence probe compares truncations 1-eps for the listed
    eps pair and flags growth by ``divergence_factor`` or more.
    """

    tail_k0: int = 8
    tail_threshold: float = 1e-6
    delta0: float = 0.05
    delta_min: float = 1e-3
    n_bound: int = 64
    divergence_eps: tuple[float, float] = (1e-2, 1e-3)
    divergence_factor: float = 2.0
    refinement_rings: int = 2

    def validate(self) -> None:
        if self.tail_k0 < 1:
            raise ValidationError("tail_k0 must be >= 1")
        if not 0.0 < self.delta_min <= self.delta0:
            raise ValidationError("need 0 < delta_min <= delta0")
        e0, e1 = self.divergence_eps
        if not (0 < e1 < e0 < 1):
            raise ValidationError("divergence_eps must decrease within (0, 1)")


@dataclass(frozen=True)
class OutputFlags:
    report: bool = True
    rings: bool = True
    heatmaps: bool = False
    figures: bool = True

    def validate(self) -> None:
        pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One analysis run: a symbol plus every estimator knob."""

    symbol: dict[str, Any]
    label: str = ""
    schema_version: int = SCHEMA_VERSION
    query: DensityQuery = field(default_factory=DensityQuery)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    family: FamilyConfig = field(default_factory=FamilyConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    outputs: OutputFlags = field(default_factory=OutputFlags)

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported schema_version {self.schema_version}"
            )
        if not isinstance(self.symbol, dict) or "kind" not in self.symbol:
            raise ValidationError("symbol descriptor must carry a 'kind' tag")
        self.query.validate()
        self.quadrature.validate()
        self.family.validate()
        self.classify.validate()

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "label": self.label,
            "symbol": self.symbol,
            "query": dataclasses.asdict(self.query) | {
                "rings": list(self.query.rings),
                "angles": list(self.query.angles),
            },
            "quadrature": dataclasses.asdict(self.quadrature),
            "family": dataclasses.asdict(self.family) | {
                "peak_ks": list(self.family.peak_ks),
                "kernel_radii": list(self.family.kernel_radii),
            },
            "classify": dataclasses.asdict(self.classify) | {
                "divergence_eps": list(self.classify.divergence_eps),
            },
            "outputs": dataclasses.asdict(self.outputs),
        }


def _build_section(cls, data: dict, path: str, listy: dict[str, type] | None = None):
    """Instantiate a config dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", path)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}", path)
    kwargs = dict(data)
    for key, conv in (listy or {}).items():
        if key in kwargs:
            kwargs[key] = tuple(conv(v) for v in kwargs[key])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc), path) from exc


def scenario_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    known = {
        "schema_version", "label", "symbol", "query", "quadrature",
        "family", "classify", "outputs",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    if "symbol" not in data:
        raise ConfigError("missing required field", "symbol")
    cfg = ScenarioConfig(
        symbol=data["symbol"],
        label=data.get("label", ""),
        schema_version=data.get("schema_version", SCHEMA_VERSION),
        query=_build_section(
            DensityQuery, data.get("query", {}), "query",
            {"rings": float, "angles": int},
        ),
        quadrature=_build_section(
            QuadratureConfig, data.get("quadrature", {}), "quadrature"
        ),
        family=_build_section(
            FamilyConfig, data.get("family", {}), "family",
            {"peak_ks": int, "kernel_radii": float},
        ),
        classify=_build_section(
            ClassifyConfig, data.get("classify", {}), "classify",
            {"divergence_eps": float},
        ),
        outputs=_build_section(OutputFlags, data.get("outputs", {}), "outputs"),
    )
    try:
        cfg.validate()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return scenario_from_dict(data)


def save_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
