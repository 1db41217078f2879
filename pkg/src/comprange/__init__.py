"""Numerical closed-range analysis for composition operators on the
Dirichlet space: disk geometry, counting functions, reverse-Carleson density
estimation, and a scenario-driven classifier."""

from .carleson import (
    ClassifyResult,
    DeltaEstimate,
    Verdict,
    boundary_accumulation_check,
    classify,
    coverage_ratio,
    delta_infimum,
    delta_table,
    gc_density,
    reverse_carleson_ratio,
)
from .config import (
    ClassifyConfig,
    DensityQuery,
    FamilyConfig,
    NumericsConfig,
    QuadratureConfig,
    ScenarioConfig,
    load_scenario,
    scenario_from_dict,
)
from .counting import (
    CountingSample,
    count_batch,
    counting_sample,
    in_image,
    preimages,
    winding_count,
)
from .dirichlet import (
    BergmanProbe,
    DirichletFunction,
    DiskQuadrature,
    PeakFunction,
    TestFamily,
    boundedness_estimate,
    build_quadrature,
    change_of_variables_residual,
    composition_norm,
    default_family,
    dirichlet_kernel,
    dirichlet_norm,
    inner_product,
    kernel_reproduce_check,
    peak_function,
    peak_ratio_sequence,
    tail_functional,
)
from .geometry import (
    BergmanDisk,
    CarlesonBox,
    bergman_disk,
    bergman_distance,
    carleson_box_area,
    disk_area,
    eta_from_radius,
    pseudo_hyperbolic_distance,
    radius_from_eta,
)
from .report import RunReport, emit_heatmap, run_scenario
from .symbols import (
    CrescentRegion,
    SymbolMap,
    build_symbol,
    crescent_map,
    eval_with_derivative,
    verify_self_map,
)
from .verify import verify_suite

__version__ = "0.1.0"
