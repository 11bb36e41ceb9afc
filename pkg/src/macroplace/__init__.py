"""Deterministic FPGA macro placement engine.

Pipeline: cascade merging, electrostatics-based global placement with
region clamping, three-phase macro legalization via min-cost matching,
plus a legality checker, HPWL evaluation, and contest scoring.
"""

from .model import (
    CascadeShape,
    Design,
    FpgaLayout,
    InfeasibleRegionError,
    Instance,
    Net,
    Pin,
    Placement,
    PlacementState,
    Region,
    ResourceType,
    SiteType,
    ValidationError,
    expand_placement,
    merge_cascades,
    region_clamp,
)
from .legality import LegalityReport, check_legality
from .wirelength import WlParams, hpwl, wa_gradient, wa_wirelength
from .density import ElectroSystem, bin_density, density_gradient, overflow, solve_poisson
from .gplace import GpConfig, GpTrace, gp_step, init_placement, run_global_placement
from .mcf import AssignmentProblem, InfeasibleAssignmentError, assignment_oracle, solve_assignment
from .legalize import InfeasibleLegalizationError, arc_cost, legalize
from .scoring import design_score, init_routing_score, runtime_score, summarize, weighted_final
from .bench_gen import generate_benchmark

__version__ = "0.1.0"
