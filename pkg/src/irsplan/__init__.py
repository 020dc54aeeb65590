"""Max-min throughput planning for IRS-assisted single-cell networks.

The package plans ring-based placements for passive reflecting surfaces
around a single access point, splits a frame energy budget so every service
region sustains the same guaranteed throughput, and certifies the analytical
chain (moment matching, Gamma tail fit, required-power inversion) with a
counter-based Monte Carlo harness.

Layout:

* :mod:`irsplan.numerics`   -- regularized incomplete gamma + inverse, quadrature
* :mod:`irsplan.channel`    -- mean gains, composite fading moments, NOP, power
* :mod:`irsplan.geometry`   -- cell partition, sector mapping, plan validation
* :mod:`irsplan.powerctl`   -- region energy coefficients and equalization
* :mod:`irsplan.planner`    -- coverage study, exhaustive search, fast heuristic
* :mod:`irsplan.simulation` -- topology + fading Monte Carlo certification
* :mod:`irsplan.cli`        -- reproducible experiment artifacts

The element-level fading kernel has a compiled backend with a pure-numpy
fallback chosen at import (see ``irsplan._kernels.BACKEND``).
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .channel import (CompositeChannelStats, IrsSpec, LinkGeometry, MeanGains,
                      OutageSpec, RadioConfig, composite_stats,
                      mean_gain_direct, mean_gains_irs, nop_direct, nop_irs,
                      required_power_irs)
from .geometry import (CellConfig, PlanViolation, RingPlan, UeLocation,
                       coverage_area_accounting, locate_ue, make_ring_plan,
                       mean_ues_per_sector, sector_area, validate_plan)
from .numerics import (Tolerance, TailQuantile, get_tail_quantile,
                       integrate_polar_sector, integrate_radial,
                       inv_reg_upper_gamma, reg_upper_gamma)
from .planner import (CoverageResult, PlanInfeasibleError, PlanResult,
                      SearchGrid, algorithm1, coverage_range, line_search)
from .powerctl import (PowerAllocation, RegionEnergyCoefficient,
                       ThroughputReport, benchmark_cipc,
                       benchmark_equal_power, benchmark_irs_equal_power,
                       benchmark_irs_mean_cipc, cipc_power, equalize_power,
                       irs_region_coefficient)
from .simulation import (McConfig, McEstimate, Topology, empirical_nop,
                         sample_topology, validate_plan_mc)

__all__ = [
    "__version__", "KERNEL_BACKEND",
    "CompositeChannelStats", "IrsSpec", "LinkGeometry", "MeanGains",
    "OutageSpec", "RadioConfig", "composite_stats", "mean_gain_direct",
    "mean_gains_irs", "nop_direct", "nop_irs", "required_power_irs",
    "CellConfig", "PlanViolation", "RingPlan", "UeLocation",
    "coverage_area_accounting", "locate_ue", "make_ring_plan",
    "mean_ues_per_sector", "sector_area", "validate_plan",
    "Tolerance", "TailQuantile", "get_tail_quantile",
    "integrate_polar_sector", "integrate_radial", "inv_reg_upper_gamma",
    "reg_upper_gamma",
    "CoverageResult", "PlanInfeasibleError", "PlanResult", "SearchGrid",
    "algorithm1", "coverage_range", "line_search",
    "PowerAllocation", "RegionEnergyCoefficient", "ThroughputReport",
    "benchmark_cipc", "benchmark_equal_power", "benchmark_irs_equal_power",
    "benchmark_irs_mean_cipc", "cipc_power", "equalize_power",
    "irs_region_coefficient",
    "McConfig", "McEstimate", "Topology", "empirical_nop", "sample_topology",
    "validate_plan_mc",
]
