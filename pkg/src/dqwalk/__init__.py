"""Forward dual quantization of inhomogeneous Bernoulli random walks.

The walk ``X = sum_i alpha_i Z_i`` is approximated layer by layer with a
stationary two-point splitting onto Delaunay segments of per-layer grids.
Call prices, CDO tranche losses and sensitivities are read off the
resulting discrete law.
"""

from dqwalk.errors import (
    ConfigError,
    ConvergenceError,
    DQError,
    NumericalError,
    OracleUnavailableError,
    PropagationError,
)
from dqwalk.walk import (
    AtomicDistribution,
    ScenarioConfig,
    WalkSpec,
    generate_scenario,
    restrict_walk,
    walk_moments,
)
from dqwalk.grids import (
    DualGrid,
    GridCache,
    PrimalGrid,
    dualize_midpoints,
    layer_grid,
    optimal_normal_primal,
)
from dqwalk.dualquant import Split, local_distortion, locate_segment, split
from dqwalk.propagate import (
    PropagationConfig,
    PropagationResult,
    aggregate_increments,
    propagate_layer,
    propagate_walk,
)
from dqwalk.pricing import (
    PriceTable,
    call_price,
    price_table,
    romberg_price,
    smoothed_call_price,
)
from dqwalk.oracles import (
    LatticeLaw,
    brute_force_law,
    gaussian_baseline,
    lattice_tree_law,
    poisson_baseline,
)
from dqwalk.greeks import (
    GreeksReport,
    dprice_dalpha,
    dprice_dp,
    greeks_report,
    skip_layer_laws,
)
from dqwalk.cdo import (
    PortfolioSpec,
    TrancheSpec,
    conditional_walk,
    fair_spread,
    gaussian_copula,
    tranche_expected_loss,
)

__version__ = "0.1.0"
