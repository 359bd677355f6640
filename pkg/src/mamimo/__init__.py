"""Multi-cell massive MIMO pilot assignment and power control simulator.

The package evaluates UL/DL SINR and capacity statistics of a 7-cell
hexagonal massive MIMO network over Monte-Carlo user drops, with pilot
assignment optimized per cell (exhaustive, heuristic or greedy) and an
optional distributed target-SINR power control stage.
"""

__version__ = "0.1.0"

from .campaign import (
    CampaignConfig,
    DropResult,
    RateStatistics,
    aggregate_statistics,
    drop_seed_sequence,
    empirical_cdf,
    likely_rate,
    run_campaign,
    run_drop,
)
from .errors import (
    ConfigError,
    DegenerateDistance,
    InsufficientSamples,
    NoInterference,
    SimulationError,
    TooManyPilots,
    UnsupportedTopology,
    ZeroSinr,
)
from .geometry import (
    NetworkLayout,
    UserDrop,
    build_hex_layout,
    compute_large_scale,
    drop_users,
    hexagon_contains,
)
from .linkmodel import (
    PowerAllocation,
    ScenarioConfig,
    alpha_sq,
    dl_sinr_asym,
    dl_sinr_finite,
    identity_assignment,
    is_valid_assignment,
    link_rate,
    network_sinrs,
    scenario_from_snr_db,
    total_capacity,
    ul_sinr_asym,
    ul_sinr_finite,
    uniform_power_allocation,
    vartheta,
    with_antennas,
)
from .pilots import (
    PaMethod,
    assignment_value,
    build_cost_matrix,
    exhaustive_pa,
    greedy_ul_pa,
    heuristic_pa,
    multicell_rounds,
    random_pa,
)
from .powerctl import (
    PcConfig,
    dl_interference_measure,
    gradual_removal_update,
    pc_config_from_db,
    run_power_control,
    target_sinr_from_rate,
    target_tracking_update,
    ul_interference_measure,
)
