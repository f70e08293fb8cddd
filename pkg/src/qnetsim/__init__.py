"""Simulator and planning toolkit for multiplexed entanglement distribution.

The package models a pulsed photon-pair source feeding a switched network
of satellite and fiber links, detects the photons with realistic timing,
and turns coincidence statistics into QKD figures of merit.  Submodules
stay importable on their own; this namespace re-exports the pieces most
workflows touch.
"""

__version__ = "0.1.0"

from .coincidence import (
    CarResult,
    CoincidenceHistogram,
    analytic_car_exact,
    car_from_tags,
    combine_car,
    demux_time_slots,
    histogram,
    pulse_statistics,
)
from .detection import (
    Clicks,
    DetectorSpec,
    apply_dead_time,
    detect,
    read_tag_file,
    saturated_rate,
    si_apd,
    snspd,
    write_tag_file,
)
from .engine import (
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    analyze_tags,
    default_scenario,
    derive_seed,
    parse_config,
    run_scenario,
    simulate_tags,
    sweep,
    validate_config,
)
from .metrics import (
    MetricsRecord,
    QkdParams,
    analytic_car,
    binary_entropy,
    metrics_from_car,
    mux_car,
    qber,
    skr,
    visibility,
)
from .planner import (
    GridAllocation,
    TradeoffPoint,
    flexgrid_allocate,
    max_time_channels,
    optimize_rep_rate,
    spectral_channels,
)
from .source import (
    JsiGrid,
    PairBatch,
    SourceSpec,
    compute_jsi,
    crosstalk_matrix,
    jsi_channel_bounds,
    make_pump_channels,
    mean_pairs_per_pulse,
    sample_pairs,
    to_photons,
)
from .topology import (
    NetworkMode,
    SwitchPosition,
    connectivity,
    default_channel_pairs,
    idler_wavelength,
    merged_ground_connectivity,
    path_loss,
    transport_loss_db,
    validate_allocation,
)
from .transport import (
    ChannelSpec,
    FtmSpec,
    PhotonBatch,
    db_to_transmittance,
    ftm_delay,
    propagate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
