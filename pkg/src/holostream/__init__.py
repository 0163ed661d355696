"""Dual-stream hologram video streaming over multi-connectivity mmWave links.

Library layout:
    phy        SNR -> MMIB -> block error -> packet loss chain
    channel    geometry, path loss, moving-blocker field, link screening
    distortion exact and first-order GOP distortion models, PSNR
    optimizer  joint QP/MCS/link/power selection and the SNR-ranked baseline
    sim        per-segment streaming loop, realization, summaries
    config     sectioned YAML run configuration
    tables     distortion-table files and the synthetic generator
    curves     MMIB curve generation (Monte Carlo BICM mutual information)
    output     schema-stable CSV/JSON emitters
    cli        run / sweep / gen-tables / gen-curves / dump-channel
"""

from .channel import (
    BlockageField,
    Blocker,
    ChannelParams,
    GnbSite,
    LinkSnapshot,
    UeState,
    blockage_loss,
    link_snr,
    noise_floor_dbm,
    path_loss_db,
    ring_sites,
    snapshot_links,
    spawn_blockers,
    step_blockers,
)
from .config import RunConfig, config_from_dict, dump_config, load_config
from .curves import generate_mmib_curves, load_default_curves, read_curves_csv, write_curves_csv
from .distortion import (
    EventDistortionTable,
    SegmentDistortionTable,
    exact_gop_distortion,
    first_order_gop_distortion,
    lambda_from_events,
    mse_to_psnr,
)
from .errors import (
    ConfigError,
    HolostreamError,
    InsufficientLinksError,
    NoFeasibleDecisionError,
    TableError,
)
from .optimizer import (
    Decision,
    OptimizerConfig,
    PhyContext,
    SlotConfig,
    baseline_select,
    deliverable_capacity_bits,
    evaluate_stream,
    select_optimal,
    stream_packet_loss,
)
from .phy import (
    McsMode,
    MmibCurve,
    PhyEvaluation,
    cb_bler,
    chained_loss,
    default_mcs_table,
    evaluate_phy,
    mmib_from_snr,
    packet_loss_rate,
    packetize,
    tb_bler,
)
from .sim import (
    RunSummary,
    SegmentMetrics,
    channel_trace,
    realize_transmission,
    run_simulation,
    summarize,
)
from .tables import (
    SyntheticTableParams,
    TableSet,
    generate_synthetic_tables,
    read_tables_csv,
    write_tables_csv,
)

__version__ = "0.1.0"
