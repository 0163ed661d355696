"""Per-segment streaming loop: blockers move, links are screened, a policy
decides, transmission is realized, metrics are aggregated.

One simulation run is a sequential process owning three RNG streams spawned
deterministically from the seed (blocker field, shadowing, packet
realization), so identical (config, seed) runs are bit-identical. With
policy "both", the cross-layer and baseline policies see the same channel
realization per segment for paired comparison.

Outage semantics: when fewer than two candidate links exist, nothing is
transmitted and the segment is scored as all packets lost at the middle QP
of the ladder. PSNR and gap fields always derive from EXPECTED distortion
(what the decision guarantees); realized distortion from the Bernoulli
packet draws is recorded separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import snapshot_links, spawn_blockers, step_blockers
from .config import RunConfig
from .distortion import mse_to_psnr
from .errors import InsufficientLinksError, NoFeasibleDecisionError
from .optimizer import (
    Decision,
    PhyContext,
    baseline_select,
    select_optimal,
    stream_packet_loss,
)
from .tables import TableSet

SUMMARY_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SegmentMetrics:
    segment_id: int
    policy: str
    decision: Decision | None
    expected_mse_r: float
    expected_mse_i: float
    realized_mse_r: float
    realized_mse_i: float
    psnr_r: float
    psnr_i: float
    psnr_gap_db: float
    outage: bool
    blocked_links: int
    n_candidates: int


@dataclass(frozen=True)
class RunSummary:
    """Aggregates over one run's segment stream, per policy.

    Gap statistics are taken over decided (non-outage) segments; the
    feasible_* variant restricts to segments whose decision satisfied the
    balance constraint.
    """

    policy: str
    density: float
    seed: int
    n_segments: int
    outage_rate: float
    violation_rate: float
    mean_psnr_r: float
    min_psnr_r: float
    max_psnr_r: float
    mean_psnr_i: float
    min_psnr_i: float
    max_psnr_i: float
    mean_psnr_combined: float
    min_psnr_combined: float
    max_psnr_combined: float
    mean_gap_db: float
    gap_le_1db_fraction: float
    feasible_gap_le_1db_fraction: float


def _mcs_by_id(cfg: RunConfig):
    return {m.id: m for m in cfg.phy.mcs_table}


def realize_transmission(
    decision: Decision,
    table_r,
    table_i,
    snapshots_by_id,
    ctx: PhyContext,
    mcs_by_id,
    rng: np.random.Generator,
) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Draw per-packet Bernoulli losses and score the realized distortion.

    Realized MSE follows the same first-order event model as the expected
    value (source + sum of sensitivities over lost packets), so the
    expectation over draws equals the expected MSE. An undeliverable stream
    loses every packet. Real-stream packets are drawn before imaginary ones.
    """
    out = []
    masks = []
    for table, mcs_id, power, link_id, deliverable in (
        (table_r, decision.mcs_r, decision.power_dbm_r, decision.link_r, decision.deliverable_r),
        (table_i, decision.mcs_i, decision.power_dbm_i, decision.link_i, decision.deliverable_i),
    ):
        if deliverable:
            snap = snapshots_by_id[link_id]
            p = stream_packet_loss(mcs_by_id[mcs_id], power, snap, table, ctx)
        else:
            p = np.ones(table.n_packets)
        lost = rng.random(table.n_packets) < p
        realized = float(table.source_mse + table.sensitivities[lost].sum())
        out.append(realized)
        masks.append(lost)
    return out[0], out[1], masks[0], masks[1]


def _outage_metrics(seg: int, policy: str, tables: TableSet, qp_mid: int,
                    blocked: int, n_cand: int) -> SegmentMetrics:
    t_r = tables.get(seg, "real", qp_mid)
    t_i = tables.get(seg, "imaginary", qp_mid)
    mse_r, mse_i = t_r.all_lost_mse, t_i.all_lost_mse
    p_r, p_i = mse_to_psnr(mse_r), mse_to_psnr(mse_i)
    return SegmentMetrics(
        segment_id=seg,
        policy=policy,
        decision=None,
        expected_mse_r=mse_r,
        expected_mse_i=mse_i,
        realized_mse_r=mse_r,
        realized_mse_i=mse_i,
        psnr_r=float(p_r),
        psnr_i=float(p_i),
        psnr_gap_db=float(abs(p_r - p_i)),
        outage=True,
        blocked_links=blocked,
        n_candidates=n_cand,
    )


def run_simulation(
    cfg: RunConfig,
    tables: TableSet,
    density: float | None = None,
    seed: int | None = None,
    policy: str | None = None,
) -> tuple[list[SegmentMetrics], dict[str, RunSummary]]:
    """Simulate cfg.sim.n_segments segments; returns (metrics, summaries).

    density/seed/policy override the config (used by sweeps). With policy
    "both", each segment yields one metrics record per policy, in the fixed
    order clo then baseline, all from one shared channel snapshot.
    """
    density = cfg.blockage.density if density is None else density
    seed = cfg.sim.seed if seed is None else seed
    policy = cfg.sim.policy if policy is None else policy
    policies = ("clo", "baseline") if policy == "both" else (policy,)

    qps = sorted(cfg.optimizer.qp_set)
    for qp in qps:
        if qp not in tables.qps:
            raise ValueError(f"tables do not cover configured qp {qp}")
    qp_mid = qps[len(qps) // 2]

    ss = np.random.SeedSequence(seed)
    field_rng, shadow_rng, realize_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    b = cfg.blockage
    field = spawn_blockers(
        density, b.region_radius_m, field_rng,
        speed_min=b.speed_min_mps, speed_max=b.speed_max_mps,
        blocker_radius=b.blocker_radius_m,
    )
    sites = cfg.sites()
    ue = cfg.ue()
    params = cfg.channel_params()
    ctx = cfg.phy_context()
    opt_cfg = cfg.optimizer_config()
    mcs_by_id = _mcs_by_id(cfg)
    screening = {s.id: cfg.screening_power_dbm for s in sites}
    sigma = cfg.radio.shadow_sigma_db

    metrics: list[SegmentMetrics] = []
    for seg in range(cfg.sim.n_segments):
        if seg > 0:
            field = step_blockers(field, cfg.gop_seconds)
        shadow = {s.id: sigma * shadow_rng.standard_normal() for s in sites}
        snaps = snapshot_links(sites, ue, field, screening, params, shadow)
        candidates = [s for s in snaps if s.is_candidate]
        blocked = sum(1 for s in snaps if s.blocked)
        by_id = {s.link_id: s for s in snaps}
        tables_r = tables.component_tables(seg, "real")
        tables_i = tables.component_tables(seg, "imaginary")

        for pol in policies:
            try:
                if len(candidates) < 2:
                    raise InsufficientLinksError(f"{len(candidates)} candidates")
                select = select_optimal if pol == "clo" else baseline_select
                decision = select(candidates, tables_r, tables_i, opt_cfg, ctx)
            except (InsufficientLinksError, NoFeasibleDecisionError):
                metrics.append(
                    _outage_metrics(seg, pol, tables, qp_mid, blocked, len(candidates))
                )
                continue
            t_r, t_i = tables_r[decision.qp_r], tables_i[decision.qp_i]
            real_r, real_i, _, _ = realize_transmission(
                decision, t_r, t_i, by_id, ctx, mcs_by_id, realize_rng
            )
            p_r = decision.expected_psnr_r
            p_i = decision.expected_psnr_i
            metrics.append(
                SegmentMetrics(
                    segment_id=seg,
                    policy=pol,
                    decision=decision,
                    expected_mse_r=decision.expected_mse_r,
                    expected_mse_i=decision.expected_mse_i,
                    realized_mse_r=real_r,
                    realized_mse_i=real_i,
                    psnr_r=p_r,
                    psnr_i=p_i,
                    psnr_gap_db=abs(p_r - p_i),
                    outage=False,
                    blocked_links=blocked,
                    n_candidates=len(candidates),
                )
            )
    summaries = {
        pol: summarize([m for m in metrics if m.policy == pol], density=density, seed=seed)
        for pol in policies
    }
    return metrics, summaries


def channel_trace(
    cfg: RunConfig,
    density: float | None = None,
    seed: int | None = None,
    n_segments: int | None = None,
) -> list[tuple[int, int, float, bool]]:
    """Per-(segment, link) snapshot rows: (slot, link_id, snr_db, blocked).

    Uses the same RNG stream layout as run_simulation, so the trace matches
    the snapshots a run with the same config and seed would see. The slot
    column is the segment index (one snapshot per decision epoch).
    """
    density = cfg.blockage.density if density is None else density
    seed = cfg.sim.seed if seed is None else seed
    n_segments = cfg.sim.n_segments if n_segments is None else n_segments

    ss = np.random.SeedSequence(seed)
    field_rng, shadow_rng, _ = (np.random.default_rng(s) for s in ss.spawn(3))
    b = cfg.blockage
    field = spawn_blockers(
        density, b.region_radius_m, field_rng,
        speed_min=b.speed_min_mps, speed_max=b.speed_max_mps,
        blocker_radius=b.blocker_radius_m,
    )
    sites = cfg.sites()
    ue = cfg.ue()
    params = cfg.channel_params()
    screening = {s.id: cfg.screening_power_dbm for s in sites}
    sigma = cfg.radio.shadow_sigma_db

    rows = []
    for seg in range(n_segments):
        if seg > 0:
            field = step_blockers(field, cfg.gop_seconds)
        shadow = {s.id: sigma * shadow_rng.standard_normal() for s in sites}
        for snap in snapshot_links(sites, ue, field, screening, params, shadow):
            rows.append((seg, snap.link_id, snap.snr_db, snap.blocked))
    return rows


def summarize(
    metrics: Sequence[SegmentMetrics], density: float = float("nan"), seed: int = -1
) -> RunSummary:
    """Exact aggregates over one policy's segment stream."""
    if not metrics:
        raise ValueError("summarize: empty metrics stream")
    policies = {m.policy for m in metrics}
    if len(policies) != 1:
        raise ValueError(f"summarize: mixed policies {policies}")
    psnr_r = np.array([m.psnr_r for m in metrics])
    psnr_i = np.array([m.psnr_i for m in metrics])
    combined = (psnr_r + psnr_i) / 2.0
    outages = np.array([m.outage for m in metrics])
    decided = [m for m in metrics if not m.outage]
    gaps = np.array([m.psnr_gap_db for m in decided])
    feas_gaps = np.array(
        [m.psnr_gap_db for m in decided if m.decision is not None and m.decision.feasible]
    )
    violations = sum(
        1 for m in decided if m.decision is not None and not m.decision.feasible
    )
    return RunSummary(
        policy=metrics[0].policy,
        density=density,
        seed=seed,
        n_segments=len(metrics),
        outage_rate=float(outages.mean()),
        violation_rate=float(violations / len(decided)) if decided else 0.0,
        mean_psnr_r=float(psnr_r.mean()),
        min_psnr_r=float(psnr_r.min()),
        max_psnr_r=float(psnr_r.max()),
        mean_psnr_i=float(psnr_i.mean()),
        min_psnr_i=float(psnr_i.min()),
        max_psnr_i=float(psnr_i.max()),
        mean_psnr_combined=float(combined.mean()),
        min_psnr_combined=float(combined.min()),
        max_psnr_combined=float(combined.max()),
        mean_gap_db=float(gaps.mean()) if gaps.size else float("nan"),
        gap_le_1db_fraction=float(np.mean(gaps <= 1.0)) if gaps.size else float("nan"),
        feasible_gap_le_1db_fraction=(
            float(np.mean(feas_gaps <= 1.0)) if feas_gaps.size else float("nan")
        ),
    )
