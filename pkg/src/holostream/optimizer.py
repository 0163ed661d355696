"""Per-segment cross-layer decision: QP, MCS, link, and power for both streams.

The joint selector scans the full grid Q x M x L x Q x M x L x power-splits
(real and imaginary streams must ride distinct links), keeps tuples that are
deliverable within the segment duration and whose expected PSNR gap respects
the balance threshold, and returns the expected-distortion minimizer under a
fully deterministic tie-break. The baseline selector reproduces the
non-cross-layer reference: top-two links by SNR, fixed medium QP, equal power
split, per-link MCS chosen by a loss-target rule that ignores content.

The grid scan is vectorized but evaluates the exact same floating-point
operation sequence as evaluate_stream, so a naive tuple-by-tuple rescan
reproduces its choice bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .channel import LinkSnapshot, link_snr
from .distortion import SegmentDistortionTable, first_order_gop_distortion, mse_to_psnr
from .errors import InsufficientLinksError, NoFeasibleDecisionError
from .phy import CurveSet, McsMode, cb_bler, chained_loss, mmib_from_snr


def dbm_to_watts(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float) * 1e3)


def split_power_watts(total_dbm: float, fraction: float) -> tuple[float, float]:
    """Split the budget in linear watts with first + second <= total, exactly.

    The complement can overshoot the budget by one ulp after rounding; nudge
    it down so the linear power constraint holds as stated.
    """
    total_w = dbm_to_watts(total_dbm)
    first = fraction * total_w
    second = total_w - first
    if first + second > total_w:
        second = float(np.nextafter(second, 0.0))
    return first, second


@dataclass(frozen=True)
class SlotConfig:
    """Transmission slot framing used for deliverable-capacity accounting."""

    slot_duration_s: float = 125e-6
    tb_per_slot_unit: float = 2.0

    def tb_per_slot(self, mcs: McsMode) -> int:
        return max(1, round(self.tb_per_slot_unit * mcs.spectral_efficiency))


@dataclass(frozen=True, eq=False)
class PhyContext:
    """Radio constants and lookup data needed to evaluate one stream."""

    curves: CurveSet
    noise_figure_db: float
    bandwidth_hz: float
    antenna_gain_db: float
    slots: SlotConfig
    segment_seconds: float


@dataclass(frozen=True)
class OptimizerConfig:
    """Decision-grid parameters for the joint selector and the baseline."""

    qp_set: tuple[int, ...] = (27, 37, 45)
    mcs_set: tuple[McsMode, ...] = ()
    d_t_psnr_db: float = 1.5
    total_power_dbm: float = 60.0
    power_split_fractions: tuple[float, ...] = (
        0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
    )
    baseline_loss_target: float = 0.01

    def __post_init__(self):
        if not self.qp_set:
            raise ValueError("qp_set must be non-empty")
        if self.d_t_psnr_db <= 0:
            raise ValueError("d_t_psnr_db must be > 0")
        fr = self.power_split_fractions
        if not fr or any(not 0.0 < f < 1.0 for f in fr):
            raise ValueError("power_split_fractions must lie in (0,1)")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValueError("power_split_fractions must be strictly increasing")
        if not 0.0 < self.baseline_loss_target < 1.0:
            raise ValueError("baseline_loss_target must be in (0,1)")


@dataclass(frozen=True)
class Decision:
    """Selected 8-tuple for one segment, plus its expected quality."""

    qp_r: int
    mcs_r: int
    link_r: int
    power_dbm_r: float
    qp_i: int
    mcs_i: int
    link_i: int
    power_dbm_i: float
    expected_mse_r: float
    expected_mse_i: float
    psnr_gap_db: float
    split_fraction: float
    feasible: bool
    deliverable_r: bool = True
    deliverable_i: bool = True

    def __post_init__(self):
        if self.link_r == self.link_i:
            raise ValueError("real and imaginary streams must use distinct links")

    @property
    def expected_psnr_r(self) -> float:
        return float(mse_to_psnr(self.expected_mse_r))

    @property
    def expected_psnr_i(self) -> float:
        return float(mse_to_psnr(self.expected_mse_i))


def deliverable_capacity_bits(
    mcs: McsMode, segment_seconds: float, slots: SlotConfig
) -> float:
    """Bits one stream can push through a segment on this mode.

    Linear in the duration (fractional slots), so doubling the segment
    exactly doubles capacity.
    """
    if segment_seconds <= 0:
        raise ValueError("segment_seconds must be > 0")
    return (segment_seconds / slots.slot_duration_s) * slots.tb_per_slot(mcs) * mcs.tb_size_bits


def stream_packet_loss(
    mcs: McsMode,
    power_dbm: float,
    link: LinkSnapshot,
    table: SegmentDistortionTable,
    ctx: PhyContext,
) -> np.ndarray:
    """Per-packet loss probabilities for one stream configuration."""
    snr = link_snr(
        power_dbm,
        link.path_loss_db,
        link.blockage_loss_db,
        ctx.noise_figure_db,
        ctx.bandwidth_hz,
        ctx.antenna_gain_db,
    )
    beta = mmib_from_snr(snr, mcs.modulation_order, ctx.curves)
    cb = cb_bler(beta, mcs)
    n_tb = -(-table.packet_sizes_bits // mcs.tb_size_bits)
    return np.asarray(chained_loss(cb, mcs.n_cb_per_tb, n_tb), dtype=float)


def evaluate_stream(
    qp: int,
    mcs: McsMode,
    power_dbm: float,
    link: LinkSnapshot,
    table: SegmentDistortionTable,
    ctx: PhyContext,
) -> float | None:
    """Expected end-to-end MSE of one stream, or None if not deliverable.

    Deliverability means the segment's bits fit the mode's capacity within
    the segment duration.
    """
    if table.qp != qp:
        raise ValueError(f"table row is for qp {table.qp}, not {qp}")
    if not link.is_candidate:
        raise ValueError(f"link {link.link_id} is not a candidate")
    if table.total_bits > deliverable_capacity_bits(mcs, ctx.segment_seconds, ctx.slots):
        return None
    p = stream_packet_loss(mcs, power_dbm, link, table, ctx)
    return first_order_gop_distortion(table.source_mse, table.sensitivities, p)


def _grid_distortions(
    links: Sequence[LinkSnapshot],
    tables: Mapping[int, SegmentDistortionTable],
    qps: Sequence[int],
    modes: Sequence[McsMode],
    power_dbm: np.ndarray,
    ctx: PhyContext,
) -> tuple[np.ndarray, np.ndarray]:
    """Expected MSE over (qp, mode, link, power) for one component.

    Floating-point-identical to looping evaluate_stream over the grid: the
    same ufuncs run in the same order per element.
    """
    pl = np.array([s.path_loss_db for s in links])[:, None]
    bl = np.array([s.blockage_loss_db for s in links])[:, None]
    snr = link_snr(
        power_dbm[None, :], pl, bl,
        ctx.noise_figure_db, ctx.bandwidth_hz, ctx.antenna_gain_db,
    )  # (L, K)
    beta = {
        order: mmib_from_snr(snr, order, ctx.curves)
        for order in {m.modulation_order for m in modes}
    }
    n_q, n_m, n_l, n_k = len(qps), len(modes), len(links), power_dbm.size
    d = np.empty((n_q, n_m, n_l, n_k))
    cap_ok = np.zeros((n_q, n_m), dtype=bool)
    for mi, mode in enumerate(modes):
        cb = cb_bler(beta[mode.modulation_order], mode)  # (L, K)
        capacity = deliverable_capacity_bits(mode, ctx.segment_seconds, ctx.slots)
        for qi, qp in enumerate(qps):
            t = tables[qp]
            cap_ok[qi, mi] = t.total_bits <= capacity
            if not cap_ok[qi, mi]:
                d[qi, mi] = np.inf
                continue
            n_tb = -(-t.packet_sizes_bits // mode.tb_size_bits)
            p = chained_loss(cb[..., None], mode.n_cb_per_tb, n_tb)  # (L, K, N)
            acc = np.full((n_l, n_k), t.source_mse)
            for i in range(t.n_packets):
                acc = acc + t.sensitivities[i] * p[..., i]
            d[qi, mi] = acc
    return d, cap_ok


def select_optimal(
    candidates: Sequence[LinkSnapshot],
    tables_r: Mapping[int, SegmentDistortionTable],
    tables_i: Mapping[int, SegmentDistortionTable],
    cfg: OptimizerConfig,
    ctx: PhyContext,
) -> Decision:
    """Exhaustive scan of the joint decision grid.

    Returns the feasible tuple minimizing expected_mse_r + expected_mse_i.
    Feasible: both streams deliverable, distinct links, linear power within
    budget (holds by construction of the split), and expected PSNR gap within
    the balance threshold. If the gap constraint can never be met, returns
    the gap minimizer (ties by objective) marked feasible=False.

    Tie-break, in order: objective, gap, lower QP (real then imaginary),
    lower MCS index, lower link id, split fraction closest to 0.5, then lower
    fraction. Deterministic for identical inputs.
    """
    if len(candidates) < 2:
        raise InsufficientLinksError(
            f"need at least 2 candidate links, have {len(candidates)}"
        )
    qps = sorted(cfg.qp_set)
    modes = sorted(cfg.mcs_set, key=lambda m: m.id)
    links = list(candidates)
    fracs = np.asarray(cfg.power_split_fractions)

    total_w = dbm_to_watts(cfg.total_power_dbm)
    w_r = fracs * total_w
    w_i = total_w - w_r
    over = w_r + w_i > total_w
    w_i[over] = np.nextafter(w_i[over], 0.0)
    dbm_r = watts_to_dbm(w_r)
    dbm_i = watts_to_dbm(w_i)

    d_r, cap_r = _grid_distortions(links, tables_r, qps, modes, dbm_r, ctx)
    d_i, cap_i = _grid_distortions(links, tables_i, qps, modes, dbm_i, ctx)

    shape = (len(qps), len(modes), len(links)) * 2 + (fracs.size,)
    obj = d_r[:, :, :, None, None, None, :] + d_i[None, None, None, :, :, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        # same ufunc sequence as mse_to_psnr; infeasible cells (inf mse) give
        # -inf psnr / nan gap and are masked below
        psnr_r = 10.0 * np.log10(255.0**2 / d_r)
        psnr_i = 10.0 * np.log10(255.0**2 / d_i)
        gap = np.abs(
            psnr_r[:, :, :, None, None, None, :] - psnr_i[None, None, None, :, :, :, :]
        )

    link_ids = np.array([s.link_id for s in links])
    distinct = (link_ids[:, None] != link_ids[None, :]).reshape(
        1, 1, len(links), 1, 1, len(links), 1
    )
    valid = (
        cap_r[:, :, None, None, None, None, None]
        & cap_i[None, None, None, :, :, None, None]
        & distinct
    )
    valid = np.broadcast_to(valid, shape)
    if not valid.any():
        raise NoFeasibleDecisionError(
            "no (qp, mcs) combination is deliverable within the segment duration"
        )

    with np.errstate(invalid="ignore"):
        within_gap = valid & (gap <= cfg.d_t_psnr_db)
    feasible = bool(within_gap.any())
    pool = within_gap if feasible else valid

    flat = np.flatnonzero(pool.ravel())
    qr, mr, lr, qi, mi, li, k = np.unravel_index(flat, shape)
    obj_v = obj.ravel()[flat]
    gap_v = gap.ravel()[flat]
    first, second = (obj_v, gap_v) if feasible else (gap_v, obj_v)
    # np.lexsort sorts by the LAST key first
    order = np.lexsort(
        (
            fracs[k],
            np.abs(fracs[k] - 0.5),
            link_ids[li],
            link_ids[lr],
            mi,
            mr,
            qi,
            qr,
            second,
            first,
        )
    )
    b = order[0]
    qr, mr, lr, qi, mi, li, k = (int(a[b]) for a in (qr, mr, lr, qi, mi, li, k))
    return Decision(
        qp_r=qps[qr],
        mcs_r=modes[mr].id,
        link_r=int(link_ids[lr]),
        power_dbm_r=float(dbm_r[k]),
        qp_i=qps[qi],
        mcs_i=modes[mi].id,
        link_i=int(link_ids[li]),
        power_dbm_i=float(dbm_i[k]),
        expected_mse_r=float(d_r[qr, mr, lr, k]),
        expected_mse_i=float(d_i[qi, mi, li, k]),
        psnr_gap_db=float(gap_v[order[0]]),
        split_fraction=float(fracs[k]),
        feasible=feasible,
    )


def _baseline_mode(
    link: LinkSnapshot,
    power_dbm: float,
    table: SegmentDistortionTable,
    cfg: OptimizerConfig,
    ctx: PhyContext,
) -> tuple[McsMode, bool]:
    """Classic content-blind link adaptation for one stream.

    Most spectrally efficient capacity-feasible mode whose mean per-packet
    loss meets the target; if the target is unreachable, the capacity-feasible
    mode with the lowest mean loss. Returns (mode, deliverable).
    """
    modes_desc = sorted(cfg.mcs_set, key=lambda m: m.id, reverse=True)
    fitting = [
        m
        for m in modes_desc
        if table.total_bits <= deliverable_capacity_bits(m, ctx.segment_seconds, ctx.slots)
    ]
    if not fitting:
        roomiest = max(
            modes_desc,
            key=lambda m: (deliverable_capacity_bits(m, ctx.segment_seconds, ctx.slots), -m.id),
        )
        return roomiest, False
    fallback = None
    for m in fitting:
        mean_loss = float(np.mean(stream_packet_loss(m, power_dbm, link, table, ctx)))
        if mean_loss <= cfg.baseline_loss_target:
            return m, True
        if fallback is None or mean_loss < fallback[1]:
            fallback = (m, mean_loss)
    return fallback[0], True


def baseline_select(
    candidates: Sequence[LinkSnapshot],
    tables_r: Mapping[int, SegmentDistortionTable],
    tables_i: Mapping[int, SegmentDistortionTable],
    cfg: OptimizerConfig,
    ctx: PhyContext,
) -> Decision:
    """SNR-ranked reference policy without cross-layer coordination.

    Real stream on the best-SNR candidate, imaginary on the second (ties to
    the lower link id); the medium QP of the ladder on both; equal power
    split; per-link MCS from the loss-target rule. No gap constraint is
    enforced; the feasible flag just records whether the resulting decision
    happens to satisfy the joint constraints.
    """
    if len(candidates) < 2:
        raise InsufficientLinksError(
            f"need at least 2 candidate links, have {len(candidates)}"
        )
    ranked = sorted(candidates, key=lambda s: (-s.snr_db, s.link_id))
    link_r, link_i = ranked[0], ranked[1]
    qps = sorted(cfg.qp_set)
    qp = qps[len(qps) // 2]
    w_r, w_i = split_power_watts(cfg.total_power_dbm, 0.5)
    dbm_r = float(watts_to_dbm(w_r))
    dbm_i = float(watts_to_dbm(w_i))

    t_r, t_i = tables_r[qp], tables_i[qp]
    mode_r, ok_r = _baseline_mode(link_r, dbm_r, t_r, cfg, ctx)
    mode_i, ok_i = _baseline_mode(link_i, dbm_i, t_i, cfg, ctx)

    mse_r = (
        evaluate_stream(qp, mode_r, dbm_r, link_r, t_r, ctx)
        if ok_r
        else t_r.all_lost_mse
    )
    mse_i = (
        evaluate_stream(qp, mode_i, dbm_i, link_i, t_i, ctx)
        if ok_i
        else t_i.all_lost_mse
    )
    gap = float(abs(mse_to_psnr(mse_r) - mse_to_psnr(mse_i)))
    return Decision(
        qp_r=qp,
        mcs_r=mode_r.id,
        link_r=link_r.link_id,
        power_dbm_r=dbm_r,
        qp_i=qp,
        mcs_i=mode_i.id,
        link_i=link_i.link_id,
        power_dbm_i=dbm_i,
        expected_mse_r=float(mse_r),
        expected_mse_i=float(mse_i),
        psnr_gap_db=gap,
        split_fraction=0.5,
        feasible=ok_r and ok_i and gap <= cfg.d_t_psnr_db,
        deliverable_r=ok_r,
        deliverable_i=ok_i,
    )
