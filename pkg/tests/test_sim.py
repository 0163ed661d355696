"""Streaming-loop tests: determinism, outage handling, summaries, realization."""

import numpy as np
import pytest

from holostream.config import config_from_dict
from holostream.distortion import SegmentDistortionTable, mse_to_psnr
from holostream.sim import channel_trace, realize_transmission, run_simulation, summarize
from holostream.tables import SyntheticTableParams, TableSet, generate_synthetic_tables


def lossy_cfg(**overrides):
    doc = {
        "radio": {"total_power_dbm": 20.0, "antenna_gain_db": 10.0},
        "sim": {"n_segments": 30, "seed": 3},
    }
    for k, v in overrides.items():
        doc.setdefault(k, {}).update(v)
    return config_from_dict(doc)


def tables_for(cfg, seed=7, **params):
    return generate_synthetic_tables(
        seed,
        cfg.sim.n_segments,
        cfg.optimizer.qp_set,
        SyntheticTableParams(gop_seconds=cfg.gop_seconds, **params),
    )


def symmetric_tables(cfg, seed=7, **params):
    """Identical real/imaginary rows (same draws for both components)."""
    base = tables_for(cfg, seed, **params)
    rows = []
    for t in base.rows():
        if t.component == "real":
            rows.append(t)
            rows.append(
                SegmentDistortionTable(
                    t.segment_id, "imaginary", t.qp, t.source_mse, t.bitrate_bps,
                    t.packet_sizes_bits, t.sensitivities,
                )
            )
    return TableSet(rows)


class TestDeterminism:
    def test_identical_seeds_identical_streams(self):
        cfg = lossy_cfg()
        tables = tables_for(cfg)
        m1, s1 = run_simulation(cfg, tables)
        m2, s2 = run_simulation(cfg, tables)
        assert m1 == m2
        assert s1 == s2

    def test_different_seeds_differ(self):
        cfg = lossy_cfg()
        tables = tables_for(cfg)
        m1, _ = run_simulation(cfg, tables, seed=1)
        m2, _ = run_simulation(cfg, tables, seed=2)
        assert m1 != m2

    def test_trace_matches_rng_layout(self):
        cfg = lossy_cfg()
        t1 = channel_trace(cfg, density=0.05, seed=9, n_segments=10)
        t2 = channel_trace(cfg, density=0.05, seed=9, n_segments=10)
        assert t1 == t2
        assert len(t1) == 10 * cfg.topology.n_links


class TestNoLossRegime:
    def test_saturated_no_blockage_hits_top_quality(self):
        # defaults saturate every link; shrink bitrates so the top QP rides a
        # loss-free mode, with symmetric tables the gap is exactly zero
        cfg = config_from_dict(
            {"blockage": {"density": 0.0}, "sim": {"n_segments": 10, "policy": "clo"}}
        )
        tables = symmetric_tables(cfg, top_bitrate_bps=200e6)
        metrics, summaries = run_simulation(cfg, tables)
        assert len(metrics) == 10
        top_qp = min(cfg.optimizer.qp_set)
        for m in metrics:
            assert not m.outage
            assert m.decision.feasible
            assert m.decision.qp_r == top_qp and m.decision.qp_i == top_qp
            want = mse_to_psnr(tables.get(m.segment_id, "real", top_qp).source_mse)
            assert m.psnr_r == pytest.approx(want, abs=1e-3)
            assert m.psnr_gap_db == 0.0
            assert m.realized_mse_r == tables.get(m.segment_id, "real", top_qp).source_mse
        assert summaries["clo"].outage_rate == 0.0
        assert summaries["clo"].violation_rate == 0.0


class TestOutage:
    def test_blocked_out_links_cause_outage(self):
        # giant blockage region density: everything blocked below threshold
        cfg = lossy_cfg(blockage={"density": 1.0})
        tables = tables_for(cfg)
        metrics, summaries = run_simulation(cfg, tables, policy="both")
        outage_segments = {m.segment_id for m in metrics if m.outage}
        assert outage_segments  # at this density screening must fail sometimes
        for m in metrics:
            if m.outage:
                assert m.decision is None
                mid_qp = sorted(cfg.optimizer.qp_set)[1]
                t = tables.get(m.segment_id, "real", mid_qp)
                assert m.expected_mse_r == pytest.approx(t.all_lost_mse)
        # paired policies see the same channel: same outage segments
        clo_out = {m.segment_id for m in metrics if m.policy == "clo" and m.outage}
        base_out = {m.segment_id for m in metrics if m.policy == "baseline" and m.outage}
        assert clo_out == base_out


class TestConservation:
    def test_every_segment_once_per_policy(self):
        cfg = lossy_cfg(sim={"n_segments": 25})
        tables = tables_for(cfg)
        metrics, _ = run_simulation(cfg, tables, policy="both")
        for pol in ("clo", "baseline"):
            ids = [m.segment_id for m in metrics if m.policy == pol]
            assert ids == list(range(25))

    def test_single_policy_runs(self):
        cfg = lossy_cfg(sim={"n_segments": 8})
        tables = tables_for(cfg)
        for pol in ("clo", "baseline"):
            metrics, summaries = run_simulation(cfg, tables, policy=pol)
            assert {m.policy for m in metrics} == {pol}
            assert set(summaries) == {pol}

    def test_missing_qp_coverage_fails_at_load(self):
        cfg = lossy_cfg(optimizer={"qp_set": [27, 37, 45, 51]})
        tables = generate_synthetic_tables(1, 5, (27, 37, 45))
        with pytest.raises(ValueError, match="qp 51"):
            run_simulation(cfg, tables)


class TestRealization:
    def make_ctx(self, cfg):
        return cfg.phy_context(), {m.id: m for m in cfg.phy.mcs_table}

    def test_realized_bounded_by_event_model(self):
        cfg = lossy_cfg()
        tables = tables_for(cfg)
        metrics, _ = run_simulation(cfg, tables, policy="clo", density=0.0)
        decided = [m for m in metrics if not m.outage]
        assert decided
        clean = 0
        for m in decided:
            t = tables.get(m.segment_id, "real", m.decision.qp_r)
            assert t.source_mse <= m.realized_mse_r <= t.all_lost_mse + 1e-9
            clean += m.realized_mse_r == t.source_mse
        # at candidate SNRs most draws lose nothing: realized == source exactly
        assert clean > len(decided) / 2

    def test_all_lost_when_undeliverable(self):
        from holostream.optimizer import Decision

        cfg = lossy_cfg()
        ctx, mcs_by_id = self.make_ctx(cfg)
        tables = tables_for(cfg)
        t_r = tables.get(0, "real", 37)
        t_i = tables.get(0, "imaginary", 37)
        d = Decision(
            qp_r=37, mcs_r=5, link_r=0, power_dbm_r=17.0,
            qp_i=37, mcs_i=5, link_i=1, power_dbm_i=17.0,
            expected_mse_r=t_r.all_lost_mse, expected_mse_i=t_i.all_lost_mse,
            psnr_gap_db=0.0, split_fraction=0.5, feasible=False,
            deliverable_r=False, deliverable_i=False,
        )
        real_r, real_i, lost_r, lost_i = realize_transmission(
            d, t_r, t_i, {}, ctx, mcs_by_id, np.random.default_rng(0)
        )
        assert lost_r.all() and lost_i.all()
        assert real_r == pytest.approx(t_r.all_lost_mse)
        assert real_i == pytest.approx(t_i.all_lost_mse)

    def test_realized_mean_approaches_expectation(self):
        # Monte Carlo convergence of the realization model on one stream
        cfg = lossy_cfg()
        ctx, mcs_by_id = self.make_ctx(cfg)
        tables = tables_for(cfg)
        metrics, _ = run_simulation(cfg, tables, policy="clo", seed=12)
        lossy = [
            m for m in metrics
            if not m.outage and m.expected_mse_r > 1.0001 * tables.get(
                m.segment_id, "real", m.decision.qp_r
            ).source_mse
        ]
        assert lossy, "calibration should produce at least one lossy segment"
        m = lossy[0]
        t_r = tables.get(m.segment_id, "real", m.decision.qp_r)
        t_i = tables.get(m.segment_id, "imaginary", m.decision.qp_i)
        trace = channel_trace(cfg, seed=12)
        snaps = {}  # rebuild the snapshot the decision saw via the trace
        from holostream.channel import LinkSnapshot

        params = cfg.channel_params()
        for slot, link_id, snr_db, blocked in trace:
            if slot == m.segment_id:
                # path loss back-computed so the evaluator reproduces snr
                pl = cfg.screening_power_dbm + params.antenna_gain_db - snr_db \
                    - (blocked * params.blockage_loss_db) \
                    + 174.0 - 10.0 * np.log10(params.bandwidth_hz) - params.noise_figure_db
                snaps[link_id] = LinkSnapshot(
                    link_id, snr_db, bool(blocked),
                    params.blockage_loss_db if blocked else 0.0,
                    float(pl), snr_db >= params.snr_threshold_db,
                )
        rng = np.random.default_rng(99)
        draws = np.array([
            realize_transmission(m.decision, t_r, t_i, snaps, ctx, mcs_by_id, rng)[0]
            for _ in range(100_000)
        ])
        assert draws.mean() == pytest.approx(m.expected_mse_r, rel=0.01)


class TestSummaries:
    def test_single_segment_summary(self):
        cfg = lossy_cfg(sim={"n_segments": 1})
        tables = tables_for(cfg)
        metrics, summaries = run_simulation(cfg, tables, policy="clo")
        s = summaries["clo"]
        m = metrics[0]
        assert s.n_segments == 1
        assert s.mean_psnr_combined == pytest.approx((m.psnr_r + m.psnr_i) / 2)
        assert s.min_psnr_combined == s.max_psnr_combined == s.mean_psnr_combined

    def test_mean_of_two(self):
        cfg = lossy_cfg(sim={"n_segments": 2})
        tables = tables_for(cfg)
        metrics, summaries = run_simulation(cfg, tables, policy="clo")
        comb = [(m.psnr_r + m.psnr_i) / 2 for m in metrics]
        assert summaries["clo"].mean_psnr_combined == pytest.approx(np.mean(comb))

    def test_summary_recomputable_from_stream(self):
        cfg = lossy_cfg()
        tables = tables_for(cfg)
        metrics, summaries = run_simulation(cfg, tables, policy="both", density=0.08)
        for pol in ("clo", "baseline"):
            sub = [m for m in metrics if m.policy == pol]
            re = summarize(sub, density=0.08, seed=cfg.sim.seed)
            assert re == summaries[pol]

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_mixed_policies_rejected(self):
        cfg = lossy_cfg(sim={"n_segments": 2})
        tables = tables_for(cfg)
        metrics, _ = run_simulation(cfg, tables, policy="both")
        with pytest.raises(ValueError, match="mixed"):
            summarize(metrics)


class TestBlockageCausality:
    def test_blocked_snapshot_drops_by_configured_loss(self):
        from holostream.channel import (
            BlockageField, ChannelParams, UeState, ring_sites, snapshot_links,
        )

        sites = ring_sites(6, 10.0, 10.0)
        ue = UeState((0.0, 0.0, 1.5))
        params = ChannelParams(blockage_loss_db=20.0)
        empty = BlockageField(30.0, 0.0, np.empty((0, 2)), np.empty((0, 2)),
                              np.empty(0), np.random.default_rng(0))
        blocking = BlockageField(
            30.0, 0.0, np.array([[5.0, 0.0]]), np.zeros((1, 2)),
            np.array([0.3]), np.random.default_rng(0),
        )
        shadow = {s.id: 1.23 for s in sites}
        power = {s.id: 57.0 for s in sites}
        free = {s.link_id: s for s in snapshot_links(sites, ue, empty, power, params, shadow)}
        hit = {s.link_id: s for s in snapshot_links(sites, ue, blocking, power, params, shadow)}
        assert hit[0].blocked  # site 0 sits at (10, 0): the blocker is on its path
        assert free[0].snr_db - hit[0].snr_db == pytest.approx(20.0, abs=1e-12)
        for k in range(1, 6):
            assert not hit[k].blocked
            assert hit[k].snr_db == free[k].snr_db
