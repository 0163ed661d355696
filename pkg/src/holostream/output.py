"""Schema-stable result emitters: per-segment CSV, summary JSON, traces.

Column order and names are fixed; floats are rendered with %.10g so repeated
runs with the same seed produce byte-identical files. Summary documents
carry a schema version.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

from .sim import SUMMARY_SCHEMA_VERSION, RunSummary, SegmentMetrics

SEGMENT_COLUMNS = (
    "segment",
    "policy",
    "psnr_r",
    "psnr_i",
    "gap",
    "outage",
    "l_r",
    "l_i",
    "q_r",
    "q_i",
    "m_r",
    "m_i",
    "w_r",
    "w_i",
)

CHANNEL_TRACE_COLUMNS = ("slot", "link_id", "snr_db", "blocked")


def _g(x: float) -> str:
    return f"{x:.10g}"


def segment_row(m: SegmentMetrics) -> list:
    """One CSV row; decision fields are -1 on outage segments."""
    d = m.decision
    return [
        m.segment_id,
        m.policy,
        _g(m.psnr_r),
        _g(m.psnr_i),
        _g(m.psnr_gap_db),
        int(m.outage),
        d.link_r if d else -1,
        d.link_i if d else -1,
        d.qp_r if d else -1,
        d.qp_i if d else -1,
        d.mcs_r if d else -1,
        d.mcs_i if d else -1,
        _g(d.power_dbm_r) if d else -1,
        _g(d.power_dbm_i) if d else -1,
    ]


def write_segments_csv(path: str | Path, metrics: Iterable[SegmentMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SEGMENT_COLUMNS)
        for m in metrics:
            w.writerow(segment_row(m))


def read_segments_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_payload(summaries: dict[str, RunSummary], **meta) -> dict:
    payload = {
        "version": SUMMARY_SCHEMA_VERSION,
        "policies": {pol: asdict(s) for pol, s in sorted(summaries.items())},
    }
    payload.update(meta)
    return payload


def write_summary_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_channel_trace(path: str | Path, rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CHANNEL_TRACE_COLUMNS)
        for slot, link_id, snr_db, blocked in rows:
            w.writerow([slot, link_id, _g(snr_db), int(blocked)])


def write_sweep_comparison(path: str | Path, summaries: Sequence[RunSummary]) -> None:
    """Merged per-(density, policy) comparison table, averaged over seeds."""
    cells: dict[tuple[float, str], list[RunSummary]] = {}
    for s in summaries:
        cells.setdefault((s.density, s.policy), []).append(s)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "density",
                "policy",
                "n_runs",
                "mean_psnr_combined",
                "mean_gap_db",
                "outage_rate",
                "violation_rate",
                "gap_le_1db_fraction",
            ]
        )
        for (density, policy) in sorted(cells):
            group = cells[(density, policy)]
            n = len(group)
            w.writerow(
                [
                    _g(density),
                    policy,
                    n,
                    _g(sum(s.mean_psnr_combined for s in group) / n),
                    _g(sum(s.mean_gap_db for s in group) / n),
                    _g(sum(s.outage_rate for s in group) / n),
                    _g(sum(s.violation_rate for s in group) / n),
                    _g(sum(s.gap_le_1db_fraction for s in group) / n),
                ]
            )
