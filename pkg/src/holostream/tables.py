"""Distortion-table files: ingestion, validation, and synthetic generation.

The table file is line-oriented CSV, one record per (segment, component, QP),
with list-valued cells (packet sizes, per-packet sensitivities) joined by '|'
inside the cell. Real encoder output can be dropped in with the same schema;
the synthetic generator stands in for it and is calibrated so mid-range
packet loss (p around 1e-2) costs a visible 1-5 dB of PSNR.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .distortion import COMPONENTS, SegmentDistortionTable, mse_to_psnr
from .errors import TableError

_COLUMNS = (
    "segment_id",
    "component",
    "qp",
    "source_mse",
    "bitrate_bps",
    "packet_sizes_bits",
    "loss_sensitivities",
)
_LIST_SEP = "|"


class TableSet:
    """All tables of one asset, indexed by (segment, component, qp).

    Segment ids are reused cyclically when a simulation asks for more
    segments than the file provides.
    """

    def __init__(self, tables: Iterable[SegmentDistortionTable]):
        self._by_key: dict[tuple[int, str, int], SegmentDistortionTable] = {}
        for t in tables:
            key = (t.segment_id, t.component, t.qp)
            if key in self._by_key:
                raise TableError(f"duplicate table row for {key}")
            self._by_key[key] = t
        if not self._by_key:
            raise TableError("table set is empty")
        self.segment_ids = sorted({k[0] for k in self._by_key})
        self.qps = tuple(sorted({k[2] for k in self._by_key}))
        self._validate()

    def _validate(self) -> None:
        for seg in self.segment_ids:
            for comp in COMPONENTS:
                rows = []
                for qp in self.qps:
                    t = self._by_key.get((seg, comp, qp))
                    if t is None:
                        raise TableError(
                            f"missing table row (segment {seg}, {comp}, qp {qp})"
                        )
                    rows.append(t)
                for a, b in zip(rows, rows[1:]):
                    if b.source_mse < a.source_mse:
                        raise TableError(
                            f"segment {seg}/{comp}: source_mse must be non-decreasing in qp "
                            f"(qp {a.qp}: {a.source_mse}, qp {b.qp}: {b.source_mse})"
                        )
                    if b.bitrate_bps > a.bitrate_bps:
                        raise TableError(
                            f"segment {seg}/{comp}: bitrate_bps must be non-increasing in qp "
                            f"(qp {a.qp}: {a.bitrate_bps}, qp {b.qp}: {b.bitrate_bps})"
                        )

    def __len__(self) -> int:
        return len(self._by_key)

    @property
    def n_segments(self) -> int:
        return len(self.segment_ids)

    def get(self, segment: int, component: str, qp: int) -> SegmentDistortionTable:
        seg = self.segment_ids[segment % self.n_segments]
        try:
            return self._by_key[(seg, component, qp)]
        except KeyError:
            raise TableError(f"missing table row (segment {seg}, {component}, qp {qp})")

    def component_tables(self, segment: int, component: str) -> dict[int, SegmentDistortionTable]:
        return {qp: self.get(segment, component, qp) for qp in self.qps}

    def rows(self) -> list[SegmentDistortionTable]:
        return [self._by_key[k] for k in sorted(self._by_key)]


def write_tables_csv(tables: TableSet | Iterable[SegmentDistortionTable], path: str | Path) -> None:
    rows = tables.rows() if isinstance(tables, TableSet) else sorted(
        tables, key=lambda t: (t.segment_id, t.component, t.qp)
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_COLUMNS)
        for t in rows:
            # repr: shortest exact float form, so read-back is lossless
            w.writerow(
                [
                    t.segment_id,
                    t.component,
                    t.qp,
                    repr(t.source_mse),
                    repr(t.bitrate_bps),
                    _LIST_SEP.join(str(int(x)) for x in t.packet_sizes_bits),
                    _LIST_SEP.join(repr(float(x)) for x in t.sensitivities),
                ]
            )


def read_tables_csv(path: str | Path) -> TableSet:
    tables = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != _COLUMNS:
            raise TableError(
                f"{path}: expected columns {','.join(_COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        for line, r in enumerate(reader, start=2):
            try:
                tables.append(
                    SegmentDistortionTable(
                        segment_id=int(r["segment_id"]),
                        component=r["component"],
                        qp=int(r["qp"]),
                        source_mse=float(r["source_mse"]),
                        bitrate_bps=float(r["bitrate_bps"]),
                        packet_sizes_bits=[int(x) for x in r["packet_sizes_bits"].split(_LIST_SEP)],
                        sensitivities=[float(x) for x in r["loss_sensitivities"].split(_LIST_SEP)],
                    )
                )
            except (KeyError, ValueError) as exc:
                raise TableError(f"{path}:{line}: {exc}") from exc
    return TableSet(tables)


@dataclass(frozen=True)
class SyntheticTableParams:
    """Calibration constants for the synthetic asset generator.

    The defaults place experiments in an informative operating range:
    - the QP ladder spans 4 dB steps of source quality, with the top QP's
      bitrate sized to need the most efficient MCS mode's capacity;
    - total sensitivity is sensitivity_total_ratio * source_mse, so a uniform
      packet loss of 1e-2 costs about 1.5 dB;
    - real and imaginary draws share per-segment variation but carry
      independent component jitter, so their quality gap has realistic spread.
    """

    n_packets: int = 8
    top_psnr_db: float = 37.5
    psnr_step_db: float = 4.0
    segment_jitter_db: float = 1.0
    component_jitter_db: float = 1.2
    top_bitrate_bps: float = 450e6
    bitrate_ratio: float = 0.5
    bitrate_jitter: float = 0.05
    gop_seconds: float = 4.0 / 30.0
    sensitivity_total_ratio: float = 40.0
    sensitivity_shape: float = 1.5
    sensitivity_jitter: float = 0.25
    packet_size_shape: float = 1.0
    packet_size_jitter: float = 0.1


def _front_loaded_profile(n: int, shape: float, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """Decreasing weights over packet index (I-frame data first), normalized."""
    base = (n - np.arange(n, dtype=float)) ** shape
    w = base * np.exp(jitter * rng.standard_normal(n))
    return w / w.sum()


def generate_synthetic_tables(
    seed: int,
    n_segments: int,
    qp_set: Sequence[int],
    params: SyntheticTableParams = SyntheticTableParams(),
) -> TableSet:
    """Deterministic synthetic tables for n_segments and the given QP ladder.

    Rate-distortion monotonicity (source_mse up, bitrate down with QP) is
    enforced by construction; earlier packets get larger expected
    sensitivities and sizes (IPPP propagation shape).
    """
    if not qp_set:
        raise ValueError("qp_set must be non-empty")
    qps = sorted(qp_set)
    rng = np.random.default_rng(seed)
    tables = []
    for seg in range(n_segments):
        seg_offset = params.segment_jitter_db * rng.standard_normal()
        for comp in COMPONENTS:
            prev_psnr = None
            prev_rate = None
            for rank, qp in enumerate(qps):
                psnr = (
                    params.top_psnr_db
                    - rank * params.psnr_step_db
                    + seg_offset
                    + params.component_jitter_db * rng.standard_normal()
                )
                if prev_psnr is not None:
                    psnr = min(psnr, prev_psnr - 0.1)
                rate = (
                    params.top_bitrate_bps
                    * params.bitrate_ratio**rank
                    * np.exp(params.bitrate_jitter * rng.standard_normal())
                )
                if prev_rate is not None:
                    rate = min(rate, prev_rate)
                prev_psnr, prev_rate = psnr, rate

                source_mse = 255.0**2 / 10.0 ** (psnr / 10.0)
                total_bits = max(params.n_packets, int(rate * params.gop_seconds))
                size_w = _front_loaded_profile(
                    params.n_packets, params.packet_size_shape, params.packet_size_jitter, rng
                )
                sizes = np.maximum(1, (size_w * total_bits).astype(np.int64))
                lam_w = _front_loaded_profile(
                    params.n_packets, params.sensitivity_shape, params.sensitivity_jitter, rng
                )
                lams = params.sensitivity_total_ratio * source_mse * lam_w
                tables.append(
                    SegmentDistortionTable(
                        segment_id=seg,
                        component=comp,
                        qp=qp,
                        source_mse=float(source_mse),
                        bitrate_bps=float(rate),
                        packet_sizes_bits=sizes,
                        sensitivities=lams,
                    )
                )
    return TableSet(tables)


def psnr_of_table(table: SegmentDistortionTable) -> float:
    """Source quality of one table row, in dB."""
    return float(mse_to_psnr(table.source_mse))
