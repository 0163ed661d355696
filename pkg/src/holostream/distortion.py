"""End-to-end GOP distortion from per-packet loss probabilities.

Two models: an exact enumeration over all 2^N packet loss/receive events
(tractable oracle, N capped at 12) and a first-order model that is linear in
the loss probabilities around the loss-free point. Production streaming uses
the first-order path with per-packet sensitivities; the enumeration exists
for table generation and for validating the linear model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TableError

MAX_ENUMERATION_PACKETS = 12
PSNR_PEAK = 255.0  # 8-bit samples

COMPONENTS = ("real", "imaginary")


@dataclass(frozen=True, eq=False)
class SegmentDistortionTable:
    """Encoder-side distortion data for one (segment, component, QP).

    source_mse is the encoding distortion with every packet received;
    sensitivities[i] is the distortion increase when only packet i is lost.
    """

    segment_id: int
    component: str
    qp: int
    source_mse: float
    bitrate_bps: float
    packet_sizes_bits: np.ndarray
    sensitivities: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "packet_sizes_bits", np.asarray(self.packet_sizes_bits, dtype=np.int64)
        )
        object.__setattr__(self, "sensitivities", np.asarray(self.sensitivities, dtype=float))
        tag = f"segment {self.segment_id}/{self.component}/qp{self.qp}"
        if self.component not in COMPONENTS:
            raise TableError(f"{tag}: component must be one of {COMPONENTS}")
        if self.n_packets < 1:
            raise TableError(f"{tag}: need at least one packet")
        if self.sensitivities.shape != self.packet_sizes_bits.shape:
            raise TableError(f"{tag}: sensitivities and packet sizes must align")
        if self.source_mse <= 0.0:
            raise TableError(f"{tag}: source_mse must be > 0")
        if self.bitrate_bps <= 0.0:
            raise TableError(f"{tag}: bitrate_bps must be > 0")
        if np.any(self.packet_sizes_bits < 1):
            raise TableError(f"{tag}: packet sizes must be >= 1 bit")
        if not np.all(np.isfinite(self.sensitivities)) or np.any(self.sensitivities < 0.0):
            raise TableError(f"{tag}: sensitivities must be finite and >= 0")

    @property
    def n_packets(self) -> int:
        return int(self.packet_sizes_bits.size)

    @property
    def total_bits(self) -> int:
        return int(self.packet_sizes_bits.sum())

    @property
    def all_lost_mse(self) -> float:
        return first_order_gop_distortion(
            self.source_mse, self.sensitivities, np.ones(self.n_packets)
        )


def _received_masks(n_packets: int) -> np.ndarray:
    """(2^N, N) 0/1 matrix; entry [k, i] = 1 when packet i is received in event k."""
    masks = np.arange(1 << n_packets, dtype=np.uint32)
    return (masks[:, None] >> np.arange(n_packets)) & 1


@dataclass(frozen=True, eq=False)
class EventDistortionTable:
    """GOP distortion for every loss/receive event of its N packets.

    event_mse is indexed by the event bitmask where bit i set means packet i
    was received; the all-received entry is the source encoding distortion.
    """

    n_packets: int
    event_mse: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "event_mse", np.asarray(self.event_mse, dtype=float))
        if self.n_packets < 1 or self.n_packets > MAX_ENUMERATION_PACKETS:
            raise TableError(
                f"event table: n_packets must be in [1, {MAX_ENUMERATION_PACKETS}]"
            )
        if self.event_mse.shape != (1 << self.n_packets,):
            raise TableError(
                f"event table: need exactly 2^{self.n_packets} distortions"
            )
        masks = np.arange(1 << self.n_packets)
        for i in range(self.n_packets):
            bit = 1 << i
            with_bit = masks[(masks & bit) != 0]
            if np.any(self.event_mse[with_bit & ~bit] < self.event_mse[with_bit]):
                raise TableError(
                    f"event table: losing packet {i} must not decrease distortion"
                )

    @property
    def source_mse(self) -> float:
        return float(self.event_mse[-1])


def _check_loss_probs(loss_probs, n: int) -> np.ndarray:
    arr = np.asarray(loss_probs, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"loss vector must have length {n}, got shape {arr.shape}")
    if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
        raise ValueError("loss probabilities must be in [0,1]")
    return arr


def exact_gop_distortion(events: EventDistortionTable, loss_probs: Sequence[float]) -> float:
    """Expected GOP distortion by total enumeration of loss events.

    Weights each event k by prod_i (1-p_i)^[received] * p_i^[lost]; the
    weights form a probability distribution, so the result lies between the
    best and worst event distortions.
    """
    p = _check_loss_probs(loss_probs, events.n_packets)
    received = _received_masks(events.n_packets)
    weights = np.where(received == 1, 1.0 - p, p).prod(axis=1)
    return float(weights @ events.event_mse)


def first_order_gop_distortion(
    source_mse: float, sensitivities: Sequence[float], loss_probs: Sequence[float]
) -> float:
    """Linear distortion model around the loss-free point: d + sum(lambda_i p_i).

    Accumulates packet by packet; the optimizer's vectorized evaluation uses
    the same accumulation order so both paths agree bit for bit.
    """
    lam = np.asarray(sensitivities, dtype=float)
    p = _check_loss_probs(loss_probs, lam.size)
    d = float(source_mse)
    for i in range(lam.size):
        d = d + float(lam[i] * p[i])
    return d


def lambda_from_events(events: EventDistortionTable, packet_index: int) -> float:
    """Per-packet sensitivity: distortion(only this packet lost) - distortion(all received)."""
    if not 0 <= packet_index < events.n_packets:
        raise ValueError(f"packet_index {packet_index} out of range")
    full = (1 << events.n_packets) - 1
    only_lost = full & ~(1 << packet_index)
    return float(events.event_mse[only_lost] - events.event_mse[full])


def mse_to_psnr(mse):
    """PSNR in dB for 8-bit samples: 10*log10(255^2 / mse). Elementwise on arrays."""
    arr = np.asarray(mse, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("mse_to_psnr: mse must be > 0")
    out = 10.0 * np.log10(PSNR_PEAK**2 / arr)
    return float(out) if np.isscalar(mse) or arr.ndim == 0 else out
