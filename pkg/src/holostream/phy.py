"""Physical-layer error chain: SNR -> MMIB -> block error rates -> packet loss.

A link is abstracted by its per-slot SNR. A per-modulation lookup curve maps
SNR to mean mutual information per coded bit (MMIB, in [0,1]); a Gaussian
cumulative model maps MMIB to coding-block error rate; transport-block and
packet loss follow from independent-block products. All scalar operations
also accept numpy arrays elementwise, which the optimizer relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import erfc

from .errors import ConfigError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class McsMode:
    """One modulation-and-coding scheme.

    mmib_threshold is the MMIB at which the coding-block error rate is 0.5;
    mmib_spread sets the width of the transition (Gaussian cumulative model).
    """

    id: int
    modulation_order: int  # bits/symbol: 2 QPSK, 4 16QAM, 6 64QAM
    code_rate: float
    mmib_threshold: float
    mmib_spread: float
    tb_size_bits: int = 8192
    cb_size_bits: int = 2048

    def __post_init__(self):
        if not 0.0 < self.mmib_threshold < 1.0:
            raise ValueError(f"mcs {self.id}: mmib_threshold must be in (0,1)")
        if self.mmib_spread <= 0.0:
            raise ValueError(f"mcs {self.id}: mmib_spread must be > 0")
        if not 0.0 < self.code_rate <= 1.0:
            raise ValueError(f"mcs {self.id}: code_rate must be in (0,1]")
        if self.cb_size_bits < 1 or self.tb_size_bits < self.cb_size_bits:
            raise ValueError(f"mcs {self.id}: need tb_size_bits >= cb_size_bits >= 1")

    @property
    def spectral_efficiency(self) -> float:
        return self.modulation_order * self.code_rate

    @property
    def n_cb_per_tb(self) -> int:
        return -(-self.tb_size_bits // self.cb_size_bits)


def default_mcs_table() -> tuple[McsMode, ...]:
    """Five placeholder modes, QPSK 1/2 up to 64QAM 3/4.

    Threshold/spread pairs are chosen so that per-CB BLER is strictly ordered
    by mode at every MMIB in [0,1] (the adjacent-mode crossings sit above
    MMIB 1.26) and so that every mode has a usable low-error tail at MMIB=1.
    These are configuration defaults, overridable in the config file.
    """
    return (
        McsMode(1, 2, 0.50, 0.30, 0.08),
        McsMode(2, 2, 0.75, 0.42, 0.07),
        McsMode(3, 4, 0.50, 0.55, 0.06),
        McsMode(4, 4, 0.75, 0.68, 0.05),
        McsMode(5, 6, 0.75, 0.80, 0.04),
    )


def validate_mcs_table(modes: Sequence[McsMode]) -> None:
    """Check the table-level ordering invariant: id and efficiency both increase."""
    for a, b in zip(modes, modes[1:]):
        if b.id <= a.id:
            raise ValueError(f"mcs table: ids must increase ({a.id} then {b.id})")
        if b.spectral_efficiency <= a.spectral_efficiency:
            raise ValueError(
                f"mcs table: spectral efficiency must increase with id "
                f"(mode {a.id}: {a.spectral_efficiency}, mode {b.id}: {b.spectral_efficiency})"
            )


@dataclass(frozen=True, eq=False)
class MmibCurve:
    """Piecewise-linear SNR(dB) -> MMIB lookup for one modulation order."""

    modulation_order: int
    snr_db: np.ndarray
    mmib: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "snr_db", np.asarray(self.snr_db, dtype=float))
        object.__setattr__(self, "mmib", np.asarray(self.mmib, dtype=float))
        if self.snr_db.ndim != 1 or self.snr_db.shape != self.mmib.shape:
            raise ValueError("curve: snr_db and mmib must be 1-d arrays of equal length")
        if self.snr_db.size < 2:
            raise ValueError("curve: need at least two points")
        if np.any(np.diff(self.snr_db) <= 0):
            raise ValueError("curve: snr_db must be strictly increasing")
        if np.any(np.diff(self.mmib) < 0):
            raise ValueError("curve: mmib must be non-decreasing")
        if self.mmib[0] < 0.0 or self.mmib[-1] > 1.0:
            raise ValueError("curve: mmib must stay within [0,1]")


CurveSet = Mapping[int, MmibCurve]


def mmib_from_snr(snr_db, modulation_order: int, curves: CurveSet):
    """Interpolate MMIB at the given SNR; clamps to the curve's end values."""
    curve = curves.get(modulation_order)
    if curve is None:
        raise ConfigError(
            "phy.mmib_curves",
            f"no MMIB curve for modulation order {modulation_order}",
        )
    return np.interp(snr_db, curve.snr_db, curve.mmib)


def cb_bler(mmib, mcs: McsMode):
    """Coding-block error rate from MMIB: 0.5*erfc((mmib-b)/(sqrt(2)*c)).

    Equals 0.5 at the threshold and is strictly decreasing in MMIB.
    """
    x = (mmib - mcs.mmib_threshold) / (_SQRT2 * mcs.mmib_spread)
    return np.clip(0.5 * erfc(x), 0.0, 1.0)


def tb_bler(cb_blers: Sequence[float]) -> float:
    """Transport-block error rate: 1 - prod(1 - C_i) over its coding blocks."""
    arr = np.asarray(cb_blers, dtype=float)
    if arr.size == 0:
        raise ValueError("tb_bler: need at least one coding block")
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise ValueError("tb_bler: block error rates must be in [0,1]")
    return float(1.0 - np.prod(1.0 - arr))


def packet_loss_rate(tb_blers: Sequence[float]) -> float:
    """Packet loss: 1 - prod(1 - T_i) over the transport blocks it spans."""
    arr = np.asarray(tb_blers, dtype=float)
    if arr.size == 0:
        raise ValueError("packet_loss_rate: need at least one transport block")
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise ValueError("packet_loss_rate: block error rates must be in [0,1]")
    return float(1.0 - np.prod(1.0 - arr))


def packetize(packet_size_bits: int, mcs: McsMode) -> tuple[int, int]:
    """Blocks covering one packet: (transport blocks, coding blocks per TB).

    The last blocks are padded to full size; padding counts toward error
    probability.
    """
    if packet_size_bits < 1:
        raise ValueError("packetize: packet_size_bits must be >= 1")
    n_tb = -(-packet_size_bits // mcs.tb_size_bits)
    return n_tb, mcs.n_cb_per_tb


def _ipow(base, exponents) -> np.ndarray:
    """base ** exponent for non-negative integer exponents.

    Binary exponentiation built from plain multiplies. Unlike numpy's float
    pow (whose SIMD kernel rounds differently from its scalar path), every
    multiply is correctly rounded, so the result is bit-identical for any
    array shape — which the optimizer's vectorized scan relies on.
    """
    b, e = np.broadcast_arrays(
        np.asarray(base, dtype=float), np.asarray(exponents, dtype=np.int64)
    )
    out = np.ones(b.shape, dtype=float)
    b = b.copy()
    e = e.copy()
    while True:
        odd = (e & 1) == 1
        out = np.where(odd, out * b, out)
        e >>= 1
        if not e.any():
            return out
        b = b * b


def chained_loss(cb, n_cb_per_tb: int, n_tb):
    """Packet loss when all coding blocks share one BLER value.

    Closed form of the TB/packet product chain for a flat channel:
    p = 1 - ((1-cb)^n_cb)^n_tb. Elementwise on arrays; scalar and array
    callers produce bit-identical values.
    """
    tb = 1.0 - _ipow(1.0 - np.asarray(cb, dtype=float), n_cb_per_tb)
    return 1.0 - _ipow(1.0 - tb, n_tb)


@dataclass(frozen=True)
class PhyEvaluation:
    """Full error-chain result for one packet on one link/MCS."""

    mmib: float
    cb_bler: float
    tb_bler: float
    packet_loss: float
    n_tb: int
    n_cb_per_tb: int


def evaluate_phy(
    snr_db: float,
    mcs: McsMode,
    packet_size_bits: int,
    curves: CurveSet,
) -> PhyEvaluation:
    """Chain SNR -> MMIB -> CB BLER -> TB BLER -> packet loss for one packet.

    All coding blocks of the packet see the same MMIB (one SNR per link per
    slot, flat channel within a segment), so the block products reduce to the
    closed form in chained_loss.
    """
    n_tb, n_cb = packetize(packet_size_bits, mcs)
    beta = mmib_from_snr(snr_db, mcs.modulation_order, curves)
    cb = cb_bler(beta, mcs)
    tb = 1.0 - _ipow(1.0 - np.asarray(cb, dtype=float), n_cb)
    loss = 1.0 - _ipow(1.0 - tb, n_tb)
    return PhyEvaluation(
        mmib=float(beta),
        cb_bler=float(cb),
        tb_bler=float(tb),
        packet_loss=float(loss),
        n_tb=n_tb,
        n_cb_per_tb=n_cb,
    )
