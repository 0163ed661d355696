"""MMIB curve generation and IO.

The SNR -> MMIB mapping is produced offline: for each SNR grid point, the
mean mutual information per coded bit of a Gray-labelled square QAM
constellation over AWGN is estimated by Monte Carlo with exact posterior
log-likelihood ratios. Curves are made monotone (isotonic regression),
clipped to [0,1], and stored as CSV. A pre-generated default file ships in
the package data.
"""

from __future__ import annotations

import csv
import functools
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import logsumexp

from .errors import ConfigError
from .phy import CurveSet, MmibCurve

DEFAULT_MODULATIONS = (2, 4, 6)
DEFAULT_SNR_GRID_DB = tuple(range(-20, 37))  # 1 dB steps
DEFAULT_SAMPLES = 200_000
DEFAULT_SEED = 1905
_CHUNK = 50_000
_LN2 = float(np.log(2.0))

_CURVE_RESOURCE = "default_mmib_curves.csv"


def gray_pam_levels(bits_per_axis: int) -> np.ndarray:
    """PAM amplitudes indexed by their Gray label (unnormalized)."""
    n = 1 << bits_per_axis
    amps = 2 * np.arange(n) - (n - 1)
    levels = np.empty(n)
    for i, a in enumerate(amps):
        levels[i ^ (i >> 1)] = a
    return levels


def gray_qam_constellation(modulation_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-energy square QAM with independent per-axis Gray labelling.

    Returns (points, bits): points[label] is the symbol for that label and
    bits[label, k] its k-th bit (MSB first; first half of the bits select the
    in-phase axis).
    """
    if modulation_order < 2 or modulation_order % 2:
        raise ValueError("modulation_order must be an even integer >= 2")
    half = modulation_order // 2
    pam = gray_pam_levels(half)
    m = 1 << modulation_order
    points = np.empty(m, dtype=complex)
    bits = np.empty((m, modulation_order), dtype=np.int8)
    for label in range(m):
        points[label] = pam[label >> half] + 1j * pam[label & ((1 << half) - 1)]
        for k in range(modulation_order):
            bits[label, k] = (label >> (modulation_order - 1 - k)) & 1
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return points, bits


def bicm_mmib_monte_carlo(
    snr_db: float,
    modulation_order: int,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of mean mutual information per coded bit.

    Per bit position k: I_k = 1 - E[log2(1 + exp(-s*LLR_k))] with s = +-1 for
    the transmitted bit, LLR computed exactly from the posterior over the
    constellation. Returns the average over bit positions, in [0,1].
    """
    points, bits = gray_qam_constellation(modulation_order)
    n0 = 10.0 ** (-snr_db / 10.0)
    one_sets = [np.flatnonzero(bits[:, k] == 1) for k in range(modulation_order)]
    zero_sets = [np.flatnonzero(bits[:, k] == 0) for k in range(modulation_order)]
    penalty_sum = np.zeros(modulation_order)
    done = 0
    while done < n_samples:
        n = min(_CHUNK, n_samples - done)
        sym = rng.integers(0, len(points), n)
        noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(n0 / 2.0)
        y = points[sym] + noise
        # metric[j, s] = -|y_s - x_j|^2 / n0, log-domain posterior up to a constant
        metric = -np.abs(y[None, :] - points[:, None]) ** 2 / n0
        for k in range(modulation_order):
            llr = logsumexp(metric[one_sets[k]], axis=0) - logsumexp(metric[zero_sets[k]], axis=0)
            sign = np.where(bits[sym, k] == 1, 1.0, -1.0)
            penalty_sum[k] += float(np.sum(np.logaddexp(0.0, -sign * llr))) / _LN2
        done += n
    per_bit = 1.0 - penalty_sum / n_samples
    return float(np.mean(per_bit))


def generate_mmib_curves(
    modulations: Iterable[int] = DEFAULT_MODULATIONS,
    snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID_DB,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> dict[int, MmibCurve]:
    """Estimate curves on the grid, enforce monotonicity, clip to [0,1].

    Deterministic per (seed, parameters): one RNG stream drives all grid
    points in a fixed order.
    """
    grid = np.asarray(sorted(snr_grid_db), dtype=float)
    rng = np.random.default_rng(seed)
    curves = {}
    for mod in modulations:
        raw = np.array(
            [bicm_mmib_monte_carlo(s, mod, n_samples, rng) for s in grid]
        )
        iso = isotonic_regression(raw, increasing=True).x
        curves[mod] = MmibCurve(mod, grid, np.clip(iso, 0.0, 1.0))
    return curves


def write_curves_csv(curves: Mapping[int, MmibCurve], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["modulation_order", "snr_db", "mmib"])
        for mod in sorted(curves):
            c = curves[mod]
            for s, b in zip(c.snr_db, c.mmib):
                w.writerow([mod, f"{s:.4f}", f"{b:.8f}"])


def _curves_from_rows(rows: Iterable[tuple[int, float, float]]) -> dict[int, MmibCurve]:
    by_mod: dict[int, list[tuple[float, float]]] = {}
    for mod, snr, mmib in rows:
        by_mod.setdefault(mod, []).append((snr, mmib))
    curves = {}
    for mod, pts in by_mod.items():
        pts.sort()
        arr = np.asarray(pts)
        curves[mod] = MmibCurve(mod, arr[:, 0], arr[:, 1])
    return curves


def read_curves_csv(path: str | Path) -> dict[int, MmibCurve]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [
                (int(r["modulation_order"]), float(r["snr_db"]), float(r["mmib"]))
                for r in reader
            ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("phy.curve_file", f"malformed curve file {path}: {exc}") from exc
    if not rows:
        raise ConfigError("phy.curve_file", f"curve file {path} is empty")
    return _curves_from_rows(rows)


@functools.lru_cache(maxsize=1)
def load_default_curves() -> CurveSet:
    """Packaged default curves (QPSK/16QAM/64QAM, 1 dB grid)."""
    ref = resources.files(__package__).joinpath(f"data/{_CURVE_RESOURCE}")
    with resources.as_file(ref) as path:
        return read_curves_csv(path)
