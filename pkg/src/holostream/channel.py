"""Per-slot link state: path loss, moving-blocker field, SNR and screening.

Geometry is static (fixed gNB ring, fixed UE); time enters through the
blockage field, which evolves between segments, and through per-segment
shadowing redraws. A snapshot of every link is taken at segment start and
held for the segment.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GnbSite:
    id: int
    position: tuple[float, float, float]  # meters, z = antenna height


@dataclass(frozen=True)
class UeState:
    position: tuple[float, float, float]  # meters, z = device height


@dataclass(frozen=True)
class Blocker:
    position: tuple[float, float]
    velocity: tuple[float, float]  # m/s
    radius: float


@dataclass(frozen=True, eq=False)
class BlockageField:
    """Poisson field of moving disk blockers inside a circular region.

    Internally array-of-struct free: positions/velocities are (N,2) arrays so
    per-segment stepping and intersection tests stay vectorized. The field
    owns its RNG stream (used for boundary respawns).
    """

    region_radius: float
    density: float  # blockers per m^2
    positions: np.ndarray
    velocities: np.ndarray
    radii: np.ndarray
    rng: np.random.Generator

    @property
    def blockers(self) -> list[Blocker]:
        return [
            Blocker(tuple(p), tuple(v), float(r))
            for p, v, r in zip(self.positions, self.velocities, self.radii)
        ]

    def __len__(self) -> int:
        return len(self.radii)


@dataclass(frozen=True)
class LinkSnapshot:
    """One link's state at a segment boundary."""

    link_id: int
    snr_db: float
    blocked: bool
    blockage_loss_db: float
    path_loss_db: float
    is_candidate: bool


@dataclass(frozen=True)
class ChannelParams:
    """Radio and blockage constants needed to turn geometry into SNR."""

    frequency_ghz: float = 30.0
    path_loss_exponent: float = 2.0
    shadow_sigma_db: float = 4.0
    noise_figure_db: float = 9.0
    bandwidth_hz: float = 400e6
    antenna_gain_db: float = 25.0
    snr_threshold_db: float = 15.0
    blockage_loss_db: float = 20.0


def noise_floor_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power over the signal bandwidth, in dBm."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be > 0")
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def path_loss_db(
    distance_3d: float,
    frequency_ghz: float,
    exponent: float = 2.0,
    shadow_sigma_db: float = 0.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Close-in reference path loss with optional log-normal shadowing.

    PL = 32.4 + 20*log10(f_GHz) + 10*n*log10(d) + chi, chi ~ N(0, sigma^2).
    Distances below the 1 m reference are clamped (with a logged warning).
    """
    if distance_3d < 1.0:
        log.warning("path_loss_db: distance %.3f m below 1 m reference, clamped", distance_3d)
        distance_3d = 1.0
    pl = 32.4 + 20.0 * math.log10(frequency_ghz) + 10.0 * exponent * math.log10(distance_3d)
    if shadow_sigma_db > 0.0:
        if rng is None:
            raise ValueError("shadowing requested but no rng supplied")
        pl += shadow_sigma_db * rng.standard_normal()
    return pl


def link_snr(
    tx_power_dbm: float,
    path_loss_db: float,
    blockage_loss_db: float,
    noise_figure_db: float,
    bandwidth_hz: float,
    antenna_gain_db: float,
):
    """Link SNR in dB; linear in every dB-domain term. Elementwise on arrays."""
    noise = noise_floor_dbm(bandwidth_hz, noise_figure_db)
    return tx_power_dbm + antenna_gain_db - path_loss_db - blockage_loss_db - noise


def spawn_blockers(
    density: float,
    region_radius: float,
    rng: np.random.Generator,
    speed_min: float = 0.5,
    speed_max: float = 1.5,
    blocker_radius: float = 0.3,
) -> BlockageField:
    """Draw a Poisson(density * pi * r^2) population uniformly over the disk."""
    if density < 0:
        raise ValueError("density must be >= 0")
    n = int(rng.poisson(density * math.pi * region_radius**2))
    # uniform over the disk: radius via sqrt of a uniform draw
    rad = region_radius * np.sqrt(rng.random(n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    positions = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    speed = rng.uniform(speed_min, speed_max, n)
    heading = rng.uniform(0.0, 2.0 * math.pi, n)
    velocities = np.column_stack([speed * np.cos(heading), speed * np.sin(heading)])
    return BlockageField(
        region_radius=region_radius,
        density=density,
        positions=positions,
        velocities=velocities,
        radii=np.full(n, blocker_radius),
        rng=rng,
    )


def step_blockers(field: BlockageField, dt: float) -> BlockageField:
    """Advance blockers by dt; leavers respawn on the boundary heading inward.

    The population size is conserved. Respawn draws come from the field's own
    RNG stream, so evolution is deterministic per seed.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if len(field) == 0:
        return field
    pos = field.positions + field.velocities * dt
    vel = field.velocities.copy()
    out = np.linalg.norm(pos, axis=1) > field.region_radius
    n_out = int(np.count_nonzero(out))
    if n_out:
        rng = field.rng
        theta = rng.uniform(0.0, 2.0 * math.pi, n_out)
        pos[out, 0] = field.region_radius * np.cos(theta)
        pos[out, 1] = field.region_radius * np.sin(theta)
        speed = np.linalg.norm(field.velocities[out], axis=1)
        # heading within +-90 deg of the inward normal
        inward = theta + math.pi + rng.uniform(-math.pi / 2, math.pi / 2, n_out)
        vel[out, 0] = speed * np.cos(inward)
        vel[out, 1] = speed * np.sin(inward)
    return replace(field, positions=pos, velocities=vel)


def _segment_point_distances(a: np.ndarray, b: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from 2-d points to the segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def blockage_loss(
    gnb: GnbSite,
    ue: UeState,
    field: BlockageField,
    loss_db: float,
) -> float:
    """Attenuation on the gNB-UE link: loss_db if any blocker disk intersects
    the link's ground projection, else 0. Binary, no accumulation across
    simultaneous blockers.
    """
    if len(field) == 0:
        return 0.0
    a = np.asarray(gnb.position[:2], dtype=float)
    b = np.asarray(ue.position[:2], dtype=float)
    d = _segment_point_distances(a, b, field.positions)
    return loss_db if bool(np.any(d <= field.radii)) else 0.0


def snapshot_links(
    sites: Sequence[GnbSite],
    ue: UeState,
    field: BlockageField,
    power_alloc_dbm: Mapping[int, float],
    params: ChannelParams,
    shadowing_db: Mapping[int, float] | None = None,
) -> list[LinkSnapshot]:
    """Per-link SNR snapshot and candidate screening at a segment boundary.

    Shadowing is frozen per segment: the caller draws one value per link and
    passes it here (omitted = no shadowing). A link is a candidate when its
    snapshot SNR is >= the screening threshold (inclusive). Links with no
    power allocation are skipped.
    """
    snapshots = []
    for site in sites:
        if site.id not in power_alloc_dbm:
            continue
        d3 = math.dist(site.position, ue.position)
        pl = path_loss_db(d3, params.frequency_ghz, params.path_loss_exponent)
        if shadowing_db is not None:
            pl += shadowing_db[site.id]
        bl = blockage_loss(site, ue, field, params.blockage_loss_db)
        snr = float(
            link_snr(
                power_alloc_dbm[site.id],
                pl,
                bl,
                params.noise_figure_db,
                params.bandwidth_hz,
                params.antenna_gain_db,
            )
        )
        snapshots.append(
            LinkSnapshot(
                link_id=site.id,
                snr_db=snr,
                blocked=bl > 0.0,
                blockage_loss_db=bl,
                path_loss_db=pl,
                is_candidate=snr >= params.snr_threshold_db,
            )
        )
    return snapshots


def ring_sites(n_links: int, radius_m: float, gnb_height_m: float) -> list[GnbSite]:
    """Evenly spaced gNB ring centered on the origin."""
    sites = []
    for k in range(n_links):
        ang = 2.0 * math.pi * k / n_links
        sites.append(
            GnbSite(id=k, position=(radius_m * math.cos(ang), radius_m * math.sin(ang), gnb_height_m))
        )
    return sites
