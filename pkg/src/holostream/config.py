"""Run configuration: sectioned YAML with strict validation and full defaults.

An empty document yields the complete default configuration (30 GHz, six
gNBs on a 10 m ring, 60 dBm budget, 15 dB screening threshold, QP ladder
27/37/45, 1.5 dB balance threshold, densities 0.03/0.05/0.1 for sweeps).
Unknown keys are rejected; every validation failure names the offending key.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import curves as curves_mod
from .channel import ChannelParams, GnbSite, UeState, ring_sites
from .errors import ConfigError
from .optimizer import OptimizerConfig, PhyContext, SlotConfig
from .phy import CurveSet, McsMode, MmibCurve, default_mcs_table, validate_mcs_table

POLICIES = ("clo", "baseline", "both")


@dataclass(frozen=True)
class RadioSection:
    frequency_ghz: float = 30.0
    bandwidth_hz: float = 400e6
    noise_figure_db: float = 9.0
    antenna_gain_db: float = 25.0
    total_power_dbm: float = 60.0
    snr_threshold_db: float = 15.0
    path_loss_exponent: float = 2.0
    shadow_sigma_db: float = 4.0


@dataclass(frozen=True)
class TopologySection:
    n_links: int = 6
    ring_radius_m: float = 10.0
    gnb_height_m: float = 10.0
    ue_height_m: float = 1.5
    gnb_positions: tuple[tuple[float, float, float], ...] | None = None


@dataclass(frozen=True)
class BlockageSection:
    density: float = 0.05
    region_radius_m: float = 30.0
    blocker_radius_m: float = 0.3
    speed_min_mps: float = 0.5
    speed_max_mps: float = 1.5
    loss_db: float = 20.0


@dataclass(frozen=True)
class PhySection:
    mcs_table: tuple[McsMode, ...] = default_mcs_table()
    curve_file: str | None = None
    mmib_curves: tuple[tuple[int, tuple[tuple[float, float], ...]], ...] | None = None
    slot_duration_s: float = 125e-6
    tb_per_slot_unit: float = 2.0


@dataclass(frozen=True)
class OptimizerSection:
    qp_set: tuple[int, ...] = (27, 37, 45)
    d_t_psnr_db: float = 1.5
    power_split_fractions: tuple[float, ...] = (
        0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
    )
    baseline_loss_target: float = 0.01


@dataclass(frozen=True)
class SimSection:
    n_segments: int = 100
    frames_per_gop: int = 4
    frame_rate_fps: float = 30.0
    seed: int = 1
    policy: str = "both"
    densities: tuple[float, ...] = (0.03, 0.05, 0.1)
    sweep_seeds: int = 20


@dataclass(frozen=True)
class IoSection:
    out_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    radio: RadioSection = RadioSection()
    topology: TopologySection = TopologySection()
    blockage: BlockageSection = BlockageSection()
    phy: PhySection = PhySection()
    optimizer: OptimizerSection = OptimizerSection()
    sim: SimSection = SimSection()
    io: IoSection = IoSection()

    # -- derived builders ----------------------------------------------------

    @property
    def gop_seconds(self) -> float:
        return self.sim.frames_per_gop / self.sim.frame_rate_fps

    @property
    def screening_power_dbm(self) -> float:
        # candidate screening at the equal two-link split of the budget
        return self.radio.total_power_dbm + 10.0 * math.log10(0.5)

    def channel_params(self) -> ChannelParams:
        r = self.radio
        return ChannelParams(
            frequency_ghz=r.frequency_ghz,
            path_loss_exponent=r.path_loss_exponent,
            shadow_sigma_db=r.shadow_sigma_db,
            noise_figure_db=r.noise_figure_db,
            bandwidth_hz=r.bandwidth_hz,
            antenna_gain_db=r.antenna_gain_db,
            snr_threshold_db=r.snr_threshold_db,
            blockage_loss_db=self.blockage.loss_db,
        )

    def sites(self) -> list[GnbSite]:
        t = self.topology
        if t.gnb_positions is not None:
            return [GnbSite(id=k, position=p) for k, p in enumerate(t.gnb_positions)]
        return ring_sites(t.n_links, t.ring_radius_m, t.gnb_height_m)

    def ue(self) -> UeState:
        return UeState(position=(0.0, 0.0, self.topology.ue_height_m))

    def load_curves(self) -> CurveSet:
        p = self.phy
        if p.mmib_curves is not None:
            return {
                mod: MmibCurve(mod, [pt[0] for pt in pts], [pt[1] for pt in pts])
                for mod, pts in p.mmib_curves
            }
        if p.curve_file is not None:
            return curves_mod.read_curves_csv(p.curve_file)
        return curves_mod.load_default_curves()

    def slot_config(self) -> SlotConfig:
        return SlotConfig(
            slot_duration_s=self.phy.slot_duration_s,
            tb_per_slot_unit=self.phy.tb_per_slot_unit,
        )

    def phy_context(self) -> PhyContext:
        return PhyContext(
            curves=self.load_curves(),
            noise_figure_db=self.radio.noise_figure_db,
            bandwidth_hz=self.radio.bandwidth_hz,
            antenna_gain_db=self.radio.antenna_gain_db,
            slots=self.slot_config(),
            segment_seconds=self.gop_seconds,
        )

    def optimizer_config(self) -> OptimizerConfig:
        o = self.optimizer
        return OptimizerConfig(
            qp_set=o.qp_set,
            mcs_set=self.phy.mcs_table,
            d_t_psnr_db=o.d_t_psnr_db,
            total_power_dbm=self.radio.total_power_dbm,
            power_split_fractions=o.power_split_fractions,
            baseline_loss_target=o.baseline_loss_target,
        )


# -- parsing ------------------------------------------------------------------


def _require(cond: bool, key: str, constraint: str) -> None:
    if not cond:
        raise ConfigError(key, constraint)


def _as_number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _check_keys(raw: Mapping[str, Any], allowed: set[str], section: str) -> None:
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(
            f"{section}.{sorted(unknown)[0]}", "unknown configuration key"
        )


def _scalar_section(cls, raw: Mapping[str, Any], section: str, int_fields=()):
    names = {f.name for f in fields(cls)}
    _check_keys(raw, names, section)
    kwargs = {}
    for name, value in raw.items():
        key = f"{section}.{name}"
        kwargs[name] = _as_int(value, key) if name in int_fields else _as_number(value, key)
    return cls(**kwargs)


def _parse_radio(raw: Mapping[str, Any]) -> RadioSection:
    r = _scalar_section(RadioSection, raw, "radio")
    _require(r.frequency_ghz > 0, "radio.frequency_ghz", "must be > 0")
    _require(r.bandwidth_hz > 0, "radio.bandwidth_hz", "must be > 0")
    _require(r.path_loss_exponent > 0, "radio.path_loss_exponent", "must be > 0")
    _require(r.shadow_sigma_db >= 0, "radio.shadow_sigma_db", "must be >= 0")
    return r


def _parse_topology(raw: Mapping[str, Any]) -> TopologySection:
    raw = dict(raw)
    positions = raw.pop("gnb_positions", None)
    t = _scalar_section(TopologySection, raw, "topology", int_fields={"n_links"})
    if positions is not None:
        key = "topology.gnb_positions"
        if not isinstance(positions, list) or not positions:
            raise ConfigError(key, "expected a non-empty list of [x, y, z] triples")
        parsed = []
        for i, p in enumerate(positions):
            if not isinstance(p, list) or len(p) != 3:
                raise ConfigError(f"{key}[{i}]", "expected an [x, y, z] triple")
            parsed.append(tuple(_as_number(v, f"{key}[{i}]") for v in p))
        t = TopologySection(
            n_links=len(parsed),
            ring_radius_m=t.ring_radius_m,
            gnb_height_m=t.gnb_height_m,
            ue_height_m=t.ue_height_m,
            gnb_positions=tuple(parsed),
        )
    _require(t.n_links >= 2, "topology.n_links", "need at least two links")
    _require(t.ring_radius_m > 0, "topology.ring_radius_m", "must be > 0")
    return t


def _parse_blockage(raw: Mapping[str, Any]) -> BlockageSection:
    b = _scalar_section(BlockageSection, raw, "blockage")
    _require(b.density >= 0, "blockage.density", "must be >= 0")
    _require(b.region_radius_m > 0, "blockage.region_radius_m", "must be > 0")
    _require(b.blocker_radius_m > 0, "blockage.blocker_radius_m", "must be > 0")
    _require(
        0 < b.speed_min_mps <= b.speed_max_mps,
        "blockage.speed_min_mps",
        "need 0 < speed_min_mps <= speed_max_mps",
    )
    _require(b.loss_db >= 0, "blockage.loss_db", "must be >= 0")
    return b


def _parse_mcs_table(raw: Any) -> tuple[McsMode, ...]:
    key = "phy.mcs_table"
    if not isinstance(raw, list) or not raw:
        raise ConfigError(key, "expected a non-empty list of MCS mode mappings")
    mode_fields = {f.name for f in fields(McsMode)}
    modes = []
    for i, entry in enumerate(raw):
        ekey = f"{key}[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(ekey, "expected a mapping")
        _check_keys(entry, mode_fields, ekey)
        try:
            modes.append(McsMode(**entry))
        except (TypeError, ValueError) as exc:
            raise ConfigError(ekey, str(exc)) from exc
    try:
        validate_mcs_table(modes)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc
    return tuple(modes)


def _parse_inline_curves(raw: Any) -> tuple:
    key = "phy.mmib_curves"
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(key, "expected a mapping of modulation_order -> [[snr_db, mmib], ...]")
    out = []
    for mod, pts in sorted(raw.items()):
        mkey = f"{key}.{mod}"
        mod_i = _as_int(mod, mkey)
        if not isinstance(pts, list) or len(pts) < 2:
            raise ConfigError(mkey, "expected a list of at least two [snr_db, mmib] pairs")
        parsed = []
        for j, pt in enumerate(pts):
            if not isinstance(pt, list) or len(pt) != 2:
                raise ConfigError(f"{mkey}[{j}]", "expected an [snr_db, mmib] pair")
            parsed.append((_as_number(pt[0], f"{mkey}[{j}]"), _as_number(pt[1], f"{mkey}[{j}]")))
        try:
            MmibCurve(mod_i, [p[0] for p in parsed], [p[1] for p in parsed])
        except ValueError as exc:
            raise ConfigError(mkey, str(exc)) from exc
        out.append((mod_i, tuple(parsed)))
    return tuple(out)


def _parse_phy(raw: Mapping[str, Any]) -> PhySection:
    names = {f.name for f in fields(PhySection)}
    _check_keys(raw, names, "phy")
    kwargs: dict[str, Any] = {}
    if "mcs_table" in raw:
        kwargs["mcs_table"] = _parse_mcs_table(raw["mcs_table"])
    if "mmib_curves" in raw and raw["mmib_curves"] is not None:
        kwargs["mmib_curves"] = _parse_inline_curves(raw["mmib_curves"])
    if "curve_file" in raw and raw["curve_file"] is not None:
        if not isinstance(raw["curve_file"], str):
            raise ConfigError("phy.curve_file", "expected a path string")
        kwargs["curve_file"] = raw["curve_file"]
    for name in ("slot_duration_s", "tb_per_slot_unit"):
        if name in raw:
            kwargs[name] = _as_number(raw[name], f"phy.{name}")
    p = PhySection(**kwargs)
    _require(p.slot_duration_s > 0, "phy.slot_duration_s", "must be > 0")
    _require(p.tb_per_slot_unit > 0, "phy.tb_per_slot_unit", "must be > 0")
    return p


def _parse_optimizer(raw: Mapping[str, Any]) -> OptimizerSection:
    names = {f.name for f in fields(OptimizerSection)}
    _check_keys(raw, names, "optimizer")
    kwargs: dict[str, Any] = {}
    if "qp_set" in raw:
        key = "optimizer.qp_set"
        if not isinstance(raw["qp_set"], list) or not raw["qp_set"]:
            raise ConfigError(key, "expected a non-empty list of integers")
        qps = tuple(_as_int(q, key) for q in raw["qp_set"])
        _require(all(b > a for a, b in zip(qps, qps[1:])), key, "must be strictly increasing")
        kwargs["qp_set"] = qps
    if "power_split_fractions" in raw:
        key = "optimizer.power_split_fractions"
        if not isinstance(raw["power_split_fractions"], list) or not raw["power_split_fractions"]:
            raise ConfigError(key, "expected a non-empty list of fractions")
        kwargs["power_split_fractions"] = tuple(
            _as_number(v, key) for v in raw["power_split_fractions"]
        )
    for name in ("d_t_psnr_db", "baseline_loss_target"):
        if name in raw:
            kwargs[name] = _as_number(raw[name], f"optimizer.{name}")
    o = OptimizerSection(**kwargs)
    _require(o.d_t_psnr_db > 0, "optimizer.d_t_psnr_db", "must be > 0")
    fr = o.power_split_fractions
    _require(
        all(0 < f < 1 for f in fr) and all(b > a for a, b in zip(fr, fr[1:])),
        "optimizer.power_split_fractions",
        "must be strictly increasing fractions in (0,1)",
    )
    _require(
        0 < o.baseline_loss_target < 1,
        "optimizer.baseline_loss_target",
        "must be in (0,1)",
    )
    return o


def _parse_sim(raw: Mapping[str, Any]) -> SimSection:
    names = {f.name for f in fields(SimSection)}
    _check_keys(raw, names, "sim")
    kwargs: dict[str, Any] = {}
    for name in ("n_segments", "frames_per_gop", "seed", "sweep_seeds"):
        if name in raw:
            kwargs[name] = _as_int(raw[name], f"sim.{name}")
    if "frame_rate_fps" in raw:
        kwargs["frame_rate_fps"] = _as_number(raw["frame_rate_fps"], "sim.frame_rate_fps")
    if "policy" in raw:
        if raw["policy"] not in POLICIES:
            raise ConfigError("sim.policy", f"must be one of {POLICIES}")
        kwargs["policy"] = raw["policy"]
    if "densities" in raw:
        key = "sim.densities"
        if not isinstance(raw["densities"], list) or not raw["densities"]:
            raise ConfigError(key, "expected a non-empty list of densities")
        dens = tuple(_as_number(v, key) for v in raw["densities"])
        _require(all(d >= 0 for d in dens), key, "densities must be >= 0")
        kwargs["densities"] = dens
    s = SimSection(**kwargs)
    _require(s.n_segments >= 1, "sim.n_segments", "must be >= 1")
    _require(s.frames_per_gop >= 1, "sim.frames_per_gop", "must be >= 1")
    _require(s.frame_rate_fps > 0, "sim.frame_rate_fps", "must be > 0")
    _require(s.sweep_seeds >= 1, "sim.sweep_seeds", "must be >= 1")
    return s


def _parse_io(raw: Mapping[str, Any]) -> IoSection:
    _check_keys(raw, {"out_dir"}, "io")
    if "out_dir" in raw:
        if not isinstance(raw["out_dir"], str) or not raw["out_dir"]:
            raise ConfigError("io.out_dir", "expected a non-empty path string")
        return IoSection(out_dir=raw["out_dir"])
    return IoSection()


_SECTION_PARSERS = {
    "radio": _parse_radio,
    "topology": _parse_topology,
    "blockage": _parse_blockage,
    "phy": _parse_phy,
    "optimizer": _parse_optimizer,
    "sim": _parse_sim,
    "io": _parse_io,
}


def config_from_dict(raw: Mapping[str, Any] | None) -> RunConfig:
    """Build a fully-defaulted, validated config from a parsed document."""
    raw = raw or {}
    if not isinstance(raw, Mapping):
        raise ConfigError("<root>", "configuration document must be a mapping")
    _check_keys(raw, set(_SECTION_PARSERS), "<root>")
    sections = {}
    for name, parser in _SECTION_PARSERS.items():
        sub = raw.get(name, {})
        if sub is None:
            sub = {}
        if not isinstance(sub, Mapping):
            raise ConfigError(name, "section must be a mapping")
        sections[name] = parser(sub)
    return RunConfig(**sections)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a YAML config file; an empty file means defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Effective config as a plain dict; load(config_to_dict(cfg)) == cfg."""
    out = asdict(cfg)
    out["phy"]["mcs_table"] = [asdict(m) for m in cfg.phy.mcs_table]
    if cfg.phy.mmib_curves is not None:
        out["phy"]["mmib_curves"] = {
            mod: [[s, b] for s, b in pts] for mod, pts in cfg.phy.mmib_curves
        }
    out["topology"]["gnb_positions"] = (
        None
        if cfg.topology.gnb_positions is None
        else [list(p) for p in cfg.topology.gnb_positions]
    )
    for section in ("optimizer", "sim"):
        for key, val in out[section].items():
            if isinstance(val, tuple):
                out[section][key] = list(val)
    return out


def dump_config(cfg: RunConfig) -> str:
    """Effective config as YAML (used by --print-config)."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)
