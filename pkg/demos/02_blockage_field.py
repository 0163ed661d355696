#!/usr/bin/env python3
"""Moving-blocker field: spawn, step, and screen links against the threshold.

Draws one field realization over the gNB ring, then measures how often links
are blocked as the blocker density grows, and how many candidates survive
screening per segment in the loss-sensitive radio regime.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from holostream import (
    blockage_loss,
    ring_sites,
    snapshot_links,
    spawn_blockers,
    step_blockers,
)
from holostream.channel import UeState
from holostream.config import config_from_dict

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = config_from_dict({"radio": {"total_power_dbm": 20.0, "antenna_gain_db": 10.0}})
sites = cfg.sites()
ue = cfg.ue()
params = cfg.channel_params()
gop = cfg.gop_seconds

# one field snapshot, drawn
field = spawn_blockers(0.05, 30.0, np.random.default_rng(7))
print(f"spawned {len(field)} blockers at density 0.05 /m^2 in a 30 m disk")

fig, axes = plt.subplots(1, 2, figsize=(11, 5))
axes[0].scatter(field.positions[:, 0], field.positions[:, 1], s=8, alpha=0.5, label="blockers")
for s in sites:
    blocked = blockage_loss(s, ue, field, params.blockage_loss_db) > 0
    axes[0].plot(
        [0, s.position[0]], [0, s.position[1]],
        color="crimson" if blocked else "seagreen", lw=2,
    )
    axes[0].annotate(f"gNB {s.id}", (s.position[0], s.position[1]))
axes[0].add_patch(plt.Circle((0, 0), 30.0, fill=False, ls=":"))
axes[0].set_aspect("equal")
axes[0].set_title("field snapshot (red = blocked link)")
axes[0].legend(loc="upper right")

# blocked fraction and surviving candidates vs density
densities = np.array([0.0, 0.01, 0.03, 0.05, 0.08, 0.1, 0.15])
blocked_frac, cand_mean = [], []
for d in densities:
    rng = np.random.default_rng(42)
    field = spawn_blockers(d, 30.0, rng)
    shadow_rng = np.random.default_rng(43)
    blocked = candidates = total = 0
    for _ in range(1500):
        field = step_blockers(field, gop)
        shadow = {s.id: params.shadow_sigma_db * shadow_rng.standard_normal() for s in sites}
        snaps = snapshot_links(
            sites, ue, field, {s.id: cfg.screening_power_dbm for s in sites}, params, shadow
        )
        blocked += sum(s.blocked for s in snaps)
        candidates += sum(s.is_candidate for s in snaps)
        total += len(snaps)
    blocked_frac.append(blocked / total)
    cand_mean.append(candidates / 1500)
    print(
        f"density {d:5.2f}: blocked fraction {blocked_frac[-1]:.3f}, "
        f"mean candidates {cand_mean[-1]:.2f} of {len(sites)}"
    )

ax2 = axes[1]
ax2.plot(densities, blocked_frac, "o-", label="blocked-slot fraction")
ax2.plot(densities, np.array(cand_mean) / len(sites), "s-", label="candidate fraction")
ax2.set_xlabel("blocker density (1/m$^2$)")
ax2.set_title("screening vs density (20 dBm budget, 10 dB gain)")
ax2.legend()
ax2.grid(alpha=0.3)

fig.tight_layout()
fig.savefig(OUT / "02_blockage_field.png", dpi=120)
print(f"wrote {OUT / '02_blockage_field.png'}")
