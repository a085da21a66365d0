"""Regenerate the synthetic 24-hour two-player case-study CSVs.

Observations follow a smooth daily profile of normalized power in [0, 1].
Each hour both players issue beta forecasts on 99 tau levels: P1 is centered
closer to the realized value and is sharper than P2. Output is deterministic.

    python scenarios/case_study/generate.py
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from wagermarket.dist import Beta, GridSpec

HERE = Path(__file__).resolve().parent
SEED = 20240601
HOURS = 24
TAUS = GridSpec(99).taus
# (bias scale, concentration) per player
PLAYERS = {"P1": (0.03, 60.0), "P2": (0.12, 12.0)}


def daily_profile(rng):
    h = np.arange(HOURS)
    base = 0.45 + 0.3 * np.sin(2 * np.pi * (h - 6) / 24)
    return np.clip(base + rng.normal(0, 0.05, HOURS), 0.02, 0.98)


def main():
    rng = np.random.Generator(np.random.Philox(SEED))
    obs = daily_profile(rng)
    with (HERE / "observations.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "observation"])
        for h, y in enumerate(obs, start=1):
            w.writerow([h, f"{y:.6f}"])
    with (HERE / "forecasts.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "hour", "tau", "value"])
        for pid, (bias, conc) in PLAYERS.items():
            for h, y in enumerate(obs, start=1):
                mean = float(np.clip(y + rng.normal(0, bias), 0.03, 0.97))
                dist = Beta(mean * conc, (1 - mean) * conc)
                for t, v in zip(TAUS, dist.ppf(TAUS)):
                    w.writerow([pid, h, f"{t:.2f}", f"{v:.6f}"])


if __name__ == "__main__":
    main()
