#!/usr/bin/env python3
# Copyright 2026 The mtgp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the sensor-like CSV fixtures under tests/fixtures.

Three stations share a daily cycle and a slow drift with station-specific
lags, gains and noise. Hourly ISO-8601 timestamps; a few readings are missing
(empty field or NaN), as in real monitoring exports.
"""

import argparse
import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

HOURS = 144
START = datetime(2026, 3, 2, tzinfo=timezone.utc)
STATIONS = [
    # label, gain, lag (hours), offset, noise sd
    ("north", 1.0, 0.0, 21.0, 0.6),
    ("centre", 1.4, 1.5, 27.5, 0.8),
    ("harbour", 0.8, -2.0, 18.0, 0.5),
]
MISSING = {("north", 40): "", ("centre", 77): "NaN", ("centre", 78): "", ("harbour", 101): "NaN"}


def latent(t: float) -> float:
    daily = math.sin(2 * math.pi * t / 24.0) + 0.35 * math.sin(2 * math.pi * t / 12.0 + 0.7)
    drift = 0.8 * math.sin(2 * math.pi * t / 96.0)
    return 4.0 * daily + 3.0 * drift


def stamp(hour: int) -> str:
    return (START + timedelta(hours=hour)).strftime("%Y-%m-%dT%H:%M:%SZ")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    parser.add_argument("--seed", type=int, default=20260302)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    for label, gain, lag, offset, sd in STATIONS:
        for h in range(HOURS):
            value = offset + gain * latent(h - lag) + rng.gauss(0.0, sd)
            text = MISSING.get((label, h), f"{value:.2f}")
            rows.append((stamp(h), text, label))

    with open(args.out / "stations.csv", "w", newline="\n") as f:
        f.write("timestamp,value,station\n")
        for r in rows:
            f.write(",".join(r) + "\n")

    # The same first station as a single-task file without a task column.
    with open(args.out / "north.csv", "w", newline="\n") as f:
        f.write("timestamp,value\n")
        for ts, text, label in rows:
            if label == "north":
                f.write(f"{ts},{text}\n")

    with open(args.out / "config.json", "w", newline="\n") as f:
        f.write(
            """{
  "kernels": ["GCSM-CC", "MOSM", "CSM", "SM-LMC"],
  "q": 3,
  "seed": 7,
  "data": {"source": "csv", "paths": ["stations.csv"], "task_column": "station"},
  "splits": ["random_half", "first_half", "last_half"],
  "train": {"max_iters": 150, "restarts": 1}
}
"""
        )


if __name__ == "__main__":
    main()
