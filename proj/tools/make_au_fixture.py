#!/usr/bin/env python3
"""Regenerate the synthetic AU14 fixture used by the expression tests.

Writes au_fixture.csv, au_fixture_timeline.json and au_fixture_labels.json.
Viewers smile through the punchline windows they understood and stay near
their resting level through the rest, with per-frame sensor noise.
"""

import argparse
import json
import math
import random
from pathlib import Path

FPS = 15
CALIBRATION = 30.0
PUNCHLINES = 16
SPACING = 18.0
LAUGH_LENGTH = 2.5


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    parser.add_argument("--seed", type=int, default=20220427)
    args = parser.parse_args()
    rng = random.Random(args.seed)

    segments = []
    for i in range(PUNCHLINES):
        start = CALIBRATION + 10.0 + i * SPACING
        segments.append({"start": round(start, 3), "end": round(start + LAUGH_LENGTH, 3)})
    duration = segments[-1]["end"] + 10.0
    labels = [rng.random() < 0.5 for _ in segments]
    labels[0], labels[1] = True, False

    # Smile onsets: a short delay after the punchline starts, then a raised
    # plateau that decays back to rest.
    smiles = []
    for seg, understood in zip(segments, labels):
        if understood:
            onset = seg["start"] + rng.uniform(0.2, 1.2)
            smiles.append((onset, rng.uniform(1.5, 3.0), rng.uniform(0.8, 2.0)))

    rest = 0.35
    rows = []
    n = int(round(duration * FPS))
    for k in range(n):
        t = k / FPS
        value = rest + rng.gauss(0.0, 0.08)
        for onset, hold, height in smiles:
            if onset <= t <= onset + hold:
                value += height * (1.0 - math.exp(-(t - onset) * 6.0))
            elif onset + hold < t <= onset + hold + 1.0:
                value += height * math.exp(-(t - onset - hold) * 4.0)
        rows.append((t, min(5.0, max(0.0, value))))

    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "au_fixture.csv", "w") as f:
        f.write("t,au14\n")
        for t, v in rows:
            f.write(f"{t:.4f},{v:.4f}\n")
    with open(args.out_dir / "au_fixture_timeline.json", "w") as f:
        json.dump({"media_duration": duration, "segments": segments}, f, indent=2)
        f.write("\n")
    with open(args.out_dir / "au_fixture_labels.json", "w") as f:
        json.dump({"understood": labels}, f)
        f.write("\n")


if __name__ == "__main__":
    main()
