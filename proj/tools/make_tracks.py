#!/usr/bin/env python3
"""Author the bundled track files from straight/arc segment lists.

Each layout is a list of ("S", length) and ("L"|"R", radius, degrees)
segments. Two straights per layout are marked free ("S", None); their
lengths are solved so the loop closes. Waypoints are emitted roughly
every `spacing` meters.

    python3 tools/make_tracks.py assets/tracks
"""

import math
import sys
from pathlib import Path

import numpy as np

LAYOUTS = {
    # Straights for both speed bands, tight (low-speed) and gentle
    # (high-speed) turns in both directions.
    "train": [
        ("S", None),
        ("L", 90.0, 90.0),
        ("S", 60.0),
        ("R", 220.0, 40.0),
        ("S", 40.0),
        ("L", 220.0, 40.0),
        ("S", 100.0),
        ("L", 90.0, 90.0),
        ("S", 60.0),
        ("L", 230.0, 60.0),
        ("S", None),
        ("R", 90.0, 60.0),
        ("S", 50.0),
        ("L", 95.0, 120.0),
        ("S", 60.0),
        ("L", 240.0, 60.0),
    ],
    "validation": [
        ("S", None),
        ("L", 100.0, 90.0),
        ("S", 60.0),
        ("R", 230.0, 40.0),
        ("S", 50.0),
        ("L", 95.0, 130.0),
        ("S", 100.0),
        ("L", 250.0, 50.0),
        ("S", None),
        ("R", 100.0, 50.0),
        ("S", 60.0),
        ("L", 120.0, 180.0),
    ],
    "test1": [
        ("S", None),
        ("L", 95.0, 120.0),
        ("S", 80.0),
        ("R", 100.0, 60.0),
        ("S", 60.0),
        ("L", 210.0, 60.0),
        ("S", 120.0),
        ("L", 95.0, 150.0),
        ("S", 100.0),
        ("R", 210.0, 30.0),
        ("S", None),
        ("L", 105.0, 120.0),
    ],
    "test2": [
        ("S", 100.0),
        ("L", 120.0, 70.0),
        ("S", 60.0),
        ("R", 90.0, 70.0),
        ("S", 100.0),
        ("L", 200.0, 90.0),
        ("S", 80.0),
        ("L", 90.0, 100.0),
        ("S", None),
        ("R", 260.0, 30.0),
        ("S", 50.0),
        ("L", 110.0, 130.0),
        ("S", None),
        ("L", 150.0, 70.0),
    ],
    "test3": [
        ("S", None),
        ("L", 100.0, 90.0),
        ("S", None),
        ("R", 100.0, 90.0),
        ("S", 80.0),
        ("L", 100.0, 90.0),
        ("S", 80.0),
        ("L", 230.0, 90.0),
        ("S", 100.0),
        ("L", 130.0, 90.0),
        ("S", 50.0),
        ("R", 240.0, 45.0),
        ("S", 50.0),
        ("L", 240.0, 45.0),
        ("S", 60.0),
        ("L", 150.0, 90.0),
    ],
}


def walk(segments, spacing):
    """Turtle-walk the segments; returns points and the end pose."""
    x, y, h = 0.0, 0.0, 0.0
    pts = [(x, y)]
    for seg in segments:
        if seg[0] == "S":
            length = seg[1]
            n = max(1, round(length / spacing))
            for k in range(1, n + 1):
                d = length * k / n
                pts.append((x + d * math.cos(h), y + d * math.sin(h)))
            x += length * math.cos(h)
            y += length * math.sin(h)
        else:
            sign = 1.0 if seg[0] == "L" else -1.0
            radius, sweep = seg[1], math.radians(seg[2])
            cx = x - sign * radius * math.sin(h)
            cy = y + sign * radius * math.cos(h)
            n = max(2, round(radius * sweep / spacing))
            for k in range(1, n + 1):
                a = h + sign * sweep * k / n
                pts.append((cx + sign * radius * math.sin(a),
                            cy - sign * radius * math.cos(a)))
            h += sign * sweep
            x, y = pts[-1]
    return pts, (x, y, h)


def close_layout(segments):
    free = [i for i, s in enumerate(segments) if s[0] == "S" and s[1] is None]
    assert len(free) == 2, "need exactly two free straights"
    turn = sum((1 if s[0] == "L" else -1) * s[2] for s in segments if s[0] != "S")
    assert abs(turn - 360.0) < 1e-9, f"net turn {turn}"

    def end_with(lengths):
        segs = list(segments)
        for idx, length in zip(free, lengths):
            segs[idx] = ("S", length)
        _, (x, y, _) = walk(segs, 1e9)
        return np.array([x, y]), segs

    base, _ = end_with([0.0, 0.0])
    ex, _ = end_with([1.0, 0.0])
    ey, _ = end_with([0.0, 1.0])
    jac = np.column_stack([ex - base, ey - base])
    lengths = np.linalg.solve(jac, -base)
    assert (lengths > 20.0).all(), f"free straights too short: {lengths}"
    _, segs = end_with(list(lengths))
    return segs


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "assets/tracks")
    out.mkdir(parents=True, exist_ok=True)
    for name, segments in LAYOUTS.items():
        segs = close_layout(segments)
        pts, (x, y, _) = walk(segs, 10.0)
        assert math.hypot(x, y) < 1e-6
        pts = pts[:-1]
        length = sum(math.dist(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))
        with open(out / f"{name}.track", "w") as f:
            f.write(f"# {name} track, {len(pts)} waypoints, ~{length:.0f} m\n")
            f.write("closed=true\n")
            f.write("half_width=4\n")
            for px, py in pts:
                f.write(f"{px:.4f} {py:.4f}\n")
        print(f"{name}: {len(pts)} points, {length:.1f} m")


if __name__ == "__main__":
    main()
