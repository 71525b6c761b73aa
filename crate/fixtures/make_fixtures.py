"""Regenerates the synthetic fixture networks in this directory.

three_pixel.json is written by hand and is not touched here.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def dump(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")


def planted(v=6, pixel=3):
    """Class 0 at the origin; class 1 wins once `pixel` reaches its upper bound."""
    w = np.zeros((2, v))
    w[1, pixel] = 1.0
    dump("planted.json", {
        "format_version": 1,
        "input_shape": [1, v],
        "channels": 1,
        "layers": [{"type": "dense", "weight": w.tolist(), "bias": [0.9, 0.0]}],
    })
    dump("planted_input.json", {
        "format_version": 1,
        "point": [0.0] * v,
        "label": 0,
        "domain": {"lower": 0, "upper": 1},
    })


def stripes(side=8, hidden=24, seed=7, margin=240.0):
    """Two-layer template matcher separating horizontal from vertical stripes.

    Each hidden unit responds to the agreement of one random patch with the
    horizontal template minus its agreement with the vertical one. `margin`
    lowers the class-0 logit gap so the certification rates fall strictly
    between 0 and 1 across the experiment grid.
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.indices((side, side))
    horiz = (rows % 2).astype(float).ravel()
    vert = (cols % 2).astype(float).ravel()
    signed = (2 * horiz - 1) - (2 * vert - 1)
    w1 = np.zeros((hidden, side * side))
    for i in range(hidden):
        mask = rng.random(side * side) < 0.35
        w1[i, mask] = signed[mask] * rng.uniform(0.5, 1.5, mask.sum())
    b1 = -0.5 * (w1 @ horiz)
    b1 = b1 + 0.25 * np.abs(b1)
    w2 = np.vstack([np.ones(hidden), -np.ones(hidden)]) * rng.uniform(0.8, 1.2, (2, hidden))
    b2 = np.array([0.0, margin])
    dump("stripes.json", {
        "format_version": 1,
        "input_shape": [side, side],
        "channels": 1,
        "layers": [
            {"type": "dense", "weight": np.round(w1, 4).tolist(), "bias": np.round(b1, 4).tolist()},
            {"type": "relu"},
            {"type": "dense", "weight": np.round(w2, 4).tolist(), "bias": b2.tolist()},
        ],
    })
    dump("stripes_input.json", {
        "format_version": 1,
        "point": horiz.tolist(),
        "label": 0,
        "domain": {"lower": 0, "upper": 1},
    })


if __name__ == "__main__":
    planted()
    stripes()
