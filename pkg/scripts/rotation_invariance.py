"""Check that NDV does not change under quarter turns of the grid.

Rotates seeded random fields (lattice and vectors together) about each axis
and reports the largest deviation of NDV from the unrotated value.
"""
import argparse

import numpy as np

from digidiffeo import synth
from digidiffeo.grid import DisplacementField
from digidiffeo.metrics import analyze


def rotate(field, k, axes):
    i, j = axes
    data = np.array(field.data)
    for _ in range(k % 4):
        data = np.rot90(data, 1, axes=(i, j)).copy()
        data[..., i], data[..., j] = -data[..., j].copy(), data[..., i].copy()
    return DisplacementField.from_array(data)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fields", type=int, default=10)
    ap.add_argument("--size", type=int, default=10)
    ap.add_argument("--amplitude", type=float, default=1.5)
    args = ap.parse_args()

    for seed in range(args.fields):
        f = synth.random_smooth((args.size,) * 3, seed=seed, amplitude=args.amplitude, radius=1)
        base = analyze(f)[0].nd_measure
        worst = max(
            abs(analyze(rotate(f, k, axes))[0].nd_measure - base)
            for axes in ((0, 1), (0, 2), (1, 2))
            for k in (1, 2, 3)
        )
        print(f"seed {seed:3d}  ndv {base:10.5f}  max deviation {worst:.2e}")


if __name__ == "__main__":
    main()
