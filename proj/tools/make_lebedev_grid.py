#!/usr/bin/env python3
"""Writes a Lebedev quadrature as a sphgrid v1 file.

Usage: make_lebedev_grid.py <sh_order> <out.sphgrid>

The rule of polynomial degree 2*order+1 integrates products of spherical
harmonics up to `order` exactly. Requires scipy >= 1.15.
"""
import sys

import numpy as np
from scipy.integrate import lebedev_rule


def main() -> None:
    order = int(sys.argv[1])
    out = sys.argv[2]
    xyz, weights = lebedev_rule(2 * order + 1)
    azimuth = np.mod(np.arctan2(xyz[1], xyz[0]), 2 * np.pi)
    colatitude = np.arccos(np.clip(xyz[2], -1.0, 1.0))
    with open(out, "w", newline="\n") as f:
        f.write(f"sphgrid v1 {len(weights)} {order}\n")
        for a, c, w in zip(azimuth, colatitude, weights):
            f.write(f"{a:.17g} {c:.17g} {w:.17g}\n")


if __name__ == "__main__":
    main()
