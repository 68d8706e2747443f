#!/usr/bin/env python3
"""Render a synthetic TUM-layout sequence for offline experiments.

The camera wobbles smoothly in front of a textured plane, so the
sequence has exact ground truth and works everywhere the real datasets
are not available.
"""

import argparse
import sys

from gavo.synthetic import write_tum_sequence


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", help="sequence directory to create")
    parser.add_argument("--frames", type=int, default=30)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--height", type=int, default=240)
    parser.add_argument("--plane-z", type=float, default=2.0, dest="plane_z")
    parser.add_argument("--fps", type=float, default=30.0)
    args = parser.parse_args(argv)
    out = write_tum_sequence(
        args.out_dir,
        args.frames,
        width=args.width,
        height=args.height,
        plane_z=args.plane_z,
        fps=args.fps,
    )
    print(f"wrote {args.frames} frames to {out}")
    print(f"run with: gavo run --dataset {out} --calib {out}/calib.txt --out <dir>")
    return 0


if __name__ == "__main__":
    sys.exit(main())
