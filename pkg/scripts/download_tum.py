#!/usr/bin/env python3
"""Fetch the two benchmark sequences from the TUM RGB-D server.

Downloads and unpacks freiburg1_xyz and freiburg2_desk (about 0.9 GB
total) into a root directory, then prints the environment variable the
test suite uses to find them.
"""

import argparse
import sys
import tarfile
import urllib.request
from pathlib import Path

BASE = "https://cvg.cit.tum.de/rgbd/dataset"
SEQUENCES = {
    "freiburg1_xyz": f"{BASE}/freiburg1/rgbd_dataset_freiburg1_xyz.tgz",
    "freiburg2_desk": f"{BASE}/freiburg2/rgbd_dataset_freiburg2_desk.tgz",
}


def fetch(name: str, url: str, root: Path) -> Path:
    dest = root / f"rgbd_dataset_{name}"
    if (dest / "rgb.txt").is_file():
        print(f"{name}: already present, skipping")
        return dest
    archive = root / f"rgbd_dataset_{name}.tgz"
    if not archive.is_file():
        print(f"{name}: downloading {url}")
        tmp = archive.with_suffix(".part")
        with urllib.request.urlopen(url) as resp, open(tmp, "wb") as out:
            while True:
                chunk = resp.read(1 << 20)
                if not chunk:
                    break
                out.write(chunk)
        tmp.rename(archive)
    print(f"{name}: extracting")
    with tarfile.open(archive) as tar:
        tar.extractall(root)
    archive.unlink()
    return dest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--root", default="data", help="directory to place the sequences in"
    )
    parser.add_argument(
        "--sequences",
        nargs="+",
        choices=sorted(SEQUENCES),
        default=sorted(SEQUENCES),
    )
    args = parser.parse_args(argv)
    root = Path(args.root)
    root.mkdir(parents=True, exist_ok=True)
    for name in args.sequences:
        fetch(name, SEQUENCES[name], root)
    print(f"\nexport GAVO_TUM_ROOT={root.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
