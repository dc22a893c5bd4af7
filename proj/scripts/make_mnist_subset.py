#!/usr/bin/env python3
"""Build a 10,000-image MNIST subset in IDX format.

The source is the `mnist` npm package, which ships 10,000 MNIST digits as
JSON arrays of pixel intensities in [0, 1] (rounded to three decimals, so
round(v * 255) recovers the original byte exactly).

    python3 scripts/make_mnist_subset.py [--package DIR] [--out data/mnist10k]

Without --package the tarball is fetched with `npm pack mnist@1.1.0`.
"""
import argparse
import gzip
import json
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path


def fetch_package(workdir: Path) -> Path:
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tarball = next(workdir.glob("mnist-*.tgz"))
    with tarfile.open(tarball) as tar:
        tar.extractall(workdir)
    return workdir / "package"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--package", type=Path, help="unpacked npm package directory")
    parser.add_argument("--out", type=Path, default=Path("data/mnist10k"))
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch_package(Path(tmp))
        images = bytearray()
        labels = bytearray()
        for digit in range(10):
            raw = json.loads((package / "src" / "digits" / f"{digit}.json").read_text())["data"]
            assert len(raw) % 784 == 0
            images.extend(round(v * 255) for v in raw)
            labels.extend([digit] * (len(raw) // 784))

    count = len(labels)
    args.out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(args.out / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(bytes(images))
    with gzip.GzipFile(args.out / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(bytes(labels))
    print(f"wrote {count} images to {args.out}")


if __name__ == "__main__":
    main()
