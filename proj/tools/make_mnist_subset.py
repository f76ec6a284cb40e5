#!/usr/bin/env python3
"""Build IDX training files from the 10,000-digit MNIST subset bundled in
the `mnist` npm package (cazala/mnist).

Usage:
    make_mnist_subset.py OUT_DIR [--package DIR]

Without --package the script runs `npm pack mnist` in a temp directory.
Pixels in the package are byte/255 rounded to three decimals, so the
original bytes are recovered exactly by round(v * 255). Digits are
interleaved round-robin (0,1,...,9,0,1,...) so label order resembles the
shuffled MNIST training file.
"""
import argparse
import gzip
import json
import pathlib
import struct
import subprocess
import tarfile
import tempfile


def load_package(pkg: pathlib.Path):
    digits = []
    for d in range(10):
        raw = json.loads((pkg / "src" / "digits" / f"{d}.json").read_text())["data"]
        n = len(raw) // 784
        imgs = [bytes(round(v * 255) for v in raw[k * 784:(k + 1) * 784]) for k in range(n)]
        digits.append(imgs)
    return digits


def fetch_package(tmp: pathlib.Path) -> pathlib.Path:
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True,
                   stdout=subprocess.DEVNULL)
    tgz = next(tmp.glob("mnist-*.tgz"))
    with tarfile.open(tgz) as tf:
        tf.extractall(tmp)
    return tmp / "package"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--package")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as td:
        pkg = pathlib.Path(args.package) if args.package else fetch_package(pathlib.Path(td))
        digits = load_package(pkg)

    images, labels = [], []
    for k in range(max(len(d) for d in digits)):
        for label, imgs in enumerate(digits):
            if k < len(imgs):
                images.append(imgs[k])
                labels.append(label)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(images)
    # mtime=0 keeps the gzip bytes reproducible
    with gzip.GzipFile(out / "train-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(b"".join(images))
    with gzip.GzipFile(out / "train-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(labels))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
