#!/usr/bin/env python3
"""Build a small balanced MNIST subset in IDX format.

Source: the `mnist` npm package (MIT, J. Cazala), which ships 10,000 MNIST
digits as per-class JSON arrays of 784 floats in [0, 1].

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-subset
"""
import json
import random
import struct
import sys
from pathlib import Path

PIXELS = 28 * 28
TRAIN_PER_CLASS = 200
TEST_PER_CLASS = 100


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main(src, dst):
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    train, test = [], []
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        count = len(raw) // PIXELS
        assert count >= TRAIN_PER_CLASS + TEST_PER_CLASS, (digit, count)
        samples = [
            [min(255, max(0, round(v * 255))) for v in raw[i * PIXELS:(i + 1) * PIXELS]]
            for i in range(TRAIN_PER_CLASS + TEST_PER_CLASS)
        ]
        train += [(s, digit) for s in samples[:TRAIN_PER_CLASS]]
        test += [(s, digit) for s in samples[TRAIN_PER_CLASS:]]
    rng = random.Random(20240601)
    rng.shuffle(train)
    rng.shuffle(test)
    write_images(dst / "train-images-idx3-ubyte", [s for s, _ in train])
    write_labels(dst / "train-labels-idx1-ubyte", [l for _, l in train])
    write_images(dst / "t10k-images-idx3-ubyte", [s for s, _ in test])
    write_labels(dst / "t10k-labels-idx1-ubyte", [l for _, l in test])


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
