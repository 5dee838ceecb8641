#!/usr/bin/env python3
"""Regenerate the PGM test corpus under tests/data from scikit-image sample data."""
import pathlib

import numpy as np
from skimage import data

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"


def mean2(img):
    h, w = img.shape
    blocks = img[: h - h % 2, : w - w % 2].astype(np.float64)
    blocks = blocks.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    return np.clip(np.floor(blocks + 0.5), 0, 255).astype(np.uint8)


def save(name, img):
    h, w = img.shape
    (OUT / name).write_bytes(f"P5 {w} {h} 255\n".encode() + img.tobytes())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    camera256 = mean2(data.camera())
    save("camera256.pgm", camera256)
    save("camera_crop64.pgm", camera256[96:160, 96:160])
    save("grass128.pgm", mean2(mean2(data.grass())))
    save("coins_crop100x90.pgm", data.coins()[100:190, 150:250])


if __name__ == "__main__":
    main()
