#!/usr/bin/env python3
"""Regenerate the test images under tests/fixtures and the kernels under kernels/.

Images are crops of scikit-image sample data. The motion kernel is synthetic:
a smooth random camera path rasterized onto a 17x17 grid.
"""
import argparse
import pathlib

import numpy as np
from PIL import Image
from skimage import data


def save_png(path, arr, mode=None):
    Image.fromarray(arr, mode=mode).save(path)


def write_kernel(path, k):
    k = k / k.sum()
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{k.shape[0]} {k.shape[1]}\n")
        for row in k:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def gaussian(sx, sy, theta, size):
    c, s = np.cos(theta), np.sin(theta)
    ix, iy = 1.0 / sx**2, 1.0 / sy**2
    a = c * c * ix + s * s * iy
    b = c * s * (ix - iy)
    d = s * s * ix + c * c * iy
    r = size // 2
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(float)
    return np.exp(-0.5 * (a * x * x + 2 * b * x * y + d * y * y))


def motion_path(size, seed, steps=4000):
    rng = np.random.default_rng(seed)
    vel = np.zeros(2)
    pos = np.zeros(2)
    pts = []
    for _ in range(steps):
        vel = 0.995 * vel + 0.004 * rng.standard_normal(2)
        pos = pos + vel
        pts.append(pos.copy())
    pts = np.array(pts)
    pts -= pts.mean(axis=0)
    span = np.abs(pts).max()
    pts *= (size // 2 - 1.5) / span
    k = np.zeros((size, size))
    r = size // 2
    for py, px in pts:
        y, x = py + r, px + r
        y0, x0 = int(np.floor(y)), int(np.floor(x))
        fy, fx = y - y0, x - x0
        for dy, wy in ((0, 1 - fy), (1, fy)):
            for dx, wx in ((0, 1 - fx), (1, fx)):
                if 0 <= y0 + dy < size and 0 <= x0 + dx < size:
                    k[y0 + dy, x0 + dx] += wy * wx
    return k


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=pathlib.Path(__file__).resolve().parents[1], type=pathlib.Path)
    args = ap.parse_args()
    fx = args.root / "tests" / "fixtures"
    kd = args.root / "kernels"
    fx.mkdir(parents=True, exist_ok=True)
    kd.mkdir(parents=True, exist_ok=True)

    save_png(fx / "camera_256.png", data.camera()[128:384, 128:384])
    save_png(fx / "astronaut_256.png", data.astronaut()[0:256, 128:384])
    save_png(fx / "coffee_128.png", data.coffee()[100:228, 200:328])
    save_png(fx / "camera_64.png", data.camera()[200:264, 220:284])

    save_png(fx / "tiny_rgb_2x2.png", np.array([[[255, 0, 0], [0, 255, 0]], [[0, 0, 255], [10, 20, 30]]], np.uint8))
    save_png(fx / "gray_1x1_0.png", np.zeros((1, 1), np.uint8))
    save_png(fx / "gray_1x1_255.png", np.full((1, 1), 255, np.uint8))
    Image.fromarray(np.array([[0, 65535], [32768, 1000]], np.uint16)).save(fx / "gray16_2x2.png")
    save_png(fx / "rgba_2x2.png", np.zeros((2, 2, 4), np.uint8), mode="RGBA")

    write_kernel(kd / "motion17_synthetic.txt", motion_path(17, seed=4))
    for name, sx, sy, th in [
        ("gauss_iso_0.7", 0.7, 0.7, 0.0),
        ("gauss_iso_1.2", 1.2, 1.2, 0.0),
        ("gauss_iso_1.6", 1.6, 1.6, 0.0),
        ("gauss_iso_2.0", 2.0, 2.0, 0.0),
        ("gauss_aniso_2.0_1.0_45", 2.0, 1.0, np.pi / 4),
        ("gauss_aniso_3.0_1.5_135", 3.0, 1.5, 3 * np.pi / 4),
    ]:
        write_kernel(kd / f"{name}.txt", gaussian(sx, sy, th, 25))


if __name__ == "__main__":
    main()
