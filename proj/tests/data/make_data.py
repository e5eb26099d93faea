"""Regenerates the photographic test images from scikit-image's bundled data.

All sources are public domain or CC0 (see scikit-image's data/README).
Images are converted to gray (BT.601), resized to 256x256 with
anti-aliasing and stored as 8-bit binary PGM; astronaut is also kept in
color as PPM.
"""
import pathlib

import numpy as np
from skimage import color, data
from skimage.transform import resize

OUT = pathlib.Path(__file__).resolve().parent
SIZE = 256


def to_u8(img):
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def gray(img):
    img = img.astype(float)
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3] / 255.0 if img.max() > 1 else img[..., :3])
    elif img.max() > 1:
        img = img / 255.0
    return to_u8(resize(img, (SIZE, SIZE), anti_aliasing=True))


def write_pnm(path, arr):
    magic = b"P6" if arr.ndim == 3 else b"P5"
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(arr).tobytes())


def main():
    sources = {
        "camera": data.camera(),
        "moon": data.moon(),
        "coins": data.coins(),
        "hubble": data.hubble_deep_field(),
        "astronaut": data.astronaut(),
        "coffee": data.coffee(),
    }
    for name, img in sources.items():
        write_pnm(OUT / f"{name}.pgm", gray(img))
    rgb = resize(data.astronaut() / 255.0, (SIZE, SIZE), anti_aliasing=True)
    write_pnm(OUT / "astronaut_rgb.ppm", to_u8(rgb))


if __name__ == "__main__":
    main()
