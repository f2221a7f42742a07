"""Writes the small PNG fixtures used by test_image_io.cpp."""
import os
import numpy as np
from PIL import Image

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "png")

if __name__ == "__main__":
    y, x = np.mgrid[0:5, 0:7]
    g8 = (x * 30 + y * 7).astype(np.uint8)
    # 16-bit grey with high bytes equal to g8 and a low byte of 0x80
    Image.fromarray((g8.astype(np.uint16) * 256 + 0x80).astype(np.uint16)).save(os.path.join(OUT, "gray16.png"))
    rgb = np.stack([g8, 255 - g8, (x * 11).astype(np.uint8)], axis=-1)
    Image.fromarray(rgb, "RGB").quantize(colors=256, method=Image.Quantize.MAXCOVERAGE).save(os.path.join(OUT, "palette.png"))
    rgba = np.concatenate([rgb, np.full((5, 7, 1), 100, np.uint8)], axis=-1)
    Image.fromarray(rgba, "RGBA").save(os.path.join(OUT, "rgba.png"))
    Image.fromarray(((x + y) % 2 * 255).astype(np.uint8)).convert("1").save(os.path.join(OUT, "bilevel.png"))
    pal = np.array(Image.open(os.path.join(OUT, "palette.png")).convert("RGB"))
    print("palette decoded[1,2]", pal[1, 2].tolist(), "source", rgb[1, 2].tolist())
    print(Image.open(os.path.join(OUT, "gray16.png")).mode, Image.open(os.path.join(OUT, "bilevel.png")).mode)
