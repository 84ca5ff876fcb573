# Copyright 2026 The cfpose Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Builds the image fixtures and their reference segmentation counts.

The reference count uses OpenCV's HSV conversion, independent of the
library's own hexcone code.
"""

import json
import pathlib

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFilter

HERE = pathlib.Path(__file__).resolve().parent


def wall_pattern():
    rng = np.random.default_rng(20260419)
    w, h = 640, 480
    base = np.empty((h, w, 3), np.float64)
    base[...] = (196, 188, 172)
    base += rng.normal(0.0, 6.0, size=(h, w, 1))
    img = Image.fromarray(np.clip(base, 0, 255).astype(np.uint8))
    draw = ImageDraw.Draw(img)
    t = np.linspace(0.0, 2.0 * np.pi, 400)
    r = 120 + 30 * np.cos(3 * t) + 12 * np.sin(2 * t)
    pts = [(320 + ri * np.cos(ti), 240 + 0.8 * ri * np.sin(ti)) for ri, ti in zip(r, t)]
    draw.line(pts + [pts[0]], fill=(205, 30, 35), width=7)
    for cx, cy in [(80, 70), (560, 90), (90, 400), (570, 410)]:
        draw.ellipse((cx - 18, cy - 18, cx + 18, cy + 18), fill=(190, 20, 45))
    # Distractors: orange, pink, dark red shadow.
    draw.rectangle((20, 200, 70, 260), fill=(230, 140, 30))
    draw.rectangle((570, 200, 620, 260), fill=(240, 170, 190))
    draw.rectangle((290, 20, 350, 50), fill=(60, 10, 10))
    img = img.filter(ImageFilter.GaussianBlur(1.2))
    return img


def reference_count(img):
    bgr = cv2.cvtColor(np.asarray(img), cv2.COLOR_RGB2BGR)
    hsv = cv2.cvtColor(bgr, cv2.COLOR_BGR2HSV_FULL).astype(np.float64)
    hue = hsv[..., 0] * 360.0 / 256.0
    sat = hsv[..., 1] / 255.0
    val = hsv[..., 2] / 255.0
    mask = ((hue >= 340.0) | (hue <= 20.0)) & (sat >= 0.5) & (val >= 0.3)
    return int(mask.sum())


def main():
    wall = wall_pattern()
    wall.save(HERE / "wall_pattern.png")
    small = Image.new("RGB", (3, 2))
    small.putdata([(255, 0, 0), (0, 255, 0), (0, 0, 255),
                   (255, 255, 255), (0, 0, 0), (128, 64, 32)])
    small.save(HERE / "small.ppm")
    meta = {
        "wall_pattern.png": {"width": wall.width, "height": wall.height,
                             "reference_red_count": reference_count(wall)},
        "small.ppm": {"width": 3, "height": 2},
    }
    (HERE / "fixtures.json").write_text(json.dumps(meta, indent=2) + "\n")


if __name__ == "__main__":
    main()
