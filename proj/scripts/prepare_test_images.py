#!/usr/bin/env python3
"""Prepare the 256x256 8-bit grayscale PGM benchmark set.

The denoising benchmark runs over the eight classic test images
(cameraman, lena, barbara, house, peppers, living_room, boat, mandrill).
Those originals are not vendored here. With --download this script
fetches them from public mirrors; without network it falls back to
photographic stand-ins bundled with scikit-image, converted
deterministically and written under the canonical names.

Usage:
    python3 scripts/prepare_test_images.py --out build/data/images [--download]
"""

import argparse
import os
import sys

CANONICAL = [
    "cameraman",
    "lena",
    "barbara",
    "house",
    "peppers",
    "living_room",
    "boat",
    "mandrill",
]

MIRRORS = {
    # USC-SIPI miscellaneous set and common academic mirrors
    "cameraman": ["https://www.math.hkust.edu.hk/~masyleung/Teaching/CAS/MATLAB/image/images/cameraman.jpg"],
    "lena": ["https://sipi.usc.edu/database/download.php?vol=misc&img=4.2.04"],
    "barbara": ["https://www.math.hkust.edu.hk/~masyleung/Teaching/CAS/MATLAB/image/images/barbara.jpg"],
    "house": ["https://sipi.usc.edu/database/download.php?vol=misc&img=4.1.05"],
    "peppers": ["https://sipi.usc.edu/database/download.php?vol=misc&img=4.2.07"],
    "living_room": ["https://www.math.hkust.edu.hk/~masyleung/Teaching/CAS/MATLAB/image/images/livingroom.jpg"],
    "boat": ["https://sipi.usc.edu/database/download.php?vol=misc&img=boat.512"],
    "mandrill": ["https://sipi.usc.edu/database/download.php?vol=misc&img=4.2.03"],
}

# scikit-image ships these photos inside the wheel, so the fallback works
# fully offline. Chosen for content similarity to the canonical images
# (e.g. gravel stands in for mandrill's fine texture).
STANDINS = {
    "cameraman": "camera",
    "lena": "astronaut",
    "barbara": "brick",
    "house": "rocket",
    "peppers": "coffee",
    "living_room": "chelsea",
    "boat": "coins",
    "mandrill": "gravel",
}


def to_gray_256(arr):
    """Deterministic conversion: luma, center crop to square, resize to 256."""
    import numpy as np

    arr = np.asarray(arr)
    if arr.ndim == 3:
        arr = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
    arr = arr.astype(np.float64)
    if arr.max() <= 1.0:
        arr = arr * 255.0

    h, w = arr.shape
    side = min(h, w)
    y0 = (h - side) // 2
    x0 = (w - side) // 2
    arr = arr[y0 : y0 + side, x0 : x0 + side]

    if side % 256 == 0:
        f = side // 256
        arr = arr.reshape(256, f, 256, f).mean(axis=(1, 3))
    else:
        from PIL import Image

        img = Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8))
        arr = np.asarray(img.resize((256, 256), Image.LANCZOS)).astype(np.float64)

    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def write_pgm(path, arr):
    with open(path, "wb") as f:
        f.write(b"P5\n256 256\n255\n")
        f.write(arr.tobytes())


def try_download(name, out_path):
    import io
    import urllib.request

    for url in MIRRORS.get(name, []):
        try:
            with urllib.request.urlopen(url, timeout=20) as resp:
                data = resp.read()
            from PIL import Image
            import numpy as np

            img = Image.open(io.BytesIO(data))
            write_pgm(out_path, to_gray_256(np.asarray(img)))
            return True
        except Exception as e:  # noqa: BLE001 - any failure falls through
            print(f"  download failed for {name} from {url}: {e}")
    return False


def standin(name, out_path):
    import skimage.data

    source = STANDINS[name]
    arr = getattr(skimage.data, source)()
    write_pgm(out_path, to_gray_256(arr))
    return source


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output directory for PGMs")
    ap.add_argument("--download", action="store_true",
                    help="try fetching the canonical images before falling back")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    used_standins = []
    for name in CANONICAL:
        out_path = os.path.join(args.out, f"{name}.pgm")
        if os.path.exists(out_path):
            print(f"  {name}.pgm already present, keeping it")
            continue
        if args.download and try_download(name, out_path):
            print(f"  {name}.pgm downloaded")
            continue
        source = standin(name, out_path)
        used_standins.append((name, source))
        print(f"  {name}.pgm written from scikit-image '{source}' (stand-in)")

    if used_standins:
        print("NOTE: stand-in content is used for:",
              ", ".join(f"{n} (<- {s})" for n, s in used_standins))
        print("Re-run with --download on a networked machine to fetch the originals.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
