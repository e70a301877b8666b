"""Grayscale image I/O (PGM always, PNG when Pillow is available) and
plain-text kernel files."""

import os

import numpy as np

from .tensorops import as_image, validate_kernel


def load_image(path):
    """Load a grayscale image, mapping 8-bit intensities to [0, 1]."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        return read_pgm(path)
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise ValueError(f"unsupported image format {ext!r} (install Pillow "
                         "for non-PGM files)")
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def save_image(path, img):
    """Save to 8-bit grayscale, clipping to [0, 1] first."""
    img = as_image(img)
    data = np.clip(np.round(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        write_pgm(path, data)
        return
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise ValueError(f"unsupported image format {ext!r} (install Pillow "
                         "for non-PGM files)")
    PILImage.fromarray(data, mode="L").save(path)


def read_pgm(path):
    """Read a P2 (ASCII) or P5 (binary) portable graymap as floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()

    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"not a PGM file: magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"bad PGM maxval {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        count = width * height
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        arr = np.array(data[pos:].split(), dtype=np.float64)
        if arr.size != width * height:
            raise ValueError("PGM pixel count mismatch")
    return arr.astype(np.float64).reshape(height, width) / maxval


def write_pgm(path, data, binary=True):
    """Write 8-bit grayscale data (uint8 array) as P5 (or P2) PGM."""
    data = np.asarray(data)
    if data.dtype != np.uint8:
        raise ValueError("write_pgm expects uint8 data")
    h, w = data.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(data.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in data:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())


def save_kernel_txt(path, k):
    """Kernel as whitespace-separated rows of decimals."""
    k = as_image(k)
    with open(path, "w") as fh:
        for row in k:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_kernel_txt(path, validate=True):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(tok) for tok in line.split()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"malformed kernel file {path!r}")
    k = np.array(rows)
    return validate_kernel(k) if validate else k


def save_kernel_image(path, k):
    """Kernel rendered as a max-normalized grayscale image."""
    k = as_image(k)
    peak = k.max()
    save_image(path, k / peak if peak > 0 else k)
