"""Grayscale image helpers: validation, seeded RNG streams and PGM/PNG I/O.

Images are 2D ``float64`` numpy arrays with samples in [0, 1], indexed
``[row, col]``.  Width and height must both be at least 8.
"""

from pathlib import Path

import numpy as np

MIN_SIDE = 8


class ImageError(ValueError):
    """Raised for arrays that do not satisfy the image contract."""


def as_image(data, *, clamp=False):
    """Validate ``data`` as an image and return it as a float64 array.

    With ``clamp=True`` out-of-range samples are clipped into [0, 1];
    otherwise they raise ``ImageError``.
    """
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ImageError(f"expected a 2D grayscale array, got shape {img.shape}")
    h, w = img.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ImageError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}")
    if not np.all(np.isfinite(img)):
        raise ImageError("image contains non-finite samples")
    if clamp:
        return np.clip(img, 0.0, 1.0)
    if img.min() < 0.0 or img.max() > 1.0:
        raise ImageError("image samples must lie in [0, 1]")
    return img


def clamp01(img):
    return np.clip(img, 0.0, 1.0)


def same_shape(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ImageError(f"dimension mismatch: {a.shape} vs {b.shape}")


def rng_stream(seed, *tags):
    """Return a numpy Generator backed by Philox (counter-based, 64-bit).

    The stream is keyed by ``seed`` plus integer ``tags`` through
    ``SeedSequence`` so that independent consumers never share draws and
    the bit stream is identical on every platform.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    entropy = [seed, *[int(t) for t in tags]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


# ---------------------------------------------------------------- file I/O


def _read_pgm(raw):
    # P5 header: magic, width, height, maxval, each separated by whitespace;
    # '#' comments may appear between tokens.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageError("truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte before the raster
    if tokens[0] != b"P5":
        raise ImageError("only binary PGM (P5) is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise ImageError(f"invalid PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = w * h
    if len(raw) - pos < count * dtype.itemsize:
        raise ImageError("truncated PGM raster")
    body = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    return body.reshape(h, w).astype(np.float64) / maxval


def _write_pgm(path, img, bits):
    maxval = 255 if bits == 8 else 65535
    q = np.round(clamp01(img) * maxval)
    dtype = np.dtype("u1") if bits == 8 else np.dtype(">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes())


def load_image(path):
    """Read an 8/16-bit grayscale PGM (P5) or PNG into a unit-range image."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return as_image(_read_pgm(path.read_bytes()))
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return as_image(arr / 65535.0, clamp=True)
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return as_image(arr / 255.0)


def save_image(path, img, bits=8):
    """Write ``img`` as PGM (P5) or grayscale PNG depending on the suffix."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    img = as_image(img, clamp=True)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        _write_pgm(path, img, bits)
        return
    from PIL import Image as PILImage

    if bits == 8:
        q = np.round(img * 255.0).astype(np.uint8)
        PILImage.fromarray(q).save(path, format="PNG")
    else:
        q = np.round(img * 65535.0).astype(np.uint16)
        PILImage.fromarray(q).save(path, format="PNG")
