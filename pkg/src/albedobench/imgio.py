"""Image file I/O.

Supported formats:

* ``.png``  — 8- or 16-bit via OpenCV; values are normalised to [0, 1] on
  read and quantised on write.  What those values mean (linear light or
  sRGB-encoded) is metadata carried by the dataset manifest, not the file.
* ``.pfm``  — portable float map, 32-bit float, for lossless linear data.
* ``.npy``  — raw numpy arrays, also lossless.

EXR is intentionally not handled here; the bundled OpenCV build has no EXR
codec, and PFM/NPY cover the float use cases.
"""

from __future__ import annotations

import os
import re

import cv2
import numpy as np

from .colorspace import srgb_decode
from .errors import ParameterError

FLOAT_EXTENSIONS = (".pfm", ".npy")
SUPPORTED_EXTENSIONS = (".png",) + FLOAT_EXTENSIONS


def read_pfm(path: str) -> np.ndarray:
    """Read a PFM file into an (H, W) or (H, W, 3) float array.

    PFM stores scanlines bottom-to-top; this reader flips them so row 0 is
    the top row, matching every other array in the package.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    m = re.match(rb"^(PF|Pf)\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s", data)
    if m is None:
        raise ParameterError("not a PFM file: %s" % path)
    color = m.group(1) == b"PF"
    width = int(m.group(2))
    height = int(m.group(3))
    scale = float(m.group(4))
    offset = m.end()
    channels = 3 if color else 1
    count = width * height * channels
    dtype = "<f4" if scale < 0 else ">f4"
    pixels = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    if pixels.size != count:
        raise ParameterError("truncated PFM payload in %s" % path)
    arr = pixels.reshape(height, width, channels)[::-1].astype(np.float64)
    if abs(scale) not in (0.0, 1.0):
        arr = arr * abs(scale)
    return arr[:, :, 0] if channels == 1 else arr


def write_pfm(path: str, arr: np.ndarray) -> None:
    """Write an (H, W) or (H, W, 3) array as little-endian 32-bit PFM."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim == 2:
        header = b"Pf\n"
        payload = a[::-1]
    elif a.ndim == 3 and a.shape[2] == 3:
        header = b"PF\n"
        payload = a[::-1]
    else:
        raise ParameterError("PFM supports (H, W) or (H, W, 3) arrays")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(b"%d %d\n" % (a.shape[1], a.shape[0]))
        fh.write(b"-1.0\n")
        fh.write(payload.astype("<f4").tobytes())


def read_image(path: str) -> np.ndarray:
    """Read an image file into an (H, W, 3) float64 array of stored values.

    PNG values are scaled to [0, 1]; float formats are returned as stored.
    Grayscale files are replicated to three channels.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".npy":
        arr = np.load(path).astype(np.float64)
    elif ext == ".pfm":
        arr = read_pfm(path)
    elif ext == ".png":
        raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise OSError("could not read image: %s" % path)
        if raw.ndim == 3:
            if raw.shape[2] == 4:
                raw = raw[:, :, :3]
            raw = raw[:, :, ::-1]  # BGR -> RGB
        peak = 65535.0 if raw.dtype == np.uint16 else 255.0
        arr = raw.astype(np.float64) / peak
    else:
        raise ParameterError(
            "unsupported image extension %r (supported: %s)"
            % (ext, ", ".join(SUPPORTED_EXTENSIONS))
        )
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParameterError("expected an (H, W, 3) image in %s" % path)
    return arr


def write_image(path: str, arr: np.ndarray, png_bits: int = 16) -> None:
    """Write an image; format picked by extension (.png, .pfm, .npy).

    PNG output clamps to [0, 1] and quantises to ``png_bits`` (8 or 16).
    """
    ext = os.path.splitext(path)[1].lower()
    a = np.asarray(arr, dtype=np.float64)
    if ext == ".npy":
        np.save(path, a.astype(np.float32))
        return
    if ext == ".pfm":
        write_pfm(path, a)
        return
    if ext == ".png":
        if png_bits == 16:
            q = np.round(np.clip(a, 0.0, 1.0) * 65535.0).astype(np.uint16)
        elif png_bits == 8:
            q = np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
        else:
            raise ParameterError("png_bits must be 8 or 16")
        if q.ndim == 3:
            q = q[:, :, ::-1]  # RGB -> BGR
        if not cv2.imwrite(path, q):
            raise OSError("could not write image: %s" % path)
        return
    raise ParameterError(
        "unsupported image extension %r (supported: %s)"
        % (ext, ", ".join(SUPPORTED_EXTENSIONS))
    )


def read_linear(path: str, transfer: str) -> np.ndarray:
    """Read an image and return linear-light values.

    ``transfer`` is the manifest tag for the file: "linear" returns stored
    values unchanged, "srgb" applies the sRGB decode (stored values must then
    be in [0, 1]).
    """
    arr = read_image(path)
    if transfer == "linear":
        return arr
    if transfer == "srgb":
        return srgb_decode(arr)
    raise ParameterError("unknown transfer %r (expected 'linear' or 'srgb')" % transfer)


def read_mask(path: str) -> np.ndarray:
    """Read a mask image; any nonzero pixel (any channel) is True."""
    arr = read_image(path)
    return arr.max(axis=2) > 0.0


def write_mask(path: str, mask: np.ndarray) -> None:
    m = np.asarray(mask, dtype=bool)
    write_image(path, np.repeat(m[:, :, None].astype(np.float64), 3, axis=2), png_bits=8)
