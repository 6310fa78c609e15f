"""Array-level image operations: blur, masked blur, bilinear resampling."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ParameterError

_MASK_SUPPORT_EPS = 1e-12


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur over the two spatial axes.

    Kernel is truncated at radius ceil(3*sigma); edges are handled by
    reflection, which keeps constant images exactly constant.  Works on
    (H, W) and (H, W, C) arrays; channels are blurred independently.
    """
    if not (sigma > 0):
        raise ParameterError("sigma must be > 0, got %r" % (sigma,))
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ParameterError("expected a 2-D or 3-D image array")
    radius = math.ceil(3.0 * sigma)
    out = gaussian_filter1d(arr, sigma, axis=0, mode="reflect", radius=radius)
    out = gaussian_filter1d(out, sigma, axis=1, mode="reflect", radius=radius)
    return out


def masked_blur(
    img: np.ndarray, mask: np.ndarray, sigma: float, weight: np.ndarray | None = None
) -> np.ndarray:
    """Normalised blur of ``img`` restricted to ``mask``.

    Computes blur(img * mask) / blur(mask) so values outside the mask do not
    bleed in, and coverage falloff near mask borders is divided out.  Pixels
    whose blurred mask weight is ~0 (no mask support within the kernel) are
    returned as 0.  ``weight`` may carry a precomputed blur(mask) so callers
    blurring several images against one mask pay for it once.
    """
    arr = np.asarray(img, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if m.shape != arr.shape[:2]:
        raise ParameterError(
            "mask shape %r does not match image %r" % (m.shape, arr.shape[:2])
        )
    mf = m.astype(np.float64)
    weight = gaussian_blur(mf, sigma) if weight is None else np.asarray(weight)
    if arr.ndim == 3:
        num = gaussian_blur(arr * mf[:, :, None], sigma)
        weight_b = weight[:, :, None]
    else:
        num = gaussian_blur(arr * mf, sigma)
        weight_b = weight
    out = np.where(weight_b > _MASK_SUPPORT_EPS, num / np.maximum(weight_b, _MASK_SUPPORT_EPS), 0.0)
    return out


def _axis_taps(n_out: int, n_in: int, lo: int, n: int):
    """Source indices and weights for output samples lo..lo+n of one axis."""
    if n_out == 1 or n_in == 1:
        u = np.full(n, 0.5 * (n_in - 1), dtype=np.float64)
    else:
        u = np.arange(lo, lo + n, dtype=np.float64) * ((n_in - 1) / (n_out - 1))
    i0 = np.clip(np.floor(u).astype(np.int64), 0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, u - i0


def resample_bilinear_window(
    img: np.ndarray,
    new_w: int,
    new_h: int,
    x0: int,
    y0: int,
    win_w: int,
    win_h: int,
) -> np.ndarray:
    """One window of ``resample_bilinear(img, new_w, new_h)``.

    Returns exactly ``resample_bilinear(img, new_w, new_h)[y0:y0+win_h,
    x0:x0+win_w]`` (bitwise: each output pixel's taps and arithmetic are
    identical), but the cost scales with the window, not the full target.
    """
    if new_w < 1 or new_h < 1:
        raise ParameterError("target dimensions must be >= 1")
    if win_w < 1 or win_h < 1:
        raise ParameterError("window dimensions must be >= 1")
    if not (0 <= x0 and x0 + win_w <= new_w and 0 <= y0 and y0 + win_h <= new_h):
        raise ParameterError(
            "window %r outside target %r" % ((x0, y0, win_w, win_h), (new_w, new_h))
        )
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ParameterError("expected a 2-D or 3-D image array")
    h, w = arr.shape[:2]

    ty0, ty1, wy = _axis_taps(new_h, h, y0, win_h)
    tx0, tx1, wx = _axis_taps(new_w, w, x0, win_w)
    wy = wy.reshape(-1, 1)
    wx = wx.reshape(1, -1)
    if arr.ndim == 3:
        wy = wy[:, :, None]
        wx = wx[:, :, None]

    top = arr[ty0][:, tx0] * (1.0 - wx) + arr[ty0][:, tx1] * wx
    bot = arr[ty1][:, tx0] * (1.0 - wx) + arr[ty1][:, tx1] * wx
    return top * (1.0 - wy) + bot * wy


def resample_bilinear(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resampling with corner-aligned coordinates and edge clamping.

    Corner alignment maps output sample i to input coordinate
    i * (n_in - 1) / (n_out - 1), so a same-size resample is the identity and
    upsampling a linear ramp reproduces the ramp exactly.
    """
    return resample_bilinear_window(img, new_w, new_h, 0, 0, new_w, new_h)


def encode_to_uint8(linear_img: np.ndarray) -> np.ndarray:
    """Quantise a linear image to 8-bit after sRGB encoding."""
    from .colorspace import srgb_encode

    enc = srgb_encode(linear_img)
    return np.round(enc * 255.0).astype(np.uint8)
