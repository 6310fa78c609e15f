"""Color primitives: transfer functions, primary conversions, CIELAB, CIEDE2000.

Conventions
-----------
Images are numpy arrays, channels last.  "Linear" always means linear-light
values in sRGB primaries unless a function name says otherwise.  Lab uses the
D65 reference white, matching the native white point of sRGB.
"""

from __future__ import annotations

import numpy as np

from .errors import InputRangeError

# Column-major RGB -> XYZ for linear sRGB primaries, D65 white (IEC 61966-2-1).
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

XYZ_TO_SRGB = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)

# Adobe RGB (1998) primaries, D65 white.
ADOBE_TO_XYZ = np.array(
    [
        [0.5767309, 0.1855540, 0.1881852],
        [0.2973769, 0.6273491, 0.0752741],
        [0.0270343, 0.0706872, 0.9911085],
    ]
)

# D65 reference white in XYZ, Y normalised to 1.
D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    """Apply the sRGB electro-optical transfer (gamma-encoded -> linear).

    Input values must lie in [0, 1]; anything else raises
    :class:`InputRangeError` because out-of-range encoded values indicate a
    mis-tagged file rather than legitimate image content.
    """
    u = np.asarray(encoded, dtype=np.float64)
    if u.size and (np.min(u) < 0.0 or np.max(u) > 1.0 or not np.all(np.isfinite(u))):
        raise InputRangeError("encoded sRGB values must lie in [0, 1]")
    low = u <= 0.04045
    out = np.where(low, u / 12.92, ((u + 0.055) / 1.055) ** 2.4)
    return out


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Inverse of :func:`srgb_decode`; input is clamped to [0, 1] first."""
    v = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    low = v <= 0.0031308
    out = np.where(low, v * 12.92, 1.055 * np.power(v, 1.0 / 2.4) - 0.055)
    # keep endpoints exact despite rounding in the power branch
    return np.where(v == 1.0, 1.0, out)


def adobe_linear_to_srgb_linear(img: np.ndarray) -> tuple[np.ndarray, int]:
    """Convert linear Adobe-RGB values to linear sRGB values.

    Both spaces share the D65 white so the conversion is a single 3x3 matrix
    (Adobe->XYZ->sRGB).  Colors outside the sRGB gamut produce negative
    channels; those are clamped to zero and counted.

    Returns ``(converted, n_clipped)`` where ``n_clipped`` is the number of
    channel values that were negative before the clamp.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise InputRangeError("expected a trailing RGB axis of size 3")
    m = XYZ_TO_SRGB @ ADOBE_TO_XYZ
    out = arr @ m.T
    n_clipped = int(np.count_nonzero(out < 0.0))
    if n_clipped:
        out = np.maximum(out, 0.0)
    return out, n_clipped


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Channel mean (R+G+B)/3, the intensity convention used by the metrics."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise InputRangeError("expected a trailing RGB axis of size 3")
    return arr.mean(axis=-1)


_LAB_EPS = (6.0 / 29.0) ** 3
_LAB_KAPPA = 1.0 / (3.0 * (6.0 / 29.0) ** 2)


def linear_srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Linear sRGB -> CIELAB (D65 white).  Works on any (..., 3) array.

    Values above 1 are allowed (the Lab axes simply extend); negatives are
    clamped to zero since reflectance cannot be negative.
    """
    arr = np.maximum(np.asarray(rgb, dtype=np.float64), 0.0)
    xyz = arr @ SRGB_TO_XYZ.T
    t = xyz / D65_WHITE
    f = np.where(t > _LAB_EPS, np.cbrt(t), _LAB_KAPPA * t + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.stack(
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1
    )
    return lab


def ciede2000(lab1: np.ndarray, lab2: np.ndarray) -> np.ndarray:
    """CIEDE2000 color difference, full formula with the hue-rotation term.

    Accepts (..., 3) Lab arrays and broadcasts; returns the matching
    (...)-shaped ΔE00 (a bare float for two single triples).  Parametric
    factors kL = kC = kH = 1.
    """
    p = np.asarray(lab1, dtype=np.float64)
    q = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = p[..., 0], p[..., 1], p[..., 2]
    L2, a2, b2 = q[..., 0], q[..., 1], q[..., 2]

    c1 = np.hypot(a1, b1)
    c2 = np.hypot(a2, b2)
    cbar = 0.5 * (c1 + c2)
    c7 = cbar**7
    g = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0**7)))

    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)

    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    h1p = np.where((b1 == 0.0) & (a1p == 0.0), 0.0, h1p)
    h2p = np.where((b2 == 0.0) & (a2p == 0.0), 0.0, h2p)

    dLp = L2 - L1
    dCp = c2p - c1p

    zero_chroma = (c1p * c2p) == 0.0
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, dh)
    dh = np.where(dh < -180.0, dh + 360.0, dh)
    dh = np.where(zero_chroma, 0.0, dh)
    dHp = 2.0 * np.sqrt(c1p * c2p) * np.sin(np.radians(0.5 * dh))

    Lbar = 0.5 * (L1 + L2)
    Cbarp = 0.5 * (c1p + c2p)

    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbar = np.where(
        habs <= 180.0,
        0.5 * hsum,
        np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)),
    )
    hbar = np.where(zero_chroma, hsum, hbar)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(hbar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * hbar))
        + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0))
    )

    dtheta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cp7 = Cbarp**7
    rc = 2.0 * np.sqrt(cp7 / (cp7 + 25.0**7))
    rt = -np.sin(np.radians(2.0 * dtheta)) * rc

    lm50 = (Lbar - 50.0) ** 2
    sl = 1.0 + 0.015 * lm50 / np.sqrt(20.0 + lm50)
    sc = 1.0 + 0.045 * Cbarp
    sh = 1.0 + 0.015 * Cbarp * t

    term_l = dLp / sl
    term_c = dCp / sc
    term_h = dHp / sh
    de = np.sqrt(term_l**2 + term_c**2 + term_h**2 + rt * term_c * term_h)
    if de.ndim == 0:
        return float(de)
    return de
