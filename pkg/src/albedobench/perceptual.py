"""Perceptual-distance backends for the texture metric.

Two backends implement the same ``distance(crop_a, crop_b) -> float``
contract (0 on identical crops, non-negative, deterministic):

* ``BuiltinPerceptualDistance`` — 1 minus multi-scale structural similarity.
  Dependency-free and deterministic, the default.
* ``ExternalPerceptualDistance`` — ships the crops to a separate process
  over TCP, so a learned similarity model (LPIPS or anything else) can be
  plugged in without adding a framework dependency to this package.

Wire protocol (all little-endian), one request at a time per connection,
connections may be reused:

    request:  magic b"PDX1" | uint32 width | uint32 height
              | crop_a float32[h*w*3] | crop_b float32[h*w*3]
    response: float64 distance

Crops are row-major, RGB channel order.  ``run_backend_server`` is a
reference server implementation usable both for tests and as a template for
wrapping a real model.
"""

from __future__ import annotations

import socket
import struct

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import BackendUnavailable, ParameterError

PROTOCOL_MAGIC = b"PDX1"
_HEADER = struct.Struct("<4sII")

# Per-scale weights from the original multi-scale SSIM paper, truncated to
# three scales and renormalised.
_MSSSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001])
_MSSSIM_WEIGHTS = _MSSSIM_WEIGHTS / _MSSSIM_WEIGHTS.sum()
_WINDOW_SIGMA = 1.5
_WINDOW_RADIUS = 5  # 11x11 window
_C1 = 0.01**2
_C2 = 0.03**2


def _window_filter(x):
    out = gaussian_filter1d(x, _WINDOW_SIGMA, axis=0, mode="reflect", radius=_WINDOW_RADIUS)
    return gaussian_filter1d(out, _WINDOW_SIGMA, axis=1, mode="reflect", radius=_WINDOW_RADIUS)


def _lcs_means(a, b):
    """Mean luminance and contrast-structure SSIM terms for one scale."""
    mu_a = _window_filter(a)
    mu_b = _window_filter(b)
    var_a = _window_filter(a * a) - mu_a * mu_a
    var_b = _window_filter(b * b) - mu_b * mu_b
    cov = _window_filter(a * b) - mu_a * mu_b
    l_map = (2.0 * mu_a * mu_b + _C1) / (mu_a * mu_a + mu_b * mu_b + _C1)
    cs_map = (2.0 * cov + _C2) / (var_a + var_b + _C2)
    axes = (0, 1)
    return l_map.mean(axis=axes), cs_map.mean(axis=axes)


def _downsample2(x):
    h2, w2 = x.shape[0] // 2, x.shape[1] // 2
    x = x[: 2 * h2, : 2 * w2]
    if x.ndim == 3:
        return x.reshape(h2, 2, w2, 2, x.shape[2]).mean(axis=(1, 3))
    return x.reshape(h2, 2, w2, 2).mean(axis=(1, 3))


class BuiltinPerceptualDistance:
    """1 − MS-SSIM over 3 dyadic scales with an 11×11 Gaussian window.

    Inputs are expected in (roughly) [0, 1]; the stabilisation constants
    assume unit dynamic range.  Negative channel-mean terms (possible on
    adversarial inputs) are clamped to 0 before the geometric combination,
    keeping the result in [0, 1].
    """

    name = "builtin-msssim"

    def distance(self, crop_a: np.ndarray, crop_b: np.ndarray) -> float:
        a = np.asarray(crop_a, dtype=np.float64)
        b = np.asarray(crop_b, dtype=np.float64)
        if a.shape != b.shape:
            raise ParameterError("crop shapes differ: %r vs %r" % (a.shape, b.shape))
        if a.ndim == 2:
            a = a[:, :, None]
            b = b[:, :, None]
        if min(a.shape[0], a.shape[1]) < 32:
            raise ParameterError(
                "builtin backend needs crops of side >= 32, got %r" % (a.shape[:2],)
            )
        n_channels = a.shape[2]
        msssim = np.ones(n_channels)
        for scale in range(3):
            l_mean, cs_mean = _lcs_means(a, b)
            l_mean = np.maximum(l_mean, 0.0)
            cs_mean = np.maximum(cs_mean, 0.0)
            if scale < 2:
                msssim = msssim * cs_mean ** _MSSSIM_WEIGHTS[scale]
                a = _downsample2(a)
                b = _downsample2(b)
            else:
                msssim = msssim * (cs_mean * l_mean) ** _MSSSIM_WEIGHTS[scale]
        return float(1.0 - msssim.mean())


class ExternalPerceptualDistance:
    """Client for an external perceptual-distance process (see module doc).

    Keeps one connection per instance (and therefore per worker); reconnects
    once on a dropped connection, then raises BackendUnavailable.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = int(port)
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self.name = "external:%s:%d" % (host, self.port)

    def _connect(self):
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            self._sock = None
            raise BackendUnavailable(
                "cannot reach perceptual backend at %s:%d (%s)" % (self.host, self.port, exc)
            ) from exc

    def close(self):
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def probe(self) -> None:
        """Raise BackendUnavailable unless a round trip succeeds."""
        zero = np.zeros((32, 32, 3), dtype=np.float32)
        self.distance(zero, zero)

    def _request_bytes(self, a: np.ndarray, b: np.ndarray) -> bytes:
        h, w = a.shape[:2]
        header = _HEADER.pack(PROTOCOL_MAGIC, w, h)
        return (
            header
            + np.ascontiguousarray(a, dtype="<f4").tobytes()
            + np.ascontiguousarray(b, dtype="<f4").tobytes()
        )

    def distance(self, crop_a: np.ndarray, crop_b: np.ndarray) -> float:
        a = np.asarray(crop_a, dtype=np.float64)
        b = np.asarray(crop_b, dtype=np.float64)
        if a.shape != b.shape:
            raise ParameterError("crop shapes differ: %r vs %r" % (a.shape, b.shape))
        if a.ndim == 2:
            a = a[:, :, None]
        if b.ndim == 2:
            b = b[:, :, None]
        if a.shape[2] != 3:
            a = np.repeat(a[:, :, :1], 3, axis=2)
            b = np.repeat(b[:, :, :1], 3, axis=2)
        payload = self._request_bytes(a, b)
        for attempt in (0, 1):
            if self._sock is None:
                self._connect()
            try:
                self._sock.sendall(payload)
                reply = _recv_exact(self._sock, 8)
                return struct.unpack("<d", reply)[0]
            except (OSError, BackendUnavailable):
                self.close()
                if attempt == 1:
                    raise BackendUnavailable(
                        "perceptual backend at %s:%d dropped the connection"
                        % (self.host, self.port)
                    )
        raise AssertionError("unreachable")


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise BackendUnavailable("backend closed the connection mid-reply")
        buf += chunk
    return buf


def make_backend(spec: str):
    """Build a backend from a config string: "builtin" or "external:HOST:PORT"."""
    if spec == "builtin":
        return BuiltinPerceptualDistance()
    if spec.startswith("external:"):
        rest = spec[len("external:"):]
        host, sep, port = rest.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ParameterError(
                "external backend spec must be external:HOST:PORT, got %r" % spec
            )
        return ExternalPerceptualDistance(host, int(port))
    raise ParameterError("unknown texture backend %r" % spec)


def run_backend_server(
    host: str,
    port: int,
    fn=None,
    max_requests: int | None = None,
    on_bound=None,
):
    """Reference implementation of the external-backend server side.

    ``fn(crop_a, crop_b) -> float`` computes the distance; defaults to the
    builtin backend.  Serves connections sequentially until ``max_requests``
    requests have been answered (forever when None), then returns the bound
    port.  ``on_bound(port)``, if given, is called once the socket is
    listening — with port 0 this is how a test learns the real port.
    Intended for tests and as a template: a real LPIPS server would replace
    ``fn`` with a model call.
    """
    backend = BuiltinPerceptualDistance()
    if fn is None:
        fn = backend.distance
    served = 0
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as srv:
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(4)
        bound_port = srv.getsockname()[1]
        if on_bound is not None:
            on_bound(bound_port)
        while max_requests is None or served < max_requests:
            conn, _ = srv.accept()
            with conn:
                while max_requests is None or served < max_requests:
                    try:
                        header = _recv_exact(conn, _HEADER.size)
                    except BackendUnavailable:
                        break  # client done with this connection
                    magic, w, h = _HEADER.unpack(header)
                    if magic != PROTOCOL_MAGIC:
                        break
                    n = w * h * 3 * 4
                    a = np.frombuffer(_recv_exact(conn, n), dtype="<f4").reshape(h, w, 3)
                    b = np.frombuffer(_recv_exact(conn, n), dtype="<f4").reshape(h, w, 3)
                    try:
                        value = float(fn(a, b))
                    except Exception:
                        value = float("nan")  # keep the connection alive
                    conn.sendall(struct.pack("<d", value))
                    served += 1
    return bound_port
