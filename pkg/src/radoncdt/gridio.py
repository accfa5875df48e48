"""Grid data types, density normalization and file I/O.

Images are plain 2D ``float64`` arrays (row ``i``, column ``j``).  Pixel
``(i, j)`` sits at ``(x, y) = (j - (W-1)/2, (H-1)/2 - i)``: the origin is the
image center and ``y`` points up.

Sinograms, transport fields and transform representations share one
``(t, theta)`` grid: ``K`` offsets centered on zero with unit spacing (rows)
and ``M`` angles over ``[0, 180)`` degrees (columns).
"""

from __future__ import annotations

import os
import re
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInput, DomainError, IoError, ParseError

MAGIC = b"RCDT"
VERSION = 1
KIND_SINOGRAM = 1
KIND_TRANSPORT = 2
KIND_REPRESENTATION = 3
_HEADER = struct.Struct("<4sBBII")
_MAX_CELLS = 1 << 28

NORMALIZED_ATOL = 1e-9


def t_grid(k: int) -> np.ndarray:
    """Offsets ``t_k`` for ``k`` samples centered at zero with unit spacing."""
    return np.arange(k, dtype=float) - (k - 1) / 2.0


def default_angles(m: int) -> np.ndarray:
    """``m`` equally spaced angles in degrees over ``[0, 180)``."""
    return np.arange(m, dtype=float) * (180.0 / m)


def pixel_coordinates(shape):
    """Return ``(x, y)`` center coordinates for every pixel of ``shape``."""
    h, w = shape
    x = np.arange(w, dtype=float) - (w - 1) / 2.0
    y = (h - 1) / 2.0 - np.arange(h, dtype=float)
    return np.meshgrid(x, y)


@dataclass(frozen=True, eq=False)
class _Grid:
    values: np.ndarray
    angles: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DomainError(f"grid values must be 2D, got shape {values.shape}")
        angles = self.angles
        if angles is None:
            angles = default_angles(values.shape[1])
        angles = np.asarray(angles, dtype=float)
        if angles.shape != (values.shape[1],):
            raise DomainError("one angle per grid column is required")
        values.setflags(write=False)
        angles.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "angles", angles)

    @property
    def shape(self):
        return self.values.shape

    @property
    def t(self) -> np.ndarray:
        return t_grid(self.values.shape[0])

    @property
    def theta(self) -> np.ndarray:
        """Angles in radians."""
        return np.deg2rad(self.angles)


@dataclass(frozen=True, eq=False)
class Sinogram(_Grid):
    """Radon transform samples ``values[k, m]`` at ``(t_k, angles[m])``."""


@dataclass(frozen=True, eq=False)
class TransportField(_Grid):
    """Per-angle monotone maps ``f(t_k, theta_m)`` in pixel units."""


@dataclass(frozen=True, eq=False)
class RcdtRepresentation(_Grid):
    """Transform-space image tied to the template it was computed against."""

    template_hash: bytes = field(default=bytes(8))

    def __post_init__(self):
        super().__post_init__()
        if len(self.template_hash) != 8:
            raise DomainError("template hash must be 8 bytes")
        object.__setattr__(self, "template_hash", bytes(self.template_hash))


# ----------------------------------------------------------------------------
# Images


def as_image(image) -> np.ndarray:
    """Validate ``image`` as a finite, nonnegative 2D array and return a float copy."""
    arr = np.array(image, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"image must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("image contains non-finite pixels")
    if np.any(arr < 0):
        raise DomainError("image contains negative pixels")
    return arr


def is_normalized(image, atol: float = NORMALIZED_ATOL) -> bool:
    arr = np.asarray(image, dtype=float)
    return bool(np.all(arr > 0) and abs(arr.sum() - 1.0) <= atol)


def normalize_density(image, epsilon_rel: float = 1e-8) -> np.ndarray:
    """Turn a nonnegative image into a strictly positive unit-mass density.

    A uniform floor ``epsilon_rel * mean(positive pixels)`` is added before
    dividing by the total, so every output pixel is strictly positive.

    Raises
    ------
    DegenerateInput
        If no pixel is positive.
    DomainError
        If a pixel is negative or not finite.
    """
    arr = as_image(image)
    positive = arr[arr > 0]
    if positive.size == 0:
        raise DegenerateInput("image has no positive pixels")
    if epsilon_rel < 0:
        raise DomainError("epsilon_rel must be nonnegative")
    arr = arr + epsilon_rel * positive.mean()
    return arr / arr.sum()


# ----------------------------------------------------------------------------
# PGM

_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*(\S+)")


def _header_tokens(data: bytes, count: int):
    pos = 0
    out = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ParseError("truncated PGM header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def load_pgm(path) -> np.ndarray:
    """Read a P2 or P5 graymap and scale pixels to ``[0, 1]`` by ``maxval``."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    tokens, pos = _header_tokens(data, 1)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"unsupported PGM magic {magic!r}")
    tokens, pos = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(tok) for tok in tokens[1:])
    except ValueError as exc:
        raise ParseError("non-integer PGM header field") from exc
    if width <= 0 or height <= 0:
        raise ParseError(f"invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise ParseError(f"invalid PGM maxval {maxval}")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = data[pos:pos + n * dtype.itemsize]
        if len(payload) < n * dtype.itemsize:
            raise ParseError("truncated PGM payload")
        raw = np.frombuffer(payload, dtype=dtype).astype(float)
    else:
        body = re.sub(rb"#[^\n\r]*", b"", data[pos:]).split()
        if len(body) < n:
            raise ParseError("truncated PGM payload")
        try:
            raw = np.array([int(tok) for tok in body[:n]], dtype=float)
        except ValueError as exc:
            raise ParseError("non-integer PGM sample") from exc
    if np.any(raw > maxval):
        raise ParseError("PGM sample exceeds maxval")
    return raw.reshape(height, width) / maxval


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def save_pgm(image, path, maxval: int = 255) -> None:
    """Write ``image`` as a binary P5 graymap after min-max rescaling.

    Values are mapped linearly onto ``[0, maxval]`` and rounded half-to-even.
    A constant image has an empty range and is written as all zeros.
    """
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2:
        raise DomainError("image must be 2D")
    if not np.all(np.isfinite(arr)):
        raise DomainError("cannot save an image with non-finite pixels")
    if not 0 < maxval <= 65535:
        raise DomainError(f"invalid maxval {maxval}")
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        q = np.rint((arr - lo) / (hi - lo) * maxval)
    else:
        q = np.zeros_like(arr)
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    _atomic_write(path, header + q.astype(dtype).tobytes())


# ----------------------------------------------------------------------------
# Binary grid container

_KINDS = {
    Sinogram: KIND_SINOGRAM,
    TransportField: KIND_TRANSPORT,
    RcdtRepresentation: KIND_REPRESENTATION,
}


def encode_grid(grid) -> bytes:
    kind = _KINDS.get(type(grid))
    if kind is None:
        raise DomainError(f"cannot serialize {type(grid).__name__}")
    k, m = grid.shape
    digest = getattr(grid, "template_hash", bytes(8))
    values = np.ascontiguousarray(grid.values, dtype="<f8")
    return _HEADER.pack(MAGIC, VERSION, kind, k, m) + values.tobytes() + digest


def decode_grid(data: bytes):
    if len(data) < _HEADER.size:
        raise ParseError("truncated grid header")
    magic, version, kind, k, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad grid magic {magic!r}")
    if version != VERSION:
        raise ParseError(f"unsupported grid version {version}")
    if kind not in (KIND_SINOGRAM, KIND_TRANSPORT, KIND_REPRESENTATION):
        raise ParseError(f"unknown grid kind {kind}")
    if k == 0 or m == 0:
        raise ParseError("grid dimensions must be positive")
    if k * m > _MAX_CELLS:
        raise ParseError(f"grid dimensions {k}x{m} overflow the container limit")
    n_bytes = k * m * 8
    body = data[_HEADER.size:]
    if len(body) != n_bytes + 8:
        raise ParseError("truncated or oversized grid payload")
    values = np.frombuffer(body[:n_bytes], dtype="<f8").reshape(k, m).astype(float)
    digest = body[n_bytes:]
    if kind == KIND_SINOGRAM:
        return Sinogram(values)
    if kind == KIND_TRANSPORT:
        return TransportField(values)
    return RcdtRepresentation(values, template_hash=digest)


def write_grid(grid, path) -> None:
    """Serialize a sinogram, transport field or representation to ``path``."""
    _atomic_write(path, encode_grid(grid))


def read_grid(path):
    """Inverse of :func:`write_grid`; angles are rebuilt as an even ``[0, 180)`` grid."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_grid(data)
