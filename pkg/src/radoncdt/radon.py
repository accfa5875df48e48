"""Forward Radon transform by line integration of the nearest-neighbour image, inverse by filtered back-projection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import DomainError
from .gridio import (
    NORMALIZED_ATOL,
    Sinogram,
    as_image,
    default_angles,
    normalize_density,
    pixel_coordinates,
    t_grid,
)


def default_t_count(shape) -> int:
    """Smallest odd offset count whose lines cover the image diagonal."""
    n = max(shape)
    return 2 * math.ceil(math.sqrt(2.0) * n / 2.0) + 1


@dataclass(frozen=True)
class RadonConfig:
    """Sampling of the ``(t, theta)`` grid.

    ``t_count=None`` picks :func:`default_t_count` for the image at hand.
    ``step=None`` integrates the nearest-neighbour (piecewise constant)
    image exactly along every line; a number instead walks each line in
    steps of that many pixels and sums the nearest pixel at every step.
    """

    num_angles: int = 180
    t_count: int | None = None
    step: float | None = None

    def __post_init__(self):
        if self.num_angles < 1:
            raise DomainError("num_angles must be >= 1")
        if self.t_count is not None and (self.t_count < 3 or self.t_count % 2 == 0):
            raise DomainError("t_count must be odd and >= 3")
        if self.step is not None and not 0 < self.step <= 1:
            raise DomainError("step must lie in (0, 1]")

    def resolve(self, shape) -> tuple[int, int]:
        k = self.t_count if self.t_count is not None else default_t_count(shape)
        return k, self.num_angles

    @property
    def angles(self) -> np.ndarray:
        return default_angles(self.num_angles)


def _line_frames(t_count, num_angles):
    t = t_grid(t_count)
    theta = np.deg2rad(default_angles(num_angles))
    return t, np.cos(theta), np.sin(theta)


def _line_index(t_count, num_angles, depth):
    return np.broadcast_to(np.arange(t_count * num_angles).reshape(t_count, num_angles, 1), (t_count, num_angles, depth))


def _sampled_lines(height, width, t_count, num_angles, step):
    t, cos, sin = _line_frames(t_count, num_angles)
    n_steps = int(math.floor((t_count - 1) / 2.0 / step))
    s = np.arange(-n_steps, n_steps + 1, dtype=float) * step
    # samples[k, m, s]
    x = t[:, None, None] * cos[None, :, None] - s * sin[None, :, None]
    y = t[:, None, None] * sin[None, :, None] + s * cos[None, :, None]
    col = np.floor(x + (width - 1) / 2.0 + 0.5).astype(np.int64)
    row = np.floor((height - 1) / 2.0 - y + 0.5).astype(np.int64)
    line = _line_index(t_count, num_angles, s.size)
    return line.ravel(), row.ravel(), col.ravel(), np.full(row.size, float(step))


def _traced_lines(height, width, t_count, num_angles):
    # exact length of every line inside every pixel square
    t, cos, sin = _line_frames(t_count, num_angles)
    reach = math.hypot(height, width) / 2.0 + 1.0
    xb = np.arange(width + 1, dtype=float) - width / 2.0
    yb = np.arange(height + 1, dtype=float) - height / 2.0
    tc = t[:, None, None] * cos[None, :, None]
    ts = t[:, None, None] * sin[None, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        # x(s) = t cos - s sin, y(s) = t sin + s cos
        sx = (tc - xb) / sin[None, :, None]
        sy = (yb - ts) / cos[None, :, None]
    ends = np.full(tc.shape, reach)
    cuts = np.concatenate([-ends, ends, sx, sy], axis=2)
    cuts = np.sort(np.clip(np.nan_to_num(cuts, nan=reach, posinf=reach, neginf=-reach), -reach, reach), axis=2)
    length = np.diff(cuts, axis=2).ravel()
    mid = 0.5 * (cuts[..., 1:] + cuts[..., :-1])
    fx = (tc - mid * sin[None, :, None] + width / 2.0).ravel()
    fy = (height / 2.0 - (ts + mid * cos[None, :, None])).ravel()
    line = _line_index(t_count, num_angles, mid.shape[2]).ravel()
    col = np.floor(fx).astype(np.int64)
    row = np.floor(fy).astype(np.int64)

    # a line running exactly along a pixel edge is shared by both neighbours
    on_col = (np.abs(fx - np.rint(fx)) < 1e-9) & (length > 0)
    on_row = (np.abs(fy - np.rint(fy)) < 1e-9) & (length > 0)
    edge = on_col | on_row
    length = np.where(edge, 0.5 * length, length)
    col = np.where(on_col, np.rint(fx).astype(np.int64), col)
    row = np.where(on_row, np.rint(fy).astype(np.int64), row)
    extra_col = np.where(on_col, col - 1, col)[edge]
    extra_row = np.where(on_row, row - 1, row)[edge]
    return (
        np.concatenate([line, line[edge]]),
        np.concatenate([row, extra_row]),
        np.concatenate([col, extra_col]),
        np.concatenate([length, length[edge]]),
    )


@lru_cache(maxsize=16)
def projection_matrix(height: int, width: int, t_count: int, num_angles: int, step=None) -> sparse.csr_matrix:
    """Sparse operator mapping a flattened image to flattened ``(K, M)`` line sums.

    With ``step=None`` the weight of pixel ``p`` on line ``(t, theta)`` is
    the length of the line inside the pixel square; a line along a pixel
    edge gives half to each side.  Otherwise the line is sampled every
    ``step`` pixels and each sample adds ``step`` times its nearest pixel.
    """
    k, m = t_count, num_angles
    if step is None:
        line, row, col, weight = _traced_lines(height, width, k, m)
    else:
        line, row, col, weight = _sampled_lines(height, width, k, m, step)
    inside = (col >= 0) & (col < width) & (row >= 0) & (row < height) & (weight > 0)
    op = sparse.coo_matrix(
        (weight[inside], (line[inside], (row * width + col)[inside])),
        shape=(k * m, height * width),
    ).tocsr()
    op.sum_duplicates()
    return op


def _check_normalized(image):
    if not (np.all(image > 0) and abs(image.sum() - 1.0) <= NORMALIZED_ATOL):
        raise DomainError("radon_forward expects a normalized image (unit mass, positive)")


def radon_forward(image, config: RadonConfig = RadonConfig(), *, renormalize: bool = True) -> Sinogram:
    """Radon transform of a normalized image.

    Parameters
    ----------
    image : (H, W) array
        Unit-mass, strictly positive density.
    config : RadonConfig
        Angle count and offset count.
    renormalize : bool
        Rescale every projection so that its sum equals the image mass.
        Nearest-neighbour quadrature does not conserve mass exactly; the raw
        (linear) line sums are returned when this is False.

    Returns
    -------
    Sinogram
    """
    img = as_image(image)
    _check_normalized(img)
    return Sinogram(project(img, config, renormalize=renormalize), config.angles)


def project(image, config: RadonConfig = RadonConfig(), *, renormalize: bool = True) -> np.ndarray:
    """Line sums of ``image`` (any nonnegative image or a stack of them).

    ``image`` may be ``(H, W)`` or ``(n, H, W)``; the result is ``(K, M)`` or
    ``(n, K, M)``.
    """
    img = np.asarray(image, dtype=float)
    stacked = img.ndim == 3
    if not stacked:
        img = img[None]
    n, h, w = img.shape
    k, m = config.resolve((h, w))
    op = projection_matrix(h, w, k, m, config.step)
    sums = (op @ img.reshape(n, h * w).T).T.reshape(n, k, m)
    if renormalize:
        mass = img.reshape(n, -1).sum(axis=1)
        col = sums.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            sums = np.where(col > 0, sums * (mass[:, None, None] / col), 0.0)
    return sums if stacked else sums[0]


def ramp_filter(projections: np.ndarray) -> np.ndarray:
    """Apply ``|omega|`` (cut at Nyquist) along axis 0 with zero padding."""
    k = projections.shape[0]
    n = 1 << max(1, (2 * k - 1).bit_length())
    freq = np.abs(np.fft.rfftfreq(n))
    spectrum = np.fft.rfft(projections, n=n, axis=0)
    return np.fft.irfft(spectrum * freq[:, None], n=n, axis=0)[:k]


def back_project(filtered: np.ndarray, angles_deg, shape) -> np.ndarray:
    """Smear each column of ``filtered`` back along its lines, linear in ``t``."""
    k, m = filtered.shape
    t = t_grid(k)
    x, y = pixel_coordinates(shape)
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    out = np.zeros(x.size)
    xf, yf = x.ravel(), y.ravel()
    for j in range(m):
        pos = xf * np.cos(theta[j]) + yf * np.sin(theta[j])
        out += np.interp(pos, t, filtered[:, j], left=0.0, right=0.0)
    return (out * (math.pi / m)).reshape(shape)


def radon_inverse(sinogram: Sinogram, out_width: int, out_height: int) -> np.ndarray:
    """Filtered back-projection, clamped to nonnegative values and renormalized.

    Raises
    ------
    DomainError
        If the offset count does not match the requested output size.
    DegenerateInput
        If the reconstruction has no positive pixel.
    """
    k = sinogram.shape[0]
    need = default_t_count((out_height, out_width))
    if k % 2 == 0 or k < need:
        raise DomainError(
            f"sinogram has {k} offsets, a {out_width}x{out_height} image needs an odd count >= {need}"
        )
    recon = back_project(ramp_filter(sinogram.values), sinogram.angles, (out_height, out_width))
    return normalize_density(np.clip(recon, 0.0, None))
