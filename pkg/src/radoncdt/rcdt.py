"""The Radon-CDT: a per-angle CDT of the sinogram against a template's sinogram.

For every projection angle the monotone map ``f(., theta)`` pushing the
template projection onto the image projection is computed in closed form, and
the image is represented by ``(f - t) * sqrt(template sinogram)``.  Euclidean
geometry in this representation is the sliced 2-Wasserstein (RCD) geometry of
the images.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cdt
from .errors import DomainError, TemplateMismatch
from .gridio import (
    NORMALIZED_ATOL,
    RcdtRepresentation,
    Sinogram,
    TransportField,
    as_image,
    normalize_density,
    pixel_coordinates,
    t_grid,
)
from .radon import RadonConfig, project, radon_inverse

SINOGRAM_EPS = 1e-8


def thread_count() -> int:
    """Worker cap taken from ``RCDT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("RCDT_THREADS", "1")))
    except ValueError:
        return 1


def _normalized(image):
    img = as_image(image)
    if not (np.all(img > 0) and abs(img.sum() - 1.0) <= NORMALIZED_ATOL):
        raise DomainError("expected a normalized image (unit mass, strictly positive)")
    return img


def positive_projections(values, epsilon_rel: float = SINOGRAM_EPS) -> np.ndarray:
    """Make every sinogram column a strictly positive unit-mass 1D density.

    Lines that miss the image have exactly zero line integral; each column gets
    a floor of ``epsilon_rel`` times its mean positive value before being
    rescaled to unit sum.
    """
    v = np.array(values, dtype=float)
    pos = np.where(v > 0, v, 0.0)
    count = np.maximum((v > 0).sum(axis=-2, keepdims=True), 1)
    floor = epsilon_rel * pos.sum(axis=-2, keepdims=True) / count
    if np.any(floor <= 0):
        raise DomainError("a projection carries no mass")
    v = np.clip(v, 0.0, None) + floor
    return v / v.sum(axis=-2, keepdims=True)


def image_hash(image) -> bytes:
    arr = np.ascontiguousarray(image, dtype="<f8")
    h = hashlib.sha256()
    h.update(np.asarray(arr.shape, dtype="<u8").tobytes())
    h.update(arr.tobytes())
    return h.digest()[:8]


class Template:
    """Reference image with its cached sinogram.

    Parameters
    ----------
    image : (H, W) array
        Normalized reference density.
    config : RadonConfig
        Projection geometry shared by everything transformed against this
        template.
    """

    def __init__(self, image, config: RadonConfig = RadonConfig()):
        self.image = _normalized(image)
        self.image.setflags(write=False)
        self.config = config
        self.shape = self.image.shape
        self.t_count, self.num_angles = config.resolve(self.shape)
        values = positive_projections(project(self.image, config))
        self.sinogram = Sinogram(values, config.angles)
        self.sqrt_sinogram = np.sqrt(values)
        self.sqrt_sinogram.setflags(write=False)
        self.hash = image_hash(self.image)

    @classmethod
    def builtin(cls, name: str, size=64, config: RadonConfig = RadonConfig()) -> "Template":
        """``"gaussian"`` (std ``N/6``) or ``"disk"`` (radius ``N/3``), centered.

        ``size`` is ``N`` or an ``(H, W)`` shape, in which case ``N = min(H, W)``.
        """
        return cls(builtin_image(name, size), config)

    @property
    def t(self):
        return t_grid(self.t_count)

    @property
    def dtheta(self) -> float:
        return math.pi / self.num_angles

    def __repr__(self):
        return f"Template(shape={self.shape}, angles={self.num_angles}, hash={self.hash.hex()})"


def builtin_image(name: str, size=64) -> np.ndarray:
    """Centered, circularly symmetric reference densities.

    The Gaussian is cut at the inscribed circle so that the square grid does
    not truncate its projections differently at different angles.
    """
    shape = (size, size) if np.isscalar(size) else tuple(size)
    n = min(shape)
    x, y = pixel_coordinates(shape)
    r2 = x * x + y * y
    if name == "gaussian":
        sigma = n / 6.0
        img = np.exp(-r2 / (2.0 * sigma * sigma)) * (r2 <= (n / 2.0) ** 2)
    elif name == "disk":
        img = (r2 <= (n / 3.0) ** 2).astype(float)
    else:
        raise DomainError(f"unknown builtin template {name!r}")
    return normalize_density(img)


def _image_projections(image, template: Template) -> np.ndarray:
    img = _normalized(image)
    if img.shape != template.shape:
        raise DomainError(f"image shape {img.shape} differs from template shape {template.shape}")
    return positive_projections(project(img, template.config))


def _maps(proj, template: Template, L=None) -> np.ndarray:
    ref = template.sinogram.values
    f = np.empty_like(proj)
    for m in range(proj.shape[1]):
        try:
            f[:, m] = cdt.transport_map_1d(proj[:, m], ref[:, m], L)
        except DomainError as exc:
            raise DomainError(f"angle {template.sinogram.angles[m]:g} deg: {exc}") from exc
    return f


def transport_field(image, template: Template, L: int | None = None) -> TransportField:
    """Per-angle maps ``f(t, theta)`` from the template projections to the image's."""
    return TransportField(_maps(_image_projections(image, template), template, L), template.sinogram.angles)


def rcdt_forward(image, template: Template, L: int | None = None) -> RcdtRepresentation:
    """Radon-CDT of a normalized image against ``template``.

    ``L`` is the number of CDF levels per projection (default ``16K``).
    """
    f = _maps(_image_projections(image, template), template, L)
    values = (f - template.t[:, None]) * template.sqrt_sinogram
    return RcdtRepresentation(values, template.sinogram.angles, template.hash)


def rcdt_forward_many(images, template: Template, L: int | None = None) -> np.ndarray:
    """Transform a stack of images; returns an ``(n, K, M)`` array of values.

    Work is spread over ``RCDT_THREADS`` threads; the result does not depend
    on the thread count.
    """
    images = [np.asarray(im, dtype=float) for im in images]
    workers = thread_count()
    if workers == 1 or len(images) < 2:
        return np.stack([rcdt_forward(im, template, L).values for im in images])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.stack([r.values for r in pool.map(lambda im: rcdt_forward(im, template, L), images)])


def _check_template(rep: RcdtRepresentation, template: Template):
    if rep.template_hash != template.hash:
        raise TemplateMismatch(
            f"representation belongs to template {rep.template_hash.hex()}, not {template.hash.hex()}"
        )
    if rep.shape != template.sinogram.shape:
        raise TemplateMismatch(f"representation grid {rep.shape} differs from template grid {template.sinogram.shape}")


def rcdt_inverse(rep: RcdtRepresentation, template: Template, out_shape=None) -> np.ndarray:
    """Rebuild the image of a representation.

    Per angle the map ``f = rep / sqrt(template) + t`` is made monotone,
    inverted, and used to push the template projection forward; the resulting
    sinogram is inverted by filtered back-projection.  Arbitrary points of the
    representation space (linear combinations, say) need not be Radon
    transforms of an image; the back-projection then returns an approximation.
    """
    _check_template(rep, template)
    h, w = template.shape if out_shape is None else out_shape
    t = template.t
    ref = template.sinogram.values
    f = rep.values / template.sqrt_sinogram + t[:, None]
    sino = np.empty_like(f)
    for m in range(f.shape[1]):
        sino[:, m] = cdt.inverse_density(f[:, m], ref[:, m], t, 1.0)
    return radon_inverse(Sinogram(sino, rep.angles), w, h)


def _sliced_distance(pa, pb, num_angles) -> float:
    total = 0.0
    for m in range(pa.shape[1]):
        total += cdt.wasserstein2_squared(pa[:, m], pb[:, m])
    return math.sqrt(max(total, 0.0) * math.pi / num_angles)


def rcd_distance(a, b, config: RadonConfig = RadonConfig()) -> float:
    """RCD (sliced 2-Wasserstein) distance between two normalized images.

    ``b`` plays the reference role: the squared displacement of the map from
    ``b``'s projections to ``a``'s is integrated against ``b``'s projections,
    exactly for the box-spline projection densities, then summed over angles
    with weight ``pi / M``.
    """
    a = _normalized(a)
    b = _normalized(b)
    if a.shape != b.shape:
        raise DomainError("images must share one grid")
    pa = positive_projections(project(a, config))
    pb = positive_projections(project(b, config))
    return _sliced_distance(pa, pb, config.num_angles)


def rcd_distance_from_sinograms(sa: Sinogram, sb: Sinogram) -> float:
    """:func:`rcd_distance` for precomputed sinograms on one grid."""
    if sa.shape != sb.shape:
        raise DomainError("sinograms must share one grid")
    return _sliced_distance(positive_projections(sa.values), positive_projections(sb.values), sa.shape[1])


def transform_distance(ra: RcdtRepresentation, rb: RcdtRepresentation) -> float:
    """Weighted Euclidean distance ``sqrt(sum (ra - rb)^2 dt dtheta)``."""
    if ra.template_hash != rb.template_hash:
        raise TemplateMismatch("representations were computed against different templates")
    if ra.shape != rb.shape:
        raise TemplateMismatch("representation grids differ")
    diff = ra.values - rb.values
    return math.sqrt(float(np.sum(diff * diff)) * math.pi / ra.shape[1])


def transform_norm(rep: RcdtRepresentation) -> float:
    return math.sqrt(float(np.sum(rep.values ** 2)) * math.pi / rep.shape[1])


def interpolate_pair(ra: RcdtRepresentation, rb: RcdtRepresentation, alpha: float, template: Template) -> np.ndarray:
    """Image at ``(1 - alpha) * ra + alpha * rb`` in transform space."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if ra.template_hash != rb.template_hash:
        raise TemplateMismatch("representations were computed against different templates")
    mix = RcdtRepresentation((1.0 - alpha) * ra.values + alpha * rb.values, ra.angles, ra.template_hash)
    return rcdt_inverse(mix, template)


def rotate_representation(values, steps: int) -> np.ndarray:
    """Return ``R(t, theta - steps * dtheta)`` over a ``[0, pi)`` angle grid.

    Columns that wrap below zero use ``R(t, theta + pi) = -R(-t, theta)``.
    """
    v = np.asarray(values, dtype=float)
    m = v.shape[1]
    out = np.empty_like(v)
    for j in range(m):
        src = j - steps
        turns, src = divmod(src, m)
        col = v[:, src]
        if turns % 2:
            col = -col[::-1]
        out[:, j] = col
    return out
