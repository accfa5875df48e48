"""Synthetic image classes.

Two generators are provided:

* :func:`gen_synthetic_classes`: class 0 holds one isotropic Gaussian blob at
  a random position, class 1 the average of two blobs at random positions.
* :func:`gen_confound_classes`: every sample is one of two fixed mother images
  deformed by a random translation and/or mass-preserving scaling.

Every sample draws from its own counter-based generator
``default_rng([seed, class, index])`` so samples do not depend on generation
order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DomainError, SampleRejected
from .gridio import _atomic_write, is_normalized, normalize_density, pixel_coordinates, save_pgm

FAMILIES = ("translation", "scaling", "both")
LEAK_TOL = 0.01
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``sigma`` is the blob standard deviation as a fraction of the unit square,
    which is mapped onto an ``size x size`` grid.  ``shift_range`` (pixels)
    and ``scale_range`` bound the confound parameters.
    """

    size: int = 64
    sigma: float = 0.08
    n_per_class: int = 100
    seed: int = 42
    family: str = "translation"
    shift_range: float = 8.0
    scale_range: tuple = (0.8, 1.25)

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.size < 8:
            raise DomainError("grid size must be at least 8")
        if 3.0 * self.sigma * self.size > self.size / 2.0:
            raise DomainError(f"sigma={self.sigma} leaves no room for a blob 3 sigma inside the grid")
        if self.n_per_class < 1:
            raise DomainError("n_per_class must be positive")
        if self.family not in FAMILIES:
            raise DomainError(f"family must be one of {FAMILIES}, got {self.family!r}")
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise DomainError("scale_range must be positive and ordered")
        if self.shift_range < 0:
            raise DomainError("shift_range must be nonnegative")

    @property
    def sigma_px(self) -> float:
        return self.sigma * self.size


@dataclass
class ImageSet:
    """Images ``(n, H, W)`` with labels and the parameters used to draw them."""

    images: np.ndarray
    labels: np.ndarray
    params: list = field(default_factory=list)

    def __len__(self):
        return len(self.labels)

    def vectors(self) -> np.ndarray:
        return self.images.reshape(len(self.images), -1)


def sample_rng(seed: int, label: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, label, index])


def gaussian_image(size: int, centers, sigma_px: float, weights=None) -> np.ndarray:
    """Normalized mixture of isotropic Gaussians sampled at pixel centers.

    ``centers`` are ``(u, v)`` positions in the unit square, ``u`` along
    columns and ``v`` along rows (top to bottom).
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if weights is None:
        weights = np.full(len(centers), 1.0 / len(centers))
    grid = (np.arange(size) + 0.5) / size
    u, v = np.meshgrid(grid, grid)
    s2 = 2.0 * (sigma_px / size) ** 2
    img = np.zeros((size, size))
    for (cu, cv), wgt in zip(centers, weights):
        blob = np.exp(-((u - cu) ** 2 + (v - cv) ** 2) / s2)
        img += wgt * blob / blob.sum()
    return normalize_density(img)


def gen_synthetic_classes(config: SynthConfig = SynthConfig()) -> ImageSet:
    """Class 0: one blob at a uniform position; class 1: two blobs at least 4 sigma apart.

    Blob centers are uniform on ``[3 sigma, 1 - 3 sigma]^2``.
    """
    sig = config.sigma
    lo, hi = 3.0 * sig, 1.0 - 3.0 * sig
    images, labels, params = [], [], []
    for label in (0, 1):
        for i in range(config.n_per_class):
            rng = sample_rng(config.seed, label, i)
            if label == 0:
                mu = rng.uniform(lo, hi, size=(1, 2))
            else:
                for _ in range(MAX_REDRAWS):
                    mu = rng.uniform(lo, hi, size=(2, 2))
                    if np.linalg.norm(mu[0] - mu[1]) >= 4.0 * sig:
                        break
                else:
                    raise SampleRejected("could not place two separated blobs")
            images.append(gaussian_image(config.size, mu, config.sigma_px))
            labels.append(label)
            params.append({"centers": [tuple(map(float, m)) for m in mu]})
    return ImageSet(np.stack(images), np.asarray(labels), params)


def default_mothers(size: int = 64, sigma: float = 0.08):
    """Mother images: one centered blob, and two blobs at ``(+-sigma, 0)``.

    The second is an elongated, flat-topped density, not a translate or
    rescaling of the first.
    """
    sig = sigma * size
    x, y = pixel_coordinates((size, size))

    def blob(cx):
        return np.exp(-((x - cx) ** 2 + y ** 2) / (2.0 * sig * sig))

    p0 = normalize_density(blob(0.0))
    q0 = normalize_density(0.5 * blob(-sig) + 0.5 * blob(sig))
    return p0, q0


def translate(image, x0: float, y0: float) -> np.ndarray:
    """Move ``image`` by ``(x0, y0)`` pixels (``y`` up), linear interpolation, zero fill."""
    return ndimage.shift(np.asarray(image, dtype=float), (-y0, x0), order=1, mode="constant", cval=0.0)


def rescale(image, beta: float) -> np.ndarray:
    """Mass-preserving scaling ``beta^2 I(beta x, beta y)`` about the image center.

    Resampled with linear interpolation and rescaled to the input mass.
    """
    img = np.asarray(image, dtype=float)
    if not beta > 0:
        raise DomainError("beta must be positive")
    h, w = img.shape
    x, y = pixel_coordinates((h, w))
    col = beta * x + (w - 1) / 2.0
    row = (h - 1) / 2.0 - beta * y
    out = ndimage.map_coordinates(img, [row, col], order=1, mode="constant", cval=0.0)
    total = out.sum()
    if not total > 0:
        raise SampleRejected("scaled image lies off the grid")
    return out * (img.sum() / total)


def apply_confound(image, params: dict) -> np.ndarray:
    """Apply ``scale`` (about the center) and then ``shift``, raising on mass loss.

    A sample is rejected when more than 1% of the mass leaves the grid.
    """
    img = np.asarray(image, dtype=float)
    mass = img.sum()
    out = img
    beta = params.get("scale", 1.0)
    if beta != 1.0:
        # mass leaving the grid: compare against an unclipped resampling on a padded grid
        h, w = img.shape
        pad = int(math.ceil(max(h, w) * max(0.0, 1.0 / beta - 1.0) / 2.0)) + 1
        big = rescale(np.pad(img, pad), beta)
        kept = big[pad:pad + h, pad:pad + w]
        if big.sum() - kept.sum() > LEAK_TOL * mass:
            raise SampleRejected(f"scaling by {beta:.3f} pushes mass off the grid")
        out = kept
    x0, y0 = params.get("shift", (0.0, 0.0))
    if (x0, y0) != (0.0, 0.0):
        moved = translate(out, x0, y0)
        if out.sum() - moved.sum() > LEAK_TOL * mass:
            raise SampleRejected(f"shift ({x0:.2f}, {y0:.2f}) pushes mass off the grid")
        out = moved
    return normalize_density(out)


def draw_confound(rng: np.random.Generator, config: SynthConfig) -> dict:
    params = {}
    if config.family in ("scaling", "both"):
        lo, hi = config.scale_range
        # uniform in log scale so beta and 1/beta are equally likely
        params["scale"] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    if config.family in ("translation", "both"):
        r = config.shift_range
        params["shift"] = tuple(float(v) for v in rng.uniform(-r, r, size=2))
    return params


def gen_confound_classes(mother_a, mother_b, config: SynthConfig = SynthConfig()) -> ImageSet:
    """Class ``k`` holds random confounds of mother ``k``.

    Rejected samples are redrawn from the same per-sample generator; the
    accepted parameters are stored in ``params``.
    """
    mothers = []
    for m in (mother_a, mother_b):
        if not is_normalized(m):
            raise DomainError("mother images must be normalized")
        mothers.append(np.asarray(m, dtype=float))
    if mothers[0].shape != mothers[1].shape:
        raise DomainError("mother images must share one grid")
    images, labels, params = [], [], []
    for label, mother in enumerate(mothers):
        for i in range(config.n_per_class):
            rng = sample_rng(config.seed, label, i)
            for _ in range(MAX_REDRAWS):
                p = draw_confound(rng, config)
                try:
                    img = apply_confound(mother, p)
                except SampleRejected:
                    continue
                break
            else:
                raise SampleRejected(f"class {label} sample {i}: every draw was rejected")
            images.append(img)
            labels.append(label)
            params.append(p)
    return ImageSet(np.stack(images), np.asarray(labels), params)


def centroid(image) -> tuple[float, float]:
    """Center of mass ``(x, y)`` in the centered, y-up pixel frame."""
    img = np.asarray(image, dtype=float)
    x, y = pixel_coordinates(img.shape)
    m = img.sum()
    return float((x * img).sum() / m), float((y * img).sum() / m)


def write_dataset(data: ImageSet, outdir) -> Path:
    """Save every image as PGM and a ``manifest.csv`` of filenames, labels and parameters."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["filename", "label", "shift_x", "shift_y", "scale", "centers"])
    for i, (img, label, p) in enumerate(zip(data.images, data.labels, data.params)):
        name = f"sample_{i:04d}.pgm"
        save_pgm(img, outdir / name)
        sx, sy = p.get("shift", ("", ""))
        centers = ";".join(f"{u:.6f}:{v:.6f}" for u, v in p.get("centers", []))
        writer.writerow([name, int(label), sx, sy, p.get("scale", ""), centers])
    manifest = outdir / "manifest.csv"
    _atomic_write(manifest, buf.getvalue().encode())
    return manifest
