"""Cartesian-to-polar resampling of gray images.

A gray image is a 2-D float64 ndarray indexed [row, col]; pixel (x, y)
means column x, row y.  The polar grid samples the image on concentric
rings one pixel apart, along rays a fixed angular step apart, with angles
measured counterclockwise from +x while y grows downward (the atan2
convention on pixel coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


def _as_image(image) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] < 2 or img.shape[1] < 2:
        raise DomainError(f"image must be 2-D with both sides >= 2, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise DomainError("image contains non-finite intensities")
    return img


def bilinear_sample(image, x, y):
    """Sample `image` at (x, y) = (column, row) with bilinear interpolation.

    Points outside [0, w-1] x [0, h-1] return exactly 0.0.  Scalar
    coordinates give a float; array coordinates give an ndarray.
    """
    img = _as_image(image)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if xs.shape != ys.shape:
        raise DomainError("x and y must have matching shapes")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DomainError("sample coordinates must be finite")
    h, w = img.shape
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 2)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 2)
    fx = xs - x0
    fy = ys - y0
    val = (
        (1.0 - fx) * (1.0 - fy) * img[y0, x0]
        + fx * (1.0 - fy) * img[y0, x0 + 1]
        + (1.0 - fx) * fy * img[y0 + 1, x0]
        + fx * fy * img[y0 + 1, x0 + 1]
    )
    inside = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
    val = np.where(inside, val, 0.0)
    return float(val[0]) if scalar else val


@dataclass(frozen=True)
class PolarGrid:
    """Polar resampling of an image.

    samples[k, j] is the intensity on ray k (angle k * angular_resolution
    degrees) at ring j (radius j pixels).  `max_radius` is the distance
    from the center to the farthest image corner; rings cover 0..n_rings-1
    which spans it at 1 px steps.
    """

    samples: np.ndarray
    center: tuple[float, float]
    max_radius: float
    angular_resolution: float

    @property
    def n_rays(self) -> int:
        return self.samples.shape[0]

    @property
    def n_rings(self) -> int:
        return self.samples.shape[1]

    def ray_angles(self) -> np.ndarray:
        """Ray angles in radians."""
        return np.deg2rad(self.angular_resolution) * np.arange(self.n_rays)

    def ring_radii(self) -> np.ndarray:
        """Ring radii in pixels (0, 1, 2, ...)."""
        return np.arange(self.n_rings, dtype=float)

    def to_csv(self, path) -> None:
        """Write samples as comma-separated text, one row per ray."""
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.samples:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def to_polar(image, angular_resolution: float = 0.5) -> PolarGrid:
    """Resample `image` onto a polar grid around the image center.

    The center is ((w-1)/2, (h-1)/2); rays count round(360/res); rings
    step 1 px out to floor(max_radius).  Samples falling outside the
    image are exactly 0.  360/angular_resolution must be integral.
    """
    img = _as_image(image)
    if not (angular_resolution > 0.0) or not math.isfinite(angular_resolution):
        raise ConfigError(f"angular_resolution must be positive, got {angular_resolution}")
    ratio = 360.0 / angular_resolution
    n_rays = round(ratio)
    if n_rays < 1 or abs(ratio - n_rays) > 1e-9:
        raise ConfigError(
            f"angular_resolution {angular_resolution} does not divide 360 evenly"
        )
    h, w = img.shape
    x0 = (w - 1) / 2.0
    y0 = (h - 1) / 2.0
    max_radius = math.hypot(x0, y0)  # center to farthest corner
    n_rings = int(math.floor(max_radius)) + 1
    theta = np.deg2rad(angular_resolution) * np.arange(n_rays)
    radii = np.arange(n_rings, dtype=float)
    xs = x0 + radii[None, :] * np.cos(theta)[:, None]
    ys = y0 + radii[None, :] * np.sin(theta)[:, None]
    samples = bilinear_sample(img, xs, ys)
    return PolarGrid(
        samples=samples,
        center=(x0, y0),
        max_radius=max_radius,
        angular_resolution=float(angular_resolution),
    )
