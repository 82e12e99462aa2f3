"""Array layouts, element positions, and array response vectors.

Arrays are uniform planar arrays (UPA) lying in the YOZ plane of their body
frame; a uniform linear array is the n_v = 1 special case (elements along
the body Y axis). Element index order is horizontal-major with the vertical
index fastest, matching the Kronecker order of the response vector
(horizontal factor kron vertical factor).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .patterns import Angle, angle_from_vector

SPEED_OF_LIGHT = 299792458.0
DEFAULT_CARRIER_HZ = 3.55e9


def wavelength_of(carrier_hz: float) -> float:
    return SPEED_OF_LIGHT / carrier_hz


@dataclass(frozen=True)
class ArrayGeometry:
    """UPA of n_h x n_v elements, spacing in meters, in the body YOZ plane.

    ``origin`` is the global position of element (0, 0); ``frame`` is the
    3x3 rotation from body to global coordinates (columns are the body X, Y,
    Z axes expressed globally). The body +X axis is the array boresight.
    """

    n_h: int
    n_v: int = 1
    spacing: float = 0.5 * wavelength_of(DEFAULT_CARRIER_HZ)
    wavelength: float = wavelength_of(DEFAULT_CARRIER_HZ)
    origin: tuple = (0.0, 0.0, 0.0)
    frame: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("element counts must be >= 1")
        if self.spacing <= 0 or self.wavelength <= 0:
            raise ValueError("spacing and wavelength must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    @property
    def frame_matrix(self) -> np.ndarray:
        return np.asarray(self.frame, dtype=float)

    def element_positions(self) -> np.ndarray:
        """Global element positions, shape (n_h*n_v, 3), Kronecker order."""
        ih = np.repeat(np.arange(self.n_h), self.n_v)
        iv = np.tile(np.arange(self.n_v), self.n_h)
        local = np.column_stack([
            np.zeros(self.n_elements),
            ih * self.spacing,
            iv * self.spacing,
        ])
        return np.asarray(self.origin, dtype=float) + local @ self.frame_matrix.T

    def center(self) -> np.ndarray:
        return self.element_positions().mean(axis=0)

    def aperture(self) -> float:
        """Largest physical dimension of the array, meters."""
        d_h = (self.n_h - 1) * self.spacing
        d_v = (self.n_v - 1) * self.spacing
        return float(np.hypot(d_h, d_v))

    def angle_to(self, point) -> Angle:
        """Direction of a global point as seen in this array's body frame,
        referenced to the array center."""
        v = np.asarray(point, dtype=float) - self.center()
        return angle_from_vector(self.frame_matrix.T @ v)

    def angles_to_points(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Per-(element, point) body-frame angles for near-field geometry.

        Returns (az, el) arrays of shape (n_elements, n_points): the exact
        direction from each element to each point.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        rel = points[None, :, :] - self.element_positions()[:, None, :]
        local = rel @ self.frame_matrix  # = frame.T applied to each row vector
        r = np.linalg.norm(local, axis=-1)
        if np.any(r == 0):
            raise ValueError("zero distance: point coincides with an element")
        az = np.arctan2(local[..., 1], local[..., 0])
        az = np.where(az <= -np.pi, np.pi, az)
        el = np.arccos(np.clip(local[..., 2] / r, -1.0, 1.0))
        return az, el

    def spatial_frequencies(self, direction: Angle) -> tuple[float, float]:
        """Dimensionless horizontal/vertical spatial frequencies of a
        body-frame plane-wave direction."""
        th = self.spacing * np.sin(direction.azimuth) * np.sin(direction.elevation) / self.wavelength
        tv = self.spacing * np.cos(direction.elevation) / self.wavelength
        return float(th), float(tv)


def facing_negative_x() -> tuple:
    """Body frame of an array rotated pi about Z (boresight along global -X)."""
    return ((-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0))


def arv(geometry: ArrayGeometry, direction: Angle) -> np.ndarray:
    """Unit-norm array response vector for a far-field plane wave.

    a = (1/sqrt(N)) exp(-j 2 pi th k(n_h)) kron exp(-j 2 pi tv k(n_v))
    """
    th, tv = geometry.spatial_frequencies(direction)
    ph = np.exp(-2j * np.pi * th * np.arange(geometry.n_h))
    pv = np.exp(-2j * np.pi * tv * np.arange(geometry.n_v))
    return np.kron(ph, pv) / np.sqrt(geometry.n_elements)


def steering_phase(p, q, wavelength: float) -> complex:
    """Spherical-wave phase kernel exp(-j 2 pi ||p - q|| / lambda)."""
    d = float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)))
    if d == 0.0:
        raise ValueError("zero distance between points")
    return complex(np.exp(-2j * np.pi * d / wavelength))


def fraunhofer_distance(geometry: ArrayGeometry) -> float:
    """Far-field boundary 2 D^2 / lambda for the array aperture D."""
    d = geometry.aperture()
    return 2.0 * d * d / geometry.wavelength
