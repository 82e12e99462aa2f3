"""Selectable element radiation patterns and the pattern dictionary.

Patterns are real magnitude gains G(direction) >= 0 normalized so that the
power integral over the sphere equals 4*pi:

    int_0^{2pi} int_0^{pi} G^2 sin(el) d el d az = 4*pi

All angles are radians. Azimuth is measured from the +X axis in the XOY
plane, in (-pi, pi]; elevation from the +Z axis, in [0, pi].
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field

import numpy as np

# Midpoint-rule quadrature grid used for normalization and its verification.
QUAD_N_EL = 180
QUAD_N_AZ = 360
NORMALIZATION_RTOL = 1e-3


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class Angle:
    """Direction in the array body frame (azimuth, elevation), radians."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (-np.pi < self.azimuth <= np.pi):
            raise ValueError(f"azimuth {self.azimuth} outside (-pi, pi]")
        if not (0.0 <= self.elevation <= np.pi):
            raise ValueError(f"elevation {self.elevation} outside [0, pi]")

    def unit_vector(self) -> np.ndarray:
        se = np.sin(self.elevation)
        return np.array([
            se * np.cos(self.azimuth),
            se * np.sin(self.azimuth),
            np.cos(self.elevation),
        ])


def angle_from_vector(v) -> Angle:
    """Angle of the direction of vector v (need not be unit length)."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v)
    if r == 0.0:
        raise ValueError("zero-length direction vector")
    az = float(np.arctan2(v[1], v[0]))
    if az <= -np.pi:
        az = np.pi
    el = float(np.arccos(np.clip(v[2] / r, -1.0, 1.0)))
    return Angle(az, el)


def _quad_grid():
    el = (np.arange(QUAD_N_EL) + 0.5) * np.pi / QUAD_N_EL
    az = -np.pi + (np.arange(QUAD_N_AZ) + 0.5) * 2 * np.pi / QUAD_N_AZ
    ELc, AZc = np.meshgrid(el, az, indexing="ij")
    cell = (np.pi / QUAD_N_EL) * (2 * np.pi / QUAD_N_AZ)
    return AZc, ELc, cell


def power_integral(pattern: "RadiationPattern") -> float:
    """Midpoint-rule quadrature of G^2 sin(el) over the full sphere."""
    AZ, EL, cell = _quad_grid()
    g = pattern.gain_grid(AZ, EL)
    return float(np.sum(g * g * np.sin(EL)) * cell)


class RadiationPattern:
    """Base class; subclasses implement the raw (unscaled) gain shape.

    ``scale`` is the positive factor applied on top of the raw shape so the
    4*pi power-integral constraint holds.
    """

    scale: float = 1.0

    def raw_gain(self, az: np.ndarray, el: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gain_grid(self, az, el) -> np.ndarray:
        """Vectorized magnitude gain for arrays of azimuth/elevation."""
        az = np.asarray(az, dtype=float)
        el = np.asarray(el, dtype=float)
        return self.scale * self.raw_gain(az, el)

    def gain(self, direction: Angle) -> float:
        return float(self.gain_grid(direction.azimuth, direction.elevation))


class IsotropicPattern(RadiationPattern):
    """Unit gain in every direction; already satisfies the constraint."""

    def __init__(self):
        self.scale = 1.0

    def raw_gain(self, az, el):
        return np.ones(np.broadcast(az, el).shape)

    def __repr__(self):
        return "IsotropicPattern()"


class CosinePowerPattern(RadiationPattern):
    """Hemispherical cosine-power lobe steered at ``boresight``.

    The power pattern is cos(psi)^q over the hemisphere around the boresight
    and zero behind it, where psi is the angle off boresight. The magnitude
    gain is therefore sqrt(2*(q+1)) * cos(psi)^(q/2); the constant makes the
    power integral exactly 4*pi (verified against quadrature in tests).
    """

    def __init__(self, q: float, boresight: Angle):
        if not np.isfinite(q) or q < 0:
            raise PatternError(f"invalid exponent q={q}")
        self.q = float(q)
        self.boresight = boresight
        self._axis = boresight.unit_vector()
        self.scale = float(np.sqrt(2.0 * (q + 1.0)))

    def raw_gain(self, az, el):
        se = np.sin(el)
        # cos(psi) = direction . boresight_axis
        c = (
            se * np.cos(az) * self._axis[0]
            + se * np.sin(az) * self._axis[1]
            + np.cos(el) * self._axis[2]
        )
        c = np.maximum(c, 0.0)
        return c ** (self.q / 2.0)

    def __repr__(self):
        return (
            f"CosinePowerPattern(q={self.q}, az={self.boresight.azimuth:.4f},"
            f" el={self.boresight.elevation:.4f})"
        )


class TabulatedPattern(RadiationPattern):
    """Magnitude-gain samples on a regular az x el grid, bilinear interpolation.

    Out-of-grid elevation clamps to the nearest grid row; azimuth clamps to
    the grid's span as well (the loader requires full coverage for sphere
    normalization, so clamping only matters for roundoff at the edges).
    """

    def __init__(self, az_grid, el_grid, samples, scale: float | None = None):
        az_grid = np.asarray(az_grid, dtype=float)
        el_grid = np.asarray(el_grid, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (el_grid.size, az_grid.size):
            raise PatternError(
                f"sample grid {samples.shape} does not match "
                f"{el_grid.size} x {az_grid.size} axes"
            )
        if np.any(np.isnan(samples)):
            raise PatternError("invalid sample: NaN in pattern grid")
        if np.any(samples < 0) or not np.all(np.isfinite(samples)):
            raise PatternError("invalid sample: negative or non-finite gain")
        if np.any(np.diff(az_grid) <= 0) or np.any(np.diff(el_grid) <= 0):
            raise PatternError("grid axes must be strictly increasing")
        self.az_grid = az_grid
        self.el_grid = el_grid
        self.samples = samples
        if scale is None:
            self.scale = 1.0
            integral = power_integral(self)
            if integral <= 0:
                raise PatternError("degenerate pattern: zero power integral")
            self.scale = float(np.sqrt(4 * np.pi / integral))
        else:
            self.scale = float(scale)

    def raw_gain(self, az, el):
        ia = np.clip(np.searchsorted(self.az_grid, az) - 1, 0, self.az_grid.size - 2)
        ie = np.clip(np.searchsorted(self.el_grid, el) - 1, 0, self.el_grid.size - 2)
        a0, a1 = self.az_grid[ia], self.az_grid[ia + 1]
        e0, e1 = self.el_grid[ie], self.el_grid[ie + 1]
        ta = np.clip((az - a0) / (a1 - a0), 0.0, 1.0)
        te = np.clip((el - e0) / (e1 - e0), 0.0, 1.0)
        s = self.samples
        return (
            s[ie, ia] * (1 - te) * (1 - ta)
            + s[ie, ia + 1] * (1 - te) * ta
            + s[ie + 1, ia] * te * (1 - ta)
            + s[ie + 1, ia + 1] * te * ta
        )

    def __repr__(self):
        return f"TabulatedPattern({self.el_grid.size}x{self.az_grid.size})"


def normalize_pattern(raw: RadiationPattern) -> RadiationPattern:
    """Rescale ``raw`` so its power integral equals 4*pi.

    Shape is unchanged up to a positive scalar. Raises PatternError on a
    zero-everywhere pattern or NaN samples.
    """
    integral = power_integral(raw)
    if np.isnan(integral):
        raise PatternError("invalid sample: NaN in pattern")
    if integral <= 0:
        raise PatternError("degenerate pattern: zero power integral")
    factor = float(np.sqrt(4 * np.pi / integral))
    out = copy.copy(raw)
    out.scale = raw.scale * factor
    return out


def eval_gain(pattern: RadiationPattern, direction: Angle) -> float:
    """Magnitude gain of a normalized pattern in the given direction."""
    return pattern.gain(direction)


@dataclass(frozen=True)
class PatternDictionary:
    """Ordered set of the N selectable element radiation patterns."""

    patterns: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.patterns) < 1:
            raise PatternError("dictionary must contain at least one pattern")
        object.__setattr__(self, "patterns", tuple(self.patterns))

    def __len__(self):
        return len(self.patterns)

    @property
    def n_states(self) -> int:
        return len(self.patterns)

    def vector(self, direction: Angle) -> np.ndarray:
        """Dictionary vector: entry k is the gain of pattern k toward ``direction``."""
        return np.array([eval_gain(p, direction) for p in self.patterns])

    def gain_matrix(self, az, el) -> np.ndarray:
        """Stacked gains, shape (N,) + broadcast(az, el).shape."""
        az = np.asarray(az, dtype=float)
        el = np.asarray(el, dtype=float)
        return np.stack([p.gain_grid(az, el) for p in self.patterns])


def dictionary_vector(d: PatternDictionary, direction: Angle) -> np.ndarray:
    return d.vector(direction)


def default_dictionary(q: float = 2.0, boresights_deg=(-30.0, 0.0, 30.0)) -> PatternDictionary:
    """Three steered cosine-power states standing in for the hardware's
    main-lobe-steered element states. Boresight elevations are pi/2."""
    pats = tuple(
        CosinePowerPattern(q, Angle(np.deg2rad(b), np.pi / 2)) for b in boresights_deg
    )
    return PatternDictionary(pats)


def isotropic_dictionary() -> PatternDictionary:
    """Single-state unit-gain dictionary (conventional-isotropic benchmark)."""
    return PatternDictionary((IsotropicPattern(),))


def load_tabulated_csv(path) -> TabulatedPattern:
    """Load a tabulated pattern from CSV with header ``el_deg,az_deg,gain``.

    Rows must cover a complete regular grid (row-major, any consistent
    order); incomplete grids are rejected. Gains are linear magnitude; the
    pattern is normalized on load.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["el_deg", "az_deg", "gain"]:
            raise PatternError(f"bad tabulated-pattern header in {path}: {header}")
        for line in reader:
            if not line:
                continue
            rows.append((float(line[0]), float(line[1]), float(line[2])))
    if not rows:
        raise PatternError(f"empty tabulated-pattern file {path}")
    els = np.array(sorted({r[0] for r in rows}))
    azs = np.array(sorted({r[1] for r in rows}))
    if len(rows) != els.size * azs.size:
        raise PatternError(
            f"incomplete grid: {len(rows)} rows, expected {els.size * azs.size}"
        )
    grid = np.full((els.size, azs.size), np.nan)
    ei = {v: k for k, v in enumerate(els)}
    ai = {v: k for k, v in enumerate(azs)}
    for el_deg, az_deg, g in rows:
        grid[ei[el_deg], ai[az_deg]] = g
    if np.any(np.isnan(grid)):
        raise PatternError("incomplete grid: duplicate/missing sample points")
    return TabulatedPattern(np.deg2rad(azs), np.deg2rad(els), grid)
