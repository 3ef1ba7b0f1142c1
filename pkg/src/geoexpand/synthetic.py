"""Seeded synthetic fields: stationary RBF Gaussian-process draws and
two-regime fields (two value levels on either side of a boundary, plus a
stationary within-regime draw).

All randomness derives from ``FieldSpec.seed``; repeated calls with the same
spec are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .linalg import jitchol
from .regression import KernelParams
from .sample_model import SampleSet

__all__ = [
    "FieldSpec",
    "grid_points",
    "sample_stationary_field",
    "sample_two_regime_field",
    "random_subsample",
]

# stream offsets from the global seed
FIELD_STREAM = 0
SUBSAMPLE_STREAM = 1

GENERATORS = ("stationary-gp", "two-regime")
GEOMETRIES = ("half-plane", "disc")


@dataclass(frozen=True)
class FieldSpec:
    """Regular lattice plus generator settings.

    For ``generator="two-regime"``, regime B is the half-plane
    ``x > split`` (``split`` defaults to the lattice centre) or the disc of
    ``radius`` around ``center``; B is raised by ``gap`` above regime A.
    """

    nx: int = 30
    ny: int = 30
    spacing: float = 1.0
    generator: str = "stationary-gp"
    kernel: KernelParams = KernelParams(1.0, 3.0, 0.01)
    geometry: str = "half-plane"
    gap: float = 0.0
    split: float | None = None
    center: tuple | None = None
    radius: float | None = None
    seed: int = 42

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValidationError("grid needs at least 2 nodes per axis")
        if not self.spacing > 0:
            raise ValidationError("grid spacing must be positive")
        if self.generator not in GENERATORS:
            raise ValidationError(f"unknown generator {self.generator!r}")
        if self.geometry not in GEOMETRIES:
            raise ValidationError(f"unknown regime geometry {self.geometry!r}")
        if self.gap < 0:
            raise ValidationError("level gap must be non-negative")

    @property
    def within_sd(self) -> float:
        return float(np.sqrt(self.kernel.signal_var + self.kernel.noise))


def grid_points(spec: FieldSpec) -> np.ndarray:
    """Lattice nodes in row-major order (x varies fastest)."""
    xs = np.arange(spec.nx) * spec.spacing
    ys = np.arange(spec.ny) * spec.spacing
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _gp_draw(points, kernel: KernelParams, rng):
    k = kernel.gram(points) + kernel.noise * np.eye(points.shape[0])
    L, _ = jitchol(k, base_jitter=1e-10 if kernel.noise == 0 else 0.0)
    return L @ rng.standard_normal(points.shape[0])


def sample_stationary_field(spec: FieldSpec) -> SampleSet:
    """One draw of a zero-mean RBF Gaussian process (plus white noise) on the lattice."""
    pts = grid_points(spec)
    rng = np.random.default_rng(spec.seed + FIELD_STREAM)
    return SampleSet(pts, _gp_draw(pts, spec.kernel, rng))


def regime_labels(spec: FieldSpec, points) -> np.ndarray:
    """0 for regime A, 1 for regime B."""
    points = np.asarray(points, dtype=float)
    if spec.geometry == "half-plane":
        split = (spec.nx - 1) * spec.spacing / 2 if spec.split is None else spec.split
        return (points[:, 0] > split).astype(int)
    cx, cy = (
        ((spec.nx - 1) * spec.spacing / 2, (spec.ny - 1) * spec.spacing / 2)
        if spec.center is None else spec.center
    )
    r = min(spec.nx, spec.ny) * spec.spacing / 4 if spec.radius is None else spec.radius
    return (np.hypot(points[:, 0] - cx, points[:, 1] - cy) <= r).astype(int)


def sample_two_regime_field(spec: FieldSpec) -> tuple[SampleSet, np.ndarray]:
    """Stationary draw shifted by ``gap`` inside regime B.

    Returns the field and its integer regime labels. With ``gap == 0`` the
    field equals :func:`sample_stationary_field` for the same seed.
    """
    pts = grid_points(spec)
    labels = regime_labels(spec, pts)
    if labels.min() == labels.max():
        raise ValidationError("regime geometry leaves one regime empty")
    rng = np.random.default_rng(spec.seed + FIELD_STREAM)
    z = _gp_draw(pts, spec.kernel, rng) + spec.gap * labels
    return SampleSet(pts, z), labels


def random_subsample(field: SampleSet, n: int, seed: int = 42) -> tuple[SampleSet, np.ndarray]:
    """Uniform sample of ``n`` rows without replacement.

    Returns the subsample and the selected row indices.
    """
    if n < 1 or n > field.n:
        raise ValidationError(f"cannot draw {n} of {field.n} samples")
    rng = np.random.default_rng(seed + SUBSAMPLE_STREAM)
    idx = rng.choice(field.n, size=n, replace=False)
    return field.subset(idx), idx
