"""Force-strain deformation curves: ingestion, resampling, distance and
tissue-thickness selection.

Candidate tube walls are compared against a human-finger reference curve
by RMS force difference on a common strain grid; the winning sigma is the
closest candidate, ties broken toward the smaller (more deformable) wall.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import EmptyOverlap, GridOutOfRange, MalformedTable, NonMonotoneStrain

DEFAULT_GRID_POINTS = 100


@dataclass
class DeformationCurve:
    """Ordered (axial strain, tensile force N) samples under one label."""

    strains: np.ndarray
    forces: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.strains = np.asarray(self.strains, dtype=np.float64).reshape(-1)
        self.forces = np.asarray(self.forces, dtype=np.float64).reshape(-1)

    def validate(self) -> "DeformationCurve":
        if len(self.strains) != len(self.forces):
            raise MalformedTable(f"{self.label}: strain/force length mismatch")
        if len(self.strains) < 2:
            raise MalformedTable(f"{self.label}: a curve needs at least 2 samples")
        if not np.all(np.isfinite(self.strains)) or not np.all(np.isfinite(self.forces)):
            raise MalformedTable(f"{self.label}: non-finite sample")
        if self.strains[0] < 0:
            raise NonMonotoneStrain(f"{self.label}: first strain must be >= 0")
        if np.any(np.diff(self.strains) <= 0):
            raise NonMonotoneStrain(f"{self.label}: strains must be strictly increasing")
        if np.any(self.forces < 0):
            raise MalformedTable(f"{self.label}: negative force")
        return self

    @property
    def min_strain(self) -> float:
        return float(self.strains[0])

    @property
    def max_strain(self) -> float:
        return float(self.strains[-1])


@dataclass
class ThicknessCandidate:
    sigma: float
    curve: DeformationCurve

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def load_curves(text: str) -> list[DeformationCurve]:
    """Parse a strain,force,label CSV (header required) into one curve per
    label, samples sorted by strain."""
    if not text.strip():
        raise MalformedTable("empty curve table")
    reader = csv.DictReader(io.StringIO(text))
    required = {"strain", "force", "label"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise MalformedTable(f"curve table needs columns {sorted(required)}, got {reader.fieldnames}")
    rows: dict[str, list[tuple[float, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            strain = float(row["strain"])
            force = float(row["force"])
        except (TypeError, ValueError):
            raise MalformedTable(f"non-numeric value at line {lineno}") from None
        rows.setdefault(row["label"], []).append((strain, force))
    if not rows:
        raise MalformedTable("curve table has a header but no rows")
    curves = []
    for label, samples in rows.items():
        samples.sort()
        strains = np.array([s for s, _ in samples])
        if np.any(np.diff(strains) == 0):
            raise NonMonotoneStrain(f"{label}: duplicate strain value")
        curves.append(DeformationCurve(strains, np.array([f for _, f in samples]), label).validate())
    return curves


def dump_curves(curves: list[DeformationCurve]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["strain", "force", "label"])
    for c in curves:
        for s, f in zip(c.strains, c.forces):
            writer.writerow([repr(float(s)), repr(float(f)), c.label])
    return out.getvalue()


def resample_curve(curve: DeformationCurve, grid) -> DeformationCurve:
    """Piecewise-linear interpolation of force on the given strain grid."""
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if len(grid) == 0:
        raise GridOutOfRange("empty resampling grid")
    if grid[0] < curve.min_strain - 1e-12 or grid[-1] > curve.max_strain + 1e-12:
        raise GridOutOfRange(
            f"{curve.label}: grid [{grid[0]}, {grid[-1]}] leaves the curve range "
            f"[{curve.min_strain}, {curve.max_strain}]"
        )
    return DeformationCurve(grid, np.interp(grid, curve.strains, curve.forces), curve.label)


def common_grid(a: DeformationCurve, b: DeformationCurve, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    lo = max(a.min_strain, b.min_strain)
    hi = min(a.max_strain, b.max_strain)
    if lo >= hi:
        raise EmptyOverlap(f"curves {a.label!r} and {b.label!r} have disjoint strain ranges")
    return np.linspace(lo, hi, points)


def curve_distance(a: DeformationCurve, b: DeformationCurve,
                   points: int = DEFAULT_GRID_POINTS, metric: str = "rms") -> float:
    """RMS (default) or max-abs force difference over the common strain grid."""
    grid = common_grid(a, b, points)
    fa = resample_curve(a, grid).forces
    fb = resample_curve(b, grid).forces
    if metric == "rms":
        return float(np.sqrt(np.mean((fa - fb) ** 2)))
    if metric == "max_abs":
        return float(np.max(np.abs(fa - fb)))
    raise ValueError(f"unknown metric {metric!r}")


def select_thickness(candidates: list[ThicknessCandidate], human: DeformationCurve,
                     points: int = DEFAULT_GRID_POINTS, metric: str = "rms"):
    """Pick the sigma whose curve is closest to the human reference.

    Returns (sigma_star, {sigma: distance}); ties break toward smaller sigma.
    """
    if not candidates:
        raise ValueError("need at least one thickness candidate")
    distances = {}
    for cand in candidates:
        try:
            distances[cand.sigma] = curve_distance(cand.curve, human, points, metric)
        except EmptyOverlap as exc:
            raise EmptyOverlap(f"sigma={cand.sigma}: {exc}") from None
    sigma_star = min(distances, key=lambda s: (distances[s], s))
    return sigma_star, distances
