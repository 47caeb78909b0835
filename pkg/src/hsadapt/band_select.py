"""Nearest-band selection: map each target band to the input band with the
closest center wavelength and gather those channels unmodified."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cube_io import HyperCube
from .errors import GridMismatchError, ValidationError
from .spectral import SensorSpec, WavelengthGrid


@dataclass(frozen=True)
class SelectionPlan:
    """Per target band: the chosen input band index and its center distance in nm.

    Indices may repeat when a coarse input grid sends two targets to the same
    band; repeats are kept and surfaced in the summary.
    """

    indices: tuple[int, ...]
    distances: tuple[float, ...]
    source_grid_hash: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "indices": list(self.indices),
                "distances_nm": list(self.distances),
                "source_grid_hash": self.source_grid_hash,
            },
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SelectionPlan":
        doc = json.loads(text)
        return cls(
            indices=tuple(int(i) for i in doc["indices"]),
            distances=tuple(float(d) for d in doc["distances_nm"]),
            source_grid_hash=str(doc["source_grid_hash"]),
        )

    def summary(self) -> dict:
        counts: dict[int, int] = {}
        for i in self.indices:
            counts[i] = counts.get(i, 0) + 1
        return {
            "n_targets": len(self.indices),
            "indices": list(self.indices),
            "distances_nm": list(self.distances),
            "max_distance_nm": max(self.distances),
            "repeated_indices": sorted(i for i, n in counts.items() if n > 1),
        }


def nearest_band_indices(grid: WavelengthGrid, spec: SensorSpec) -> SelectionPlan:
    """For each target band pick argmin_j |λ_j − μ_k|, ties to the lowest index."""
    lam = grid.as_array()
    indices = []
    distances = []
    for mu in spec.centers:
        d = np.abs(lam - mu)
        j = int(np.argmin(d))  # argmin returns the first minimum: lowest-index tie-break
        indices.append(j)
        distances.append(float(d[j]))
    return SelectionPlan(
        indices=tuple(indices),
        distances=tuple(distances),
        source_grid_hash=grid.digest(),
    )


def apply_selection(cube: HyperCube, plan: SelectionPlan) -> HyperCube:
    """Gather the planned channels into a K-band cube. Pure gather, no arithmetic.

    The output wavelength list carries the selected input wavelengths in
    target-band order (ties repeat when two targets select the same band).
    """
    if plan.source_grid_hash != cube.grid_digest():
        raise GridMismatchError("selection plan was built for a different wavelength grid")
    for j in plan.indices:
        if not 0 <= j < cube.bands:
            raise ValidationError(f"plan index {j} out of range for {cube.bands}-band cube")
    idx = np.asarray(plan.indices, dtype=np.intp)
    out = np.ascontiguousarray(cube.data[:, :, idx])
    selected = tuple(cube.wavelengths[j] for j in plan.indices)
    return HyperCube(data=out, wavelengths=selected)
