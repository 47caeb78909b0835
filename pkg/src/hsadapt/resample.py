"""SRF-based spectral resampling: build a column-normalized weight matrix from
tabulated response functions and apply it as a per-pixel spectral dot product,
tiled over pixel blocks for throughput."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cube_io import HyperCube
from .errors import EmptySupportError, FormatError, GridMismatchError, ValidationError
from .spectral import SensorSpec, SrfTable, WavelengthGrid, srf_evaluate, wavelength_digest

DEFAULT_TILE = 64


@dataclass(frozen=True)
class WeightMatrix:
    """C_in×K nonnegative matrix whose columns sum to one.

    Column k holds the normalized response of target band k sampled at the
    input band centers; support_counts[k] is the number of nonzero entries.
    """

    weights: np.ndarray  # (C_in, K) float64
    support_counts: tuple[int, ...]
    source_grid_hash: str
    band_names: tuple[str, ...]
    band_centers: tuple[float, ...]
    source_wavelengths: tuple[float, ...]

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.dtype != np.float64:
            raise ValidationError("weights must be a 2-D float64 matrix")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and nonnegative")
        sums = w.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValidationError("every weight column must sum to 1 within 1e-9")
        if any(c < 1 for c in self.support_counts):
            raise ValidationError("every target band needs at least one supported input band")
        w.setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_targets(self) -> int:
        return self.weights.shape[1]


def build_weight_matrix(grid: WavelengthGrid, table: SrfTable, spec: SensorSpec) -> WeightMatrix:
    """Sample each target band's SRF at the input band centers and normalize
    each column to unit sum. A band whose response never overlaps the grid is
    a hard error, not a silent zero column."""
    if table.n_bands != len(spec.bands):
        raise ValidationError("SRF table is not aligned to the sensor spec")
    lam = grid.as_array()
    raw = np.empty((len(lam), table.n_bands), dtype=np.float64)
    for k in range(table.n_bands):
        raw[:, k] = [srf_evaluate(table, k, float(wl)) for wl in lam]
    sums = raw.sum(axis=0)
    empty = np.nonzero(sums == 0.0)[0]
    if empty.size:
        names = [spec.bands[k].name for k in empty]
        raise EmptySupportError(
            f"band(s) {names} have no response at any input wavelength; "
            "the sensor/grid pairing is unusable"
        )
    weights = raw / sums
    support = tuple(int(np.count_nonzero(weights[:, k])) for k in range(weights.shape[1]))
    return WeightMatrix(
        weights=weights,
        support_counts=support,
        source_grid_hash=grid.digest(),
        band_names=tuple(spec.band_names),
        band_centers=tuple(float(b.center) for b in spec.bands),
        source_wavelengths=tuple(grid.values),
    )


def resample_cube(
    cube: HyperCube,
    w: WeightMatrix,
    tile: int = DEFAULT_TILE,
    threads: int = 1,
    allow_nan: bool = False,
) -> HyperCube:
    """Project every pixel's spectrum onto the target bands.

    Accumulation runs in double precision regardless of storage precision;
    results are bit-identical for any tile size or thread count because each
    pixel's dot product is computed independently.
    """
    if w.source_grid_hash != cube.grid_digest():
        raise GridMismatchError("weight matrix was built for a different wavelength grid")
    if cube.bands != w.n_inputs:
        raise ValidationError(f"cube has {cube.bands} bands, weight matrix expects {w.n_inputs}")
    if tile < 1:
        raise ValidationError("tile size must be >= 1")
    if threads < 1:
        raise ValidationError("thread count must be >= 1")
    if not allow_nan and not np.all(np.isfinite(cube.data)):
        raise ValidationError("cube contains non-finite values (pass allow_nan to accept)")

    h, width = cube.height, cube.width
    out = np.empty((h, width, w.n_targets), dtype=np.float32)
    supported = w.weights > 0.0

    def project(block: np.ndarray) -> np.ndarray:
        # Fixed-order accumulation over input bands: every pixel sums j = 0..C-1
        # in the same order whatever the tile shape, so output bytes never
        # depend on tiling or thread count (BLAS gemm would not guarantee that).
        n = block.shape[0]
        acc = np.zeros((n, w.n_targets), dtype=np.float64)
        for j in range(w.n_inputs):
            acc += block[:, j, None] * w.weights[j, :]
        return acc

    def run_tile(r0: int, c0: int) -> None:
        r1 = min(r0 + tile, h)
        c1 = min(c0 + tile, width)
        block = cube.data[r0:r1, c0:c1, :].astype(np.float64).reshape(-1, w.n_inputs)
        shape = (r1 - r0, c1 - c0, w.n_targets)
        if allow_nan:
            nan_mask = np.isnan(block)
            if nan_mask.any():
                # NaN in a supported input band poisons the affected output
                # bands only; unsupported bands must not leak NaN through 0*NaN.
                poisoned = nan_mask @ supported
                res = project(np.where(nan_mask, 0.0, block))
                res[poisoned] = np.nan
                out[r0:r1, c0:c1, :] = res.astype(np.float32).reshape(shape)
                return
        out[r0:r1, c0:c1, :] = project(block).astype(np.float32).reshape(shape)

    coords = [(r, c) for r in range(0, h, tile) for c in range(0, width, tile)]
    if threads == 1 or len(coords) == 1:
        for r, c in coords:
            run_tile(r, c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda rc: run_tile(*rc), coords))

    return HyperCube(data=out, wavelengths=w.band_centers)


def weight_summary(w: WeightMatrix) -> dict:
    """Per target band: support count, effective width (inverse participation
    ratio, in band counts and nm), and weighted-mean wavelength."""
    lam = np.asarray(w.source_wavelengths, dtype=np.float64)
    spacing = float(np.median(np.diff(lam))) if lam.size > 1 else 0.0
    bands = []
    for k, name in enumerate(w.band_names):
        col = w.weights[:, k]
        eff = float(1.0 / np.sum(col * col))
        bands.append(
            {
                "name": name,
                "center_nm": w.band_centers[k],
                "support_count": w.support_counts[k],
                "effective_width_bands": eff,
                "effective_width_nm": eff * spacing,
                "weighted_mean_wavelength_nm": float(np.dot(col, lam)),
            }
        )
    return {"n_inputs": w.n_inputs, "n_targets": w.n_targets, "bands": bands}


def write_weights_csv(w: WeightMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["band_index", "wavelength_nm", *w.band_names])
    for j in range(w.n_inputs):
        writer.writerow(
            [j, repr(w.source_wavelengths[j]), *(repr(float(x)) for x in w.weights[j])]
        )
    return out.getvalue()


def read_weights_csv(text: str) -> WeightMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        rows = [r for r in reader if r]
    except csv.Error as e:
        raise FormatError(f"unreadable weights CSV: {e}") from None
    if not rows or rows[0][:2] != ["band_index", "wavelength_nm"]:
        raise FormatError('weights CSV must start with "band_index,wavelength_nm,..." header')
    names = tuple(rows[0][2:])
    if not names:
        raise FormatError("weights CSV has no target band columns")
    try:
        wl = [float(r[1]) for r in rows[1:]]
        data = np.asarray([[float(c) for c in r[2:]] for r in rows[1:]], dtype=np.float64)
    except (ValueError, IndexError):
        raise FormatError("weights CSV: non-numeric or ragged row") from None
    support = tuple(int(np.count_nonzero(data[:, k])) for k in range(data.shape[1]))
    grid = WavelengthGrid(tuple(wl))
    # Centers are not stored in the CSV; fall back to weighted means.
    centers = tuple(float(np.dot(data[:, k], wl)) for k in range(data.shape[1]))
    return WeightMatrix(
        weights=data,
        support_counts=support,
        source_grid_hash=grid.digest(),
        band_names=names,
        band_centers=centers,
        source_wavelengths=tuple(wl),
    )
