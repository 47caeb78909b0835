"""hsadapt: adapt hyperspectral cubes into a target multispectral sensor's
band space (nearest-band selection or SRF resampling) and score the results."""

__version__ = "0.1.0"

from .band_select import SelectionPlan, apply_selection, nearest_band_indices
from .cube_io import HyperCube, LabelMask, read_cube, read_mask, read_targets_csv, write_cube, write_mask
from .metrics import ConfusionMatrix, RegReport, SegReport, accumulate_confusion, baseline_mse, miou, nmse
from .resample import WeightMatrix, build_weight_matrix, resample_cube, weight_summary
from .spectral import (
    SensorSpec,
    SrfTable,
    TargetBand,
    WavelengthGrid,
    parse_sensor_spec,
    parse_srf_table,
    srf_evaluate,
)
from .synth import (
    AbsorptionFeatureSpec,
    attenuation_experiment,
    gen_absorption_cube,
    gen_flat_cube,
    gen_random_cube,
)

__all__ = [
    "SelectionPlan",
    "apply_selection",
    "nearest_band_indices",
    "HyperCube",
    "LabelMask",
    "read_cube",
    "write_cube",
    "read_mask",
    "write_mask",
    "read_targets_csv",
    "ConfusionMatrix",
    "SegReport",
    "RegReport",
    "accumulate_confusion",
    "miou",
    "baseline_mse",
    "nmse",
    "WeightMatrix",
    "build_weight_matrix",
    "resample_cube",
    "weight_summary",
    "WavelengthGrid",
    "TargetBand",
    "SensorSpec",
    "SrfTable",
    "parse_sensor_spec",
    "parse_srf_table",
    "srf_evaluate",
    "AbsorptionFeatureSpec",
    "gen_flat_cube",
    "gen_absorption_cube",
    "gen_random_cube",
    "attenuation_experiment",
]
