"""Bit-exact readers/writers for cubes (HSC-v1), label masks (HSM-v1), and target CSVs.

Both binary containers share the same scheme: 4 magic bytes, an 8-byte
little-endian unsigned header length, a UTF-8 JSON header, then a raw
little-endian payload whose size is fully determined by the header.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .spectral import WavelengthGrid, wavelength_digest

CUBE_MAGIC = b"HSC1"
MASK_MAGIC = b"HSM1"


@dataclass(frozen=True)
class HyperCube:
    """H×W×C float32 cube, pixel-interleaved, with per-band center wavelengths.

    Input cubes have strictly increasing wavelengths (see the `grid` property);
    adapted output cubes keep target-band order, which may repeat a wavelength
    when two targets select the same input band.
    """

    data: np.ndarray  # (H, W, C) float32, C-contiguous (BIP)
    wavelengths: tuple[float, ...]

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValidationError("cube data must be H×W×C")
        if self.data.dtype != np.float32:
            raise ValidationError("cube storage must be float32")
        if self.data.shape[2] != len(self.wavelengths):
            raise ValidationError(
                f"cube has {self.data.shape[2]} bands but {len(self.wavelengths)} wavelengths"
            )
        arr = np.asarray(self.wavelengths, dtype=np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValidationError("cube wavelengths must be finite and positive")
        self.data.setflags(write=False)

    @property
    def grid(self) -> WavelengthGrid:
        """Strict wavelength grid; raises for adapted cubes with tied wavelengths."""
        return WavelengthGrid(self.wavelengths)

    def grid_digest(self) -> str:
        return wavelength_digest(self.wavelengths)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LabelMask:
    """H×W int16 class raster; labels are ≥ 0 or equal to ignore_value."""

    labels: np.ndarray  # (H, W) int16
    ignore_value: int = -1

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise ValidationError("mask labels must be H×W")
        if self.labels.dtype != np.int16:
            raise ValidationError("mask storage must be int16")
        bad = (self.labels < 0) & (self.labels != self.ignore_value)
        if np.any(bad):
            raise ValidationError(
                f"mask contains out-of-range label {int(self.labels[bad][0])} "
                f"(negative labels other than ignore_value {self.ignore_value})"
            )
        self.labels.setflags(write=False)


def _read_container(stream: bytes, magic: bytes) -> tuple[dict, bytes]:
    if len(stream) < 12:
        raise FormatError("stream too short for magic and header length")
    got = stream[:4]
    if got != magic:
        if got[:3] == magic[:3] and got[3:4].isdigit():
            raise FormatError(f"unsupported version {got.decode('ascii', 'replace')!r}")
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    (hlen,) = struct.unpack("<Q", stream[4:12])
    if 12 + hlen > len(stream):
        raise FormatError(f"declared header length {hlen} exceeds stream size")
    try:
        header = json.loads(stream[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"invalid header JSON: {e}") from None
    return header, stream[12 + hlen :]


def _pack_container(magic: bytes, header: dict, payload: bytes) -> bytes:
    hdr = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return magic + struct.pack("<Q", len(hdr)) + hdr + payload


def _require_dim(header: dict, key: str) -> int:
    v = header.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise FormatError(f"header field {key!r} must be a positive integer")
    return v


def read_cube(stream: bytes, allow_non_finite: bool = False) -> HyperCube:
    header, payload = _read_container(stream, CUBE_MAGIC)
    h = _require_dim(header, "h")
    w = _require_dim(header, "w")
    c = _require_dim(header, "c")
    if header.get("dtype") != "f32le":
        raise FormatError(f"unsupported dtype {header.get('dtype')!r}")
    if header.get("layout") != "bip":
        raise FormatError(f"unsupported layout {header.get('layout')!r}")
    wavelengths = header.get("wavelengths_nm")
    if not isinstance(wavelengths, list) or len(wavelengths) != c:
        raise FormatError("wavelengths_nm must list exactly c values")
    wl = np.asarray(wavelengths, dtype=np.float64)
    if not np.all(np.isfinite(wl)) or np.any(wl <= 0):
        raise FormatError("wavelengths_nm must be finite and positive")
    # Ties are legal (repeated nearest-band selections); decreasing is not.
    if np.any(np.diff(wl) < 0):
        raise FormatError("wavelengths_nm must be monotone non-decreasing")
    expected = h * w * c * 4
    if len(payload) != expected:
        raise FormatError(f"payload length mismatch: expected {expected} bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c).astype(np.float32, copy=True)
    if not allow_non_finite and not np.all(np.isfinite(data)):
        raise ValidationError("cube contains non-finite values (pass allow_non_finite to accept)")
    return HyperCube(data=data, wavelengths=tuple(float(x) for x in wavelengths))


def write_cube(cube: HyperCube) -> bytes:
    header = {
        "h": cube.height,
        "w": cube.width,
        "c": cube.bands,
        "wavelengths_nm": list(cube.wavelengths),
        "dtype": "f32le",
        "layout": "bip",
    }
    payload = np.ascontiguousarray(cube.data, dtype="<f4").tobytes()
    return _pack_container(CUBE_MAGIC, header, payload)


def read_mask(stream: bytes) -> LabelMask:
    header, payload = _read_container(stream, MASK_MAGIC)
    h = _require_dim(header, "h")
    w = _require_dim(header, "w")
    if header.get("dtype") != "i16le":
        raise FormatError(f"unsupported dtype {header.get('dtype')!r}")
    ignore = header.get("ignore_value", -1)
    if not isinstance(ignore, int) or isinstance(ignore, bool):
        raise FormatError("ignore_value must be an integer")
    expected = h * w * 2
    if len(payload) != expected:
        raise FormatError(f"payload length mismatch: expected {expected} bytes, got {len(payload)}")
    labels = np.frombuffer(payload, dtype="<i2").reshape(h, w).astype(np.int16, copy=True)
    return LabelMask(labels=labels, ignore_value=ignore)


def write_mask(mask: LabelMask) -> bytes:
    header = {
        "h": int(mask.labels.shape[0]),
        "w": int(mask.labels.shape[1]),
        "dtype": "i16le",
        "ignore_value": mask.ignore_value,
    }
    payload = np.ascontiguousarray(mask.labels, dtype="<i2").tobytes()
    return _pack_container(MASK_MAGIC, header, payload)


def read_targets_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    """Parse a regression-targets CSV.

    Returns (sample_ids, parameter_names, N×P float array). Rows keep file
    order; duplicate sample ids, ragged rows, and non-finite cells are errors.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        raise FormatError("empty targets CSV")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "sample_id":
        raise FormatError('targets CSV header must be "sample_id,<param>,..."')
    names = header[1:]
    if len(rows) < 2:
        raise FormatError("targets CSV has a header but no data rows")
    ids: list[str] = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"targets CSV line {lineno}: ragged row")
        ids.append(row[0])
        try:
            values.append([float(c) for c in row[1:]])
        except ValueError:
            raise FormatError(f"targets CSV line {lineno}: non-numeric cell") from None
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValidationError(f"duplicate sample_id {dup!r}")
    table = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(table)):
        raise ValidationError("targets CSV contains non-finite values")
    return ids, names, table
