"""File interchange: NIfTI-1 and NPY fields/maps, JSON and CSV reports.

Only the NIfTI-1 subset registration tools actually emit is supported:
single-file ``.nii`` (optionally gzipped), float32/float64 voxels, either byte
order. Vector fields carry their components in ``dim[5]`` (intent 1007,
``dim[4] == 1``) or in ``dim[4]``. Header extensions are skipped.

NPY fields are arrays shaped ``(*extents, rank)`` indexed ``[x, y, (z,) c]``.

Every writer goes through a temporary file in the target directory followed
by an atomic rename, so a failed write never leaves a partial output.
"""
from __future__ import annotations

import csv
import gzip
import io
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorruptHeader, IoFailure, ShapeMismatch, UnsupportedDatatype
from .grid import DisplacementField, GridDims, VoxelMask
from .jacobian import ScalarMap, Variant
from .metrics import DiffeoReport, Violation

SCHEMA_VERSION = 1
HEADER_SIZE = 348
INTENT_VECTOR = 1007
_DTYPES = {16: "f4", 64: "f8"}
_DTYPE_CODES = {"f4": (16, 32), "f8": (64, 64)}

CSV_COLUMNS = [
    "source",
    "rank",
    "extents",
    "total_points",
    "partially_defined_points",
    "mask_applied",
    "central_nonpositive_count",
    "central_nonpositive_pct",
    "any_nonpositive_count",
    "any_nonpositive_pct",
    "measure",
    "nd_voxel",
    "nd_physical",
    "nd_pct",
    "is_digital_diffeomorphism",
    "first_violation_point",
    "first_violation_variant",
    "first_violation_value",
]


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_bytes(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise CorruptHeader(f"{path}: bad gzip stream: {exc}") from exc
    return raw


def _is_nifti_path(path) -> bool:
    name = str(path).lower()
    return name.endswith(".nii") or name.endswith(".nii.gz")


# -- NIfTI-1 -----------------------------------------------------------------


class NiftiHeader:
    """The header fields this package reads and writes."""

    def __init__(self, dim, datatype, pixdim, vox_offset=352.0, scl_slope=1.0, scl_inter=0.0,
                 intent_code=0, endian="<"):
        self.dim = [int(d) for d in dim]
        self.datatype = int(datatype)
        self.pixdim = [float(p) for p in pixdim]
        self.vox_offset = float(vox_offset)
        self.scl_slope = float(scl_slope)
        self.scl_inter = float(scl_inter)
        self.intent_code = int(intent_code)
        self.endian = endian

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.dim[1 : self.dim[0] + 1])

    @classmethod
    def parse(cls, raw: bytes) -> "NiftiHeader":
        if len(raw) < HEADER_SIZE:
            raise CorruptHeader(f"file too short for a NIfTI-1 header ({len(raw)} bytes)")
        for endian in "<>":
            if struct.unpack_from(endian + "i", raw, 0)[0] == HEADER_SIZE:
                break
        else:
            raise CorruptHeader("sizeof_hdr is not 348 in either byte order")
        magic = raw[344:348]
        if magic != b"n+1\x00":
            raise CorruptHeader(f"unsupported NIfTI magic {magic!r}; only single-file n+1 is read")
        dim = struct.unpack_from(endian + "8h", raw, 40)
        if not 1 <= dim[0] <= 7 or any(d < 1 for d in dim[1 : dim[0] + 1]):
            raise CorruptHeader(f"invalid dim field {dim}")
        intent_code, datatype = struct.unpack_from(endian + "2h", raw, 68)
        pixdim = struct.unpack_from(endian + "8f", raw, 76)
        vox_offset, slope, inter = struct.unpack_from(endian + "3f", raw, 108)
        return cls(dim, datatype, pixdim, vox_offset, slope, inter, intent_code, endian)

    def pack(self) -> bytes:
        e = self.endian
        buf = bytearray(HEADER_SIZE + 4)
        struct.pack_into(e + "i", buf, 0, HEADER_SIZE)
        struct.pack_into(e + "8h", buf, 40, *(self.dim + [1] * (8 - len(self.dim))))
        bitpix = _DTYPE_CODES[_DTYPES[self.datatype]][1]
        struct.pack_into(e + "4h", buf, 68, self.intent_code, self.datatype, bitpix, 0)
        struct.pack_into(e + "8f", buf, 76, *(self.pixdim + [1.0] * (8 - len(self.pixdim))))
        struct.pack_into(e + "3f", buf, 108, self.vox_offset, self.scl_slope, self.scl_inter)
        struct.pack_into(e + "B", buf, 123, 2)  # xyzt_units: mm
        buf[344:348] = b"n+1\x00"
        return bytes(buf)


def read_nifti(path) -> tuple[np.ndarray, NiftiHeader]:
    """Voxel array (axes in ``dim`` order, native float64) and header."""
    raw = _read_bytes(path)
    hdr = NiftiHeader.parse(raw)
    if hdr.datatype not in _DTYPES:
        raise UnsupportedDatatype(f"NIfTI datatype {hdr.datatype} is not float32 (16) or float64 (64)")
    dtype = np.dtype(hdr.endian + _DTYPES[hdr.datatype])
    offset = int(hdr.vox_offset)
    count = int(np.prod(hdr.shape))
    if offset < HEADER_SIZE or offset + count * dtype.itemsize > len(raw):
        raise CorruptHeader(f"voxel data ({count} x {dtype.itemsize} bytes at {offset}) exceeds file size")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    data = data.reshape(hdr.shape, order="F").astype(np.float64)
    slope, inter = hdr.scl_slope, hdr.scl_inter
    # slope 0 (or NaN) means "no scaling"
    if np.isfinite(slope) and slope != 0.0 and (slope != 1.0 or inter != 0.0):
        data = data * slope + inter
    return data, hdr


def nifti_bytes(data: np.ndarray, pixdim: Sequence[float], dtype: str = "f4", intent_code: int = 0,
                endian: str = "<") -> bytes:
    data = np.asarray(data)
    dim = [data.ndim, *data.shape]
    hdr = NiftiHeader(dim, _DTYPE_CODES[dtype][0], [1.0, *pixdim], 352.0, 1.0, 0.0, intent_code, endian)
    body = np.asarray(data, dtype=np.dtype(endian + dtype)).tobytes(order="F")
    return hdr.pack() + body


def _encode(path, payload: bytes) -> bytes:
    # mtime=0 keeps gzip output byte-stable
    return gzip.compress(payload, mtime=0) if str(path).lower().endswith(".gz") else payload


def write_nifti(path, data: np.ndarray, pixdim: Sequence[float], dtype: str = "f4", intent_code: int = 0,
                endian: str = "<") -> None:
    _atomic_write(path, _encode(path, nifti_bytes(data, pixdim, dtype, intent_code, endian)))


# -- fields ------------------------------------------------------------------


def _field_from_nifti(data: np.ndarray, hdr: NiftiHeader, layout: str) -> tuple[np.ndarray, tuple[float, ...]]:
    shape = hdr.shape
    n = len(shape)
    if layout == "auto":
        if n >= 5 and shape[4] > 1:
            layout = "dim5"
        elif n == 4:
            layout = "dim4"
        else:
            raise ShapeMismatch(f"cannot locate vector components in NIfTI shape {shape}")
    if layout == "dim5":
        if n < 5 or shape[3] != 1 or any(s != 1 for s in shape[5:]):
            raise ShapeMismatch(f"dim5 layout needs shape (x, y, z, 1, c), got {shape}")
        ncomp = shape[4]
        spatial = shape[:3]
        arr = data.reshape(spatial + (ncomp,), order="F")
    elif layout == "dim4":
        if n != 4:
            raise ShapeMismatch(f"dim4 layout needs shape (x, y, z, c), got {shape}")
        ncomp = shape[3]
        spatial = shape[:3]
        arr = data
    else:
        raise ValueError(f"unknown layout {layout!r}")
    if ncomp not in (2, 3):
        raise ShapeMismatch(f"component dimension is {ncomp}; expected 2 or 3")
    if any(s != 1 for s in spatial[ncomp:]):
        raise ShapeMismatch(f"{ncomp} components but spatial shape {spatial}")
    arr = arr.reshape(spatial[:ncomp] + (ncomp,))
    spacing = tuple(abs(p) if p and np.isfinite(p) else 1.0 for p in hdr.pixdim[1 : ncomp + 1])
    return arr, spacing


def read_field(path, layout: str = "auto", units: str = "voxel", spacing: Sequence[float] = ()) -> DisplacementField:
    """Load a displacement field from ``.nii``/``.nii.gz`` or ``.npy``.

    ``units="physical"`` divides each displacement component by the matching
    voxel spacing. ``spacing`` overrides the file's spacing (NPY has none).
    """
    if units not in ("voxel", "physical"):
        raise ValueError("units must be 'voxel' or 'physical'")
    if str(path).lower().endswith(".npy"):
        try:
            arr = np.load(io.BytesIO(_read_bytes(path)), allow_pickle=False)
        except ValueError as exc:
            raise CorruptHeader(f"{path}: {exc}") from exc
        if arr.dtype.kind != "f":
            raise UnsupportedDatatype(f"NPY dtype {arr.dtype} is not floating point")
        if arr.ndim not in (3, 4) or arr.shape[-1] != arr.ndim - 1:
            raise ShapeMismatch(f"NPY field must be shaped (*extents, rank), got {arr.shape}")
        file_spacing = (1.0,) * (arr.ndim - 1)
        arr = arr.astype(np.float64)
    else:
        data, hdr = read_nifti(path)
        arr, file_spacing = _field_from_nifti(data, hdr, layout)
    spacing = tuple(spacing) or file_spacing
    if units == "physical":
        arr = arr / np.asarray(spacing)
    return DisplacementField(GridDims(arr.shape[:-1], spacing), arr)


def write_field(field: DisplacementField, path, dtype: str = "f8", endian: str = "<") -> None:
    """Write a field as NPY or as a NIfTI vector image (intent 1007, components in dim[5])."""
    if str(path).lower().endswith(".npy"):
        buf = io.BytesIO()
        np.save(buf, field.data)
        _atomic_write(path, buf.getvalue())
        return
    if not _is_nifti_path(path):
        raise IoFailure(f"{path}: expected a .npy, .nii or .nii.gz file name")
    ext = field.dims.extents + (1,) * (3 - field.rank)
    data = field.data.reshape(ext + (1, field.rank))
    pixdim = list(field.dims.spacing) + [1.0] * (3 - field.rank) + [1.0, 1.0]
    write_nifti(path, data, pixdim, dtype, INTENT_VECTOR, endian)


def read_mask(path, dims: GridDims | None = None) -> VoxelMask:
    """Load a mask volume; any non-zero voxel is inside."""
    if str(path).lower().endswith(".npy"):
        arr = np.load(io.BytesIO(_read_bytes(path)), allow_pickle=False)
        spacing = ()
    else:
        raw = _read_bytes(path)
        hdr = NiftiHeader.parse(raw)
        if hdr.datatype not in _DTYPES:
            dtype = {2: "u1", 4: "i2", 8: "i4", 256: "i1", 512: "u2", 768: "u4"}.get(hdr.datatype)
            if dtype is None:
                raise UnsupportedDatatype(f"mask datatype {hdr.datatype} is not supported")
            arr = np.frombuffer(raw, dtype=hdr.endian + dtype, count=int(np.prod(hdr.shape)),
                                offset=int(hdr.vox_offset)).reshape(hdr.shape, order="F")
        else:
            arr, hdr = read_nifti(path)
        spacing = tuple(hdr.pixdim[1 : 1 + len(hdr.shape)])
    arr = np.asarray(arr)
    while arr.ndim > 2 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    if dims is None:
        dims = GridDims(arr.shape, spacing[: arr.ndim] if spacing else ())
    if arr.shape != dims.extents:
        raise ShapeMismatch(f"mask shape {arr.shape} does not match grid {dims.extents}")
    return VoxelMask(dims, arr != 0)


def write_mask(mask: VoxelMask, path) -> None:
    if str(path).lower().endswith(".npy"):
        buf = io.BytesIO()
        np.save(buf, mask.data)
        _atomic_write(path, buf.getvalue())
    else:
        write_nifti(path, mask.data.astype(np.float32), mask.dims.spacing)


# -- scalar maps ---------------------------------------------------------------


def write_map(smap: ScalarMap, path) -> None:
    """Write a map as float32 NIfTI (or float64 NPY); undefined points become NaN."""
    values = np.where(smap.defined, smap.values, np.nan)
    if str(path).lower().endswith(".npy"):
        buf = io.BytesIO()
        np.save(buf, values)
        _atomic_write(path, buf.getvalue())
        return
    if not _is_nifti_path(path):
        raise IoFailure(f"{path}: expected a .npy, .nii or .nii.gz file name")
    write_nifti(path, values, smap.dims.spacing, "f4")


def read_map(path) -> ScalarMap:
    if str(path).lower().endswith(".npy"):
        values = np.load(io.BytesIO(_read_bytes(path)), allow_pickle=False).astype(np.float64)
        return ScalarMap.from_values(GridDims(values.shape), values)
    values, hdr = read_nifti(path)
    return ScalarMap.from_values(GridDims(values.shape, hdr.pixdim[1 : values.ndim + 1]), values)


# -- reports -------------------------------------------------------------------


def report_to_dict(report: DiffeoReport) -> dict:
    fv = report.first_violation
    return {
        "schema_version": SCHEMA_VERSION,
        "source": report.source,
        "rank": report.rank,
        "extents": list(report.extents),
        "spacing": list(report.spacing),
        "mask_applied": report.mask_applied,
        "total_points": report.total_points,
        "partially_defined_points": report.partially_defined_points,
        "central_nonpositive_count": report.central_nonpositive_count,
        "central_nonpositive_pct": report.central_nonpositive_pct,
        "any_nonpositive_count": report.any_nonpositive_count,
        "any_nonpositive_pct": report.any_nonpositive_pct,
        "measure": report.measure_name,
        "nd_voxel": report.nd_measure,
        "nd_physical": report.nd_measure_physical,
        "nd_pct": report.nd_measure_pct,
        "is_digital_diffeomorphism": report.is_digital_diffeomorphism,
        "first_violation": None
        if fv is None
        else {"point": list(fv.point), "variant": fv.variant.name, "value": fv.value},
    }


def report_from_dict(d: dict) -> DiffeoReport:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
    fv = d["first_violation"]
    return DiffeoReport(
        rank=d["rank"],
        extents=tuple(d["extents"]),
        spacing=tuple(d["spacing"]),
        total_points=d["total_points"],
        partially_defined_points=d["partially_defined_points"],
        central_nonpositive_count=d["central_nonpositive_count"],
        any_nonpositive_count=d["any_nonpositive_count"],
        nd_measure=d["nd_voxel"],
        nd_measure_physical=d["nd_physical"],
        first_violation=None
        if fv is None
        else Violation(tuple(fv["point"]), Variant.parse(fv["variant"]), fv["value"]),
        mask_applied=d["mask_applied"],
        source=d.get("source", ""),
    )


def report_json(report: DiffeoReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def _csv_row(report: DiffeoReport) -> list:
    d = report_to_dict(report)
    fv = d["first_violation"]
    row = dict(d)
    row["extents"] = "x".join(str(e) for e in report.extents)
    row["first_violation_point"] = "" if fv is None else ",".join(str(i) for i in fv["point"])
    row["first_violation_variant"] = "" if fv is None else fv["variant"]
    row["first_violation_value"] = "" if fv is None else repr(fv["value"])
    return [row[c] for c in CSV_COLUMNS]


def write_report(report: DiffeoReport | Iterable[DiffeoReport], path, fmt: str = "json") -> None:
    """Write one report as JSON, or one or more reports as CSV rows."""
    if fmt == "json":
        if not isinstance(report, DiffeoReport):
            raise ValueError("JSON output takes a single report")
        _atomic_write(path, report_json(report).encode())
    elif fmt == "csv":
        reports = [report] if isinstance(report, DiffeoReport) else list(report)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow(_csv_row(r))
        _atomic_write(path, buf.getvalue().encode())
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path) -> DiffeoReport:
    try:
        return report_from_dict(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
