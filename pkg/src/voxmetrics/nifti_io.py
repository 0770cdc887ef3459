"""Single-file NIfTI-1 reader and writer (``.nii`` and gzipped ``.nii.gz``).

Only 3D images with datatypes uint8, int16, int32, float32 and float64 are
accepted. The affine in ``srow_x/y/z`` is carried through unchanged; only
``pixdim[1:4]`` is used as voxel spacing.
"""

from __future__ import annotations

import gzip
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDim,
    MagicMismatch,
    NiftiError,
    NonIntegerLabels,
    NonPositiveSpacing,
    TruncatedData,
    UnsupportedDatatype,
)
from .volume import LabelVolume, Volume, default_affine

HEADER_SIZE = 348
VOX_OFFSET = 352
MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIRED = b"ni1\x00"
GZIP_MAGIC = b"\x1f\x8b"

DATATYPES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
}

# Field layout of the 348-byte header, little-endian.
_HEADER_FIELDS = [
    ("sizeof_hdr", "i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "i4"),
    ("session_error", "i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "i2", (8,)),
    ("intent_p1", "f4"),
    ("intent_p2", "f4"),
    ("intent_p3", "f4"),
    ("intent_code", "i2"),
    ("datatype", "i2"),
    ("bitpix", "i2"),
    ("slice_start", "i2"),
    ("pixdim", "f4", (8,)),
    ("vox_offset", "f4"),
    ("scl_slope", "f4"),
    ("scl_inter", "f4"),
    ("slice_end", "i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "f4"),
    ("cal_min", "f4"),
    ("slice_duration", "f4"),
    ("toffset", "f4"),
    ("glmax", "i4"),
    ("glmin", "i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "i2"),
    ("sform_code", "i2"),
    ("quatern_b", "f4"),
    ("quatern_c", "f4"),
    ("quatern_d", "f4"),
    ("qoffset_x", "f4"),
    ("qoffset_y", "f4"),
    ("qoffset_z", "f4"),
    ("srow_x", "f4", (4,)),
    ("srow_y", "f4", (4,)),
    ("srow_z", "f4", (4,)),
    ("intent_name", "S16"),
    ("magic", "S4"),
]
HEADER_DTYPE = np.dtype([(f[0], "<" + f[1], *f[2:]) if f[1][0] not in "S" else f for f in _HEADER_FIELDS])
assert HEADER_DTYPE.itemsize == HEADER_SIZE


@dataclass(frozen=True)
class NiftiHeader:
    sizeof_hdr: int
    dim: tuple[int, ...]
    datatype: int
    bitpix: int
    pixdim: tuple[float, ...]
    vox_offset: float
    scl_slope: float
    scl_inter: float
    qform_code: int
    sform_code: int
    srow_x: tuple[float, ...]
    srow_y: tuple[float, ...]
    srow_z: tuple[float, ...]
    magic: bytes
    big_endian: bool = False

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.dim[1:4])

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(float(p) for p in self.pixdim[1:4])

    @property
    def dtype(self) -> np.dtype:
        dt = DATATYPES[self.datatype]
        return dt.newbyteorder(">" if self.big_endian else "<")

    @property
    def affine(self) -> np.ndarray:
        if self.sform_code > 0:
            return np.array([self.srow_x, self.srow_y, self.srow_z], dtype=float)
        return default_affine(self.spacing)


def parse_header(buf: bytes) -> NiftiHeader:
    """Decode and validate a 348-byte NIfTI-1 header of either byte order."""
    if len(buf) < HEADER_SIZE:
        raise TruncatedData(f"header is {len(buf)} bytes, need {HEADER_SIZE}")
    buf = bytes(buf[:HEADER_SIZE])
    le = np.frombuffer(buf, dtype=HEADER_DTYPE)[0]
    if le["sizeof_hdr"] == HEADER_SIZE:
        rec, big = le, False
    else:
        be = np.frombuffer(buf, dtype=HEADER_DTYPE.newbyteorder(">"))[0]
        if be["sizeof_hdr"] != HEADER_SIZE:
            raise NiftiError("sizeof_hdr is not 348 in either byte order")
        rec, big = be, True

    magic = bytes(buf[344:348])
    if magic != MAGIC_SINGLE:
        if magic == MAGIC_PAIRED:
            raise MagicMismatch("paired .hdr/.img NIfTI files are not supported")
        raise MagicMismatch(f"bad magic {magic!r}")

    datatype = int(rec["datatype"])
    if datatype not in DATATYPES:
        raise UnsupportedDatatype(datatype)

    dim = tuple(int(d) for d in rec["dim"])
    rank = dim[0]
    if not 1 <= rank <= 7:
        raise BadDim(f"dim[0]={rank} outside 1..7")
    while rank > 3 and dim[rank] == 1:
        rank -= 1
    if rank != 3:
        raise BadDim(f"image rank {dim[0]} (dims {dim[1:dim[0] + 1]}) is not reducible to 3")
    if min(dim[1:4]) < 1:
        raise BadDim(f"non-positive extent in {dim[1:4]}")

    pixdim = tuple(float(p) for p in rec["pixdim"])
    if not all(p > 0 for p in pixdim[1:4]):
        raise NonPositiveSpacing(f"pixdim[1:4]={pixdim[1:4]}")

    return NiftiHeader(
        sizeof_hdr=HEADER_SIZE,
        dim=(3,) + dim[1:4] + (1, 1, 1, 1),
        datatype=datatype,
        bitpix=int(rec["bitpix"]),
        pixdim=pixdim,
        vox_offset=float(rec["vox_offset"]),
        scl_slope=float(rec["scl_slope"]),
        scl_inter=float(rec["scl_inter"]),
        qform_code=int(rec["qform_code"]),
        sform_code=int(rec["sform_code"]),
        srow_x=tuple(float(v) for v in rec["srow_x"]),
        srow_y=tuple(float(v) for v in rec["srow_y"]),
        srow_z=tuple(float(v) for v in rec["srow_z"]),
        magic=magic,
        big_endian=big,
    )


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise TruncatedData(f"{path}: corrupt gzip stream ({exc})") from exc
    return raw


def decode(raw: bytes, labels: bool = False) -> Volume | LabelVolume:
    """Decode an in-memory single-file NIfTI-1 image."""
    hdr = parse_header(raw)
    offset = int(hdr.vox_offset)
    if offset < HEADER_SIZE:
        offset = VOX_OFFSET
    n = int(np.prod(hdr.shape))
    dtype = hdr.dtype
    nbytes = n * dtype.itemsize
    if len(raw) < offset + nbytes:
        raise TruncatedData(f"expected {nbytes} data bytes at offset {offset}, file has {max(0, len(raw) - offset)}")
    flat = np.frombuffer(raw, dtype=dtype, count=n, offset=offset)
    data = flat.reshape(hdr.shape, order="F").astype(dtype.newbyteorder("="))
    slope, inter = hdr.scl_slope, hdr.scl_inter
    if labels:
        if slope not in (0.0, 1.0) or inter != 0.0:
            raise NonIntegerLabels(f"label image has intensity scaling slope={slope}, inter={inter}")
        if data.dtype.kind == "f" and np.any(data != np.round(data)):
            raise NonIntegerLabels("label image holds non-integral values")
        return LabelVolume(data, hdr.spacing, hdr.affine)
    data = data.astype(np.float64)
    if slope != 0.0 and np.isfinite(slope) and not (slope == 1.0 and inter == 0.0):
        data = data * slope + inter
    return Volume(data, hdr.spacing, hdr.affine)


def read_volume(path, labels: bool = False) -> Volume | LabelVolume:
    """Read a ``.nii`` / ``.nii.gz`` file.

    With ``labels=True`` the result is a :class:`LabelVolume`; otherwise an
    intensity :class:`Volume` with ``scl_slope``/``scl_inter`` applied.
    Compression is detected from the gzip magic bytes, not the extension.
    """
    return decode(_read_bytes(path), labels=labels)


def encode(vol: Volume | LabelVolume) -> bytes:
    is_labels = isinstance(vol, LabelVolume)
    datatype = 2 if is_labels else 16
    dtype = DATATYPES[datatype].newbyteorder("<")
    hdr = np.zeros((), dtype=HEADER_DTYPE)
    hdr["sizeof_hdr"] = HEADER_SIZE
    hdr["regular"] = b"r"
    hdr["dim"] = [3, *vol.dims, 1, 1, 1, 1]
    hdr["datatype"] = datatype
    hdr["bitpix"] = dtype.itemsize * 8
    hdr["pixdim"] = [1.0, *vol.spacing, 0.0, 0.0, 0.0, 0.0]
    hdr["vox_offset"] = VOX_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0
    hdr["xyzt_units"] = 2  # mm
    hdr["sform_code"] = 1
    aff = np.asarray(vol.affine, dtype=float)
    hdr["srow_x"], hdr["srow_y"], hdr["srow_z"] = aff[0], aff[1], aff[2]
    hdr["magic"] = MAGIC_SINGLE
    payload = np.asarray(vol.data).astype(dtype).ravel(order="F")
    return hdr.tobytes() + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + payload.tobytes()


def write_volume(vol: Volume | LabelVolume, path) -> None:
    """Write a single-file NIfTI-1 image; gzip when the name ends in ``.gz``.

    Intensities are stored as float32, labels as uint8. Gzip output uses a
    zero mtime so repeated writes are byte-identical.
    """
    raw = encode(vol)
    path = os.fspath(path)
    if path.endswith(".gz"):
        bio = io.BytesIO()
        with gzip.GzipFile(filename="", mode="wb", fileobj=bio, mtime=0) as gz:
            gz.write(raw)
        raw = bio.getvalue()
    with open(path, "wb") as fh:
        fh.write(raw)


def byteswap_nifti(raw: bytes) -> bytes:
    """Return the big-endian rendering of a little-endian NIfTI-1 image."""
    hdr = parse_header(raw)
    if hdr.big_endian:
        raise NiftiError("image is already big-endian")
    rec = np.frombuffer(raw[:HEADER_SIZE], dtype=HEADER_DTYPE).copy()
    swapped_hdr = rec.astype(HEADER_DTYPE.newbyteorder(">")).tobytes()
    offset = int(hdr.vox_offset)
    n = int(np.prod(hdr.shape))
    data = np.frombuffer(raw, dtype=hdr.dtype, count=n, offset=offset)
    swapped = data.astype(hdr.dtype.newbyteorder(">")).tobytes()
    return swapped_hdr + raw[HEADER_SIZE:offset] + swapped + raw[offset + len(swapped):]
