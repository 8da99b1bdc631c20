"""File formats: TT3D tensors, 8-bit binary PGM/PPM images and run-record CSV."""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .core import as_tensor

MAGIC = b"TT3D"
_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    pass


def write_tt3d(path, x):
    """Magic, three little-endian uint32 sizes, then mode-1-fastest float64 values."""
    x = as_tensor(x)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *x.shape))
        fh.write(x.ravel(order="F").astype("<f8").tobytes())


def read_tt3d(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n1, n2, n3 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    count = n1 * n2 * n3
    payload = raw[_HEADER.size:]
    if len(payload) != 8 * count:
        raise FormatError(f"{path}: expected {8 * count} payload bytes, found {len(payload)}")
    vals = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return vals.reshape((n1, n2, n3), order="F")


def _tokens(raw, count):
    """Header tokens of a netpbm file and the offset just past the last one."""
    out, pos = [], 0
    while len(out) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated netpbm header")
        out.append(raw[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def read_image(path):
    """Read a binary PGM (P5) or PPM (P6) with maxval <= 255 as a float tensor in [0, 255].

    Grayscale images come back with a single frontal slice.
    """
    raw = Path(path).read_bytes()
    toks, off = _tokens(raw, 4)
    magic = toks[0]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported image format {magic!r}")
    width, height, maxval = (int(t) for t in toks[1:])
    if not 0 < maxval <= 255:
        raise FormatError(f"{path}: only 8-bit images are supported (maxval {maxval})")
    channels = 1 if magic == b"P5" else 3
    size = width * height * channels
    data = raw[off:off + size]
    if len(data) != size:
        raise FormatError(f"{path}: truncated raster")
    img = np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels)
    return img.astype(np.float64)


def to_uint8(img):
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_image(path, img):
    """Write one frontal slice as P5, three as P6; values are rounded and clamped."""
    img = as_tensor(img)
    h, w, c = img.shape
    if c not in (1, 3):
        raise FormatError(f"images need 1 or 3 frontal slices, got {c}")
    magic = b"P5" if c == 1 else b"P6"
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(to_uint8(img).tobytes())


@dataclass
class RunRecord:
    """One benchmark run; unset parameters are stored as empty CSV fields."""

    algorithm: str
    n: int
    L: int | None = None
    K: int | None = None
    H: int | None = None
    rank: int | None = None
    eps: float | None = None
    block: int | None = None
    passes: int | None = None
    seed: int = 0
    time_s: float = 0.0
    rel_err: float | None = None
    est_rank: int | None = None
    pass_count: int | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite")


CSV_FIELDS = [f.name for f in fields(RunRecord)]
_INT_FIELDS = {"n", "L", "K", "H", "rank", "block", "passes", "seed", "est_rank", "pass_count"}
_FLOAT_FIELDS = {"eps", "time_s", "rel_err"}


def _encode(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _decode(name, text):
    if text == "":
        return None
    if name in _INT_FIELDS:
        return int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    return text


def dump_records(fh, records, header=True):
    w = csv.writer(fh)
    if header:
        w.writerow(CSV_FIELDS)
    for rec in records:
        row = asdict(rec)
        w.writerow([_encode(row[k]) for k in CSV_FIELDS])


def write_records(path, records, append=False):
    """Write records under the fixed CSV header; appending skips the header if present."""
    path = Path(path)
    need_header = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w", newline="") as fh:
        dump_records(fh, records, need_header)


def read_records(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_FIELDS:
            raise FormatError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [RunRecord(**{k: _decode(k, row[k]) for k in CSV_FIELDS}) for row in reader]
