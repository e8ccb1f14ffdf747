"""Self-describing binary container for captured waveforms.

Layout (little-endian)::

    offset  size  field
    0       7     magic b"LWSIM1\\0"
    7       1     sample type: 0 = real64, 1 = complex128
    8       8     sample rate, float64 (Sa/s)
    16      8     wavelength, float64 (m; 0 for electrical signals)
    24      1     unit tag: 0 volt, 1 ampere, 2 dimensionless, 3 optical field
    25      8     sample count, uint64
    33      ...   payload: count * 8 (real) or count * 16 (complex) bytes
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import FormatError
from .signal import UNITS, ComplexEnvelope, RealWaveform

MAGIC = b"LWSIM1\0"
HEADER = struct.Struct("<7sBddBQ")
REAL64, COMPLEX128 = 0, 1
FIELD_UNIT = 3


def save_waveform(path, w: Union[RealWaveform, ComplexEnvelope]) -> None:
    if isinstance(w, ComplexEnvelope):
        header = HEADER.pack(MAGIC, COMPLEX128, w.sample_rate, w.wavelength, FIELD_UNIT, len(w))
        payload = w.samples.astype("<c16").tobytes()
    else:
        header = HEADER.pack(MAGIC, REAL64, w.sample_rate, 0.0, UNITS.index(w.unit), len(w))
        payload = w.samples.astype("<f8").tobytes()
    Path(path).write_bytes(header + payload)


def load_waveform(path) -> Union[RealWaveform, ComplexEnvelope]:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(
            f"truncated header: expected {HEADER.size} bytes, found {len(data)}", offset=len(data)
        )
    magic, kind, rate, wavelength, unit, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, expected {MAGIC!r}", offset=0)
    if kind not in (REAL64, COMPLEX128):
        raise FormatError(f"unknown sample type {kind} at offset 7", offset=7)
    width = 16 if kind == COMPLEX128 else 8
    expected = HEADER.size + count * width
    if len(data) != expected:
        what = "truncated payload" if len(data) < expected else "trailing bytes after payload"
        raise FormatError(
            f"{what}: expected {expected} bytes, found {len(data)}",
            offset=min(len(data), expected),
        )
    body = np.frombuffer(data, dtype="<c16" if width == 16 else "<f8", offset=HEADER.size, count=count)
    if kind == COMPLEX128:
        if unit != FIELD_UNIT:
            raise FormatError(f"complex samples with electrical unit tag {unit} at offset 24", offset=24)
        return ComplexEnvelope(body, rate, wavelength)
    if unit >= len(UNITS):
        raise FormatError(f"unknown unit tag {unit} at offset 24", offset=24)
    return RealWaveform(body, rate, UNITS[unit])
