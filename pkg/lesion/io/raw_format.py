"""
Formato binario crudo de intercambio de tensores (.pwt).

Disposición (little-endian):

    magic    4 bytes  b"PWTK"
    version  u32      1
    dtype    u32      0 = simple, 1 = doble
    rank     u32
    extents  rank x u64
    spacing  3 x f64  (mm; ceros si no aplica)
    dt       f64      (segundos; 0 si rank < 4)
    payload  prod(extents) escalares, row-major
"""

import struct
from typing import Union

import numpy as np

from lesion.exceptions import FormatError
from lesion.io.tensor import MAX_RANK, Tensor, Volume3D, Volume4D

MAGIC = b'PWTK'
VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype('<f4'), 1: np.dtype('<f8')}
_PREAMBLE = struct.Struct('<4sIII')

RawPayload = Union[Tensor, Volume3D, Volume4D]


def write_raw(volume: RawPayload) -> bytes:
    """Serializa un tensor o volumen al formato crudo."""
    if isinstance(volume, Volume4D):
        tensor, spacing, dt = volume.tensor, volume.spacing, volume.dt
    elif isinstance(volume, Volume3D):
        tensor, spacing, dt = volume.tensor, volume.spacing, 0.0
    else:
        tensor, spacing, dt = volume, (0.0, 0.0, 0.0), 0.0

    header = _PREAMBLE.pack(MAGIC, VERSION, _DTYPE_CODES[tensor.dtype], tensor.rank)
    header += struct.pack(f'<{tensor.rank}Q', *tensor.dims)
    header += struct.pack('<3d', *spacing)
    header += struct.pack('<d', dt)
    payload = tensor.data.astype(tensor.dtype.newbyteorder('<'), copy=False).tobytes(order='C')
    return header + payload


def read_raw(blob: bytes) -> RawPayload:
    """
    Deserializa un flujo producido por :func:`write_raw`.

    Devuelve Volume4D si rank == 4 y dt > 0, Volume3D si rank == 3 con
    espaciado positivo, y Tensor en cualquier otro caso.
    """
    blob = bytes(blob)
    if len(blob) < _PREAMBLE.size:
        raise FormatError("Flujo crudo truncado", error_code="RAW_TRUNCATED")
    magic, version, dtype_code, rank = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"Magic inválido: {magic!r}", error_code="RAW_BAD_MAGIC")
    if version != VERSION:
        raise FormatError(f"Versión no soportada: {version}", error_code="RAW_BAD_VERSION")
    if dtype_code not in _CODE_DTYPES:
        raise FormatError(f"dtype desconocido: {dtype_code}", error_code="RAW_BAD_DTYPE")
    if not 1 <= rank <= MAX_RANK:
        raise FormatError(f"Rango inválido: {rank}", error_code="RAW_BAD_RANK")

    offset = _PREAMBLE.size
    header_size = offset + 8 * rank + 24 + 8
    if len(blob) < header_size:
        raise FormatError("Cabecera cruda truncada", error_code="RAW_TRUNCATED")
    dims = struct.unpack_from(f'<{rank}Q', blob, offset)
    offset += 8 * rank
    spacing = struct.unpack_from('<3d', blob, offset)
    offset += 24
    (dt,) = struct.unpack_from('<d', blob, offset)
    offset += 8

    dtype = _CODE_DTYPES[dtype_code]
    count = int(np.prod(dims, dtype=np.int64))
    if count < 1 or len(blob) - offset != count * dtype.itemsize:
        raise FormatError(
            "Longitud del payload no coincide con las extensiones",
            error_code="RAW_BAD_PAYLOAD",
            details={'expected': count * dtype.itemsize, 'actual': len(blob) - offset},
        )
    array = np.frombuffer(blob, dtype=dtype, count=count, offset=offset).reshape(dims)
    tensor = Tensor(array.astype(dtype.newbyteorder('='), copy=True))

    if rank == 4 and dims[0] >= 2 and dt > 0 and all(s > 0 for s in spacing):
        return Volume4D(tensor, spacing, dt)
    if rank == 3 and all(s > 0 for s in spacing):
        return Volume3D(tensor, spacing)
    return tensor


def save_raw(path, volume: RawPayload) -> None:
    with open(path, 'wb') as fh:
        fh.write(write_raw(volume))


def load_raw(path) -> RawPayload:
    with open(path, 'rb') as fh:
        return read_raw(fh.read())
