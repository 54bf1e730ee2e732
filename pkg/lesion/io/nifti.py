"""
Lectura de NIfTI-1 (.nii, opcionalmente comprimido con gzip).

Solo se consumen los campos de la cabecera de 348 bytes necesarios para
trabajar en espacio de vóxel: dim, datatype, pixdim, vox_offset, scl_slope,
scl_inter, xyzt_units y magic. Las matrices de orientación se ignoran.
"""

import gzip
import struct
from typing import Optional, Union

import numpy as np

from lesion.exceptions import FormatError, RankError, UnsupportedError
from lesion.io.tensor import Tensor, Volume3D, Volume4D
from lesion.utils.logging_utils import get_logger

logger = get_logger(__name__)

HEADER_SIZE = 348
SINGLE_FILE_OFFSET = 352
MAGIC_SINGLE = b'n+1\x00'
MAGIC_PAIR = b'ni1\x00'

# Códigos NIfTI-1 de datatype soportados
DATATYPES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
}
DATATYPE_CODES = {'uint8': 2, 'int16': 4, 'int32': 8, 'float32': 16, 'float64': 64}

# Unidades espaciales -> factor a milímetros; temporales -> factor a segundos
_SPACE_TO_MM = {0: 1.0, 1: 1000.0, 2: 1.0, 3: 0.001}
_TIME_TO_S = {0: 1.0, 8: 1.0, 16: 0.001, 24: 1e-6}


def _endianness(header: bytes) -> str:
    if struct.unpack_from('<i', header, 0)[0] == HEADER_SIZE:
        return '<'
    if struct.unpack_from('>i', header, 0)[0] == HEADER_SIZE:
        return '>'
    raise FormatError("sizeof_hdr distinto de 348", error_code="NIFTI_BAD_HEADER")


def parse_nifti(blob: bytes, image_blob: Optional[bytes] = None) -> Union[Volume3D, Volume4D]:
    """
    Convierte un flujo NIfTI-1 en Volume3D o Volume4D de precisión simple.

    Args:
        blob: Contenido del .nii (o del .hdr para el par "ni1")
        image_blob: Contenido del .img cuando la cabecera usa magic "ni1"

    Raises:
        FormatError: magic inválido o payload truncado
        UnsupportedError: datatype fuera de {uint8, int16, int32, float32, float64}
        RankError: dim[0] fuera de {3, 4}
    """
    blob = bytes(blob)
    if blob[:2] == b'\x1f\x8b':
        blob = gzip.decompress(blob)
    if len(blob) < HEADER_SIZE:
        raise FormatError("Cabecera NIfTI truncada", error_code="NIFTI_TRUNCATED")

    magic = blob[344:348]
    if magic not in (MAGIC_SINGLE, MAGIC_PAIR):
        raise FormatError(f"Magic NIfTI inválido: {magic!r}", error_code="NIFTI_BAD_MAGIC")
    order = _endianness(blob)

    dim = struct.unpack_from(f'{order}8h', blob, 40)
    datatype = struct.unpack_from(f'{order}h', blob, 70)[0]
    pixdim = struct.unpack_from(f'{order}8f', blob, 76)
    vox_offset = struct.unpack_from(f'{order}f', blob, 108)[0]
    scl_slope, scl_inter = struct.unpack_from(f'{order}2f', blob, 112)
    xyzt_units = blob[123]

    if dim[0] not in (3, 4):
        raise RankError(f"dim[0] = {dim[0]} no soportado", error_code="NIFTI_BAD_RANK")
    if datatype not in DATATYPES:
        raise UnsupportedError(f"datatype {datatype} no soportado", error_code="NIFTI_UNSUPPORTED")

    rank = dim[0]
    extents = [int(d) for d in dim[1:rank + 1]]  # (X, Y, Z[, T])
    if any(d < 1 for d in extents):
        raise FormatError(f"Dimensiones inválidas: {extents}", error_code="NIFTI_BAD_DIMS")

    if magic == MAGIC_SINGLE:
        payload = blob[max(int(vox_offset), HEADER_SIZE):]
    elif image_blob is not None:
        payload = bytes(image_blob)[int(vox_offset):]
    else:
        payload = blob[HEADER_SIZE:]

    dtype = DATATYPES[datatype].newbyteorder(order)
    count = int(np.prod(extents))
    if len(payload) < count * dtype.itemsize:
        raise FormatError(
            "Payload NIfTI truncado",
            error_code="NIFTI_TRUNCATED",
            details={'expected_voxels': count, 'available_bytes': len(payload)},
        )

    # x varía más rápido en disco: leído en C-order queda como (T, Z, Y, X)
    raw = np.frombuffer(payload, dtype=dtype, count=count).reshape(extents[::-1])
    values = raw.astype(np.float64)
    if scl_slope != 0 and np.isfinite(scl_slope):
        values = values * scl_slope + scl_inter
    values = values.astype(np.float32)

    space_scale = _SPACE_TO_MM.get(xyzt_units & 0x07, 1.0)
    time_scale = _TIME_TO_S.get(xyzt_units & 0x38, 1.0)
    spacing = []
    for axis in (3, 2, 1):
        step = float(pixdim[axis]) * space_scale
        if not step > 0:
            logger.warning(f"pixdim[{axis}] no positivo, se usa 1.0", extra={'step': 'parse_nifti'})
            step = 1.0
        spacing.append(step)

    if rank == 3:
        return Volume3D(Tensor(values), tuple(spacing))

    dt = float(pixdim[4]) * time_scale
    if not dt > 0:
        logger.warning("pixdim[4] no positivo, se usa dt = 1.0 s", extra={'step': 'parse_nifti'})
        dt = 1.0
    if extents[3] < 2:
        raise RankError("Serie 4D con una sola adquisición", error_code="NIFTI_SHORT_SERIES")
    return Volume4D(Tensor(values), tuple(spacing), dt)


def serialize_nifti(volume: Union[Volume3D, Volume4D], datatype: str = 'float32',
                    scl_slope: float = 0.0, scl_inter: float = 0.0) -> bytes:
    """
    Escribe un NIfTI-1 de un solo archivo con los campos que consume :func:`parse_nifti`.

    Los valores se almacenan como ``(valor - scl_inter) / scl_slope`` cuando
    ``scl_slope`` es distinto de cero.
    """
    if datatype not in DATATYPE_CODES:
        raise UnsupportedError(f"datatype {datatype} no soportado", error_code="NIFTI_UNSUPPORTED")
    code = DATATYPE_CODES[datatype]
    dtype = DATATYPES[code].newbyteorder('<')

    array = np.asarray(volume.array, dtype=np.float64)
    if scl_slope != 0:
        array = (array - scl_inter) / scl_slope
    if dtype.kind in 'iu':
        array = np.rint(array)

    header = bytearray(HEADER_SIZE)
    struct.pack_into('<i', header, 0, HEADER_SIZE)
    rank = array.ndim
    extents = list(array.shape[::-1])
    dim = [rank] + extents + [1] * (7 - rank)
    struct.pack_into('<8h', header, 40, *dim)
    struct.pack_into('<h', header, 70, code)
    struct.pack_into('<h', header, 72, dtype.itemsize * 8)
    sz, sy, sx = volume.spacing
    dt = volume.dt if isinstance(volume, Volume4D) else 0.0
    struct.pack_into('<8f', header, 76, 1.0, sx, sy, sz, dt, 0.0, 0.0, 0.0)
    struct.pack_into('<f', header, 108, float(SINGLE_FILE_OFFSET))
    struct.pack_into('<2f', header, 112, scl_slope, scl_inter)
    header[123] = 2 | 8  # mm, s
    header[344:348] = MAGIC_SINGLE
    return bytes(header) + b'\x00' * 4 + array.astype(dtype).tobytes(order='C')
