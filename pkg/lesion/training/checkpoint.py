"""
Formato de checkpoint (little-endian):

    magic     4 bytes  b"PWCK"
    version   u32      1
    meta_len  u64
    metadata  JSON UTF-8 (kind, arch, adam_t, tensor names, metadatos de entrenamiento)
    por tensor: name_len u32, nombre UTF-8, blob_len u64, tensor en formato crudo

Los tensores se guardan como ``param/<nombre>``, ``adam_m/<nombre>`` y
``adam_v/<nombre>`` en el orden del ParamStore.
"""

import json
import struct
from collections import OrderedDict
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from lesion.exceptions import FormatError, IncompatibleCheckpointError
from lesion.io.raw_format import read_raw, write_raw
from lesion.io.tensor import Tensor
from lesion.models import ArchConfig, build_model, normalize_kind
from lesion.training.optim import AdamState
from lesion.training.trainer import Checkpoint

MAGIC = b'PWCK'
VERSION = 1
_PREAMBLE = struct.Struct('<4sIQ')


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    names = list(ckpt.params)
    meta = {
        'kind': ckpt.kind,
        'arch': asdict(ckpt.arch),
        'adam_t': ckpt.adam.t,
        'names': names,
        'metadata': ckpt.metadata,
    }
    meta_blob = json.dumps(meta, sort_keys=True).encode('utf-8')
    chunks = [_PREAMBLE.pack(MAGIC, VERSION, len(meta_blob)), meta_blob]
    for prefix, source in (('param', ckpt.params), ('adam_m', ckpt.adam.m), ('adam_v', ckpt.adam.v)):
        for name in names:
            if name not in source:
                continue
            label = f"{prefix}/{name}".encode('utf-8')
            blob = write_raw(Tensor(np.asarray(source[name])))
            chunks.append(struct.pack('<I', len(label)) + label + struct.pack('<Q', len(blob)) + blob)
    return b''.join(chunks)


def decode_checkpoint(blob: bytes, expected_kind: Optional[str] = None) -> Checkpoint:
    """
    Reconstruye un checkpoint y lo valida contra la arquitectura declarada.

    Raises:
        FormatError: magic, versión o longitudes inválidas
        IncompatibleCheckpointError: tipo, nombres o dimensiones no coinciden
    """
    blob = bytes(blob)
    if len(blob) < _PREAMBLE.size:
        raise FormatError("Checkpoint truncado", error_code="CKPT_TRUNCATED")
    magic, version, meta_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"Magic de checkpoint inválido: {magic!r}", error_code="CKPT_BAD_MAGIC")
    if version != VERSION:
        raise FormatError(f"Versión de checkpoint no soportada: {version}", error_code="CKPT_BAD_VERSION")
    offset = _PREAMBLE.size
    try:
        meta = json.loads(blob[offset:offset + meta_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError("Metadatos de checkpoint ilegibles", error_code="CKPT_BAD_META") from exc
    offset += meta_len

    tensors = OrderedDict()
    while offset < len(blob):
        if offset + 4 > len(blob):
            raise FormatError("Entrada de tensor truncada", error_code="CKPT_TRUNCATED")
        (name_len,) = struct.unpack_from('<I', blob, offset)
        offset += 4
        label = blob[offset:offset + name_len].decode('utf-8')
        offset += name_len
        if offset + 8 > len(blob):
            raise FormatError("Entrada de tensor truncada", error_code="CKPT_TRUNCATED")
        (blob_len,) = struct.unpack_from('<Q', blob, offset)
        offset += 8
        if offset + blob_len > len(blob):
            raise FormatError("Tensor truncado", error_code="CKPT_TRUNCATED", details={'tensor': label})
        tensors[label] = np.array(read_raw(blob[offset:offset + blob_len]).data)
        offset += blob_len

    kind = normalize_kind(meta['kind'])
    if expected_kind is not None and normalize_kind(expected_kind) != kind:
        raise IncompatibleCheckpointError(
            f"El checkpoint es de tipo {kind}, se esperaba {expected_kind}",
            error_code="CKPT_KIND_MISMATCH",
        )
    try:
        arch = ArchConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in meta['arch'].items()})
    except TypeError as exc:
        raise IncompatibleCheckpointError("Configuración de arquitectura desconocida",
                                          error_code="CKPT_BAD_ARCH") from exc

    names = meta['names']
    params = OrderedDict((name, tensors.get(f"param/{name}")) for name in names)
    missing = [name for name, value in params.items() if value is None]
    if missing:
        raise IncompatibleCheckpointError("Faltan tensores de parámetros", error_code="CKPT_MISSING",
                                          details={'missing': missing})
    adam = AdamState(
        m={n: tensors[f"adam_m/{n}"] for n in names if f"adam_m/{n}" in tensors},
        v={n: tensors[f"adam_v/{n}"] for n in names if f"adam_v/{n}" in tensors},
        t=int(meta.get('adam_t', 0)),
    )
    ckpt = Checkpoint(kind=kind, arch=arch, params=params, adam=adam, metadata=meta.get('metadata', {}))
    # valida nombres y dimensiones contra la arquitectura declarada
    build_model(kind, arch).params.load_state(params)
    return ckpt


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    Path(path).write_bytes(encode_checkpoint(ckpt))


def load_checkpoint(path, expected_kind: Optional[str] = None) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes(), expected_kind)
