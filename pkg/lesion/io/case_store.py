"""
Lectura y escritura de directorios de caso.

Un directorio de caso contiene ``pwi``, ``rcbf``, ``rcbv``, ``mtt``, ``ttp``,
``tmax``, ``adc`` y opcionalmente ``gt``, en formato crudo (.pwt) o NIfTI-1
(.nii / .nii.gz), más ``meta.json``.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from lesion.exceptions import DataError
from lesion.io.nifti import parse_nifti, serialize_nifti
from lesion.io.raw_format import load_raw, save_raw
from lesion.io.tensor import MAP_NAMES, CaseBundle, Volume3D, Volume4D

MAP_FILES = {name: name.lower() for name in MAP_NAMES}
_EXTENSIONS = ('.pwt', '.nii.gz', '.nii')


def _find(case_dir: Path, stem: str) -> Optional[Path]:
    for ext in _EXTENSIONS:
        candidate = case_dir / f"{stem}{ext}"
        if candidate.exists():
            return candidate
    return None


def _load_volume(path: Path):
    if path.suffix == '.pwt':
        return load_raw(path)
    return parse_nifti(path.read_bytes())


def dump_json(path, payload: Dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + '\n')


def write_case_dir(case_dir, bundle: CaseBundle, meta: Optional[Dict[str, Any]] = None,
                   nifti: bool = False) -> Path:
    """Escribe un caso completo; con ``nifti=True`` los volúmenes se guardan como .nii."""
    case_dir = Path(case_dir)
    case_dir.mkdir(parents=True, exist_ok=True)

    volumes = {'pwi': bundle.pwi}
    volumes.update({MAP_FILES[name]: bundle.maps[name] for name in MAP_NAMES})
    if bundle.lesion_gt is not None:
        volumes['gt'] = bundle.lesion_gt

    for stem, volume in volumes.items():
        if nifti:
            (case_dir / f"{stem}.nii").write_bytes(serialize_nifti(volume))
        else:
            save_raw(case_dir / f"{stem}.pwt", volume)

    dump_json(case_dir / 'meta.json', {'case_id': bundle.case_id, **(meta or {})})
    return case_dir


def read_case_dir(case_dir) -> Tuple[CaseBundle, Dict[str, Any]]:
    """Lee un directorio de caso y devuelve (bundle, metadatos)."""
    case_dir = Path(case_dir)
    if not case_dir.is_dir():
        raise DataError(f"No existe el directorio de caso {case_dir}", error_code="CASE_NOT_FOUND")

    meta_path = case_dir / 'meta.json'
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    case_id = str(meta.get('case_id', case_dir.name))

    pwi_path = _find(case_dir, 'pwi')
    if pwi_path is None:
        raise DataError("Falta la PWI del caso", error_code="MISSING_PWI", details={'case_id': case_id})
    pwi = _load_volume(pwi_path)
    if not isinstance(pwi, Volume4D):
        raise DataError("La PWI debe ser 4D", error_code="PWI_NOT_4D", details={'case_id': case_id})

    maps = {}
    for name in MAP_NAMES:
        path = _find(case_dir, MAP_FILES[name])
        if path is None:
            raise DataError(f"Falta el mapa {name}", error_code="MISSING_MAP", details={'case_id': case_id})
        volume = _load_volume(path)
        if not isinstance(volume, Volume3D):
            raise DataError(f"El mapa {name} debe ser 3D", error_code="MAP_NOT_3D", details={'case_id': case_id})
        maps[name] = volume

    gt_path = _find(case_dir, 'gt')
    lesion_gt = _load_volume(gt_path) if gt_path is not None else None
    return CaseBundle(case_id=case_id, pwi=pwi, maps=maps, lesion_gt=lesion_gt), meta


def list_case_dirs(root) -> list:
    """Subdirectorios de caso (con meta.json o pwi) ordenados por nombre."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"No existe el directorio {root}", error_code="DIR_NOT_FOUND")
    return sorted(p for p in root.iterdir() if p.is_dir() and ((p / 'meta.json').exists() or _find(p, 'pwi')))


def is_case_dir(path) -> bool:
    """Un directorio es un caso si contiene la PWI en algún formato soportado."""
    path = Path(path)
    return path.is_dir() and _find(path, 'pwi') is not None
