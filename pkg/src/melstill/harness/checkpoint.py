"""Student checkpoints: flat float32 parameter vector in a .bin file plus a
JSON header with the student config, frontend config, and provenance."""

import json
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..frontend import SpectrogramConfig
from ..students import StudentModel, StudentConfig, _param_table
from .cache import canonical_json, sha256_hex


def save_student(path, model: StudentModel, frontend_cfg: SpectrogramConfig,
                 meta: dict | None = None) -> str:
    """Write <path>.bin / <path>.json; returns the checkpoint fingerprint."""
    path = Path(path)
    params = np.ascontiguousarray(model.params, dtype=np.float32)
    header = {
        "student_config": model.config.to_dict(),
        "frontend": frontend_cfg.to_dict(),
        "param_count": int(params.size),
        "meta": meta or {},
    }
    fingerprint = sha256_hex(params.tobytes() + canonical_json(header).encode())
    header["fingerprint"] = fingerprint
    path.with_suffix(".bin").write_bytes(params.tobytes())
    path.with_suffix(".json").write_text(json.dumps(header, sort_keys=True, indent=2))
    return fingerprint


def load_student(path):
    """Returns (StudentModel, SpectrogramConfig, header dict)."""
    path = Path(path)
    json_path = path if path.suffix == ".json" else path.with_suffix(".json")
    bin_path = json_path.with_suffix(".bin")
    if not json_path.exists() or not bin_path.exists():
        raise InvalidInputError(f"checkpoint not found: {path}")
    header = json.loads(json_path.read_text())
    cfg = StudentConfig.from_dict(header["student_config"])
    params = np.frombuffer(bin_path.read_bytes(), dtype=np.float32).copy()
    if params.size != header["param_count"]:
        raise InvalidInputError(
            f"{path}: parameter vector has {params.size} entries, "
            f"header says {header['param_count']}"
        )
    model = StudentModel(cfg, params, _param_table(cfg))
    frontend = SpectrogramConfig(**header["frontend"])
    return model, frontend, header
