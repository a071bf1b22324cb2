"""Embedding cache: one binary file of row-major float32 vectors per
(model, task), with a JSON sidecar carrying dims, clip order, and a
configuration fingerprint.

The fingerprint hashes the frontend config, the frame advance, and the model
checkpoint, so any change to how embeddings are produced invalidates the
dependent entries. Entries are immutable once written; a mismatching
fingerprint reads as a miss.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import CacheMissError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_fingerprint(frontend_cfg: dict, advance_s: float, model_fingerprint: str) -> str:
    payload = canonical_json({
        "frontend": frontend_cfg,
        "advance_s": advance_s,
        "model": model_fingerprint,
    })
    return sha256_hex(payload.encode())


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


class EmbeddingCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, model_id: str, task: str):
        stem = f"{_slug(model_id)}__{_slug(task)}"
        return self.root / f"{stem}.bin", self.root / f"{stem}.json"

    def has(self, model_id: str, task: str, fingerprint: str) -> bool:
        try:
            self.read(model_id, task, fingerprint)
            return True
        except CacheMissError:
            return False

    def write(self, model_id: str, task: str, clip_ids, matrix, fingerprint: str) -> None:
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] != len(clip_ids):
            raise CacheMissError("embedding matrix must be (n_clips, dim)")
        bin_path, json_path = self._paths(model_id, task)
        bin_path.write_bytes(matrix.tobytes())
        sidecar = {
            "model_id": model_id,
            "task": task,
            "clip_ids": list(clip_ids),
            "count": int(matrix.shape[0]),
            "dim": int(matrix.shape[1]),
            "dtype": "float32",
            "fingerprint": fingerprint,
        }
        json_path.write_text(canonical_json(sidecar))

    def read(self, model_id: str, task: str, fingerprint: str):
        """Return (clip_ids, matrix) or raise CacheMissError if absent/stale."""
        bin_path, json_path = self._paths(model_id, task)
        if not bin_path.exists() or not json_path.exists():
            raise CacheMissError(f"no cache entry for ({model_id}, {task})")
        sidecar = json.loads(json_path.read_text())
        if sidecar.get("fingerprint") != fingerprint:
            raise CacheMissError(
                f"stale cache entry for ({model_id}, {task}): fingerprint mismatch"
            )
        raw = np.frombuffer(bin_path.read_bytes(), dtype=np.float32)
        matrix = raw.reshape(sidecar["count"], sidecar["dim"]).copy()
        return list(sidecar["clip_ids"]), matrix

    def lookup_clip(self, model_id: str, clip_id: str):
        """Search all entries of a model for one clip's vector (teacher
        external-precomputed path). Returns None when absent."""
        prefix = f"{_slug(model_id)}__"
        for json_path in sorted(self.root.glob(f"{prefix}*.json")):
            sidecar = json.loads(json_path.read_text())
            if clip_id in sidecar["clip_ids"]:
                idx = sidecar["clip_ids"].index(clip_id)
                raw = np.frombuffer(
                    json_path.with_suffix(".bin").read_bytes(), dtype=np.float32
                )
                return raw.reshape(sidecar["count"], sidecar["dim"])[idx].astype(np.float64)
        return None
