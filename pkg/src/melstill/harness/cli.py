"""Command-line interface.

Subcommands: synth, distill, embed, probe, sweep-advance, report. Every
failure exits nonzero with one machine-readable JSON object on stderr:
{"error": <code>, "message": <text>}.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..audio_io import read_wav
from ..distill import TrainConfig, sample_training_examples, train_student
from ..embed import student_embed_clip, sweep_frame_advance
from ..errors import InvalidInputError, PipelineError
from ..frontend import SpectrogramConfig
from ..metrics import d_prime
from ..probes import DEFAULT_PROBES, ProbeResult, evaluate_task, train_probe
from ..students import StudentConfig, init_student, param_count, size_mb
from ..teacher import TeacherSpec, teacher_embed_clip
from .cache import EmbeddingCache, config_fingerprint
from .checkpoint import load_student, save_student
from .manifest import ingest_manifest
from .report import run_report
from .synth import build_synthetic_benchmark


def _load_run_config(path) -> dict:
    cfg = json.loads(Path(path).read_text())
    cfg.setdefault("sample_rate", 16000)
    cfg.setdefault("advance_s", cfg.get("frontend", {}).get("context_s", 2.0))
    return cfg


def _teacher_from_json(path) -> TeacherSpec:
    obj = json.loads(Path(path).read_text())
    return TeacherSpec(
        embedding_dim=int(obj["embedding_dim"]),
        seed=int(obj.get("seed", 0)),
        kind=obj.get("kind", "synthetic-linear"),
    )


class _Embedder:
    """Uniform clip-embedding wrapper for teacher specs and student
    checkpoints, with a stable model_id and config fingerprint."""

    def __init__(self, model_path, frontend: SpectrogramConfig, advance_s: float):
        path = Path(model_path)
        self.advance_s = advance_s
        if path.suffix == ".json" and "student_config" not in json.loads(path.read_text()):
            self.kind = "teacher"
            self.spec = _teacher_from_json(path)
            self.model_id = self.spec.model_id
            self.frontend = frontend
            model_fp = json.dumps(self.spec.to_dict(), sort_keys=True)
        else:
            self.kind = "student"
            self.model, ckpt_frontend, header = load_student(path)
            self.frontend = ckpt_frontend
            self.model_id = header["meta"].get("model_id", path.stem)
            model_fp = header["fingerprint"]
        self.fingerprint = config_fingerprint(
            self.frontend.to_dict(), advance_s, model_fp
        )

    def embed_clip(self, w) -> np.ndarray:
        if self.kind == "teacher":
            return teacher_embed_clip(w, self.spec, self.frontend, self.advance_s)
        return student_embed_clip(self.model, w, self.frontend, self.advance_s)

    def registry_entry(self) -> dict:
        if self.kind == "teacher":
            dim = self.spec.embedding_dim
            return {"kind": "teacher", "param_count": 0, "size_mb": 0.0,
                    "embedding_dim": dim}
        cfg = self.model.config
        return {"kind": "student", "param_count": param_count(cfg),
                "size_mb": size_mb(cfg), "family": cfg.family,
                "depth": cfg.depth, "width": cfg.width,
                "embedding_dim": cfg.embedding_dim}


def _embed_manifest(embedder: _Embedder, manifest, cache: EmbeddingCache,
                    force: bool = False):
    """Embed every clip of a manifest into the cache (one entry per task)."""
    task = manifest.task.name
    if not force:
        try:
            return cache.read(embedder.model_id, task, embedder.fingerprint)
        except PipelineError:
            pass
    ids, vecs = [], []
    for row in manifest.rows:
        w = read_wav(manifest.resolve(row), expected_rate=manifest.task.sample_rate)
        ids.append(row.clip_id)
        vecs.append(embedder.embed_clip(w))
    matrix = np.stack(vecs).astype(np.float32)
    cache.write(embedder.model_id, task, ids, matrix, embedder.fingerprint)
    return ids, matrix


def _splits_from_cache(manifest, clip_ids, matrix):
    index = {cid: i for i, cid in enumerate(clip_ids)}
    splits = {}
    for split in ("train", "dev", "test"):
        rows = manifest.split_rows(split)
        x = matrix[[index[r.clip_id] for r in rows]]
        y = np.array([r.label for r in rows])
        splits[split] = (x, y)
    return splits


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    teacher = (_teacher_from_json(args.teacher) if args.teacher
               else TeacherSpec(embedding_dim=args.teacher_dim, seed=args.teacher_seed))
    out = Path(args.out)
    summary = build_synthetic_benchmark(
        out, seed=args.seed, teacher=teacher,
        clips_per_task=args.clips_per_task, corpus_clips=args.corpus_clips,
        ab_clips=args.ab_clips,
    )
    (out / "teacher.json").write_text(json.dumps(teacher.to_dict(), sort_keys=True, indent=2))
    run_cfg = {
        "sample_rate": summary["sample_rate"],
        "frontend": summary["frontend"],
        "advance_s": summary["advance_s"],
        "root_seed": args.seed,
    }
    (out / "config.json").write_text(json.dumps(run_cfg, sort_keys=True, indent=2))
    print(json.dumps({"out": str(out), "manifests": summary["manifests"]}, sort_keys=True))
    return 0


def cmd_distill(args) -> int:
    run_cfg = _load_run_config(args.config)
    frontend = SpectrogramConfig(**run_cfg["frontend"])
    teacher = _teacher_from_json(args.teacher)
    manifest = ingest_manifest(args.manifest)
    clips = [
        (row.clip_id, read_wav(manifest.resolve(row), expected_rate=manifest.task.sample_rate))
        for row in manifest.split_rows("train")
    ]
    if not clips:
        raise InvalidInputError("distillation manifest has no train rows")
    examples = sample_training_examples(
        clips, args.mode, teacher, frontend, seed=args.seed,
        windows_per_clip=args.windows_per_clip,
    )
    scfg = StudentConfig(args.student_family, args.depth, args.width,
                         teacher.embedding_dim, seed=args.seed)
    model = init_student(scfg)
    tc = TrainConfig(learning_rate=args.learning_rate, batch_size=args.batch_size,
                     steps=args.steps, optimizer=args.optimizer, seed=args.seed,
                     loss=args.loss)
    trained, losses = train_student(model, examples, tc)
    model_id = args.model_id or (
        f"{scfg.family}-d{scfg.depth}-w{scfg.width}-s{scfg.seed}-{args.mode}"
    )
    meta = {
        "model_id": model_id,
        "mode": args.mode,
        "teacher": teacher.to_dict(),
        "train": {"steps": tc.steps, "batch_size": tc.batch_size,
                  "learning_rate": tc.learning_rate, "optimizer": tc.optimizer,
                  "loss": tc.loss, "seed": tc.seed,
                  "manifest": str(Path(args.manifest))},
        "final_loss": losses[-1],
    }
    fingerprint = save_student(Path(args.out), trained, frontend, meta)
    curve_path = Path(args.loss_curve) if args.loss_curve else Path(args.out).with_suffix(".loss.csv")
    curve_path.write_text(
        "step,loss\n" + "\n".join(f"{i},{v!r}" for i, v in enumerate(losses)) + "\n"
    )
    print(json.dumps({"model_id": model_id, "checkpoint": str(Path(args.out)),
                      "fingerprint": fingerprint, "final_loss": losses[-1]},
                     sort_keys=True))
    return 0


def cmd_embed(args) -> int:
    run_cfg = _load_run_config(args.config) if args.config else {}
    frontend = SpectrogramConfig(**run_cfg["frontend"]) if "frontend" in run_cfg \
        else SpectrogramConfig()
    embedder = _Embedder(args.model, frontend, args.advance)
    manifest = ingest_manifest(args.task)
    cache = EmbeddingCache(args.cache)
    ids, matrix = _embed_manifest(embedder, manifest, cache, force=args.force)
    print(json.dumps({"model_id": embedder.model_id, "task": manifest.task.name,
                      "clips": len(ids), "dim": int(matrix.shape[1]),
                      "fingerprint": embedder.fingerprint}, sort_keys=True))
    return 0


def _probe_row(embedder: _Embedder, manifest, cache: EmbeddingCache) -> dict:
    try:
        ids, matrix = cache.read(embedder.model_id, manifest.task.name,
                                 embedder.fingerprint)
    except PipelineError:
        ids, matrix = _embed_manifest(embedder, manifest, cache)
    splits = _splits_from_cache(manifest, ids, matrix)
    result: ProbeResult = evaluate_task(splits, metric=manifest.task.metric)
    row = result.to_row(embedder.model_id, manifest.task.name)
    row["metric"] = manifest.task.metric
    return row


def cmd_probe(args) -> int:
    embedder = _Embedder(args.model, SpectrogramConfig(), args.advance)
    manifest = ingest_manifest(args.task)
    cache = EmbeddingCache(args.cache)
    row = _probe_row(embedder, manifest, cache)
    line = json.dumps(row, sort_keys=True)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(line + "\n")
    print(line)
    return 0


def cmd_sweep_advance(args) -> int:
    manifest = ingest_manifest(args.task)
    frontend = SpectrogramConfig()
    model, frontend, header = load_student(args.model)

    def load_split(split):
        for row in manifest.split_rows(split):
            w = read_wav(manifest.resolve(row), expected_rate=manifest.task.sample_rate)
            yield (row.clip_id, w, row.label)

    def evaluate(train_x, train_y, dev_x, dev_y):
        best = None
        for pc in DEFAULT_PROBES:
            probe = train_probe(train_x, train_y, pc)
            from ..probes import _split_metric
            score = _split_metric(probe, dev_x, dev_y, manifest.task.metric)
            better = (
                best is None
                or (manifest.task.metric == "eer" and score < best[0])
                or (manifest.task.metric != "eer" and score > best[0])
            )
            if better:
                best = (score, pc.variant)
        return best

    advances = [float(a) for a in args.advances.split(",") if a.strip()]
    rows = sweep_frame_advance(model, load_split, advances, evaluate, frontend)
    lines = ["advance,dev_metric,probe_type"]
    lines += [f"{r['advance_s']!r},{r['dev_metric']!r},{r['probe_variant']}" for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def cmd_report(args) -> int:
    model_paths = [p for p in args.models.split(",") if p.strip()]
    task_paths = [p for p in args.tasks.split(",") if p.strip()]
    cache = EmbeddingCache(args.cache)
    registry = {}
    rows = []
    if args.results:
        for line in Path(args.results).read_text().splitlines():
            if line.strip():
                rows.append(json.loads(line))
    manifests = [ingest_manifest(p) for p in task_paths]
    have = {(r["model_id"], r["task"]) for r in rows}
    for mp in model_paths:
        embedder = _Embedder(mp, SpectrogramConfig(), args.advance)
        registry[embedder.model_id] = embedder.registry_entry()
        for manifest in manifests:
            if (embedder.model_id, manifest.task.name) not in have:
                rows.append(_probe_row(embedder, manifest, cache))
    ab_groups = None
    if args.ab_pairs:
        ab_groups = json.loads(Path(args.ab_pairs).read_text())
        for group in ab_groups:
            for mid in group["a_models"] + group["b_models"]:
                if mid not in registry:
                    registry[mid] = {"kind": "external", "param_count": 0, "size_mb": 0.0}
    report = run_report(rows, registry, out_dir=args.out, ab_groups=ab_groups)
    print(json.dumps({"out": str(args.out), "models": sorted(report["models"]),
                      "gaps": report["gaps"]}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="melstill",
        description="Distill audio embeddings into small students and benchmark them",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build the synthetic benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--teacher", help="teacher spec JSON (default: synthetic-linear)")
    p.add_argument("--teacher-dim", type=int, default=64)
    p.add_argument("--teacher-seed", type=int, default=0)
    p.add_argument("--clips-per-task", type=int, default=150)
    p.add_argument("--corpus-clips", type=int, default=500)
    p.add_argument("--ab-clips", type=int, default=200)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("distill", help="train a student against a teacher")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--mode", choices=["local", "global"], default="local")
    p.add_argument("--teacher", required=True, help="teacher spec JSON")
    p.add_argument("--student-family", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", required=True, help="training corpus manifest")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=2e-3)
    p.add_argument("--optimizer", default="adam-like")
    p.add_argument("--loss", default="mse")
    p.add_argument("--windows-per-clip", type=int, default=2)
    p.add_argument("--model-id")
    p.add_argument("--out", required=True, help="checkpoint path (without suffix)")
    p.add_argument("--loss-curve", help="loss curve CSV path")
    p.set_defaults(fn=cmd_distill)

    p = sub.add_parser("embed", help="embed a task's clips into the cache")
    p.add_argument("--model", required=True, help="checkpoint or teacher JSON")
    p.add_argument("--task", required=True, help="task manifest")
    p.add_argument("--advance", type=float, default=2.0)
    p.add_argument("--cache", default="cache")
    p.add_argument("--config", help="run config JSON (teacher frontends)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("probe", help="linear-probe one (model, task) pair")
    p.add_argument("--model", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--advance", type=float, default=2.0)
    p.add_argument("--cache", default="cache")
    p.add_argument("--out", help="append JSONL row here")
    p.set_defaults(fn=cmd_probe)

    p = sub.add_parser("sweep-advance", help="frame-advance dev sweep")
    p.add_argument("--model", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--advances", required=True, help="comma-separated seconds")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(fn=cmd_sweep_advance)

    p = sub.add_parser("report", help="emit the benchmark report")
    p.add_argument("--models", required=True, help="comma-separated model paths")
    p.add_argument("--tasks", required=True, help="comma-separated task manifests")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--cache", default="cache")
    p.add_argument("--advance", type=float, default=2.0)
    p.add_argument("--results", help="existing probe JSONL to reuse")
    p.add_argument("--ab-pairs", help="JSON file declaring A/B model groups")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PipelineError as exc:
        sys.stderr.write(json.dumps(exc.to_json(), sort_keys=True) + "\n")
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps(
            {"error": "io-error", "message": f"{type(exc).__name__}: {exc}"},
            sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
