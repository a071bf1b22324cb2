"""Report generation: per-task tables, the size-vs-performance curve,
ordering agreement, and A/B significance tests.

Model ordering uses average equivalent d-prime; "best at size" marks the
dev-selected frontier (a model whose dev-set average d-prime strictly exceeds
every smaller model's). The ordering-agreement table is Kendall tau-b between
the four model orderings (d-prime dev/test, task-metric dev/test); it is
symmetric with a unit diagonal by construction. Models with a degenerate
(non-finite) aggregate are excluded from orderings and flagged.

All emitted JSON/CSV is deterministic: keys sorted, rows sorted, floats via
repr.
"""

import json
import math
from pathlib import Path

from ..errors import DegenerateInputError, InvalidInputError
from ..metrics import average_d_prime, kendall_tau, paired_t_test

ORDERINGS = ("d_prime_dev", "d_prime_test", "metric_dev", "metric_test")


def oriented_metric(row: dict, split: str) -> float:
    """Task metric oriented so higher is better (eer contributes 1 - eer)."""
    value = row[f"{split}_score"]
    return 1.0 - value if row.get("metric") == "eer" else value


def aggregate_model(rows: list) -> dict:
    """Per-model aggregates over its task rows."""
    dev_aucs = [r["dev_auc"] for r in rows]
    test_aucs = [r["test_auc"] for r in rows]
    agg = {
        "tasks": sorted(r["task"] for r in rows),
        "avg_d_prime_dev": average_d_prime(dev_aucs),
        "avg_d_prime_test": average_d_prime(test_aucs),
        "avg_metric_dev": sum(oriented_metric(r, "dev") for r in rows) / len(rows),
        "avg_metric_test": sum(oriented_metric(r, "test") for r in rows) / len(rows),
    }
    agg["degenerate"] = not (
        math.isfinite(agg["avg_d_prime_dev"]) and math.isfinite(agg["avg_d_prime_test"])
    )
    return agg


def _frontier(models: list, aggregates: dict, registry: dict) -> set:
    """Dev-selected size-performance frontier: strictly better average
    dev d-prime than every smaller model."""
    frontier = set()
    ordered = sorted(models, key=lambda m: (registry[m]["size_mb"], m))
    best = -math.inf
    for mid in ordered:
        agg = aggregates[mid]
        if agg["degenerate"]:
            continue
        if agg["avg_d_prime_dev"] > best:
            frontier.add(mid)
            best = agg["avg_d_prime_dev"]
    return frontier


def _kendall_table(models: list, vectors: dict) -> dict:
    """4x4 tau-b table over the model orderings; symmetric, unit diagonal."""
    table = {}
    degenerate = False
    for i, a in enumerate(ORDERINGS):
        row = {}
        for j, b in enumerate(ORDERINGS):
            if j < i:
                row[b] = table[b][a]
            elif i == j:
                row[b] = 1.0
            else:
                try:
                    row[b] = kendall_tau(vectors[a], vectors[b])
                except (DegenerateInputError, InvalidInputError):
                    row[b] = None
                    degenerate = True
        table[a] = row
    return {"orderings": list(ORDERINGS), "table": table, "degenerate": degenerate}


def run_report(probe_rows: list, registry: dict, out_dir=None, ab_groups=None) -> dict:
    """Assemble the full metric report from probe rows and a model registry.

    ``probe_rows``: dicts with model_id, task, metric, variant, dev/test
    scores, accuracies, and AUCs (one row per model x task).
    ``registry``: model_id -> {param_count, size_mb, kind, ...}.
    ``ab_groups``: optional list of {name, a_models, b_models, tasks?} with
    the two model lists matched by index (paired seeds).

    Missing (model, task) pairs are flagged in ``gaps`` but the report is
    still emitted. Writes report.json, curve.csv, kendall.csv, per_task.csv
    under ``out_dir`` when given.
    """
    if not probe_rows:
        raise InvalidInputError("run_report requires at least one probe row")
    models = sorted({r["model_id"] for r in probe_rows})
    tasks = sorted({r["task"] for r in probe_rows})
    missing_models = [m for m in models if m not in registry]
    if missing_models:
        raise InvalidInputError(f"models missing from registry: {missing_models}")

    by_model = {m: sorted((r for r in probe_rows if r["model_id"] == m),
                          key=lambda r: r["task"]) for m in models}
    index = {(r["model_id"], r["task"]): r for r in probe_rows}
    gaps = sorted(
        f"{m}:{t}" for m in models for t in tasks if (m, t) not in index
    )

    aggregates = {m: aggregate_model(by_model[m]) for m in models}
    frontier = _frontier(models, aggregates, registry)

    curve = []
    for mid in sorted(models, key=lambda m: (registry[m]["size_mb"], m)):
        agg = aggregates[mid]
        curve.append({
            "model_id": mid,
            "size_mb": registry[mid]["size_mb"],
            "param_count": registry[mid]["param_count"],
            "avg_d_prime_dev": agg["avg_d_prime_dev"],
            "avg_d_prime_test": agg["avg_d_prime_test"],
            "best_at_size": mid in frontier,
            "degenerate": agg["degenerate"],
        })

    ranked = [m for m in models if not aggregates[m]["degenerate"]]
    kendall = {"orderings": list(ORDERINGS), "table": None,
               "degenerate": True, "n_models": len(ranked)}
    if len(ranked) >= 2:
        vectors = {
            "d_prime_dev": [aggregates[m]["avg_d_prime_dev"] for m in ranked],
            "d_prime_test": [aggregates[m]["avg_d_prime_test"] for m in ranked],
            "metric_dev": [aggregates[m]["avg_metric_dev"] for m in ranked],
            "metric_test": [aggregates[m]["avg_metric_test"] for m in ranked],
        }
        kendall = {**_kendall_table(ranked, vectors), "n_models": len(ranked)}

    leave_one_out = {}
    for left_out in tasks:
        loo_aggs = {}
        for m in models:
            rows = [r for r in by_model[m] if r["task"] != left_out]
            if rows:
                loo_aggs[m] = aggregate_model(rows)
        usable = [m for m in loo_aggs if not loo_aggs[m]["degenerate"]]
        loo_frontier = _frontier(usable, loo_aggs, registry)
        leave_one_out[left_out] = {
            "frontier": sorted(loo_frontier),
            "best": max(
                (m for m in usable), default=None,
                key=lambda m: loo_aggs[m]["avg_d_prime_dev"],
            ),
        }

    ab_results = []
    for group in ab_groups or []:
        ab_results.append(_ab_test(group, index, tasks))

    report = {
        "models": {
            m: {**registry[m], "aggregate": aggregates[m]} for m in models
        },
        "results": {
            m: {r["task"]: {k: r[k] for k in (
                "variant", "metric", "dev_score", "test_score",
                "dev_accuracy", "test_accuracy", "dev_auc", "test_auc")}
                for r in by_model[m]}
            for m in models
        },
        "curve": curve,
        "kendall": kendall,
        "leave_one_out": leave_one_out,
        "ab_tests": ab_results,
        "gaps": gaps,
    }
    if out_dir is not None:
        _write_outputs(report, Path(out_dir))
    return report


def _ab_test(group: dict, index: dict, tasks: list) -> dict:
    a_models = group["a_models"]
    b_models = group["b_models"]
    if len(a_models) != len(b_models):
        raise InvalidInputError(
            f"A/B group {group.get('name')!r}: model lists must pair by index"
        )
    group_tasks = group.get("tasks") or tasks
    out = {"name": group.get("name", "ab"), "tasks": {}, "pooled": {}}
    pooled = {"dev": ([], []), "test": ([], [])}
    for task in group_tasks:
        per_task = {"dev": ([], []), "test": ([], [])}
        for am, bm in zip(a_models, b_models):
            ra, rb = index.get((am, task)), index.get((bm, task))
            if ra is None or rb is None:
                continue
            for split in ("dev", "test"):
                per_task[split][0].append(oriented_metric(ra, split))
                per_task[split][1].append(oriented_metric(rb, split))
                pooled[split][0].append(oriented_metric(ra, split))
                pooled[split][1].append(oriented_metric(rb, split))
        out["tasks"][task] = {
            split: _ttest_row(*per_task[split]) for split in ("dev", "test")
        }
    out["pooled"] = {split: _ttest_row(*pooled[split]) for split in ("dev", "test")}
    return out


def _ttest_row(a: list, b: list):
    if len(a) < 2:
        return {"t": None, "p": None, "n": len(a), "mean_diff": None,
                "note": "insufficient pairs"}
    res = paired_t_test(a, b)
    return {"t": res.t_statistic, "p": res.p_value, "n": res.n,
            "mean_diff": sum(x - y for x, y in zip(a, b)) / len(a),
            "note": res.note}


def _csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_outputs(report: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2))
    _csv(out_dir / "curve.csv",
         ["model_id", "size_mb", "param_count", "avg_d_prime_dev",
          "avg_d_prime_test", "best_at_size"],
         [[c["model_id"], c["size_mb"], c["param_count"], c["avg_d_prime_dev"],
           c["avg_d_prime_test"], int(c["best_at_size"])] for c in report["curve"]])
    kendall_rows = []
    if report["kendall"]["table"] is not None:
        for a in ORDERINGS:
            kendall_rows.append([a] + [report["kendall"]["table"][a][b] for b in ORDERINGS])
    _csv(out_dir / "kendall.csv", ["ordering"] + list(ORDERINGS), kendall_rows)
    per_task_rows = []
    for m in sorted(report["results"]):
        for t in sorted(report["results"][m]):
            r = report["results"][m][t]
            per_task_rows.append([m, t, r["metric"], r["variant"], r["dev_score"],
                                  r["test_score"], r["dev_auc"], r["test_auc"]])
    _csv(out_dir / "per_task.csv",
         ["model_id", "task", "metric", "variant", "dev_score", "test_score",
          "dev_auc", "test_auc"], per_task_rows)
