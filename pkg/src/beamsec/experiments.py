"""End-to-end research-question runs and report emission."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import plots
from .attacks import AttackConfig, attack_batch
from .channel import Dataset, generate_scenario, split_dataset
from .config import ExperimentConfig
from .defenses import AdvTrainConfig, DistillConfig, adversarial_train, distill
from .metrics import histogram, mse, pearson
from .model import (MlpModel, ModelSpec, TrainConfig, deployed_prediction,
                    train)

UNDEFENDED = "undefended"
ADV_TRAIN = "adversarial-training"
DISTILLED = "defensive-distillation"

DEFENSE_ORDER = (UNDEFENDED, ADV_TRAIN, DISTILLED)


@dataclass
class EvalReport:
    cells: list[dict] = field(default_factory=list)
    correlations: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


def derive_seed(master: int, *tags) -> int:
    """Stable 63-bit seed from the master seed and a lineage path."""
    path = f"{master}/" + "/".join(str(t) for t in tags)
    digest = hashlib.sha256(path.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def config_digest(cfg: ExperimentConfig) -> str:
    doc = dataclasses.asdict(cfg)
    doc.pop("threads", None)  # scheduling knob; never changes the results
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _cell_matches(cell: dict, only: str | None) -> bool:
    if not only:
        return True
    for clause in only.split(","):
        key, _, want = clause.partition("=")
        if key.strip() not in cell:
            return False
        if str(cell[key.strip()]) != want.strip():
            return False
    return True


@dataclass
class ExperimentContext:
    cfg: ExperimentConfig
    dataset: Dataset
    model: MlpModel
    loss_history: list[float]


def prepare(cfg: ExperimentConfig) -> ExperimentContext:
    """Generate, split, and train the clean model for one scenario."""
    name = cfg.scenario.name
    scenario = dataclasses.replace(
        cfg.scenario, seed=derive_seed(cfg.master_seed, "data", name))
    dataset = generate_scenario(scenario)
    dataset = split_dataset(dataset, cfg.train_fraction,
                            derive_seed(cfg.master_seed, "split", name))
    spec = ModelSpec(input_dim=dataset.X.shape[1], hidden_dims=cfg.hidden_dims,
                     output_dim=dataset.Y.shape[1],
                     hidden_activations=cfg.hidden_activations)
    tcfg = dataclasses.replace(cfg.train,
                               seed=derive_seed(cfg.master_seed, "train", name))
    model, history = train(spec, dataset, tcfg)
    return ExperimentContext(cfg=cfg, dataset=dataset, model=model,
                             loss_history=history)


def _attack_config(cfg: ExperimentConfig, kind: str, eps: float,
                   seed: int) -> AttackConfig:
    return AttackConfig(kind=kind, epsilon=eps, steps=cfg.attack_steps,
                        random_start=(kind == "PGD" and cfg.pgd_random_start),
                        clip_lo=cfg.clip_lo, clip_hi=cfg.clip_hi, seed=seed)


def _clean_cell(cfg, name, defense, model, X, Y):
    mean, per_sample = mse(Y, deployed_prediction(model, X))
    h = histogram(per_sample)
    return {
        "scenario": name, "attack": "none", "epsilon": 0.0, "defense": defense,
        "mean_mse": mean, "n": int(X.shape[0]), "seed": None,
        "hist": {"edges": h.bin_edges.tolist(), "counts": h.counts.tolist(),
                 "mean": h.mean, "std": h.std},
    }


def evaluate_grid(cfg: ExperimentConfig, dataset: Dataset,
                  models: dict[str, MlpModel], epsilons,
                  only: str | None = None, threads: int = 1) -> list[dict]:
    """Evaluate every (defense, attack, epsilon) cell on the test rows.

    Per-cell seeds derive from the master seed and the cell coordinates, so
    results do not depend on which cells run or in what order.
    """
    X, Y = dataset.test_rows()
    name = cfg.scenario.name
    jobs = []
    for defense in DEFENSE_ORDER:
        if defense not in models:
            continue
        for kind in cfg.attack_kinds:
            for eps in epsilons:
                seed = derive_seed(cfg.master_seed, "attack", name, defense,
                                   kind, repr(float(eps)))
                stub = {"scenario": name, "attack": kind, "epsilon": float(eps),
                        "defense": defense, "seed": seed}
                if _cell_matches(stub, only):
                    jobs.append((stub, models[defense]))

    def run(job):
        stub, model = job
        acfg = _attack_config(cfg, stub["attack"], stub["epsilon"], stub["seed"])
        result = attack_batch(model, X, Y, acfg)
        h = histogram(result.per_sample_mse)
        cell = dict(stub)
        cell.update({
            "mean_mse": result.mean_mse, "n": int(X.shape[0]),
            "hist": {"edges": h.bin_edges.tolist(),
                     "counts": h.counts.tolist(),
                     "mean": h.mean, "std": h.std},
            "per_sample_mse": result.per_sample_mse,
        })
        return cell

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(run, jobs))
    else:
        cells = [run(j) for j in jobs]

    for defense in DEFENSE_ORDER:
        if defense in models:
            clean = _clean_cell(cfg, name, defense, models[defense], X, Y)
            if _cell_matches(clean, only):
                cells.append(clean)
    return cells


def _provenance(cfg: ExperimentConfig, cells: list[dict], rq: str) -> dict:
    lineage = {
        f"{c['defense']}/{c['attack']}/{c['epsilon']}": c["seed"]
        for c in cells if c.get("seed") is not None
    }
    return {
        "rq": rq,
        "master_seed": cfg.master_seed,
        "scenario": cfg.scenario.name,
        "config_hash": config_digest(cfg),
        "seed_lineage": lineage,
    }


def _strip_private(cells: list[dict]) -> list[dict]:
    return [{k: v for k, v in c.items() if k != "per_sample_mse"} for c in cells]


def run_rq1(cfg: ExperimentConfig, only: str | None = None,
            ctx: ExperimentContext | None = None) -> EvalReport:
    """MSE-vs-epsilon curves for the clean model under every attack."""
    ctx = ctx or prepare(cfg)
    cells = evaluate_grid(cfg, ctx.dataset, {UNDEFENDED: ctx.model},
                          cfg.attack_epsilons, only=only, threads=cfg.threads)
    return EvalReport(cells=_strip_private(cells),
                      provenance=_provenance(cfg, cells, "rq1"))


def run_rq2(cfg: ExperimentConfig, only: str | None = None,
            ctx: ExperimentContext | None = None) -> EvalReport:
    """Per-sample MSE distributions plus Pearson(epsilon, mean MSE) per attack.

    The correlation pairs each epsilon in the grid with the mean test MSE it
    produces, one point per epsilon.
    """
    ctx = ctx or prepare(cfg)
    cells = evaluate_grid(cfg, ctx.dataset, {UNDEFENDED: ctx.model},
                          cfg.attack_epsilons, only=only, threads=cfg.threads)
    correlations = []
    for kind in cfg.attack_kinds:
        pts = sorted((c["epsilon"], c["mean_mse"]) for c in cells
                     if c["attack"] == kind)
        if not pts:
            continue
        row = {"scenario": cfg.scenario.name, "attack": kind}
        try:
            res = pearson(np.array([p[0] for p in pts]),
                          np.array([p[1] for p in pts]))
            row.update({"r": res.r, "p": res.p, "n": res.n})
        except ValueError as exc:
            row["error"] = str(exc)
        correlations.append(row)
    return EvalReport(cells=_strip_private(cells), correlations=correlations,
                      provenance=_provenance(cfg, cells, "rq2"))


def build_defended_models(cfg: ExperimentConfig,
                          ctx: ExperimentContext) -> dict[str, MlpModel]:
    """Train the adversarially hardened and distilled models."""
    name = cfg.scenario.name
    adv_cfg = AdvTrainConfig(
        attacks=cfg.adv_attacks, epsilons=cfg.adv_epsilons,
        epochs_per_round=cfg.epochs_per_round,
        base=dataclasses.replace(
            cfg.train, seed=derive_seed(cfg.master_seed, "advtrain", name)),
        attack_steps=cfg.attack_steps, clip_lo=cfg.clip_lo, clip_hi=cfg.clip_hi)
    robust = adversarial_train(ctx.model, ctx.dataset, adv_cfg)

    student_spec = ctx.model.spec
    teacher_spec = dataclasses.replace(
        student_spec, hidden_dims=tuple(2 * d for d in student_spec.hidden_dims))
    dist_cfg = DistillConfig(
        teacher_spec=teacher_spec, student_spec=student_spec,
        temperature=cfg.distill_temperature, mode=cfg.distill_mode,
        base=dataclasses.replace(
            cfg.train, seed=derive_seed(cfg.master_seed, "distill", name)))
    student, _ = distill(ctx.dataset, dist_cfg)
    return {UNDEFENDED: ctx.model, ADV_TRAIN: robust, DISTILLED: student}


def run_rq3(cfg: ExperimentConfig, only: str | None = None,
            ctx: ExperimentContext | None = None) -> EvalReport:
    """Three-way defense comparison over the mitigation epsilon grid."""
    ctx = ctx or prepare(cfg)
    models = build_defended_models(cfg, ctx)
    cells = evaluate_grid(cfg, ctx.dataset, models, cfg.rq3_epsilons,
                          only=only, threads=cfg.threads)
    return EvalReport(cells=_strip_private(cells),
                      provenance=_provenance(cfg, cells, "rq3"))


def emit_report(report: EvalReport, out_dir, formats=("json", "csv", "svg")):
    """Write report.json, mse_table.csv, correlation.csv, and SVG figures.

    File contents are deterministic for identical reports; the wall-clock
    timestamp goes to a run_meta.json sidecar only.
    """
    from pathlib import Path
    out = Path(out_dir)
    if not report.cells and not report.correlations:
        raise ValueError("refusing to emit an empty report")
    out.mkdir(parents=True, exist_ok=True)
    written = []

    if "json" in formats:
        path = out / "report.json"
        doc = {"cells": report.cells, "correlations": report.correlations,
               "provenance": report.provenance}
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        written.append(path)

    if "csv" in formats:
        path = out / "mse_table.csv"
        defenses = [d for d in DEFENSE_ORDER
                    if any(c["defense"] == d for c in report.cells)]
        lines = ["scenario,attack,epsilon," + ",".join(defenses)]
        keys = sorted({(c["scenario"], c["attack"], c["epsilon"])
                       for c in report.cells})
        by_coord = {(c["scenario"], c["attack"], c["epsilon"], c["defense"]): c
                    for c in report.cells}
        for sc, attack, eps in keys:
            vals = []
            for d in defenses:
                cell = by_coord.get((sc, attack, eps, d))
                vals.append(repr(cell["mean_mse"]) if cell else "")
            lines.append(f"{sc},{attack},{repr(eps)}," + ",".join(vals))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

        path = out / "correlation.csv"
        lines = ["scenario,attack,r,p,n"]
        for row in sorted(report.correlations,
                          key=lambda r: (r["scenario"], r["attack"])):
            if "error" in row:
                lines.append(f"{row['scenario']},{row['attack']},"
                             f"error: {row['error']},,")
            else:
                lines.append(f"{row['scenario']},{row['attack']},"
                             f"{repr(row['r'])},{repr(row['p'])},{row['n']}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    if "svg" in formats:
        written += plots.render_report_figures(report, out)

    meta = out / "run_meta.json"
    meta.write_text(json.dumps(
        {"written_at_unix": time.time(),
         "files": [p.name for p in written]}, indent=1) + "\n")
    return written
