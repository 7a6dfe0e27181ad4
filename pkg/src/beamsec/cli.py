"""Command-line harness for data generation, training, attacks, and RQ runs."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .attacks import KINDS, AttackConfig, attack_batch
from .channel import (PRESETS, export_dataset_csv, generate_scenario,
                      import_dataset_csv, split_dataset)
from .config import ExperimentConfig, default_config, load_experiment_config
from .defenses import AdvTrainConfig, DistillConfig, adversarial_train, distill
from .metrics import mse
from .model import (ModelSpec, load_model, predict, save_model, train)


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_experiment_config(args.config)
    else:
        cfg = default_config(preset=getattr(args, "preset", "O1_60-mini"))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.threads is not None:
        cfg = dataclasses.replace(cfg, threads=args.threads)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate_data(args) -> int:
    cfg = _experiment_config(args)
    seed = experiments.derive_seed(cfg.master_seed, "data", cfg.scenario.name)
    scenario = dataclasses.replace(cfg.scenario, seed=seed)
    dataset = generate_scenario(scenario)
    dataset = split_dataset(dataset, cfg.train_fraction,
                            experiments.derive_seed(cfg.master_seed, "split",
                                                    cfg.scenario.name))
    out = _out_dir(args) / f"{cfg.scenario.name}.csv"
    export_dataset_csv(dataset, out)
    print(f"wrote {out} ({dataset.n} rows, X {dataset.X.shape}, Y {dataset.Y.shape})")
    return 0


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    dataset = import_dataset_csv(args.dataset)
    dataset = split_dataset(dataset, cfg.train_fraction,
                            experiments.derive_seed(cfg.master_seed, "split",
                                                    cfg.scenario.name))
    spec = ModelSpec(input_dim=dataset.X.shape[1], hidden_dims=cfg.hidden_dims,
                     output_dim=dataset.Y.shape[1],
                     hidden_activations=cfg.hidden_activations)
    tcfg = dataclasses.replace(
        cfg.train, seed=experiments.derive_seed(cfg.master_seed, "train",
                                                cfg.scenario.name))
    model, history = train(spec, dataset, tcfg)
    out = _out_dir(args) / "model.json"
    save_model(model, out)
    X_test, Y_test = dataset.test_rows()
    test_mse, _ = mse(Y_test, predict(model, X_test))
    print(f"wrote {out} (final train loss {history[-1]:.6f}, "
          f"test MSE {test_mse:.6f})")
    return 0


def cmd_attack(args) -> int:
    cfg = _experiment_config(args)
    model = load_model(args.model)
    dataset = import_dataset_csv(args.dataset)
    acfg = AttackConfig(kind=args.kind, epsilon=args.epsilon,
                        steps=cfg.attack_steps,
                        random_start=(args.kind == "PGD" and cfg.pgd_random_start),
                        clip_lo=cfg.clip_lo, clip_hi=cfg.clip_hi,
                        seed=cfg.master_seed)
    result = attack_batch(model, dataset.X, dataset.Y, acfg)
    out = _out_dir(args)
    adv = dataclasses.replace(dataset, X=result.x_adv)
    adv_path = out / f"adversarial_{args.kind.lower()}_{args.epsilon}.csv"
    export_dataset_csv(adv, adv_path)
    print(f"wrote {adv_path} (mean adversarial MSE {result.mean_mse:.6f})")
    return 0


def cmd_defend(args) -> int:
    cfg = _experiment_config(args)
    dataset = import_dataset_csv(args.dataset)
    dataset = split_dataset(dataset, cfg.train_fraction,
                            experiments.derive_seed(cfg.master_seed, "split",
                                                    cfg.scenario.name))
    out = _out_dir(args)
    if args.method == "adversarial-training":
        model = load_model(args.model)
        adv_cfg = AdvTrainConfig(
            attacks=cfg.adv_attacks, epsilons=cfg.adv_epsilons,
            epochs_per_round=cfg.epochs_per_round,
            base=dataclasses.replace(cfg.train, seed=cfg.master_seed),
            attack_steps=cfg.attack_steps,
            clip_lo=cfg.clip_lo, clip_hi=cfg.clip_hi)
        robust = adversarial_train(model, dataset, adv_cfg)
        path = out / "model_advtrain.json"
        save_model(robust, path)
    else:
        student_spec = ModelSpec(input_dim=dataset.X.shape[1],
                                 hidden_dims=cfg.hidden_dims,
                                 output_dim=dataset.Y.shape[1],
                                 hidden_activations=cfg.hidden_activations)
        teacher_spec = dataclasses.replace(
            student_spec, hidden_dims=tuple(2 * d for d in cfg.hidden_dims))
        dist_cfg = DistillConfig(
            teacher_spec=teacher_spec, student_spec=student_spec,
            temperature=cfg.distill_temperature, mode=cfg.distill_mode,
            base=dataclasses.replace(cfg.train, seed=cfg.master_seed))
        student, _ = distill(dataset, dist_cfg)
        path = out / "model_distilled.json"
        save_model(student, path)
    print(f"wrote {path}")
    return 0


def _run_rq(args, runner) -> int:
    cfg = _experiment_config(args)
    report = runner(cfg, only=args.only)
    written = experiments.emit_report(report, _out_dir(args))
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    doc = json.loads(Path(args.report).read_text())
    report = experiments.EvalReport(cells=doc["cells"],
                                    correlations=doc.get("correlations", []),
                                    provenance=doc.get("provenance", {}))
    for path in experiments.emit_report(report, _out_dir(args)):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsec",
        description="Adversarial robustness laboratory for beamforming prediction")
    parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out", help="output directory (default: results)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for grid evaluation")
    parser.add_argument("--only", default=None,
                        help="cell filter, e.g. attack=BIM,epsilon=0.1")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="generate a scenario dataset CSV")
    p.add_argument("--preset", default="O1_60-mini", choices=sorted(PRESETS))
    p.set_defaults(fn=cmd_generate_data)

    p = sub.add_parser("train", help="train the prediction model on a dataset CSV")
    p.add_argument("dataset")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("attack", help="run one attack against a trained model")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--kind", default="BIM", choices=KINDS)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("defend", help="produce a hardened model")
    p.add_argument("method", choices=["adversarial-training", "distillation"])
    p.add_argument("dataset")
    p.add_argument("--model", help="base model (adversarial training)")
    p.set_defaults(fn=cmd_defend)

    for rq, runner in (("rq1", experiments.run_rq1),
                       ("rq2", experiments.run_rq2),
                       ("rq3", experiments.run_rq3)):
        p = sub.add_parser(rq, help=f"run the {rq} evaluation end to end")
        p.add_argument("--preset", default="O1_60-mini", choices=sorted(PRESETS))
        p.set_defaults(fn=_run_rq, runner=runner)

    p = sub.add_parser("report", help="re-render CSV/SVG from a report.json")
    p.add_argument("report")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "runner", None) is not None:
            return args.fn(args, args.runner)
        return args.fn(args)
    except Exception as exc:  # structured failure for scripting
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
