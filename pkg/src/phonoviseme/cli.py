"""Command-line entry point.

Settings come from an optional JSON file with ``gen``, ``train`` and ``model``
sections, then per-field flags (``--n-real 40``, ``--lr-new 1e-3``), then
generic ``--set section.key=value`` overrides. Metrics go to stdout as JSON
or to ``--out``. Exit status: 0 on success, 2 on invalid input or config,
1 on runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .errors import (
    ConfigError,
    DomainError,
    EmptyInputError,
    ParseError,
    ShapeError,
    UsageError,
    ValidationError,
)
from .pipeline.checkpoint import load_model, save_params
from .pipeline.gradcheck import check_module
from .pipeline.model import Detector, ModelConfig, collate, pretrain_losses
from .pipeline.perturb import KINDS, LEVELS, perturb
from .pipeline.training import TrainConfig, evaluate, finetune, prepare, pretrain
from .synthcorpus import GenConfig, generate_clips, generate_corpus, iter_corpus

log = logging.getLogger("phonoviseme")

_INVALID = (ConfigError, ValidationError, UsageError, ShapeError, DomainError, ParseError, EmptyInputError)


# ---------------------------------------------------------------------------
# config assembly


def _parse_scalar(text: str, like: Any):
    if isinstance(like, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {text!r}")
    if isinstance(like, tuple):
        parts = [p for p in text.split(",") if p]
        return tuple(_parse_scalar(p, like[0]) if like else _guess(p) for p in parts)
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    if like is None:
        return _guess(text)
    return text


def _guess(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _add_fields(parser: argparse.ArgumentParser, cls, section: str) -> None:
    group = parser.add_argument_group(f"{section} settings")
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else None
        if isinstance(default, (int, float, str, bool, tuple)) or default is None:
            flag = "--" + f.name.replace("_", "-")
            group.add_argument(flag, dest=f"{section}.{f.name}", default=None, metavar=f.name.upper(),
                               help=f"(default: {default!r})")


def _sections(args) -> dict[str, dict]:
    out: dict[str, dict] = {"gen": {}, "train": {}, "model": {}}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(out)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        for k, v in loaded.items():
            out[k].update(v)
    defaults = {"gen": GenConfig(), "train": TrainConfig(), "model": ModelConfig()}
    for key, text in vars(args).items():
        if "." in key and text is not None:
            section, name = key.split(".", 1)
            try:
                out[section][name] = _parse_scalar(text, getattr(defaults[section], name))
            except ValueError as exc:
                raise UsageError(f"--{name.replace('_', '-')}: {exc}") from None
    for item in args.set or ():
        path, sep, text = item.partition("=")
        parts = path.split(".")
        if not sep or len(parts) < 2 or parts[0] not in out:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        node = out[parts[0]]
        for p in parts[1:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _guess(text)
    return out


def _build(cls, values: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields {sorted(unknown)}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _clips(args, labels: Sequence[str] | None = None):
    clips = list(iter_corpus(args.corpus, args.split))
    if labels is not None:
        clips = [c for c in clips if c.label in labels]
    if args.limit:
        clips = clips[: args.limit]
    if not clips:
        raise EmptyInputError(f"no clips in split {args.split!r} of {args.corpus}")
    return clips


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> dict:
    cfg = _build(GenConfig, _sections(args)["gen"])
    manifest = generate_corpus(cfg, args.corpus_out, workers=args.workers)
    splits: dict[str, int] = {}
    for e in manifest["clips"]:
        key = f"{e['split']}/{e['label']}"
        splits[key] = splits.get(key, 0) + 1
    return {"root": str(args.corpus_out), "clips": len(manifest["clips"]), "splits": splits, "config_digest": cfg.digest()}


def _history_payload(result) -> dict:
    return {"initial_loss": result.initial_loss, "final_loss": result.final_loss,
            "history": result.history, "skipped": result.skipped}


def cmd_pretrain(args) -> dict:
    sec = _sections(args)
    tc, mc = _build(TrainConfig, sec["train"]), _build(ModelConfig, sec["model"])
    result = pretrain(_clips(args, ("real",)), tc, mc)
    payload = _history_payload(result)
    if args.save:
        payload["params"] = str(save_params(result.model, args.save))
    return payload


def cmd_finetune(args) -> dict:
    sec = _sections(args)
    tc = _build(TrainConfig, sec["train"])
    model = load_model(args.init) if args.init else Detector(_build(ModelConfig, sec["model"]))
    result = finetune(_clips(args), tc, model)
    payload = _history_payload(result)
    if args.save:
        payload["params"] = str(save_params(result.model, args.save))
    return payload


def cmd_eval(args) -> dict:
    report = evaluate(load_model(args.params), _clips(args))
    return report.to_dict()


def cmd_perturb_eval(args) -> dict:
    model = load_model(args.params)
    clips = _clips(args)
    clean = evaluate(model, clips).auc
    grid = {}
    for kind in args.kinds:
        grid[kind] = {}
        for level in args.levels:
            auc = evaluate(model, [perturb(c, kind, level) for c in clips]).auc
            grid[kind][str(level)] = auc
            log.info("%s level %d auc %.4f", kind, level, auc)
    return {"clean_auc": clean, "auc": grid,
            "drop": {k: {lv: clean - a for lv, a in row.items()} for k, row in grid.items()}}


def cmd_gradcheck(args) -> dict:
    import torch

    from .repro import micro_model_config

    cfg = micro_model_config(fusion_source=args.fusion_source)
    torch.manual_seed(args.seed)
    model = Detector(cfg).double().train()
    clips = list(generate_clips(GenConfig(seed=args.corpus_seed), 2, 0))
    batch = collate(prepare(clips, cfg), dtype=torch.float64)
    report = check_module(model, lambda: pretrain_losses(model(batch), cfg).pre,
                          step=args.step, samples=args.samples, tol=args.tol)
    payload = {
        "max_rel_error": report.max_rel_error,
        "tolerance": args.tol,
        "pass": report.max_rel_error < args.tol,
        "checked": report.n_checked,
        "kinks": report.n_kinks,
        "zero_gradient": report.zero_gradient,
        "worst": dataclasses.asdict(report.worst) if report.worst else None,
    }
    return payload


def cmd_repro(args) -> dict:
    from .repro import ACCEPTANCE, ALL_SPECS, run_experiment

    names = [s.name for s in ACCEPTANCE.values()] if args.names == ["acceptance"] else args.names
    unknown = [n for n in names if n not in ALL_SPECS]
    if unknown:
        raise UsageError(f"unknown experiment(s) {unknown}; choose from {sorted(ALL_SPECS)} or 'acceptance'")
    context: dict = {}
    results = {}
    for name in names:
        report = run_experiment(ALL_SPECS[name], args.report_dir, context)
        print(report.summary(), file=sys.stderr)
        results[name] = {"pass": report.passed, "measured": report.measured, "failures": report.failures,
                         "warnings": report.warnings}
    return {"experiments": results, "pass": all(r["pass"] for r in results.values())}


def cmd_plot(args) -> dict:
    from .plots import plot_report

    made = []
    for report in args.reports:
        made += [str(p) for p in plot_report(report, args.out_dir)]
    return {"figures": made}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonoviseme",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Lip-sync forgery detection from non-critical phoneme-viseme alignment.",
        epilog=__doc__.split("\n\n", 1)[1],
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sections=()):
        p.add_argument("--config", help="JSON file with gen/train/model sections")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config field")
        p.add_argument("--out", help="write the JSON result here instead of stdout")
        for cls, name in sections:
            _add_fields(p, cls, name)

    def corpus(p, split):
        p.add_argument("--corpus", required=True, help="corpus directory written by 'gen'")
        p.add_argument("--split", default=split, choices=("train", "val", "test"))
        p.add_argument("--limit", type=int, default=0, help="use only the first N clips")

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("corpus_out", metavar="DIR", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    common(p, [(GenConfig, "gen")])
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pretrain", help="self-supervised pretraining on real clips")
    corpus(p, "train")
    p.add_argument("--save", help="write the trained parameters here")
    common(p, [(TrainConfig, "train")])
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="supervised finetuning")
    corpus(p, "train")
    p.add_argument("--init", help="parameters from pretraining (default: fresh model)")
    p.add_argument("--save", help="write the trained parameters here")
    common(p, [(TrainConfig, "train")])
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="video-level AUC/ACC on a split")
    corpus(p, "test")
    p.add_argument("--params", required=True)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturb-eval", help="AUC under video perturbations")
    corpus(p, "test")
    p.add_argument("--params", required=True)
    p.add_argument("--kinds", nargs="+", default=list(KINDS), choices=KINDS)
    p.add_argument("--levels", nargs="+", type=int, default=list(LEVELS), choices=LEVELS)
    common(p)
    p.set_defaults(func=cmd_perturb_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the pretraining loss on a 2-clip batch")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=4, help="entries per tensor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus-seed", type=int, default=3)
    p.add_argument("--fusion-source", default="common", choices=("common", "encoder"))
    common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("repro", help="run named experiment specs ('acceptance' runs criteria 1-7)")
    p.add_argument("names", nargs="+")
    p.add_argument("--report-dir", help="write <name>.json reports (and trained parameters) here")
    common(p)
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("plot", help="figures from report JSON files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out-dir", default=".")
    common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        payload = args.func(args)
        _emit(payload, args.out)
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = payload.get("pass") is False
    return 1 if failed else 0
