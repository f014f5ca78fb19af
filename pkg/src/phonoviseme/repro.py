"""Scripted reproduction runs.

Each acceptance criterion is one named :class:`ExperimentSpec`. A spec names
a runner, the corpus/model/training configs it uses, the metrics it expects
with their tolerances and a wall-clock budget. :func:`run_experiment` executes
the runner, compares what it measured and returns an :class:`ExperimentReport`
that serializes to the report JSON.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import subprocess
import sys
import tempfile
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import torch

from . import objectives as obj
from . import reference
from .encoder import EncoderConfig, LFAEncoder, LocalFeatureAggregation, WindowAttention, lfa_apply, zero_residual_branches
from .errors import ConfigError
from .pipeline.checkpoint import load_model, save_params
from .pipeline.gradcheck import GradCheckReport, check_module, grad_check, leaf
from .pipeline.metrics import roc_auc
from .pipeline.model import Detector, ModelConfig, collate, pretrain_losses
from .pipeline.perturb import KINDS, perturb
from .pipeline.training import TrainConfig, evaluate, finetune, prepare, pretrain
from .pvam import CafmParams, cafm
from .screening import PhonemeSegment, SegmentTimeline, filter_noncritical
from .synthcorpus import GenConfig, generate_clips

log = logging.getLogger(__name__)

_OPS: dict[str, Callable[[float, float, float], bool]] = {
    "ge": lambda m, v, t: m >= v,
    "gt": lambda m, v, t: m > v,
    "le": lambda m, v, t: m <= v,
    "lt": lambda m, v, t: m < v,
    "close": lambda m, v, t: abs(m - v) <= t,
}


@dataclass(frozen=True)
class Expectation:
    metric: str
    op: str
    value: float
    tol: float = 0.0

    def __post_init__(self):
        if self.op not in _OPS:
            raise ConfigError(f"unknown comparison {self.op!r}")

    def holds(self, measured: float | None) -> bool:
        if measured is None or not math.isfinite(measured):
            return False
        return _OPS[self.op](measured, self.value, self.tol)

    def describe(self) -> dict:
        return {"op": self.op, "bound": self.value, "tol": self.tol}


@dataclass(frozen=True)
class Sizes:
    pretrain: int = 2000
    finetune_real: int = 400
    finetune_fake: int = 400
    test_real: int = 100
    test_fake: int = 100


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    runner: str
    criterion: int | None = None
    gen: GenConfig = GenConfig(seed=7)
    train: TrainConfig = TrainConfig()
    model: ModelConfig = ModelConfig()
    sizes: Sizes = Sizes()
    expected: tuple[Expectation, ...] = ()
    max_seconds: float = 600.0
    options: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.runner not in RUNNERS:
            raise ConfigError(f"unknown runner {self.runner!r}")

    @property
    def opts(self) -> dict[str, Any]:
        return dict(self.options)

    @property
    def corpus_digest(self) -> str:
        return self.gen.digest()

    @property
    def train_digest(self) -> str:
        return self.train.digest()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "runner": self.runner,
            "criterion": self.criterion,
            "corpus_digest": self.corpus_digest,
            "train_digest": self.train_digest,
            "model_digest": self.model.digest(),
            "sizes": asdict(self.sizes),
            "max_seconds": self.max_seconds,
            "options": json.loads(json.dumps(self.opts, default=str)),
        }


@dataclass
class ExperimentReport:
    spec: dict
    measured: dict[str, float | None]
    expected: dict[str, float]
    tolerance: dict[str, dict]
    passed: bool
    wall_seconds: float
    timings: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    curves: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        """Hash of everything except timing, so identical reruns compare equal."""
        d = self.to_dict()
        for k in ("wall_seconds", "timings"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def summary(self) -> str:
        parts = []
        for metric, value in self.measured.items():
            if metric in self.tolerance:
                t = self.tolerance[metric]
                parts.append(f"{metric}={_fmt(value)} ({t['op']} {_fmt(t['bound'])})")
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.spec['name']}: " + ", ".join(parts) + f" in {self.wall_seconds:.1f}s"


def _fmt(x) -> str:
    return "None" if x is None else f"{x:.6g}"


class _Clock:
    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class _RunOutput:
    measured: dict[str, float | None]
    warnings: list[str] = field(default_factory=list)
    curves: dict[str, Any] = field(default_factory=dict)
    artifacts: dict[str, Any] = field(default_factory=dict)


def run_experiment(spec: ExperimentSpec, out_dir=None, context: dict | None = None) -> ExperimentReport:
    """Run ``spec``, compare against its expectations and optionally write ``report.json``.

    ``context`` carries artifacts between specs of one session (the trained
    model of the end-to-end run, reused by the robustness run).
    """
    context = {} if context is None else context
    clock = _Clock()
    t0 = time.perf_counter()
    out = RUNNERS[spec.runner](spec, clock, context)
    wall = time.perf_counter() - t0
    context[spec.name] = out.artifacts

    failures = []
    for e in spec.expected:
        if not e.holds(out.measured.get(e.metric)):
            failures.append(f"{e.metric}={_fmt(out.measured.get(e.metric))} violates {e.op} {_fmt(e.value)}")
    if wall > spec.max_seconds:
        stages = ", ".join(f"{k} {v:.1f}s" for k, v in clock.timings.items())
        failures.append(f"runtime {wall:.1f}s exceeds budget {spec.max_seconds:.0f}s ({stages})")
    report = ExperimentReport(
        spec=spec.to_dict(),
        measured=out.measured,
        expected={e.metric: e.value for e in spec.expected},
        tolerance={e.metric: e.describe() for e in spec.expected},
        passed=not failures,
        wall_seconds=wall,
        timings=clock.timings,
        failures=failures,
        warnings=out.warnings,
        curves=out.curves,
    )
    for w in out.warnings:
        log.warning("%s: %s", spec.name, w)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{spec.name}.json").write_text(report.to_json())
        if "model" in out.artifacts:
            save_params(out.artifacts["model"], out_dir / f"{spec.name}.params")
    return report


# ---------------------------------------------------------------------------
# criterion 1: loss oracles


def _rows(rng, n, d):
    return rng.normal(size=(n, d))


def _loss_oracles(spec, clock, context) -> _RunOutput:
    rng = np.random.default_rng(spec.opts.get("seed", 0))
    n_inst = spec.opts.get("instances", 100)
    errs = {k: 0.0 for k in ("ec", "ec_dedup", "infonce", "correlation", "cgra", "ce", "auc")}
    with clock.stage("losses"):
        for _ in range(n_inst):
            n, d = int(rng.integers(2, 6)), int(rng.integers(2, 5))
            a, b = _rows(rng, n, d), _rows(rng, n, d)
            tau = float(rng.uniform(0.2, 1.0))
            A, B = torch.tensor(a), torch.tensor(b)
            L, P = a.tolist(), b.tolist()
            errs["ec"] = max(errs["ec"], abs(float(obj.ec_loss(A, B, tau)) - reference.ec(L, P, tau)))
            got = float(obj.ec_loss(A, B, tau, "dedup", "mean"))
            errs["ec_dedup"] = max(errs["ec_dedup"], abs(got - reference.ec(L, P, tau, "dedup", "mean")))
            errs["infonce"] = max(errs["infonce"], abs(float(obj.infonce_loss(A, B, tau)) - reference.infonce(L, P, tau)))
            C = obj.correlation_matrix(A, B).numpy()
            errs["correlation"] = max(errs["correlation"], float(np.abs(C - np.array(reference.correlation(L, P))).max()))
            lam = float(rng.uniform(0, 0.1))
            errs["cgra"] = max(errs["cgra"], abs(float(obj.cgra_loss(A, B, lam)) - reference.cgra(L, P, lam)))
            p = rng.uniform(0, 1, size=n)
            p[rng.random(n) < 0.2] = rng.choice([0.0, 1.0])
            y = rng.integers(0, 2, size=n).astype(float)
            errs["ce"] = max(errs["ce"], abs(float(obj.ce_loss(torch.tensor(p), torch.tensor(y))) - reference.ce(p.tolist(), y.tolist())))
    with clock.stage("auc"):
        for _ in range(n_inst):
            m = int(rng.integers(4, 40))
            scores = np.round(rng.random(m), 1)  # rounding forces ties
            labels = np.r_[0, 1, rng.integers(0, 2, size=m - 2)]
            errs["auc"] = max(errs["auc"], abs(roc_auc(scores, labels) - reference.auc(scores.tolist(), labels.tolist())))
    measured = {f"{k}_max_abs_error": v for k, v in errs.items()}
    measured["instances"] = float(n_inst)
    return _RunOutput(measured)


# ---------------------------------------------------------------------------
# criterion 2: hand-derived values


def _hand_values(spec, clock, context) -> _RunOutput:
    eye = torch.eye(2, dtype=torch.float64)
    ec = float(obj.ec_loss(eye, eye, 1.0))
    cg = float(obj.cgra_loss(torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64), -torch.eye(2, dtype=torch.float64)))
    return _RunOutput(
        {
            "ec_orthonormal_n2": ec,
            "ec_orthonormal_n2_error": abs(ec - 4 * math.log(1 + 2 / math.e)),
            "cgra_negative_identity_k2": cg,
        }
    )


# ---------------------------------------------------------------------------
# criterion 3: gradient checks


def micro_model_config(**changes) -> ModelConfig:
    """A two-block d=8 detector small enough to finite-difference end to end."""
    enc = EncoderConfig(n_blocks=2, n_heads=2, d=8, window=8, shift=4)
    base = dict(d=8, d_c=8, max_segments=2, audio_encoder=enc, video_encoder=enc, face_encoder=enc)
    base.update(changes)
    return ModelConfig(**base)


def _gradchecks(spec, clock, context) -> _RunOutput:
    seed = spec.opts.get("seed", 0)
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    reports: dict[str, GradCheckReport] = {}

    with clock.stage("lfa"):
        for layout, shape in (("1d", (3, 6, 7)), ("2d", (3, 6, 4, 5))):
            m = LocalFeatureAggregation(6, 3, layout).double().train()
            x = leaf(torch.randn(*shape))
            w = torch.randn(*shape, dtype=torch.float64)
            fn = lambda m=m, x=x, w=w: (lfa_apply(x, m) * w).sum()
            r = check_module(m, fn, samples=None)
            r.checks += grad_check([("x", x)], fn, samples=None).checks
            reports[f"lfa_{layout}"] = r
    with clock.stage("window_attention"):
        attn = WindowAttention(8, 2, 4, 2).double()
        x = leaf(torch.randn(2, 9, 8))
        w = torch.randn(2, 9, 8, dtype=torch.float64)
        for shifted in (False, True):
            fn = lambda s=shifted: (attn(x, shifted=s) * w).sum()
            r = check_module(attn, fn, samples=None)
            r.checks += grad_check([("x", x)], fn, samples=None).checks
            reports[f"attention_{'shifted' if shifted else 'plain'}"] = r
    with clock.stage("encoder"):
        cfg = EncoderConfig(n_blocks=2, n_heads=2, d=16, window=4, shift=2)
        enc = LFAEncoder(cfg, "2d").double().train()
        x = torch.randn(2, 2 * 2 * 4, 16, dtype=torch.float64)
        reports["encoder"] = check_module(enc, lambda: (enc(x, (2, 2, 4)).pooled ** 2).sum(), samples=8)
    with clock.stage("heads"):
        # train-mode batch norm over a handful of rows is badly conditioned; use a training-sized batch
        torch.manual_seed(seed)
        model = Detector(micro_model_config()).double().train()
        e = [torch.randn(16, 8, dtype=torch.float64) for _ in range(3)]
        w = torch.randn(16, 8, dtype=torch.float64)
        fn = lambda: sum((t * w).sum() for pair in model.heads(*e) for t in (pair.anchor, pair.counterpart))
        reports["heads"] = check_module(model.heads, fn, samples=None)
    with clock.stage("cafm"):
        torch.manual_seed(seed)
        P = CafmParams(4, 4, 3, cross_gain=0.5).double()
        Xp, Xv = leaf(torch.randn(3, 4, 3)), leaf(torch.randn(3, 4, 3))

        def cafm_cgra():
            out = cafm(Xp, Xv, P)
            return obj.cgra_loss(out.att_p.mean(-1), out.att_v.mean(-1), 5e-3)

        r = check_module(P, cafm_cgra, samples=None)
        r.checks += grad_check([("X_p", Xp), ("X_v", Xv)], cafm_cgra, samples=None).checks
        reports["cafm_cgra"] = r
    with clock.stage("losses"):
        a, b = leaf(rng.normal(size=(4, 3))), leaf(rng.normal(size=(4, 3)))
        y = torch.tensor([0.0, 1.0, 1.0, 0.0], dtype=torch.float64)
        losses = {
            "ec": lambda: obj.ec_loss(a, b, 0.5),
            "infonce": lambda: obj.infonce_loss(a, b, 0.5),
            "cgra": lambda: obj.cgra_loss(a, b, 5e-3),
            "ce": lambda: obj.ce_loss(torch.sigmoid(a[:, 0]), y),
        }
        for name, fn in losses.items():
            reports[f"loss_{name}"] = grad_check([("a", a), ("b", b)], fn, samples=None)
    with clock.stage("pretrain_micro_batch"):
        cfg = micro_model_config()
        torch.manual_seed(seed)
        model = Detector(cfg).double().train()
        clips = list(generate_clips(GenConfig(seed=3), 2, 0))
        batch = collate(prepare(clips, cfg), dtype=torch.float64)
        micro_loss = lambda: pretrain_losses(model(batch), cfg).pre
        micro = check_module(model, micro_loss, samples=spec.opts.get("micro_batch_samples", 16))
        reports["pretrain_micro_batch"] = micro
    with clock.stage("step_halving"):
        # truncation error of a correct gradient shrinks ~4x when the step halves; a wrong one does not
        name = micro.worst.name
        full = [check_module(model, micro_loss, step=h, samples=None, names=[name]).max_rel_error for h in (1e-3, 5e-4)]

    measured: dict[str, float | None] = {f"{k}_rel_error": r.max_rel_error for k, r in reports.items()}
    measured["max_rel_error"] = max(r.max_rel_error for r in reports.values())
    checked = sum(r.n_checked for r in reports.values())
    measured["kink_fraction"] = sum(r.n_kinks for r in reports.values()) / checked
    measured["micro_batch_worst_full_rel_error"] = full[0]
    measured["micro_batch_worst_step_halving_ratio"] = full[0] / full[1] if full[1] > 0 else None
    warnings = [f"{k}: {r.n_kinks} probe(s) straddled a relu kink and were excluded" for k, r in reports.items() if r.n_kinks]
    worst = {k: asdict(r.worst) for k, r in reports.items() if r.worst is not None}
    worst["step_halving"] = {"tensor": name, "rel_error_1e-3": full[0], "rel_error_5e-4": full[1]}
    return _RunOutput(measured, warnings, curves={"worst": worst})


# ---------------------------------------------------------------------------
# criterion 4: structural identities


def _identities(spec, clock, context) -> _RunOutput:
    torch.manual_seed(spec.opts.get("seed", 0))
    rng = np.random.default_rng(spec.opts.get("seed", 0))
    m: dict[str, float] = {}
    with clock.stage("residual"), torch.no_grad():
        enc = LFAEncoder(EncoderConfig(n_blocks=2, n_heads=2, d=8, window=4, shift=2), "2d").eval()
        zero_residual_branches(enc, ffn=True)
        x = torch.randn(3, 8, 8)
        m["encoder_identity_error"] = float((enc(x, (2, 2, 2)).sequence - x).abs().max())
        P = CafmParams(4, 3, 5)
        with torch.no_grad():
            P.W_hp.zero_()
            P.W_hv.zero_()
        Xp, Xv = torch.randn(2, 4, 5), torch.randn(2, 3, 5)
        out = cafm(Xp, Xv, P)
        m["cafm_identity_error"] = max(float((out.att_p - Xp).abs().max()), float((out.att_v - Xv).abs().max()))
    with clock.stage("filter"):
        worst = 0
        labels = ["m", "aa", "b", "iy", "f", "sh", "uw", "p", "eh", "s"]
        for _ in range(50):
            t, segs = 0, []
            for _ in range(int(rng.integers(1, 12))):
                dur = int(rng.integers(10, 200))
                segs.append(PhonemeSegment.make(str(rng.choice(labels)), t, t + dur))
                t += dur
            once = filter_noncritical(SegmentTimeline("probe", t, segs))
            worst = max(worst, int(filter_noncritical(once) != once))
        m["filter_idempotence_violations"] = float(worst)
    with clock.stage("contrastive"):
        scale_err, c_excess = 0.0, 0.0
        for _ in range(50):
            a, b = torch.tensor(_rows(rng, 4, 3)), torch.tensor(_rows(rng, 4, 3))
            s = torch.tensor(rng.uniform(0.1, 10.0, size=(4, 1)))
            for f in (lambda u, v: obj.ec_loss(u, v, 0.3), lambda u, v: obj.infonce_loss(u, v, 0.3)):
                scale_err = max(scale_err, abs(float(f(a * s, b)) - float(f(a, b))))
            c_excess = max(c_excess, float(obj.correlation_matrix(a, b).abs().max()) - 1.0)
        m["cosine_scale_invariance_error"] = scale_err
        m["correlation_bound_excess"] = max(c_excess, 0.0)
    with clock.stage("tanh"), torch.no_grad():
        P = CafmParams(3, 3, 4)
        bound = 0.0
        for scale in (1.0, 1e2, 1e4, 1e8):
            out = cafm(scale * torch.randn(2, 3, 4), scale * torch.randn(2, 3, 4), P)
            M = torch.cat([out.M_p, out.M_v])
            if not bool(torch.isfinite(out.x_att).all() and torch.isfinite(M).all()):
                bound = math.inf
            bound = max(bound, float(M.abs().max()))
        m["tanh_max_abs"] = bound
    return _RunOutput(m)


# ---------------------------------------------------------------------------
# criteria 5 and 6: end-to-end training and robustness


def _corpus(spec: ExperimentSpec, clock: _Clock, pretrain_size: int | None = None):
    s, g, mc = spec.sizes, spec.gen, spec.model
    n_pre = s.pretrain if pretrain_size is None else pretrain_size
    workers = spec.opts.get("workers", 1)
    with clock.stage("gen"):
        pre = prepare(generate_clips(g, n_pre, 0, 0, workers), mc)
        ft = prepare(generate_clips(g, s.finetune_real, s.finetune_fake, s.pretrain, workers), mc)
        test_offset = s.pretrain + s.finetune_real + s.finetune_fake
        test_raw = list(generate_clips(g, s.test_real, s.test_fake, test_offset, workers))
    return pre, ft, test_raw


def _train_and_eval(spec, clock, pre, ft, test_raw):
    with clock.stage("pretrain"):
        pr = pretrain(pre, spec.train, spec.model)
    with clock.stage("finetune"):
        fr = finetune(ft, spec.train, pr.model)
    with clock.stage("eval"):
        report = evaluate(fr.model, test_raw)
    return pr, fr, report


def _end_to_end(spec, clock, context) -> _RunOutput:
    pre, ft, test_raw = _corpus(spec, clock)
    pr, fr, report = _train_and_eval(spec, clock, pre, ft, test_raw)
    measured = {
        "auc": report.auc,
        "acc": report.acc,
        "initial_pretrain_loss": pr.initial_loss,
        "final_pretrain_loss": pr.final_loss,
        "pretrain_loss_ratio": pr.final_loss / pr.initial_loss,
    }
    curves = {"pretrain": pr.history, "finetune": fr.history}
    artifacts = {"model": fr.model, "test_clips": test_raw, "metrics": report}
    return _RunOutput(measured, curves=curves, artifacts=artifacts)


def _robustness(spec, clock, context) -> _RunOutput:
    base = spec.opts.get("base", "c5_end_to_end")
    if "model" not in context.get(base, {}):
        log.info("robustness: running %s first", base)
        run_experiment(ACCEPTANCE_BY_NAME[base], context=context)
    model, clips = context[base]["model"], context[base]["test_clips"]
    levels = spec.opts.get("levels", (1, 5))
    with clock.stage("clean"):
        clean = evaluate(model, clips).auc
    grid: dict[str, dict[int, float]] = {}
    for kind in spec.opts.get("kinds", KINDS):
        with clock.stage(kind):
            grid[kind] = {lv: evaluate(model, [perturb(c, kind, lv) for c in clips]).auc for lv in levels}
    drop = {k: {lv: clean - auc for lv, auc in row.items()} for k, row in grid.items()}
    measured: dict[str, float | None] = {"clean_auc": clean}
    lo, hi = min(levels), max(levels)
    for kind, row in drop.items():
        measured[f"{kind}_drop_l{lo}"] = row[lo]
    measured[f"max_drop_l{lo}"] = max(row[lo] for row in drop.values())
    for kind in ("noise", "blur"):
        if kind in drop:
            measured[f"{kind}_drop_l{hi}_minus_l{lo}"] = drop[kind][hi] - drop[kind][lo]
    curves = {"clean_auc": clean, "auc": {k: {str(lv): a for lv, a in row.items()} for k, row in grid.items()}}
    return _RunOutput(measured, curves=curves)


# ---------------------------------------------------------------------------
# criterion 7: determinism and persistence

_EVAL_SNIPPET = """
import json, sys
from phonoviseme.pipeline.checkpoint import load_model
from phonoviseme.pipeline.training import evaluate
from phonoviseme.synthcorpus import GenConfig, generate_clips
gen = GenConfig.from_dict(json.loads(sys.argv[2]))
n_real, n_fake, offset = map(int, sys.argv[3:6])
print(evaluate(load_model(sys.argv[1]), list(generate_clips(gen, n_real, n_fake, offset))).digest())
"""


def _determinism(spec, clock, context) -> _RunOutput:
    s = spec.sizes
    test_offset = s.pretrain + s.finetune_real + s.finetune_fake
    digests, models = [], []
    for i in range(2):
        with clock.stage(f"run{i + 1}"):
            pre, ft, test_raw = _corpus(spec, clock)
            _, fr, report = _train_and_eval(spec, clock, pre, ft, test_raw)
            digests.append(report.digest())
            models.append(fr.model)
    with tempfile.TemporaryDirectory() as tmp, clock.stage("persistence"):
        tmp = Path(tmp)
        a = save_params(models[0], tmp / "a.params").read_bytes()
        b = save_params(models[1], tmp / "b.params").read_bytes()
        reloaded = load_model(tmp / "a.params")
        c = save_params(reloaded, tmp / "c.params").read_bytes()
        state0, state1 = models[0].state_dict(), reloaded.state_dict()
        tensors_equal = all(torch.equal(state0[k], state1[k]) for k in state0) and state0.keys() == state1.keys()
        local = evaluate(reloaded, test_raw).digest()
        proc = subprocess.run(
            [sys.executable, "-c", _EVAL_SNIPPET, str(tmp / "a.params"), json.dumps(spec.gen.to_dict()),
             str(s.test_real), str(s.test_fake), str(test_offset)],
            capture_output=True, text=True, check=True,
        )
        remote = proc.stdout.strip()
    measured = {
        "rerun_reports_identical": float(digests[0] == digests[1]),
        "rerun_archives_identical": float(a == b),
        "resave_bitwise_identical": float(a == c),
        "reload_tensors_identical": float(tensors_equal),
        "reload_eval_identical": float(local == digests[0]),
        "cross_process_eval_identical": float(remote == digests[0]),
    }
    return _RunOutput(measured)


# ---------------------------------------------------------------------------
# supplementary specs


def _scale_study(spec, clock, context) -> _RunOutput:
    sizes = spec.opts.get("pretrain_sizes", (250, 1000, 2000))
    if max(sizes) > spec.sizes.pretrain:
        raise ConfigError("pretrain sizes exceed the reserved pretraining block")
    _, ft, test_raw = _corpus(spec, clock, pretrain_size=0)
    measured, rows = {}, []
    for n in sizes:
        with clock.stage(f"pretrain_{n}"):
            pre = prepare(generate_clips(spec.gen, n, 0, 0, spec.opts.get("workers", 1)), spec.model)
        _, _, report = _train_and_eval(spec, clock, pre, ft, test_raw)
        measured[f"auc_pretrain_{n}"] = report.auc
        rows.append((n, report.auc))
    warnings = []
    aucs = [a for _, a in rows]
    if any(b < a for a, b in zip(aucs, aucs[1:])):
        warnings.append("AUC is not monotone in the pretraining corpus size: " + ", ".join(f"{n}->{a:.4f}" for n, a in rows))
    return _RunOutput(measured, warnings, curves={"scale": [[n, a] for n, a in rows]})


def _random_scores(spec, clock, context) -> _RunOutput:
    rng = np.random.default_rng(spec.gen.seed)
    n = spec.sizes.test_real + spec.sizes.test_fake
    labels = np.r_[np.zeros(spec.sizes.test_real), np.ones(spec.sizes.test_fake)]
    return _RunOutput({"auc": roc_auc(rng.random(n), labels)})


RUNNERS: dict[str, Callable[[ExperimentSpec, _Clock, dict], _RunOutput]] = {
    "loss_oracles": _loss_oracles,
    "hand_values": _hand_values,
    "gradchecks": _gradchecks,
    "identities": _identities,
    "end_to_end": _end_to_end,
    "robustness": _robustness,
    "determinism": _determinism,
    "scale_study": _scale_study,
    "random_scores": _random_scores,
}

_TINY_SIZES = Sizes(pretrain=24, finetune_real=12, finetune_fake=12, test_real=8, test_fake=8)

ACCEPTANCE: dict[int, ExperimentSpec] = {
    1: ExperimentSpec(
        "c1_loss_oracles",
        "loss_oracles",
        1,
        expected=tuple(
            Expectation(f"{k}_max_abs_error", "le", 1e-12 if k == "auc" else 1e-10)
            for k in ("ec", "ec_dedup", "infonce", "correlation", "cgra", "ce", "auc")
        )
        + (Expectation("instances", "ge", 100),),
        max_seconds=60,
    ),
    2: ExperimentSpec(
        "c2_hand_values",
        "hand_values",
        2,
        expected=(
            Expectation("ec_orthonormal_n2", "close", 4 * math.log(1 + 2 / math.e), 1e-9),
            Expectation("cgra_negative_identity_k2", "close", 8.0, 1e-9),
        ),
        max_seconds=60,
    ),
    3: ExperimentSpec(
        "c3_gradchecks",
        "gradchecks",
        3,
        expected=(Expectation("max_rel_error", "lt", 1e-4), Expectation("kink_fraction", "le", 0.05)),
        max_seconds=300,
    ),
    4: ExperimentSpec(
        "c4_identities",
        "identities",
        4,
        expected=(
            Expectation("encoder_identity_error", "close", 0.0, 0.0),
            Expectation("cafm_identity_error", "close", 0.0, 0.0),
            Expectation("filter_idempotence_violations", "close", 0.0, 0.0),
            Expectation("cosine_scale_invariance_error", "le", 1e-9),
            Expectation("correlation_bound_excess", "le", 1e-12),
            Expectation("tanh_max_abs", "le", 1.0),
        ),
        max_seconds=60,
    ),
    5: ExperimentSpec(
        "c5_end_to_end",
        "end_to_end",
        5,
        expected=(Expectation("auc", "ge", 0.90), Expectation("pretrain_loss_ratio", "le", 0.5)),
        max_seconds=1800,
    ),
    6: ExperimentSpec(
        "c6_robustness",
        "robustness",
        6,
        expected=(
            Expectation("max_drop_l1", "lt", 0.10),
            Expectation("noise_drop_l5_minus_l1", "ge", 0.0),
            Expectation("blur_drop_l5_minus_l1", "ge", 0.0),
        ),
        max_seconds=600,
        options=(("base", "c5_end_to_end"),),
    ),
    7: ExperimentSpec(
        "c7_determinism",
        "determinism",
        7,
        gen=GenConfig(seed=11),
        model=micro_model_config(),
        train=TrainConfig(batch=4, epochs=1, probe_batches=2),
        sizes=_TINY_SIZES,
        expected=tuple(
            Expectation(k, "close", 1.0, 0.0)
            for k in (
                "rerun_reports_identical",
                "rerun_archives_identical",
                "resave_bitwise_identical",
                "reload_tensors_identical",
                "reload_eval_identical",
                "cross_process_eval_identical",
            )
        ),
        max_seconds=600,
    ),
}

SUPPLEMENTARY: dict[str, ExperimentSpec] = {
    "scale_study": ExperimentSpec("scale_study", "scale_study", max_seconds=3600, options=(("pretrain_sizes", (250, 1000, 2000)),)),
    "random_scores": ExperimentSpec(
        "random_scores", "random_scores", sizes=Sizes(test_real=1000, test_fake=1000), expected=(Expectation("auc", "close", 0.5, 0.05),)
    ),
}

ACCEPTANCE_BY_NAME: dict[str, ExperimentSpec] = {s.name: s for s in ACCEPTANCE.values()}
ALL_SPECS: dict[str, ExperimentSpec] = {**ACCEPTANCE_BY_NAME, **SUPPLEMENTARY}
