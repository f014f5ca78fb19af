"""Central finite-difference check of autograd gradients.

Analytic gradients come from autograd; the numerical side perturbs one
scalar at a time by +-step and re-evaluates the loss. Everything runs in
float64. Errors are reported per tensor as
``|g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|)`` over the
sampled entries, with norms taken over the sample. A tensor whose analytic
and numeric gradients both sit below the finite-difference round-off floor
is reported as zero-gradient instead of being divided by ~0.

Piecewise-linear activations make the loss non-differentiable on a measure
zero set, and a +-step probe can straddle such a kink. While probing, the
sign pattern of every relu/abs input is recorded; an entry that misses the
tolerance and whose probe flipped one of those signs is counted in ``kinks``
and left out of the error instead of silently passing or failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import torch

from torch.overrides import TorchFunctionMode

from ..errors import GradCheckError

ZERO_TOL = 1e-12
# relative round-off of one float64 loss evaluation, generously rounded up
_ROUNDOFF = 1e-13


@dataclass
class TensorCheck:
    name: str
    n_checked: int
    rel_error: float
    analytic_norm: float
    numeric_norm: float
    floor: float = ZERO_TOL
    kinks: int = 0

    @property
    def zero_gradient(self) -> bool:
        return max(self.analytic_norm, self.numeric_norm) <= self.floor


@dataclass
class GradCheckReport:
    checks: list[TensorCheck] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        errs = [c.rel_error for c in self.checks if not c.zero_gradient]
        return max(errs) if errs else 0.0

    @property
    def zero_gradient(self) -> list[str]:
        return [c.name for c in self.checks if c.zero_gradient]

    @property
    def n_kinks(self) -> int:
        return sum(c.kinks for c in self.checks)

    @property
    def n_checked(self) -> int:
        return sum(c.n_checked for c in self.checks)

    @property
    def worst(self) -> TensorCheck | None:
        live = [c for c in self.checks if not c.zero_gradient]
        return max(live, key=lambda c: c.rel_error) if live else None


def _finite(value: torch.Tensor, where: str) -> float:
    v = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
    if not math.isfinite(v):
        raise GradCheckError(f"loss is not finite ({v}) {where}")
    return v


_KINKED = {torch.relu, torch.abs, torch.nn.functional.relu, torch.Tensor.relu, torch.Tensor.abs}


class _SignRecorder(TorchFunctionMode):
    """Collects ``input > 0`` masks of kinked elementwise ops in call order."""

    def __init__(self):
        super().__init__()
        self.masks: list[torch.Tensor] = []

    def __torch_function__(self, func, types, args=(), kwargs=None):
        if func in _KINKED and args and isinstance(args[0], torch.Tensor):
            self.masks.append((args[0].detach() > 0).clone())
        return func(*args, **(kwargs or {}))


def _evaluate(loss_fn, where: str) -> tuple[float, list[torch.Tensor]]:
    with _SignRecorder() as rec:
        value = _finite(loss_fn(), where)
    return value, rec.masks


def _same_pattern(a: list[torch.Tensor], b: list[torch.Tensor]) -> bool:
    return len(a) == len(b) and all(x.shape == y.shape and bool(torch.equal(x, y)) for x, y in zip(a, b))


def grad_check(
    params: Iterable[tuple[str, torch.Tensor]],
    loss_fn: Callable[[], torch.Tensor],
    step: float = 1e-3,
    samples: int | None = 16,
    seed: int = 0,
    tol: float = 1e-4,
    detect_kinks: bool = True,
) -> GradCheckReport:
    """Compare autograd with central differences on sampled entries of ``params``.

    ``params`` are leaf tensors with ``requires_grad=True`` and dtype float64;
    ``loss_fn`` recomputes the scalar loss from their current values. With
    ``samples=None`` every entry is checked. Entries missing ``tol`` are
    probed for kink crossings when ``detect_kinks`` is set.
    """
    params = list(params)
    for name, p in params:
        if p.dtype != torch.float64:
            raise GradCheckError(f"{name} is {p.dtype}; gradient checks need float64")
    for _, p in params:
        p.grad = None
    with torch.no_grad():
        _, pattern = _evaluate(loss_fn, "at the base point")
    loss = loss_fn()
    base = _finite(loss, "at the base point")
    grads = torch.autograd.grad(loss, [p for _, p in params], allow_unused=True)
    rng = np.random.default_rng(seed)
    report = GradCheckReport()
    with torch.no_grad():
        for (name, p), g in zip(params, grads):
            g = torch.zeros_like(p) if g is None else g
            flat = p.view(-1)
            n = flat.numel()
            idx = np.arange(n) if samples is None or samples >= n else rng.choice(n, samples, replace=False)
            analytic = g.reshape(-1)[torch.as_tensor(idx)].numpy()
            numeric = np.empty(len(idx))
            crossed = np.zeros(len(idx), dtype=bool)
            for j, i in enumerate(idx):
                orig = flat[i].item()
                flat[i] = orig + step
                up, up_pat = _evaluate(loss_fn, f"after perturbing {name}[{i}] up")
                flat[i] = orig - step
                down, down_pat = _evaluate(loss_fn, f"after perturbing {name}[{i}] down")
                flat[i] = orig
                numeric[j] = (up - down) / (2 * step)
                crossed[j] = not (_same_pattern(pattern, up_pat) and _same_pattern(pattern, down_pat))
            keep = np.ones(len(idx), dtype=bool)
            if detect_kinks:
                scale = max(float(np.abs(analytic).max(initial=0.0)), float(np.abs(numeric).max(initial=0.0)), 1e-300)
                keep = ~(crossed & (np.abs(analytic - numeric) > tol * scale))
            kinks = int((~keep).sum())
            analytic, numeric = analytic[keep], numeric[keep]
            a_norm, n_norm = float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric))
            denom = max(a_norm, n_norm)
            floor = max(ZERO_TOL, _ROUNDOFF * max(1.0, abs(base)) / step * math.sqrt(len(idx)))
            rel = float(np.linalg.norm(analytic - numeric) / denom) if denom > floor else 0.0
            report.checks.append(TensorCheck(name, len(idx), rel, a_norm, n_norm, floor, kinks))
    return report


def check_module(
    module: torch.nn.Module,
    loss_fn: Callable[[], torch.Tensor],
    step: float = 1e-3,
    samples: int | None = 16,
    seed: int = 0,
    names: Iterable[str] | None = None,
    tol: float = 1e-4,
    detect_kinks: bool = True,
) -> GradCheckReport:
    """``grad_check`` over a module's parameters (optionally a named subset).

    Buffers (batch-norm running statistics and the like) are restored before
    every evaluation so the probed loss is a function of the parameters only.
    """
    wanted = None if names is None else set(names)
    params = [(n, p) for n, p in module.named_parameters() if p.requires_grad and (wanted is None or n in wanted)]
    buffers = [(b, b.detach().clone()) for b in module.buffers()]

    def pure_loss():
        with torch.no_grad():
            for b, saved in buffers:
                b.copy_(saved)
        return loss_fn()

    try:
        return grad_check(params, pure_loss, step, samples, seed, tol, detect_kinks)
    finally:
        with torch.no_grad():
            for b, saved in buffers:
                b.copy_(saved)


def leaf(x, requires_grad: bool = True) -> torch.Tensor:
    """A float64 leaf tensor copy of ``x``."""
    t = torch.as_tensor(np.asarray(x) if not isinstance(x, torch.Tensor) else x.detach(), dtype=torch.float64)
    return t.clone().requires_grad_(requires_grad)
