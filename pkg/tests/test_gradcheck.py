import math

import numpy as np
import pytest
import torch

from conftest import tiny_model_config
from phonoviseme import objectives as obj
from phonoviseme.errors import GradCheckError
from phonoviseme.pipeline.gradcheck import check_module, grad_check, leaf
from phonoviseme.pipeline.model import Detector, collate, pretrain_losses
from phonoviseme.pipeline.training import prepare
from phonoviseme.pvam import PVAM, pvam_forward


def test_quadratic_exact():
    x = leaf([1.0, -2.0, 3.0])
    report = grad_check([("x", x)], lambda: (x**2).sum(), samples=None)
    assert report.max_rel_error < 1e-9


def test_wrong_gradient_detected():
    class Bad(torch.autograd.Function):
        @staticmethod
        def forward(ctx, x):
            ctx.save_for_backward(x)
            return (x**2).sum()

        @staticmethod
        def backward(ctx, g):
            (x,) = ctx.saved_tensors
            return g * 3 * x  # should be 2x

    x = leaf([0.5, 1.5])
    assert grad_check([("x", x)], lambda: Bad.apply(x), samples=None).max_rel_error > 0.1


def test_zero_gradient_reported_not_divided():
    x, unused = leaf([1.0, 2.0]), leaf([3.0])
    report = grad_check([("x", x), ("unused", unused)], lambda: (x**3).sum(), samples=None)
    assert report.zero_gradient == ["unused"]
    assert math.isfinite(report.max_rel_error) and report.max_rel_error < 1e-6
    assert report.worst.name == "x"


def test_kink_crossing_excluded_and_counted():
    x = leaf([1e-4, 2.0])
    report = grad_check([("x", x)], lambda: torch.relu(x).sum() + x.sum() ** 2, samples=None)
    assert report.n_kinks == 1 and report.max_rel_error < 1e-9
    strict = grad_check([("x", x)], lambda: torch.relu(x).sum() + x.sum() ** 2, samples=None, detect_kinks=False)
    assert strict.max_rel_error > 1e-2


def test_smooth_wrong_gradient_not_excused_as_kink():
    class Bad(torch.autograd.Function):
        @staticmethod
        def forward(ctx, x):
            ctx.save_for_backward(x)
            return torch.sin(x).sum()

        @staticmethod
        def backward(ctx, g):
            (x,) = ctx.saved_tensors
            return g * 1.01 * torch.cos(x)

    x = leaf([0.3, -1.2, 2.0])
    report = grad_check([("x", x)], lambda: Bad.apply(x), samples=None)
    assert report.n_kinks == 0 and report.max_rel_error > 5e-3


def test_check_module_restores_buffers():
    bn = torch.nn.BatchNorm1d(3).double().train()
    x = torch.randn(5, 3, dtype=torch.float64)
    before = [b.clone() for b in bn.buffers()]
    report = check_module(bn, lambda: (bn(x) ** 3).sum() + bn.running_mean.sum() ** 2, samples=None)
    assert report.max_rel_error < 1e-6
    assert all(torch.equal(a, b) for a, b in zip(before, bn.buffers()))


def test_requires_float64():
    x = torch.ones(2, requires_grad=True)
    with pytest.raises(GradCheckError, match="float64"):
        grad_check([("x", x)], lambda: x.sum())


def test_non_finite_loss():
    x = leaf([1.0])
    with pytest.raises(GradCheckError, match="not finite"):
        grad_check([("x", x)], lambda: torch.log(x - 1.0).sum())


@pytest.mark.parametrize(
    "name, fn",
    [
        ("ec", lambda a, b: obj.ec_loss(a, b, 0.5)),
        ("ec_dedup", lambda a, b: obj.ec_loss(a, b, 0.5, "dedup", "mean")),
        ("infonce", lambda a, b: obj.infonce_loss(a, b, 0.5)),
        ("cgra", lambda a, b: obj.cgra_loss(a, b, 5e-3)),
        ("ce", lambda a, b: obj.ce_loss(torch.sigmoid(a[:, 0]), torch.tensor([0.0, 1.0, 1.0, 0.0], dtype=torch.float64))),
    ],
)
def test_losses(name, fn):
    rng = np.random.default_rng(0)
    a, b = leaf(rng.normal(size=(4, 3))), leaf(rng.normal(size=(4, 3)))
    report = grad_check([("a", a), ("b", b)], lambda: fn(a, b), samples=None)
    assert report.max_rel_error < 1e-4, report.worst


def test_cafm_plus_cgra():
    torch.manual_seed(0)
    m = PVAM(4, 4, 3).double()
    Xp, Xv = leaf(torch.randn(3, 4, 3)), leaf(torch.randn(3, 4, 3))

    def loss():
        _, (P, V) = pvam_forward(Xp, Xv, m, need_alignment=True)
        return obj.cgra_loss(P, V, 5e-3)

    report = check_module(m, loss, samples=None)
    report.checks += grad_check([("X_p", Xp), ("X_v", Xv)], loss, samples=None).checks
    assert report.max_rel_error < 1e-4, report.worst


@pytest.mark.parametrize("fusion_source", ["common", "encoder"])
def test_pretrain_loss_micro_batch_converges(small_clips, fusion_source):
    """Composed pretraining loss on 2 clips: the finite-difference error is pure truncation.

    The fixed-step threshold is enforced in the acceptance suite; here
    the worst tensor's full-tensor error must drop ~4x when the step halves,
    which a wrong analytic gradient cannot do.
    """
    cfg = tiny_model_config(d=8, d_c=8, fusion_source=fusion_source)
    torch.manual_seed(0)
    model = Detector(cfg).double().train()
    batch = collate(prepare(small_clips[:2], cfg), dtype=torch.float64)
    assert batch.n_clips == 2

    def loss():
        return pretrain_losses(model(batch), cfg).pre

    report = check_module(model, loss, samples=4)
    live = [c for c in report.checks if not c.zero_gradient]
    assert len(live) > 0.8 * len(report.checks)
    assert report.n_kinks <= 0.05 * report.n_checked
    name = report.worst.name
    e1, e2 = (check_module(model, loss, step=h, samples=None, names=[name]).max_rel_error for h in (1e-3, 5e-4))
    assert 3.5 < e1 / e2 < 4.5, (name, e1, e2)
    assert e2 < 1e-3
