import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from phonoviseme.errors import DomainError, ShapeError
from phonoviseme.pipeline.gradcheck import check_module, grad_check, leaf
from phonoviseme.pvam import PVAM, CafmParams, alignment_diagnostics, cafm, pvam_forward


def _oracle(Xp, Xv, P):
    """Entry-wise loops over the fusion definitions."""
    g = lambda t: t.detach().double().numpy()
    Xp, Xv = g(Xp), g(Xv)
    dp, S = Xp.shape
    dv = Xv.shape[0]
    J = np.concatenate([Xp, Xv])
    scale = math.sqrt(dp + dv)

    def joint(X, W):
        M = np.zeros((S, S))
        for a in range(S):
            for b in range(S):
                M[a, b] = math.tanh(sum(X[i, a] * W[i, j] * J[j, b] for i in range(X.shape[0]) for j in range(dp + dv)) / scale)
        return M

    Mp, Mv = joint(Xp, g(P.W_jp)), joint(Xv, g(P.W_jv))
    Hp = np.maximum(g(P.W_p) @ Xp + g(P.W_mp) @ Mp.T, 0)
    Hv = np.maximum(g(P.W_v) @ Xv + g(P.W_mv) @ Mv.T, 0)
    return g(P.W_hp) @ Hp + Xp, g(P.W_hv) @ Hv + Xv, Mp, Mv


@pytest.mark.parametrize("dp, dv, S, k", [(3, 3, 4, None), (4, 2, 3, 5), (2, 5, 6, 3)])
def test_cafm_matches_oracle(dp, dv, S, k):
    torch.manual_seed(dp * 7 + S)
    P = CafmParams(dp, dv, S, k).double()
    Xp, Xv = torch.randn(dp, S, dtype=torch.float64), torch.randn(dv, S, dtype=torch.float64)
    out = cafm(Xp, Xv, P)
    ap, av, Mp, Mv = _oracle(Xp, Xv, P)
    for got, want in ((out.att_p, ap), (out.att_v, av), (out.M_p, Mp), (out.M_v, Mv)):
        np.testing.assert_allclose(got.detach().numpy(), want, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(out.x_att.detach().numpy(), np.concatenate([ap, av]), rtol=1e-10, atol=1e-10)


def test_zero_output_weights_give_identity():
    P = CafmParams(4, 4, 5)
    with torch.no_grad():
        P.W_hp.zero_()
        P.W_hv.zero_()
    Xp, Xv = torch.randn(3, 4, 5), torch.randn(3, 4, 5)
    out = cafm(Xp, Xv, P)
    torch.testing.assert_close(out.att_p, Xp, rtol=0, atol=0)
    torch.testing.assert_close(out.att_v, Xv, rtol=0, atol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 6), st.floats(0.1, 100), st.integers(0, 10**6))
def test_joint_matrices_bounded(dp, dv, S, scale, seed):
    torch.manual_seed(seed)
    P = CafmParams(dp, dv, S).double()
    out = cafm(scale * torch.randn(2, dp, S, dtype=torch.float64), scale * torch.randn(2, dv, S, dtype=torch.float64), P)
    assert bool((out.M_p.abs() <= 1).all()) and bool((out.M_v.abs() <= 1).all())
    assert out.M_p.shape == (2, S, S)


def test_shape_errors():
    P = CafmParams(4, 3, 5)
    with pytest.raises(ShapeError):
        cafm(torch.randn(4, 5), torch.randn(3, 6), P)
    with pytest.raises(ShapeError):
        cafm(torch.randn(4, 6), torch.randn(3, 6), P)
    with pytest.raises(ShapeError):
        cafm(torch.randn(3, 5), torch.randn(3, 5), P)


def test_pvam_alignment_widths():
    m = PVAM(6, 4, 3)
    fused, (P, V) = pvam_forward(torch.randn(5, 6, 3), torch.randn(5, 4, 3), m)
    assert P.shape == (5, 4) and V.shape == (5, 4)
    assert m.adapt_v is None and m.adapt_p is not None
    assert fused.x_att.shape == (5, 10, 3)


def test_pvam_needs_batch_for_alignment():
    m = PVAM(4, 4, 3)
    with pytest.raises(DomainError):
        pvam_forward(torch.randn(1, 4, 3), torch.randn(1, 4, 3), m, need_alignment=True)
    fused, _ = pvam_forward(torch.randn(4, 3), torch.randn(4, 3), m)
    assert fused.x_att.shape == (1, 8, 3)


def test_alignment_diagnostics_flags_rank_one():
    P = torch.ones(4, 3)
    diag = alignment_diagnostics(P, P)
    assert diag.degenerate and diag.batch_rank == 1
    diag = alignment_diagnostics(torch.randn(4, 3), torch.randn(4, 3))
    assert not diag.degenerate
    assert bool((diag.correlation.abs() <= 1 + 1e-6).all())


def test_gradcheck_cafm():
    torch.manual_seed(0)
    P = CafmParams(3, 4, 4).double()
    Xp, Xv = leaf(torch.randn(2, 3, 4)), leaf(torch.randn(2, 4, 4))
    w = torch.randn(2, 7, 4, dtype=torch.float64)
    fn = lambda: (cafm(Xp, Xv, P).x_att * w).sum()
    report = check_module(P, fn, samples=None)
    report.checks += grad_check([("X_p", Xp), ("X_v", Xv)], fn, samples=None).checks
    assert report.max_rel_error < 1e-4, report.worst
