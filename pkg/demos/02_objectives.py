"""The four training losses, checked against plain-Python loops.

The vectorised torch losses and the loop versions in ``phonoviseme.reference``
are written independently; they should agree to round-off. Two inputs have
closed forms worth remembering.

    python demos/02_objectives.py
"""

import math

import torch

from phonoviseme import reference as ref
from phonoviseme.objectives import cgra_loss, ec_loss, infonce_loss
from phonoviseme.pvam import alignment_diagnostics

torch.manual_seed(0)
P = torch.randn(6, 5, dtype=torch.float64)
V = P + 0.3 * torch.randn(6, 5, dtype=torch.float64)
rows = (P.tolist(), V.tolist())

print("loss       torch            loops            |diff|")
for name, fast, slow in [
    ("ec", ec_loss(P, V, tau=0.07), ref.ec(*rows, 0.07)),
    ("infonce", infonce_loss(P, V, tau=0.07), ref.infonce(*rows, 0.07)),
    ("cgra", cgra_loss(P, V, lam=5e-3), ref.cgra(*rows, 5e-3)),
]:
    print(f"{name:<8} {float(fast):16.10f} {slow:16.10f} {abs(float(fast) - slow):.1e}")

# Two orthonormal pairs at tau=1: every positive has cosine 1, every negative 0.
eye = torch.eye(2, dtype=torch.float64)
print(f"\nec on orthonormal pairs: {float(ec_loss(eye, eye, tau=1.0)):.6f}"
      f"  closed form 4 log(1 + 2/e) = {4 * math.log1p(2 / math.e):.6f}")

# Perfectly anti-correlated streams: every diagonal entry of C is -1.
print(f"cgra(I, -I): {float(cgra_loss(eye, -eye)):.6f}  closed form 2 * (1 - (-1))^2 = 8")

# Collapsed batches make the correlation target meaningless; the diagnostics flag it.
flat = torch.ones(4, 3, dtype=torch.float64)
diag = alignment_diagnostics(flat, 2 * flat)
print(f"\nrank of a collapsed batch: {diag.batch_rank} (degenerate={diag.degenerate})")
