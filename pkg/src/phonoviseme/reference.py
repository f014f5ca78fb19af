"""Loop-based reference implementations of the losses and the AUC.

Plain Python floats and ``math`` only, written from the definitions and
sharing no code with the tensor implementations. Used as oracles by the
test suite and by the acceptance runner.
"""

import math


def _dot(a, b):
    return math.fsum(x * y for x, y in zip(a, b))


def _norm(a):
    return math.sqrt(_dot(a, a))


def cos(a, b):
    return _dot(a, b) / (_norm(a) * _norm(b))


def ec(phon, vis, tau, denominator="literal", reduction="sum"):
    n = len(phon)
    total = []
    for i in range(n):
        for anchor, others in ((phon[i], vis), (vis[i], phon)):
            s = [math.exp(cos(anchor, others[k]) / tau) for k in range(n)]
            pos = s[i]
            denom = math.fsum(s)
            if denominator == "literal":
                denom += math.fsum(s[k] for k in range(n) if k != i)
            total.append(-math.log(pos / denom))
    loss = math.fsum(total)
    return loss / n if reduction == "mean" else loss


def infonce(a, b, tau):
    n = len(a)
    out = 0.0
    for x, y in ((a, b), (b, a)):
        terms = []
        for i in range(n):
            s = [math.exp(cos(x[i], y[k]) / tau) for k in range(n)]
            terms.append(-math.log(s[i] / math.fsum(s)))
        out += math.fsum(terms) / n
    return out


def correlation(A, B):
    b, k = len(A), len(A[0])
    col = lambda M, j: [M[r][j] for r in range(b)]
    return [[cos(col(A, i), col(B, j)) for j in range(k)] for i in range(k)]


def cgra(A, B, lam):
    C = correlation(A, B)
    k = len(C)
    on = math.fsum((1 - C[i][i]) ** 2 for i in range(k))
    off = math.fsum(C[i][j] ** 2 for i in range(k) for j in range(k) if i != j)
    return on + lam * off


def ce(probs, labels, eps=1e-7):
    terms = []
    for p, y in zip(probs, labels):
        p = min(max(p, eps), 1 - eps)
        terms.append(-(y * math.log(p) + (1 - y) * math.log(1 - p)))
    return math.fsum(terms) / len(terms)


def auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))
