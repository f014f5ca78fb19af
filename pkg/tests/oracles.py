"""Re-export of the loop oracles shipped with the package."""

from phonoviseme.reference import auc, ce, cgra, correlation, cos, ec, infonce  # noqa: F401
