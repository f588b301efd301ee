"""Budget-constrained edge resource rental: COERR, KCG solvers and experiment harness."""

__version__ = "0.1.0"
