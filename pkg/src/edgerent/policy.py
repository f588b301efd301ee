from __future__ import annotations

from typing import Sequence

import numpy as np

Decision = tuple[float, ...]


class Policy:
    """Per-slot decide/observe cycle shared by COERR and the baselines.

    ``decide`` returns the rental decision and a phase tag; ``observe`` is
    called once per slot with the realized demand vector and the utility the
    decision earned under it.
    """

    name = "policy"

    def decide(self, t: int, contexts: np.ndarray) -> tuple[Decision, str]:
        raise NotImplementedError

    def observe(self, t: int, decision: Decision, demand: Sequence[float], utility: float) -> None:
        pass
