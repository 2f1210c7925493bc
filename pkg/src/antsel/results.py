from __future__ import annotations

from dataclasses import dataclass, field

from .channel import Configuration


@dataclass
class SolverResult:
    """Outcome of one selection run.

    ``config``/``objective`` are what the scheme reports.  Annealers also fill
    ``final_config``/``final_objective`` with the chain's last selected state.
    """

    config: Configuration
    objective: float
    evaluations: int
    feasible: bool = True
    final_config: Configuration | None = None
    final_objective: float | None = None
    extras: dict = field(default_factory=dict)
