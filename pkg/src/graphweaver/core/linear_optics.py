"""Probabilistic linear-optics cascade: PBS parity gates with post-selection.

Each photon of the string meets the ancilla at a polarizing beam splitter
that keeps only the even-parity component of ``(photon, ancilla)``; a
Hadamard on the ancilla between two PBS carries the chain along.  Every
gate succeeds with probability 1/2 on the inputs it sees, so a string of
``n`` photons needs ``2^n`` attempts on average.  A failed gate spoils the
attempt and the next trial starts from fresh photons.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from graphweaver.core.entangler_sim import fidelity
from graphweaver.core.errors import ContractError, DomainError
from graphweaver.core.graph_model import make_path
from graphweaver.core.register import DEFAULT_CAPACITY, PureState, check_capacity, init_register

logger = logging.getLogger(__name__)

ANCILLA_LABEL = "~ancilla"


@dataclass(frozen=True)
class LinearTrialConfig:
    n: int
    trials: int
    seed: Optional[int] = 0
    state_checks: bool = True
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError(f"a photon string needs n >= 2, got {self.n}")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if self.state_checks:
            check_capacity(self.n + 1, self.capacity)


@dataclass(frozen=True)
class LinearReport:
    n: int
    trials: int
    successes: int
    gate_weights: Tuple[float, ...]
    state_fidelity_on_success: Optional[float] = None

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def expected_attempts(self) -> int:
        return 2**self.n

    @property
    def success_probability(self) -> float:
        return math.prod(self.gate_weights)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n": self.n,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "expected_attempts": self.expected_attempts,
        }
        if self.state_fidelity_on_success is not None:
            data["state_fidelity_on_success"] = self.state_fidelity_on_success
        return data


def pbs_parity_attempt(
    state: PureState,
    p: str,
    a: str,
    rng: Optional[np.random.Generator] = None,
    forced: Optional[bool] = None,
) -> Tuple[bool, PureState]:
    """Try one PBS parity gate on ``(p, a)``.

    Succeeds with the even-parity weight of ``(p, a)`` and projects onto that
    subspace; on failure the state is returned untouched and should be
    discarded.
    """
    weight = state.parity_weight(p, a, even=True)
    if forced is not None:
        success = bool(forced)
    elif rng is not None:
        success = bool(rng.random() < weight)
    else:
        raise ContractError("a parity attempt needs an rng or a forced result")
    if success:
        state.project_parity(p, a, even=True)
    return success, state


def _success_path(n: int, capacity: int) -> Tuple[PureState, List[float]]:
    """The string state when every gate fires, with each gate's success weight."""
    photons = [str(i) for i in range(n)]
    state = init_register([ANCILLA_LABEL, *photons], capacity)
    weights: List[float] = []
    for photon in photons:
        weights.append(state.parity_weight(photon, ANCILLA_LABEL, even=True))
        pbs_parity_attempt(state, photon, ANCILLA_LABEL, forced=True)
        state.apply_h(ANCILLA_LABEL)
    # outcome 1 differs only by Z on the last photon
    state.measure(ANCILLA_LABEL, forced=0)
    return state, weights


def simulate_string(cfg: LinearTrialConfig) -> LinearReport:
    """Monte-Carlo the success rate of building an ``n``-photon linear cluster."""
    if cfg.state_checks:
        state, weights = _success_path(cfg.n, cfg.capacity)
        state_fidelity: Optional[float] = fidelity(state, make_path(cfg.n))
    else:
        weights, state_fidelity = [0.5] * cfg.n, None

    rng = np.random.default_rng(cfg.seed)
    fired = rng.random((cfg.trials, cfg.n)) < np.asarray(weights)
    successes = int(np.count_nonzero(fired.all(axis=1)))
    report = LinearReport(cfg.n, cfg.trials, successes, tuple(weights), state_fidelity)
    logger.info(
        "linear string n=%d: %d/%d successes (expected 1/%d)",
        cfg.n,
        successes,
        cfg.trials,
        report.expected_attempts,
    )
    return report
