"""Executing weave schedules: amplitude-vector and symbolic backends.

The vector backend follows the cascade entangler photon by photon.  A
qubus entangler acting on ``(r, a)`` leaves the difference port in
``|0>`` for the even sectors ``r == a`` and in ``|+-i beta>`` for the odd
sectors; projecting the port onto ``|n>`` and feeding the result forward
leaves the spider ``a`` bound to ``r``::

    |0>_r |+>_a + |1>_r |->_a

Feed-forward tables (applied in order, then ``H(a)``):

=========  ==================  ==================
reading    link_step           attach_spider
=========  ==================  ==================
0          none                none
even       Z(p), X(a)          X(a)
odd        Z(p), X(a), Z(a)    X(a), Z(a)
=========  ==================  ==================

Detaching measures ``a`` in the computational basis and applies ``Z(r)``
on outcome 1.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from graphweaver.core.errors import ContractError, InvalidStateError, PlanningError
from graphweaver.core.graph_model import Edge, GraphSpec
from graphweaver.core.qubus_model import (
    QndReading,
    QubusParams,
    bs_50_50,
    coherent_projection,
    sample_odd_photons,
    sample_qnd,
    xpm_shift,
)
from graphweaver.core.register import (
    DEFAULT_CAPACITY,
    NORM_TOLERANCE,
    PureState,
    check_capacity,
    graph_state,
    init_register,
    overlap,
)
from graphweaver.core.weave_planner import (
    Attach,
    Detach,
    Link,
    PrepareBlock,
    WeaveSchedule,
    decompose_trails,
    validate_schedule,
)

logger = logging.getLogger(__name__)

BACKENDS = ("vector", "symbolic")
SPIDER_LABEL = "~spider"
_FORM_TOLERANCE = 1e-9

Correction = Tuple[str, str]


@dataclass(frozen=True)
class EntanglerConfig:
    """Physical parameters and simulation switches for the entangler."""

    params: QubusParams = field(default_factory=QubusParams)
    qnd_errors: bool = False
    debug_checks: bool = False
    capacity: int = DEFAULT_CAPACITY


DEFAULT_CONFIG = EntanglerConfig()


@dataclass(frozen=True)
class OutcomeRecord:
    """One entangler firing: photon number ``n``, what the detector read, and the fix-ups."""

    step: int
    n: int
    reading: int
    corrections: Tuple[Correction, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "n": self.n,
            "reading": self.reading,
            "corrections": [list(c) for c in self.corrections],
        }


@dataclass(frozen=True)
class DetachRecord:
    step: int
    bit: int
    corrections: Tuple[Correction, ...]

    def to_dict(self) -> Dict[str, Any]:
        corrections = [list(c) for c in self.corrections]
        return {"step": self.step, "bit": self.bit, "corrections": corrections}


# ---------------------------------------------------------------------------
# Qubus projection kernel
# ---------------------------------------------------------------------------


def _difference_port(params: QubusParams, k: int, c: int) -> complex:
    """Difference-port amplitude when the target bit is *k* and the spider bit is *c*."""
    upper = xpm_shift(params.alpha, params.theta * (k - c))
    lower = xpm_shift(params.alpha, params.theta * (c - k))
    diff, _ = bs_50_50(upper, lower)
    return diff


def _sector_factors(
    params: QubusParams, n: int, exact_parity: bool
) -> Dict[Tuple[int, int], complex]:
    if exact_parity and n == 0:
        return {(0, 0): 1.0, (1, 1): 1.0, (0, 1): 0.0, (1, 0): 0.0}
    # (-i)^n removes the common phase of the odd branch
    phase = (-1j) ** n
    return {
        (k, c): coherent_projection(_difference_port(params, k, c), n) * phase
        for k in (0, 1)
        for c in (0, 1)
    }


def _qubus_project(state: PureState, r: str, a: str, n: int, config: EntanglerConfig) -> None:
    """Project the qubus coupled to ``(r, a)`` onto ``|n>`` and renormalize."""
    factors = _sector_factors(config.params, n, exact_parity=not config.qnd_errors)
    for (k, c), factor in factors.items():
        state.sector({r: k, a: c})[...] *= factor
    if state.norm() <= NORM_TOLERANCE:
        raise ContractError(f"qubus outcome n={n} on ({r}, {a}) has zero probability")
    state.renormalize()


def _fire(
    state: PureState,
    r: str,
    a: str,
    forced: Optional[int],
    rng: Optional[np.random.Generator],
    config: EntanglerConfig,
) -> Tuple[int, QndReading]:
    """Run one qubus entangler on ``(r, a)``; returns the true photon number and the reading."""
    params = config.params
    if forced is not None:
        n = int(forced)
        if n < 0:
            raise ContractError(f"forced photon number must be >= 0, got {forced}")
    else:
        if rng is None:
            raise ContractError("sampling a qubus outcome needs an rng or a forced outcome")
        if rng.random() < state.parity_weight(r, a, even=True):
            n = 0
        else:
            n = sample_odd_photons(params, rng, allow_zero=config.qnd_errors)
    _qubus_project(state, r, a, n, config)
    if config.qnd_errors and rng is not None:
        reading = sample_qnd(n, params, rng)
    else:
        reading = QndReading(n)
    return n, reading


def _apply_corrections(state: PureState, corrections: Iterable[Correction]) -> None:
    for pauli, qubit in corrections:
        state.apply_pauli(pauli, qubit)


def link_corrections(reading: int, p: str, a: str) -> Tuple[Correction, ...]:
    if reading == 0:
        return ()
    if reading % 2 == 0:
        return (("Z", p), ("X", a))
    return (("Z", p), ("X", a), ("Z", a))


def attach_corrections(reading: int, a: str) -> Tuple[Correction, ...]:
    if reading == 0:
        return ()
    if reading % 2 == 0:
        return (("X", a),)
    return (("X", a), ("Z", a))


def _is_fresh(state: PureState, a: str) -> bool:
    return bool(np.allclose(state.sector({a: 0}), state.sector({a: 1}), atol=_FORM_TOLERANCE))


def is_spider_bound(state: PureState, a: str, q: str) -> bool:
    """True when the register has the form ``|0>_q |+>_a + |1>_q |->_a`` in ``(q, a)``."""
    return bool(
        np.allclose(state.sector({q: 0, a: 0}), state.sector({q: 0, a: 1}), atol=_FORM_TOLERANCE)
        and np.allclose(
            state.sector({q: 1, a: 0}), -state.sector({q: 1, a: 1}), atol=_FORM_TOLERANCE
        )
    )


def _require_qubits(state: PureState, *labels: str) -> None:
    for label in labels:
        if not state.has_qubit(label):
            raise ContractError(f"qubit {label!r} is not in the register")


# ---------------------------------------------------------------------------
# Entangler operations
# ---------------------------------------------------------------------------


def attach_spider(
    state: PureState,
    p: str,
    a: str,
    forced_outcome: Optional[int] = None,
    *,
    rng: Optional[np.random.Generator] = None,
    config: EntanglerConfig = DEFAULT_CONFIG,
    step: int = 0,
) -> Tuple[PureState, OutcomeRecord]:
    """Bind the fresh ``|+>`` photon *a* to *p*.

    *p* may carry arbitrary prior entanglement.  When *p* is itself a fresh
    photon the result is the two-photon graph state on ``(p, a)``.
    """
    _require_qubits(state, p, a)
    if p == a:
        raise ContractError(f"cannot attach {a!r} to itself")
    if not _is_fresh(state, a):
        raise ContractError(f"spider {a!r} is not a fresh |+> photon")
    n, reading = _fire(state, p, a, forced_outcome, rng, config)
    corrections = attach_corrections(reading.n, a)
    _apply_corrections(state, corrections)
    state.apply_h(a)
    logger.debug("attach %s -> %s: n=%d reading=%d %s", a, p, n, reading.n, corrections)
    return state, OutcomeRecord(step, n, reading.n, corrections)


def link_step(
    state: PureState,
    p: str,
    r: str,
    a: str,
    forced_outcome: Optional[int] = None,
    *,
    rng: Optional[np.random.Generator] = None,
    config: EntanglerConfig = DEFAULT_CONFIG,
    step: int = 0,
) -> Tuple[PureState, OutcomeRecord]:
    """Install ``CZ(p, r)`` through the spider *a* and move the spider onto *r*."""
    _require_qubits(state, p, r, a)
    if len({p, r, a}) != 3:
        raise ContractError(f"link needs three distinct qubits, got ({p}, {r}, {a})")
    if config.debug_checks and not is_spider_bound(state, a, p):
        raise ContractError(f"spider {a!r} is not bound to {p!r}")
    n, reading = _fire(state, r, a, forced_outcome, rng, config)
    corrections = link_corrections(reading.n, p, a)
    _apply_corrections(state, corrections)
    state.apply_h(a)
    if config.debug_checks and not config.qnd_errors and not is_spider_bound(state, a, r):
        raise ContractError(f"spider {a!r} failed to bind to {r!r}")
    logger.debug("link %s-%s: n=%d reading=%d %s", p, r, n, reading.n, corrections)
    return state, OutcomeRecord(step, n, reading.n, corrections)


def detach_spider(
    state: PureState,
    a: str,
    r_last: str,
    forced_bit: Optional[int] = None,
    *,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[PureState, int]:
    """Measure the spider out and undo its phase on *r_last*."""
    _require_qubits(state, a, r_last)
    bit = state.measure(a, rng=rng, forced=forced_bit)
    if bit == 1:
        state.apply_z(r_last)
    return state, bit


# ---------------------------------------------------------------------------
# Symbolic backend
# ---------------------------------------------------------------------------


class SpiderState(Enum):
    DETACHED = "detached"
    ATTACHED = "attached"


class SymbolicGraphState:
    """Edge-set bookkeeping of a woven graph state.

    Links toggle edges, so weaving a bond twice removes it again.
    """

    def __init__(self, vertices: Sequence[str]) -> None:
        self._vertices: Tuple[str, ...] = tuple(vertices)
        self._known = frozenset(self._vertices)
        self._edges: set[FrozenSet[str]] = set()
        self._state = SpiderState.DETACHED
        self._anchor: Optional[str] = None

    @property
    def anchor(self) -> Optional[str]:
        return self._anchor

    @property
    def state(self) -> SpiderState:
        return self._state

    def edge_set(self) -> FrozenSet[FrozenSet[str]]:
        return frozenset(self._edges)

    def to_graph(self) -> GraphSpec:
        index = {v: i for i, v in enumerate(self._vertices)}
        edges = sorted(
            (tuple(sorted(e, key=index.__getitem__)) for e in self._edges),
            key=lambda e: (index[e[0]], index[e[1]]),
        )
        return GraphSpec(self._vertices, tuple((u, v) for u, v in edges))

    def toggle(self, u: str, v: str) -> None:
        """Flip the presence of edge ``{u, v}``; a CZ applied twice cancels."""
        self._require_vertex(u)
        self._require_vertex(v)
        if u == v:
            raise ContractError(f"self-loop on {u!r}")
        self._edges ^= {frozenset((u, v))}

    def prepare(self, edges: Iterable[Edge]) -> None:
        """Toggle every edge of a prepared block."""
        for u, v in edges:
            self.toggle(u, v)

    def attach(self, p: str) -> None:
        """Anchor the spider at *p*; adds no edge."""
        self._require_state("attach", frozenset({SpiderState.DETACHED}))
        self._require_vertex(p)
        self._anchor = p
        self._state = SpiderState.ATTACHED

    def link(self, p: str, r: str) -> None:
        self._require_state("link", frozenset({SpiderState.ATTACHED}))
        if p != self._anchor:
            raise ContractError(f"link from {p} but the spider is at {self._anchor}")
        self.toggle(p, r)
        self._anchor = r

    def detach(self, r: str) -> None:
        self._require_state("detach", frozenset({SpiderState.ATTACHED}))
        if r != self._anchor:
            raise ContractError(f"detach at {r} but the spider is at {self._anchor}")
        self._anchor = None
        self._state = SpiderState.DETACHED

    def _require_vertex(self, v: str) -> None:
        if v not in self._known:
            raise ContractError(f"unknown vertex {v!r}")

    def _require_state(self, method: str, valid: FrozenSet[SpiderState]) -> None:
        """Raise ``InvalidStateError`` if the spider is not in one of *valid*."""
        if self._state not in valid:
            raise InvalidStateError(f"{method}() is not valid from {self._state.value} state")


# ---------------------------------------------------------------------------
# Schedule execution
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    backend: str
    seed: Optional[int]
    schedule: WeaveSchedule
    outcomes: List[OutcomeRecord] = field(default_factory=list)
    detaches: List[DetachRecord] = field(default_factory=list)
    state: Optional[PureState] = None
    symbolic: Optional[SymbolicGraphState] = None
    fidelity: Optional[float] = None
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        graph = self.schedule.graph
        data: Dict[str, Any] = {
            "backend": self.backend,
            "seed": self.seed,
            "graph_hash": self.schedule.graph_hash,
            "vertices": len(graph.vertices),
            "edges": len(graph.edges),
        }
        if self.fidelity is not None:
            data["fidelity"] = self.fidelity
        if self.symbolic is not None:
            final = self.symbolic.to_graph()
            data["final_edges"] = [[u, v] for u, v in final.edges]
            data["matches_target"] = final.edge_set() == graph.edge_set()
        data["outcomes"] = [o.to_dict() for o in self.outcomes]
        data["detaches"] = [d.to_dict() for d in self.detaches]
        if include_timing:
            data["wall_time_s"] = self.wall_time
        return data


def _spider_label(vertices: Sequence[str]) -> str:
    label = SPIDER_LABEL
    taken = set(vertices)
    while label in taken:
        label += "~"
    return label


class _VectorRun:
    def __init__(
        self,
        schedule: WeaveSchedule,
        rng: np.random.Generator,
        forced: Iterator[int],
        config: EntanglerConfig,
        report: RunReport,
    ) -> None:
        graph = schedule.graph
        check_capacity(len(graph.vertices) + 1, config.capacity)
        self.state = init_register(graph.vertices, config.capacity)
        self.spider = _spider_label(graph.vertices)
        self.rng = rng
        self.forced = forced
        self.config = config
        self.report = report
        self.touched: set[str] = set()

    def _kw(self, step: int) -> Dict[str, Any]:
        return {"rng": self.rng, "config": self.config, "step": step}

    def attach(self, step: int, p: str) -> None:
        self.state.add_qubit(self.spider)
        forced = next(self.forced, None)
        _, record = attach_spider(self.state, p, self.spider, forced, **self._kw(step))
        self.report.outcomes.append(record)
        self.touched.add(p)

    def link(self, step: int, p: str, r: str) -> None:
        forced = next(self.forced, None)
        _, record = link_step(self.state, p, r, self.spider, forced, **self._kw(step))
        self.report.outcomes.append(record)
        self.touched.add(r)

    def detach(self, step: int, r: str) -> None:
        _, bit = detach_spider(self.state, self.spider, r, rng=self.rng)
        corrections: Tuple[Correction, ...] = (("Z", r),) if bit else ()
        self.report.detaches.append(DetachRecord(step, bit, corrections))

    def prepare(self, step: int, edges: Tuple[Edge, ...]) -> None:
        if len(edges) == 1 and not self.touched.intersection(edges[0]):
            u, v = edges[0]
            _, record = attach_spider(self.state, u, v, next(self.forced, None), **self._kw(step))
            self.report.outcomes.append(record)
            self.touched.update(edges[0])
            return
        for trail in decompose_trails(GraphSpec.from_edges(edges)):
            self.attach(step, trail.vertices[0])
            for p, r in trail.edges():
                self.link(step, p, r)
            self.detach(step, trail.vertices[-1])


def _run_vector(
    schedule: WeaveSchedule,
    rng: np.random.Generator,
    forced: Iterator[int],
    config: EntanglerConfig,
    report: RunReport,
) -> None:
    run = _VectorRun(schedule, rng, forced, config, report)
    for i, step in enumerate(schedule.steps):
        if isinstance(step, PrepareBlock):
            run.prepare(i, step.edges)
        elif isinstance(step, Attach):
            run.attach(i, step.p)
        elif isinstance(step, Link):
            run.link(i, step.p, step.r)
        elif isinstance(step, Detach):
            run.detach(i, step.r)
    report.state = run.state
    report.fidelity = fidelity(run.state, schedule.graph)


def _run_symbolic(schedule: WeaveSchedule, report: RunReport) -> None:
    sym = SymbolicGraphState(schedule.graph.vertices)
    for step in schedule.steps:
        if isinstance(step, PrepareBlock):
            sym.prepare(step.edges)
        elif isinstance(step, Attach):
            sym.attach(step.p)
        elif isinstance(step, Link):
            sym.link(step.p, step.r)
        elif isinstance(step, Detach):
            sym.detach(step.r)
    report.symbolic = sym


def run_schedule(
    schedule: WeaveSchedule,
    backend: str = "vector",
    seed: Optional[int] = 0,
    forced_outcomes: Optional[Sequence[int]] = None,
    config: EntanglerConfig = DEFAULT_CONFIG,
) -> RunReport:
    """Execute *schedule*; the result depends only on the schedule, *seed* and forced outcomes."""
    if backend not in BACKENDS:
        raise ContractError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    violations = validate_schedule(schedule, schedule.graph)
    if violations:
        raise PlanningError(f"invalid schedule: {violations[0]} ({len(violations)} violations)")

    report = RunReport(backend=backend, seed=seed, schedule=schedule)
    started = time.perf_counter()
    if backend == "vector":
        rng = np.random.default_rng(seed)
        _run_vector(schedule, rng, iter(forced_outcomes or ()), config, report)
    else:
        _run_symbolic(schedule, report)
    report.wall_time = time.perf_counter() - started
    logger.info(
        "%s run of %d steps finished in %.3fs (fidelity=%s)",
        backend,
        len(schedule.steps),
        report.wall_time,
        report.fidelity,
    )
    return report


def fidelity(state: PureState, g: GraphSpec) -> float:
    """``|<state|G>|^2`` against the graph state of *g*."""
    if sorted(state.labels) != sorted(g.vertices):
        raise ContractError(
            f"register qubits {sorted(state.labels)} do not match the graph vertices"
        )
    target = graph_state(g.vertices, g.edges, max(state.capacity, len(g.vertices)))
    return min(1.0, overlap(target, state) ** 2)

