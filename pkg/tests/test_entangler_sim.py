"""Tests for the cascade entangler, the symbolic backend and schedule execution."""

from __future__ import annotations

import itertools
import random
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np
import pytest

from graphweaver.core.entangler_sim import (
    EntanglerConfig,
    SpiderState,
    SymbolicGraphState,
    attach_spider,
    detach_spider,
    fidelity,
    is_spider_bound,
    link_step,
    run_schedule,
)
from graphweaver.core.errors import CapacityError, ContractError, InvalidStateError, PlanningError
from graphweaver.core.graph_model import Cubic, GraphSpec, Square, make_cycle, make_lattice
from graphweaver.core.qubus_model import QubusParams
from graphweaver.core.register import PureState, graph_state, init_register, overlap
from graphweaver.core.weave_planner import (
    Attach,
    Detach,
    Link,
    PlannerOptions,
    PrepareBlock,
    WeaveSchedule,
    count_operations,
    plan_schedule,
    row_chain_blocks,
)

A = "~a"
TOL = 1e-10


def _random_state(labels: Sequence[str], seed: int) -> PureState:
    rng = np.random.default_rng(seed)
    n = 2 ** len(labels)
    return PureState.from_amplitudes(labels, rng.normal(size=n) + 1j * rng.normal(size=n))


def _abc() -> GraphSpec:
    return GraphSpec.from_edges([("a", "b"), ("b", "c")])


def _bound(state: PureState, p: str) -> PureState:
    """Append a spider and bind it to *p*."""
    state.add_qubit(A)
    attach_spider(state, p, A, 0)
    return state


def _with_cz(state: PureState, edges: Sequence[Tuple[str, str]]) -> PureState:
    expected = state.copy()
    for u, v in edges:
        expected.apply_cz(u, v)
    return expected


def _random_trail(rng: random.Random, labels: Sequence[str], max_len: int) -> List[str]:
    """A random walk that never reuses an edge; vertices may repeat."""
    walk = [rng.choice(labels)]
    used: set[FrozenSet[str]] = set()
    for _ in range(rng.randint(1, max_len)):
        options = [v for v in labels if v != walk[-1] and frozenset((walk[-1], v)) not in used]
        if not options:
            break
        nxt = rng.choice(options)
        used.add(frozenset((walk[-1], nxt)))
        walk.append(nxt)
    return walk


# ---------------------------------------------------------------------------
# attach_spider
# ---------------------------------------------------------------------------


class TestAttachSpider:
    """Attaching binds a fresh spider to any photon."""

    def test_fresh_pair_gives_bell_graph_state(self) -> None:
        state = init_register(["p", A])
        _, record = attach_spider(state, "p", A, 0)
        assert overlap(state, graph_state(["p", A], [("p", A)])) == pytest.approx(1.0, abs=TOL)
        assert record.n == 0
        assert record.corrections == ()

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_outcome_independent(self, n: int) -> None:
        state = init_register(["p", A])
        _, record = attach_spider(state, "p", A, n)
        assert overlap(state, graph_state(["p", A], [("p", A)])) == pytest.approx(1.0, abs=TOL)
        assert ("X", A) in record.corrections
        assert (("Z", A) in record.corrections) == (n % 2 == 1)

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_entangled_anchor(self, n: int) -> None:
        state = _random_state(["p", "b", "c"], seed=n)
        expected = state.copy().add_qubit(A).apply_cz("p", A)
        state.add_qubit(A)
        attach_spider(state, "p", A, n)
        assert overlap(state, expected) == pytest.approx(1.0, abs=TOL)
        assert is_spider_bound(state, A, "p")

    def test_entangled_spider_rejected(self) -> None:
        state = init_register(["p", A]).apply_cz("p", A)
        with pytest.raises(ContractError, match="fresh"):
            attach_spider(state, "p", A, 0)

    def test_missing_spider_rejected(self) -> None:
        with pytest.raises(ContractError, match="not in the register"):
            attach_spider(init_register(["p"]), "p", A, 0)

    def test_sampling_needs_rng(self) -> None:
        with pytest.raises(ContractError, match="rng"):
            attach_spider(init_register(["p", A]), "p", A)


# ---------------------------------------------------------------------------
# link_step
# ---------------------------------------------------------------------------


class TestLinkStep:
    """A link installs CZ(p, r) and moves the spider onto r."""

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_bell_input(self, n: int) -> None:
        state = _bound(init_register(["p", "r"]), "p")
        link_step(state, "p", "r", A, n)
        expected = init_register(["p", "r"]).apply_cz("p", "r").add_qubit(A).apply_cz("r", A)
        assert overlap(state, expected) == pytest.approx(1.0, abs=TOL)

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_general_input(self, n: int) -> None:
        original = _random_state(["p", "r", "x", "y"], seed=10 + n)
        state = _bound(original.copy(), "p")
        link_step(state, "p", "r", A, n)
        expected = original.copy().apply_cz("p", "r").add_qubit(A).apply_cz("r", A)
        assert overlap(state, expected) == pytest.approx(1.0, abs=TOL)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)

    def test_correction_table(self) -> None:
        results = {}
        for n in range(4):
            state = _bound(init_register(["p", "r"]), "p")
            _, record = link_step(state, "p", "r", A, n)
            results[n] = record.corrections
        assert results[0] == ()
        assert results[2] == (("Z", "p"), ("X", A))
        assert results[1] == results[3] == (("Z", "p"), ("X", A), ("Z", A))

    def test_revisited_target(self) -> None:
        """The target may already be woven into the state."""
        original = _random_state(["p", "r", "s"], seed=42)
        state = _bound(original.copy(), "r")
        link_step(state, "r", "s", A, 1)
        link_step(state, "s", "p", A, 2)
        link_step(state, "p", "r", A, 3)
        expected = _with_cz(original, [("r", "s"), ("s", "p"), ("p", "r")])
        expected.add_qubit(A).apply_cz("r", A)
        assert overlap(state, expected) == pytest.approx(1.0, abs=TOL)

    def test_debug_check_rejects_unbound_spider(self) -> None:
        state = init_register(["p", "r", A])
        with pytest.raises(ContractError, match="not bound"):
            link_step(state, "p", "r", A, 0, config=EntanglerConfig(debug_checks=True))

    def test_debug_check_accepts_bound_spider(self) -> None:
        state = _bound(init_register(["p", "r"]), "p")
        link_step(state, "p", "r", A, 2, config=EntanglerConfig(debug_checks=True))
        assert is_spider_bound(state, A, "r")

    def test_distinct_qubits_required(self) -> None:
        state = _bound(init_register(["p", "r"]), "p")
        with pytest.raises(ContractError, match="distinct"):
            link_step(state, "p", "p", A, 0)

    def test_sampled_zero_frequency_is_even_weight(self) -> None:
        rng = np.random.default_rng(2024)
        trials = 10_000
        zeros = 0
        for _ in range(trials):
            state = _bound(init_register(["p", "r"]), "p")
            _, record = link_step(state, "p", "r", A, rng=rng)
            zeros += record.n == 0
        sigma = (0.25 / trials) ** 0.5
        assert abs(zeros / trials - 0.5) < 5 * sigma

    def test_sampled_outcomes_still_give_cz(self) -> None:
        rng = np.random.default_rng(5)
        for _ in range(50):
            original = _random_state(["p", "r", "x"], seed=int(rng.integers(1_000)))
            state = _bound(original.copy(), "p")
            link_step(state, "p", "r", A, rng=rng)
            expected = original.copy().apply_cz("p", "r").add_qubit(A).apply_cz("r", A)
            assert overlap(state, expected) == pytest.approx(1.0, abs=TOL)


class TestQndErrors:
    """Realistic detector readings drive the feed-forward."""

    def test_missed_click_skips_corrections(self) -> None:
        params = QubusParams(eta=0.0)
        config = EntanglerConfig(params=params, qnd_errors=True)
        state = init_register(["p", A])
        _, record = attach_spider(state, "p", A, 1, rng=np.random.default_rng(0), config=config)
        assert record.n == 1
        assert record.reading == 0
        assert record.corrections == ()
        assert overlap(state, graph_state(["p", A], [("p", A)])) < 0.5

    def test_good_detector_keeps_fidelity(self) -> None:
        config = EntanglerConfig(qnd_errors=True)
        report = run_schedule(plan_schedule(make_cycle(5)), "vector", seed=3, config=config)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9


# ---------------------------------------------------------------------------
# detach_spider and composition
# ---------------------------------------------------------------------------


class TestDetachSpider:
    """Measuring the spider out leaves pure CZ products behind."""

    @pytest.mark.parametrize("bit", [0, 1])
    def test_attach_then_detach_restores(self, bit: int) -> None:
        original = _random_state(["p", "q"], seed=bit)
        state = _bound(original.copy(), "p")
        _, measured = detach_spider(state, A, "p", bit)
        assert measured == bit
        assert state.labels == ("p", "q")
        assert overlap(state, original) == pytest.approx(1.0, abs=TOL)

    @pytest.mark.parametrize(("n", "bit"), list(itertools.product(range(4), (0, 1))))
    def test_attach_link_detach_is_cz(self, n: int, bit: int) -> None:
        original = _random_state(["p", "r", "s"], seed=7 * n + bit)
        state = _bound(original.copy(), "p")
        link_step(state, "p", "r", A, n)
        detach_spider(state, A, "r", bit)
        expected = original.copy().apply_cz("p", "r")
        assert overlap(state, expected) == pytest.approx(1.0, abs=1e-9)

    def test_missing_spider_rejected(self) -> None:
        with pytest.raises(ContractError):
            detach_spider(init_register(["p", "r"]), A, "r", 0)

    def test_random_trails_compose_to_cz_products(self) -> None:
        rng = random.Random(99)
        for case in range(60):
            labels = [f"q{i}" for i in range(rng.randint(2, 9))]
            trail = _random_trail(rng, labels, max_len=6)
            if len(trail) < 2:
                continue
            original = _random_state(labels, seed=case)
            state = original.copy().add_qubit(A)
            attach_spider(state, trail[0], A, rng.randint(0, 3))
            for p, r in zip(trail, trail[1:]):
                link_step(state, p, r, A, rng.randint(0, 3))
            detach_spider(state, A, trail[-1], rng.randint(0, 1))
            expected = _with_cz(original, list(zip(trail, trail[1:])))
            assert overlap(state, expected) == pytest.approx(1.0, abs=1e-9), trail


# ---------------------------------------------------------------------------
# Symbolic backend
# ---------------------------------------------------------------------------


class TestSymbolicGraphState:
    """Edge-set bookkeeping with the spider state machine."""

    def test_weave_path(self) -> None:
        sym = SymbolicGraphState(["a", "b", "c"])
        sym.attach("a")
        sym.link("a", "b")
        sym.link("b", "c")
        assert sym.anchor == "c"
        sym.detach("c")
        assert sym.state == SpiderState.DETACHED
        assert sym.edge_set() == {frozenset(("a", "b")), frozenset(("b", "c"))}

    def test_retracing_removes_edge(self) -> None:
        sym = SymbolicGraphState(["a", "b"])
        sym.attach("a")
        sym.link("a", "b")
        sym.link("b", "a")
        assert sym.edge_set() == frozenset()

    def test_attach_twice_invalid(self) -> None:
        sym = SymbolicGraphState(["a", "b"])
        sym.attach("a")
        with pytest.raises(InvalidStateError, match="attach\\(\\) is not valid from attached"):
            sym.attach("b")

    def test_link_while_detached_invalid(self) -> None:
        with pytest.raises(InvalidStateError, match="detached state"):
            SymbolicGraphState(["a", "b"]).link("a", "b")

    def test_link_from_wrong_anchor(self) -> None:
        sym = SymbolicGraphState(["a", "b", "c"])
        sym.attach("a")
        with pytest.raises(ContractError, match="spider is at a"):
            sym.link("b", "c")

    def test_unknown_vertex(self) -> None:
        with pytest.raises(ContractError, match="unknown vertex"):
            SymbolicGraphState(["a"]).attach("z")

    def test_to_graph_is_canonical(self) -> None:
        sym = SymbolicGraphState(["a", "b", "c"])
        sym.prepare([("c", "b"), ("b", "a")])
        assert sym.to_graph() == _abc()


# ---------------------------------------------------------------------------
# run_schedule and fidelity
# ---------------------------------------------------------------------------


class TestRunSchedule:
    """Both backends realize the target graph state."""

    def test_path_vector(self) -> None:
        report = run_schedule(plan_schedule(_abc()), "vector", seed=1)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9
        assert len(report.outcomes) == 3
        assert len(report.detaches) == 1

    def test_path_symbolic(self) -> None:
        report = run_schedule(plan_schedule(_abc()), "symbolic")
        assert report.symbolic is not None
        assert report.symbolic.edge_set() == _abc().edge_set()
        assert report.fidelity is None

    def test_cubic_3_symbolic(self) -> None:
        g = make_lattice(Cubic(3))
        report = run_schedule(plan_schedule(g), "symbolic")
        assert report.symbolic is not None
        assert report.symbolic.to_graph() == g

    def test_cubic_3_vector_exceeds_capacity(self) -> None:
        with pytest.raises(CapacityError, match="22"):
            run_schedule(plan_schedule(make_lattice(Cubic(3))), "vector")

    def test_forced_outcomes_recorded_in_order(self) -> None:
        report = run_schedule(plan_schedule(_abc()), "vector", forced_outcomes=[2, 0, 3])
        assert [o.n for o in report.outcomes] == [2, 0, 3]
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    def test_prepared_blocks(self) -> None:
        g = make_lattice(Square(2, 3))
        schedule = plan_schedule(g, PlannerOptions(row_chain_blocks(2, 3)))
        report = run_schedule(schedule, "vector", seed=4)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    def test_single_edge_block_is_bell_pair(self) -> None:
        schedule = plan_schedule(_abc(), PlannerOptions(blocks=(("a", "b"),)))
        report = run_schedule(schedule, "vector", seed=0)
        assert report.outcomes[0].step == 0
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    @pytest.mark.parametrize(
        "schedule",
        [
            plan_schedule(_abc()),
            plan_schedule(_abc(), PlannerOptions(blocks=(("a", "b"),))),
            plan_schedule(make_lattice(Square(2, 3)), PlannerOptions(row_chain_blocks(2, 3))),
            plan_schedule(make_cycle(4)),
            WeaveSchedule(
                _abc(),
                (Attach("a"), Link("a", "b"), Detach("b"), PrepareBlock((("b", "c"),))),
            ),
        ],
        ids=["path", "bell", "row-blocks", "cycle", "late-block"],
    )
    def test_counted_operations_match_firings(self, schedule: WeaveSchedule) -> None:
        report = run_schedule(schedule, "vector", seed=5)
        assert len(report.outcomes) == count_operations(schedule)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    def test_debug_checks_pass_on_planned_schedule(self) -> None:
        config = EntanglerConfig(debug_checks=True)
        report = run_schedule(plan_schedule(make_cycle(4)), "vector", seed=8, config=config)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    def test_spider_label_avoids_vertex_ids(self) -> None:
        g = GraphSpec.from_edges([("~spider", "b")])
        report = run_schedule(plan_schedule(g), "vector", seed=0)
        assert report.fidelity is not None
        assert report.fidelity >= 1 - 1e-9

    def test_same_seed_same_report(self) -> None:
        schedule = plan_schedule(make_lattice(Square(3, 3)))
        first = run_schedule(schedule, "vector", seed=11).to_dict()
        second = run_schedule(schedule, "vector", seed=11).to_dict()
        assert first == second
        assert "wall_time_s" not in first

    def test_timing_on_request(self) -> None:
        report = run_schedule(plan_schedule(_abc()), "symbolic")
        data = report.to_dict(include_timing=True)
        assert data["wall_time_s"] >= 0
        assert data["matches_target"] is True

    def test_invalid_schedule_rejected(self) -> None:
        schedule = WeaveSchedule(_abc(), (Attach("a"), Link("a", "b")))
        with pytest.raises(PlanningError, match="invalid schedule"):
            run_schedule(schedule, "symbolic")

    def test_unknown_backend(self) -> None:
        with pytest.raises(ContractError, match="backend"):
            run_schedule(plan_schedule(_abc()), "tensor")


class TestFidelity:
    """Overlap squared with the CZ-product oracle."""

    def test_oracle_with_itself(self) -> None:
        g = make_cycle(4)
        assert fidelity(graph_state(g.vertices, g.edges), g) == pytest.approx(1.0)

    def test_plus_state_vs_four_cycle(self) -> None:
        g = make_cycle(4)
        assert fidelity(init_register(g.vertices), g) == pytest.approx(0.25)

    def test_label_mismatch(self) -> None:
        with pytest.raises(ContractError, match="do not match"):
            fidelity(init_register(["x", "y"]), _abc())
