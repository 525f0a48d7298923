"""Amplitude-vector register of labelled polarization qubits.

Basis ``|0> = |H>``, ``|1> = |V>``.  Bit ``i`` of an amplitude index is the
value of the qubit with label ``labels[i]`` (label 0 is the least
significant bit), so appending a qubit doubles the vector without touching
existing indices.  Gate kernels work on an ``(2,) * m`` tensor view where
label ``i`` lives on axis ``m - 1 - i``.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from graphweaver.core.errors import CapacityError, ContractError

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 22
MAX_CAPACITY = 30
NORM_TOLERANCE = 1e-12

_SQRT1_2 = 1.0 / math.sqrt(2.0)


def check_capacity(num_qubits: int, capacity: int) -> None:
    """Raise :class:`CapacityError` when *num_qubits* exceeds *capacity*."""
    if not 1 <= capacity <= MAX_CAPACITY:
        raise CapacityError(f"capacity must lie in [1, {MAX_CAPACITY}], got {capacity}")
    if num_qubits > capacity:
        logger.debug("refusing a %d-qubit register at capacity %d", num_qubits, capacity)
        raise CapacityError(
            f"{num_qubits} qubits exceed the vector-backend capacity of {capacity}; "
            "use the symbolic backend or raise the capacity"
        )


class PureState:
    """A normalized pure state owned exclusively by one simulation.

    Gate methods mutate the state in place and return ``self`` so that calls
    can be chained.
    """

    def __init__(
        self,
        labels: Sequence[str],
        amplitudes: np.ndarray,
        capacity: int = DEFAULT_CAPACITY,
    ) -> None:
        labels = tuple(labels)
        if not labels:
            raise ContractError("a register needs at least one qubit")
        if len(set(labels)) != len(labels):
            raise ContractError(f"qubit labels must be unique, got {list(labels)}")
        check_capacity(len(labels), capacity)
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2 ** len(labels):
            raise ContractError(
                f"{len(labels)} qubits need {2 ** len(labels)} amplitudes, got {amps.size}"
            )
        self._labels: Tuple[str, ...] = labels
        self._amps = amps
        self._capacity = capacity
        self._positions: Dict[str, int] = {label: i for i, label in enumerate(labels)}

    # -- construction --------------------------------------------------------

    @classmethod
    def from_amplitudes(
        cls, labels: Sequence[str], amplitudes: Iterable[complex], capacity: int = DEFAULT_CAPACITY
    ) -> PureState:
        """Build a state from unnormalized amplitudes."""
        amps = np.asarray(list(amplitudes), dtype=np.complex128)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ContractError("cannot normalize the zero vector")
        return cls(labels, amps / norm, capacity)

    def copy(self) -> PureState:
        """Independent copy sharing no amplitude storage."""
        return PureState(self._labels, self._amps.copy(), self._capacity)

    # -- inspection ----------------------------------------------------------

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def amplitudes(self) -> np.ndarray:
        view = self._amps.view()
        view.flags.writeable = False
        return view

    @property
    def num_qubits(self) -> int:
        return len(self._labels)

    @property
    def capacity(self) -> int:
        return self._capacity

    def has_qubit(self, label: str) -> bool:
        return label in self._positions

    def norm(self) -> float:
        """Euclidean norm of the amplitude vector."""
        return float(np.linalg.norm(self._amps))

    def _axis(self, label: str) -> int:
        try:
            return self.num_qubits - 1 - self._positions[label]
        except KeyError:
            raise ContractError(f"unknown qubit {label!r}") from None

    def _tensor(self) -> np.ndarray:
        return self._amps.reshape((2,) * self.num_qubits)

    def _selector(self, assignment: Mapping[str, int]) -> Tuple[object, ...]:
        index: list = [slice(None)] * self.num_qubits
        for label, bit in assignment.items():
            index[self._axis(label)] = slice(bit, bit + 1)
        return tuple(index)

    def sector(self, assignment: Mapping[str, int]) -> np.ndarray:
        """Writable view of the amplitudes with the given qubits fixed to the given bits.

        Fixed axes keep length 1, so the view stays an array even when every
        qubit is fixed.
        """
        return self._tensor()[self._selector(assignment)]

    def probability(self, label: str, bit: int) -> float:
        return float(np.sum(np.abs(self.sector({label: bit})) ** 2))

    # -- single-qubit gates --------------------------------------------------

    def apply_h(self, label: str) -> PureState:
        t = self._tensor()
        i0, i1 = self._selector({label: 0}), self._selector({label: 1})
        a0, a1 = t[i0].copy(), t[i1].copy()
        t[i0] = (a0 + a1) * _SQRT1_2
        t[i1] = (a0 - a1) * _SQRT1_2
        return self

    def apply_x(self, label: str) -> PureState:
        t = self._tensor()
        i0, i1 = self._selector({label: 0}), self._selector({label: 1})
        a0 = t[i0].copy()
        t[i0] = t[i1]
        t[i1] = a0
        return self

    def apply_z(self, label: str) -> PureState:
        self.sector({label: 1})[...] *= -1
        return self

    def apply_pauli(self, pauli: str, label: str) -> PureState:
        if pauli == "X":
            return self.apply_x(label)
        if pauli == "Z":
            return self.apply_z(label)
        raise ContractError(f"unsupported correction {pauli!r}")

    # -- two-qubit gates -----------------------------------------------------

    def apply_cz(self, q1: str, q2: str) -> PureState:
        """Flip the sign of the ``|11>`` component of ``(q1, q2)``."""
        if q1 == q2:
            raise ContractError(f"CZ needs two distinct qubits, got {q1!r} twice")
        self.sector({q1: 1, q2: 1})[...] *= -1
        return self

    def parity_weight(self, q1: str, q2: str, even: bool = True) -> float:
        """Squared norm of the even (or odd) parity subspace of ``(q1, q2)``."""
        pairs = ((0, 0), (1, 1)) if even else ((0, 1), (1, 0))
        return sum(
            float(np.sum(np.abs(self.sector({q1: b1, q2: b2})) ** 2)) for b1, b2 in pairs
        )

    def project_parity(self, q1: str, q2: str, even: bool = True) -> float:
        """Project ``(q1, q2)`` onto one parity subspace and renormalize; returns its weight."""
        weight = self.parity_weight(q1, q2, even)
        if weight <= NORM_TOLERANCE:
            raise ContractError(f"parity projection on ({q1}, {q2}) has zero weight")
        for b1, b2 in ((0, 1), (1, 0)) if even else ((0, 0), (1, 1)):
            self.sector({q1: b1, q2: b2})[...] = 0.0
        self._amps /= math.sqrt(weight)
        return weight

    # -- register shape ------------------------------------------------------

    def add_qubit(self, label: str) -> PureState:
        """Append a fresh ``|+>`` qubit."""
        if label in self._positions:
            raise ContractError(f"qubit {label!r} already exists")
        check_capacity(self.num_qubits + 1, self._capacity)
        self._amps = np.concatenate((self._amps, self._amps)) * _SQRT1_2
        self._positions[label] = len(self._labels)
        self._labels = self._labels + (label,)
        return self

    def measure(
        self,
        label: str,
        rng: Optional[np.random.Generator] = None,
        forced: Optional[int] = None,
    ) -> int:
        """Measure *label* in the computational basis and remove it from the register."""
        if self.num_qubits == 1:
            raise ContractError("cannot measure out the last qubit of a register")
        p1 = self.probability(label, 1)
        if forced is not None:
            bit = int(forced)
            if bit not in (0, 1):
                raise ContractError(f"forced measurement bit must be 0 or 1, got {forced}")
        elif rng is not None:
            bit = int(rng.random() < p1)
        else:
            raise ContractError("measure() needs an rng or a forced outcome")
        weight = p1 if bit == 1 else 1.0 - p1
        if weight <= NORM_TOLERANCE:
            raise ContractError(f"outcome {bit} on {label!r} has zero probability")
        kept = np.take(self._tensor(), bit, axis=self._axis(label)).reshape(-1)
        self._amps = np.ascontiguousarray(kept) / math.sqrt(weight)
        self._labels = tuple(x for x in self._labels if x != label)
        self._positions = {x: i for i, x in enumerate(self._labels)}
        return bit

    def renormalize(self) -> float:
        norm = self.norm()
        if norm <= NORM_TOLERANCE:
            raise ContractError("state collapsed to zero norm")
        self._amps /= norm
        return norm

    def reordered(self, labels: Sequence[str]) -> PureState:
        """Return a copy whose qubits follow the order *labels*."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self._labels):
            raise ContractError(f"label sets differ: {sorted(labels)} vs {sorted(self._labels)}")
        m = self.num_qubits
        axes = [self._axis(labels[m - 1 - k]) for k in range(m)]
        amps = np.transpose(self._tensor(), axes).reshape(-1)
        return PureState(labels, amps.copy(), self._capacity)


def init_register(labels: Sequence[str], capacity: int = DEFAULT_CAPACITY) -> PureState:
    """``|+>`` on every qubit."""
    labels = tuple(labels)
    if not labels:
        raise ContractError("a register needs at least one qubit")
    check_capacity(len(labels), capacity)
    m = len(labels)
    return PureState(labels, np.full(2**m, 2.0 ** (-m / 2), dtype=np.complex128), capacity)


def graph_state(
    labels: Sequence[str], edges: Iterable[Sequence[str]], capacity: int = DEFAULT_CAPACITY
) -> PureState:
    """The graph state ``prod CZ |+>^V`` on *labels*."""
    state = init_register(labels, capacity)
    position = {label: i for i, label in enumerate(state.labels)}
    index = np.arange(2 ** state.num_qubits, dtype=np.int64)
    parity = np.zeros(index.shape, dtype=np.int64)
    for u, v in edges:
        parity ^= (index >> position[u]) & (index >> position[v]) & 1
    return PureState(state.labels, state.amplitudes * (1 - 2 * parity), capacity)


def overlap(s1: PureState, s2: PureState) -> float:
    """``|<s1|s2>|`` after aligning the label order of *s2* to *s1*."""
    aligned = s2 if s2.labels == s1.labels else s2.reordered(s1.labels)
    return float(abs(np.vdot(s1.amplitudes, aligned.amplitudes)))
