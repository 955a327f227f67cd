"""Statevector simulation core: gate algebra, measurement, and reset.

Amplitude convention: basis index ``i`` stores qubit ``k`` in bit ``k`` of
``i``, so qubit 0 is the least significant bit. Bitstrings returned by
measurement are written qubit-0 first (``bits[k]`` is the value of qubit k).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 20

RX_PERIOD = 4.0 * math.pi


class OutOfRangeError(ValueError):
    """Register width outside the supported simulation range."""


class InvalidTargetError(ValueError):
    """Gate target indices out of range, duplicated, or of the wrong arity."""


class DegenerateStateError(ValueError):
    """A measurement branch with vanishing norm cannot be realized."""


_ARITY = {
    "X": 1,
    "H": 1,
    "RX": 1,
    "T": 1,
    "TDG": 1,
    "CNOT": 2,
    "CRX": 2,
    "SWAP": 2,
    "TOFFOLI": 3,
    "MEASURE": 1,
    "RESET": 1,
}

ROTATION_KINDS = frozenset({"RX", "CRX"})
NONUNITARY_KINDS = frozenset({"MEASURE", "RESET"})


@dataclass(frozen=True)
class GateOp:
    """A single circuit operation: a unitary gate or a measure/reset marker.

    ``T``/``TDG`` never appear in built circuits; they exist so the
    three-qubit gate has an exact expansion over {single-qubit, CNOT}.
    """

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None
    classical_slot: int | None = None

    def __post_init__(self):
        arity = _ARITY.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != arity:
            raise InvalidTargetError(f"{self.kind} takes {arity} target(s), got {len(targets)}")
        if len(set(targets)) != len(targets):
            raise InvalidTargetError(f"{self.kind} targets must be distinct, got {targets}")
        if min(targets) < 0:
            raise InvalidTargetError(f"negative qubit index in {targets}")
        if self.kind in ROTATION_KINDS:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.theta!r}")
            object.__setattr__(self, "theta", float(self.theta) % RX_PERIOD)
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")
        if self.classical_slot is not None and self.kind != "MEASURE":
            raise ValueError(f"{self.kind} takes no classical slot")

    @property
    def is_unitary(self) -> bool:
        return self.kind not in NONUNITARY_KINDS

    @classmethod
    def x(cls, q: int) -> "GateOp":
        return cls("X", (q,))

    @classmethod
    def h(cls, q: int) -> "GateOp":
        return cls("H", (q,))

    @classmethod
    def t(cls, q: int) -> "GateOp":
        return cls("T", (q,))

    @classmethod
    def tdg(cls, q: int) -> "GateOp":
        return cls("TDG", (q,))

    @classmethod
    def rx(cls, q: int, theta: float) -> "GateOp":
        return cls("RX", (q,), theta=theta)

    @classmethod
    def cnot(cls, control: int, target: int) -> "GateOp":
        return cls("CNOT", (control, target))

    @classmethod
    def crx(cls, control: int, target: int, theta: float) -> "GateOp":
        return cls("CRX", (control, target), theta=theta)

    @classmethod
    def toffoli(cls, control_a: int, control_b: int, target: int) -> "GateOp":
        return cls("TOFFOLI", (control_a, control_b, target))

    @classmethod
    def swap(cls, qa: int, qb: int) -> "GateOp":
        return cls("SWAP", (qa, qb))

    @classmethod
    def measure(cls, q: int, slot: int | None = None) -> "GateOp":
        return cls("MEASURE", (q,), classical_slot=slot)

    @classmethod
    def reset(cls, q: int) -> "GateOp":
        return cls("RESET", (q,))


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of one explicit mid-circuit measurement."""

    slot: int | None
    qubit: int
    outcome: int

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome}")


_SQ2 = 1.0 / math.sqrt(2.0)

MATRICES_1Q = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "T": np.array([[1.0, 0.0], [0.0, cmath.exp(0.25j * math.pi)]], dtype=np.complex128),
    "TDG": np.array([[1.0, 0.0], [0.0, cmath.exp(-0.25j * math.pi)]], dtype=np.complex128),
}
for _m in MATRICES_1Q.values():
    _m.setflags(write=False)


def rx_matrix(theta: float) -> np.ndarray:
    """X rotation with ``cos(theta/2)`` diagonal and ``i sin(theta/2)`` off-diagonal."""
    c = math.cos(0.5 * theta)
    s = 1j * math.sin(0.5 * theta)
    return np.array([[c, s], [s, c]], dtype=np.complex128)


def index_to_bits(index: int, n_qubits: int) -> str:
    """Basis index as a qubit-0-first bitstring."""
    return format(index, f"0{n_qubits}b")[::-1]


def bits_to_index(bits: str) -> int:
    return int(bits[::-1], 2) if bits else 0


@lru_cache(maxsize=None)
def _controlled_pair_indices(n_qubits: int, controls: tuple[int, ...], target: int):
    """Basis indices with every control set, split by the target bit."""
    basis = np.arange(1 << n_qubits)
    keep = (basis >> target) & 1 == 0
    for c in controls:
        keep &= (basis >> c) & 1 == 1
    lo = basis[keep]
    hi = lo | (1 << target)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


@lru_cache(maxsize=None)
def _swap_pair_indices(n_qubits: int, qa: int, qb: int):
    """Basis indices with qubit ``qa`` set and ``qb`` clear, plus their partners."""
    basis = np.arange(1 << n_qubits)
    keep = ((basis >> qa) & 1 == 1) & ((basis >> qb) & 1 == 0)
    lo = basis[keep]
    hi = lo ^ ((1 << qa) | (1 << qb))
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


class StateVector:
    """Dense complex amplitudes over every basis state of an n-qubit register."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, max_qubits: int = MAX_QUBITS):
        if n_qubits < 1 or n_qubits > max_qubits:
            raise OutOfRangeError(f"n_qubits must be in 1..{max_qubits}, got {n_qubits}")
        self.n_qubits = n_qubits
        self.amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        self.amps[0] = 1.0

    @classmethod
    def from_basis(cls, n_qubits: int, index: int, max_qubits: int = MAX_QUBITS) -> "StateVector":
        state = cls(n_qubits, max_qubits=max_qubits)
        if not 0 <= index < (1 << n_qubits):
            raise OutOfRangeError(f"basis index {index} out of range for {n_qubits} qubits")
        state.amps[0] = 0.0
        state.amps[index] = 1.0
        return state

    def copy(self) -> "StateVector":
        dup = object.__new__(StateVector)
        dup.n_qubits = self.n_qubits
        dup.amps = self.amps.copy()
        return dup

    def norm_sq(self) -> float:
        return float(np.sum(self.amps.real**2 + self.amps.imag**2))

    def probabilities(self) -> np.ndarray:
        return self.amps.real**2 + self.amps.imag**2

    def _check_target(self, q: int) -> None:
        if not 0 <= q < self.n_qubits:
            raise InvalidTargetError(f"qubit {q} out of range for {self.n_qubits}-qubit state")

    def apply_matrix_1q(self, matrix: np.ndarray, q: int) -> None:
        """Apply an arbitrary 2x2 matrix to one qubit (used by noise injection too)."""
        self._check_target(q)
        v = self.amps.reshape(-1, 2, 1 << q)
        a0 = v[:, 0, :]
        a1 = v[:, 1, :]
        b0 = matrix[0, 0] * a0 + matrix[0, 1] * a1
        b1 = matrix[1, 0] * a0 + matrix[1, 1] * a1
        v[:, 0, :] = b0
        v[:, 1, :] = b1

    def _swap_amp_pairs(self, lo: np.ndarray, hi: np.ndarray) -> None:
        tmp = self.amps[lo]
        self.amps[lo] = self.amps[hi]
        self.amps[hi] = tmp

    def apply_gate(self, op: GateOp) -> None:
        """Apply one unitary op in place; measurement/reset ops are rejected."""
        kind = op.kind
        if kind in NONUNITARY_KINDS:
            raise ValueError(f"{kind} is not unitary; use measure_qubit or reset_qubit")
        for q in op.targets:
            self._check_target(q)
        n = self.n_qubits
        if kind == "RX":
            self.apply_matrix_1q(rx_matrix(op.theta), op.targets[0])
        elif kind in MATRICES_1Q:
            self.apply_matrix_1q(MATRICES_1Q[kind], op.targets[0])
        elif kind == "CNOT":
            c, t = op.targets
            lo, hi = _controlled_pair_indices(n, (c,), t)
            self._swap_amp_pairs(lo, hi)
        elif kind == "TOFFOLI":
            a, b, t = op.targets
            lo, hi = _controlled_pair_indices(n, (min(a, b), max(a, b)), t)
            self._swap_amp_pairs(lo, hi)
        elif kind == "SWAP":
            qa, qb = op.targets
            lo, hi = _swap_pair_indices(n, min(qa, qb), max(qa, qb))
            self._swap_amp_pairs(lo, hi)
        elif kind == "CRX":
            c, t = op.targets
            u = rx_matrix(op.theta)
            lo, hi = _controlled_pair_indices(n, (c,), t)
            a_lo = self.amps[lo]
            a_hi = self.amps[hi]
            self.amps[lo] = u[0, 0] * a_lo + u[0, 1] * a_hi
            self.amps[hi] = u[1, 0] * a_lo + u[1, 1] * a_hi
        else:  # pragma: no cover - kinds and handlers are defined together
            raise ValueError(f"unhandled gate kind {kind!r}")

    def measure_all(self, rng: np.random.Generator) -> str:
        """Sample a full basis state, collapse onto it, and return its bits."""
        probs = self.probabilities()
        cdf = np.cumsum(probs)
        u = rng.random() * cdf[-1]
        idx = int(np.searchsorted(cdf, u, side="right"))
        if idx >= cdf.size:
            idx = cdf.size - 1
        self.amps.fill(0.0)
        self.amps[idx] = 1.0
        return index_to_bits(idx, self.n_qubits)

    def measure_qubit(self, q: int, rng: np.random.Generator) -> int:
        """Sample one qubit from its marginal, collapse, and renormalize."""
        self._check_target(q)
        v = self.amps.reshape(-1, 2, 1 << q)
        p0 = float(np.sum(v[:, 0, :].real ** 2 + v[:, 0, :].imag ** 2))
        p1 = float(np.sum(v[:, 1, :].real ** 2 + v[:, 1, :].imag ** 2))
        total = p0 + p1
        if total <= 0.0 or not math.isfinite(total):
            raise DegenerateStateError("state has no measurable norm")
        outcome = 0 if rng.random() * total < p0 else 1
        branch = p0 if outcome == 0 else p1
        if branch < 1e-290:
            raise DegenerateStateError(f"projection branch {outcome} of qubit {q} underflows")
        v[:, 1 - outcome, :] = 0.0
        self.amps /= math.sqrt(branch)
        return outcome

    def reset_qubit(self, q: int, rng: np.random.Generator) -> None:
        """Measure one qubit and flip it back to |0> if the outcome was 1."""
        if self.measure_qubit(q, rng) == 1:
            self.apply_matrix_1q(MATRICES_1Q["X"], q)

    def allclose_up_to_phase(self, other: "StateVector", atol: float = 1e-12) -> bool:
        """Amplitude equality modulo one common phase factor."""
        if self.n_qubits != other.n_qubits:
            return False
        j = int(np.argmax(np.abs(self.amps)))
        ref = self.amps[j]
        if abs(ref) < atol:
            return bool(np.allclose(self.amps, other.amps, atol=atol))
        if abs(other.amps[j]) < atol:
            return False
        phase = other.amps[j] / ref
        phase /= abs(phase)
        return bool(np.allclose(self.amps * phase, other.amps, atol=atol))


def new_state(n_qubits: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Fresh |0...0> register."""
    return StateVector(n_qubits, max_qubits=max_qubits)
