"""
Exact state-vector engine.

States, unitaries and projectors are immutable numpy-backed values; every
operation returns a new object. Qubit 0 is the most significant bit of the
amplitude index, so ``|q0 q1 ... q(n-1)>`` maps to index
``q0 * 2**(n-1) + ... + q(n-1)``, matching left-to-right ket notation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import cos, pi, sin, sqrt
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import SimulationConstants
from exceptions import ImpossibleOutcomeError, InvalidArgumentError
from utils.validators import validate_bit

logger = logging.getLogger(__name__)

_TOL = SimulationConstants.EXACT_TOLERANCE
_SQRT2_INV = 1 / sqrt(2)

# Amplitudes are Python/numpy complex numbers; finiteness is checked on the
# containing state or operator.
Amplitude = complex

GATE_ARITY = {'h': 1, 'x': 1, 'y': 1, 'z': 1, 'rx': 1, 'cnot': 2, 'cz': 2}

NAMED_STATES = ('plus', 'minus', 'plus_i', 'minus_i', 'phi_plus', 'psi_plus')


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``num_qubits`` qubits."""

    num_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise InvalidArgumentError("a state needs at least one qubit",
                                       field="num_qubits", value=self.num_qubits)
        amps = _frozen(self.amps).reshape(-1)
        if amps.shape[0] != 2 ** self.num_qubits:
            raise InvalidArgumentError(
                f"expected {2 ** self.num_qubits} amplitudes, got {amps.shape[0]}",
                field="amps",
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidArgumentError("amplitudes must be finite", field="amps")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > _TOL:
            raise InvalidArgumentError(f"state is not normalized (norm^2 = {norm!r})",
                                       field="amps", value=norm)
        object.__setattr__(self, 'amps', amps)

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex], normalize: bool = False) -> 'StateVector':
        """Build a state from a flat amplitude list (length must be a power of two)."""
        array = np.asarray(amps, dtype=complex).reshape(-1)
        size = array.shape[0]
        num_qubits = size.bit_length() - 1
        if size < 2 or 2 ** num_qubits != size:
            raise InvalidArgumentError("amplitude count must be a power of two >= 2",
                                       field="amps", value=size)
        if normalize:
            norm = np.linalg.norm(array)
            if norm < _TOL:
                raise InvalidArgumentError("cannot normalize the zero vector", field="amps")
            array = array / norm
        return cls(num_qubits, array)

    def tensor(self, other: 'StateVector') -> 'StateVector':
        """``self ⊗ other``; qubits of ``other`` follow those of ``self``."""
        return StateVector(self.num_qubits + other.num_qubits, np.kron(self.amps, other.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __repr__(self) -> str:
        terms = []
        for index, amp in enumerate(self.amps):
            if abs(amp) > 1e-9:
                terms.append(f"({amp.real:+.4f}{amp.imag:+.4f}j)|{index:0{self.num_qubits}b}>")
        return f"StateVector({' '.join(terms)})"


@dataclass(frozen=True, eq=False)
class Unitary:
    """Unitary on ``arity`` qubits; ``matrix`` rows/cols use the MSB-first convention."""

    arity: int
    matrix: np.ndarray
    name: str = ''

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        dim = 2 ** self.arity
        if matrix.shape != (dim, dim):
            raise InvalidArgumentError(f"unitary on {self.arity} qubits must be {dim}x{dim}",
                                       field="matrix")
        if not np.allclose(matrix.conj().T @ matrix, np.eye(dim), rtol=0, atol=_TOL):
            raise InvalidArgumentError("matrix is not unitary", field="matrix")
        object.__setattr__(self, 'matrix', matrix)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector on ``arity`` qubits."""

    arity: int
    matrix: np.ndarray
    name: str = ''

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        dim = 2 ** self.arity
        if matrix.shape != (dim, dim):
            raise InvalidArgumentError(f"projector on {self.arity} qubits must be {dim}x{dim}",
                                       field="matrix")
        if not np.allclose(matrix, matrix.conj().T, rtol=0, atol=_TOL):
            raise InvalidArgumentError("projector is not Hermitian", field="matrix")
        if not np.allclose(matrix @ matrix, matrix, rtol=0, atol=_TOL):
            raise InvalidArgumentError("projector is not idempotent", field="matrix")
        object.__setattr__(self, 'matrix', matrix)

    def tensor(self, other: 'Projector') -> 'Projector':
        name = f"{self.name}⊗{other.name}" if self.name and other.name else ''
        return Projector(self.arity + other.arity, np.kron(self.matrix, other.matrix), name)


class MeasurementOutcome(NamedTuple):
    bit: int
    probability: float
    post_state: StateVector


class ProjectionResult(NamedTuple):
    probability: float
    post_state: Optional[StateVector]


# ---------------------------------------------------------------------------
# State constructors
# ---------------------------------------------------------------------------

def make_basis_state(num_qubits: int, bits: str) -> StateVector:
    """Computational basis state ``|bits>`` with qubit 0 as the leftmost character."""
    if len(bits) != num_qubits or any(ch not in '01' for ch in bits):
        raise InvalidArgumentError(
            f"expected {num_qubits} binary digits, got {bits!r}", field="bits", value=bits
        )
    amps = np.zeros(2 ** num_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(num_qubits, amps)


def make_named_state(name: str) -> StateVector:
    """One of ``plus``, ``minus``, ``plus_i``, ``minus_i``, ``phi_plus``, ``psi_plus``."""
    table = {
        'plus': [_SQRT2_INV, _SQRT2_INV],
        'minus': [_SQRT2_INV, -_SQRT2_INV],
        'plus_i': [_SQRT2_INV, 1j * _SQRT2_INV],
        'minus_i': [_SQRT2_INV, -1j * _SQRT2_INV],
        'phi_plus': [_SQRT2_INV, 0, 0, _SQRT2_INV],
        'psi_plus': [0, _SQRT2_INV, _SQRT2_INV, 0],
    }
    if name not in table:
        raise InvalidArgumentError(f"unknown named state {name!r}", field="name", value=name)
    return StateVector.from_amplitudes(table[name])


def tensor(*states: StateVector) -> StateVector:
    """Tensor product in argument order."""
    if not states:
        raise InvalidArgumentError("tensor() needs at least one state", field="states")
    result = states[0]
    for state in states[1:]:
        result = result.tensor(state)
    return result


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state drawn from ``rng``."""
    raw = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return StateVector.from_amplitudes(raw, normalize=True)


# ---------------------------------------------------------------------------
# Gates and projectors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _cached_gate(name: str, angle: Optional[float]) -> Unitary:
    if name == 'rx':
        c, s = cos(angle / 2), sin(angle / 2)
        return Unitary(1, [[c, -1j * s], [-1j * s, c]], f"rx({angle!r})")
    matrices = {
        'h': np.array([[1, 1], [1, -1]]) * _SQRT2_INV,
        'x': [[0, 1], [1, 0]],
        'y': [[0, -1j], [1j, 0]],
        'z': [[1, 0], [0, -1]],
        'cnot': [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
        'cz': np.diag([1, 1, 1, -1]),
    }
    return Unitary(GATE_ARITY[name], matrices[name], name)


def standard_gate(name: str, angle: Optional[float] = None) -> Unitary:
    """Conventional gate matrix; ``rx(θ) = cos(θ/2)·I − i·sin(θ/2)·X``.

    For two-qubit gates the first target is the control (CNOT) and the
    more significant index bit.
    """
    if name not in GATE_ARITY:
        raise InvalidArgumentError(f"unknown gate {name!r}", field="name", value=name)
    if (name == 'rx') != (angle is not None):
        raise InvalidArgumentError("an angle is required for rx and only for rx",
                                   field="angle", value=angle)
    if angle is not None:
        angle = float(angle)
        if not np.isfinite(angle):
            raise InvalidArgumentError("angle must be finite", field="angle", value=angle)
    return _cached_gate(name, angle)


def parity_projectors() -> Tuple[Projector, Projector]:
    """``(Π^same, Π^diff)`` on two qubits."""
    same = Projector(2, np.diag([1, 0, 0, 1]), 'same')
    diff = Projector(2, np.diag([0, 1, 1, 0]), 'diff')
    return same, diff


def y_projectors() -> Tuple[Projector, Projector]:
    """``(Π_Y+, Π_Y−) = ((1 + Y)/2, (1 − Y)/2)``."""
    y = standard_gate('y').matrix
    identity = np.eye(2)
    return (Projector(1, (identity + y) / 2, 'Y+'),
            Projector(1, (identity - y) / 2, 'Y-'))


# ---------------------------------------------------------------------------
# Applying operators
# ---------------------------------------------------------------------------

def _check_targets(num_qubits: int, targets: Sequence[int], arity: int) -> Tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(targets) != arity:
        raise InvalidArgumentError(f"expected {arity} target qubits, got {len(targets)}",
                                   field="targets", value=targets)
    if len(set(targets)) != len(targets):
        raise InvalidArgumentError("target qubits must be distinct",
                                   field="targets", value=targets)
    if any(t < 0 or t >= num_qubits for t in targets):
        raise InvalidArgumentError(f"target qubit out of range for {num_qubits} qubits",
                                   field="targets", value=targets)
    return targets


def _apply_matrix(state: StateVector, matrix: np.ndarray, targets: Tuple[int, ...]) -> np.ndarray:
    n, k = state.num_qubits, len(targets)
    psi = np.moveaxis(state.amps.reshape([2] * n), targets, range(k))
    shape = psi.shape
    psi = (matrix @ psi.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), targets).reshape(-1)


def apply_unitary(state: StateVector, u: Unitary, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to ``targets`` (first target = most significant gate index bit)."""
    targets = _check_targets(state.num_qubits, targets, u.arity)
    return StateVector(state.num_qubits, _apply_matrix(state, u.matrix, targets))


def apply_projector(state: StateVector, p: Projector, targets: Sequence[int]) -> ProjectionResult:
    """Born probability ``<ψ|P|ψ>`` and the renormalized ``P|ψ>``.

    A probability at or below the pruning threshold yields ``post_state=None``.
    """
    targets = _check_targets(state.num_qubits, targets, p.arity)
    projected = _apply_matrix(state, p.matrix, targets)
    probability = float(np.vdot(projected, projected).real)
    if probability <= SimulationConstants.PRUNE_THRESHOLD:
        return ProjectionResult(probability, None)
    return ProjectionResult(probability,
                            StateVector(state.num_qubits, projected / sqrt(probability)))


def outcome_probabilities(state: StateVector, qubit: int) -> Tuple[float, float]:
    """``(P(0), P(1))`` for a Z measurement of ``qubit``."""
    _check_targets(state.num_qubits, (qubit,), 1)
    probs = state.probabilities().reshape([2] * state.num_qubits)
    marginal = np.moveaxis(probs, qubit, 0).reshape(2, -1).sum(axis=1)
    return float(marginal[0]), float(marginal[1])


def measure_z(state: StateVector, qubit: int, forced: Optional[int] = None,
              rng: Optional[np.random.Generator] = None) -> MeasurementOutcome:
    """Measure ``qubit`` in the computational basis.

    Pass ``forced`` to select an outcome (it must have non-negligible
    probability) or ``rng`` to sample one by the Born rule.
    """
    p0, p1 = outcome_probabilities(state, qubit)
    if forced is None:
        if rng is None:
            raise InvalidArgumentError("measure_z needs either a forced bit or an rng",
                                       field="mode")
        bit = 1 if rng.random() < p1 else 0
    else:
        bit = validate_bit(forced, field="forced")
    probability = p1 if bit else p0
    if probability <= SimulationConstants.PRUNE_THRESHOLD:
        raise ImpossibleOutcomeError(
            f"outcome {bit} on qubit {qubit} has probability {probability:.3g}",
            qubit=qubit, bit=bit, probability=probability,
        )
    n = state.num_qubits
    psi = np.moveaxis(state.amps.reshape([2] * n), qubit, 0).copy()
    psi[1 - bit] = 0
    psi = np.moveaxis(psi, 0, qubit).reshape(-1) / sqrt(probability)
    return MeasurementOutcome(bit, probability, StateVector(n, psi))


# ---------------------------------------------------------------------------
# Comparisons
# ---------------------------------------------------------------------------

def _check_same_width(a: StateVector, b: StateVector) -> None:
    if a.num_qubits != b.num_qubits:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits",
            field="num_qubits",
        )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>`` (conjugate-linear in ``a``)."""
    _check_same_width(a, b)
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = _TOL) -> bool:
    return abs(inner_product(a, b)) >= 1 - tol


def extract_subsystem(state: StateVector, keep: Sequence[int]) -> StateVector:
    """State of the ``keep`` qubits when every other qubit is in a basis state.

    Used after ancillas have been measured: the full state is then a
    product of the kept register with a computational basis state.
    """
    keep = _check_targets(state.num_qubits, keep, len(keep))
    n, k = state.num_qubits, len(keep)
    if k == n:
        return StateVector(n, np.moveaxis(state.amps.reshape([2] * n), keep, range(n)).reshape(-1))
    psi = np.moveaxis(state.amps.reshape([2] * n), keep, range(k)).reshape(2 ** k, -1)
    weights = np.sum(np.abs(psi) ** 2, axis=0)
    column = int(np.argmax(weights))
    if abs(weights[column] - 1.0) > SimulationConstants.EQUIVALENCE_TOLERANCE:
        raise InvalidArgumentError(
            "remaining qubits are not in a computational basis state",
            field="keep", value=keep,
        )
    return StateVector.from_amplitudes(psi[:, column], normalize=True)


# Angle used to map Π_Y+ onto a Z measurement: Π_Y+ = Rx(−π/2)|0><0|Rx(π/2).
Y_BASIS_ROTATION = pi / 2
