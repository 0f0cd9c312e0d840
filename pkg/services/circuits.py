"""
Instruction-level circuits with classical bits.

A circuit is a straight-line program of gates, Z measurements, gates
conditioned on a classical bit, classical XOR and post-selection. The same
description drives exact branch enumeration and per-shot sampling: both
walk one outcome tree built by expanding every measurement.

Text format, one instruction per line::

    qubits N
    h|x|y|z q             rx q <pi/2 | -pi/2 | decimal>
    cnot qc qt            cz q1 q2
    measure q -> cN       xor cK = cI cJ
    <gate> ... if cN      postselect cN = 0|1
    # comment
"""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import (Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple,
                    TypeVar, Union)

import numpy as np

from config import Config, SimulationConstants
from exceptions import (CircuitParseError, CircuitValidationError, InvalidArgumentError)
from services.qcore import (GATE_ARITY, StateVector, apply_unitary, measure_z,
                            outcome_probabilities, standard_gate)
from utils.logging_utils import log_duration

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

_BIT_NAME = re.compile(r'^c(0|[1-9]\d*)$')
_INDEX = re.compile(r'^(0|[1-9]\d*)$')


class InstructionKind(str, Enum):
    GATE = 'gate'
    MEASURE = 'measure'
    COND_GATE = 'cond_gate'
    CLASSICAL_XOR = 'classical_xor'
    POSTSELECT = 'postselect'


@dataclass(frozen=True)
class Instruction:
    """One circuit step.

    ``bit`` is the destination of a measure/xor and the source of a
    conditional gate or post-selection; ``sources`` are the XOR inputs.
    """

    kind: InstructionKind
    qubits: Tuple[int, ...] = ()
    gate: Optional[str] = None
    angle: Optional[float] = None
    bit: Optional[str] = None
    sources: Tuple[str, ...] = ()
    expected: Optional[int] = None

    @property
    def reads(self) -> Tuple[str, ...]:
        if self.kind == InstructionKind.CLASSICAL_XOR:
            return self.sources
        if self.kind in (InstructionKind.COND_GATE, InstructionKind.POSTSELECT):
            return (self.bit,)
        return ()

    @property
    def writes(self) -> Optional[str]:
        if self.kind in (InstructionKind.MEASURE, InstructionKind.CLASSICAL_XOR):
            return self.bit
        return None

    @property
    def is_quantum(self) -> bool:
        return self.kind in (InstructionKind.GATE, InstructionKind.COND_GATE,
                             InstructionKind.MEASURE)

    def unitary(self):
        return standard_gate(self.gate, self.angle)

    def __str__(self) -> str:
        return format_instruction(self)


def _format_angle(angle: float) -> str:
    if angle == math.pi / 2:
        return 'pi/2'
    if angle == -math.pi / 2:
        return '-pi/2'
    return repr(float(angle))


def format_instruction(instr: Instruction) -> str:
    """Render one instruction in the text format."""
    if instr.kind in (InstructionKind.GATE, InstructionKind.COND_GATE):
        parts = [instr.gate, *(str(q) for q in instr.qubits)]
        if instr.angle is not None:
            parts.append(_format_angle(instr.angle))
        if instr.kind == InstructionKind.COND_GATE:
            parts += ['if', instr.bit]
        return ' '.join(parts)
    if instr.kind == InstructionKind.MEASURE:
        return f"measure {instr.qubits[0]} -> {instr.bit}"
    if instr.kind == InstructionKind.CLASSICAL_XOR:
        return f"xor {instr.bit} = {instr.sources[0]} {instr.sources[1]}"
    return f"postselect {instr.bit} = {instr.expected}"


def _check_instruction(instr: Instruction, num_qubits: int, written: set) -> None:
    """Validate ``instr`` against the circuit width and the bits written so far."""
    text = format_instruction(instr)
    if instr.kind in (InstructionKind.GATE, InstructionKind.COND_GATE):
        if instr.gate not in GATE_ARITY:
            raise CircuitValidationError(f"unknown gate {instr.gate!r}", text)
        if len(instr.qubits) != GATE_ARITY[instr.gate]:
            raise CircuitValidationError(
                f"{instr.gate} acts on {GATE_ARITY[instr.gate]} qubit(s)", text)
        if (instr.gate == 'rx') != (instr.angle is not None):
            raise CircuitValidationError("an angle is required for rx and only for rx", text)
        if instr.angle is not None and not math.isfinite(instr.angle):
            raise CircuitValidationError("angle must be finite", text)
    elif instr.kind == InstructionKind.MEASURE and len(instr.qubits) != 1:
        raise CircuitValidationError("measure acts on one qubit", text)
    if len(set(instr.qubits)) != len(instr.qubits):
        raise CircuitValidationError("target qubits must be distinct", text)
    for qubit in instr.qubits:
        if not 0 <= qubit < num_qubits:
            raise CircuitValidationError(
                f"qubit {qubit} out of range for a {num_qubits}-qubit circuit", text)
    for name in (*instr.reads, *((instr.writes,) if instr.writes else ())):
        if not name or not _BIT_NAME.match(name):
            raise CircuitValidationError(f"invalid classical bit name {name!r}", text)
    for name in instr.reads:
        if name not in written:
            raise CircuitValidationError(
                f"undeclared classical bit {name} (read before written)", text)
    if instr.writes is not None and instr.writes in written:
        raise CircuitValidationError(f"classical bit {instr.writes} is written twice", text)
    if instr.kind == InstructionKind.POSTSELECT and instr.expected not in (0, 1):
        raise CircuitValidationError("post-selection expects 0 or 1", text)


@dataclass(frozen=True)
class Circuit:
    """Validated straight-line program; classical bits in order of first write."""

    num_qubits: int
    classical_bits: Tuple[str, ...]
    body: Tuple[Instruction, ...]

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitValidationError("a circuit needs at least one qubit")
        written: set = set()
        order: List[str] = []
        for instr in self.body:
            _check_instruction(instr, self.num_qubits, written)
            if instr.writes is not None:
                written.add(instr.writes)
                order.append(instr.writes)
        if tuple(order) != tuple(self.classical_bits):
            raise CircuitValidationError(
                "classical_bits must list every written bit in order of first write")

    def __len__(self) -> int:
        return len(self.body)


class CircuitBuilder:
    """Incrementally builds a :class:`Circuit`, validating each instruction.

    Bits are named ``c0, c1, ...`` automatically unless a name is given.
    """

    def __init__(self, num_qubits: int):
        if num_qubits < 1:
            raise CircuitValidationError("a circuit needs at least one qubit")
        self.num_qubits = num_qubits
        self._body: List[Instruction] = []
        self._bits: List[str] = []

    def __len__(self) -> int:
        return len(self._body)

    def _next_bit(self) -> str:
        return f"c{len(self._bits)}"

    def append(self, instr: Instruction) -> Instruction:
        _check_instruction(instr, self.num_qubits, set(self._bits))
        self._body.append(instr)
        if instr.writes is not None:
            self._bits.append(instr.writes)
        return instr

    def gate(self, name: str, *qubits: int, angle: Optional[float] = None) -> 'CircuitBuilder':
        self.append(Instruction(InstructionKind.GATE, tuple(qubits), name, angle))
        return self

    def h(self, qubit: int) -> 'CircuitBuilder':
        return self.gate('h', qubit)

    def x(self, qubit: int) -> 'CircuitBuilder':
        return self.gate('x', qubit)

    def rx(self, qubit: int, angle: float) -> 'CircuitBuilder':
        return self.gate('rx', qubit, angle=angle)

    def cnot(self, control: int, target: int) -> 'CircuitBuilder':
        return self.gate('cnot', control, target)

    def cond(self, name: str, qubits: Union[int, Sequence[int]], bit: str,
             angle: Optional[float] = None) -> 'CircuitBuilder':
        qubits = (qubits,) if isinstance(qubits, int) else tuple(qubits)
        self.append(Instruction(InstructionKind.COND_GATE, qubits, name, angle, bit))
        return self

    def measure(self, qubit: int, bit: Optional[str] = None) -> str:
        bit = bit or self._next_bit()
        self.append(Instruction(InstructionKind.MEASURE, (qubit,), bit=bit))
        return bit

    def xor(self, left: str, right: str, bit: Optional[str] = None) -> str:
        bit = bit or self._next_bit()
        self.append(Instruction(InstructionKind.CLASSICAL_XOR, bit=bit, sources=(left, right)))
        return bit

    def postselect(self, bit: str, expected: int) -> 'CircuitBuilder':
        self.append(Instruction(InstructionKind.POSTSELECT, bit=bit, expected=expected))
        return self

    def build(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(self._bits), tuple(self._body))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _parse_index(token: str, what: str) -> int:
    if not _INDEX.match(token):
        raise ValueError(f"expected a decimal {what} index, got {token!r}")
    return int(token)


def _parse_bit(token: str) -> str:
    if not _BIT_NAME.match(token):
        raise ValueError(f"expected a classical bit like c0, got {token!r}")
    return token


def _parse_angle(token: str) -> float:
    if token == 'pi/2':
        return math.pi / 2
    if token == '-pi/2':
        return -math.pi / 2
    try:
        angle = float(token)
    except ValueError:
        raise ValueError(f"bad angle {token!r} (use pi/2, -pi/2 or decimal radians)") from None
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {token!r}")
    return angle


def _parse_instruction(tokens: List[str]) -> Instruction:
    head = tokens[0]
    if head == 'measure':
        if len(tokens) != 4 or tokens[2] != '->':
            raise ValueError("expected 'measure q -> cN'")
        return Instruction(InstructionKind.MEASURE, (_parse_index(tokens[1], 'qubit'),),
                           bit=_parse_bit(tokens[3]))
    if head == 'xor':
        if len(tokens) != 5 or tokens[2] != '=':
            raise ValueError("expected 'xor cK = cI cJ'")
        return Instruction(InstructionKind.CLASSICAL_XOR, bit=_parse_bit(tokens[1]),
                           sources=(_parse_bit(tokens[3]), _parse_bit(tokens[4])))
    if head == 'postselect':
        if len(tokens) != 4 or tokens[2] != '=' or tokens[3] not in ('0', '1'):
            raise ValueError("expected 'postselect cN = 0|1'")
        return Instruction(InstructionKind.POSTSELECT, bit=_parse_bit(tokens[1]),
                           expected=int(tokens[3]))
    if head not in GATE_ARITY:
        raise ValueError(f"unknown instruction {head!r}")

    condition = None
    if len(tokens) >= 3 and tokens[-2] == 'if':
        condition = _parse_bit(tokens[-1])
        tokens = tokens[:-2]
    operands = tokens[1:]
    angle = None
    if head == 'rx':
        if len(operands) != 2:
            raise ValueError("expected 'rx q <angle>'")
        angle = _parse_angle(operands.pop())
    if len(operands) != GATE_ARITY[head]:
        raise ValueError(f"{head} takes {GATE_ARITY[head]} qubit operand(s)")
    qubits = tuple(_parse_index(tok, 'qubit') for tok in operands)
    if condition is None:
        return Instruction(InstructionKind.GATE, qubits, head, angle)
    return Instruction(InstructionKind.COND_GATE, qubits, head, angle, condition)


def parse_circuit(text: str) -> Circuit:
    """Parse the line format; errors carry the 1-based line number."""
    builder: Optional[CircuitBuilder] = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if builder is None:
            if tokens[0] != 'qubits' or len(tokens) != 2:
                raise CircuitParseError("circuit must start with 'qubits N'", line_number, raw)
            try:
                width = _parse_index(tokens[1], 'qubit count')
                builder = CircuitBuilder(width)
            except (ValueError, CircuitValidationError) as exc:
                raise CircuitParseError(str(exc), line_number, raw) from exc
            continue
        if tokens[0] == 'qubits':
            raise CircuitParseError("duplicate 'qubits' header", line_number, raw)
        try:
            builder.append(_parse_instruction(tokens))
        except ValueError as exc:
            raise CircuitParseError(f"syntax error: {exc}", line_number, raw) from exc
        except CircuitValidationError as exc:
            raise CircuitParseError(exc.message, line_number, raw) from exc
    if builder is None:
        raise CircuitParseError("empty circuit: missing 'qubits N' header")
    return builder.build()


def format_circuit(circuit: Circuit) -> str:
    """Normalized text form; ``parse_circuit(format_circuit(c)) == c``."""
    lines = [f"qubits {circuit.num_qubits}"]
    lines += [format_instruction(instr) for instr in circuit.body]
    return '\n'.join(lines) + '\n'


# ---------------------------------------------------------------------------
# Outcome tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Leaf:
    record: Mapping[str, int]
    state: StateVector
    accepted: bool


@dataclass(frozen=True)
class _Split:
    bit: str
    p_one: float
    zero: Optional['_Node']
    one: Optional['_Node']


_Node = Union[_Leaf, _Split]


def _build_tree(circuit: Circuit, start: int, state: StateVector,
                record: Dict[str, int]) -> _Node:
    """Expand the program from ``start``; each measurement becomes a split."""
    for index in range(start, len(circuit.body)):
        instr = circuit.body[index]
        if instr.kind == InstructionKind.GATE:
            state = apply_unitary(state, instr.unitary(), instr.qubits)
        elif instr.kind == InstructionKind.COND_GATE:
            if record[instr.bit]:
                state = apply_unitary(state, instr.unitary(), instr.qubits)
        elif instr.kind == InstructionKind.CLASSICAL_XOR:
            left, right = instr.sources
            record = {**record, instr.bit: record[left] ^ record[right]}
        elif instr.kind == InstructionKind.POSTSELECT:
            if record[instr.bit] != instr.expected:
                return _Leaf(record, state, accepted=False)
        else:
            qubit = instr.qubits[0]
            probs = outcome_probabilities(state, qubit)
            children = []
            for bit in (0, 1):
                if probs[bit] <= SimulationConstants.PRUNE_THRESHOLD:
                    children.append(None)
                    continue
                post = measure_z(state, qubit, forced=bit).post_state
                children.append(_build_tree(circuit, index + 1, post, {**record, instr.bit: bit}))
            return _Split(instr.bit, probs[1], children[0], children[1])
    return _Leaf(record, state, accepted=True)


def _check_initial(circuit: Circuit, initial: StateVector) -> None:
    if initial.num_qubits != circuit.num_qubits:
        raise InvalidArgumentError(
            f"initial state has {initial.num_qubits} qubits, circuit expects {circuit.num_qubits}",
            field="initial",
        )


def apply_gates(circuit: Circuit, initial: StateVector, stop: Optional[int] = None) -> StateVector:
    """Evolve ``initial`` through ``body[:stop]``, which must contain only gates."""
    _check_initial(circuit, initial)
    state = initial
    for instr in circuit.body[:stop]:
        if instr.kind != InstructionKind.GATE:
            raise InvalidArgumentError(
                f"apply_gates stops at non-unitary instruction '{instr}'", field="stop")
        state = apply_unitary(state, instr.unitary(), instr.qubits)
    return state


# ---------------------------------------------------------------------------
# Exact branch enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    outcome_record: Mapping[str, int]
    probability: float
    final_state: StateVector


def _walk_leaves(node: Optional[_Node], probability: float) -> Iterator[Tuple[_Leaf, float]]:
    if node is None or probability < SimulationConstants.PRUNE_THRESHOLD:
        return
    if isinstance(node, _Leaf):
        yield node, probability
        return
    yield from _walk_leaves(node.zero, probability * (1 - node.p_one))
    yield from _walk_leaves(node.one, probability * node.p_one)


def enumerate_branches(circuit: Circuit, initial: StateVector) -> List[Branch]:
    """All surviving branches, depth-first with outcome 0 before 1."""
    _check_initial(circuit, initial)
    tree = _build_tree(circuit, 0, initial, {})
    branches = []
    for leaf, probability in _walk_leaves(tree, 1.0):
        if not leaf.accepted:
            continue
        record = {bit: leaf.record[bit] for bit in circuit.classical_bits}
        branches.append(Branch(record, probability, leaf.state))
    logger.debug(f"Enumerated {len(branches)} branches over {len(circuit)} instructions")
    return branches


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExecutionMode:
    """``exact`` enumeration or ``sampled`` with a shot count and seed."""

    kind: str = 'exact'
    shots: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ('exact', 'sampled'):
            raise InvalidArgumentError("mode must be exact or sampled",
                                       field="mode", value=self.kind)
        if self.is_exact and (self.shots is not None or self.seed is not None):
            raise InvalidArgumentError("shots/seed apply only to sampled mode", field="mode")
        if not self.is_exact:
            if self.shots is None or self.shots < 1:
                raise InvalidArgumentError("sampled mode needs shots >= 1",
                                           field="shots", value=self.shots)
            if self.seed is None or self.seed < 0:
                raise InvalidArgumentError("sampled mode needs a seed >= 0",
                                           field="seed", value=self.seed)

    @classmethod
    def exact(cls) -> 'ExecutionMode':
        return cls('exact')

    @classmethod
    def sampled(cls, shots: int, seed: int) -> 'ExecutionMode':
        return cls('sampled', shots, seed)

    @property
    def is_exact(self) -> bool:
        return self.kind == 'exact'


@dataclass
class SampledHistogram:
    """Counts keyed by outcome tuples in ``bit_names`` order, plus discarded shots."""

    bit_names: Tuple[str, ...]
    counts: Counter = field(default_factory=Counter)
    discarded: int = 0

    @property
    def shots(self) -> int:
        return sum(self.counts.values()) + self.discarded

    def merge(self, other: 'SampledHistogram') -> 'SampledHistogram':
        if other.bit_names != self.bit_names:
            raise InvalidArgumentError("cannot merge histograms over different bits",
                                       field="bit_names")
        return SampledHistogram(self.bit_names, self.counts + other.counts,
                                self.discarded + other.discarded)

    def records(self) -> Iterator[Tuple[Dict[str, int], int]]:
        for key in sorted(self.counts):
            yield dict(zip(self.bit_names, key)), self.counts[key]

    def as_bitstrings(self) -> Dict[str, int]:
        return {''.join(str(b) for b in key): self.counts[key] for key in sorted(self.counts)}


def map_chunks(work: Callable[[T], R], chunks: Sequence[T], workers: int = 1) -> List[R]:
    """Apply ``work`` to every chunk, on a thread pool when ``workers`` > 1.

    Results come back in chunk order, so merging them does not depend on
    which worker finished first.
    """
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise InvalidArgumentError("workers must be a positive integer", field="workers",
                                   value=workers)
    if workers == 1 or len(chunks) < 2:
        return [work(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
        return list(pool.map(work, chunks))


def _chunk_generators(seed: int, shots: int,
                      chunk_size: int) -> Iterator[Tuple[int, np.random.Generator]]:
    """Yield ``(chunk_shots, generator)``; chunk k uses its own Philox stream."""
    chunk_count = -(-shots // chunk_size)
    for k in range(chunk_count):
        size = min(chunk_size, shots - k * chunk_size)
        sequence = np.random.SeedSequence(seed, spawn_key=(k,))
        yield size, np.random.Generator(np.random.Philox(sequence))


def _tree_depth(node: Optional[_Node]) -> int:
    if node is None or isinstance(node, _Leaf):
        return 0
    return 1 + max(_tree_depth(node.zero), _tree_depth(node.one))


def _sample_leaf(node: _Node, uniforms: np.ndarray) -> _Leaf:
    level = 0
    while isinstance(node, _Split):
        # Zero-probability children are absent; fall through to the sibling.
        take_one = uniforms[level] >= 1 - node.p_one
        child = node.one if take_one else node.zero
        node = child if child is not None else (node.zero if take_one else node.one)
        level += 1
    return node


@log_duration("sampled run")
def run_sampled(circuit: Circuit, initial: StateVector, shots: int, seed: int,
                chunk_size: int = Config.SAMPLE_CHUNK_SIZE,
                workers: int = Config.WORKERS) -> SampledHistogram:
    """Sample ``shots`` executions; post-selection failures count as discarded.

    Chunks may run on ``workers`` threads; the counts are the same either way.
    """
    _check_initial(circuit, initial)
    mode = ExecutionMode.sampled(shots, seed)
    tree = _build_tree(circuit, 0, initial, {})
    width = max(_tree_depth(tree), 1)

    def sample_chunk(job: Tuple[int, np.random.Generator]) -> SampledHistogram:
        size, rng = job
        chunk = SampledHistogram(circuit.classical_bits)
        for row in rng.random((size, width)):
            leaf = _sample_leaf(tree, row)
            if leaf.accepted:
                chunk.counts[tuple(leaf.record[bit] for bit in circuit.classical_bits)] += 1
            else:
                chunk.discarded += 1
        return chunk

    jobs = list(_chunk_generators(mode.seed, mode.shots, chunk_size))
    histogram = SampledHistogram(circuit.classical_bits)
    for chunk in map_chunks(sample_chunk, jobs, workers):
        histogram = histogram.merge(chunk)
    logger.info(f"Sampled {shots} shots (seed {seed}), discarded {histogram.discarded}")
    return histogram


def sample_categorical(weights: Sequence[float], shots: int, seed: int,
                       chunk_size: int = Config.SAMPLE_CHUNK_SIZE) -> List[int]:
    """Per-outcome counts for ``shots`` draws from ``weights`` (summing to <= 1).

    The leftover mass ``1 - sum(weights)`` is returned as a final extra
    entry so callers can treat it as discarded.
    """
    mode = ExecutionMode.sampled(shots, seed)
    edges = np.cumsum(np.asarray(weights, dtype=float))
    counts = np.zeros(len(edges) + 1, dtype=int)
    for size, rng in _chunk_generators(mode.seed, mode.shots, chunk_size):
        picks = np.searchsorted(edges, rng.random(size), side='right')
        counts += np.bincount(picks, minlength=len(edges) + 1)[:len(edges) + 1]
    return [int(c) for c in counts]
