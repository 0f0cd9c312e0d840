"""
Site-annotated execution and the locality audit.

Sites are annotations over one state vector: the simulation itself is
unchanged, but every instruction is attributed to the lab(s) whose qubits
it touches, and every classical bit used away from the lab that produced
it is logged as a one-bit message. Classical XOR and post-selection run at
a site-neutral ``Evaluator`` node.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from config import ExperimentConstants
from exceptions import InvalidArgumentError, LocalityViolationError, NotApplicableError
from services.circuits import (Branch, Circuit, ExecutionMode, InstructionKind,
                               SampledHistogram, enumerate_branches, run_sampled)
from services.qcore import StateVector

logger = logging.getLogger(__name__)

EVALUATOR = ExperimentConstants.EVALUATOR
ORACLE_SITE = ExperimentConstants.ORACLE_SITE


@dataclass(frozen=True)
class Site:
    name: str
    owned_qubits: FrozenSet[int]


class EventKind(str, Enum):
    SETUP_ENTANGLEMENT = 'setup_entanglement'
    LOCAL_GATE = 'local_gate'
    LOCAL_MEASURE = 'local_measure'
    CLASSICAL_MESSAGE = 'classical_message'
    CLASSICAL_GATE = 'classical_gate'
    POSTSELECT = 'postselect'
    NONLOCAL_GATE = 'nonlocal_gate'


QUANTUM_KINDS = (EventKind.LOCAL_GATE, EventKind.LOCAL_MEASURE, EventKind.NONLOCAL_GATE)


@dataclass(frozen=True)
class TraceEvent:
    """One trace record; a message's ``sites`` are ``(sender, receiver)``."""

    step: int
    kind: EventKind
    sites: Tuple[str, ...]
    payload: str
    bits: int = 0

    def export(self) -> str:
        if self.kind == EventKind.CLASSICAL_MESSAGE:
            where = '->'.join(self.sites)
        else:
            where = ','.join(self.sites)
        return f'step={self.step} kind={self.kind.value} site={where} payload="{self.payload}"'


@dataclass(frozen=True)
class LoccTrace:
    """Ordered events; steps below ``setup_boundary`` belong to the setup phase."""

    events: Tuple[TraceEvent, ...]
    setup_boundary: int

    def __post_init__(self):
        previous = None
        for event in self.events:
            if previous is not None and event.step <= previous:
                raise InvalidArgumentError("trace steps must strictly increase",
                                           field="events", value=event.step)
            previous = event.step
            if event.kind == EventKind.CLASSICAL_MESSAGE and event.bits != 1:
                raise InvalidArgumentError("a classical message carries exactly one bit",
                                           field="events", value=event.bits)
            if event.kind == EventKind.SETUP_ENTANGLEMENT and event.step >= self.setup_boundary:
                raise InvalidArgumentError("setup event after the setup boundary",
                                           field="events", value=event.step)

    @property
    def sites(self) -> FrozenSet[str]:
        return frozenset(site for event in self.events for site in event.sites)

    def post_setup(self) -> List[TraceEvent]:
        return [event for event in self.events if event.step >= self.setup_boundary]

    def export_lines(self) -> List[str]:
        return [event.export() for event in self.events]

    def export(self) -> str:
        return ''.join(line + '\n' for line in self.export_lines())

    def to_dict(self) -> dict:
        return {
            'setup_boundary': self.setup_boundary,
            'events': [{'step': e.step, 'kind': e.kind.value, 'sites': list(e.sites),
                        'payload': e.payload, 'bits': e.bits} for e in self.events],
        }


@dataclass(frozen=True)
class AnnotatedCircuit:
    circuit: Circuit
    sites: Tuple[Site, ...]
    setup_length: int
    instruction_sites: Tuple[Tuple[str, ...], ...]
    nonlocal_instructions: Tuple[int, ...] = ()

    @property
    def owner(self) -> Dict[int, str]:
        return {q: site.name for site in self.sites for q in site.owned_qubits}


def _site_order(names) -> List[str]:
    order = {name: i for i, name in enumerate(
        (*ExperimentConstants.DATA_SITES, ORACLE_SITE))}
    return sorted(set(names), key=lambda name: (order.get(name, len(order)), name))


def assign_sites(circuit: Circuit, ownership: Mapping[int, Union[str, Site]], setup_len: int,
                 strict: bool = True) -> AnnotatedCircuit:
    """Attribute every instruction to sites.

    With ``strict`` a post-setup gate spanning two sites raises
    :class:`LocalityViolationError`; otherwise it is recorded and later
    reported as a ``nonlocal_gate`` event.
    """
    owner = {int(q): (site.name if isinstance(site, Site) else str(site))
             for q, site in ownership.items()}
    if set(owner) != set(range(circuit.num_qubits)):
        missing = sorted(set(range(circuit.num_qubits)) - set(owner))
        raise InvalidArgumentError(
            f"ownership must cover exactly qubits 0..{circuit.num_qubits - 1}"
            + (f" (missing {missing})" if missing else ""),
            field="ownership",
        )
    if not 0 <= setup_len <= len(circuit.body):
        raise InvalidArgumentError("setup length out of range", field="setup_len",
                                   value=setup_len)

    instruction_sites = []
    nonlocal_instructions = []
    for index, instr in enumerate(circuit.body):
        if index < setup_len and instr.kind != InstructionKind.GATE:
            raise InvalidArgumentError(
                f"setup phase may only contain gates, found '{instr}'", field="setup_len",
                value=setup_len)
        if instr.is_quantum:
            sites = tuple(dict.fromkeys(owner[q] for q in instr.qubits))
        else:
            sites = (EVALUATOR,)
        if index >= setup_len and len(sites) > 1:
            if strict:
                raise LocalityViolationError(
                    f"instruction {index} '{instr}' spans sites {', '.join(sites)}",
                    instruction_index=index, sites=sites,
                )
            nonlocal_instructions.append(index)
        instruction_sites.append(sites)

    grouped: Dict[str, set] = {}
    for qubit, name in owner.items():
        grouped.setdefault(name, set()).add(qubit)
    sites = tuple(Site(name, frozenset(grouped[name])) for name in _site_order(grouped))
    return AnnotatedCircuit(circuit, sites, setup_len, tuple(instruction_sites),
                            tuple(nonlocal_instructions))


def build_trace(annotated: AnnotatedCircuit) -> LoccTrace:
    """Structural trace of ``annotated``: one event per instruction plus messages."""
    events: List[TraceEvent] = []
    producer: Dict[str, str] = {}
    delivered = set()

    def emit(kind: EventKind, sites: Sequence[str], payload: str, bits: int = 0) -> None:
        events.append(TraceEvent(len(events), kind, tuple(sites), payload, bits))

    for index, instr in enumerate(annotated.circuit.body):
        sites = annotated.instruction_sites[index]
        if index < annotated.setup_length:
            emit(EventKind.SETUP_ENTANGLEMENT, sites, str(instr))
            continue
        consumer = sites[0]
        for bit in instr.reads:
            source = producer[bit]
            if source != consumer and (bit, consumer) not in delivered:
                delivered.add((bit, consumer))
                emit(EventKind.CLASSICAL_MESSAGE, (source, consumer), bit, bits=1)

        if instr.kind == InstructionKind.MEASURE:
            kind = EventKind.LOCAL_MEASURE
        elif instr.kind == InstructionKind.CLASSICAL_XOR:
            kind = EventKind.CLASSICAL_GATE
        elif instr.kind == InstructionKind.POSTSELECT:
            kind = EventKind.POSTSELECT
        elif len(sites) > 1:
            kind = EventKind.NONLOCAL_GATE
        else:
            kind = EventKind.LOCAL_GATE
        emit(kind, sites, str(instr))
        if instr.writes is not None:
            producer[instr.writes] = consumer

    boundary = sum(1 for e in events if e.kind == EventKind.SETUP_ENTANGLEMENT)
    return LoccTrace(tuple(events), boundary)


def execute_locc(annotated: AnnotatedCircuit, initial: StateVector,
                 mode: Optional[ExecutionMode] = None
                 ) -> Tuple[Union[List[Branch], SampledHistogram], LoccTrace]:
    """Run the annotated circuit with the plain engine and return its trace."""
    mode = mode or ExecutionMode.exact()
    if mode.is_exact:
        results = enumerate_branches(annotated.circuit, initial)
    else:
        results = run_sampled(annotated.circuit, initial, mode.shots, mode.seed)
    trace = build_trace(annotated)
    logger.debug(f"LOCC run: {len(trace.events)} events, setup boundary {trace.setup_boundary}")
    return results, trace


@dataclass(frozen=True)
class LocalityReport:
    cross_site_quantum_ops: int
    classical_bits_exchanged: int

    @property
    def passed(self) -> bool:
        return self.cross_site_quantum_ops == 0

    def to_dict(self) -> dict:
        return {'cross_site_quantum_ops': self.cross_site_quantum_ops,
                'classical_bits_exchanged': self.classical_bits_exchanged,
                'pass': self.passed}


def verify_locality(trace: LoccTrace) -> LocalityReport:
    cross_site = 0
    bits = 0
    for event in trace.post_setup():
        if event.kind in QUANTUM_KINDS and len(set(event.sites)) > 1:
            cross_site += 1
        elif event.kind == EventKind.CLASSICAL_MESSAGE:
            bits += event.bits
    return LocalityReport(cross_site, bits)


def causal_order_check(trace: LoccTrace, before: str, after: str,
                       hub: str = ORACLE_SITE) -> bool:
    """True iff every post-setup event touching ``before`` precedes the first
    post-setup event that links ``after`` with ``hub``."""
    missing = [name for name in (before, after, hub) if name not in trace.sites]
    if missing:
        raise NotApplicableError(
            f"trace has no events at {', '.join(missing)}", missing_sites=missing)

    events = trace.post_setup()
    link_step = next((e.step for e in events
                      if after in e.sites and hub in e.sites), None)
    if link_step is None:
        raise NotApplicableError(f"trace never links {after} with {hub}",
                                 missing_sites=[after, hub])
    return all(e.step < link_step for e in events if before in e.sites)
