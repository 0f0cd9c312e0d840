"""
Parity-measurement schemes and the pigeonhole experiment.

Four ways to measure the parity of two data qubits are provided:

* ``direct`` applies the two-qubit parity projectors,
* ``oracle`` copies both qubits into an oracle qubit with two CNOTs,
* ``distillation`` consumes a shared Bell pair, measures both ancillas and
  XORs the two bits on a classical evaluator,
* ``teleported`` feeds the oracle through teleported CNOTs so that every
  post-setup quantum operation is local to one lab.

The circuit-backed schemes are built by :func:`build_parity_circuit`. Data
qubits keep indices ``0..n-1`` and ancillas are appended after them.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from itertools import product
from math import sqrt
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config, ExperimentConstants, SimulationConstants
from exceptions import CheckFailedError, InvalidArgumentError
from services.circuits import (Circuit, CircuitBuilder, ExecutionMode, apply_gates,
                               enumerate_branches, run_sampled, sample_categorical)
from services.qcore import (Y_BASIS_ROTATION, StateVector, apply_projector, apply_unitary,
                            extract_subsystem, fidelity,
                            inner_product, make_basis_state, make_named_state,
                            parity_projectors, random_state, standard_gate, tensor,
                            y_projectors)
from utils.logging_utils import log_duration
from utils.validators import pair_name

logger = logging.getLogger(__name__)

ORACLE_SITE = ExperimentConstants.ORACLE_SITE
Y_OUTCOMES = ('+', '-')


class ParityScheme(str, Enum):
    DIRECT = 'direct'
    ORACLE = 'oracle'
    DISTILLATION = 'distillation'
    TELEPORTED = 'teleported'


class ParityLabel(str, Enum):
    SAME = 'same'
    DIFF = 'diff'

    @classmethod
    def from_bit(cls, bit: int) -> 'ParityLabel':
        return cls.DIFF if bit else cls.SAME


class OracleHost(str, Enum):
    SEPARATE = 'separate'
    ALICE = 'alice'


CIRCUIT_SCHEMES = (ParityScheme.ORACLE, ParityScheme.DISTILLATION, ParityScheme.TELEPORTED)


@dataclass(frozen=True)
class ParityCircuit:
    """A parity scheme laid out as a circuit, with its bookkeeping."""

    scheme: ParityScheme
    circuit: Circuit
    data_qubits: Tuple[int, ...]
    pair: Tuple[int, int]
    ancillas: Tuple[int, ...]
    oracle: Optional[int]
    parity_bit: str
    setup_length: int
    ownership: Mapping[int, str]
    oracle_host: OracleHost = OracleHost.SEPARATE
    y_bits: Tuple[str, ...] = ()

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    def initial_state(self, data_state: StateVector) -> StateVector:
        """``data_state`` with every ancilla appended in ``|0>``."""
        if data_state.num_qubits != len(self.data_qubits):
            raise InvalidArgumentError(
                f"expected a {len(self.data_qubits)}-qubit data state, "
                f"got {data_state.num_qubits}", field="data_state",
            )
        if not self.ancillas:
            return data_state
        return data_state.tensor(make_basis_state(len(self.ancillas), '0' * len(self.ancillas)))


@dataclass(frozen=True)
class ParityResult:
    label: ParityLabel
    probability: float
    post_state: Optional[StateVector]
    transcripts: Tuple[Mapping[str, int], ...] = ()

    @property
    def transcript(self) -> Mapping[str, int]:
        """Record of the most probable contributing branch."""
        return self.transcripts[0] if self.transcripts else {}


# ---------------------------------------------------------------------------
# Circuit construction
# ---------------------------------------------------------------------------

def _coerce_scheme(scheme: Union[str, ParityScheme]) -> ParityScheme:
    try:
        return ParityScheme(scheme)
    except ValueError:
        raise InvalidArgumentError(f"unknown parity scheme {scheme!r}",
                                   field="scheme", value=scheme) from None


def _coerce_host(host: Union[str, OracleHost]) -> OracleHost:
    try:
        return OracleHost(host)
    except ValueError:
        raise InvalidArgumentError(f"unknown oracle host {host!r}",
                                   field="oracle_host", value=host) from None


def _check_pair(pair: Sequence[int], num_data: int) -> Tuple[int, int]:
    pair = tuple(pair)
    if (len(pair) != 2 or pair[0] == pair[1]
            or not all(0 <= q < num_data for q in pair)):
        raise InvalidArgumentError(f"invalid data pair {pair!r} for {num_data} data qubits",
                                   field="pair", value=pair)
    return pair


def _data_sites(num_data: int) -> Dict[int, str]:
    if not 1 <= num_data <= len(ExperimentConstants.DATA_SITES):
        raise InvalidArgumentError(
            f"between 1 and {len(ExperimentConstants.DATA_SITES)} data qubits are supported",
            field="num_data", value=num_data,
        )
    return {q: ExperimentConstants.DATA_SITES[q] for q in range(num_data)}


def _teleport_cnot(builder: CircuitBuilder, control: int, near: int, far: int,
                   target: int, drop_conditional_z: bool) -> None:
    """One-ebit remote CNOT(control -> target) through the pair ``(near, far)``."""
    builder.cnot(control, near)
    m1 = builder.measure(near)
    builder.cond('x', far, m1)
    builder.cnot(far, target)
    builder.h(far)
    m2 = builder.measure(far)
    if not drop_conditional_z:
        builder.cond('z', control, m2)


def _assemble(scheme: ParityScheme, pair: Tuple[int, int], num_data: int,
              oracle_host: OracleHost, drop_conditional_z: bool,
              prepare_plus: bool, measure_y: bool) -> ParityCircuit:
    sites = _data_sites(num_data)
    first, second = pair
    n = num_data
    ownership = dict(sites)

    if scheme == ParityScheme.ORACLE:
        ancillas, oracle = (n,), n
        ownership[n] = ORACLE_SITE
    elif scheme == ParityScheme.DISTILLATION:
        ancillas, oracle = (n, n + 1), None
        ownership.update({n: sites[first], n + 1: sites[second]})
    elif oracle_host == OracleHost.SEPARATE:
        ancillas, oracle = (n, n + 1, n + 2, n + 3, n + 4), n
        ownership.update({n: ORACLE_SITE, n + 1: sites[second], n + 2: ORACLE_SITE,
                          n + 3: sites[first], n + 4: ORACLE_SITE})
    else:
        ancillas, oracle = (n, n + 1, n + 2), n
        ownership.update({n: sites[first], n + 1: sites[second], n + 2: sites[first]})

    builder = CircuitBuilder(n + len(ancillas))

    # Pre-shared Bell pairs.
    if scheme == ParityScheme.DISTILLATION:
        builder.h(n).cnot(n, n + 1)
    elif scheme == ParityScheme.TELEPORTED:
        builder.h(n + 1).cnot(n + 1, n + 2)
        if oracle_host == OracleHost.SEPARATE:
            builder.h(n + 3).cnot(n + 3, n + 4)
    setup_length = len(builder)

    if prepare_plus:
        for qubit in range(n):
            builder.h(qubit)

    if scheme == ParityScheme.ORACLE:
        builder.cnot(first, oracle).cnot(second, oracle)
        parity_bit = builder.measure(oracle)
    elif scheme == ParityScheme.DISTILLATION:
        builder.cnot(first, n).cnot(second, n + 1)
        left = builder.measure(n)
        right = builder.measure(n + 1)
        parity_bit = builder.xor(left, right)
    elif oracle_host == OracleHost.SEPARATE:
        _teleport_cnot(builder, second, n + 1, n + 2, oracle, drop_conditional_z)
        _teleport_cnot(builder, first, n + 3, n + 4, oracle, drop_conditional_z)
        parity_bit = builder.measure(oracle)
    else:
        _teleport_cnot(builder, second, n + 1, n + 2, oracle, drop_conditional_z)
        builder.cnot(first, oracle)
        parity_bit = builder.measure(oracle)

    y_bits: List[str] = []
    if measure_y:
        for qubit in range(n):
            builder.rx(qubit, Y_BASIS_ROTATION)
            y_bits.append(builder.measure(qubit))

    return ParityCircuit(
        scheme=scheme,
        circuit=builder.build(),
        data_qubits=tuple(range(n)),
        pair=pair,
        ancillas=ancillas,
        oracle=oracle,
        parity_bit=parity_bit,
        setup_length=setup_length,
        ownership=ownership,
        oracle_host=oracle_host,
        y_bits=tuple(y_bits),
    )


def build_parity_circuit(scheme: Union[str, ParityScheme], pair: Sequence[int] = (0, 1),
                         num_data: int = 2,
                         oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE,
                         drop_conditional_z: bool = False) -> Optional[ParityCircuit]:
    """Circuit for a parity measurement of ``pair``; ``None`` for ``direct``.

    ``drop_conditional_z`` removes the Z corrections of the teleported
    scheme and exists only as a negative control for the equivalence suite.
    """
    scheme = _coerce_scheme(scheme)
    if scheme == ParityScheme.DIRECT:
        return None
    return _assemble(scheme, _check_pair(pair, num_data), num_data, _coerce_host(oracle_host),
                     drop_conditional_z, prepare_plus=False, measure_y=False)


def build_pigeonhole_circuit(scheme: Union[str, ParityScheme], pair: Sequence[int],
                             oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE,
                             drop_conditional_z: bool = False) -> ParityCircuit:
    """Full three-qubit experiment from ``|0...0>``.

    Bell-pair setup, ``H`` on each data qubit, the parity scheme on
    ``pair``, then ``Rx(pi/2)`` and a Z measurement per data qubit, where
    outcome 0 means Y = +.
    """
    scheme = _coerce_scheme(scheme)
    if scheme == ParityScheme.DIRECT:
        raise InvalidArgumentError("the direct scheme has no circuit", field="scheme",
                                   value=scheme.value)
    return _assemble(scheme, _check_pair(pair, 3), 3, _coerce_host(oracle_host),
                     drop_conditional_z, prepare_plus=True, measure_y=True)


# ---------------------------------------------------------------------------
# Running a parity measurement
# ---------------------------------------------------------------------------

def _label_branches(scheme: ParityScheme, data_state: StateVector, pair: Tuple[int, int],
                    oracle_host: OracleHost, drop_conditional_z: bool
                    ) -> Dict[ParityLabel, List[Tuple[float, StateVector, Mapping[str, int]]]]:
    """Exact ``(probability, data post-state, record)`` triples grouped by label."""
    grouped: Dict[ParityLabel, list] = defaultdict(list)
    if scheme == ParityScheme.DIRECT:
        for label, projector in zip(ParityLabel, parity_projectors()):
            result = apply_projector(data_state, projector, pair)
            if result.post_state is not None:
                grouped[label].append((result.probability, result.post_state, {}))
        return grouped

    layout = _assemble(scheme, pair, data_state.num_qubits, oracle_host, drop_conditional_z,
                       prepare_plus=False, measure_y=False)
    for branch in enumerate_branches(layout.circuit, layout.initial_state(data_state)):
        label = ParityLabel.from_bit(branch.outcome_record[layout.parity_bit])
        post = extract_subsystem(branch.final_state, layout.data_qubits)
        grouped[label].append((branch.probability, post, dict(branch.outcome_record)))
    return grouped


def run_parity(scheme: Union[str, ParityScheme], data_state: StateVector,
               mode: Optional[ExecutionMode] = None, pair: Sequence[int] = (0, 1),
               oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE,
               drop_conditional_z: bool = False
               ) -> Union[List[ParityResult], Dict[str, int]]:
    """Measure the parity of ``pair`` in ``data_state``.

    Exact mode returns one :class:`ParityResult` per label (``same`` first);
    a label that cannot occur has probability 0 and no post-state. Sampled
    mode returns ``{'same': count, 'diff': count}``.
    """
    scheme = _coerce_scheme(scheme)
    host = _coerce_host(oracle_host)
    mode = mode or ExecutionMode.exact()
    pair = _check_pair(pair, data_state.num_qubits)

    if not mode.is_exact:
        if scheme == ParityScheme.DIRECT:
            weights = [apply_projector(data_state, p, pair).probability
                       for p in parity_projectors()]
            same, diff, _ = sample_categorical(weights, mode.shots, mode.seed)
            return {ParityLabel.SAME.value: same, ParityLabel.DIFF.value: diff}
        layout = _assemble(scheme, pair, data_state.num_qubits, host, drop_conditional_z,
                           prepare_plus=False, measure_y=False)
        histogram = run_sampled(layout.circuit, layout.initial_state(data_state),
                                mode.shots, mode.seed)
        position = layout.circuit.classical_bits.index(layout.parity_bit)
        counts = {label.value: 0 for label in ParityLabel}
        for key, count in histogram.counts.items():
            counts[ParityLabel.from_bit(key[position]).value] += count
        return counts

    grouped = _label_branches(scheme, data_state, pair, host, drop_conditional_z)
    results = []
    for label in ParityLabel:
        entries = sorted(grouped.get(label, []), key=lambda entry: -entry[0])
        probability = float(sum(entry[0] for entry in entries))
        post = entries[0][1] if entries else None
        results.append(ParityResult(label, probability, post,
                                    tuple(entry[2] for entry in entries)))
    return results


# ---------------------------------------------------------------------------
# Identities and equivalence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    description: str
    value: float
    expected: float
    tolerance: float = SimulationConstants.EXACT_TOLERANCE

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tolerance

    def to_dict(self) -> dict:
        return {'name': self.name, 'description': self.description,
                'value': round_report(self.value), 'expected': self.expected,
                'tolerance': self.tolerance, 'pass': self.passed}


def round_report(value: float) -> float:
    """Round an exact-mode number for stable reporting (no negative zero)."""
    return round(float(value), SimulationConstants.REPORT_DECIMALS) + 0.0


def oracle_state_check() -> float:
    """Fidelity of the pre-measurement oracle state on ``|++0>`` with
    ``(|Phi+>|0> + |Psi+>|1>)/sqrt(2)``."""
    layout = build_parity_circuit(ParityScheme.ORACLE)
    plus = make_named_state('plus')
    initial = layout.initial_state(tensor(plus, plus))
    # Everything before the oracle measurement is unitary.
    before_measurement = apply_gates(layout.circuit, initial, stop=len(layout.circuit) - 1)
    zero, one = make_basis_state(1, '0'), make_basis_state(1, '1')
    target = StateVector.from_amplitudes(
        (make_named_state('phi_plus').tensor(zero).amps
         + make_named_state('psi_plus').tensor(one).amps) / sqrt(2))
    return fidelity(before_measurement, target)


def amplitude_identities() -> List[IdentityCheck]:
    """The closed-form identities behind the pigeonhole argument."""
    y_plus, _ = y_projectors()
    same, _ = parity_projectors()
    plus, plus_i = make_named_state('plus'), make_named_state('plus_i')

    both_plus_y = apply_projector(make_named_state('phi_plus'), y_plus.tensor(y_plus), (0, 1))

    projected = apply_projector(tensor(plus, plus), same, (0, 1))
    overlap = abs(inner_product(tensor(plus_i, plus_i), projected.post_state)) \
        * sqrt(projected.probability)

    rotation = standard_gate('rx', -Y_BASIS_ROTATION).matrix
    zero_proj = np.diag([1, 0])
    decomposed = rotation @ zero_proj @ rotation.conj().T
    decomposition_error = float(np.max(np.abs(decomposed - y_plus.matrix)))

    return [
        IdentityCheck('bell_y_plus', '|(Y+ x Y+)|Phi+>|^2: Y+Y+ never follows a "same" result',
                      both_plus_y.probability, 0.0),
        IdentityCheck('same_amplitude', '|<+i,+i| P_same |++>|: the post-selected amplitude vanishes',
                      overlap, 0.0),
        IdentityCheck('oracle_state', 'fidelity of the two-CNOT oracle state on |++0>',
                      oracle_state_check(), 1.0),
        IdentityCheck('y_rotation', 'max |Rx(-pi/2)|0><0|Rx(pi/2) - P_Y+|',
                      decomposition_error, 0.0),
    ]


@dataclass(frozen=True)
class SchemeDeviation:
    scheme: ParityScheme
    states: int
    max_probability_deviation: float
    max_state_deviation: float
    tolerance: float = SimulationConstants.EQUIVALENCE_TOLERANCE

    @property
    def max_deviation(self) -> float:
        return max(self.max_probability_deviation, self.max_state_deviation)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def to_dict(self) -> dict:
        return {'scheme': self.scheme.value, 'states': self.states,
                'max_probability_deviation': float(self.max_probability_deviation),
                'max_state_deviation': float(self.max_state_deviation),
                'max_deviation': float(self.max_deviation),
                'tolerance': self.tolerance, 'pass': self.passed}


def _deviation(reference: Dict[ParityLabel, list], candidate: Dict[ParityLabel, list]
               ) -> Tuple[float, float]:
    prob_dev, state_dev = 0.0, 0.0
    for label in ParityLabel:
        ref_entries = reference.get(label, [])
        cand_entries = candidate.get(label, [])
        ref_p = sum(entry[0] for entry in ref_entries)
        cand_p = sum(entry[0] for entry in cand_entries)
        prob_dev = max(prob_dev, abs(ref_p - cand_p))
        if not ref_entries:
            continue
        ref_state = ref_entries[0][1]
        for _, state, _ in cand_entries:
            state_dev = max(state_dev, 1 - abs(inner_product(ref_state, state)))
    return prob_dev, state_dev


@log_duration("channel equivalence suite")
def channel_equivalence(schemes: Sequence[Union[str, ParityScheme]] = CIRCUIT_SCHEMES,
                        states: int = Config.EQUIVALENCE_STATES,
                        seed: int = Config.EQUIVALENCE_SEED,
                        oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE,
                        drop_conditional_z: bool = False) -> List[SchemeDeviation]:
    """Compare each scheme with ``direct`` on ``states`` seeded random data states.

    Every branch's data post-state is compared, not only the label
    aggregate.
    """
    host = _coerce_host(oracle_host)
    rng = np.random.default_rng(seed)
    samples = [random_state(2, rng) for _ in range(states)]
    references = [_label_branches(ParityScheme.DIRECT, s, (0, 1), host, False) for s in samples]

    report = []
    for scheme in (_coerce_scheme(s) for s in schemes):
        prob_dev, state_dev = 0.0, 0.0
        for sample, reference in zip(samples, references):
            candidate = _label_branches(scheme, sample, (0, 1), host, drop_conditional_z)
            p, s = _deviation(reference, candidate)
            prob_dev, state_dev = max(prob_dev, p), max(state_dev, s)
        deviation = SchemeDeviation(scheme, states, prob_dev, state_dev)
        logger.info(f"Equivalence {scheme.value}: max deviation {deviation.max_deviation:.3e}")
        report.append(deviation)
    return report


# ---------------------------------------------------------------------------
# Pigeonhole experiment
# ---------------------------------------------------------------------------

JointKey = Tuple[str, str, str, str]
JOINT_KEYS: Tuple[JointKey, ...] = tuple(
    (label.value, ya, yb, yc)
    for label in ParityLabel for ya, yb, yc in product(Y_OUTCOMES, repeat=3)
)


@dataclass(frozen=True)
class PigeonholeStats:
    """Joint statistics of (parity label, y_a, y_b, y_c).

    ``joint`` holds probabilities in exact mode and counts in sampled mode.
    """

    scheme: ParityScheme
    pair: Tuple[int, int]
    mode: ExecutionMode
    joint: Mapping[JointKey, float]
    discarded: float = 0.0
    oracle_host: OracleHost = OracleHost.SEPARATE

    @property
    def total(self) -> float:
        return float(sum(self.joint.values()))

    def probability(self, key: JointKey) -> float:
        total = self.total
        return self.joint.get(key, 0) / total if total else 0.0

    @property
    def all_plus(self) -> Dict[str, float]:
        return {label.value: self.joint.get((label.value, '+', '+', '+'), 0)
                for label in ParityLabel}

    @property
    def success_probability(self) -> float:
        total = self.total
        return sum(self.all_plus.values()) / total if total else 0.0

    @property
    def conditional(self) -> Optional[Dict[str, float]]:
        """Parity distribution given all three Y outcomes are +."""
        hits = self.all_plus
        mass = sum(hits.values())
        if mass == 0:
            return None
        return {label: value / mass for label, value in hits.items()}

    @property
    def forbidden_mass(self) -> float:
        """Weight of ``same`` with both measured qubits found Y = +."""
        first, second = self.pair
        return sum(value for key, value in self.joint.items()
                   if key[0] == ParityLabel.SAME.value
                   and key[1 + first] == '+' and key[1 + second] == '+')

    def to_dict(self) -> dict:
        exact = self.mode.is_exact
        value_key = 'p' if exact else 'count'
        fmt = round_report if exact else int
        joint = [{'parity': k[0], 'ya': k[1], 'yb': k[2], 'yc': k[3],
                  value_key: fmt(self.joint.get(k, 0))} for k in JOINT_KEYS]
        conditional = self.conditional
        doc = {
            'scheme': self.scheme.value,
            'pair': pair_name(self.pair),
            'mode': self.mode.kind,
            'joint': joint,
            'conditional': ({k: round_report(v) for k, v in conditional.items()}
                            if conditional is not None else None),
            'success_probability': round_report(self.success_probability),
            'discarded': fmt(self.discarded),
        }
        if not exact:
            doc['shots'] = self.mode.shots
            doc['seed'] = self.mode.seed
        if self.scheme == ParityScheme.TELEPORTED:
            doc['oracle_host'] = self.oracle_host.value
        return doc


def _y_outcome(bit: int) -> str:
    return Y_OUTCOMES[bit]


def _direct_joint(pair: Tuple[int, int]) -> Dict[JointKey, float]:
    plus = make_named_state('plus')
    data = tensor(plus, plus, plus)
    rotation = standard_gate('rx', Y_BASIS_ROTATION)
    joint: Dict[JointKey, float] = {key: 0.0 for key in JOINT_KEYS}
    for label, projector in zip(ParityLabel, parity_projectors()):
        result = apply_projector(data, projector, pair)
        if result.post_state is None:
            continue
        rotated = result.post_state
        for qubit in range(3):
            rotated = apply_unitary(rotated, rotation, (qubit,))
        for index, p in enumerate(rotated.probabilities()):
            bits = [(index >> (2 - q)) & 1 for q in range(3)]
            joint[(label.value, *map(_y_outcome, bits))] += result.probability * float(p)
    return joint


def pigeonhole_experiment(scheme: Union[str, ParityScheme],
                          pair: Sequence[int] = (0, 1),
                          mode: Optional[ExecutionMode] = None,
                          oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE
                          ) -> PigeonholeStats:
    """Prepare ``|+++>``, measure the parity of ``pair``, then Y on every qubit."""
    scheme = _coerce_scheme(scheme)
    host = _coerce_host(oracle_host)
    pair = _check_pair(pair, 3)
    mode = mode or ExecutionMode.exact()

    if scheme == ParityScheme.DIRECT:
        exact_joint = _direct_joint(pair)
        if mode.is_exact:
            return PigeonholeStats(scheme, pair, mode, exact_joint,
                                   max(0.0, 1.0 - sum(exact_joint.values())), host)
        counts = sample_categorical([exact_joint[k] for k in JOINT_KEYS],
                                    mode.shots, mode.seed)
        joint = dict(zip(JOINT_KEYS, counts[:-1]))
        return PigeonholeStats(scheme, pair, mode, joint, counts[-1], host)

    layout = build_pigeonhole_circuit(scheme, pair, host)
    initial = make_basis_state(layout.num_qubits, '0' * layout.num_qubits)

    def key_for(record: Mapping[str, int]) -> JointKey:
        label = ParityLabel.from_bit(record[layout.parity_bit]).value
        return (label, *(_y_outcome(record[bit]) for bit in layout.y_bits))

    joint: Dict[JointKey, float] = {key: 0 for key in JOINT_KEYS}
    if mode.is_exact:
        for branch in enumerate_branches(layout.circuit, initial):
            joint[key_for(branch.outcome_record)] += branch.probability
        discarded = max(0.0, 1.0 - sum(joint.values()))
    else:
        histogram = run_sampled(layout.circuit, initial, mode.shots, mode.seed)
        for record, count in histogram.records():
            joint[key_for(record)] += count
        discarded = histogram.discarded
    stats = PigeonholeStats(scheme, pair, mode, joint, discarded, host)
    logger.debug(f"Pigeonhole {scheme.value} {pair_name(pair)} ({mode.kind}): "
                 f"success {stats.success_probability:.6f}")
    return stats


@dataclass(frozen=True)
class CounterfactualRow:
    pair: Tuple[int, int]
    stats: PigeonholeStats

    @property
    def passed(self) -> bool:
        conditional = self.stats.conditional
        return (conditional is not None
                and abs(conditional[ParityLabel.DIFF.value] - 1.0)
                <= SimulationConstants.EXACT_TOLERANCE)

    def to_dict(self) -> dict:
        conditional = self.stats.conditional
        return {
            'pair': pair_name(self.pair),
            'conditional': ({k: round_report(v) for k, v in conditional.items()}
                            if conditional is not None else None),
            'success_probability': round_report(self.stats.success_probability),
            'pass': self.passed,
        }


def counterfactual_table(scheme: Union[str, ParityScheme] = ParityScheme.DISTILLATION,
                         oracle_host: Union[str, OracleHost] = OracleHost.SEPARATE,
                         check: bool = True) -> List[CounterfactualRow]:
    """Exact conditional parity given all-Y-plus, for each of the three pairs.

    With ``check`` a pair whose conditional is not {diff: 1} raises
    :class:`CheckFailedError`.
    """
    rows = [CounterfactualRow(pair, pigeonhole_experiment(scheme, pair, ExecutionMode.exact(),
                                                          oracle_host))
            for pair in ExperimentConstants.PAIRS.values()]
    for row in rows:
        if check and not row.passed:
            conditional = row.stats.conditional or {}
            raise CheckFailedError(
                f"pair {pair_name(row.pair)}: P(diff | all +) is not 1",
                check="counterfactual",
                value=conditional.get(ParityLabel.DIFF.value),
                tolerance=SimulationConstants.EXACT_TOLERANCE,
            )
    return rows
