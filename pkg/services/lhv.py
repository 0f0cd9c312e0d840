"""
Realist models of the pigeonhole experiment.

A hidden assignment gives every qubit pre-existing ``z`` and ``y`` bits
(and optionally a shared ancilla bit ``lambda``). The parity result is
``same`` iff the measured pair's ``z`` bits agree; a Y measurement reads +
iff the (possibly disturbed) ``y`` bit is 0.

Disturbance rules are 16-entry truth tables over ``(z, y, lambda, context)``
encoded as integers: bit ``z<<3 | y<<2 | lambda<<1 | context`` holds the new
``y`` (context 0 = same, 1 = diff). The same table is applied at both
measured sites.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config, SimulationConstants
from exceptions import InvalidArgumentError
from services.circuits import ExecutionMode, map_chunks
from services.protocols import (JOINT_KEYS, JointKey, ParityLabel, ParityScheme,
                                pigeonhole_experiment, round_report)
from utils.logging_utils import log_duration
from utils.validators import pair_name, validate_lambda_bits

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]

# Statistics every model must reproduce, in witness order.
COMPARISON_SET = ('same_plus_plus', 'conditional_diff', 'marginal_ya', 'marginal_yb',
                  'marginal_yc', 'success_probability')

COMPARISON_NOTES = {
    'same_plus_plus': 'P(same and ++ on the measured pair)',
    'conditional_diff': 'P(diff | all three Y = +)',
    'marginal_ya': 'P(y_a = +)',
    'marginal_yb': 'P(y_b = +)',
    'marginal_yc': 'P(y_c = +)',
    'success_probability': 'P(all three Y = +)',
}

SAME, DIFF = 0, 1
MARGINALS = ('marginal_ya', 'marginal_yb', 'marginal_yc')


class HiddenAssignment(NamedTuple):
    a_z: int
    a_y: int
    b_z: int
    b_y: int
    c_z: int
    c_y: int
    lam: Optional[int] = None

    @property
    def z_bits(self) -> Tuple[int, int, int]:
        return self.a_z, self.b_z, self.c_z

    @property
    def y_bits(self) -> Tuple[int, int, int]:
        return self.a_y, self.b_y, self.c_y


def all_assignments(lambda_bits: int = 0) -> List[HiddenAssignment]:
    """Every assignment, uniformly weighted, in lexicographic order."""
    lambdas = (0, 1) if lambda_bits else (None,)
    return [HiddenAssignment(*bits, lam)
            for bits in product((0, 1), repeat=6) for lam in lambdas]


@dataclass(frozen=True)
class DisturbanceRule:
    """Total truth table ``(z, y, lambda, context) -> new y``."""

    table: int

    def __post_init__(self):
        if not 0 <= self.table < 1 << 16:
            raise InvalidArgumentError("a rule table is a 16-bit integer",
                                       field="table", value=self.table)

    @classmethod
    def from_index(cls, index: int, lambda_bits: int) -> 'DisturbanceRule':
        """Decode a scan index; without lambda the 8 bits fill both lambda rows."""
        if not lambda_bits:
            if not 0 <= index < 256:
                raise InvalidArgumentError("without lambda a rule index is below 256",
                                           field="index", value=index)
            return cls(int(_expand_tables(np.array([index]))[0]))
        return cls(index)

    def apply(self, z: int, y: int, lam: Optional[int], context: int) -> int:
        return (self.table >> _row(z, y, lam or 0, context)) & 1


def _row(z, y, lam, context):
    return (z << 3) | (y << 2) | (lam << 1) | context


def _expand_tables(compact: np.ndarray) -> np.ndarray:
    """Spread 8-bit lambda-free tables over the 16-entry layout."""
    full = np.zeros_like(compact, dtype=np.int64)
    for position, (z, y, context) in enumerate(product((0, 1), repeat=3)):
        bit = (compact >> position) & 1
        for lam in (0, 1):
            full |= bit << _row(z, y, lam, context)
    return full


def pigeonhole_contradiction_check(z_bits: Sequence[int]) -> bool:
    """True iff the three bits are pairwise different (never, for bits)."""
    a, b, c = z_bits
    return a != b and b != c and c != a


def _third(pair: Pair) -> int:
    return ({0, 1, 2} - set(pair)).pop()


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def statistics_from_joint(joint: Mapping[JointKey, float],
                          pair: Pair) -> Dict[str, Optional[float]]:
    """Comparison statistics (plus ``diff_all_plus``) of a normalized joint."""
    total = float(sum(joint.values()))
    if total <= 0:
        raise InvalidArgumentError("joint distribution is empty", field="joint")
    first, second = pair

    def mass(predicate) -> float:
        return sum(value for key, value in joint.items() if predicate(key)) / total

    same = ParityLabel.SAME.value
    success = mass(lambda k: k[1:] == ('+', '+', '+'))
    diff_all_plus = mass(lambda k: k[0] != same and k[1:] == ('+', '+', '+'))
    stats: Dict[str, Optional[float]] = {
        'same_plus_plus': mass(lambda k: k[0] == same
                               and k[1 + first] == '+' and k[1 + second] == '+'),
        'conditional_diff': diff_all_plus / success if success > 0 else None,
        'success_probability': success,
        'diff_all_plus': diff_all_plus,
    }
    for qubit, name in enumerate(MARGINALS):
        stats[name] = mass(lambda k, q=qubit: k[1 + q] == '+')
    return stats


def quantum_reference(pair: Pair = (0, 1)) -> Dict[str, Optional[float]]:
    """Exact target statistics from the distillation scheme."""
    stats = pigeonhole_experiment(ParityScheme.DISTILLATION, pair, ExecutionMode.exact())
    return statistics_from_joint(stats.joint, pair)


class Witness(NamedTuple):
    model: Union[int, str]
    statistic: str
    model_value: Optional[float]
    quantum_value: float

    def to_dict(self) -> dict:
        return {'model': self.model, 'statistic': self.statistic,
                'model_value': None if self.model_value is None else round_report(self.model_value),
                'quantum_value': round_report(self.quantum_value)}


def compare_statistics(model: Union[int, str], stats: Mapping[str, Optional[float]],
                       reference: Mapping[str, Optional[float]],
                       tolerance: float = SimulationConstants.LHV_TOLERANCE) -> Optional[Witness]:
    """First statistic in :data:`COMPARISON_SET` that deviates, or ``None``."""
    for name in COMPARISON_SET:
        value = stats.get(name)
        if value is None or abs(value - reference[name]) > tolerance:
            return Witness(model, name, value, reference[name])
    return None


# ---------------------------------------------------------------------------
# Conspiracy model
# ---------------------------------------------------------------------------

def conspiracy_predict(assignment: HiddenAssignment,
                       pair: Pair) -> Tuple[ParityLabel, Tuple[int, int, int]]:
    """On ``same`` the measured pair's y bits become (0, 1); ``diff`` leaves them."""
    first, second = pair
    z, y = assignment.z_bits, list(assignment.y_bits)
    if z[first] == z[second]:
        y[first], y[second] = 0, 1
        return ParityLabel.SAME, tuple(y)
    return ParityLabel.DIFF, tuple(y)


def conspiracy_joint(pair: Pair) -> Dict[JointKey, float]:
    joint: Dict[JointKey, float] = {key: 0.0 for key in JOINT_KEYS}
    assignments = all_assignments(0)
    weight = 1 / len(assignments)
    for assignment in assignments:
        label, y = conspiracy_predict(assignment, pair)
        joint[(label.value, *('+' if bit == 0 else '-' for bit in y))] += weight
    return joint


@dataclass(frozen=True)
class ConspiracyReport:
    pair: Pair
    model: Mapping[str, Optional[float]]
    quantum: Mapping[str, Optional[float]]
    same_plus_plus: float
    witness: Optional[Witness]

    @property
    def reproduces_forbidden_zero(self) -> bool:
        return self.same_plus_plus <= SimulationConstants.LHV_TOLERANCE

    @property
    def witness_gap(self) -> float:
        if self.witness is None:
            return 0.0
        if self.witness.model_value is None:
            return 1.0
        return abs(self.witness.model_value - self.witness.quantum_value)

    def to_dict(self) -> dict:
        def clean(values):
            return {k: (None if v is None else round_report(v)) for k, v in sorted(values.items())}
        return {
            'pair': pair_name(self.pair),
            'model': clean(self.model),
            'quantum': clean(self.quantum),
            'p_plus_plus_given_same': round_report(self.same_plus_plus),
            'reproduces_forbidden_zero': self.reproduces_forbidden_zero,
            'witness': self.witness.to_dict() if self.witness else None,
            'witness_gap': round_report(self.witness_gap),
        }


def conspiracy_report(pair: Pair = (0, 1)) -> ConspiracyReport:
    """Compare the conspiracy model with the quantum statistics."""
    joint = conspiracy_joint(pair)
    model = statistics_from_joint(joint, pair)
    quantum = quantum_reference(pair)
    first, second = pair
    same = ParityLabel.SAME.value
    p_same = sum(v for k, v in joint.items() if k[0] == same)
    p_same_pp = sum(v for k, v in joint.items()
                    if k[0] == same and k[1 + first] == '+' and k[1 + second] == '+')
    return ConspiracyReport(pair, model, quantum, p_same_pp / p_same,
                            compare_statistics('conspiracy', model, quantum))


# ---------------------------------------------------------------------------
# Exhaustive scan
# ---------------------------------------------------------------------------

@dataclass
class ScanReport:
    lambda_bits: int
    pair: Pair
    models_tested: int = 0
    models_consistent: int = 0
    consistent_models: List[Union[int, str]] = field(default_factory=list)
    witnesses: List[Witness] = field(default_factory=list)

    def merge(self, other: 'ScanReport') -> 'ScanReport':
        if (other.lambda_bits, other.pair) != (self.lambda_bits, self.pair):
            raise InvalidArgumentError("cannot merge scans of different configurations",
                                       field="config")
        return ScanReport(self.lambda_bits, self.pair,
                          self.models_tested + other.models_tested,
                          self.models_consistent + other.models_consistent,
                          self.consistent_models + other.consistent_models,
                          self.witnesses + other.witnesses)

    def witness_summary(self) -> Dict[str, int]:
        return dict(sorted(Counter(w.statistic for w in self.witnesses).items()))

    def to_dict(self, witness_limit: int = 10) -> dict:
        reference = quantum_reference(self.pair)
        return {
            'lambda_bits': self.lambda_bits,
            'pair': pair_name(self.pair),
            'comparison': {name: {'statistic': COMPARISON_NOTES[name],
                                  'quantum': round_report(reference[name])}
                           for name in COMPARISON_SET},
            'tolerance': SimulationConstants.LHV_TOLERANCE,
            'models_tested': self.models_tested,
            'models_consistent': self.models_consistent,
            'consistent_models': list(self.consistent_models),
            'witness_summary': self.witness_summary(),
            'witnesses': [w.to_dict() for w in self.witnesses[:witness_limit]],
        }


def _assignment_arrays(lambda_bits: int) -> Dict[str, np.ndarray]:
    assignments = np.array([a[:6] + ((a.lam or 0),) for a in all_assignments(lambda_bits)],
                           dtype=np.int64)
    names = ('a_z', 'a_y', 'b_z', 'b_y', 'c_z', 'c_y', 'lam')
    return {name: assignments[:, i] for i, name in enumerate(names)}


def _scan_chunk(tables: np.ndarray, indices: np.ndarray, hidden: Dict[str, np.ndarray],
                pair: Pair, reference: Mapping[str, Optional[float]],
                lambda_bits: int) -> ScanReport:
    first, second = pair
    z = [hidden['a_z'], hidden['b_z'], hidden['c_z']]
    y = [hidden['a_y'], hidden['b_y'], hidden['c_y']]
    context = (z[first] != z[second]).astype(np.int64)
    same = context == SAME

    plus = []
    for qubit in range(3):
        if qubit in pair:
            rows = (z[qubit] << 3) | (y[qubit] << 2) | (hidden['lam'] << 1) | context
            new_y = (tables[:, None] >> rows[None, :]) & 1
        else:
            new_y = np.broadcast_to(y[qubit][None, :], (len(tables), len(context)))
        plus.append(new_y == 0)

    all_plus = plus[0] & plus[1] & plus[2]
    success = all_plus.mean(axis=1)
    diff_all_plus = (all_plus & ~same[None, :]).mean(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        conditional = np.where(success > 0,
                               diff_all_plus / np.where(success > 0, success, 1), np.nan)
    columns = {
        'same_plus_plus': (plus[first] & plus[second] & same[None, :]).mean(axis=1),
        'conditional_diff': conditional,
        'success_probability': success,
    }
    for qubit, name in enumerate(MARGINALS):
        columns[name] = plus[qubit].mean(axis=1)

    report = ScanReport(lambda_bits, pair, models_tested=len(tables))
    for row, index in enumerate(indices):
        stats = {name: (None if np.isnan(values[row]) else float(values[row]))
                 for name, values in columns.items()}
        witness = compare_statistics(int(index), stats, reference)
        if witness is None:
            report.models_consistent += 1
            report.consistent_models.append(int(index))
        else:
            report.witnesses.append(witness)
    return report


@log_duration("local model scan")
def scan_local_models(lambda_bits: int = 0, pair: Pair = (0, 1),
                      controls: Sequence[Tuple[str, Mapping[str, Optional[float]]]] = (),
                      chunk_size: int = Config.SCAN_CHUNK_SIZE,
                      workers: int = Config.WORKERS) -> ScanReport:
    """Test every symmetric disturbance rule against the quantum statistics.

    ``controls`` are extra named models given as precomputed statistics;
    they are compared after the rule tables and count as tested models.
    Rule chunks may run on ``workers`` threads without changing the report.
    """
    lambda_bits = validate_lambda_bits(lambda_bits)
    if chunk_size < 1:
        raise InvalidArgumentError("chunk size must be positive", field="chunk_size",
                                   value=chunk_size)
    reference = quantum_reference(pair)
    hidden = _assignment_arrays(lambda_bits)
    total = 1 << (16 if lambda_bits else 8)

    def scan_chunk(start: int) -> ScanReport:
        indices = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
        tables = indices if lambda_bits else _expand_tables(indices)
        return _scan_chunk(tables, indices, hidden, tuple(pair), reference, lambda_bits)

    report = ScanReport(lambda_bits, tuple(pair))
    for chunk in map_chunks(scan_chunk, range(0, total, chunk_size), workers):
        report = report.merge(chunk)

    for name, stats in controls:
        control = ScanReport(lambda_bits, tuple(pair), models_tested=1)
        witness = compare_statistics(name, stats, reference)
        if witness is None:
            control.models_consistent = 1
            control.consistent_models.append(name)
        else:
            control.witnesses.append(witness)
        report = report.merge(control)

    logger.info(f"Scanned {report.models_tested} models (lambda_bits={lambda_bits}, "
                f"pair {pair_name(tuple(pair))}): {report.models_consistent} consistent")
    return report


def rule_statistics(rule: DisturbanceRule, lambda_bits: int, pair: Pair = (0, 1)
                    ) -> Dict[str, Optional[float]]:
    """Statistics of a single rule, computed by direct enumeration."""
    first, second = pair
    assignments = all_assignments(lambda_bits)
    weight = 1 / len(assignments)
    joint: Dict[JointKey, float] = {key: 0.0 for key in JOINT_KEYS}
    for assignment in assignments:
        z, y = assignment.z_bits, list(assignment.y_bits)
        context = SAME if z[first] == z[second] else DIFF
        for qubit in pair:
            y[qubit] = rule.apply(z[qubit], y[qubit], assignment.lam, context)
        label = ParityLabel.from_bit(context)
        joint[(label.value, *('+' if bit == 0 else '-' for bit in y))] += weight
    return statistics_from_joint(joint, pair)
