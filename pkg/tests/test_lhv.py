"""Tests for ``services/lhv.py``: assignments, conspiracy model, rule scan."""
from __future__ import annotations

from itertools import product

import pytest

from exceptions import InvalidArgumentError
from services.lhv import (
    COMPARISON_SET,
    DisturbanceRule,
    HiddenAssignment,
    ParityLabel,
    all_assignments,
    compare_statistics,
    conspiracy_joint,
    conspiracy_predict,
    conspiracy_report,
    pigeonhole_contradiction_check,
    quantum_reference,
    rule_statistics,
    scan_local_models,
    statistics_from_joint,
)


def _rule_from_cases(same_y: int, diff_y: int) -> DisturbanceRule:
    """Lambda-free rule that ignores z and y: new y depends only on the context."""
    index = 0
    for position, (_, _, context) in enumerate(product((0, 1), repeat=3)):
        if (diff_y if context else same_y):
            index |= 1 << position
    return DisturbanceRule.from_index(index, 0)


# ---------------------------------------------------------------------------
# Assignments and the classical pigeonhole
# ---------------------------------------------------------------------------

class TestAssignments:
    def test_counts(self):
        assert len(all_assignments(0)) == 64
        assert len(all_assignments(1)) == 128

    def test_lambda_is_absent_without_ancilla(self):
        assert all(a.lam is None for a in all_assignments(0))
        assert {a.lam for a in all_assignments(1)} == {0, 1}

    @pytest.mark.parametrize("z_bits", list(product((0, 1), repeat=3)))
    def test_three_bits_are_never_pairwise_different(self, z_bits):
        assert pigeonhole_contradiction_check(z_bits) is False


class TestDisturbanceRule:
    def test_table_range(self):
        with pytest.raises(InvalidArgumentError):
            DisturbanceRule(1 << 16)

    def test_lambda_free_index_range(self):
        with pytest.raises(InvalidArgumentError):
            DisturbanceRule.from_index(256, 0)

    def test_lambda_free_rule_ignores_lambda(self):
        rule = DisturbanceRule.from_index(0b10110010, 0)
        for z, y, context in product((0, 1), repeat=3):
            assert rule.apply(z, y, 0, context) == rule.apply(z, y, 1, context)

    def test_lambda_rule_reads_its_bit(self):
        rule = DisturbanceRule.from_index(1 << 2, 1)
        assert rule.apply(0, 0, 1, 0) == 1
        assert rule.apply(0, 0, 0, 0) == 0


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

class TestQuantumReference:
    def test_values(self):
        reference = quantum_reference((0, 1))
        assert reference["same_plus_plus"] == pytest.approx(0.0, abs=1e-12)
        assert reference["conditional_diff"] == pytest.approx(1.0, abs=1e-12)
        assert reference["success_probability"] == pytest.approx(1 / 8, abs=1e-12)
        for name in ("marginal_ya", "marginal_yb", "marginal_yc"):
            assert reference[name] == pytest.approx(0.5, abs=1e-12)

    def test_same_has_probability_one_half(self):
        from services.protocols import pigeonhole_experiment

        joint = pigeonhole_experiment("distillation", (0, 1)).joint
        assert sum(v for k, v in joint.items() if k[0] == "same") == pytest.approx(0.5)

    def test_empty_joint(self):
        with pytest.raises(InvalidArgumentError):
            statistics_from_joint({}, (0, 1))


class TestCompareStatistics:
    def test_identical_statistics_match(self):
        reference = quantum_reference((0, 1))
        assert compare_statistics("copy", reference, reference) is None

    def test_first_deviation_is_reported(self):
        reference = quantum_reference((0, 1))
        stats = dict(reference, marginal_yb=0.25, success_probability=0.0)
        witness = compare_statistics(3, stats, reference)
        assert witness.model == 3
        assert witness.statistic == "marginal_yb"
        assert witness.model_value == 0.25

    def test_undefined_statistic_is_a_deviation(self):
        reference = quantum_reference((0, 1))
        witness = compare_statistics(0, dict(reference, conditional_diff=None), reference)
        assert witness.statistic == "conditional_diff"
        assert witness.model_value is None


# ---------------------------------------------------------------------------
# Conspiracy model
# ---------------------------------------------------------------------------

class TestConspiracy:
    def test_same_makes_the_pair_opposite(self):
        label, y = conspiracy_predict(HiddenAssignment(0, 0, 0, 0, 1, 1), (0, 1))
        assert label == ParityLabel.SAME
        assert y == (0, 1, 1)

    def test_diff_leaves_y_untouched(self):
        label, y = conspiracy_predict(HiddenAssignment(0, 1, 1, 1, 0, 0), (0, 1))
        assert label == ParityLabel.DIFF
        assert y == (1, 1, 0)

    def test_third_qubit_is_untouched(self):
        _, y = conspiracy_predict(HiddenAssignment(1, 1, 0, 0, 1, 1), (0, 2))
        assert y == (0, 0, 1)

    def test_joint_statistics(self):
        joint = conspiracy_joint((0, 1))
        stats = statistics_from_joint(joint, (0, 1))
        assert stats["same_plus_plus"] == 0.0
        assert stats["diff_all_plus"] == pytest.approx(1 / 16)
        assert quantum_reference((0, 1))["diff_all_plus"] == pytest.approx(1 / 8)

    @pytest.mark.parametrize("pair", [(0, 1), (1, 2), (0, 2)])
    def test_report(self, pair):
        report = conspiracy_report(pair)
        assert report.reproduces_forbidden_zero
        assert report.same_plus_plus == 0.0
        assert report.witness is not None
        assert report.witness_gap >= 1 / 32

    def test_first_witness_is_the_first_marginal(self):
        report = conspiracy_report((0, 1))
        assert report.witness.statistic == "marginal_ya"
        assert report.witness.model_value == pytest.approx(0.75)
        assert report.witness.quantum_value == pytest.approx(0.5)
        assert report.to_dict()["witness_gap"] == 0.25


# ---------------------------------------------------------------------------
# Exhaustive scan
# ---------------------------------------------------------------------------

class TestScanLocalModels:
    def test_lambda_free_scan(self):
        report = scan_local_models(0)
        assert report.models_tested == 256
        assert report.models_consistent == 0
        assert len(report.witnesses) == 256

    @pytest.mark.slow
    def test_lambda_scan(self):
        report = scan_local_models(1)
        assert report.models_tested == 65536
        assert report.models_consistent == 0
        assert sum(report.witness_summary().values()) == 65536

    def test_quantum_copy_control_is_consistent(self):
        reference = quantum_reference((0, 1))
        report = scan_local_models(0, controls=[("quantum_copy", reference)])
        assert report.models_tested == 257
        assert report.models_consistent == 1
        assert report.consistent_models == ["quantum_copy"]

    def test_chunking_does_not_change_the_result(self):
        whole = scan_local_models(0)
        pieces = scan_local_models(0, chunk_size=7)
        assert pieces.models_tested == whole.models_tested
        assert pieces.witnesses == whole.witnesses

    @pytest.mark.parametrize("workers", [2, 3])
    def test_worker_count_does_not_change_the_report(self, workers):
        serial = scan_local_models(0, pair=(0, 2), chunk_size=16)
        pooled = scan_local_models(0, pair=(0, 2), chunk_size=16, workers=workers)
        assert pooled.models_tested == serial.models_tested == 256
        assert pooled.models_consistent == serial.models_consistent
        assert pooled.witnesses == serial.witnesses
        assert pooled.to_dict() == serial.to_dict()

    def test_bad_worker_count(self):
        with pytest.raises(InvalidArgumentError) as exc_info:
            scan_local_models(0, workers=0)
        assert exc_info.value.field == "workers"

    def test_witnesses_are_ordered_by_rule(self):
        models = [w.model for w in scan_local_models(0, pair=(1, 2)).witnesses]
        assert models == sorted(models) == list(range(256))

    def test_vectorized_scan_agrees_with_direct_enumeration(self):
        reference = quantum_reference((0, 1))
        by_model = {w.model: w for w in scan_local_models(0).witnesses}
        for index in (0, 37, 170, 255):
            stats = rule_statistics(DisturbanceRule.from_index(index, 0), 0)
            assert compare_statistics(index, stats, reference) == by_model[index]

    def test_near_miss_fails_only_on_success_probability(self):
        rule = _rule_from_cases(same_y=1, diff_y=0)
        stats = rule_statistics(rule, 0)
        witness = compare_statistics("near_miss", stats, quantum_reference((0, 1)))
        assert witness.statistic == "success_probability"
        assert witness.model_value == pytest.approx(1 / 4)

    def test_to_dict(self):
        doc = scan_local_models(0).to_dict(witness_limit=3)
        assert list(doc["comparison"]) == list(COMPARISON_SET)
        assert len(doc["witnesses"]) == 3
        assert doc["models_tested"] == 256
        assert doc["tolerance"] == 1e-9

    def test_bad_chunk_size(self):
        with pytest.raises(InvalidArgumentError):
            scan_local_models(0, chunk_size=0)

    def test_bad_lambda_bits(self):
        with pytest.raises(InvalidArgumentError):
            scan_local_models(2)

    def test_deterministic(self):
        assert scan_local_models(0).to_dict() == scan_local_models(0).to_dict()
