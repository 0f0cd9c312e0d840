"""Tests for ``services/circuits.py``: builder, text format, branches, sampling."""
from __future__ import annotations

from math import pi, sqrt

import pytest

from exceptions import CircuitParseError, CircuitValidationError, InvalidArgumentError
from services.circuits import (
    Circuit,
    CircuitBuilder,
    ExecutionMode,
    Instruction,
    InstructionKind,
    SampledHistogram,
    apply_gates,
    enumerate_branches,
    format_circuit,
    map_chunks,
    parse_circuit,
    run_sampled,
    sample_categorical,
)
from services.qcore import (
    equal_up_to_global_phase,
    make_basis_state,
    make_named_state,
)
from tests.fixtures import load_fixture

BELL = "qubits 2\nh 0\ncnot 0 1\n"


def _bell_measured() -> Circuit:
    return parse_circuit(BELL + "measure 0 -> c0\nmeasure 1 -> c1\n")


# ---------------------------------------------------------------------------
# Builder and validation
# ---------------------------------------------------------------------------

class TestCircuitBuilder:
    def test_auto_names_bits_in_write_order(self):
        builder = CircuitBuilder(2)
        first = builder.measure(0)
        second = builder.measure(1)
        parity = builder.xor(first, second)
        circuit = builder.build()
        assert (first, second, parity) == ("c0", "c1", "c2")
        assert circuit.classical_bits == ("c0", "c1", "c2")

    def test_chained_gates(self):
        circuit = CircuitBuilder(2).h(0).cnot(0, 1).rx(1, pi / 2).build()
        assert [i.gate for i in circuit.body] == ["h", "cnot", "rx"]
        assert len(circuit) == 3

    def test_conditional_gate_needs_written_bit(self):
        with pytest.raises(CircuitValidationError, match="undeclared classical bit c0"):
            CircuitBuilder(1).cond("x", 0, "c0")

    def test_bits_are_write_once(self):
        builder = CircuitBuilder(2)
        builder.measure(0, "c0")
        with pytest.raises(CircuitValidationError, match="written twice"):
            builder.measure(1, "c0")

    @pytest.mark.parametrize(
        "instr",
        [
            Instruction(InstructionKind.GATE, (0, 1), "h"),
            Instruction(InstructionKind.GATE, (0,), "rx"),
            Instruction(InstructionKind.GATE, (0,), "x", 0.5),
            Instruction(InstructionKind.GATE, (0, 0), "cnot"),
            Instruction(InstructionKind.GATE, (2,), "x"),
            Instruction(InstructionKind.GATE, (0,), "swap"),
            Instruction(InstructionKind.MEASURE, (0,), bit="d0"),
        ],
    )
    def test_invalid_instructions(self, instr):
        with pytest.raises(CircuitValidationError):
            CircuitBuilder(2).append(instr)

    def test_circuit_checks_declared_bit_order(self):
        body = (Instruction(InstructionKind.MEASURE, (0,), bit="c0"),)
        with pytest.raises(CircuitValidationError):
            Circuit(1, (), body)

    def test_needs_a_qubit(self):
        with pytest.raises(CircuitValidationError):
            CircuitBuilder(0)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

class TestParseCircuit:
    def test_bell_circuit_prepares_phi_plus(self):
        circuit = parse_circuit("qubits 2\nh 0\ncnot 0 1")
        state = apply_gates(circuit, make_basis_state(2, "00"))
        assert equal_up_to_global_phase(state, make_named_state("phi_plus"))

    def test_self_xor_is_always_zero(self):
        circuit = parse_circuit("qubits 1\nmeasure 0 -> c0\nxor c1 = c0 c0")
        branches = enumerate_branches(circuit, make_named_state("plus"))
        assert [b.outcome_record["c1"] for b in branches] == [0, 0]

    def test_undeclared_bit_reports_line(self):
        with pytest.raises(CircuitParseError) as exc_info:
            parse_circuit("qubits 1\nz 0 if c9")
        assert exc_info.value.line_number == 2
        assert "undeclared classical bit" in exc_info.value.message

    @pytest.mark.parametrize(
        "text, line_number",
        [
            ("h 0", 1),
            ("qubits 2\nfoo 1", 2),
            ("qubits 2\nmeasure 0 c0", 2),
            ("qubits 2\nrx 0 tau", 2),
            ("qubits 2\nrx 0 inf", 2),
            ("qubits 2\ncnot 0", 2),
            ("qubits 2\nx 5", 2),
            ("qubits 2\nh 01", 2),
            ("qubits 2\nmeasure 0 -> c0\npostselect c0 = 2", 3),
            ("qubits 2\n\n# note\nqubits 3", 4),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line_number):
        with pytest.raises(CircuitParseError) as exc_info:
            parse_circuit(text)
        assert exc_info.value.line_number == line_number
        assert exc_info.value.message.startswith(f"line {line_number}: ")

    def test_empty_text(self):
        with pytest.raises(CircuitParseError, match="empty circuit"):
            parse_circuit("# nothing here\n")

    def test_comments_and_blank_lines_are_ignored(self):
        circuit = parse_circuit(load_fixture("bell_y_postselect.circuit"))
        assert circuit.num_qubits == 2
        assert len(circuit) == 8

    def test_angles(self):
        circuit = parse_circuit("qubits 1\nrx 0 pi/2\nrx 0 -pi/2\nrx 0 0.25")
        assert [i.angle for i in circuit.body] == [pi / 2, -pi / 2, 0.25]


class TestFormatCircuit:
    @pytest.mark.parametrize(
        "name",
        ["distillation_parity.circuit", "oracle_parity.circuit",
         "teleported_parity.circuit", "bell_y_postselect.circuit"],
    )
    def test_round_trip(self, name):
        circuit = parse_circuit(load_fixture(name))
        assert parse_circuit(format_circuit(circuit)) == circuit

    def test_normalized_text(self):
        text = "qubits 1\n  rx   0   pi/2 # rotate\nmeasure 0 -> c0\nx 0 if c0\n"
        assert format_circuit(parse_circuit(text)) == (
            "qubits 1\nrx 0 pi/2\nmeasure 0 -> c0\nx 0 if c0\n"
        )

    def test_decimal_angle_is_kept(self):
        assert "rx 0 0.25" in format_circuit(parse_circuit("qubits 1\nrx 0 0.25"))


# ---------------------------------------------------------------------------
# Exact branches
# ---------------------------------------------------------------------------

class TestEnumerateBranches:
    def test_bell_correlations(self):
        branches = enumerate_branches(_bell_measured(), make_basis_state(2, "00"))
        assert [b.outcome_record for b in branches] == [
            {"c0": 0, "c1": 0},
            {"c0": 1, "c1": 1},
        ]
        assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])

    def test_probabilities_sum_to_one_without_postselection(self):
        circuit = parse_circuit(load_fixture("teleported_parity.circuit"))
        plus = make_named_state("plus")
        initial = plus.tensor(plus).tensor(make_basis_state(5, "00000"))
        total = sum(b.probability for b in enumerate_branches(circuit, initial))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_distillation_parity_on_plus_plus(self):
        circuit = parse_circuit(load_fixture("distillation_parity.circuit"))
        plus = make_named_state("plus")
        initial = plus.tensor(plus).tensor(make_basis_state(2, "00"))
        by_parity = {}
        for branch in enumerate_branches(circuit, initial):
            by_parity.setdefault(branch.outcome_record["c2"], []).append(branch)
        assert sum(b.probability for b in by_parity[0]) == pytest.approx(0.5)
        assert sum(b.probability for b in by_parity[1]) == pytest.approx(0.5)
        for branch in by_parity[0]:
            expected = make_named_state("phi_plus").tensor(
                make_basis_state(2, f"{branch.outcome_record['c0']}{branch.outcome_record['c1']}"))
            assert equal_up_to_global_phase(branch.final_state, expected, 1e-10)

    def test_impossible_postselection_leaves_no_branches(self):
        circuit = parse_circuit("qubits 1\nmeasure 0 -> c0\npostselect c0 = 0")
        assert enumerate_branches(circuit, make_basis_state(1, "1")) == []

    def test_bell_pair_is_never_y_plus_twice(self):
        circuit = parse_circuit(load_fixture("bell_y_postselect.circuit"))
        assert enumerate_branches(circuit, make_basis_state(2, "00")) == []

    def test_zero_probability_outcomes_are_not_listed(self):
        circuit = parse_circuit("qubits 1\nmeasure 0 -> c0")
        branches = enumerate_branches(circuit, make_basis_state(1, "0"))
        assert len(branches) == 1
        assert branches[0].probability == 1.0

    def test_conditional_gate_applies_per_branch(self):
        circuit = parse_circuit("qubits 2\nh 0\nmeasure 0 -> c0\nx 1 if c0\nmeasure 1 -> c1")
        for branch in enumerate_branches(circuit, make_basis_state(2, "00")):
            assert branch.outcome_record["c0"] == branch.outcome_record["c1"]

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            enumerate_branches(_bell_measured(), make_basis_state(3, "000"))


class TestApplyGates:
    def test_stops_before_measurement(self):
        circuit = _bell_measured()
        state = apply_gates(circuit, make_basis_state(2, "00"), stop=2)
        assert equal_up_to_global_phase(state, make_named_state("phi_plus"))

    def test_rejects_non_unitary_prefix(self):
        with pytest.raises(InvalidArgumentError):
            apply_gates(_bell_measured(), make_basis_state(2, "00"))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

class TestExecutionMode:
    def test_exact_is_default(self):
        assert ExecutionMode().is_exact

    def test_sampled_needs_positive_shots(self):
        with pytest.raises(InvalidArgumentError):
            ExecutionMode.sampled(0, 1)

    def test_sampled_needs_non_negative_seed(self):
        with pytest.raises(InvalidArgumentError):
            ExecutionMode.sampled(10, -1)

    def test_exact_rejects_shots(self):
        with pytest.raises(InvalidArgumentError):
            ExecutionMode("exact", shots=10)

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            ExecutionMode("approximate")


class TestMapChunks:
    @pytest.mark.parametrize("workers", [1, 3, 8])
    def test_results_keep_chunk_order(self, workers):
        assert map_chunks(lambda n: n * n, range(20), workers) == [n * n for n in range(20)]

    def test_empty(self):
        assert map_chunks(str, [], workers=4) == []


class TestRunSampled:
    @pytest.mark.slow
    def test_plus_state_is_balanced(self):
        circuit = parse_circuit("qubits 1\nmeasure 0 -> c0")
        shots = 100_000
        histogram = run_sampled(circuit, make_named_state("plus"), shots, seed=7)
        sigma = sqrt(shots * 0.25)
        for key in ((0,), (1,)):
            assert abs(histogram.counts[key] - shots / 2) <= 3 * sigma
        assert histogram.shots == shots

    def test_same_seed_same_histogram(self):
        circuit = _bell_measured()
        first = run_sampled(circuit, make_basis_state(2, "00"), 5000, seed=11)
        second = run_sampled(circuit, make_basis_state(2, "00"), 5000, seed=11)
        assert first.counts == second.counts

    def test_chunk_streams_do_not_depend_on_total(self):
        circuit = parse_circuit("qubits 1\nmeasure 0 -> c0")
        small = run_sampled(circuit, make_named_state("plus"), 10, seed=3, chunk_size=10)
        large = run_sampled(circuit, make_named_state("plus"), 20, seed=3, chunk_size=10)
        assert all(large.counts[k] >= small.counts[k] for k in small.counts)

    @pytest.mark.parametrize("workers", [2, 4])
    def test_worker_count_does_not_change_counts(self, workers):
        circuit = parse_circuit(BELL + "rx 0 pi/2\nmeasure 0 -> c0\nmeasure 1 -> c1\n")
        serial = run_sampled(circuit, make_basis_state(2, "00"), 3000, seed=5, chunk_size=256)
        pooled = run_sampled(circuit, make_basis_state(2, "00"), 3000, seed=5, chunk_size=256,
                             workers=workers)
        assert pooled.counts == serial.counts
        assert pooled.discarded == serial.discarded

    def test_worker_count_keeps_discards(self):
        circuit = parse_circuit(load_fixture("bell_y_postselect.circuit"))
        serial = run_sampled(circuit, make_basis_state(2, "00"), 2000, seed=3, chunk_size=300)
        pooled = run_sampled(circuit, make_basis_state(2, "00"), 2000, seed=3, chunk_size=300,
                             workers=3)
        assert pooled.discarded == serial.discarded == 2000

    @pytest.mark.parametrize("workers", [0, -1, 1.5, True])
    def test_bad_worker_count(self, workers):
        with pytest.raises(InvalidArgumentError) as exc_info:
            run_sampled(_bell_measured(), make_basis_state(2, "00"), 10, seed=1, workers=workers)
        assert exc_info.value.field == "workers"

    def test_bell_correlations_survive_sampling(self):
        histogram = run_sampled(_bell_measured(), make_basis_state(2, "00"), 2000, seed=1)
        assert set(histogram.counts) <= {(0, 0), (1, 1)}

    def test_postselection_failures_are_discarded(self):
        circuit = parse_circuit(load_fixture("bell_y_postselect.circuit"))
        histogram = run_sampled(circuit, make_basis_state(2, "00"), 3000, seed=7)
        assert sum(histogram.counts.values()) == 0
        assert histogram.discarded == 3000

    def test_as_bitstrings(self):
        histogram = run_sampled(_bell_measured(), make_basis_state(2, "00"), 100, seed=2)
        assert set(histogram.as_bitstrings()) <= {"00", "11"}
        assert sum(histogram.as_bitstrings().values()) == 100


class TestSampledHistogram:
    def test_merge_adds_counts_and_discards(self):
        left = SampledHistogram(("c0",))
        left.counts[(0,)] = 3
        left.discarded = 1
        right = SampledHistogram(("c0",))
        right.counts[(0,)] = 2
        right.counts[(1,)] = 4
        merged = left.merge(right)
        assert merged.counts == {(0,): 5, (1,): 4}
        assert merged.discarded == 1
        assert merged.shots == 10

    def test_merge_is_associative(self):
        parts = []
        for i in range(3):
            h = SampledHistogram(("c0",))
            h.counts[(i % 2,)] = i + 1
            parts.append(h)
        a = parts[0].merge(parts[1]).merge(parts[2])
        b = parts[0].merge(parts[1].merge(parts[2]))
        assert a.counts == b.counts

    def test_merge_rejects_other_bits(self):
        with pytest.raises(InvalidArgumentError):
            SampledHistogram(("c0",)).merge(SampledHistogram(("c1",)))

    def test_records_map_bit_names(self):
        h = SampledHistogram(("c0", "c1"))
        h.counts[(1, 0)] = 2
        assert list(h.records()) == [({"c0": 1, "c1": 0}, 2)]


class TestSampleCategorical:
    def test_leftover_mass_is_last(self):
        counts = sample_categorical([0.5, 0.0], 1000, seed=4)
        assert len(counts) == 3
        assert counts[1] == 0
        assert sum(counts) == 1000
        assert counts[2] > 0

    def test_deterministic(self):
        assert sample_categorical([0.2, 0.3, 0.5], 500, 9) == \
            sample_categorical([0.2, 0.3, 0.5], 500, 9)
