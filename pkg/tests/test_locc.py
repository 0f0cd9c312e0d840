"""Tests for ``services/locc.py``: site annotation, traces and the audit."""
from __future__ import annotations

import pytest

from exceptions import InvalidArgumentError, LocalityViolationError, NotApplicableError
from services.circuits import CircuitBuilder, ExecutionMode, enumerate_branches, run_sampled
from services.locc import (
    EventKind,
    LoccTrace,
    Site,
    TraceEvent,
    assign_sites,
    build_trace,
    causal_order_check,
    execute_locc,
    verify_locality,
)
from services.protocols import build_parity_circuit
from services.qcore import make_basis_state, make_named_state, tensor
from tests.fixtures import load_fixture


def _annotated(scheme, pair=(0, 1), oracle_host="separate", strict=True):
    layout = build_parity_circuit(scheme, pair, num_data=3, oracle_host=oracle_host)
    annotated = assign_sites(layout.circuit, layout.ownership, layout.setup_length, strict=strict)
    return layout, annotated


def _trace(scheme, **kwargs):
    layout, annotated = _annotated(scheme, **kwargs)
    plus = make_named_state("plus")
    _, trace = execute_locc(annotated, layout.initial_state(tensor(plus, plus, plus)))
    return trace


# ---------------------------------------------------------------------------
# assign_sites
# ---------------------------------------------------------------------------

class TestAssignSites:
    def test_distillation_is_accepted(self):
        _, annotated = _annotated("distillation")
        assert annotated.nonlocal_instructions == ()
        assert annotated.owner[3] == "Alice"
        assert annotated.owner[4] == "Bob"

    def test_oracle_scheme_is_rejected(self):
        with pytest.raises(LocalityViolationError) as exc_info:
            _annotated("oracle")
        assert exc_info.value.instruction_index == 0
        assert set(exc_info.value.sites) == {"Alice", "OracleSite"}

    def test_oracle_scheme_recorded_when_not_strict(self):
        _, annotated = _annotated("oracle", strict=False)
        assert annotated.nonlocal_instructions == (0, 1)

    @pytest.mark.parametrize("host", ["separate", "alice"])
    def test_teleported_is_accepted(self, host):
        _, annotated = _annotated("teleported", oracle_host=host)
        assert annotated.nonlocal_instructions == ()

    def test_single_site_is_always_accepted(self):
        layout = build_parity_circuit("oracle")
        annotated = assign_sites(layout.circuit, {q: "Lab" for q in range(3)}, 0)
        assert [site.name for site in annotated.sites] == ["Lab"]

    def test_site_objects_are_accepted(self):
        layout = build_parity_circuit("oracle")
        lab = Site("Lab", frozenset({0, 1, 2}))
        annotated = assign_sites(layout.circuit, {q: lab for q in range(3)}, 0)
        assert annotated.owner == {0: "Lab", 1: "Lab", 2: "Lab"}

    def test_ownership_must_cover_every_qubit(self):
        layout = build_parity_circuit("oracle")
        with pytest.raises(InvalidArgumentError, match="missing"):
            assign_sites(layout.circuit, {0: "Alice", 1: "Bob"}, 0)

    def test_setup_may_only_hold_gates(self):
        builder = CircuitBuilder(1)
        builder.measure(0)
        with pytest.raises(InvalidArgumentError):
            assign_sites(builder.build(), {0: "Alice"}, 1)

    def test_setup_length_out_of_range(self):
        layout = build_parity_circuit("oracle")
        with pytest.raises(InvalidArgumentError):
            assign_sites(layout.circuit, layout.ownership, 99)


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

class TestTraceExport:
    def test_distillation_golden_trace(self):
        assert _trace("distillation").export() == load_fixture("distillation_trace.txt")

    def test_teleported_golden_trace(self):
        assert _trace("teleported").export() == load_fixture("teleported_trace.txt")

    def test_empty_circuit_gives_empty_trace(self):
        circuit = CircuitBuilder(1).build()
        annotated = assign_sites(circuit, {0: "Alice"}, 0)
        results, trace = execute_locc(annotated, make_basis_state(1, "0"))
        assert trace.events == ()
        assert trace.export() == ""
        assert len(results) == 1

    def test_to_dict(self):
        doc = _trace("distillation").to_dict()
        assert doc["setup_boundary"] == 2
        assert doc["events"][6] == {"step": 6, "kind": "classical_message",
                                    "sites": ["Alice", "Evaluator"], "payload": "c0", "bits": 1}


class TestLoccTraceInvariants:
    def test_steps_must_increase(self):
        events = (TraceEvent(1, EventKind.LOCAL_GATE, ("Alice",), "h 0"),
                  TraceEvent(1, EventKind.LOCAL_GATE, ("Alice",), "h 0"))
        with pytest.raises(InvalidArgumentError):
            LoccTrace(events, 0)

    def test_messages_carry_one_bit(self):
        events = (TraceEvent(0, EventKind.CLASSICAL_MESSAGE, ("Alice", "Bob"), "c0", bits=2),)
        with pytest.raises(InvalidArgumentError):
            LoccTrace(events, 0)

    def test_setup_events_precede_the_boundary(self):
        events = (TraceEvent(3, EventKind.SETUP_ENTANGLEMENT, ("Alice",), "h 0"),)
        with pytest.raises(InvalidArgumentError):
            LoccTrace(events, 2)


class TestExecuteLocc:
    def test_branches_match_plain_enumeration(self):
        layout, annotated = _annotated("teleported")
        plus = make_named_state("plus")
        initial = layout.initial_state(tensor(plus, plus, plus))
        branches, _ = execute_locc(annotated, initial)
        plain = enumerate_branches(layout.circuit, initial)
        assert [b.outcome_record for b in branches] == [b.outcome_record for b in plain]
        for ours, theirs in zip(branches, plain):
            assert abs(ours.probability - theirs.probability) <= 1e-12

    def test_sampled_matches_plain_run(self):
        layout, annotated = _annotated("distillation")
        initial = layout.initial_state(make_basis_state(3, "010"))
        histogram, _ = execute_locc(annotated, initial, ExecutionMode.sampled(1000, 8))
        assert histogram.counts == run_sampled(layout.circuit, initial, 1000, 8).counts

    def test_messages_are_single_bits(self):
        for event in _trace("teleported").events:
            if event.kind == EventKind.CLASSICAL_MESSAGE:
                assert event.bits == 1
                assert len(event.sites) == 2


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

class TestVerifyLocality:
    def test_distillation_exchanges_two_bits(self):
        report = verify_locality(_trace("distillation"))
        assert report.passed
        assert report.cross_site_quantum_ops == 0
        assert report.classical_bits_exchanged == 2

    @pytest.mark.parametrize("pair", [(0, 1), (1, 2), (0, 2)])
    def test_teleported_separate_exchanges_four_bits(self, pair):
        report = verify_locality(_trace("teleported", pair=pair))
        assert report.passed
        assert report.classical_bits_exchanged == 4

    def test_teleported_alice_host_exchanges_two_bits(self):
        report = verify_locality(_trace("teleported", oracle_host="alice"))
        assert report.passed
        assert report.classical_bits_exchanged == 2

    def test_misannotated_oracle_circuit_fails(self):
        report = verify_locality(_trace("oracle", strict=False))
        assert not report.passed
        assert report.cross_site_quantum_ops >= 1
        assert report.to_dict()["pass"] is False


class TestCausalOrder:
    def test_teleported_trace_orders_bob_before_alice_link(self):
        assert causal_order_check(_trace("teleported"), "Bob", "Alice")

    def test_reordered_trace_fails(self):
        trace = _trace("teleported")
        post = trace.post_setup()
        setup = [e for e in trace.events if e.step < trace.setup_boundary]
        alice = [e for e in post if "Alice" in e.sites]
        rest = [e for e in post if "Alice" not in e.sites]
        reordered = [TraceEvent(i, e.kind, e.sites, e.payload, e.bits)
                     for i, e in enumerate(setup + alice + rest)]
        assert not causal_order_check(LoccTrace(tuple(reordered), trace.setup_boundary),
                                      "Bob", "Alice")

    def test_distillation_trace_is_not_applicable(self):
        with pytest.raises(NotApplicableError) as exc_info:
            causal_order_check(_trace("distillation"), "Bob", "Alice")
        assert exc_info.value.missing_sites == ("OracleSite",)

    def test_alice_hosted_oracle_is_not_applicable(self):
        with pytest.raises(NotApplicableError):
            causal_order_check(_trace("teleported", oracle_host="alice"), "Bob", "Alice")
