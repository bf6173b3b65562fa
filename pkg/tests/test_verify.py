"""Checker behaviour on valid traces, plus the documented mutation kills.

Each checker must stay green on engine output and flag its documented
single-field mutation.  Mutations edit one field of one stage record; the
x sequence is rebuilt from the jumps so the mutated trace stays internally
consistent wherever the mutation does not target that consistency.
"""

import dataclasses

import pytest

from injurybench.dyadic import Dyadic, ZERO
from injurybench.engine import run_a, run_b
from injurybench.phi import registry_from_config
from injurybench.tracekit import Trace
from injurybench.verify import (
    check_convergence_bound,
    check_cutoffs,
    check_expansion_gap_bound,
    check_jump_sums,
    check_monotonicity,
    check_requirement_N,
    check_requirement_P,
    check_settlement_facts,
    run_checks,
)
from conftest import MINIMAL_CONFIG


@pytest.fixture(scope="module")
def minimal():
    return registry_from_config(MINIMAL_CONFIG)


@pytest.fixture(scope="module")
def trace_a(minimal):
    return run_a(minimal, 60)


@pytest.fixture(scope="module")
def trace_b(minimal):
    return run_b(minimal, 60)


def mutate_record(trace: Trace, t: int, **changes) -> Trace:
    """Replace fields of one stage record and rebuild x from the jumps."""
    stages = list(trace.stages)
    stages[t] = dataclasses.replace(stages[t], **changes)
    x = [ZERO]
    for rec in stages:
        x.append(x[-1] + rec.jump)
    return Trace(engine=trace.engine, config=trace.config, stages=stages, x=x)


def mutate_write(trace: Trace, t: int, index: int, new_value: int) -> Trace:
    writes = list(trace.stages[t].param_writes)
    sigma, fld, _old = writes[index]
    writes[index] = (sigma, fld, new_value)
    return mutate_record(trace, t, param_writes=tuple(writes))


# ---------------------------------------------------------------------------
# Valid traces stay green


def test_valid_traces_have_no_failures(trace_a, trace_b, minimal):
    for trace in (trace_a, trace_b):
        for report in run_checks(trace, minimal):
            assert report.status in ("pass", "incomplete"), report.to_json()


def test_all_diverge_trace_vacuously_passes():
    reg = registry_from_config({"slots": []})
    trace = run_a(reg, 25)
    for report in run_checks(trace, reg):
        assert report.status == "pass", report.to_json()
    assert check_monotonicity(trace).witnesses == []
    assert check_jump_sums(trace, reg).counts == {}
    assert check_cutoffs(trace, reg).counts == {}


def test_checks_give_nontrivial_coverage(trace_a, minimal):
    assert check_jump_sums(trace_a, minimal).counts.get("pass", 0) >= 5
    assert check_cutoffs(trace_a, minimal).counts.get("pass", 0) >= 2


# ---------------------------------------------------------------------------
# Documented mutation kills (one per checker)


def test_mutation_monotonicity(trace_a, minimal):
    # documented mutation: lower one recorded restraint write to zero
    target = None
    for rec in trace_a.stages:
        for i, (sigma, fld, value) in enumerate(rec.param_writes):
            if fld == "r" and value >= 2:
                target = (rec.t, i)
    assert target is not None
    mutated = mutate_write(trace_a, target[0], target[1], 0)
    report = check_monotonicity(mutated)
    assert report.status == "fail"
    assert any(w["law"] == "r non-decreasing" for w in report.witnesses)


def test_mutation_convergence_forged_big_jump(trace_a):
    # documented mutation: inflate one jump to 8 (a power of two) -> bound dies
    t = trace_a.jump_stages()[0]
    mutated = mutate_record(trace_a, t, jump=Dyadic(8))
    report = check_convergence_bound(mutated)
    assert report.status == "fail"
    assert any(w["law"] == "x_T < 4" for w in report.witnesses)


def test_mutation_convergence_non_power_jump(trace_a):
    t = trace_a.jump_stages()[0]
    mutated = mutate_record(trace_a, t, jump=Dyadic(3, 2))
    report = check_convergence_bound(mutated)
    assert report.status == "fail"
    assert any(w["law"] == "jump is a power of two" for w in report.witnesses)


def test_mutation_jump_sums(trace_a, minimal):
    # documented mutation: double one split jump -> episode sum overshoots
    split = [rec.t for rec in trace_a.stages
             if rec.action.kind == "expansion_jump"][0]
    old = trace_a.stages[split].jump
    mutated = mutate_record(trace_a, split, jump=old + old)
    report = check_jump_sums(mutated, minimal)
    assert report.status == "fail"


def test_mutation_cutoffs_missing_region(trace_a, minimal):
    # documented mutation: drop the initialisation region at a cut-off stage
    from injurybench.engine import cutoff_stages

    t_cut = cutoff_stages(trace_a, "0")
    assert t_cut is not None
    mutated = mutate_record(trace_a, t_cut, init_regions=())
    report = check_cutoffs(mutated, minimal)
    assert report.status == "fail"
    assert any("region" in p for w in report.witnesses for p in w.get("problems", []))


def test_mutation_requirement_n(trace_a, minimal):
    # documented mutation: negate one jump so x is no longer non-decreasing
    t = trace_a.jump_stages()[-1]
    mutated = mutate_record(trace_a, t, jump=-trace_a.stages[t].jump)
    report = check_requirement_N(mutated, minimal, 0)
    assert report.status == "fail"


def test_mutation_requirement_p(minimal):
    # documented mutation: enlarge one late recorded jump past the modulus bound
    trace = run_a(minimal, 18)
    mutated = mutate_record(trace, 14, jump=Dyadic(2))
    report = check_requirement_P(mutated, minimal, 0)
    assert report.status == "fail"
    assert any("difference_exceeds" in w for w in report.witnesses)
    assert check_requirement_P(trace, minimal, 0).status == "pass"


def test_mutation_settlement(trace_a, minimal):
    # documented mutation: rewrite the settled word of a threat stage
    t = next(rec.t for rec in trace_a.stages if rec.action.kind == "threat_jump")
    mutated = mutate_record(trace_a, t, settled=trace_a.stages[t].settled + "1")
    report = check_settlement_facts(mutated, minimal)
    assert report.status == "fail"


def test_mutation_expansion_gap(trace_b, minimal):
    # documented mutation: inflate a mid-run jump between expansionary visits
    stages = trace_b.jump_stages()
    t = stages[len(stages) // 2]
    assert t + 1 < trace_b.T
    mutated = mutate_record(trace_b, t, jump=Dyadic(4))
    report = check_expansion_gap_bound(mutated, minimal)
    assert report.status == "fail"
    assert check_expansion_gap_bound(trace_b, minimal).status in ("pass", "incomplete")


def test_mutation_pause_alternation(trace_b, minimal):
    # documented mutation: erase the pause write of a handled threat
    rec = next(r for r in trace_b.stages if r.action.kind in
               ("threat_jump", "threat_schedule") and r.t >= 3)
    idx = next(i for i, (s, f, v) in enumerate(rec.param_writes) if f == "p")
    mutated = mutate_write(trace_b, rec.t, idx, 0)
    report = check_settlement_facts(mutated, minimal)
    assert report.status == "fail"


# ---------------------------------------------------------------------------
# Refusals and selection


def test_requirement_checks_refuse_undeclared_slots(trace_a, minimal):
    with pytest.raises(ValueError):
        check_requirement_N(trace_a, minimal, 5)
    with pytest.raises(ValueError):
        check_requirement_P(trace_a, minimal, 9)


def test_requirement_refuses_unclassified_program():
    config = {
        "slots": [
            {"index": 0, "kind": "identity"},
            {"index": 1, "kind": "program", "code": [["halt"]]},
        ]
    }
    reg = registry_from_config(config)
    trace = run_a(reg, 10)
    with pytest.raises(ValueError):
        check_requirement_N(trace, reg, 1)


def test_engine_specific_checks_reject_wrong_engine(trace_a, trace_b, minimal):
    with pytest.raises(ValueError):
        check_cutoffs(trace_b, minimal)
    with pytest.raises(ValueError):
        check_expansion_gap_bound(trace_a, minimal)
    with pytest.raises(ValueError):
        run_checks(trace_b, minimal, checks=["cutoffs"])


def test_unknown_check_name_rejected(trace_a, minimal):
    with pytest.raises(ValueError):
        run_checks(trace_a, minimal, checks=["monotonicity", "nonsense"])


def test_requirement_p_refuses_unstable_path(trace_b, minimal):
    report = check_requirement_P(trace_b, minimal, 1)
    assert report.status == "incomplete"
    assert any("unstable" in w.get("note", "") for w in report.witnesses)


def test_reports_serialise(trace_a, minimal):
    import json

    payload = [r.to_json() for r in run_checks(trace_a, minimal)]
    json.dumps(payload)


def test_checkers_are_order_independent(trace_a, minimal):
    names = ["settlement", "jump_sums", "monotonicity", "convergence", "cutoffs"]
    first = [r.to_json() for r in run_checks(trace_a, minimal, checks=names)]
    second = [r.to_json() for r in run_checks(trace_a, minimal, checks=names[::-1])]
    assert sorted(first, key=lambda r: r["check"]) == sorted(
        second, key=lambda r: r["check"]
    )


def test_mutation_single_threat_per_witness(trace_b, minimal):
    # a duplicated threat stage record reuses the same witness value
    src = next(rec for rec in trace_b.stages
               if rec.action.kind == "threat_jump" and rec.t >= 4)
    earlier = next(rec.t for rec in trace_b.stages
                   if rec.action.kind == "threat_jump" and rec.t < src.t)
    mutated = mutate_record(
        trace_b, earlier,
        param_writes=trace_b.stages[earlier].param_writes[:-1],
    )
    # removing the witness bump makes the later threat reuse the value
    report = check_settlement_facts(mutated, minimal)
    assert report.status == "fail"
