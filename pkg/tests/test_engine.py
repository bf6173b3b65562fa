"""Engine behaviour pinned against hand simulations of the substage rules.

The golden values below were derived by hand-executing the construction
rules on the two-slot registry (identity at 0, doubling at 1) before the
engine existed; they exercise the threat jump, the delegation with an
encoded split counter, the counter drain, and the initialisation regions.
"""

import pytest

from injurybench.dyadic import Dyadic, ZERO, pow2
from injurybench.engine import (
    cutoff_stages,
    new_engine_a,
    new_engine_b,
    run_a,
    run_b,
    run_engine,
    run_stage,
    threat_stages,
    u_map,
)
from injurybench.phi import registry_from_config
from injurybench.strings import nu, pair
from injurybench.tracekit import (
    EXPANSION_JUMP,
    THREAT_JUMP,
    THREAT_SCHEDULE,
    TOP_OUT,
    TERMINAL_KINDS,
    replay_params,
)
from conftest import MINIMAL_CONFIG


@pytest.fixture()
def minimal():
    return registry_from_config(MINIMAL_CONFIG)


def test_initial_parameter_defaults(minimal):
    st = new_engine_a(minimal)
    assert st.peek_param("", "w") == 0
    assert st.peek_param("1", "w") == 2  # nu("1")
    assert st.peek_param("0110", "w") == nu("0110")
    assert st.peek_param("", "c") == 0
    assert st.peek_param("101", "r") == 0
    assert st.peek_param("11", "s") == 0


def test_threat_predicate_examples(minimal):
    st = new_engine_a(minimal)
    run_stage(st)  # stage 0 tops out
    assert st.is_threatened("")  # identity delivers, witness 0, gap 0 < 1
    assert not st.is_threatened("11")  # empty slot: chain length -1
    run_stage(st)  # stage 1 handles the threat, setting the flag
    assert not st.is_threatened("")
    assert st.is_expansionary("")


def test_stage_zero(minimal):
    st = new_engine_a(minimal)
    rec = run_stage(st)
    assert rec.settled == ""
    assert rec.action.kind == TOP_OUT
    assert rec.jump == ZERO
    assert rec.init_regions == (("", "lex_gt"),)
    assert st.x == [ZERO, ZERO]


def test_run_a_small_horizons(minimal):
    assert run_a(minimal, 1).x == [ZERO, ZERO]
    assert run_a(minimal, 2).x == [ZERO, ZERO, Dyadic(1)]


def test_all_diverge_registry_never_moves():
    reg = registry_from_config({"slots": []})
    trace = run_a(reg, 40)
    assert all(v == ZERO for v in trace.x)
    assert all(rec.action.kind == TOP_OUT for rec in trace.stages)
    assert [rec.settled for rec in trace.stages] == ["1" * t for t in range(40)]
    trace_b = run_b(reg, 40)
    assert all(v == ZERO for v in trace_b.x)


def test_engine_a_golden(minimal):
    trace = run_a(minimal, 18)

    assert trace.x[0] == ZERO and trace.x[1] == ZERO
    assert trace.x[2] == Dyadic(1)
    assert trace.x[9] == Dyadic(1)
    assert trace.x[10] == Dyadic(1) + pow2(-7)
    assert trace.x[17] == Dyadic(17, 4)
    assert trace.x[18] == Dyadic(17, 4)

    settled = [rec.settled for rec in trace.stages]
    assert settled[0] == "" and settled[1] == ""
    assert settled[2] == "01"
    assert settled[7] == "0111111"
    assert settled[8] == "0"
    assert settled[9:17] == [""] * 8
    assert settled[17] == "00" + "1" * 15

    assert trace.stages[1].action.kind == THREAT_JUMP
    assert trace.stages[1].action.exponent == 0

    schedule = trace.stages[8].action
    assert schedule.kind == THREAT_SCHEDULE
    assert schedule.gamma == ""
    assert schedule.counter == pair("0", 8) == 53
    assert trace.stages[8].init_regions == (("0", "lex_gt_or_ext"),)

    for t in range(9, 17):
        action = trace.stages[t].action
        assert action.kind == EXPANSION_JUMP
        assert action.alpha == "0"
        assert action.exponent == 7
        assert action.k == 16 - t
        assert trace.stages[t].init_regions == (("0", "lex_gt_or_ext"),)

    # counter drain encoded via the pairing
    assert replay_params(trace, "", 9, "c") == 53
    assert replay_params(trace, "", 10, "c") == pair("0", 7)
    assert replay_params(trace, "", 16, "c") == pair("0", 1)
    assert replay_params(trace, "", 17, "c") == 0

    # restraint froze while the counter drained, and resumed after
    assert replay_params(trace, "", 9, "r") == 7
    assert replay_params(trace, "", 17, "r") == 7
    assert replay_params(trace, "", 18, "r") == 8

    # the threatened strategy's witness survived its own stage's region
    assert replay_params(trace, "0", 8, "w") == 4
    assert replay_params(trace, "0", 18, "w") == 4
    assert replay_params(trace, "0", 9, "s") == 1

    assert u_map(trace) == {1: 1, **{t: 8 for t in range(9, 17)}}
    assert cutoff_stages(trace, "") == 1
    assert cutoff_stages(trace, "0") == 16
    assert cutoff_stages(trace, "11") is None


def test_engine_b_golden(minimal):
    trace = run_b(minimal, 8)

    assert [str(v) for v in trace.x] == [
        "0/2^0", "0/2^0", "1/2^0", "1/2^0", "3/2^1", "2/2^0", "9/2^2", "9/2^2", "19/2^3",
    ]
    assert [rec.settled for rec in trace.stages] == [
        "", "", "0", "", "", "", "001111", "",
    ]

    assert trace.stages[2].action.kind == THREAT_SCHEDULE
    assert trace.stages[2].action.counter == pair("0", 1) == 4
    assert trace.stages[2].init_regions == (("0", "lex_gt"),)
    assert trace.stages[4].action.kind == EXPANSION_JUMP
    assert trace.stages[4].init_regions == (("0", "lex_gt"),)

    # pause flag alternates on the root, witnesses bump by one per threat
    assert [replay_params(trace, "", t, "p") for t in range(2, 9)] == [1, 0, 1, 0, 1, 0, 1]
    assert [replay_params(trace, "", t, "w") for t in (2, 4, 6, 8)] == [1, 2, 3, 4]

    # the first construction's region would have reset the sibling subtree;
    # here only the lex-right tree is touched and the pause flag never is
    assert replay_params(trace, "0", 3, "w") == 2  # explicit bump, no region
    assert replay_params(trace, "1", 3, "w") == nu("1") + 2 + 2
    assert replay_params(trace, "1", 5, "w") == nu("1") + 4 + 2
    assert replay_params(trace, "0", 7, "p") == 0

    assert u_map(trace) == {1: 1, 3: 3, 4: 2, 5: 5, 7: 7}
    assert threat_stages(trace, "") == [1, 3, 5, 7]


def test_terminal_kinds_only(minimal, registry):
    for trace in (run_a(minimal, 30), run_b(minimal, 30), run_a(registry, 60)):
        for rec in trace.stages:
            assert rec.action.kind in TERMINAL_KINDS
            assert rec.action.sigma == rec.settled
            assert (rec.jump.sign() > 0) == (rec.action.kind in (THREAT_JUMP, EXPANSION_JUMP))


def test_determinism_same_registry_instance(minimal):
    assert run_a(minimal, 60).digest() == run_a(minimal, 60).digest()
    assert run_b(minimal, 60).digest() == run_b(minimal, 60).digest()


def test_prefix_stability(registry):
    long = run_a(registry, 150)
    short = run_a(registry, 75)
    assert short.x == long.x[:76]
    assert [r.settled for r in short.stages] == [r.settled for r in long.stages[:75]]


def test_hooks_receive_every_record(minimal):
    seen = []
    run_engine(new_engine_a(minimal), 25, hooks=seen.append)
    assert [rec.t for rec in seen] == list(range(25))


def test_run_engine_rejects_empty_run(minimal):
    with pytest.raises(ValueError):
        run_engine(new_engine_a(minimal), 0)


def test_expansion_boundary_is_strict():
    # phi(0) = 1 fixes the compared index at x_1 = 0; after the unit jump
    # the gap is exactly 2**-r = 1, which must not count as expansionary
    reg = registry_from_config({"slots": [{"index": 0, "kind": "partial", "graph": {"0": 1}}]})
    st = new_engine_a(reg)
    run_stage(st)  # top-out
    run_stage(st)  # threat on the root: jump to 1
    assert st.x[2] == Dyadic(1)
    assert not st.is_threatened("")
    assert not st.is_expansionary("")
    rec = run_stage(st)
    assert rec.settled == "11"

    st_b = new_engine_b(reg)
    run_stage(st_b)
    run_stage(st_b)
    run_stage(st_b)  # pause blocks the threat; boundary blocks the expansion
    assert not st_b.is_expansionary("")
    assert [r.settled for r in st_b.records] == ["", "", "11"]
