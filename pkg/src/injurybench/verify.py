"""Mechanical checkers for the constructions' laws and certificates.

Each checker is a pure function of an immutable trace (plus the registry the
run used, when the statement mentions slot values) and returns a structured
report.  Most of the verified statements quantify over the infinite run, so
conclusions are three-valued: "pass" and "fail" where the finite trace
decides the statement, "incomplete" where the horizon truncates it.  A
report's overall status is "fail" if any item failed, "incomplete" only
when nothing could be confirmed, and "pass" otherwise (vacuous checks
pass).

Where a checker needs the stage after which a strategy is never initialised
again -- unobservable at a finite horizon -- it substitutes the last
initialisation seen in the trace and says so in the report's assumptions.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field

from .dyadic import Dyadic, pow2
from .engine import threat_stages, u_map
from .phi import PhiRegistry, registry_from_config
from .strings import BinStr, lex_less, true_path_estimate
from .tracekit import (
    EXPANSION_KINDS,
    THREAT_KINDS,
    TERMINAL_KINDS,
    TOP_OUT,
    Trace,
    TraceCorruption,
    param_changepoints,
    region_contains,
    region_covers_right_of,
    strategies_with_writes,
)

__all__ = [
    "Report",
    "check_monotonicity",
    "check_convergence_bound",
    "check_jump_sums",
    "check_cutoffs",
    "check_requirement_N",
    "check_requirement_P",
    "check_settlement_facts",
    "check_expansion_gap_bound",
    "CHECK_NAMES",
    "run_checks",
]

_FOUR = Dyadic(4)


@dataclass
class Report:
    check: str
    status: str  # "pass" | "fail" | "incomplete"
    witnesses: list[dict] = field(default_factory=list)
    assumptions: list[str] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "witnesses": self.witnesses,
            "assumptions": self.assumptions,
            "counts": self.counts,
        }


def _make_report(check: str, findings: list[tuple[str, dict]], assumptions=None) -> Report:
    counts = Counter(status for status, _ in findings)
    if counts.get("fail"):
        status = "fail"
    elif counts.get("pass") or not counts.get("incomplete"):
        status = "pass"
    else:
        status = "incomplete"
    witnesses = [
        {"status": status_, **detail}
        for status_, detail in findings
        if status_ != "pass"
    ]
    return Report(
        check=check,
        status=status,
        witnesses=witnesses,
        assumptions=list(assumptions or []),
        counts=dict(counts),
    )


class _ParamView:
    """Cached changepoint timelines over one trace."""

    def __init__(self, trace: Trace):
        self.trace = trace
        self._cp: dict[tuple[BinStr, str], tuple[list[int], list[int]]] = {}

    def changepoints(self, sigma: BinStr, fld: str) -> tuple[list[int], list[int]]:
        key = (sigma, fld)
        cached = self._cp.get(key)
        if cached is None:
            pts = param_changepoints(self.trace, sigma, fld)
            cached = self._cp[key] = ([t for t, _ in pts], [v for _, v in pts])
        return cached

    def value(self, sigma: BinStr, fld: str, t: int) -> int:
        times, values = self.changepoints(sigma, fld)
        return values[bisect_right(times, t) - 1]


class _Offline:
    """Semantic re-evaluation of the stage predicates from a trace."""

    def __init__(self, trace: Trace, registry: PhiRegistry):
        self.trace = trace
        self.registry = registry
        self.params = _ParamView(trace)
        self.flag = trace.flag_field
        self.needs_flag = trace.engine == "A"

    def _gap_below(self, e: int, t: int, exponent: int) -> bool:
        l = self.registry.ell(e, t)
        v = self.registry.step(e, l, t)
        if v is None or v > t:
            raise TraceCorruption(f"slot {e} chain inconsistent at stage {t}")
        return (self.trace.x[t] - self.trace.x[v]) < pow2(-exponent)

    def threatened(self, sigma: BinStr, t: int) -> bool:
        if self.params.value(sigma, self.flag, t) != 0:
            return False
        e = len(sigma)
        l = self.registry.ell(e, t)
        w = self.params.value(sigma, "w", t)
        if l < 0 or l < w:
            return False
        return self._gap_below(e, t, w)

    def expansionary(self, sigma: BinStr, t: int) -> bool:
        if self.needs_flag and self.params.value(sigma, self.flag, t) != 1:
            return False
        e = len(sigma)
        if self.registry.ell(e, t) < 0:
            return False
        return self._gap_below(e, t, self.params.value(sigma, "r", t))


def _registry_for(trace: Trace, registry: PhiRegistry | None) -> PhiRegistry:
    return registry if registry is not None else registry_from_config(trace.config)


def _next_application(trace: Trace, sigma: BinStr, after: int) -> int | None:
    for t in range(after + 1, trace.T):
        if trace.stages[t].settled.startswith(sigma):
            return t
    return None


def _initialized_in(trace: Trace, sigma: BinStr, lo: int, hi: int) -> int | None:
    """First stage in [lo, hi) whose region covers sigma, else None."""
    for t in range(lo, hi):
        for anchor, rel in trace.stages[t].init_regions:
            if region_contains(anchor, rel, sigma):
                return t
    return None


def _last_initialization(trace: Trace, sigma: BinStr) -> int | None:
    last = None
    for rec in trace.stages:
        for anchor, rel in rec.init_regions:
            if region_contains(anchor, rel, sigma):
                last = rec.t
    return last


# ---------------------------------------------------------------------------
# Parameter monotonicity


def check_monotonicity(trace: Trace) -> Report:
    """Restraint and witness laws: r <= t, r and w non-decreasing in t,
    and (first construction only) the witness monotone along prefixes."""
    params = _ParamView(trace)
    findings: list[tuple[str, dict]] = []
    tracked = strategies_with_writes(trace)
    if "" not in tracked:
        tracked.insert(0, "")

    for sigma in tracked:
        for fld in ("r", "w"):
            times, values = params.changepoints(sigma, fld)
            prev = None
            for t_c, v in zip(times, values):
                if fld == "r" and v > t_c:
                    findings.append(
                        ("fail", {"law": "r<=t", "sigma": sigma, "t": t_c, "value": v})
                    )
                if prev is not None and v < prev:
                    findings.append(
                        ("fail", {"law": f"{fld} non-decreasing", "sigma": sigma,
                                  "t": t_c, "value": v, "previous": prev})
                    )
                prev = v

    if trace.engine == "A":
        by_len = sorted(tracked, key=len)
        for i, sigma in enumerate(by_len):
            for tau in by_len[i + 1:]:
                if len(tau) > len(sigma) and tau.startswith(sigma):
                    bad = _step_function_le(
                        params.changepoints(sigma, "w"),
                        params.changepoints(tau, "w"),
                    )
                    if bad is not None:
                        findings.append(
                            ("fail", {"law": "w prefix-monotone", "sigma": sigma,
                                      "tau": tau, "t": bad})
                        )

    assumptions = [
        "prefix-monotonicity checked across explicitly written strategies; "
        "never-written strategies follow the region defaults, which are "
        "monotone by construction"
    ] if trace.engine == "A" else []
    return _make_report("monotonicity", findings, assumptions)


def _step_function_le(a: tuple[list[int], list[int]], b: tuple[list[int], list[int]]):
    """First time where step function a exceeds b, else None."""
    times = sorted(set(a[0]) | set(b[0]))
    for t in times:
        va = a[1][bisect_right(a[0], t) - 1]
        vb = b[1][bisect_right(b[0], t) - 1]
        if va > vb:
            return t
    return None


# ---------------------------------------------------------------------------
# Global convergence bound


def check_convergence_bound(trace: Trace) -> Report:
    """x non-decreasing and consistent with the jumps, every jump an exact
    power of two, and x_T below the geometric-series bound of 4."""
    findings: list[tuple[str, dict]] = []
    x = trace.x
    for rec in trace.stages:
        if rec.jump.sign() < 0:
            findings.append(("fail", {"law": "x non-decreasing", "t": rec.t,
                                      "jump": str(rec.jump)}))
        elif rec.jump.sign() > 0 and not rec.jump.is_pow2():
            findings.append(("fail", {"law": "jump is a power of two", "t": rec.t,
                                      "jump": str(rec.jump)}))
        if x[rec.t] + rec.jump != x[rec.t + 1]:
            findings.append(("fail", {"law": "x consistent with jumps", "t": rec.t}))
    if not x[trace.T] < _FOUR:
        findings.append(("fail", {"law": "x_T < 4", "x_T": str(x[trace.T])}))
    return _make_report("convergence", findings)


# ---------------------------------------------------------------------------
# Jump-sum identities


def _classify_episode(total: Dyadic, bound: Dyadic, t2, interrupted_at) -> tuple[str, str]:
    if total > bound:
        return "fail", "sum exceeds the scheduled amount"
    if t2 is None:
        return "incomplete", "next application beyond horizon; weak bound holds"
    if interrupted_at is not None:
        return "pass", f"initialisation at stage {interrupted_at}; weak bound holds"
    if total == bound:
        return "pass", "exact"
    return "fail", "episode complete but sum falls short"


def check_jump_sums(trace: Trace, registry: PhiRegistry | None = None) -> Report:
    """Exact jump-sum identities per threat and per counter episode.

    A threat handled at t1 with the next application of the strategy at t2
    and no initialisation in between must see jumps attributed to t1 sum to
    exactly 2**-w; a counter episode likewise to 2**-r.  Episodes truncated
    by the horizon only need the one-sided bound.
    """
    findings: list[tuple[str, dict]] = []
    try:
        u = u_map(trace)
    except TraceCorruption as exc:
        return _make_report("jump_sums", [("fail", {"error": str(exc)})])
    jumps = {rec.t: rec.jump for rec in trace.stages if rec.jump.sign() > 0}
    params = _ParamView(trace)
    threats_by_sigma: dict[BinStr, list[int]] = {}
    for rec in trace.stages:
        if rec.action.kind in THREAT_KINDS:
            threats_by_sigma.setdefault(rec.settled, []).append(rec.t)

    for rec in trace.stages:
        kind = rec.action.kind
        if kind in THREAT_KINDS:
            sigma, t1 = rec.settled, rec.t
            origin = t1
            bound = pow2(-params.value(sigma, "w", t1))
            label = "threat"
        elif kind in EXPANSION_KINDS:
            sigma, t1 = rec.settled, rec.t
            alpha = rec.action.alpha
            origins = [s for s in threats_by_sigma.get(alpha, ()) if s < t1]
            if not origins:
                findings.append(("fail", {"episode": "counter", "t1": t1,
                                          "error": f"no prior threat of {alpha!r}"}))
                continue
            origin = origins[-1]
            bound = pow2(-params.value(sigma, "r", t1))
            label = "counter"
        else:
            continue
        t2 = _next_application(trace, sigma, t1)
        end = t2 if t2 is not None else trace.T
        interrupted_at = _initialized_in(trace, sigma, t1, end)
        total = Dyadic(0)
        for t in range(t1, end):
            if u.get(t) == origin:
                total = total + jumps[t]
        status, note = _classify_episode(total, bound, t2, interrupted_at)
        findings.append(
            (status, {"episode": label, "sigma": sigma, "t1": t1, "t2": t2,
                      "sum": str(total), "bound": str(bound), "note": note})
        )
    return _make_report("jump_sums", findings)


# ---------------------------------------------------------------------------
# Cut-off stages (first construction)


def check_cutoffs(trace: Trace, registry: PhiRegistry | None = None) -> Report:
    """Cut-off certification: region coverage, counter condition, tail bound.

    A cut-off is identified when a strategy's threat episode completed in
    horizon (attributed jumps sum to exactly the scheduled amount) and the
    strategy is never initialised afterwards within the horizon.
    """
    if trace.engine != "A":
        raise ValueError("cut-off stages are defined for engine A traces only")
    findings: list[tuple[str, dict]] = []
    try:
        u = u_map(trace)
    except TraceCorruption as exc:
        return _make_report("cutoffs", [("fail", {"error": str(exc)})])
    jumps = {rec.t: rec.jump for rec in trace.stages if rec.jump.sign() > 0}
    params = _ParamView(trace)
    written = strategies_with_writes(trace)

    for rec in trace.stages:
        if rec.action.kind not in THREAT_KINDS:
            continue
        sigma, t1 = rec.settled, rec.t
        if _initialized_in(trace, sigma, t1, trace.T) is not None:
            continue  # threat invalidated within horizon; not a stable episode
        bound = pow2(-params.value(sigma, "w", t1))
        fiber = sorted(t for t, origin in u.items() if origin == t1)
        total = Dyadic(0)
        for t in fiber:
            total = total + jumps[t]
        if total > bound:
            findings.append(("fail", {"sigma": sigma, "t1": t1,
                                      "error": "fiber sum exceeds scheduled amount"}))
            continue
        if total < bound:
            findings.append(("incomplete", {"sigma": sigma, "t1": t1,
                                            "note": "episode not completed in horizon"}))
            continue
        t_cut = max(fiber)
        problems = []
        cut_rec = trace.stages[t_cut]
        if not any(
            region_covers_right_of(anchor, rel, sigma)
            for anchor, rel in cut_rec.init_regions
        ):
            problems.append("initialisation region does not cover extensions "
                            "and lex-right strategies")
        for tau in written:
            if params.value(tau, "c", t_cut + 1) > 0 and not lex_less(tau + "0", sigma):
                problems.append(f"positive counter at {tau!r} not lex-left")
        if not (trace.x[trace.T] - trace.x[t_cut + 1]) <= pow2(-(t_cut + 1)):
            problems.append("tail bound x_T - x_{t+1} <= 2^-(t+1) violated")
        if problems:
            findings.append(("fail", {"sigma": sigma, "t1": t1, "t_cut": t_cut,
                                      "problems": problems}))
        else:
            findings.append(("pass", {"sigma": sigma, "t1": t1, "t_cut": t_cut}))
    return _make_report(
        "cutoffs",
        findings,
        ["stability of each threat approximated by the absence of later "
         "in-horizon initialisations"],
    )


# ---------------------------------------------------------------------------
# Negative requirements


def _require_declared_increasing(registry: PhiRegistry, e: int) -> None:
    cls = registry.classification(e)
    if cls is True:
        return
    if cls is None:
        raise ValueError(
            f"slot {e} is a program without a declared classification; refusing"
        )
    raise ValueError(f"slot {e} is not declared total and increasing; refusing")


def check_requirement_N(
    trace: Trace, registry: PhiRegistry | None = None, e: int = 0, mode: str | None = None
) -> Report:
    """One-sided certification of the negative requirement for slot e.

    Engine A form: find the least m with x_T - x_{phi_e(m)} >= 2**-m (sound
    because the limit dominates x_T).  Engine B form: report the widest
    window [m, n_max] on which the inequality holds for every n.
    """
    registry = _registry_for(trace, registry)
    _require_declared_increasing(registry, e)
    mode = mode or trace.engine
    findings: list[tuple[str, dict]] = []
    x = trace.x
    for t in range(trace.T):
        if x[t + 1] < x[t]:
            findings.append(("fail", {"error": f"x decreases at stage {t}"}))
            return _make_report(f"requirement_n[{e}]", findings)
    l_max = registry.ell(e, trace.T)
    if mode == "A":
        for m in range(l_max + 1):
            v = registry.step(e, m, trace.T)
            if (x[trace.T] - x[v]) >= pow2(-m):
                findings.append(("pass", {"e": e, "m": m, "mode": "A"}))
                break
        else:
            findings.append(("incomplete", {"e": e, "note": "not yet",
                                            "searched_up_to": l_max}))
    else:
        holds = []
        for n in range(l_max + 1):
            v = registry.step(e, n, trace.T)
            holds.append((x[trace.T] - x[v]) >= pow2(-n))
        best = (0, -1)  # (start, end) of the longest run, end inclusive
        start = None
        for n, ok in enumerate(holds + [False]):
            if ok and start is None:
                start = n
            elif not ok and start is not None:
                if n - start > best[1] - best[0] + 1:
                    best = (start, n - 1)
                start = None
        if best[1] >= best[0]:
            findings.append(("pass", {"e": e, "m": best[0], "n_max": best[1],
                                      "mode": "B",
                                      "note": "inequality certified on the window; "
                                              "the tail is horizon-conditional"}))
        else:
            findings.append(("incomplete", {"e": e, "note": "not yet",
                                            "searched_up_to": l_max}))
    return _make_report(f"requirement_n[{e}]", findings)


# ---------------------------------------------------------------------------
# Positive requirements


def check_requirement_P(
    trace: Trace, registry: PhiRegistry | None = None, e: int = 0
) -> Report:
    """Modulus extraction and gap verification for the positive requirement.

    Computes the stage t(n) at which the true-path strategy of length e has
    pushed its restraint past the needed level (engine B additionally needs
    the prefix witness sum small enough), takes v(n) as the chain length
    there, and checks every in-horizon difference x_{phi_e(i+1)} - x_{phi_e(i)}
    with i >= v(n) against 2**-n.  Realisable n report pass or fail; the
    first unrealisable n reports incomplete and stops the scan.
    """
    registry = _registry_for(trace, registry)
    _require_declared_increasing(registry, e)
    est = true_path_estimate([rec.settled for rec in trace.stages])
    if len(est.path) < e or est.stable_upto < e:
        return _make_report(
            f"requirement_p[{e}]",
            [("incomplete", {"e": e,
                             "note": "true-path estimate unstable at this length",
                             "stable_upto": est.stable_upto})],
        )
    sigma = est.path[:e]
    offline = _Offline(trace, registry)
    params = offline.params
    assumptions = [f"true-path prefix {sigma or 'the root'!r} taken from the "
                   f"windowed estimate (stable_upto={est.stable_upto})"]

    last_init = _last_initialization(trace, sigma)
    t0 = 0 if last_init is None else last_init + 1
    if trace.engine == "B":
        S = registry.total_increasing_indices()
        for length in range(e + 1):
            if registry.classification(length) is None:
                return _make_report(
                    f"requirement_p[{e}]",
                    [("incomplete", {"e": e, "note": f"slot {length} lacks a "
                                     "declared classification; refusing"})],
                )
        for length in range(e + 1):
            if length not in S:
                tau = est.path[:length]
                for t_thr in threat_stages(trace, tau):
                    t0 = max(t0, t_thr + 1)
    assumptions.append(f"post-stability horizon approximated as t0={t0}")

    exp_stages = [
        t for t in range(t0, trace.T)
        if trace.stages[t].settled.startswith(sigma)
        and offline.expansionary(sigma, t)
    ]
    l_max = registry.ell(e, trace.T)
    phi_vals = [registry.step(e, i, trace.T) for i in range(l_max + 1)]
    findings: list[tuple[str, dict]] = []
    n = 0
    while True:
        t_n = None
        for t in exp_stages:
            r_here = params.value(sigma, "r", t)
            if trace.engine == "A":
                if r_here >= n + 2:
                    t_n = t
                    break
            else:
                if r_here >= n + 3 and _witness_sum(params, registry, est.path, e, t) <= pow2(-(n + 1)):
                    t_n = t
                    break
        if t_n is None:
            findings.append(("incomplete", {"n": n, "note": "t(n) beyond horizon"}))
            break
        v_n = registry.ell(e, t_n)
        bad = None
        for i in range(v_n, l_max):
            if not (trace.x[phi_vals[i + 1]] - trace.x[phi_vals[i]]) < pow2(-n):
                bad = i
                break
        if bad is not None:
            findings.append(("fail", {"n": n, "v_n": v_n, "i": bad,
                                      "difference_exceeds": f"2^-{n}"}))
        else:
            findings.append(("pass", {"n": n, "t_n": t_n, "v_n": v_n,
                                      "checked_i_up_to": l_max - 1}))
        n += 1
    return _make_report(f"requirement_p[{e}]", findings, assumptions)


def _witness_sum(params: _ParamView, registry: PhiRegistry, path: BinStr, e: int, t: int) -> Dyadic:
    """Exact sum of 2**(-w(tau)[t] + 1) over declared-increasing prefixes."""
    S = registry.total_increasing_indices()
    total = Dyadic(0)
    for length in range(e + 1):
        if length in S:
            total = total + pow2(-params.value(path[:length], "w", t) + 1)
    return total


# ---------------------------------------------------------------------------
# Settlement facts


def check_settlement_facts(trace: Trace, registry: PhiRegistry | None = None) -> Report:
    """Consistency of every stage with the substage rules: descent bits
    justified by the re-evaluated predicates, counters clear along the
    0-spine, threat episodes closed once complete, one threat per witness
    value, and (second construction) the pause-flag laws."""
    registry = _registry_for(trace, registry)
    offline = _Offline(trace, registry)
    params = offline.params
    configured = registry.configured_indices()
    findings: list[tuple[str, dict]] = []
    c_written = sorted(
        {s for rec in trace.stages for s, f, _ in rec.param_writes if f == "c"}
    )

    def violation(**detail):
        findings.append(("fail", detail))

    for rec in trace.stages:
        t, settled, kind = rec.t, rec.settled, rec.action.kind
        if kind not in TERMINAL_KINDS:
            violation(t=t, law="terminal action kind", kind=kind)
            continue
        if rec.action.sigma != settled:
            violation(t=t, law="settles on the acting strategy",
                      settled=settled, action_sigma=rec.action.sigma)
        if kind == TOP_OUT and len(settled) != t:
            violation(t=t, law="top-out at depth t", settled_len=len(settled))
        if kind != TOP_OUT and len(settled) >= t:
            violation(t=t, law="early termination below depth t")

        # descent bits: each applied proper prefix must not have been
        # threatened, and its continuation bit must match its expansion state
        try:
            for depth in range(len(settled)):
                rho = settled[:depth]
                if depth in configured:
                    if offline.threatened(rho, t):
                        violation(t=t, law="threatened prefix passed over", rho=rho)
                        break
                    if offline.expansionary(rho, t):
                        if params.value(rho, "c", t) != 0:
                            violation(t=t, law="pending counter passed over", rho=rho)
                            break
                        want = "0"
                    else:
                        want = "1"
                else:
                    want = "1"
                if settled[depth] != want:
                    violation(t=t, law="descent bit", rho=rho, expected=want,
                              got=settled[depth])
                    break
            # the settled strategy itself must justify the terminal action
            if kind != TOP_OUT:
                thr = offline.threatened(settled, t) if len(settled) in configured else False
                if kind in THREAT_KINDS and not thr:
                    violation(t=t, law="threat action without threat", sigma=settled)
                if kind in EXPANSION_KINDS:
                    if thr:
                        violation(t=t, law="counter action while threatened",
                                  sigma=settled)
                    elif not (len(settled) in configured and offline.expansionary(settled, t)):
                        violation(t=t, law="counter action without expansion",
                                  sigma=settled)
                    elif params.value(settled, "c", t) == 0:
                        violation(t=t, law="counter action with zero counter",
                                  sigma=settled)
        except TraceCorruption as exc:
            violation(t=t, law="predicate evaluation", error=str(exc))

        # every 0-predecessor of an applied strategy has a clean counter
        for gamma in c_written:
            if settled.startswith(gamma + "0") and params.value(gamma, "c", t) != 0:
                violation(t=t, law="counters clear along the 0-spine", gamma=gamma)

    # at most one handled threat per (strategy, witness value): a repeat
    # needs an intervening initialisation or bump, which raises the witness
    threat_witnesses: dict[tuple[BinStr, int], int] = {}
    for rec in trace.stages:
        if rec.action.kind in THREAT_KINDS:
            key = (rec.settled, params.value(rec.settled, "w", rec.t))
            if key in threat_witnesses:
                violation(law="single threat per witness value",
                          sigma=rec.settled, witness=key[1],
                          stages=[threat_witnesses[key], rec.t])
            else:
                threat_witnesses[key] = rec.t

    # fiber closure: once an episode's jumps reach the scheduled amount,
    # nothing further may be attributed to it
    try:
        u = u_map(trace)
    except TraceCorruption as exc:
        violation(law="jump attribution", error=str(exc))
        u = {}
    jumps = {rec.t: rec.jump for rec in trace.stages if rec.jump.sign() > 0}
    fibers: dict[int, list[int]] = {}
    for t, origin in u.items():
        fibers.setdefault(origin, []).append(t)
    for origin, members in fibers.items():
        sigma = trace.stages[origin].settled
        bound = pow2(-params.value(sigma, "w", origin))
        total = Dyadic(0)
        done_at = None
        for t in sorted(members):
            if done_at is not None:
                violation(law="fiber closed after completion", origin=origin,
                          late_jump=t)
                break
            total = total + jumps[t]
            if total == bound:
                done_at = t
            elif total > bound:
                violation(law="fiber sum bounded by schedule", origin=origin, t=t)
                break

    if trace.engine == "B":
        _check_pause_facts(trace, params, findings)

    findings_wrapped = findings if findings else [("pass", {"stages": trace.T})]
    return _make_report("settlement", findings_wrapped)


def _check_pause_facts(trace: Trace, params: _ParamView, findings) -> None:
    """Pause alternation, no consecutive threats, witness bump per threat."""
    p_written = sorted({s for rec in trace.stages
                        for s, f, _ in rec.param_writes if f == "p"})
    threat_at: dict[tuple[BinStr, int], bool] = {}
    for rec in trace.stages:
        if rec.action.kind in THREAT_KINDS:
            threat_at[(rec.settled, rec.t)] = True
            w_before = params.value(rec.settled, "w", rec.t)
            wanted = (rec.settled, "w", w_before + 1)
            if wanted not in rec.param_writes:
                findings.append(("fail", {"law": "witness grows by one per threat",
                                          "sigma": rec.settled, "t": rec.t}))
    for sigma in p_written:
        apps = [t for t in range(trace.T)
                if trace.stages[t].settled.startswith(sigma)]
        for t1, t2 in zip(apps, apps[1:]):
            if params.value(sigma, "p", t1) == 1 and params.value(sigma, "p", t2) == 1:
                findings.append(("fail", {"law": "pause alternation",
                                          "sigma": sigma, "t1": t1, "t2": t2}))
            if threat_at.get((sigma, t1)) and threat_at.get((sigma, t2)):
                findings.append(("fail", {"law": "no consecutive threats",
                                          "sigma": sigma, "t1": t1, "t2": t2}))


# ---------------------------------------------------------------------------
# Expansion gap bound (second construction)


def check_expansion_gap_bound(trace: Trace, registry: PhiRegistry | None = None) -> Report:
    """Between consecutive expansionary applications of a stable strategy,
    the approximation may grow by at most twice its restraint bound plus the
    witness sum of its declared-increasing prefixes."""
    if trace.engine != "B":
        raise ValueError("the witness-sum gap bound applies to engine B traces")
    registry = _registry_for(trace, registry)
    offline = _Offline(trace, registry)
    params = offline.params
    est = true_path_estimate([rec.settled for rec in trace.stages])
    S = registry.total_increasing_indices()
    findings: list[tuple[str, dict]] = []
    assumptions = [f"true-path estimate stable to length {est.stable_upto}"]

    for length in range(est.stable_upto + 1):
        sigma = est.path[:length]
        if any(registry.classification(i) is None for i in range(length + 1)):
            findings.append(("incomplete", {"sigma": sigma,
                                            "note": "undeclared program slot in "
                                            "scope; refusing this prefix"}))
            continue
        last_init = _last_initialization(trace, sigma)
        t0 = 0 if last_init is None else last_init + 1
        for sub in range(length + 1):
            if sub not in S:
                for t_thr in threat_stages(trace, est.path[:sub]):
                    t0 = max(t0, t_thr + 1)
        exp_stages = [
            t for t in range(t0, trace.T)
            if trace.stages[t].settled.startswith(sigma)
            and offline.expansionary(sigma, t)
        ]
        pairs = 0
        for t1, t2 in zip(exp_stages, exp_stages[1:]):
            bound = pow2(-params.value(sigma, "r", t1) + 1) + _witness_sum(
                params, registry, est.path, length, t1
            )
            if not (trace.x[t2] - trace.x[t1]) <= bound:
                findings.append(("fail", {"sigma": sigma, "t1": t1, "t2": t2,
                                          "gap": str(trace.x[t2] - trace.x[t1]),
                                          "bound": str(bound)}))
            pairs += 1
        if pairs:
            findings.append(("pass", {"sigma": sigma, "pairs": pairs, "t0": t0}))
    return _make_report("expansion_gap", findings, assumptions)


# ---------------------------------------------------------------------------
# Orchestration

CHECK_NAMES = (
    "monotonicity",
    "convergence",
    "jump_sums",
    "cutoffs",
    "requirement_n",
    "requirement_p",
    "settlement",
    "expansion_gap",
)


def run_checks(
    trace: Trace,
    registry: PhiRegistry | None = None,
    checks: list[str] | None = None,
) -> list[Report]:
    """Run the selected checkers (default: all that apply to the engine)."""
    registry = _registry_for(trace, registry)
    selected = list(checks) if checks is not None else list(CHECK_NAMES)
    unknown = [c for c in selected if c not in CHECK_NAMES]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)}")
    reports: list[Report] = []
    for name in selected:
        if name == "monotonicity":
            reports.append(check_monotonicity(trace))
        elif name == "convergence":
            reports.append(check_convergence_bound(trace))
        elif name == "jump_sums":
            reports.append(check_jump_sums(trace, registry))
        elif name == "cutoffs":
            if trace.engine == "A":
                reports.append(check_cutoffs(trace, registry))
            elif checks is not None:
                raise ValueError("cutoffs apply to engine A traces only")
        elif name == "expansion_gap":
            if trace.engine == "B":
                reports.append(check_expansion_gap_bound(trace, registry))
            elif checks is not None:
                raise ValueError("expansion_gap applies to engine B traces only")
        elif name == "settlement":
            reports.append(check_settlement_facts(trace, registry))
        elif name == "requirement_n":
            for e in sorted(registry.total_increasing_indices()):
                reports.append(check_requirement_N(trace, registry, e))
        elif name == "requirement_p":
            for e in sorted(registry.total_increasing_indices()):
                reports.append(check_requirement_P(trace, registry, e))
    return reports
