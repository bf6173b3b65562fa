"""Stage/substage drivers for the two priority constructions.

Both constructions run the same skeleton: a stage walks down the strategy
tree from the root, one substage per tree level, until either the walk
reaches depth t (top-out), a strategy defeats a threat to its negative
requirement (jumping or scheduling split jumps), or a strategy with a
positive counter executes or delegates one scheduled jump.  The stage then
initialises a symbolic region of strategies and commits its parameter
writes.  The differences between the two variants -- satisfaction flag
versus pause flag, witness bumps, and the initialisation regions -- live in
a small rule table so the shared driver stays auditable.

Parameter storage is sparse: a strategy materialises only when it receives
an explicit write.  Everything else is derived on demand from the defaults
(counter 0, restraint 0, flag 0, witness nu(sigma)) and the latest
initialisation region covering it, which is what makes stages that descend
thousands of levels cheap.  Within a stage, writes go to a staging map so
that the "[t+1]" reads the construction performs (a delegation consulting a
restraint raised earlier in the same stage) see the new value while "[t]"
reads do not.

The substage read protocol is fixed and shared verbatim with the naive
replay oracle so that read logs can be compared value for value:

  1. the strategy's flag is read once per substage (feeds both predicates);
  2. threat test: flag must be 0; then the chain length; the witness is
     read only when the chain length is >= 0; then the exact gap test;
  3. on a threat, candidate restraints are read next-slot from the longest
     0-predecessor downward until one blocks;
  4. expansion test (variant A only when the flag is 1): chain length, then
     the restraint is read when the chain length is >= 0; then the gap test;
  5. when expansionary, the counter is read; a delegation reads the
     target's restraint next-slot.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dyadic import ZERO, Dyadic, pow2
from .phi import PhiRegistry
from .strings import BinStr, nu, nu_inv, pair, cantor_unpair
from .tracekit import (
    EXPANSION_DELEGATE,
    EXPANSION_JUMP,
    REL_LEX,
    REL_LEX_OR_EXT,
    THREAT_JUMP,
    THREAT_SCHEDULE,
    TOP_OUT,
    Action,
    StageRecord,
    Trace,
    TraceCorruption,
    region_contains,
)

__all__ = [
    "RULES_A",
    "RULES_B",
    "EngineState",
    "new_engine_a",
    "new_engine_b",
    "run_engine",
    "run_stage",
    "run_a",
    "run_b",
    "is_threatened",
    "is_expansionary",
    "u_map",
    "threat_stages",
    "cutoff_stages",
]


@dataclass(frozen=True)
class RuleSet:
    """The variant-specific deltas, one instance per construction."""

    tag: str
    flag_field: str  # "s" (satisfaction) | "p" (pause)
    expansion_needs_flag: bool  # A: expansionary requires flag == 1
    unpause_when_unthreatened: bool  # B: write flag := 0 on a no-threat visit
    bump_witness_on_threat: bool  # B: w := w + 1 on every handled threat
    init_resets_flag: bool  # A: initialisation writes flag := 0
    threat_region_rel: str  # region relation anchored at the threatened strategy
    counter_anchor_alpha: bool  # A: counter stage inits around the decoded label


RULES_A = RuleSet(
    tag="A",
    flag_field="s",
    expansion_needs_flag=True,
    unpause_when_unthreatened=False,
    bump_witness_on_threat=False,
    init_resets_flag=True,
    threat_region_rel=REL_LEX_OR_EXT,
    counter_anchor_alpha=True,
)

RULES_B = RuleSet(
    tag="B",
    flag_field="p",
    expansion_needs_flag=False,
    unpause_when_unthreatened=True,
    bump_witness_on_threat=True,
    init_resets_flag=False,
    threat_region_rel=REL_LEX,
    counter_anchor_alpha=False,
)


class _Params:
    """Materialised parameter block of one strategy (current values)."""

    __slots__ = ("c", "r", "flag", "w")

    def __init__(self, c: int, r: int, flag: int, w: int):
        self.c = c
        self.r = r
        self.flag = flag
        self.w = w


class EngineState:
    """Mutable construction state; advance it one stage at a time."""

    def __init__(self, registry: PhiRegistry, rules: RuleSet, record_reads: bool = False):
        self.registry = registry
        self.rules = rules
        self.t = 0
        self.x: list[Dyadic] = [ZERO]
        self.params: dict[BinStr, _Params] = {}
        self.init_events: list[tuple[int, BinStr, str]] = []
        self.settlements: list[BinStr] = []
        self.records: list[StageRecord] = []
        # reads as (t, sigma, field, "cur"|"next", value); None disables logging
        self.read_log: list[tuple] | None = [] if record_reads else None
        self._staged: dict[tuple[BinStr, str], int] = {}
        self._write_order: list[tuple[BinStr, str, int]] = []
        # incremental scan position into init_events for lazily-derived witnesses
        self._w_scan: dict[BinStr, list] = {}
        self._max_param_len = -1
        self._configured = registry.configured_indices()

    # -- parameter access --------------------------------------------------

    def _lazy_w(self, sigma: BinStr) -> int:
        scan = self._w_scan.get(sigma)
        if scan is None:
            scan = self._w_scan[sigma] = [0, None]
        idx, cover = scan
        events = self.init_events
        while idx < len(events):
            stage, anchor, rel = events[idx]
            if region_contains(anchor, rel, sigma):
                cover = stage
            idx += 1
        scan[0] = idx
        scan[1] = cover
        return nu(sigma) if cover is None else nu(sigma) + cover + 2

    def _current(self, sigma: BinStr, fld: str) -> int:
        if len(sigma) <= self._max_param_len:
            p = self.params.get(sigma)
            if p is not None:
                return p.flag if fld == self.rules.flag_field else getattr(p, fld)
        if fld == "w":
            return self._lazy_w(sigma)
        return 0

    def _read(self, sigma: BinStr, fld: str, nxt: bool = False) -> int:
        if nxt:
            key = (sigma, fld)
            val = self._staged[key] if key in self._staged else self._current(sigma, fld)
        else:
            val = self._current(sigma, fld)
        if self.read_log is not None:
            self.read_log.append((self.t, sigma, fld, "next" if nxt else "cur", val))
        return val

    def peek_param(self, sigma: BinStr, fld: str) -> int:
        """Committed value at the current time, without read logging."""
        return self._current(sigma, fld)

    def _stage_write(self, sigma: BinStr, fld: str, val: int) -> None:
        key = (sigma, fld)
        assert key not in self._staged, f"double write {key} in stage {self.t}"
        self._staged[key] = val
        self._write_order.append((sigma, fld, val))

    # -- predicates ----------------------------------------------------------

    def _gap_below(self, e: int, l: int, exponent: int) -> bool:
        """Exact test x_t - x_{phi_e(l)} < 2**-exponent."""
        v = self.registry.step(e, l, self.t)
        if v is None or v > self.t:
            raise TraceCorruption(
                f"chain length {l} of slot {e} not convergent at stage {self.t}"
            )
        gap = self.x[self.t] - self.x[v]
        return gap < pow2(-exponent)

    def _threat_info(self, sigma: BinStr, e: int) -> tuple[bool, int, int | None, int]:
        """(threatened, flag, witness-or-None, chain length) for this substage."""
        flag = self._read(sigma, self.rules.flag_field)
        if flag != 0:
            return False, flag, None, -2
        l = self.registry.ell(e, self.t) if e in self._configured else -1
        if l < 0:
            return False, flag, None, l
        w = self._read(sigma, "w")
        if l < w:
            return False, flag, w, l
        return self._gap_below(e, l, w), flag, w, l

    def _expansion_info(self, sigma: BinStr, e: int, flag: int) -> tuple[bool, int | None]:
        """(expansionary, restraint-or-None); flag was already read."""
        if self.rules.expansion_needs_flag and flag != 1:
            return False, None
        l = self.registry.ell(e, self.t) if e in self._configured else -1
        if l < 0:
            return False, None
        r = self._read(sigma, "r")
        return self._gap_below(e, l, r), r

    def is_threatened(self, sigma: BinStr) -> bool:
        """Threat predicate at the current stage start (no logging, no staging)."""
        log, self.read_log = self.read_log, None
        try:
            return self._threat_info(sigma, len(sigma))[0]
        finally:
            self.read_log = log

    def is_expansionary(self, sigma: BinStr) -> bool:
        """Expansion predicate at the current stage start."""
        log, self.read_log = self.read_log, None
        try:
            flag = self._current(sigma, self.rules.flag_field)
            return self._expansion_info(sigma, len(sigma), flag)[0]
        finally:
            self.read_log = log


def new_engine_a(registry: PhiRegistry, record_reads: bool = False) -> EngineState:
    return EngineState(registry, RULES_A, record_reads)


def new_engine_b(registry: PhiRegistry, record_reads: bool = False) -> EngineState:
    return EngineState(registry, RULES_B, record_reads)


def run_stage(state: EngineState) -> StageRecord:
    """Execute one full stage and return its record."""
    t = state.t
    rules = state.rules
    state._staged.clear()
    state._write_order.clear()

    sigma = ""
    action: Action | None = None
    jump_exp: int | None = None
    region: tuple[BinStr, str] | None = None

    while True:
        e = len(sigma)
        if e == t:
            action = Action(TOP_OUT, sigma=sigma)
            region = (sigma, REL_LEX)
            break

        threatened, flag, w, _l = state._threat_info(sigma, e)

        if rules.unpause_when_unthreatened and not threatened and flag != 0:
            state._stage_write(sigma, rules.flag_field, 0)

        if threatened:
            # find the longest 0-predecessor whose raised restraint blocks the jump
            gamma = None
            r_next = None
            for j in range(e - 1, -1, -1):
                if sigma[j] == "0":
                    cand = sigma[:j]
                    r_cand = state._read(cand, "r", nxt=True)
                    if r_cand >= w:
                        gamma, r_next = cand, r_cand
                        break
            if gamma is None:
                jump_exp = w
                action = Action(THREAT_JUMP, sigma=sigma, exponent=w)
            else:
                counter = pair(sigma, 1 << (r_next - w))
                state._stage_write(gamma, "c", counter)
                action = Action(THREAT_SCHEDULE, sigma=sigma, gamma=gamma, counter=counter)
            state._stage_write(sigma, rules.flag_field, 1)
            if rules.bump_witness_on_threat:
                state._stage_write(sigma, "w", w + 1)
            region = (sigma, rules.threat_region_rel)
            break

        expansionary, r = state._expansion_info(sigma, e, flag)
        if not expansionary:
            sigma += "1"
            continue

        c = state._read(sigma, "c")
        if c == 0:
            state._stage_write(sigma, "r", r + 1)
            sigma += "0"
            continue

        # execute or delegate one scheduled jump
        m_code, second = cantor_unpair(c)
        if second == 0:
            raise TraceCorruption(
                f"counter {c} of {sigma!r} decodes to a zero remaining count"
            )
        alpha = nu_inv(m_code)
        k = second - 1
        j = sigma.rfind("0")
        if j < 0:
            jump_exp = r
            action = Action(EXPANSION_JUMP, sigma=sigma, alpha=alpha, k=k, exponent=r)
        else:
            gamma = sigma[:j]
            r_next = state._read(gamma, "r", nxt=True)
            if r_next < r:
                raise TraceCorruption(
                    f"restraint of {gamma!r} fell below {sigma!r}'s at stage {t}"
                )
            counter = pair(alpha, 1 << (r_next - r))
            state._stage_write(gamma, "c", counter)
            action = Action(
                EXPANSION_DELEGATE, sigma=sigma, gamma=gamma, counter=counter,
                alpha=alpha, k=k,
            )
        state._stage_write(sigma, "c", 0 if k == 0 else pair(alpha, k))
        if rules.counter_anchor_alpha:
            region = (alpha, REL_LEX_OR_EXT)
        else:
            region = (sigma + "0", REL_LEX)
        break

    # ---- commit --------------------------------------------------------

    jump = pow2(-jump_exp) if jump_exp is not None else ZERO
    state.x.append(state.x[t] + jump)

    anchor, rel = region
    for (s, fld), val in state._staged.items():
        assert not region_contains(anchor, rel, s), (
            f"stage {t} writes into its own initialisation region at {s!r}"
        )
        p = state.params.get(s)
        if p is None:
            p = state.params[s] = _Params(0, 0, 0, state._lazy_w(s))
            state._w_scan.pop(s, None)
            if len(s) > state._max_param_len:
                state._max_param_len = len(s)
        if fld == rules.flag_field:
            p.flag = val
        else:
            setattr(p, fld, val)

    state.init_events.append((t, anchor, rel))
    for s, p in state.params.items():
        if region_contains(anchor, rel, s):
            p.c = 0
            p.w = nu(s) + t + 2
            if rules.init_resets_flag:
                p.flag = 0

    record = StageRecord(
        t=t,
        settled=sigma,
        action=action,
        jump=jump,
        init_regions=((anchor, rel),),
        param_writes=tuple(state._write_order),
    )
    state.settlements.append(sigma)
    state.records.append(record)
    state.t += 1
    return record


def run_engine(state: EngineState, T: int, hooks=None) -> Trace:
    """Drive a fresh or partially-run state up to stage T and package the trace."""
    if T < 1:
        raise ValueError("need at least one stage")
    while state.t < T:
        record = run_stage(state)
        if hooks is not None:
            hooks(record)
    return Trace(
        engine=state.rules.tag,
        config=state.registry.config,
        stages=list(state.records),
        x=list(state.x),
    )


def run_a(registry: PhiRegistry, T: int, hooks=None) -> Trace:
    """Deterministic run of the first construction; same config, same trace."""
    return run_engine(new_engine_a(registry), T, hooks)


def run_b(registry: PhiRegistry, T: int, hooks=None) -> Trace:
    """Deterministic run of the second construction."""
    return run_engine(new_engine_b(registry), T, hooks)


def is_threatened(state: EngineState, sigma: BinStr) -> bool:
    return state.is_threatened(sigma)


def is_expansionary(state: EngineState, sigma: BinStr) -> bool:
    return state.is_expansionary(sigma)


# ---------------------------------------------------------------------------
# Jump attribution


def threat_stages(trace: Trace, sigma: BinStr | None = None) -> list[int]:
    """Stages whose terminal action handled a threat (optionally for one strategy)."""
    out = []
    for rec in trace.stages:
        if rec.action.kind in (THREAT_JUMP, THREAT_SCHEDULE):
            if sigma is None or rec.settled == sigma:
                out.append(rec.t)
    return out


def u_map(trace: Trace) -> dict[int, int]:
    """Map each jump stage back to the stage of the threat that caused it.

    An immediate threat jump maps to itself; a scheduled jump executed while
    handling a counter maps to the latest earlier stage at which the decoded
    label was applied and threatened.  A jump matching neither case marks a
    corrupt trace.
    """
    threats: dict[BinStr, list[int]] = {}
    u: dict[int, int] = {}
    for rec in trace.stages:
        kind = rec.action.kind
        if rec.jump.sign() > 0:
            if kind == THREAT_JUMP:
                u[rec.t] = rec.t
            elif kind == EXPANSION_JUMP:
                alpha = rec.action.alpha
                origins = threats.get(alpha)
                if not origins:
                    raise TraceCorruption(
                        f"jump at stage {rec.t} refers to {alpha!r}, never threatened"
                    )
                u[rec.t] = origins[-1]
            else:
                raise TraceCorruption(
                    f"jump at stage {rec.t} with non-jump action {kind}"
                )
        if kind in (THREAT_JUMP, THREAT_SCHEDULE):
            threats.setdefault(rec.settled, []).append(rec.t)
    return u


def _last_covering_init(trace: Trace, sigma: BinStr, start: int = 0) -> int | None:
    last = None
    for rec in trace.stages[start:]:
        for anchor, rel in rec.init_regions:
            if region_contains(anchor, rel, sigma):
                last = rec.t
    return last


def cutoff_stages(trace: Trace, sigma: BinStr) -> int | None:
    """Largest jump stage attributed to sigma's stability-respecting threat.

    The originating threat stage is the last applied-and-threatened stage of
    sigma that no later in-horizon initialisation of sigma invalidates;
    returns None when there is no such stage or no jump has landed yet.
    Whether the returned stage is the true cut-off (all split jumps
    executed) is a separate completeness question the checkers decide.
    """
    candidates = threat_stages(trace, sigma)
    if not candidates:
        return None
    t1 = candidates[-1]
    if _last_covering_init(trace, sigma, start=t1) is not None:
        return None
    u = u_map(trace)
    fiber = [t for t, origin in u.items() if origin == t1]
    return max(fiber) if fiber else None
