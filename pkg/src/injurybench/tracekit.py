"""Trace data model, serialisation, and parameter replay.

A run of either engine produces one stage record per stage plus the exact
approximation sequence.  The trace is the single substrate every checker
consumes, so it is stored as diffable line-oriented JSON: a header object
followed by one record object per line.  Dyadics are serialised as
``{"m": "<int>", "k": <int>}`` string/int pairs so no precision is lost.

Initialisations touch infinitely many strategies, so records store them as
symbolic regions (anchor word plus relation) rather than memberships, and
the per-strategy parameter timelines are reconstructed on demand from the
defaults, the regions, and the explicit writes.
"""

from __future__ import annotations

import hashlib
import json
from bisect import bisect_right
from dataclasses import dataclass, field

from .dyadic import ZERO, Dyadic
from .phi import config_digest
from .strings import BinStr, is_proper_prefix, lex_less, nu

__all__ = [
    "TOP_OUT",
    "THREAT_JUMP",
    "THREAT_SCHEDULE",
    "EXPANSION_INCREMENT",
    "EXPANSION_JUMP",
    "EXPANSION_DELEGATE",
    "DESCEND",
    "JUMP_KINDS",
    "TERMINAL_KINDS",
    "THREAT_KINDS",
    "EXPANSION_KINDS",
    "REL_LEX",
    "REL_LEX_OR_EXT",
    "Action",
    "StageRecord",
    "Trace",
    "TraceCorruption",
    "TraceParseError",
    "region_contains",
    "region_covers_right_of",
    "serialize",
    "deserialize",
    "replay_params",
    "param_changepoints",
    "strategies_with_writes",
    "write_sequence_csv",
    "read_sequence_csv",
]

# Stage-terminal actions.  EXPANSION_INCREMENT and DESCEND name the two
# intra-stage moves; the engines never settle a stage on them, and their
# appearance as a terminal action marks a corrupt trace.
TOP_OUT = "top_out"
THREAT_JUMP = "threat_jump"
THREAT_SCHEDULE = "threat_schedule"
EXPANSION_INCREMENT = "expansion_increment"
EXPANSION_JUMP = "expansion_jump"
EXPANSION_DELEGATE = "expansion_delegate"
DESCEND = "descend"

JUMP_KINDS = frozenset({THREAT_JUMP, EXPANSION_JUMP})
THREAT_KINDS = frozenset({THREAT_JUMP, THREAT_SCHEDULE})
EXPANSION_KINDS = frozenset({EXPANSION_JUMP, EXPANSION_DELEGATE})
TERMINAL_KINDS = frozenset(
    {TOP_OUT, THREAT_JUMP, THREAT_SCHEDULE, EXPANSION_JUMP, EXPANSION_DELEGATE}
)

# Initialisation region relations: everything strictly lex-right of the
# anchor, or additionally every proper extension of it.
REL_LEX = "lex_gt"
REL_LEX_OR_EXT = "lex_gt_or_ext"


class TraceCorruption(Exception):
    """A structurally well-formed trace violates a construction invariant."""


class TraceParseError(Exception):
    """The byte stream is not a well-formed trace file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def region_contains(anchor: BinStr, rel: str, sigma: BinStr) -> bool:
    """Membership of sigma in a symbolic initialisation region."""
    if lex_less(anchor, sigma):
        return True
    return rel == REL_LEX_OR_EXT and is_proper_prefix(anchor, sigma)


def region_covers_right_of(anchor: BinStr, rel: str, sigma: BinStr) -> bool:
    """True iff the region contains every tau with sigma <_L tau or sigma a
    proper prefix of tau (the set a completed threat must wipe)."""
    if rel == REL_LEX_OR_EXT:
        return anchor == sigma or sigma.startswith(anchor) or lex_less(anchor, sigma)
    return lex_less(anchor, sigma)


@dataclass(frozen=True)
class Action:
    """Stage-terminal action with the fields its kind uses.

    sigma: strategy the stage settled on (all kinds);
    exponent: jump size log for the jump kinds (jump = 2**-exponent);
    gamma/counter: delegation target and scheduled counter value;
    alpha/k: decoded counter label and remaining-jump count for the
    expansion kinds.
    """

    kind: str
    sigma: BinStr = ""
    gamma: BinStr | None = None
    counter: int | None = None
    alpha: BinStr | None = None
    k: int | None = None
    exponent: int | None = None

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind, "sigma": self.sigma}
        for key in ("gamma", "counter", "alpha", "k", "exponent"):
            val = getattr(self, key)
            if val is not None:
                obj[key] = val
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Action":
        return cls(
            kind=obj["kind"],
            sigma=obj.get("sigma", ""),
            gamma=obj.get("gamma"),
            counter=obj.get("counter"),
            alpha=obj.get("alpha"),
            k=obj.get("k"),
            exponent=obj.get("exponent"),
        )


@dataclass(frozen=True)
class StageRecord:
    """Complete audit record of one stage.

    The substage path is not stored: the applied strategies of a stage are
    exactly the prefixes of the settled word, so ``applied`` is derived.
    ``param_writes`` lists the explicit (strategy, field, new value) writes
    in substage order; carried-over values and region effects are not
    repeated here.
    """

    t: int
    settled: BinStr
    action: Action
    jump: Dyadic
    init_regions: tuple[tuple[BinStr, str], ...]
    param_writes: tuple[tuple[BinStr, str, int], ...]

    @property
    def applied(self) -> list[BinStr]:
        return [self.settled[:i] for i in range(len(self.settled) + 1)]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "settled": self.settled,
            "action": self.action.to_json(),
            "jump": self.jump.to_json(),
            "init_regions": [[a, r] for a, r in self.init_regions],
            "param_writes": [[s, f, v] for s, f, v in self.param_writes],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StageRecord":
        return cls(
            t=obj["t"],
            settled=obj["settled"],
            action=Action.from_json(obj["action"]),
            jump=Dyadic.from_json(obj["jump"]),
            init_regions=tuple((a, r) for a, r in obj["init_regions"]),
            param_writes=tuple((s, f, int(v)) for s, f, v in obj["param_writes"]),
        )


@dataclass
class Trace:
    """Immutable-by-convention record of a whole run."""

    engine: str  # "A" | "B"
    config: dict  # registry configuration the run used
    stages: list[StageRecord]
    x: list[Dyadic]  # length T + 1
    version: int = 1

    @property
    def T(self) -> int:
        return len(self.stages)

    @property
    def flag_field(self) -> str:
        return "s" if self.engine == "A" else "p"

    def config_digest(self) -> str:
        return config_digest(self.config)

    def digest(self) -> str:
        """Deterministic digest of the canonical serialisation."""
        return hashlib.sha256(serialize(self)).hexdigest()

    def jump_stages(self) -> list[int]:
        """The set J of stages whose jump is positive, in order."""
        return [rec.t for rec in self.stages if rec.jump.sign() > 0]


# ---------------------------------------------------------------------------
# Serialisation


def serialize(trace: Trace, created_at: str | None = None) -> bytes:
    """Lossless line-oriented encoding: header object, then one record per line.

    ``created_at`` is a purely informational header field; the digest is
    always computed over the form without it.
    """
    header = {
        "engine": trace.engine,
        "T": trace.T,
        "phi_config_digest": trace.config_digest(),
        "version": trace.version,
        "phi_config": trace.config,
    }
    if created_at is not None:
        header["created_at"] = created_at
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for rec in trace.stages:
        lines.append(json.dumps(rec.to_json(), sort_keys=True, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize(data: bytes) -> Trace:
    """Parse a trace file, rebuilding the x sequence from the jumps."""
    text = data.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise TraceParseError("empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"bad header: {exc}", line=1) from None
    for key in ("engine", "T", "version", "phi_config"):
        if key not in header:
            raise TraceParseError(f"header missing {key!r}", line=1)
    stages: list[StageRecord] = []
    x = [ZERO]
    for i, ln in enumerate(lines[1:], start=2):
        try:
            rec = StageRecord.from_json(json.loads(ln))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise TraceParseError(f"bad stage record: {exc}", line=i) from None
        if rec.t != len(stages):
            raise TraceParseError(f"stage {rec.t} out of order", line=i)
        if (rec.jump.sign() > 0) != (rec.action.kind in JUMP_KINDS):
            raise TraceParseError(
                f"jump/action mismatch at stage {rec.t}", line=i
            )
        if rec.jump.sign() < 0:
            raise TraceParseError(f"negative jump at stage {rec.t}", line=i)
        stages.append(rec)
        x.append(x[-1] + rec.jump)
    if len(stages) != header["T"]:
        raise TraceParseError(
            f"header says T={header['T']} but {len(stages)} records present"
        )
    return Trace(
        engine=header["engine"],
        config=header["phi_config"],
        stages=stages,
        x=x,
        version=header["version"],
    )


# ---------------------------------------------------------------------------
# Parameter replay

_DEFAULTS = {"c": 0, "r": 0, "s": 0, "p": 0}


def param_changepoints(trace: Trace, sigma: BinStr, fld: str) -> list[tuple[int, int]]:
    """Changepoint timeline [(time, value), ...] of one parameter.

    Reconstructed from the default, the explicit writes, and the covering
    initialisation regions; a write and a region effect from the same stage
    cannot collide for engine-produced traces, but if a hand-mutated trace
    makes them collide the region effect wins (matching engine commit
    order).  The list starts at time 0 and is strictly increasing in time.
    """
    if fld == "w":
        default = nu(sigma)
    else:
        if fld not in _DEFAULTS:
            raise ValueError(f"unknown parameter field {fld!r}")
        default = _DEFAULTS[fld]
    points = [(0, default)]
    # initialisation resets counters and witnesses in both constructions,
    # the satisfaction flag only in the first; restraints and pause flags
    # are never touched by regions
    init_affects = fld in ("c", "w") or (fld == "s" and trace.engine == "A")
    for rec in trace.stages:
        eff = None
        for s, f, v in rec.param_writes:
            if s == sigma and f == fld:
                eff = v
        if init_affects:
            for anchor, rel in rec.init_regions:
                if region_contains(anchor, rel, sigma):
                    eff = nu(sigma) + rec.t + 2 if fld == "w" else 0
        if eff is not None and eff != points[-1][1]:
            points.append((rec.t + 1, eff))
    return points


def replay_params(trace: Trace, sigma: BinStr, t: int, fld: str) -> int:
    """Value of a parameter at time t, reconstructed from the trace."""
    points = param_changepoints(trace, sigma, fld)
    times = [pt for pt, _ in points]
    return points[bisect_right(times, t) - 1][1]


def strategies_with_writes(trace: Trace) -> list[BinStr]:
    """All strategies that ever received an explicit parameter write."""
    seen: dict[BinStr, None] = {}
    for rec in trace.stages:
        for s, _f, _v in rec.param_writes:
            seen.setdefault(s, None)
    return list(seen)


# ---------------------------------------------------------------------------
# Sequence CSV (shared with the speed module)


def write_sequence_csv(x: list[Dyadic], path: str) -> None:
    """Write the exact sequence as rows ``t,mantissa,exponent``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,mantissa,exponent\n")
        for t, val in enumerate(x):
            fh.write(f"{t},{val.m},{val.k}\n")


def read_sequence_csv(path: str) -> list[Dyadic]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,mantissa,exponent":
            raise ValueError(f"unexpected sequence CSV header {header!r}")
        out = []
        for i, ln in enumerate(fh):
            ln = ln.strip()
            if not ln:
                continue
            t_str, m_str, k_str = ln.split(",")
            if int(t_str) != i:
                raise ValueError(f"sequence CSV rows out of order at {i}")
            out.append(Dyadic(int(m_str), int(k_str)))
    return out
