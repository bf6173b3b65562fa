"""A configured family of partial functions with exact step semantics.

The constructions quantify over a standard enumeration of all computable
partial functions; at desk scale the registry holds a finite configured
family instead: closed-form total functions, finite partial graphs,
divergent slots, and programs for a tiny register machine whose step count
is exact.  Runs embed their registry configuration so results stay
reproducible, and the set of indices known to be total and increasing is
declared by configuration, never inferred.

Convergence uses the uniform gate: a query (e, n, t) converges iff the
slot's raw computation halts within t steps *and* its value is at most t.
The gate makes convergence monotone in t and guarantees that a converged
value never exceeds the stage that observed it.
"""

from __future__ import annotations

import hashlib
import json
from bisect import bisect_right

__all__ = [
    "PhiRegistry",
    "DEFAULT_CONFIG",
    "default_registry",
    "registry_from_config",
    "config_digest",
]


def config_digest(config: dict) -> str:
    """Stable hex digest of a registry configuration."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Slots


class _Slot:
    """One enumeration slot: deterministic raw semantics for each input n.

    ``raw(n, budget)`` returns (steps, value) if the raw computation halts
    within ``budget`` steps, else None.  Results are memoised; repeated
    queries agree.  ``total_increasing`` is the declared classification
    (True / False / None for unknown).
    """

    kind = "abstract"
    total_increasing: bool | None = None

    def raw(self, n: int, budget: int):
        raise NotImplementedError


class _FormulaSlot(_Slot):
    """Closed-form total function; the raw computation halts instantly."""

    def __init__(self, kind: str, fn, total_increasing: bool):
        self.kind = kind
        self._fn = fn
        self._memo: dict[int, int] = {}
        self.total_increasing = total_increasing

    def raw(self, n: int, budget: int):
        v = self._memo.get(n)
        if v is None:
            v = self._memo[n] = self._fn(n)
        return (0, v)


class _PartialSlot(_Slot):
    """Finite explicit graph; inputs outside the graph diverge."""

    kind = "partial"
    total_increasing = False

    def __init__(self, graph: dict[int, int]):
        self._graph = graph

    def raw(self, n: int, budget: int):
        v = self._graph.get(n)
        return None if v is None else (0, v)


class _DivergeSlot(_Slot):
    kind = "diverge"
    total_increasing = False

    def raw(self, n: int, budget: int):
        return None


class _ProgramSlot(_Slot):
    """Minimal register machine with unit cost per executed instruction.

    Instructions (JSON arrays):
      ["inc", r, next]            -- R[r] += 1, go to instruction `next`
      ["dec", r, next, on_zero]   -- if R[r] > 0: R[r] -= 1, go to `next`;
                                     else go to `on_zero`
      ["halt"]                    -- stop (costs one step)
    The input is placed in R0, the value read back from R0 on halt; running
    off the end of the program halts without an extra step.  Simulation
    state per input is saved so a larger budget resumes where the previous
    query stopped.
    """

    kind = "program"

    def __init__(self, code: list, total_increasing: bool | None):
        self._code = [tuple(instr) for instr in code]
        self._validate()
        self.total_increasing = total_increasing
        # n -> [regs, pc, steps, halted, value]
        self._state: dict[int, list] = {}

    def _validate(self):
        for i, instr in enumerate(self._code):
            op = instr[0]
            if op == "inc":
                ok = len(instr) == 3
            elif op == "dec":
                ok = len(instr) == 4
            elif op == "halt":
                ok = len(instr) == 1
            else:
                ok = False
            if not ok:
                raise ValueError(f"bad instruction {instr!r} at {i}")

    def raw(self, n: int, budget: int):
        st = self._state.get(n)
        if st is None:
            st = self._state[n] = [{0: n}, 0, 0, False, None]
        regs, pc, steps, halted, value = st
        if halted:
            return (steps, value) if steps <= budget else None
        code = self._code
        while steps < budget:
            if pc < 0 or pc >= len(code):
                halted, value = True, regs.get(0, 0)
                break
            instr = code[pc]
            op = instr[0]
            steps += 1
            if op == "inc":
                regs[instr[1]] = regs.get(instr[1], 0) + 1
                pc = instr[2]
            elif op == "dec":
                r = instr[1]
                if regs.get(r, 0) > 0:
                    regs[r] -= 1
                    pc = instr[2]
                else:
                    pc = instr[3]
            else:  # halt
                halted, value = True, regs.get(0, 0)
                break
        st[1], st[2], st[3], st[4] = pc, steps, halted, value
        return (steps, value) if halted else None


_FORMULAS = {
    "identity": (lambda n: n, True),
    "double": (lambda n: 2 * n, True),
    "square": (lambda n: n * n, True),
}


def _build_slot(entry: dict) -> _Slot:
    kind = entry.get("kind")
    if kind in _FORMULAS:
        fn, ti = _FORMULAS[kind]
        return _FormulaSlot(kind, fn, ti)
    if kind == "affine":
        shift = int(entry["shift"])
        return _FormulaSlot("affine", lambda n, s=shift: n + s, True)
    if kind == "const":
        value = int(entry["value"])
        return _FormulaSlot("const", lambda n, v=value: v, False)
    if kind == "partial":
        graph = {int(k): int(v) for k, v in entry["graph"].items()}
        return _PartialSlot(graph)
    if kind == "diverge":
        return _DivergeSlot()
    if kind == "program":
        return _ProgramSlot(entry["code"], entry.get("total_increasing"))
    raise ValueError(f"unknown slot kind {kind!r}")


# ---------------------------------------------------------------------------
# Registry


class _ChainState:
    """Incremental state of the increasing-chain prefix for one slot."""

    __slots__ = ("values", "cummax_eff", "broken")

    def __init__(self):
        self.values: list[int] = []
        self.cummax_eff: list[int] = []
        self.broken = False


class PhiRegistry:
    """Slot table with convergence gate and chain-length queries."""

    def __init__(self, config: dict | None = None):
        self.config = config if config is not None else {"slots": []}
        self.slots: dict[int, _Slot] = {}
        self._chains: dict[int, _ChainState] = {}
        for entry in self.config.get("slots", []):
            self.add_slot(int(entry["index"]), _build_slot(entry))

    # -- configuration -----------------------------------------------------

    def add_slot(self, index: int, slot: _Slot):
        if index in self.slots:
            raise ValueError(f"duplicate slot index {index}")
        self.slots[index] = slot

    def configured_indices(self) -> frozenset[int]:
        return frozenset(self.slots)

    def total_increasing_indices(self) -> frozenset[int]:
        """Indices declared total and increasing by the configuration."""
        return frozenset(
            e for e, s in self.slots.items() if s.total_increasing is True
        )

    def classification(self, e: int) -> bool | None:
        """Declared total-increasing status of slot e (False for empty slots)."""
        slot = self.slots.get(e)
        return False if slot is None else slot.total_increasing

    def digest(self) -> str:
        return config_digest(self.config)

    # -- queries -------------------------------------------------------------

    def step(self, e: int, n: int, t: int) -> int | None:
        """Value of slot e on input n as visible at stage t, or None.

        Converges iff the raw computation halts within t steps and its value
        is at most t; monotone in t with a stable value.
        """
        slot = self.slots.get(e)
        if slot is None:
            return None
        res = slot.raw(n, t)
        if res is None:
            return None
        steps, value = res
        if steps > t or value > t:
            return None
        return value

    def ell(self, e: int, t: int) -> int:
        """Length of the visible strictly-increasing initial chain of slot e.

        Returns the largest l <= t such that the values on 0..l have all
        converged by stage t and form a strictly increasing chain, or -1 if
        the value on 0 has not converged.  Non-decreasing in t; tends to
        infinity over t iff the slot is total and increasing.
        """
        slot = self.slots.get(e)
        if slot is None:
            return -1
        chain = self._chains.get(e)
        if chain is None:
            chain = self._chains[e] = _ChainState()
        # try to extend the confirmed prefix with what is resolvable at budget t
        while not chain.broken:
            k = len(chain.values)
            res = slot.raw(k, t)
            if res is None:
                break
            steps, value = res
            if k > 0 and value <= chain.values[-1]:
                chain.broken = True
                break
            eff = max(steps, value)
            chain.values.append(value)
            chain.cummax_eff.append(
                max(eff, chain.cummax_eff[-1]) if chain.cummax_eff else eff
            )
            if eff > t:
                # not visible yet; later queries with larger budgets resume here
                break
        # largest prefix whose every effective convergence time is <= t
        return bisect_right(chain.cummax_eff, t) - 1


def registry_from_config(config: dict) -> PhiRegistry:
    """Build a registry from a configuration dict (see DEFAULT_CONFIG)."""
    return PhiRegistry(config)


# The documented default family.  Index assignment is part of the run
# configuration; the acceptance runs rely on identity at 0 and doubling at 1.
# The program at index 7 doubles its input through an explicit move loop.
DEFAULT_CONFIG: dict = {
    "slots": [
        {"index": 0, "kind": "identity"},
        {"index": 1, "kind": "double"},
        {"index": 2, "kind": "affine", "shift": 3},
        {"index": 3, "kind": "square"},
        {"index": 4, "kind": "const", "value": 5},
        {"index": 5, "kind": "partial", "graph": {"0": 2, "1": 5, "2": 9}},
        {"index": 6, "kind": "diverge"},
        {
            "index": 7,
            "kind": "program",
            "total_increasing": True,
            "code": [
                ["dec", 0, 1, 3],
                ["inc", 1, 2],
                ["inc", 1, 0],
                ["dec", 1, 4, 5],
                ["inc", 0, 3],
                ["halt"],
            ],
        },
    ]
}


def default_registry() -> PhiRegistry:
    """Fresh registry holding the documented default family."""
    return PhiRegistry(DEFAULT_CONFIG)


def register_default_suite(registry: PhiRegistry) -> PhiRegistry:
    """Install the documented default family into an existing registry.

    Raises on index collisions with already-configured slots, and extends
    the registry's recorded configuration so traces stay reproducible.
    """
    for entry in DEFAULT_CONFIG["slots"]:
        registry.add_slot(int(entry["index"]), _build_slot(entry))
    registry.config = {
        "slots": list(registry.config.get("slots", [])) + list(DEFAULT_CONFIG["slots"])
    }
    return registry
