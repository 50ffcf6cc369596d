"""Core domain types for updatable timed automata networks.

Clocks are dense indices into a network-wide clock table; clock ``k``
corresponds to row/column ``k + 1`` of a DBM (row/column 0 is the zero
reference).  Constraints, updates, guards, locations, edges, automata and
networks are immutable after construction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class Strictness(enum.IntEnum):
    """Bound strictness.  At equal constants a weak bound is the larger one."""

    STRICT = 0
    WEAK = 1

    @property
    def symbol(self) -> str:
        return "<" if self is Strictness.STRICT else "<="


STRICT = Strictness.STRICT
WEAK = Strictness.WEAK


class Kind(enum.IntEnum):
    TOP = 0
    BOTTOM = 1
    UPPER = 2        # x < c  or  x <= c
    LOWER = 3        # c < x  or  c <= x
    UPPER_DIAG = 4   # x - y < c  or  x - y <= c
    LOWER_DIAG = 5   # c < x - y  or  c <= x - y


@dataclass(frozen=True, slots=True)
class AtomicConstraint:
    """One atomic clock constraint; ``x``/``y`` are clock indices.

    Proper constraints always carry a natural constant; raw comparisons with
    negative constants must go through the ``make_*`` constructors, which
    normalize them (diagonals flip orientation, non-diagonals collapse to
    TOP/BOTTOM).
    """

    kind: Kind
    x: Optional[int] = None
    y: Optional[int] = None
    strictness: Optional[Strictness] = None
    constant: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind in (Kind.TOP, Kind.BOTTOM):
            assert self.x is None and self.y is None and self.constant is None
            return
        assert self.x is not None and self.constant is not None
        assert self.strictness is not None
        assert self.constant >= 0, "constraint constants must be natural"
        assert self.constant <= INT64_MAX
        if self.kind in (Kind.UPPER_DIAG, Kind.LOWER_DIAG):
            assert self.y is not None and self.y != self.x
        else:
            assert self.y is None

    @property
    def is_trivial(self) -> bool:
        return self.kind in (Kind.TOP, Kind.BOTTOM)

    @property
    def is_diagonal(self) -> bool:
        return self.kind in (Kind.UPPER_DIAG, Kind.LOWER_DIAG)

    def clocks(self) -> tuple[int, ...]:
        if self.is_trivial:
            return ()
        if self.is_diagonal:
            return (self.x, self.y)
        return (self.x,)

    def context(self) -> tuple:
        """Shape of the constraint without its constant and strictness."""
        return (self.kind, self.x, self.y)

    def with_constant(self, c: int) -> "AtomicConstraint":
        return AtomicConstraint(self.kind, self.x, self.y, self.strictness, c)

    def sort_key(self) -> tuple:
        return (
            int(self.kind),
            -1 if self.x is None else self.x,
            -1 if self.y is None else self.y,
            0 if self.constant is None else self.constant,
            0 if self.strictness is None else int(self.strictness),
        )

    def to_str(self, names: Sequence[str]) -> str:
        if self.kind is Kind.TOP:
            return "true"
        if self.kind is Kind.BOTTOM:
            return "false"
        op = self.strictness.symbol
        if self.kind is Kind.UPPER:
            return f"{names[self.x]}{op}{self.constant}"
        if self.kind is Kind.LOWER:
            return f"{self.constant}{op}{names[self.x]}"
        if self.kind is Kind.UPPER_DIAG:
            return f"{names[self.x]}-{names[self.y]}{op}{self.constant}"
        return f"{self.constant}{op}{names[self.x]}-{names[self.y]}"


TOP = AtomicConstraint(Kind.TOP)
BOTTOM = AtomicConstraint(Kind.BOTTOM)


def eval_const_cmp(lhs: int, strictness: Strictness, rhs: int) -> AtomicConstraint:
    """Evaluate a constant-vs-constant comparison ``lhs < rhs`` / ``lhs <= rhs``."""
    if strictness is WEAK:
        return TOP if lhs <= rhs else BOTTOM
    return TOP if lhs < rhs else BOTTOM


def make_upper(x: int, strictness: Strictness, c: int) -> AtomicConstraint:
    # x < 0 and x < c with c < 0 are unsatisfiable over nonnegative clocks.
    if c < 0 or (c == 0 and strictness is STRICT):
        return BOTTOM
    return AtomicConstraint(Kind.UPPER, x, None, strictness, c)


def make_lower(x: int, strictness: Strictness, c: int) -> AtomicConstraint:
    # 0 <= x (and any negative lower bound) always holds; 0 < x stays.
    if c < 0 or (c == 0 and strictness is WEAK):
        return TOP
    return AtomicConstraint(Kind.LOWER, x, None, strictness, c)


def make_upper_diag(x: int, y: int, strictness: Strictness, c: int) -> AtomicConstraint:
    if x == y:
        return eval_const_cmp(0, strictness, c)
    if c < 0:
        # x - y < c  with c < 0  is  -c < y - x  with the same strictness.
        return AtomicConstraint(Kind.LOWER_DIAG, y, x, strictness, -c)
    return AtomicConstraint(Kind.UPPER_DIAG, x, y, strictness, c)


def make_lower_diag(x: int, y: int, strictness: Strictness, c: int) -> AtomicConstraint:
    if x == y:
        return eval_const_cmp(c, strictness, 0)
    if c < 0:
        return AtomicConstraint(Kind.UPPER_DIAG, y, x, strictness, -c)
    return AtomicConstraint(Kind.LOWER_DIAG, x, y, strictness, c)


def normalize_atomic(
    kind: Kind,
    x: Optional[int],
    y: Optional[int],
    strictness: Strictness,
    constant: int,
) -> AtomicConstraint:
    """Build a normalized constraint from a raw (possibly negative) constant."""
    if kind is Kind.UPPER:
        return make_upper(x, strictness, constant)
    if kind is Kind.LOWER:
        return make_lower(x, strictness, constant)
    if kind is Kind.UPPER_DIAG:
        return make_upper_diag(x, y, strictness, constant)
    if kind is Kind.LOWER_DIAG:
        return make_lower_diag(x, y, strictness, constant)
    raise ValueError(f"cannot normalize kind {kind}")


def negate_atomic(phi: AtomicConstraint) -> AtomicConstraint:
    """Complement of an atomic constraint (flips side and strictness)."""
    if phi.kind is Kind.TOP:
        return BOTTOM
    if phi.kind is Kind.BOTTOM:
        return TOP
    flipped = STRICT if phi.strictness is WEAK else WEAK
    if phi.kind is Kind.UPPER:
        return make_lower(phi.x, flipped, phi.constant)
    if phi.kind is Kind.LOWER:
        return make_upper(phi.x, flipped, phi.constant)
    if phi.kind is Kind.UPPER_DIAG:
        return make_lower_diag(phi.x, phi.y, flipped, phi.constant)
    return make_upper_diag(phi.x, phi.y, flipped, phi.constant)


Number = Union[int, Fraction]
Valuation = Mapping[int, Number]


def satisfies(v: Valuation, phi: AtomicConstraint) -> bool:
    if phi.kind is Kind.TOP:
        return True
    if phi.kind is Kind.BOTTOM:
        return False
    if phi.kind is Kind.UPPER:
        lhs, rhs = v[phi.x], phi.constant
    elif phi.kind is Kind.LOWER:
        lhs, rhs = phi.constant, v[phi.x]
    elif phi.kind is Kind.UPPER_DIAG:
        lhs, rhs = v[phi.x] - v[phi.y], phi.constant
    else:
        lhs, rhs = phi.constant, v[phi.x] - v[phi.y]
    return lhs < rhs if phi.strictness is STRICT else lhs <= rhs


def satisfies_all(v: Valuation, atoms: Iterable[AtomicConstraint]) -> bool:
    return all(satisfies(v, phi) for phi in atoms)


def delayed(v: Valuation, delta: Number) -> dict[int, Number]:
    return {x: val + delta for x, val in v.items()}


# --------------------------------------------------------------------------
# Clock updates


@dataclass(frozen=True, slots=True)
class Const:
    """Assignment ``x := c`` with c natural."""

    value: int

    def __post_init__(self) -> None:
        assert 0 <= self.value <= INT64_MAX


@dataclass(frozen=True, slots=True)
class Shift:
    """Assignment ``x := y + d`` with d a (possibly negative) integer."""

    source: int
    offset: int

    def __post_init__(self) -> None:
        assert INT64_MIN < self.offset < INT64_MAX


ClockUpdate = Union[Const, Shift]


@dataclass(frozen=True)
class Update:
    """Simultaneous total clock update; unlisted clocks keep their value."""

    entries: tuple[tuple[int, ClockUpdate], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for x, _ in self.entries:
            assert x not in seen, "one assignment per clock"
            seen.add(x)

    @staticmethod
    def of(mapping: Mapping[int, ClockUpdate]) -> "Update":
        entries = tuple(sorted(mapping.items()))
        # Drop identity entries so structural equality ignores them.
        entries = tuple(
            (x, u)
            for x, u in entries
            if not (isinstance(u, Shift) and u.source == x and u.offset == 0)
        )
        return Update(entries)

    def get(self, x: int) -> ClockUpdate:
        for cx, u in self.entries:
            if cx == x:
                return u
        return Shift(x, 0)

    @property
    def is_identity(self) -> bool:
        return not self.entries

    def written(self) -> tuple[int, ...]:
        return tuple(x for x, _ in self.entries)

    def sources(self) -> tuple[int, ...]:
        return tuple(u.source for _, u in self.entries if isinstance(u, Shift))

    def max_offset(self) -> int:
        """Largest absolute constant among assignments (0 if identity)."""
        best = 0
        for _, u in self.entries:
            best = max(best, abs(u.offset) if isinstance(u, Shift) else u.value)
        return best


IDENTITY_UPDATE = Update()


def apply_update(up: Update, v: Valuation) -> Optional[dict[int, Number]]:
    """Apply all assignments simultaneously over the pre-valuation.

    Returns None when some clock would go negative (the transition is
    disabled at ``v``).
    """
    out = dict(v)
    for x, u in up.entries:
        val = u.value if isinstance(u, Const) else v[u.source] + u.offset
        if val < 0:
            return None
        out[x] = val
    return out


# --------------------------------------------------------------------------
# Integer variables


@dataclass(frozen=True, slots=True)
class IntVar:
    name: str
    lo: int
    hi: int
    init: int

    def __post_init__(self) -> None:
        assert INT64_MIN <= self.lo <= self.hi <= INT64_MAX


INT_OPS = ("<", "<=", "==", ">=", ">", "!=")


@dataclass(frozen=True, slots=True)
class IntAtom:
    """Comparison of an integer variable against a literal or another variable."""

    var: int
    op: str
    rhs_var: Optional[int] = None
    rhs_lit: Optional[int] = None

    def __post_init__(self) -> None:
        assert self.op in INT_OPS
        assert (self.rhs_var is None) != (self.rhs_lit is None)

    def holds(self, ints: Sequence[int]) -> bool:
        lhs = ints[self.var]
        rhs = self.rhs_lit if self.rhs_var is None else ints[self.rhs_var]
        return {
            "<": lhs < rhs,
            "<=": lhs <= rhs,
            "==": lhs == rhs,
            ">=": lhs >= rhs,
            ">": lhs > rhs,
            "!=": lhs != rhs,
        }[self.op]


@dataclass(frozen=True, slots=True)
class IntAssign:
    """Assignment ``var := sum of +/- terms`` over variables and literals.

    Terms are ``(sign, var_index, literal)`` with exactly one of the last two
    set (var_index of -1 means a literal term).
    """

    var: int
    terms: tuple[tuple[int, int, int], ...]

    def value(self, ints: Sequence[int]) -> int:
        total = 0
        for sign, var_idx, lit in self.terms:
            total += sign * (lit if var_idx < 0 else ints[var_idx])
        return total


@dataclass(frozen=True)
class Guard:
    """Conjunction of clock atoms and integer comparisons."""

    clock_atoms: tuple[AtomicConstraint, ...] = ()
    int_atoms: tuple[IntAtom, ...] = ()

    def __post_init__(self) -> None:
        for phi in self.clock_atoms:
            assert phi.kind is not Kind.TOP, "trivial atoms are dropped from guards"


EMPTY_GUARD = Guard()


# --------------------------------------------------------------------------
# Locations, edges, automata, networks


@dataclass(frozen=True)
class Location:
    name: str
    initial: bool = False
    committed: bool = False
    invariant: Guard = EMPTY_GUARD
    accepting: bool = False

    def __post_init__(self) -> None:
        assert not self.invariant.int_atoms, "invariants are clock-only"


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    guard: Guard = EMPTY_GUARD
    update: Update = IDENTITY_UPDATE
    int_assigns: tuple[IntAssign, ...] = ()
    sync: Optional[tuple[str, str]] = None  # (channel, "!" or "?")

    def __post_init__(self) -> None:
        if self.sync is not None:
            assert self.sync[1] in ("!", "?")


@dataclass(frozen=True)
class Automaton:
    """One network component.  Clock/int indices refer to the network tables."""

    name: str
    locations: tuple[Location, ...]
    edges: tuple[Edge, ...]
    clock_names: tuple[str, ...]

    def __post_init__(self) -> None:
        initials = [i for i, loc in enumerate(self.locations) if loc.initial]
        assert len(initials) == 1, f"{self.name}: exactly one initial location"
        for e in self.edges:
            assert 0 <= e.src < len(self.locations)
            assert 0 <= e.dst < len(self.locations)

    @property
    def initial(self) -> int:
        return next(i for i, loc in enumerate(self.locations) if loc.initial)

    def location_index(self, name: str) -> int:
        for i, loc in enumerate(self.locations):
            if loc.name == name:
                return i
        raise KeyError(f"{self.name}: no location named {name!r}")

    def clocks_written(self) -> frozenset[int]:
        out = set()
        for e in self.edges:
            out.update(e.update.written())
        return frozenset(out)

    def clocks_read(self) -> frozenset[int]:
        out = set()
        for e in self.edges:
            for phi in e.guard.clock_atoms:
                out.update(phi.clocks())
            out.update(e.update.sources())
        for loc in self.locations:
            for phi in loc.invariant.clock_atoms:
                out.update(phi.clocks())
        return frozenset(out)

    def occurring_clocks(self) -> frozenset[int]:
        return self.clocks_read() | self.clocks_written()

    def ints_written(self) -> frozenset[int]:
        return frozenset(a.var for e in self.edges for a in e.int_assigns)

    def ints_read(self) -> frozenset[int]:
        out = set()
        for e in self.edges:
            for atom in e.guard.int_atoms:
                out.add(atom.var)
                if atom.rhs_var is not None:
                    out.add(atom.rhs_var)
            for a in e.int_assigns:
                out.update(vi for _, vi, _ in a.terms if vi >= 0)
        return frozenset(out)


@dataclass(frozen=True)
class Network:
    name: str
    clocks: tuple[str, ...]
    int_vars: tuple[IntVar, ...]
    channels: tuple[str, ...]
    components: tuple[Automaton, ...]

    def __post_init__(self) -> None:
        for comp in self.components:
            assert comp.clock_names == self.clocks

    def component_index(self, name: str) -> int:
        for i, comp in enumerate(self.components):
            if comp.name == name:
                return i
        raise KeyError(f"no process named {name!r}")

    def int_initials(self) -> tuple[int, ...]:
        return tuple(v.init for v in self.int_vars)

    def clock_usage(self) -> dict[int, tuple[frozenset[int], frozenset[int]]]:
        """Per clock: (components updating it non-trivially, components constraining it)."""
        usage = {}
        for x in range(len(self.clocks)):
            updaters = frozenset(
                i for i, c in enumerate(self.components) if x in c.clocks_written()
            )
            readers = frozenset(
                i for i, c in enumerate(self.components) if x in c.clocks_read()
            )
            usage[x] = (updaters, readers)
        return usage


@dataclass(frozen=True, slots=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str


def validate_network(net: Network) -> list[Diagnostic]:
    """Static well-formedness checks.

    Shared clocks across components are errors (sound analysis and sync
    composition both assume per-component clock ownership); the rest are
    warnings.
    """
    out: list[Diagnostic] = []
    for x, (updaters, readers) in sorted(net.clock_usage().items()):
        involved = updaters | readers
        if len(involved) > 1:
            names = ", ".join(net.components[i].name for i in sorted(involved))
            out.append(
                Diagnostic(
                    "error",
                    f"clock {net.clocks[x]} is shared between components {names}",
                )
            )
    for var in net.int_vars:
        if not var.lo <= var.init <= var.hi:
            out.append(
                Diagnostic(
                    "warning",
                    f"int {var.name}: initial value {var.init} outside [{var.lo}, {var.hi}]",
                )
            )
    used_channels = set()
    for comp in net.components:
        for e in comp.edges:
            if e.sync is not None:
                used_channels.add(e.sync[0])
    for ch in net.channels:
        if ch not in used_channels:
            out.append(Diagnostic("warning", f"event {ch} is declared but never used"))
    for comp in net.components:
        reachable = {comp.initial}
        frontier = [comp.initial]
        succ: dict[int, list[int]] = {}
        for e in comp.edges:
            succ.setdefault(e.src, []).append(e.dst)
        while frontier:
            q = frontier.pop()
            for q2 in succ.get(q, ()):
                if q2 not in reachable:
                    reachable.add(q2)
                    frontier.append(q2)
        for i, loc in enumerate(comp.locations):
            if i not in reachable:
                out.append(
                    Diagnostic(
                        "warning",
                        f"{comp.name}.{loc.name} is unreachable in the location graph",
                    )
                )
    return out


def single_component_network(
    name: str,
    clocks: Sequence[str],
    locations: Sequence[Location],
    edges: Sequence[Edge],
    int_vars: Sequence[IntVar] = (),
) -> Network:
    comp = Automaton(name, tuple(locations), tuple(edges), tuple(clocks))
    return Network(name, tuple(clocks), tuple(int_vars), (), (comp,))
