"""Canonical difference-bound matrices over encoded integer bounds.

A bound (value, strictness) is packed into one int64 as ``2*value + 1`` for
weak and ``2*value`` for strict; integer order then matches bound order
(strict is tighter than weak at the same value) and bound addition is
``a + b - ((a | b) & 1)``.  Infinity is a large even sentinel, masked out
explicitly in matrix operations.  Matrix row/column 0 is the zero
reference, so entry (i, j) bounds ``x_i - x_j`` with clock k at index
k + 1.  All public operations return matrices in canonical (all-pairs
tightest) form, or the EMPTY sentinel.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .model import (
    STRICT,
    WEAK,
    AtomicConstraint,
    Const,
    Guard,
    Kind,
    Shift,
    Strictness,
    Update,
)

INF = np.int64(2**62)
LE_ZERO = np.int64(1)  # encoded (<=, 0)
_MAX_CONST = 2**40  # constants beyond this would risk int64 overflow in sums


def encode_bound(value: int, strictness: Strictness) -> int:
    if abs(value) > _MAX_CONST:
        raise OverflowError(f"constant {value} too large for zone arithmetic")
    return 2 * value + (1 if strictness is WEAK else 0)


def decode_bound(b: int) -> Optional[tuple[int, Strictness]]:
    """None for infinity, else (value, strictness)."""
    if b >= INF:
        return None
    return (int(b) >> 1, WEAK if b & 1 else STRICT)


def add_bounds(a: int, b: int) -> int:
    if a >= INF or b >= INF:
        return int(INF)
    return a + b - ((a | b) & 1)


def bound_str(b: int) -> str:
    dec = decode_bound(b)
    if dec is None:
        return "inf"
    v, s = dec
    return f"{s.symbol}{v}"


class EmptyZone:
    __slots__ = ()

    def __repr__(self) -> str:
        return "EMPTY"


EMPTY = EmptyZone()
Zone = Union["Dbm", EmptyZone]


@dataclass(frozen=True)
class Dbm:
    m: np.ndarray  # (n+1) x (n+1) int64, canonical, frozen

    @property
    def n(self) -> int:
        return self.m.shape[0] - 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Dbm) and np.array_equal(self.m, other.m)

    def __hash__(self) -> int:
        return hash(self.m.tobytes())

    def to_bytes(self) -> bytes:
        return self.m.tobytes()


def _freeze(m: np.ndarray) -> Dbm:
    m.flags.writeable = False
    return Dbm(m)


def _add_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # int64 wraparound on INF+INF is masked out by the where
    raw = a + b - ((a | b) & 1)
    return np.where((a >= INF) | (b >= INF), INF, raw)


def _close(m: np.ndarray) -> bool:
    """All-pairs tightening in place; False when a diagonal goes negative."""
    size = m.shape[0]
    for k in range(size):
        cand = _add_mat(m[:, k : k + 1], m[k : k + 1, :])
        np.minimum(m, cand, out=m)
    if (np.diagonal(m) < LE_ZERO).any():
        return False
    np.fill_diagonal(m, LE_ZERO)
    return True


def canonicalize(m: np.ndarray) -> Zone:
    """Close an arbitrary bound matrix; detects emptiness."""
    work = np.array(m, dtype=np.int64)
    if not _close(work):
        return EMPTY
    return _freeze(work)


def universe(n_clocks: int) -> Dbm:
    size = n_clocks + 1
    m = np.full((size, size), INF, dtype=np.int64)
    m[0, :] = LE_ZERO
    np.fill_diagonal(m, LE_ZERO)
    return _freeze(m)


def initial_zone(n_clocks: int) -> Dbm:
    """All clocks equal, nonnegative, unbounded above."""
    size = n_clocks + 1
    m = np.full((size, size), LE_ZERO, dtype=np.int64)
    m[1:, 0] = INF
    return _freeze(m)


def zero_zone(n_clocks: int) -> Dbm:
    """The single point with every clock at zero."""
    size = n_clocks + 1
    return _freeze(np.full((size, size), LE_ZERO, dtype=np.int64))


def _atom_entry(phi: AtomicConstraint) -> tuple[int, int, int]:
    """(row, col, encoded bound) for a proper constraint."""
    s = phi.strictness
    if phi.kind is Kind.UPPER:
        return (phi.x + 1, 0, encode_bound(phi.constant, s))
    if phi.kind is Kind.LOWER:
        return (0, phi.x + 1, encode_bound(-phi.constant, s))
    if phi.kind is Kind.UPPER_DIAG:
        return (phi.x + 1, phi.y + 1, encode_bound(phi.constant, s))
    if phi.kind is Kind.LOWER_DIAG:
        return (phi.y + 1, phi.x + 1, encode_bound(-phi.constant, s))
    raise ValueError(f"no matrix entry for {phi.kind}")


def _tighten(m: np.ndarray, i: int, j: int, b: int) -> bool:
    """Intersect a canonical matrix with x_i - x_j <= b, in place.

    Keeps the matrix canonical; returns False when it becomes empty.
    """
    if b >= m[i, j]:
        return True
    if add_bounds(int(m[j, i]), b) < LE_ZERO:
        return False
    m[i, j] = b
    cand = _add_mat(_add_mat(m[:, i : i + 1], np.int64(b)), m[j : j + 1, :])
    np.minimum(m, cand, out=m)
    return True


def intersect(d: Dbm, phi: AtomicConstraint) -> Zone:
    if phi.kind is Kind.TOP:
        return d
    if phi.kind is Kind.BOTTOM:
        return EMPTY
    i, j, b = _atom_entry(phi)
    if b >= d.m[i, j]:
        return d
    m = np.array(d.m)
    if not _tighten(m, i, j, b):
        return EMPTY
    return _freeze(m)


def intersect_all(d: Zone, atoms: Iterable[AtomicConstraint]) -> Zone:
    if d is EMPTY:
        return EMPTY
    m = None
    for phi in atoms:
        if phi.kind is Kind.TOP:
            continue
        if phi.kind is Kind.BOTTOM:
            return EMPTY
        if m is None:
            m = np.array(d.m)
        i, j, b = _atom_entry(phi)
        if not _tighten(m, i, j, b):
            return EMPTY
    return d if m is None else _freeze(m)


def _substitution(up: Update, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per matrix index: source index and offset, with x := c read as a
    shift of the zero reference."""
    src = np.arange(n + 1, dtype=np.int64)
    off = np.zeros(n + 1, dtype=np.int64)
    for x, u in up.entries:
        if isinstance(u, Const):
            src[x + 1] = 0
            off[x + 1] = u.value
        else:
            src[x + 1] = u.source + 1
            off[x + 1] = u.offset
    return src, off


def apply_update(d: Dbm, up: Update) -> Zone:
    """Exact image of the zone under a simultaneous update.

    Restricts to the update's domain (each x := y+d with d < 0 requires
    -d <= y), then substitutes sources and offsets entry-wise; the result
    of substituting into a canonical matrix is canonical.
    """
    if up.is_identity:
        return d
    m = np.array(d.m)
    for x, u in up.entries:
        if isinstance(u, Shift) and u.offset < 0:
            if not _tighten(m, 0, u.source + 1, encode_bound(u.offset, WEAK)):
                return EMPTY
    src, off = _substitution(up, d.n)
    delta = 2 * (off[:, None] - off[None, :])
    new = m[np.ix_(src, src)]
    new = np.where(new >= INF, INF, new + delta)
    np.fill_diagonal(new, LE_ZERO)
    return _freeze(new)


def apply_update_relational(d: Dbm, up: Update) -> Zone:
    """Reference image computation via primed-variable extension.

    Builds a (2n+1)-sized relation {(v, v') | v' = up(v)}, closes it, and
    projects onto the primed block.  Slower than apply_update but follows
    the defining relation directly; kept for cross-checking.
    """
    n = d.n
    size = 2 * n + 1
    ext = np.full((size, size), INF, dtype=np.int64)
    ext[: n + 1, : n + 1] = d.m
    src, off = _substitution(up, n)
    for i in range(1, n + 1):
        pi = n + i
        s, dd = int(src[i]), int(off[i])
        # x'_i - x_s <= d and x_s - x'_i <= -d
        ext[pi, s] = min(ext[pi, s], encode_bound(dd, WEAK))
        ext[s, pi] = min(ext[s, pi], encode_bound(-dd, WEAK))
        ext[0, pi] = min(ext[0, pi], LE_ZERO)  # x'_i >= 0
    np.fill_diagonal(ext, LE_ZERO)
    if not _close(ext):
        return EMPTY
    idx = np.concatenate(([0], np.arange(n + 1, 2 * n + 1)))
    return _freeze(np.array(ext[np.ix_(idx, idx)]))


def elapse(d: Dbm) -> Dbm:
    """Future closure: drop upper bounds on all clocks; stays canonical."""
    m = np.array(d.m)
    m[1:, 0] = INF
    return _freeze(m)


def successor(
    d: Zone,
    e,
    target_invariant: Guard = Guard(),
    do_elapse: bool = True,
) -> Zone:
    """One discrete-plus-delay step: guard, update, invariant, elapse,
    invariant again."""
    z = intersect_all(d, e.guard.clock_atoms)
    if z is EMPTY:
        return EMPTY
    z = apply_update(z, e.update)
    if z is EMPTY:
        return EMPTY
    z = intersect_all(z, target_invariant.clock_atoms)
    if z is EMPTY or not do_elapse:
        return z
    z = intersect_all(elapse(z), target_invariant.clock_atoms)
    return z


def membership(d: Zone, v) -> bool:
    """Exact rational membership; v maps clock index to a number."""
    if d is EMPTY:
        return False
    n = d.n
    vals = [Fraction(0)] + [Fraction(v[x]) for x in range(n)]
    for i in range(n + 1):
        for j in range(n + 1):
            dec = decode_bound(int(d.m[i, j]))
            if dec is None:
                continue
            bound, s = dec
            diff = vals[i] - vals[j]
            if not (diff < bound if s is STRICT else diff <= bound):
                return False
    return True


def equals(a: Zone, b: Zone) -> bool:
    if a is EMPTY or b is EMPTY:
        return (a is EMPTY) == (b is EMPTY)
    return np.array_equal(a.m, b.m)


def zone_of(n_clocks: int, atoms: Iterable[AtomicConstraint]) -> Zone:
    """Zone of a constraint conjunction (clocks only lower-bounded by 0)."""
    return intersect_all(universe(n_clocks), atoms)


def dump(d: Zone, clock_names: Sequence[str] = ()) -> str:
    if d is EMPTY:
        return "empty"
    n = d.n
    names = ["0"] + [
        clock_names[i] if i < len(clock_names) else f"x{i}" for i in range(n)
    ]
    width = max(6, max(len(s) for s in names) + 4)
    lines = [" " * width + "".join(f"{nm:>{width}}" for nm in names)]
    for i in range(n + 1):
        row = "".join(f"{bound_str(int(d.m[i, j])):>{width}}" for j in range(n + 1))
        lines.append(f"{names[i]:>{width}}" + row)
    return "\n".join(lines)
