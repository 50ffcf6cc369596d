"""Core type behaviour: constraint normalization, valuations, updates."""
import random
from fractions import Fraction

import pytest

from uta.model import (
    BOTTOM,
    STRICT,
    TOP,
    WEAK,
    AtomicConstraint,
    Const,
    Kind,
    Shift,
    Update,
    apply_update,
    delayed,
    make_lower,
    make_lower_diag,
    make_upper,
    make_upper_diag,
    negate_atomic,
    normalize_atomic,
    satisfies,
)

X, Y, Z = 0, 1, 2


class TestNormalization:
    def test_negative_upper_is_unsat(self):
        assert make_upper(X, WEAK, -3) is BOTTOM
        assert make_upper(X, STRICT, -1) is BOTTOM

    def test_zero_upper(self):
        # x < 0 is unsatisfiable over nonnegative clocks, x <= 0 is not.
        assert make_upper(X, STRICT, 0) is BOTTOM
        kept = make_upper(X, WEAK, 0)
        assert kept.kind is Kind.UPPER and kept.constant == 0

    def test_negative_lower_is_trivial(self):
        assert make_lower(X, WEAK, -5) is TOP
        assert make_lower(X, STRICT, -5) is TOP

    def test_zero_lower(self):
        assert make_lower(X, WEAK, 0) is TOP
        kept = make_lower(X, STRICT, 0)
        assert kept.kind is Kind.LOWER and kept.constant == 0

    def test_diagonal_flip_upper(self):
        # x - y <= -2  becomes  2 <= y - x.
        phi = make_upper_diag(X, Y, WEAK, -2)
        assert phi.kind is Kind.LOWER_DIAG
        assert (phi.x, phi.y) == (Y, X)
        assert phi.strictness is WEAK and phi.constant == 2

    def test_diagonal_flip_lower(self):
        # -3 < x - y  becomes  y - x < 3.
        phi = make_lower_diag(X, Y, STRICT, -3)
        assert phi.kind is Kind.UPPER_DIAG
        assert (phi.x, phi.y) == (Y, X)
        assert phi.strictness is STRICT and phi.constant == 3

    def test_same_clock_diagonal_collapses(self):
        assert make_upper_diag(X, X, WEAK, 0) is TOP     # 0 <= 0
        assert make_upper_diag(X, X, STRICT, 0) is BOTTOM  # 0 < 0
        assert make_lower_diag(X, X, STRICT, -1) is TOP    # -1 < 0
        assert make_lower_diag(X, X, WEAK, 1) is BOTTOM    # 1 <= 0

    def test_natural_constant_enforced(self):
        with pytest.raises(AssertionError):
            AtomicConstraint(Kind.UPPER, X, None, WEAK, -1)

    def test_normalize_idempotent_and_semantics_preserving(self):
        rng = random.Random(20240811)
        for _ in range(400):
            kind = rng.choice(
                [Kind.UPPER, Kind.LOWER, Kind.UPPER_DIAG, Kind.LOWER_DIAG]
            )
            s = rng.choice([STRICT, WEAK])
            c = rng.randint(-6, 6)
            x = rng.randrange(3)
            y = rng.randrange(3) if kind in (Kind.UPPER_DIAG, Kind.LOWER_DIAG) else None
            phi = normalize_atomic(kind, x, y, s, c)
            if not phi.is_trivial:
                again = normalize_atomic(
                    phi.kind, phi.x, phi.y, phi.strictness, phi.constant
                )
                assert again == phi
            for _ in range(20):
                v = {
                    k: Fraction(rng.randint(0, 14), rng.choice([1, 2, 3]))
                    for k in range(3)
                }
                if kind is Kind.UPPER:
                    want = v[x] < c if s is STRICT else v[x] <= c
                elif kind is Kind.LOWER:
                    want = c < v[x] if s is STRICT else c <= v[x]
                elif kind is Kind.UPPER_DIAG:
                    d = v[x] - v[y]
                    want = d < c if s is STRICT else d <= c
                else:
                    d = v[x] - v[y]
                    want = c < d if s is STRICT else c <= d
                assert satisfies(v, phi) == want


class TestNegation:
    def test_negate_flips_side_and_strictness(self):
        phi = make_upper(X, WEAK, 3)
        neg = negate_atomic(phi)
        assert neg.kind is Kind.LOWER and neg.strictness is STRICT
        assert neg.constant == 3
        assert negate_atomic(TOP) is BOTTOM and negate_atomic(BOTTOM) is TOP

    def test_negation_partitions_valuations(self):
        rng = random.Random(7)
        for _ in range(300):
            kind = rng.choice(
                [Kind.UPPER, Kind.LOWER, Kind.UPPER_DIAG, Kind.LOWER_DIAG]
            )
            x = rng.randrange(3)
            y = None
            if kind in (Kind.UPPER_DIAG, Kind.LOWER_DIAG):
                y = rng.choice([k for k in range(3) if k != x])
            phi = normalize_atomic(
                kind, x, y, rng.choice([STRICT, WEAK]), rng.randint(0, 5)
            )
            neg = negate_atomic(phi)
            v = {k: Fraction(rng.randint(0, 20), 2) for k in range(3)}
            assert satisfies(v, phi) != satisfies(v, neg)


class TestUpdates:
    def test_simultaneous_swap_with_offset(self):
        v = {X: 2, Y: 7}
        up = Update.of({X: Shift(Y, 1), Y: Shift(X, 0)})
        out = apply_update(up, v)
        assert out == {X: 8, Y: 2}

    def test_double_swap_is_identity(self):
        rng = random.Random(99)
        swap = Update.of({X: Shift(Y, 0), Y: Shift(X, 0)})
        for _ in range(50):
            v = {X: rng.randint(0, 30), Y: rng.randint(0, 30)}
            assert apply_update(swap, apply_update(swap, v)) == v

    def test_negative_result_is_undefined(self):
        v = {X: 5}
        up = Update.of({X: Shift(X, -10)})
        assert apply_update(up, v) is None
        # Exactly reaching zero stays defined.
        assert apply_update(Update.of({X: Shift(X, -5)}), v) == {X: 0}

    def test_const_resets(self):
        v = {X: 3, Y: 4}
        assert apply_update(Update.of({X: Const(0)}), v) == {X: 0, Y: 4}
        assert apply_update(Update.of({X: Const(9)}), v) == {X: 9, Y: 4}

    def test_identity_entries_dropped(self):
        up = Update.of({X: Shift(X, 0), Y: Const(2)})
        assert up.written() == (Y,)
        assert Update.of({X: Shift(X, 0)}).is_identity

    def test_get_defaults_to_identity(self):
        up = Update.of({Y: Const(1)})
        assert up.get(X) == Shift(X, 0)

    def test_update_reads_pre_state_only(self):
        rng = random.Random(4)
        for _ in range(100):
            v = {k: rng.randint(0, 12) for k in range(3)}
            up = Update.of(
                {
                    X: Shift(Y, rng.randint(-2, 4)),
                    Y: Shift(Z, rng.randint(-2, 4)),
                    Z: Shift(X, rng.randint(-2, 4)),
                }
            )
            out = apply_update(up, v)
            if out is not None:
                assert out[X] == v[Y] + up.get(X).offset
                assert out[Y] == v[Z] + up.get(Y).offset
                assert out[Z] == v[X] + up.get(Z).offset

    def test_max_offset(self):
        up = Update.of({X: Shift(Y, -7), Y: Const(3)})
        assert up.max_offset() == 7


class TestValuations:
    def test_delay_shifts_uniformly(self):
        v = {X: Fraction(1, 2), Y: 3}
        w = delayed(v, Fraction(3, 2))
        assert w == {X: 2, Y: Fraction(9, 2)}

    def test_satisfies_boundary(self):
        phi_weak = make_upper(X, WEAK, 2)
        phi_strict = make_upper(X, STRICT, 2)
        assert satisfies({X: 2}, phi_weak)
        assert not satisfies({X: 2}, phi_strict)
