"""Constraint-preserving simulation between zones.

A valuation v is simulated by v' relative to a constraint set G when every
delay step from v that satisfies a constraint of G can be matched from v'.
That pointwise relation lifts to zones existentially: Z is simulated by Z'
when every point of Z has a simulator in Z'.  `sim_zone` decides the lifted
relation by splitting on diagonal constraints and finishing with a vectorized
non-diagonal check over the two matrices; `brute_force_sim` re-decides it by
region enumeration and serves as the testing oracle for that check.
"""
from dataclasses import dataclass

import numpy as np

from .analysis import GSet, LUBounds, extract_lu
from .dbm import (
    EMPTY,
    INF,
    LE_ZERO,
    Dbm,
    Zone,
    _add_mat,
    _atom_entry,
    add_bounds,
    intersect,
)
from .model import (
    AtomicConstraint,
    Kind,
    Valuation,
    negate_atomic,
    satisfies,
)


def sim_point(v: Valuation, vp: Valuation, g: GSet) -> bool:
    """Pointwise simulation: v' can mimic every G-relevant delay of v."""
    for phi in g.nond:
        if phi.kind is Kind.UPPER:
            if satisfies(v, phi) and not vp[phi.x] <= v[phi.x]:
                return False
        else:
            if not satisfies(vp, phi) and not v[phi.x] <= vp[phi.x]:
                return False
    for phi in g.diag:
        # delay shifts both clocks, so diagonal satisfaction must transfer
        if satisfies(v, phi) and not satisfies(vp, phi):
            return False
    return True


@dataclass(frozen=True, eq=False)
class SimPrepared:
    """Per-constraint-set data reused across many zone comparisons."""

    diags: tuple[AtomicConstraint, ...]
    has_u: np.ndarray
    u_enc: np.ndarray
    has_l: np.ndarray
    l_edge: np.ndarray


def prepare(g: GSet, n_clocks: int) -> SimPrepared:
    """Aggregate the non-diagonal atoms of g into per-clock encoded bounds.

    For uppers the binding atom is the weakest one (largest bound, weak over
    strict at equal constants).  For lowers it is the strongest one, and at
    equal constants the strict atom is the harder to satisfy, so it wins; the
    bound is stored as the encoded edge of the satisfying ray.
    """
    has_u = np.zeros(n_clocks, dtype=bool)
    u_enc = np.zeros(n_clocks, dtype=np.int64)
    has_l = np.zeros(n_clocks, dtype=bool)
    l_edge = np.zeros(n_clocks, dtype=np.int64)
    for phi in g.nond:
        x = phi.x
        if phi.kind is Kind.UPPER:
            b = np.int64(2 * phi.constant + int(phi.strictness))
            if not has_u[x] or b > u_enc[x]:
                has_u[x] = True
                u_enc[x] = b
        else:
            b = np.int64(-2 * phi.constant + int(phi.strictness))
            if not has_l[x] or b < l_edge[x]:
                has_l[x] = True
                l_edge[x] = b
    diags = tuple(sorted(g.diag, key=lambda p: (p.context(), p.constant)))
    return SimPrepared(diags, has_u, u_enc, has_l, l_edge)


@dataclass(frozen=True, eq=False)
class SimQuery:
    """One zone-simulation question with its derived LU summary."""

    z: Dbm
    zp: Dbm
    g: GSet
    lu: LUBounds

    @staticmethod
    def of(z: Dbm, zp: Dbm, g: GSet) -> "SimQuery":
        return SimQuery(z, zp, g, extract_lu(g, z.n))


def _base_not_simulated(z: Dbm, zp: Dbm, prep: SimPrepared) -> bool:
    """Non-diagonal kernel: is there a point of z that no point of zp matches?

    A witness point v forces a box on v': for each clock x where v meets the
    weakest upper of G, v'(x) <= v(x); for each clock y with a lower in G,
    v'(y) >= min(v(y), the strongest lower's ray edge).  zp misses the box
    exactly when the tightened matrix has a negative cycle, and every such
    cycle threads the reference row, so it uses at most one forced upper and
    one forced lower.  Quantifying v away per cycle shape leaves three
    conditions checked entrywise below.
    """
    n = z.n
    if n == 0:
        return False
    zm, pm = z.m, zp.m
    z0 = zm[0, 1:]
    zx0 = zm[1:, 0]
    p0 = pm[0, 1:]
    px0 = pm[1:, 0]
    zd = zm[1:, 1:]
    pd = pm[1:, 1:]

    # single forced upper on x: v(x) below everything zp allows for x
    a = prep.has_u & (_add_mat(z0, np.minimum(prep.u_enc, 1 - p0)) >= LE_ZERO)
    if a.any():
        return True

    # single forced lower on y: v(y) above everything zp allows for y
    b = (
        prep.has_l
        & (_add_mat(px0, prep.l_edge) < LE_ZERO)
        & (px0 < zx0)
    )
    if b.any():
        return True

    # forced upper on x against forced lower on y, closed through zp[y,x];
    # an unbounded zp entry means the cycle can never go negative, so the
    # cap collapses to an unsatisfiable bound rather than to "no constraint"
    never = np.int64(-INF)
    guard = -(np.int64(1) << 50)
    t = _add_mat(prep.l_edge[:, None], pd)
    cap_l = np.where(t >= INF, never, 1 - t)
    cap_d = np.where(pd >= INF, never, 1 - pd)
    e_x0 = np.minimum(np.minimum(zx0[None, :], prep.u_enc[None, :]), cap_l)
    e_xy = np.minimum(zd.T, cap_d)
    c = (
        prep.has_l[:, None]
        & prep.has_u[None, :]
        & (e_x0 > guard)
        & (e_xy > guard)
        & (_add_mat(e_x0, z0[None, :]) >= LE_ZERO)
        & (_add_mat(e_xy, zd) >= LE_ZERO)
        & (_add_mat(_add_mat(e_x0, z0[:, None]), zd) >= LE_ZERO)
        & (_add_mat(_add_mat(e_xy, zx0[:, None]), z0[None, :]) >= LE_ZERO)
    )
    np.fill_diagonal(c, False)
    return bool(c.any())


def not_simulated_batch(z: Dbm, pms: np.ndarray, prep: SimPrepared) -> np.ndarray:
    """Non-diagonal kernel over K stacked candidate matrices at once.

    pms has shape (K, n+1, n+1); entry k of the returned bool mask is the
    verdict of the pointwise kernel for that candidate, so True certifies
    that z is not simulated by candidate k.  One ufunc dispatch replaces K
    kernel calls, which is what the search's subsumption scan pays for.
    """
    n = z.n
    k_count = pms.shape[0]
    if n == 0:
        return np.zeros(k_count, dtype=bool)
    zm = z.m
    z0 = zm[0, 1:]
    zx0 = zm[1:, 0]
    zd = zm[1:, 1:]
    p0 = pms[:, 0, 1:]
    px0 = pms[:, 1:, 0]
    pd = pms[:, 1:, 1:]

    a = prep.has_u & (_add_mat(z0, np.minimum(prep.u_enc, 1 - p0)) >= LE_ZERO)
    out = a.any(axis=1)

    b = (
        prep.has_l
        & (_add_mat(px0, prep.l_edge) < LE_ZERO)
        & (px0 < zx0)
    )
    out |= b.any(axis=1)

    if not (prep.has_l.any() and prep.has_u.any()):
        return out
    todo = ~out
    if not todo.any():
        return out
    # the two-sided condition is the expensive one: run it only on the
    # candidates the single-sided conditions left standing
    pd = pd[todo]
    never = np.int64(-INF)
    guard = -(np.int64(1) << 50)
    t = _add_mat(prep.l_edge[None, :, None], pd)
    cap_l = np.where(t >= INF, never, 1 - t)
    cap_d = np.where(pd >= INF, never, 1 - pd)
    e_x0 = np.minimum(
        np.minimum(zx0[None, None, :], prep.u_enc[None, None, :]), cap_l
    )
    e_xy = np.minimum(zd.T[None, :, :], cap_d)
    c = (
        prep.has_l[None, :, None]
        & prep.has_u[None, None, :]
        & (e_x0 > guard)
        & (e_xy > guard)
        & (_add_mat(e_x0, z0[None, None, :]) >= LE_ZERO)
        & (_add_mat(e_xy, zd[None, :, :]) >= LE_ZERO)
        & (_add_mat(_add_mat(e_x0, z0[None, :, None]), zd[None, :, :]) >= LE_ZERO)
        & (_add_mat(_add_mat(e_xy, zx0[None, :, None]), z0[None, None, :]) >= LE_ZERO)
    )
    c[:, np.arange(n), np.arange(n)] = False
    out[todo] = c.any(axis=(1, 2))
    return out


def _sim(z: Zone, zp: Zone, diags: tuple, prep: SimPrepared) -> bool:
    if z is EMPTY:
        return True
    if zp is EMPTY:
        return False
    for k, phi in enumerate(diags):
        i, j, bound = _atom_entry(phi)
        rest = diags[k + 1:]
        if int(z.m[i, j]) <= bound:
            # every point of z satisfies phi, so its simulator must as well
            return _sim(z, intersect(zp, phi), rest, prep)
        if add_bounds(int(z.m[j, i]), bound) < LE_ZERO:
            continue  # no point of z satisfies phi: the constraint is inert
        return _sim(intersect(z, phi), intersect(zp, phi), rest, prep) and _sim(
            intersect(z, negate_atomic(phi)), zp, rest, prep
        )
    return not _base_not_simulated(z, zp, prep)


def sim_zone(q: SimQuery) -> bool:
    """Decide whether every point of q.z has a simulator in q.zp."""
    if q.z is EMPTY:
        return True
    if q.zp is EMPTY:
        return False
    return sim_zone_prepared(q.z, q.zp, prepare(q.g, q.z.n))


def sim_zone_prepared(z: Zone, zp: Zone, prep: SimPrepared) -> bool:
    """sim_zone against a reusable `prepare` result (search hot path)."""
    if z is EMPTY:
        return True
    if zp is EMPTY:
        return False
    if prep.diags and _base_not_simulated(z, zp, prep):
        # matching only the non-diagonal obligations is necessary for the
        # full relation, so a kernel refutation here is final and the
        # diagonal splitting can be skipped outright
        return False
    return _sim(z, zp, prep.diags, prep)


# --- region-enumeration oracle ---------------------------------------------

_INF_PY = 1 << 60


def _py_add(a: int, b: int) -> int:
    if a >= _INF_PY or b >= _INF_PY:
        return _INF_PY
    return a + b - ((a | b) & 1)


def _scale_enc(b: int, s: int) -> int:
    return 2 * (b >> 1) * s + (b & 1)


def _scaled_matrix(d: Dbm, s: int) -> list:
    size = d.n + 1
    out = [[_INF_PY] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            v = int(d.m[i, j])
            out[i][j] = _INF_PY if v >= INF else _scale_enc(v, s)
    return out


def _zone_max_const(d: Dbm) -> int:
    worst = 0
    for v in d.m.flat:
        v = int(v)
        if v < INF:
            worst = max(worst, abs(v >> 1))
    return worst


def _mini_empty(m: list) -> bool:
    size = len(m)
    for k in range(size):
        row_k = m[k]
        for i in range(size):
            mik = m[i][k]
            if mik >= _INF_PY:
                continue
            row_i = m[i]
            for j in range(size):
                cand = _py_add(mik, row_k[j])
                if cand < row_i[j]:
                    row_i[j] = cand
    return any(m[i][i] < LE_ZERO for i in range(size))


def brute_force_sim(q: SimQuery, max_const: int) -> bool:
    """Decide the zone simulation by enumerating one point per region of q.z.

    Valuations are scanned on the grid of step 1/(2(|X|+1)) up to max_const+1
    per coordinate; a point's verdict depends only on its region relative to
    the integer constants involved, so each region signature is tested once.
    The matched set for a fixed point is a single box plus the satisfied
    diagonals of G, and emptiness of zp against it is checked with a local
    all-pairs pass independent of the main zone code.

    A found counterexample refutes the simulation outright.  An exhausted
    scan proves it only when q.z fits inside the scanned box: with clocks of
    q.z reaching past max_const+1, a constrained far-out point can satisfy a
    diagonal of G that no scanned point satisfies, so completion proves
    nothing and the call is rejected as inconclusive.
    """
    n = q.z.n
    if n > 4:
        raise ValueError(f"oracle limited to 4 clocks, got {n}")
    worst = max(_zone_max_const(q.z), _zone_max_const(q.zp))
    for phi in q.g:
        worst = max(worst, phi.constant)
    if worst > max_const:
        raise ValueError(f"constant {worst} above oracle bound {max_const}")
    if n == 0:
        return True

    s = 2 * (n + 1)
    limit = s * (max_const + 1)
    zs = _scaled_matrix(q.z, s)
    ps = _scaled_matrix(q.zp, s)
    prep = prepare(q.g, n)
    u_scaled = [_scale_enc(int(prep.u_enc[x]), s) for x in range(n)]
    l_scaled = [_scale_enc(int(prep.l_edge[x]), s) for x in range(n)]
    diag_scaled = []
    for phi in prep.diags:
        i, j, bound = _atom_entry(phi)
        diag_scaled.append((i, j, _scale_enc(bound, s)))
    cap = max_const + 1
    seen = set()

    def ranges(ks: list, x: int) -> range:
        lo, hi = 0, limit
        row, col = zs[x + 1], [zs[i][x + 1] for i in range(n + 1)]
        b = row[0]
        if b < _INF_PY:
            hi = min(hi, (b >> 1) - (1 - (b & 1)))
        b = col[0]
        if b < _INF_PY:
            lo = max(lo, -(b >> 1) + (1 - (b & 1)))
        for y in range(x):
            b = row[y + 1]  # k_x - k_y bounded above
            if b < _INF_PY:
                hi = min(hi, ks[y] + (b >> 1) - (1 - (b & 1)))
            b = col[y + 1]  # k_y - k_x bounded above
            if b < _INF_PY:
                lo = max(lo, ks[y] - (b >> 1) + (1 - (b & 1)))
        return range(lo, hi + 1)

    def signature(ks: list) -> tuple:
        parts = [(min(k // s, cap), k % s == 0) for k in ks]
        for x in range(n):
            for y in range(x + 1, n):
                d = ks[x] - ks[y]
                fx, fy = ks[x] % s, ks[y] % s
                parts.append((max(-cap - 1, min(cap + 1, d // s)),
                              (fx > fy) - (fx < fy)))
        return tuple(parts)

    def simulated(ks: list) -> bool:
        m = [row[:] for row in ps]
        for x in range(n):
            if prep.has_u[x] and 2 * ks[x] + 1 <= u_scaled[x]:
                m[x + 1][0] = min(m[x + 1][0], 2 * ks[x] + 1)
            if prep.has_l[x]:
                m[0][x + 1] = min(m[0][x + 1], max(-2 * ks[x] + 1, l_scaled[x]))
        for (i, j, bound), phi in zip(diag_scaled, prep.diags):
            vi = ks[i - 1] if i else 0
            vj = ks[j - 1] if j else 0
            if 2 * (vi - vj) + 1 <= bound:
                m[i][j] = min(m[i][j], bound)
        return not _mini_empty(m)

    def walk(ks: list, x: int) -> bool:
        if x == n:
            sig = signature(ks)
            if sig in seen:
                return True
            seen.add(sig)
            return simulated(ks)
        for k in ranges(ks, x):
            ks.append(k)
            ok = walk(ks, x + 1)
            ks.pop()
            if not ok:
                return False
        return True

    if not walk([], 0):
        return False
    boxed = all(zs[x + 1][0] <= 2 * limit + 1 for x in range(n))
    if not boxed:
        raise ValueError("unbounded zone on the left: exhaustive scan inconclusive")
    return True
