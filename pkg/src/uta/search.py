"""Product construction and breadth-first zone reachability.

The discrete state of a network is the vector of component locations plus
the integer-variable valuation; the continuous part is one shared zone.
Components move either alone (edges without a channel annotation) or in
emit/receive pairs on a channel.  While any component sits in a committed
location, time may not pass there and only moves that involve a committed
component are allowed.

The search is a deterministic FIFO exploration.  A dequeued node is dropped
when an already visited node with the same discrete state covers it: exact
zone equality always counts, and with pruning enabled a zone-simulation
check against the per-state constraint set does too.
"""
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import GSet, GMap, Status
from .dbm import EMPTY, Dbm, Zone, elapse, intersect_all, successor, zero_zone
from .model import Edge, Guard, Network, Update
from .simulation import (
    SimPrepared,
    not_simulated_batch,
    prepare,
    sim_zone_prepared,
)


@dataclass(frozen=True)
class ProductLoc:
    """Location vector plus integer valuation; the discrete search state."""

    locs: tuple[int, ...]
    ints: tuple[int, ...]


@dataclass(frozen=True)
class TransLabel:
    """One fired move: an internal edge, or an emit/receive pair."""

    edges: tuple[tuple[int, int], ...]  # (component index, edge index)

    def describe(self, net: Network) -> str:
        parts = []
        for c, ei in self.edges:
            comp = net.components[c]
            e = comp.edges[ei]
            arrow = f"{comp.locations[e.src].name}->{comp.locations[e.dst].name}"
            tag = f"{e.sync[0]}{e.sync[1]} " if e.sync else ""
            parts.append(f"{comp.name}: {tag}{arrow}")
        return ", ".join(parts)


@dataclass
class SearchNode:
    loc: ProductLoc
    zone: Dbm
    parent: Optional[int] = None
    label: Optional[TransLabel] = None
    status: str = "fresh"
    subsumer: Optional[int] = None


@dataclass(frozen=True)
class PathStep:
    label: TransLabel
    loc: ProductLoc


@dataclass
class SearchStats:
    verdict: str
    nodes: int
    pruned: int
    max_frontier: int
    seconds: float
    disabled_assigns: int = 0
    path: Optional[tuple[PathStep, ...]] = None

    def to_json(self, net: Optional[Network] = None) -> dict:
        out = {
            "verdict": self.verdict,
            "nodes": self.nodes,
            "pruned": self.pruned,
            "seconds": round(self.seconds, 4),
        }
        if self.path is not None and net is not None:
            out["path"] = [
                {
                    "fire": step.label.describe(net),
                    "state": "|".join(
                        net.components[c].locations[l].name
                        for c, l in enumerate(step.loc.locs)
                    ),
                }
                for step in self.path
            ]
        return out


REACHABLE = "Reachable"
UNREACHABLE = "Unreachable"
TIMEOUT = "Timeout"


def product_gset(gmaps: Sequence[GMap], loc: ProductLoc) -> GSet:
    """Union of the per-component constraint sets at loc (integers ignored)."""
    nond = frozenset().union(*(g.at(q).nond for g, q in zip(gmaps, loc.locs)))
    diag = frozenset().union(*(g.at(q).diag for g, q in zip(gmaps, loc.locs)))
    return GSet(nond, diag)


class _NetCache:
    """Per-network tables used on every expansion."""

    def __init__(self, net: Network):
        self.net = net
        self.n_clocks = len(net.clocks)
        self.out = []  # per component: per location: list of edge indices
        for comp in net.components:
            table = [[] for _ in comp.locations]
            for ei, e in enumerate(comp.edges):
                table[e.src].append(ei)
            self.out.append(table)
        self.bounds = [(v.lo, v.hi) for v in net.int_vars]
        self._inv: dict[tuple[int, ...], Guard] = {}
        self._committed: dict[tuple[int, ...], bool] = {}

    def invariant(self, locs: tuple[int, ...]) -> Guard:
        got = self._inv.get(locs)
        if got is None:
            atoms = []
            for c, l in enumerate(locs):
                atoms.extend(self.net.components[c].locations[l].invariant.clock_atoms)
            got = Guard(tuple(atoms))
            self._inv[locs] = got
        return got

    def committed(self, locs: tuple[int, ...]) -> bool:
        got = self._committed.get(locs)
        if got is None:
            got = any(
                self.net.components[c].locations[l].committed
                for c, l in enumerate(locs)
            )
            self._committed[locs] = got
        return got


def _apply_assigns(
    assigns, ints: tuple[int, ...], bounds
) -> Optional[tuple[int, ...]]:
    if not assigns:
        return ints
    vals = list(ints)
    for a in assigns:
        v = a.value(vals)
        lo, hi = bounds[a.var]
        if not lo <= v <= hi:
            return None
        vals[a.var] = v
    return tuple(vals)


def _merge_updates(a: Update, b: Update) -> Update:
    if a.is_identity:
        return b
    if b.is_identity:
        return a
    merged = {x: u for x, u in a.entries}
    merged.update({x: u for x, u in b.entries})
    return Update.of(merged)


def successors(n: SearchNode, net: Network, cache: Optional[_NetCache] = None):
    """Enabled moves from n, in fixed component/edge declaration order.

    Returns (list of fresh SearchNode, number of integer-disabled firings).
    """
    cache = cache or _NetCache(net)
    locs, ints = n.loc.locs, n.loc.ints
    committed_now = cache.committed(locs)
    disabled = 0
    out: list[SearchNode] = []

    def try_move(parts: tuple[tuple[int, int], ...]) -> None:
        nonlocal disabled
        if committed_now and not any(
            net.components[c].locations[locs[c]].committed for c, _ in parts
        ):
            return
        edges = [net.components[c].edges[ei] for c, ei in parts]
        if not all(
            atom.holds(ints) for e in edges for atom in e.guard.int_atoms
        ):
            return
        new_ints = ints
        for e in edges:
            new_ints = _apply_assigns(e.int_assigns, new_ints, cache.bounds)
            if new_ints is None:
                disabled += 1
                return
        new_locs = list(locs)
        for (c, _), e in zip(parts, edges):
            new_locs[c] = e.dst
        new_locs = tuple(new_locs)
        guard_atoms = tuple(p for e in edges for p in e.guard.clock_atoms)
        update = edges[0].update
        for e in edges[1:]:
            update = _merge_updates(update, e.update)
        fired = Edge(0, 0, Guard(guard_atoms), update)
        zone = successor(
            n.zone,
            fired,
            target_invariant=cache.invariant(new_locs),
            do_elapse=not cache.committed(new_locs),
        )
        if zone is EMPTY:
            return
        out.append(
            SearchNode(ProductLoc(new_locs, new_ints), zone,
                       label=TransLabel(parts))
        )

    for c, comp in enumerate(net.components):
        for ei in cache.out[c][locs[c]]:
            if comp.edges[ei].sync is None:
                try_move(((c, ei),))
    for ch in net.channels:
        emitters = []
        receivers = []
        for c, comp in enumerate(net.components):
            for ei in cache.out[c][locs[c]]:
                sync = comp.edges[ei].sync
                if sync and sync[0] == ch:
                    (emitters if sync[1] == "!" else receivers).append((c, ei))
        for c1, e1 in emitters:
            for c2, e2 in receivers:
                if c1 != c2:
                    try_move(((c1, e1), (c2, e2)))
    return out, disabled


def _resolve_target(net: Network, target: str) -> frozenset:
    """Pairs (component, location) whose name matches target.

    Accepts a bare location name (matched in every component) or the
    qualified form process.location.
    """
    pairs = set()
    if "." in target:
        pname, lname = target.split(".", 1)
        ci = net.component_index(pname)
        for li, loc in enumerate(net.components[ci].locations):
            if loc.name == lname:
                pairs.add((ci, li))
    else:
        for ci, comp in enumerate(net.components):
            for li, loc in enumerate(comp.locations):
                if loc.name == target:
                    pairs.add((ci, li))
    if not pairs:
        raise ValueError(f"no location named {target!r} in the network")
    return frozenset(pairs)


def _initial_node(net: Network, cache: _NetCache) -> Optional[SearchNode]:
    locs = tuple(c.initial for c in net.components)
    ints = net.int_initials()
    inv = cache.invariant(locs)
    # the invariant must already hold at the all-zero starting point
    z = intersect_all(zero_zone(cache.n_clocks), inv.clock_atoms)
    if z is not EMPTY and not cache.committed(locs):
        z = intersect_all(elapse(z), inv.clock_atoms)
    if z is EMPTY:
        return None
    return SearchNode(ProductLoc(locs, ints), z)


def reach(
    net: Network,
    gmaps: Optional[Sequence[GMap]],
    target: str,
    use_simulation: bool = True,
    timeout: Optional[float] = None,
) -> SearchStats:
    """BFS from the initial state; verdict Reachable/Unreachable/Timeout."""
    pairs = _resolve_target(net, target)
    cache = _NetCache(net)
    if use_simulation:
        if gmaps is None:
            raise ValueError("pruning requires per-component constraint maps")
        for g in gmaps:
            if g.status is not Status.CONVERGED:
                raise ValueError(
                    f"constraint analysis did not converge ({g.status.value}); "
                    "rerun with pruning disabled"
                )
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    prep_cache: dict[tuple[int, ...], SimPrepared] = {}

    def prep_for(locs: tuple[int, ...]) -> SimPrepared:
        got = prep_cache.get(locs)
        if got is None:
            got = prepare(product_gset(gmaps, ProductLoc(locs, ())),
                          cache.n_clocks)
            prep_cache[locs] = got
        return got

    nodes: list[SearchNode] = []
    init = _initial_node(net, cache)
    stats = SearchStats(UNREACHABLE, 0, 0, 0, 0.0)
    if init is None:
        stats.seconds = time.monotonic() - start
        return stats
    nodes.append(init)
    queue = deque([0])
    visited: dict[ProductLoc, list[int]] = {}
    # per-location stack of explored zone matrices, grown amortized, so the
    # subsumption scan feeds the batched kernel without restacking
    mats: dict[ProductLoc, np.ndarray] = {}
    seen_exact: set = set()

    def finish(verdict: str, path_end: Optional[int]) -> SearchStats:
        stats.verdict = verdict
        stats.seconds = time.monotonic() - start
        if path_end is not None:
            steps = []
            at = path_end
            while nodes[at].parent is not None or nodes[at].label is not None:
                steps.append(PathStep(nodes[at].label, nodes[at].loc))
                at = nodes[at].parent
            stats.path = tuple(reversed(steps))
        return stats

    while queue:
        stats.max_frontier = max(stats.max_frontier, len(queue))
        nid = queue.popleft()
        node = nodes[nid]
        stats.nodes += 1
        if deadline is not None and stats.nodes % 128 == 0:
            if time.monotonic() > deadline:
                return finish(TIMEOUT, None)
        if any(node.loc.locs[c] == l for c, l in pairs):
            node.status = "explored"
            return finish(REACHABLE, nid)
        key = (node.loc, node.zone.to_bytes())
        if key in seen_exact:
            node.status = "pruned"
            stats.pruned += 1
            continue
        covered = None
        if use_simulation:
            vids = visited.get(node.loc)
            if vids:
                prep = prep_for(node.loc.locs)
                # one batched kernel call refutes almost every candidate;
                # only the survivors pay for the full diagonal recursion
                refuted = not_simulated_batch(
                    node.zone, mats[node.loc][: len(vids)], prep
                )
                for k, vid in enumerate(vids):
                    if refuted[k]:
                        continue
                    if sim_zone_prepared(node.zone, nodes[vid].zone, prep):
                        covered = vid
                        break
        if covered is not None:
            node.status = "pruned"
            node.subsumer = covered
            stats.pruned += 1
            continue
        node.status = "explored"
        seen_exact.add(key)
        lst = visited.setdefault(node.loc, [])
        if use_simulation:
            arr = mats.get(node.loc)
            if arr is None or len(lst) == arr.shape[0]:
                side = node.zone.m.shape[0]
                cap = 8 if arr is None else 2 * arr.shape[0]
                grown = np.empty((cap, side, side), dtype=np.int64)
                if arr is not None:
                    grown[: arr.shape[0]] = arr
                mats[node.loc] = grown
                arr = grown
            arr[len(lst)] = node.zone.m
        lst.append(nid)
        children, disabled = successors(node, net, cache)
        stats.disabled_assigns += disabled
        for child in children:
            child.parent = nid
            nodes.append(child)
            queue.append(len(nodes) - 1)
    return finish(UNREACHABLE, None)


def replay(path: Sequence[PathStep], net: Network, target: Optional[str] = None) -> bool:
    """Re-fire a recorded path symbolically; True iff every step checks out."""
    cache = _NetCache(net)
    node = _initial_node(net, cache)
    if node is None:
        return False
    for step in path:
        children, _ = successors(node, net, cache)
        node = None
        for child in children:
            if child.label == step.label and child.loc == step.loc:
                node = child
                break
        if node is None or node.zone is EMPTY:
            return False
    if target is not None:
        pairs = _resolve_target(net, target)
        if not any(node.loc.locs[c] == l for c, l in pairs):
            return False
    return True
