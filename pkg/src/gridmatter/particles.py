"""The particle graph: occupancy, holes, borders and contractibility.

A configuration is a finite connected set of occupied vertices of one
grid, together with a port-frame rotation per particle.  This module is
purely structural; protocol state lives in `algorithms`.

The central predicate is S-contractibility (for S a subset of the
particles): p is S-contractible when the extended neighborhood of p
restricted to S induces a connected subgraph and p still has a free
neighbor slot.  Removing such a particle from S keeps S connected and
hole-free, which is what the election algorithm leans on.  The predicate
has an equivalent port-local form, computable from which neighbor (and,
on the square grid, corner) slots are in S; both forms are implemented
and tested against each other exhaustively.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from .grid import Coord, GridKind, degree, distance, neighbors, port_direction

# Corner a of a square-grid particle sits between ports a and a+1.
CORNER_DIRECTIONS: tuple[Coord, ...] = ((-1, -1), (1, -1), (1, 1), (-1, 1))


@dataclass(frozen=True)
class ParticleConfig:
    """A particle graph: grid kind, occupied vertices, frame rotations.

    frame_offsets maps each occupied vertex to the rotation of its local
    port labels against the canonical frame: local port a points in
    canonical direction (a + offset) mod degree.
    """

    kind: GridKind
    occupied: frozenset[Coord]
    frame_offsets: Mapping[Coord, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.occupied)

    def particles(self) -> list[Coord]:
        """Occupied vertices in a fixed deterministic order."""
        return sorted(self.occupied)

    def offset(self, p: Coord) -> int:
        return self.frame_offsets.get(p, 0)


def make_config(
    kind: GridKind,
    occupied: Iterable[Coord],
    frame_offsets: Optional[Mapping[Coord, int]] = None,
) -> ParticleConfig:
    occ = frozenset((int(i), int(j)) for i, j in occupied)
    offsets = {p: 0 for p in occ}
    if frame_offsets:
        for p, w in frame_offsets.items():
            offsets[(int(p[0]), int(p[1]))] = int(w)
    return ParticleConfig(kind=GridKind(kind), occupied=occ, frame_offsets=offsets)


def validate_config(config: ParticleConfig) -> list[str]:
    """Check the configuration invariants; an empty list means valid."""
    problems: list[str] = []
    occ = config.occupied
    if not occ:
        return ["configuration has no particles"]
    extra = set(config.frame_offsets) - set(occ)
    if extra:
        problems.append(f"frame offsets given for unoccupied vertices: {sorted(extra)}")
    d = degree(config.kind)
    for p in config.particles():
        w = config.offset(p)
        if not 0 <= w < d:
            problems.append(f"frame offset {w} at {p} outside [0,{d})")
    if not _is_connected(config.kind, occ):
        problems.append("occupied set is not connected")
    return problems


def _is_connected(kind: GridKind, cells: frozenset[Coord] | set[Coord]) -> bool:
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in neighbors(kind, u):
            if v in cells and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(cells)


def occupied_ports(config: ParticleConfig, p: Coord) -> set[int]:
    """Canonical ports of p that lead to occupied vertices."""
    occ = config.occupied
    return {a for a, v in enumerate(neighbors(config.kind, p)) if v in occ}


def local_to_canonical(kind: GridKind, offset: int, port: int) -> int:
    return (port + offset) % degree(kind)


def canonical_to_local(kind: GridKind, offset: int, port: int) -> int:
    return (port - offset) % degree(kind)


def extended_neighborhood(kind: GridKind, at: Coord) -> set[Coord]:
    """N_G(at), plus the four corners on the square grid."""
    cells = set(neighbors(kind, at))
    if kind == GridKind.SQUARE:
        i, j = at
        cells.update((i + di, j + dj) for di, dj in CORNER_DIRECTIONS)
    return cells


# ---------------------------------------------------------------------------
# Holes and border


@dataclass(frozen=True)
class HoleReport:
    """Finite unoccupied pockets of a configuration, largest box flood."""

    holes: tuple[frozenset[Coord], ...]

    @property
    def count(self) -> int:
        return len(self.holes)


def _bounding_box(occ: Iterable[Coord]) -> tuple[int, int, int, int]:
    is_ = [p[0] for p in occ]
    js = [p[1] for p in occ]
    return min(is_), max(is_), min(js), max(js)


def _exterior_and_pockets(
    config: ParticleConfig,
) -> tuple[set[Coord], list[set[Coord]]]:
    """Flood the unoccupied cells of the expanded bounding box.

    Returns the cells reachable from the box frame (a certificate of the
    infinite exterior component) and the remaining unoccupied components,
    which are exactly the holes.
    """
    occ = config.occupied
    min_i, max_i, min_j, max_j = _bounding_box(occ)
    min_i -= 1
    max_i += 1
    min_j -= 1
    max_j += 1

    def in_box(c: Coord) -> bool:
        return min_i <= c[0] <= max_i and min_j <= c[1] <= max_j

    frame = [
        (i, j)
        for i in range(min_i, max_i + 1)
        for j in (min_j, max_j)
    ] + [
        (i, j)
        for i in (min_i, max_i)
        for j in range(min_j + 1, max_j)
    ]
    exterior: set[Coord] = set()
    queue = deque()
    for c in frame:
        if c not in occ and c not in exterior:
            exterior.add(c)
            queue.append(c)
    while queue:
        u = queue.popleft()
        for v in neighbors(config.kind, u):
            if in_box(v) and v not in occ and v not in exterior:
                exterior.add(v)
                queue.append(v)

    pockets: list[set[Coord]] = []
    seen: set[Coord] = set()
    for i in range(min_i + 1, max_i):
        for j in range(min_j + 1, max_j):
            c = (i, j)
            if c in occ or c in exterior or c in seen:
                continue
            pocket = {c}
            queue = deque([c])
            seen.add(c)
            while queue:
                u = queue.popleft()
                for v in neighbors(config.kind, u):
                    if v not in occ and v not in exterior and v not in seen:
                        seen.add(v)
                        pocket.add(v)
                        queue.append(v)
            pockets.append(pocket)
    pockets.sort(key=lambda s: min(s))
    return exterior, pockets


def find_holes(config: ParticleConfig) -> HoleReport:
    _, pockets = _exterior_and_pockets(config)
    return HoleReport(holes=tuple(frozenset(s) for s in pockets))


def border(config: ParticleConfig) -> set[Coord]:
    """Particles with at least one unoccupied neighbor on the exterior.

    A particle whose only free neighbors lie inside holes does not
    qualify; it is interior as far as the outside world can tell.
    """
    exterior, _ = _exterior_and_pockets(config)
    occ = config.occupied
    out = set()
    for p in occ:
        if any(v in exterior for v in neighbors(config.kind, p)):
            out.add(p)
    return out


# ---------------------------------------------------------------------------
# S-contractibility

# Which slots around a vertex are pairwise adjacent in the grid itself.
# Triangular: consecutive ports only, a plain 6-cycle.  King: consecutive
# ports, plus the chords between the orthogonal ports 0-2-4-6 (those
# neighbor pairs are joined by a diagonal edge).  Square: the 8-cycle
# alternating neighbor slots and corner slots; two neighbor slots are
# never directly adjacent, they only connect through the corner between
# them.


def _slot_components(bits: tuple[bool, ...], edges: tuple[tuple[int, int], ...]) -> int:
    present = [idx for idx, b in enumerate(bits) if b]
    if not present:
        return 0
    seen = set()
    comps = 0
    adjacency: dict[int, list[int]] = {idx: [] for idx in present}
    for x, y in edges:
        if bits[x] and bits[y]:
            adjacency[x].append(y)
            adjacency[y].append(x)
    for idx in present:
        if idx in seen:
            continue
        comps += 1
        stack = [idx]
        seen.add(idx)
        while stack:
            u = stack.pop()
            for v in adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
    return comps


@lru_cache(maxsize=None)
def _slot_edges(kind: GridKind) -> tuple[tuple[int, int], ...]:
    if kind == GridKind.TRIANGULAR:
        return tuple((a, (a + 1) % 6) for a in range(6))
    if kind == GridKind.KING:
        ring = [(a, (a + 1) % 8) for a in range(8)]
        chords = [(0, 2), (2, 4), (4, 6), (6, 0)]
        return tuple(ring + chords)
    # Square: slots 0..7 = port 0, corner 0, port 1, corner 1, ...
    return tuple((s, (s + 1) % 8) for s in range(8))


def is_s_contractible_local(
    kind: GridKind,
    occupied_ports: Iterable[int],
    corner_occupancy: Optional[tuple[bool, bool, bool, bool]] = None,
) -> bool:
    """Port-local contractibility decision.

    `occupied_ports` are the ports whose neighbors are in S, and, on the
    square grid, `corner_occupancy[a]` says whether the corner between
    ports a and a+1 is in S.  Agrees with `is_s_contractible` on every
    possible pattern (tested exhaustively).
    """
    d = degree(kind)
    ports = set(occupied_ports)
    if kind == GridKind.SQUARE:
        if corner_occupancy is None:
            raise ValueError("square grid needs corner occupancy")
        if len(corner_occupancy) != 4:
            raise ValueError("corner occupancy must have four entries")
        bits = []
        for a in range(4):
            bits.append(a in ports)
            bits.append(bool(corner_occupancy[a]))
        slot_bits = tuple(bits)
    else:
        if corner_occupancy is not None:
            raise ValueError("corner occupancy only applies to the square grid")
        slot_bits = tuple(a in ports for a in range(d))
    if len(ports) >= d:
        return False
    return _slot_components(slot_bits, _slot_edges(kind)) <= 1


def is_s_contractible(config: ParticleConfig, S: Iterable[Coord], p: Coord) -> bool:
    """Definition-level contractibility: G[M(p) ∩ S] connected, free slot left."""
    s_set = set(S)
    if p not in s_set:
        raise ValueError(f"{p} is not in S")
    kind = config.kind
    cells = {c for c in extended_neighborhood(kind, p) if c in s_set}
    direct = sum(1 for c in neighbors(kind, p) if c in s_set)
    if direct >= degree(kind):
        return False
    if not cells:
        return True
    return _is_connected(kind, cells)


@lru_cache(maxsize=None)
def contractibility_table(kind: GridKind) -> tuple[bool, ...]:
    """Decision table over slot bitmasks, for the scheduler's hot path.

    Index: bit a = port a in S, and on the square grid additionally
    bit 4+a = corner a in S.
    """
    if kind == GridKind.SQUARE:
        out = []
        for mask in range(1 << 8):
            ports = {a for a in range(4) if mask >> a & 1}
            corners = tuple(bool(mask >> (4 + a) & 1) for a in range(4))
            out.append(is_s_contractible_local(kind, ports, corners))
        return tuple(out)
    d = degree(kind)
    return tuple(
        is_s_contractible_local(kind, {a for a in range(d) if mask >> a & 1})
        for mask in range(1 << d)
    )


def is_articulation(kind: GridKind, S: Iterable[Coord], p: Coord) -> bool:
    """True when removing p disconnects the subgraph induced by S."""
    s_set = frozenset(S)
    if p not in s_set:
        raise ValueError(f"{p} is not in S")
    if not _is_connected(kind, s_set):
        raise ValueError("S is not connected")
    rest = s_set - {p}
    if not rest:
        return False
    return not _is_connected(kind, rest)


# ---------------------------------------------------------------------------
# Structural metrics of the round bound


def _distances_within(config: ParticleConfig, source: Coord) -> dict[Coord, int]:
    occ = config.occupied
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in neighbors(config.kind, u):
            if v in occ and v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def radius(config: ParticleConfig) -> int:
    """r(P): min over particles of the max intra-P distance to the border."""
    report = find_holes(config)
    if report.count:
        raise ValueError("radius is defined for hole-free configurations")
    b = border(config)
    best = None
    for u in config.particles():
        dist = _distances_within(config, u)
        worst = max(dist[v] for v in b)
        if best is None or worst < best:
            best = worst
    assert best is not None
    return best


def mtree(config: ParticleConfig, limit: int = 18) -> int:
    """Maximum height over induced subgraphs of P that are trees.

    Exhaustive over vertex subsets, so only for small instances; this is
    a proof-side quantity used to check the round bound, not anything a
    particle computes.
    """
    cells = config.particles()
    n = len(cells)
    if n > limit:
        raise ValueError(f"mtree is exhaustive; {n} particles exceeds limit {limit}")
    index = {c: i for i, c in enumerate(cells)}
    adj = [0] * n
    for c in cells:
        for v in neighbors(config.kind, c):
            if v in index:
                adj[index[c]] |= 1 << index[v]

    best = 0
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        size = len(members)
        # a path of `size` vertices has height size // 2, no tree does better
        if size // 2 <= best:
            continue
        edges = 0
        for i in members:
            edges += (adj[i] & mask).bit_count()
        edges //= 2
        if edges != size - 1:
            continue
        # connected with size-1 edges, i.e. a tree?
        seen = 1 << members[0]
        stack = [members[0]]
        while stack:
            u = stack.pop()
            reach = adj[u] & mask & ~seen
            while reach:
                low = reach & -reach
                seen |= low
                stack.append(low.bit_length() - 1)
                reach ^= low
        if seen != mask:
            continue
        best = max(best, _tree_height(members, adj, mask))
    return best


def _tree_height(members: list[int], adj: list[int], mask: int) -> int:
    if len(members) == 1:
        return 0
    deg = {i: (adj[i] & mask).bit_count() for i in members}
    leaves = [i for i in members if deg[i] == 1]
    best = None
    for root in members:
        dist = {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            reach = adj[u] & mask
            while reach:
                low = reach & -reach
                v = low.bit_length() - 1
                reach ^= low
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        worst = max(dist[leaf] for leaf in leaves)
        if best is None or worst < best:
            best = worst
    assert best is not None
    return best


def round_bound(config: ParticleConfig, limit: int = 18) -> int:
    """b_G: upper bound on election rounds for hole-free configurations."""
    base = radius(config) + mtree(config, limit=limit)
    if config.kind == GridKind.SQUARE:
        return 2 * base + 2
    return base + 1
