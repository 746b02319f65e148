"""Local algorithms: leader election, spanning tree, frame agreement, ids.

Every algorithm is written as a protocol object with a pure step
function: given the particle's state and inbox it returns the next state
and the messages to emit.  Port numbers held in particle state
(parent_port, child_ports, receipt_ports) are always in the particle's
own frame; the engine translates to the receiver's frame on delivery.

A step must return the identical state object when nothing changed;
quiescence detection relies on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import scheduler as _scheduler
from .coloring import color_at, coord_update_receive, pattern, tracking_modulus
from .grid import (
    Coord,
    GridKind,
    degree,
    neighbors,
    next_occupied_port,
    opposite_port,
    port_direction,
)
from .particles import (
    CORNER_DIRECTIONS,
    ParticleConfig,
    canonical_to_local,
    contractibility_table,
    occupied_ports,
)

STATUS_CANDIDATE = "C"
STATUS_NON_CANDIDATE = "N"
STATUS_LEADER = "L"

ELECT = "elect"
TREE = "tree"
RENUMBER = "renumber"
IDS = "ids"
PIPELINE_FULL = (ELECT, TREE, RENUMBER, IDS)


@dataclass(frozen=True)
class ParticleState:
    status: str = STATUS_CANDIDATE
    parent_port: Optional[int] = None
    child_ports: frozenset = frozenset()
    coord_i: Optional[int] = None
    coord_j: Optional[int] = None
    local_id: Optional[int] = None
    frame_offset: int = 0
    tree_joined: bool = False
    receipt_ports: frozenset = frozenset()
    renumber_done: bool = False
    ids_done: bool = False


def initial_states(config: ParticleConfig) -> dict:
    return {
        p: ParticleState(frame_offset=config.offset(p)) for p in config.particles()
    }


def _neighbor_lists(config: ParticleConfig):
    """Per particle, the occupied neighbor coordinate at each canonical port."""
    d = degree(config.kind)
    occupied = config.occupied
    out = {}
    for p in config.particles():
        row = []
        for a in range(d):
            di, dj = port_direction(config.kind, a)
            q = (p[0] + di, p[1] + dj)
            row.append(q if q in occupied else None)
        out[p] = tuple(row)
    return out


class ElectProtocol:
    """Candidate elimination by local contraction tests.

    A candidate whose candidate neighborhood would stay connected after
    its removal retires; it becomes the leader instead when it is the
    last candidate in sight.  Reads neighbor statuses only, sends
    nothing.
    """

    name = ELECT

    def __init__(self, config: ParticleConfig):
        self.kind = config.kind
        self.nbr = _neighbor_lists(config)
        self.table = contractibility_table(config.kind)
        if config.kind == GridKind.SQUARE:
            occ = config.occupied
            self.corners = {
                p: tuple(
                    (p[0] + di, p[1] + dj)
                    if (p[0] + di, p[1] + dj) in occ
                    else None
                    for di, dj in CORNER_DIRECTIONS
                )
                for p in config.particles()
            }
        else:
            self.corners = None

    def step(self, p, state, inbox, states):
        if state.status != STATUS_CANDIDATE:
            return state, (), 0
        mask = 0
        has_candidate_neighbor = False
        for a, q in enumerate(self.nbr[p]):
            if q is not None and states[q].status == STATUS_CANDIDATE:
                mask |= 1 << a
                has_candidate_neighbor = True
        if self.corners is not None:
            for a, q in enumerate(self.corners[p]):
                if q is not None and states[q].status == STATUS_CANDIDATE:
                    mask |= 1 << (4 + a)
        if not self.table[mask]:
            return state, (), 0
        status = STATUS_NON_CANDIDATE if has_candidate_neighbor else STATUS_LEADER
        return replace(state, status=status), (), 0

    def describe(self, old, new):
        return f"{old.status}->{new.status}"


class TreeProtocol:
    """Spanning tree by flooding from the leader.

    A particle joins on its first delivery: parent is the delivering
    port, children are the remaining occupied ports minus any port a
    notification has already come through.  Later deliveries prune.  A
    joined particle also drops a child whose own parent pointer, read
    from the snapshot, points elsewhere; two particles that notified
    each other in the same round would otherwise both keep the edge.
    """

    name = TREE

    def __init__(self, config: ParticleConfig, payload=("tree",)):
        self.kind = config.kind
        self.nbr = _neighbor_lists(config)
        self.occ_canonical = {p: occupied_ports(config, p) for p in config.particles()}
        self.payload = payload

    def _local_occupied(self, p, state):
        return {
            canonical_to_local(self.kind, state.frame_offset, a)
            for a in self.occ_canonical[p]
        }

    def _child_gone(self, p, local_port, state, states):
        # true when the neighbor through local_port has joined under a
        # different parent
        canon = (local_port + state.frame_offset) % degree(self.kind)
        q = self.nbr[p][canon]
        qs = states[q]
        if not qs.tree_joined or qs.status == STATUS_LEADER:
            return qs.status == STATUS_LEADER
        parent_canon = (qs.parent_port + qs.frame_offset) % degree(self.kind)
        di, dj = port_direction(self.kind, parent_canon)
        return (q[0] + di, q[1] + dj) != p

    def step(self, p, state, inbox, states):
        if state.status == STATUS_LEADER:
            if not state.tree_joined:
                children = frozenset(self._local_occupied(p, state))
                outbox = [(a, self.payload) for a in sorted(children)]
                return replace(state, tree_joined=True, child_ports=children), outbox, 0
            children = frozenset(
                a
                for a in state.child_ports
                if not self._child_gone(p, a, state, states)
            )
            if children != state.child_ports:
                return replace(state, child_ports=children), (), 0
            return state, (), 0
        if not state.tree_joined:
            if not inbox:
                return state, (), 0
            receipts = frozenset(m.via_port for m in inbox)
            parent = inbox[0].via_port
            children = frozenset(self._local_occupied(p, state) - receipts)
            children = frozenset(
                a for a in children if not self._child_gone(p, a, state, states)
            )
            outbox = [(a, self.payload) for a in sorted(children)]
            new = replace(
                state,
                tree_joined=True,
                parent_port=parent,
                child_ports=children,
                receipt_ports=receipts,
            )
            return new, outbox, 1
        receipts = state.receipt_ports | frozenset(m.via_port for m in inbox)
        children = frozenset(
            a
            for a in state.child_ports - receipts
            if not self._child_gone(p, a, state, states)
        )
        if children != state.child_ports or receipts != state.receipt_ports:
            return replace(state, child_ports=children, receipt_ports=receipts), (), 0
        return state, (), 0

    def describe(self, old, new):
        kids = ",".join(str(a) for a in sorted(new.child_ports)) or "-"
        if not old.tree_joined and new.tree_joined:
            if new.status == STATUS_LEADER:
                return f"root children={kids}"
            return f"join parent={new.parent_port} children={kids}"
        return f"prune children={kids}"


class RenumberProtocol:
    """Port relabeling along the tree until every frame matches the root.

    The payload is the sender's label of the port it sends through.  A
    receiver learning label b through its own port a rotates all its
    labels by (opposite(b) - a): afterwards its label of a port equals
    the label its parent would use for the same direction, hence, by
    induction, the leader's.
    """

    name = RENUMBER

    def __init__(self, config: ParticleConfig):
        self.kind = config.kind
        self.d = degree(config.kind)

    def _send_children(self, state):
        return [(a, (RENUMBER, a)) for a in sorted(state.child_ports)]

    def step(self, p, state, inbox, states):
        if state.status == STATUS_LEADER:
            if state.renumber_done:
                return state, (), 0
            return replace(state, renumber_done=True), self._send_children(state), 0
        if state.renumber_done or not inbox:
            return state, (), 0
        m = inbox[0]
        b = m.payload[1]
        shift = (opposite_port(self.kind, b) - m.via_port) % self.d
        new = replace(
            state,
            renumber_done=True,
            frame_offset=(state.frame_offset - shift) % self.d,
            parent_port=(state.parent_port + shift) % self.d,
            child_ports=frozenset((a + shift) % self.d for a in state.child_ports),
            receipt_ports=frozenset(
                (a + shift) % self.d for a in state.receipt_ports
            ),
        )
        return new, self._send_children(new), 1

    def describe(self, old, new):
        if new.status == STATUS_LEADER:
            return "renumber send"
        return f"renumber offset={old.frame_offset}->{new.frame_offset}"


class IdsProtocol:
    """Identifier assignment from tracked displacements.

    Runs after frame agreement.  The payload is the sender's tracked
    coordinate pair; the receiver subtracts the arrival direction,
    working modulo the tracking modulus, and takes its identifier from
    the coloring pattern.  The root tracks (0, 0).
    """

    name = IDS

    def __init__(self, config: ParticleConfig, k: int):
        self.kind = config.kind
        self.k = k
        self.pattern = pattern(config.kind, k)

    def _assign(self, state, i, j):
        return replace(
            state,
            ids_done=True,
            coord_i=i,
            coord_j=j,
            local_id=color_at(self.pattern, i, j),
        )

    def step(self, p, state, inbox, states):
        if state.status == STATUS_LEADER:
            if state.ids_done:
                return state, (), 0
            new = self._assign(state, 0, 0)
            outbox = [(a, (IDS, 0, 0)) for a in sorted(state.child_ports)]
            return new, outbox, 0
        if state.ids_done or not inbox:
            return state, (), 0
        m = inbox[0]
        canon = (m.via_port + state.frame_offset) % degree(self.kind)
        i, j = coord_update_receive(
            self.kind, self.k, (m.payload[1], m.payload[2]), canon
        )
        new = self._assign(state, i, j)
        outbox = [(a, (IDS, i, j)) for a in sorted(state.child_ports)]
        return new, outbox, 1

    def describe(self, old, new):
        return f"coords=({new.coord_i},{new.coord_j}) id={new.local_id}"


def make_protocol(name: str, config: ParticleConfig, k: int = 1):
    if name == ELECT:
        return ElectProtocol(config)
    if name == TREE:
        return TreeProtocol(config)
    if name == RENUMBER:
        return RenumberProtocol(config)
    if name == IDS:
        return IdsProtocol(config, k)
    raise ValueError(f"unknown algorithm {name!r}")


# Single-step entry points over a state snapshot.  These mirror the
# protocol objects one activation at a time; the inbox is a sequence of
# (via_port, payload) pairs in the particle's frame.


def _as_messages(inbox):
    return [_scheduler.Message(via_port=a, payload=tuple(m)) for a, m in inbox]


def step_elect(config: ParticleConfig, states: dict, p: Coord) -> ParticleState:
    new, _, _ = ElectProtocol(config).step(p, states[p], [], states)
    return new


def step_spanning_tree(config: ParticleConfig, states: dict, p: Coord, inbox=()):
    new, outbox, _ = TreeProtocol(config).step(
        p, states[p], _as_messages(inbox), states
    )
    return new, list(outbox)


def step_renumber(config: ParticleConfig, states: dict, p: Coord, inbox=()):
    new, outbox, _ = RenumberProtocol(config).step(
        p, states[p], _as_messages(inbox), states
    )
    return new, list(outbox)


def step_assign_ids(config: ParticleConfig, states: dict, p: Coord, inbox=(), k: int = 1):
    new, outbox, _ = IdsProtocol(config, k).step(
        p, states[p], _as_messages(inbox), states
    )
    return new, list(outbox)


def update_id_after_move(
    kind: GridKind, k: int, state: ParticleState, port: int
) -> ParticleState:
    """Refresh tracked coordinates and id after moving through a local port.

    Moving through the port adds its direction to the particle's
    displacement from the root; the frame offset is unaffected because a
    move translates the particle without turning it.
    """
    if state.coord_i is None or state.coord_j is None:
        raise ValueError("particle has no tracked coordinates")
    canon = (port + state.frame_offset) % degree(kind)
    di, dj = port_direction(kind, canon)
    m = tracking_modulus(kind, k)
    i = (state.coord_i + di) % m
    j = (state.coord_j + dj) % m
    return replace(state, coord_i=i, coord_j=j, local_id=color_at(pattern(kind, k), i, j))


def classify_boundary(
    config: ParticleConfig, start: Coord, start_port: int
) -> tuple[str, int]:
    """Walk a boundary cycle and classify which side it hugs.

    The walk state is (particle, canonical arrival port); the next hop
    leaves through the first occupied port clockwise after the arrival
    port.  Summed turning over the closed cycle is one full turn: minus
    the grid degree when the unoccupied side is the outer face, plus the
    degree around a hole.  Returns the classification and the cycle
    length in hops; a lone particle is the degenerate outer cycle of
    length zero.
    """
    if start not in config.occupied:
        raise ValueError(f"start {start} is not occupied")
    if config.n == 1:
        return "outer", 0
    d = degree(config.kind)
    occ = {p: occupied_ports(config, p) for p in config.particles()}
    if start_port not in occ[start]:
        raise ValueError(f"start port {start_port} has no occupied neighbor")
    cur, inp = start, start_port
    turning = 0
    length = 0
    hugged_unoccupied = False
    while True:
        ports = occ[cur]
        out = next_occupied_port(config.kind, inp, ports)
        skipped = (out - inp - 1) % d  # ports faced while sweeping to out
        if skipped:
            hugged_unoccupied = True
        # straight through (out opposite inp) turns 0; a tighter exit is a
        # positive turn, a wider sweep negative, a full U-turn -d/2
        turning += d // 2 - 1 - skipped
        di, dj = port_direction(config.kind, out)
        cur = (cur[0] + di, cur[1] + dj)
        inp = opposite_port(config.kind, out)
        length += 1
        if (cur, inp) == (start, start_port):
            break
    if not hugged_unoccupied:
        raise ValueError("walk never faces an empty cell; not a boundary state")
    if turning not in (-d, d):
        raise AssertionError(f"boundary walk turned {turning}, expected +-{d}")
    return ("outer" if turning < 0 else "hole"), length


def residual_candidates(
    config: ParticleConfig, schedule: Optional[_scheduler.Schedule] = None
) -> frozenset:
    """Particles never eliminated by the election.

    Empty neighborhood-connectivity never holds around a hole, so a
    holey component leaves a cycle of candidates; a hole-free one leaves
    exactly the leader.
    """
    if schedule is None:
        schedule = _scheduler.Schedule()
    result = _scheduler.run(config, (ELECT,), schedule, record=False)
    return frozenset(
        p for p, s in result.states.items() if s.status != STATUS_NON_CANDIDATE
    )


# Inspection helpers over a finished run's states.


def leader_of(states: dict) -> Optional[Coord]:
    found = [p for p, s in states.items() if s.status == STATUS_LEADER]
    if len(found) > 1:
        raise ValueError(f"multiple leaders {sorted(found)}")
    return found[0] if found else None


def tree_parent(kind: GridKind, states: dict, p: Coord) -> Optional[Coord]:
    s = states[p]
    if s.parent_port is None:
        return None
    canon = (s.parent_port + s.frame_offset) % degree(kind)
    di, dj = port_direction(kind, canon)
    return (p[0] + di, p[1] + dj)


def tree_children(kind: GridKind, states: dict, p: Coord) -> list:
    s = states[p]
    out = []
    for a in sorted(s.child_ports):
        canon = (a + s.frame_offset) % degree(kind)
        di, dj = port_direction(kind, canon)
        out.append((p[0] + di, p[1] + dj))
    return out


def tree_edges(kind: GridKind, states: dict) -> set:
    return {
        frozenset((p, tree_parent(kind, states, p)))
        for p in states
        if states[p].parent_port is not None
    }


def tree_height(kind: GridKind, states: dict) -> int:
    """Levels of the tree: a lone root counts 1."""
    root = leader_of(states)
    if root is None:
        raise ValueError("no leader")
    depth = {root: 1}
    queue = [root]
    while queue:
        p = queue.pop()
        for q in tree_children(kind, states, p):
            if q not in depth:
                depth[q] = depth[p] + 1
                queue.append(q)
    if len(depth) != len(states):
        raise ValueError("tree does not span the system")
    return max(depth.values())


def id_histogram(states: dict) -> dict:
    hist: dict = {}
    for s in states.values():
        if s.local_id is not None:
            hist[s.local_id] = hist.get(s.local_id, 0) + 1
    return dict(sorted(hist.items()))
