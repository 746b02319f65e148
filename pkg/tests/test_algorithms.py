import random

import pytest

from gridmatter.algorithms import (
    PIPELINE_FULL,
    STATUS_CANDIDATE,
    STATUS_LEADER,
    STATUS_NON_CANDIDATE,
    classify_boundary,
    id_histogram,
    initial_states,
    leader_of,
    residual_candidates,
    step_elect,
    tree_children,
    tree_edges,
    tree_height,
    tree_parent,
    update_id_after_move,
)
from gridmatter.coloring import color_at, color_count, pattern, tracking_modulus
from gridmatter.grid import GridKind, degree, neighbors, opposite_port, port_direction
from gridmatter.particles import find_holes, is_s_contractible, make_config
from gridmatter.scheduler import (
    POLICY_EXPLICIT,
    POLICY_RANDOM,
    POLICY_ROUND_ROBIN,
    Schedule,
    run,
)

import oracles

KINDS = [GridKind.SQUARE, GridKind.TRIANGULAR, GridKind.KING]

# 14-particle triangular system whose election transcript is pinned
# round by round below.
WALK = [
    (0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (6, 0),
    (2, 1), (3, 1), (4, 1), (5, 1), (1, 2), (5, 2), (0, 3),
]
WALK_ORDERS = (
    ((1, 0), (2, 0), (2, 1), (1, 2), (5, 1), (0, 0), (3, 0), (4, 0),
     (5, 0), (6, 0), (5, 2), (0, 3), (3, 1), (4, 1)),
    ((2, 0), (4, 1), (2, 1), (3, 1), (1, 0), (5, 1), (1, 2), (0, 0),
     (3, 0), (4, 0), (5, 0), (6, 0), (5, 2), (0, 3)),
    ((2, 0), (2, 1), (4, 1), (3, 1), (0, 0), (1, 0), (3, 0), (4, 0),
     (5, 0), (6, 0), (5, 1), (5, 2), (1, 2), (0, 3)),
)
WALK_RETIRED = {
    1: {(0, 0), (3, 0), (4, 0), (5, 0), (6, 0), (5, 2), (0, 3)},
    2: {(1, 0), (1, 2), (5, 1)},
    3: {(2, 0), (2, 1), (4, 1)},
}

FIG_HOLE_TRI = [
    (1, 1), (0, 2), (0, 3), (1, 3), (2, 0), (3, 0), (3, 1),
    (3, 2), (2, 3), (3, 3), (3, 4), (4, 1), (4, 2), (4, 3),
]
RING = [(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)]
PINCH = [(i, j) for i in range(4) for j in range(4) if (i, j) not in {(1, 1), (2, 2)}]


def grown_blob(kind, n, seed):
    rng = random.Random(seed)
    occ = {(0, 0)}
    while len(occ) < n:
        p = rng.choice(sorted(occ))
        occ.add(rng.choice(neighbors(kind, p)))
    return sorted(occ)


def hole_free_blob(kind, n, seed):
    cells = set(grown_blob(kind, n, seed))
    while True:
        report = find_holes(make_config(kind, sorted(cells)))
        if not report.count:
            return sorted(cells)
        for pocket in report.holes:
            cells |= pocket


# ---------------------------------------------------------------------------
# election


def test_single_particle_elects_itself():
    cfg = make_config("king", [(7, -3)])
    states = initial_states(cfg)
    assert states[(7, -3)].status == STATUS_CANDIDATE
    assert step_elect(cfg, states, (7, -3)).status == STATUS_LEADER


def test_election_walkthrough_round_by_round():
    cfg = make_config("triangular", WALK)
    sched = Schedule(POLICY_EXPLICIT, orders=WALK_ORDERS)
    res = run(cfg, ("elect",), sched)

    by_round = {}
    for e in res.trace.events:
        if e.transition != "-":
            by_round.setdefault(e.round, set()).add((e.coord, e.transition))
    assert by_round[1] == {(p, "C->N") for p in WALK_RETIRED[1]}
    assert by_round[2] == {(p, "C->N") for p in WALK_RETIRED[2]}
    assert by_round[3] == (
        {(p, "C->N") for p in WALK_RETIRED[3]} | {((3, 1), "C->L")}
    )
    assert set(by_round) == {1, 2, 3}

    assert leader_of(res.states) == (3, 1)
    assert sum(s.status == STATUS_NON_CANDIDATE for s in res.states.values()) == 13
    assert res.trace.rounds == 4
    assert res.reports[0].rounds_active == 3
    assert res.reports[0].rounds_total == 4


def test_walkthrough_intermediate_candidate_set():
    cfg = make_config("triangular", WALK)
    after_one = frozenset(WALK) - WALK_RETIRED[1]
    contractible = {
        p for p in after_one if is_s_contractible(cfg, after_one, p)
    }
    assert contractible == {(1, 0), (1, 2), (5, 1)}


@pytest.mark.parametrize("kind", KINDS)
def test_election_transitions_preserve_candidate_invariants(kind):
    # replay a run and audit every retirement against the definition
    cfg = make_config(kind, hole_free_blob(kind, 24, len(kind.value)))
    res = run(cfg, ("elect",), Schedule(POLICY_RANDOM, seed=5))
    cset = set(cfg.particles())
    for e in res.trace.events:
        if e.transition == "-" or e.algorithm != "elect":
            continue
        if e.transition == "C->N":
            assert is_s_contractible(cfg, frozenset(cset), e.coord)
            cset.discard(e.coord)
            assert oracles.connected(cfg.kind, cset)
            assert not oracles.holes(cfg.kind, cset)
    assert cset == {leader_of(res.states)}


def test_residual_candidates_on_hole_free_systems():
    cfg = make_config("square", [(0, 0), (1, 0), (2, 0)])
    assert len(residual_candidates(cfg)) == 1


def test_residual_candidates_surround_holes():
    ring = make_config("square", RING)
    res = residual_candidates(ring)
    assert res == frozenset(RING)
    fig = make_config("triangular", FIG_HOLE_TRI)
    res = residual_candidates(fig)
    # the far corner peels away ((3,2) can contract: its free slots all
    # face the hole and its occupied arc stays connected), leaving the
    # tight 11-cycle pinned around the pocket
    assert res == frozenset(FIG_HOLE_TRI) - {(3, 2), (3, 4), (4, 3)}
    assert oracles.connected("triangular", res)
    # one hole on the triangular grid strands a plain cycle: every
    # survivor touches exactly two survivors
    for p in res:
        assert sum(1 for q in neighbors("triangular", p) if q in res) == 2


DIAMOND = [(0, 1), (1, 0), (1, 2), (2, 1)]


@pytest.mark.parametrize("policy", [POLICY_RANDOM, POLICY_ROUND_ROBIN])
def test_king_diamond_stalls_under_every_schedule(policy):
    # Four particles pairwise linked only by diagonals, surrounding an
    # empty cell that is NOT a hole (it escapes through the crossings).
    # Hole-free yet nobody is contractible: each particle sees its two
    # occupied slots two ports apart, so its occupied neighbourhood is
    # disconnected.  Election quiesces with the full diamond stuck in C.
    cfg = make_config("king", DIAMOND)
    assert find_holes(cfg).count == 0
    assert not any(is_s_contractible(cfg, cfg.occupied, p) for p in DIAMOND)
    res = run(cfg, ("elect",), Schedule(policy, seed=13))
    assert leader_of(res.states) is None
    survivors = {p for p, s in res.states.items() if s.status == STATUS_CANDIDATE}
    assert survivors == set(DIAMOND)


def test_king_blob_stall_depends_on_activation_order():
    # A denser system can still wander into a stranded diamond: under
    # this particular random order the candidates shrink to a crown of
    # four mutually diagonal cells and stop, while round robin on the
    # same cells elects a leader.  The stall is order-dependent, the
    # diamond above is not.
    cells = hole_free_blob("king", 18, 41)
    cfg = make_config("king", cells)
    stuck = run(cfg, ("elect",), Schedule(POLICY_RANDOM, seed=8))
    assert leader_of(stuck.states) is None
    crown = {p for p, s in stuck.states.items() if s.status == STATUS_CANDIDATE}
    assert crown == {(-2, -1), (-1, -2), (-1, 0), (0, -1)}
    assert oracles.connected("king", crown)
    assert not oracles.holes("king", crown)
    ok = run(cfg, ("elect",), Schedule(POLICY_ROUND_ROBIN))
    assert leader_of(ok.states) is not None


# ---------------------------------------------------------------------------
# spanning tree


def _full_run(kind, cells, k=1, seed=0, offsets=None, policy=POLICY_RANDOM):
    cfg = make_config(kind, cells, offsets)
    return cfg, run(cfg, PIPELINE_FULL, Schedule(policy, seed=seed), k=k)


def test_tree_spans_with_reciprocal_pointers():
    cfg, res = _full_run("square", [(i, 0) for i in range(5)])
    states = res.states
    root = leader_of(states)
    edges = tree_edges(cfg.kind, states)
    assert len(edges) == 4
    assert edges == {frozenset(((i, 0), (i + 1, 0))) for i in range(4)}
    for p in cfg.particles():
        if p == root:
            assert states[p].parent_port is None
            continue
        parent = tree_parent(cfg.kind, states, p)
        assert parent in cfg.occupied
        assert p in tree_children(cfg.kind, states, parent)
    # a path always yields the path itself; levels count from wherever
    # the leader ended up
    assert tree_height(cfg.kind, states) == max(root[0], 4 - root[0]) + 1


def test_tree_on_cycle_drops_one_edge():
    cfg, res = _full_run("square", [(0, 0), (0, 1), (1, 0), (1, 1)])
    states = res.states
    edges = tree_edges(cfg.kind, states)
    assert len(edges) == 3
    for p in cfg.particles():
        for child in tree_children(cfg.kind, states, p):
            assert tree_parent(cfg.kind, states, child) == p
    by_name = {r.name: r for r in res.reports}
    assert by_name["tree"].messages == 3


def test_tree_helpers_reject_disconnected_pointers():
    cfg, res = _full_run("triangular", WALK)
    states = dict(res.states)
    # cut one leaf loose from its parent's child list; the tree no
    # longer spans and the level count refuses to answer
    from dataclasses import replace

    leaf = next(
        p for p in cfg.particles()
        if states[p].parent_port is not None and not states[p].child_ports
    )
    parent = tree_parent(cfg.kind, states, leaf)
    back = opposite_port(cfg.kind, states[leaf].parent_port)
    assert back in states[parent].child_ports
    states[parent] = replace(
        states[parent], child_ports=states[parent].child_ports - {back}
    )
    with pytest.raises(ValueError):
        tree_height(cfg.kind, states)


# ---------------------------------------------------------------------------
# renumbering


def test_renumber_aligns_every_frame_with_the_root():
    rng = random.Random(11)
    cells = hole_free_blob("triangular", 20, 77)
    offsets = {p: rng.randrange(6) for p in cells}
    cfg, res = _full_run("triangular", cells, offsets=offsets)
    states = res.states
    root = leader_of(states)
    want = cfg.offset(root)
    assert states[root].frame_offset == want
    assert all(s.frame_offset == want for s in states.values())


def test_renumber_makes_tree_ports_reciprocal_locally():
    cells = hole_free_blob("king", 16, 3)
    offsets = {p: random.Random(101 * p[0] + p[1]).randrange(8) for p in cells}
    cfg, res = _full_run("king", cells, offsets=offsets)
    states = res.states
    d = degree(cfg.kind)
    for p in cfg.particles():
        s = states[p]
        if s.parent_port is None:
            continue
        parent = tree_parent(cfg.kind, states, p)
        back = opposite_port(cfg.kind, s.parent_port)
        # frames agree after renumbering, so the reciprocal label is
        # literally the parent's child port
        assert back in states[parent].child_ports
        canon = (s.parent_port + s.frame_offset) % d
        di, dj = port_direction(cfg.kind, canon)
        assert (p[0] + di, p[1] + dj) == parent


# ---------------------------------------------------------------------------
# identifiers


@pytest.mark.parametrize("kind", KINDS)
def test_ids_equal_displacement_mod_tracking(kind):
    k = 2
    cells = hole_free_blob(kind, 18, 41)
    # round robin: random orders can strand a diagonal crown on the king grid
    cfg, res = _full_run(kind, cells, k=k, seed=8, policy=POLICY_ROUND_ROBIN)
    states = res.states
    root = leader_of(states)
    m = tracking_modulus(kind, k)
    pat = pattern(kind, k)
    for p in cfg.particles():
        s = states[p]
        want = ((p[0] - root[0]) % m, (p[1] - root[1]) % m)
        assert (s.coord_i, s.coord_j) == want
        assert s.local_id == color_at(pat, *want)
        assert 0 <= s.local_id < color_count(kind, k)
        assert s.ids_done


def test_id_histogram_counts():
    cfg, res = _full_run("square", [(i, 0) for i in range(4)], k=1)
    hist = id_histogram(res.states)
    assert sum(hist.values()) == 4
    assert set(hist) <= {0, 1}
    assert hist[0] == 2 and hist[1] == 2


@pytest.mark.parametrize("kind", KINDS)
def test_update_id_after_move_tracks_absolute_position(kind):
    rng = random.Random(kind.value)
    k = rng.choice([1, 2, 3])
    m = tracking_modulus(kind, k)
    pat = pattern(kind, k)
    d = degree(kind)
    for trial in range(60):
        offset = rng.randrange(d)
        state = initial_states(make_config(kind, [(0, 0)], {(0, 0): offset}))[(0, 0)]
        from dataclasses import replace

        state = replace(state, coord_i=0, coord_j=0, local_id=color_at(pat, 0, 0))
        pos = (0, 0)
        for _ in range(rng.randrange(1, 20)):
            port = rng.randrange(d)
            state = update_id_after_move(kind, k, state, port)
            di, dj = port_direction(kind, (port + offset) % d)
            pos = (pos[0] + di, pos[1] + dj)
        assert (state.coord_i, state.coord_j) == (pos[0] % m, pos[1] % m)
        assert state.local_id == color_at(pat, pos[0] % m, pos[1] % m)


def test_update_id_requires_assigned_coordinates():
    cfg = make_config("square", [(0, 0)])
    state = initial_states(cfg)[(0, 0)]
    with pytest.raises(ValueError):
        update_id_after_move(GridKind.SQUARE, 1, state, 0)


# ---------------------------------------------------------------------------
# boundary walks


def test_boundary_walk_outer_cases():
    two = make_config("square", [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert classify_boundary(two, (0, 0), 3) == ("outer", 4)
    line = make_config("square", [(0, 0), (1, 0), (2, 0)])
    assert classify_boundary(line, (1, 0), 0) == ("outer", 4)
    lone = make_config("square", [(5, 5)])
    assert classify_boundary(lone, (5, 5), 0) == ("outer", 0)
    tri = make_config("triangular", WALK)
    assert classify_boundary(tri, (0, 0), 3) == ("outer", 19)


def test_boundary_walk_hole_cases():
    ring = make_config("square", RING)
    assert classify_boundary(ring, (1, 0), 2) == ("hole", 8)
    assert classify_boundary(ring, (1, 0), 0) == ("outer", 8)
    fig = make_config("triangular", FIG_HOLE_TRI)
    assert classify_boundary(fig, (1, 1), 2) == ("hole", 9)


def test_boundary_walk_pinched_holes_share_one_cycle():
    pinch = make_config("square", PINCH)
    assert find_holes(pinch).count == 2
    # the inner walk hugs both single-cell holes in one 12-hop cycle,
    # crossing the pinch diagonally; the outer walk is a separate cycle
    assert classify_boundary(pinch, (1, 0), 2) == ("hole", 12)
    assert classify_boundary(pinch, (0, 0), 2) == ("hole", 12)
    assert classify_boundary(pinch, (0, 0), 3) == ("outer", 12)


def test_boundary_walk_rejects_bad_starts():
    two = make_config("square", [(0, 0), (0, 1), (1, 0), (1, 1)])
    with pytest.raises(ValueError):
        classify_boundary(two, (9, 9), 0)
    with pytest.raises(ValueError):
        classify_boundary(two, (0, 0), 0)  # faces the exterior, no neighbor
    block = make_config("square", [(i, j) for i in range(5) for j in range(5)])
    with pytest.raises(ValueError):
        classify_boundary(block, (2, 2), 0)  # interior orbit, never sees space
    pinch = make_config("square", PINCH)
    with pytest.raises(ValueError):
        classify_boundary(pinch, (1, 0), 3)  # port points into the hole


@pytest.mark.parametrize("kind", KINDS)
def test_boundary_walks_agree_with_face_oracle(kind):
    for seed in (1, 2, 3, 4):
        cells = grown_blob(kind, 16 + seed, 900 + seed)
        cfg = make_config(kind, cells)
        for p in cells[::3]:
            for a in range(degree(kind)):
                try:
                    lib = classify_boundary(cfg, p, a)
                except ValueError:
                    with pytest.raises((ValueError,)):
                        oracles.classify_walk(kind, cells, p, a)
                    continue
                assert lib == oracles.classify_walk(kind, cells, p, a)
