"""Deterministic activation engine.

Execution is a sequence of atomic particle activations.  A round is the
shortest trace segment in which every particle was activated at least
once; all schedule policies produce fair rounds by construction.  An
activation consumes the particle's inbox, reads a snapshot of the
current neighborhood, and may change the particle's state and emit
messages.  Messages land in the receiver's inbox immediately and are
consumed at its next activation.  Since activations never overlap, the
model's requirement that no two computations at distance two or less run
simultaneously holds trivially; `check_exclusion` exists to vet
hypothetical concurrent groupings of a recorded trace.

Each algorithm of a pipeline runs to quiescence (one full round with no
state change and no message traffic) before the next starts.  Identical
inputs give bit-identical traces.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .grid import Coord, GridKind, degree, distance, opposite_port, port_direction
from .particles import ParticleConfig, canonical_to_local, local_to_canonical

POLICY_ROUND_ROBIN = "round_robin"
POLICY_RANDOM = "seeded_random_permutation_per_round"
POLICY_EXPLICIT = "explicit"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Activation policy: fixed order, seeded shuffles, or explicit orders.

    Explicit orders are given per round; rounds past the provided list
    fall back to the sorted round-robin order, so quiescence confirmation
    does not need to be spelled out.
    """

    policy: str = POLICY_ROUND_ROBIN
    seed: int = 0
    orders: Optional[tuple[tuple[Coord, ...], ...]] = None


@dataclass(frozen=True)
class Message:
    via_port: int  # receiver's local port of arrival
    payload: tuple


@dataclass(frozen=True)
class TraceEvent:
    round: int
    coord: Coord
    algorithm: str
    transition: str  # "-" for a no-op activation
    messages: int


@dataclass
class RunTrace:
    kind: GridKind
    coords: tuple[Coord, ...]
    events: list[TraceEvent] = field(default_factory=list)
    rounds: int = 0
    activations: int = 0
    messages: int = 0  # accepted by the receiving protocol
    sends: int = 0  # raw emissions

    def to_text(self) -> str:
        lines = [
            f"{e.round}\t{e.coord[0]},{e.coord[1]}\t{e.algorithm}\t"
            f"{e.transition}\t{e.messages}"
            for e in self.events
        ]
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class AlgorithmReport:
    name: str
    rounds_active: int  # rounds containing at least one state change
    rounds_total: int  # includes the final confirming round
    messages: int  # accepted
    sends: int  # emitted


@dataclass
class RunResult:
    states: dict
    trace: RunTrace
    reports: list[AlgorithmReport]


def _order_for_round(
    schedule: Schedule,
    particles: list[Coord],
    round_index: int,
    rng: random.Random,
) -> list[Coord]:
    if schedule.policy == POLICY_ROUND_ROBIN:
        return particles
    if schedule.policy == POLICY_RANDOM:
        order = list(particles)
        rng.shuffle(order)
        return order
    if schedule.policy == POLICY_EXPLICIT:
        if schedule.orders and round_index < len(schedule.orders):
            order = list(schedule.orders[round_index])
            missing = set(particles) - set(order)
            if missing:
                raise SimulationError(
                    f"explicit order for round {round_index} skips {sorted(missing)}"
                )
            return order
        return particles
    raise SimulationError(f"unknown schedule policy {schedule.policy!r}")


def run(
    config: ParticleConfig,
    pipeline: Sequence[str],
    schedule: Schedule,
    k: int = 1,
    max_activations: Optional[int] = None,
    record: bool = True,
) -> RunResult:
    """Run each named algorithm to quiescence, in order.

    `k` only matters for the identifier phase.  `record=False` keeps the
    totals but skips per-event bookkeeping, for bulk runs.
    """
    from . import algorithms  # runtime import; algorithms drives this engine too

    particles = config.particles()
    n = len(particles)
    cap = max_activations if max_activations is not None else 64 * n * max(2 * n, 8)
    rng = random.Random(schedule.seed)

    states = algorithms.initial_states(config)
    inboxes: dict[Coord, list[Message]] = {p: [] for p in particles}
    trace = RunTrace(kind=config.kind, coords=tuple(particles))
    reports: list[AlgorithmReport] = []
    d = degree(config.kind)

    for name in pipeline:
        proto = algorithms.make_protocol(name, config, k)
        phase_round = 0
        rounds_active = 0
        phase_msgs = 0
        phase_sends = 0
        while True:
            order = _order_for_round(schedule, particles, phase_round, rng)
            round_changed = False
            round_traffic = False
            for p in order:
                if trace.activations >= cap:
                    raise SimulationError(
                        f"activation cap {cap} exceeded during {name}"
                    )
                trace.activations += 1
                inbox = inboxes[p]
                if inbox:
                    inboxes[p] = []
                state = states[p]
                new_state, outbox, accepted = proto.step(p, state, inbox, states)
                changed = new_state is not state
                if changed:
                    states[p] = new_state
                    round_changed = True
                phase_msgs += accepted
                trace.messages += accepted
                for local_port, payload in outbox:
                    canon = local_to_canonical(
                        config.kind, new_state.frame_offset, local_port
                    )
                    di, dj = port_direction(config.kind, canon)
                    target = (p[0] + di, p[1] + dj)
                    recv = states[target]
                    via = canonical_to_local(
                        config.kind,
                        recv.frame_offset,
                        opposite_port(config.kind, canon),
                    )
                    inboxes[target].append(Message(via_port=via, payload=payload))
                    phase_sends += 1
                    trace.sends += 1
                    round_traffic = True
                if record:
                    trace.events.append(
                        TraceEvent(
                            round=trace.rounds + 1,
                            coord=p,
                            algorithm=name,
                            transition=proto.describe(state, new_state)
                            if changed
                            else "-",
                            messages=len(outbox),
                        )
                    )
            trace.rounds += 1
            phase_round += 1
            if round_changed:
                rounds_active += 1
            if not round_changed and not round_traffic:
                break
        reports.append(
            AlgorithmReport(
                name=name,
                rounds_active=rounds_active,
                rounds_total=phase_round,
                messages=phase_msgs,
                sends=phase_sends,
            )
        )
    return RunResult(states=states, trace=trace, reports=reports)


def count_rounds(trace: RunTrace) -> int:
    """Completed rounds, recomputed from the activation sequence alone."""
    universe = set(trace.coords)
    pending = set(universe)
    completed = 0
    for event in trace.events:
        pending.discard(event.coord)
        if not pending:
            completed += 1
            pending = set(universe)
    return completed


def check_exclusion(
    trace: RunTrace, groups: Iterable[Iterable[int]]
) -> list[tuple[int, Coord, Coord]]:
    """Distance-2 exclusion audit for hypothetical concurrent batches.

    Each group is a collection of event indices meant to run together;
    every pair of activated particles within a group at grid distance
    two or less is reported.
    """
    violations = []
    for batch_index, group in enumerate(groups):
        coords = [trace.events[i].coord for i in group]
        for x in range(len(coords)):
            for y in range(x + 1, len(coords)):
                a, b = coords[x], coords[y]
                if distance(trace.kind, a, b) <= 2:
                    violations.append((batch_index, a, b))
    return violations
