"""Scripted agents for headless benchmarks: greedy adaptive vs classic oracle."""

from __future__ import annotations

import csv
from dataclasses import replace
from enum import Enum
from pathlib import Path

from .geometry import Vec3
from .protocol import InputEvent, InputKind
from .session import ControlScheme, Session, SessionConfig
from .suggestions import SuggestionLabel
from .task import BLOCK_ID, EpisodeMetrics


class AgentKind(Enum):
    GREEDY_ADMC = "greedy"
    CLASSIC_ORACLE = "classic"


class EpisodeTimeout(RuntimeError):
    pass


class GreedyAdmc:
    """Always accepts the optimal suggestion and pushes full input.

    Re-accepting each tick keeps the active axis on the live optimal; only
    materially different exchanges count as mode switches (session rule).
    """

    scheme = ControlScheme.ADMC_CONTINUOUS

    def act(self, session: Session) -> list[InputEvent]:
        ranked = session.suggestions.ranked
        optimal_rank = next(
            i for i, s in enumerate(ranked) if s.label is SuggestionLabel.OPTIMAL
        )
        events: list[InputEvent] = []
        steps = (optimal_rank - session.cursor) % len(ranked)
        events.extend(InputEvent(InputKind.CYCLE_SUGGESTION) for _ in range(steps))
        events.append(InputEvent(InputKind.ACCEPT_SUGGESTION))
        events.append(InputEvent(InputKind.AXIS, values=(1.0,)))
        return events


class ClassicOracle:
    """Cardinal-mode control with an optimal switching schedule.

    Cycles the mode ring (one press per step) only when the needed cardinal
    pair changes: XY align, descend, grasp, carry, release.
    """

    scheme = ControlScheme.CLASSIC
    position_tolerance = 0.004

    def _needed(self, session: Session) -> tuple[int, tuple[float, float]]:
        arm = session.arm
        block = session.objects[BLOCK_ID]
        pos = arm.end_effector.position
        step = arm.limits.vel_trans * session.dt

        def drive(delta: float) -> float:
            return max(-1.0, min(1.0, delta / step))

        if arm.held is None:
            goal = block.pose.position
            dx, dy = goal.x - pos.x, goal.y - pos.y
            if max(abs(dx), abs(dy)) > self.position_tolerance:
                return 0, (drive(dx), drive(dy))
            dz = goal.z - pos.z
            if abs(dz) > self.position_tolerance:
                return 1, (drive(dz), 0.0)
            return 3, (1.0, 0.0)

        goal = session.cfg.layout.drop_center
        dx, dy = goal.x - pos.x, goal.y - pos.y
        if max(abs(dx), abs(dy)) > self.position_tolerance:
            return 0, (drive(dx), drive(dy))
        return 3, (-1.0, 0.0)

    def act(self, session: Session) -> list[InputEvent]:
        needed, u = self._needed(session)
        if session.ring_index != needed:
            # One ring press per tick; hold still while cycling.
            return [InputEvent(InputKind.MODE_SWITCH),
                    InputEvent(InputKind.AXIS, values=(0.0, 0.0))]
        return [InputEvent(InputKind.AXIS, values=u)]


def make_agent(kind: AgentKind):
    return GreedyAdmc() if kind is AgentKind.GREEDY_ADMC else ClassicOracle()


def run_agent(
    cfg: SessionConfig,
    kind: AgentKind,
    episodes: int,
    max_episode_seconds: float = 60.0,
) -> list[EpisodeMetrics]:
    """Run one agent headless until it completes the requested episodes.

    Raises EpisodeTimeout if any single episode exceeds the budget, so a
    non-converging configuration fails loudly instead of silently hanging.
    """
    agent = make_agent(kind)
    session = Session(replace(cfg, scheme=agent.scheme))
    max_ticks = int(max_episode_seconds * cfg.tick_rate)
    try:
        while len(session.task.history) < episodes:
            session.tick(agent.act(session))
            episode_ticks = session.tick_index - session.task.episode_start_tick
            if episode_ticks > max_ticks:
                raise EpisodeTimeout(
                    f"{kind.value} agent exceeded {max_episode_seconds}s in episode "
                    f"{session.task.episode}"
                )
        return list(session.task.history[:episodes])
    finally:
        session.close()


METRICS_FIELDS = ("episode", "ticks", "completion_time", "mode_switches", "suggestions_accepted")


def write_metrics_csv(path: str | Path, rows: list[EpisodeMetrics], agent: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        header = (("agent",) if agent else ()) + METRICS_FIELDS
        writer.writerow(header)
        for row in rows:
            record = (
                row.episode, row.ticks, repr(row.completion_time),
                row.mode_switches, row.suggestions_accepted,
            )
            writer.writerow(((agent,) if agent else ()) + record)
