"""Exploration model and the baseline event-generation strategies.

``random`` picks uniformly among enabled events, ``dfs`` is a depth-first
model-based explorer and ``start_biased`` is an approximation of an
on-the-fly explorer that keeps returning to the start screen. All of them
share an :class:`ExplorationModel`, which also records the shortest known
event path to every discovered state.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .simulator import BACK, GuiState, InputEvent


class StrategyKind(str, Enum):
    RANDOM = "random"
    DFS = "dfs"
    START_BIASED = "start_biased"
    CAT = "cat"

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        return cls(text.replace("-", "_"))


@dataclass(frozen=True)
class StrategyConfig:
    kind: StrategyKind = StrategyKind.CAT
    budget: int = 1000
    seed: int = 0
    guidance: tuple = ()
    max_sequences: int = 500

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.max_sequences < 1:
            raise ValueError("max_sequences must be >= 1")


@dataclass
class StateInfo:
    events: list[InputEvent]
    visits: dict[str, int] = field(default_factory=dict)

    def untried(self) -> list[InputEvent]:
        return [e for e in self.events if not self.visits.get(e.event_id)]

    def least_visited(self) -> InputEvent:
        return min(self.events, key=lambda e: self.visits.get(e.event_id, 0))


class ExplorationModel:
    def __init__(self, start_key: str):
        self.start_key = start_key
        self.known_states: dict[str, StateInfo] = {}
        self.transitions: dict[tuple[str, str], str] = {}
        # event (with payload) that produced each recorded transition
        self.transition_events: dict[tuple[str, str], InputEvent] = {}
        self.reach_path: dict[str, list[InputEvent]] = {start_key: []}

    def register(self, key: str, events: Sequence[InputEvent]) -> bool:
        if key in self.known_states:
            return False
        self.known_states[key] = StateInfo(list(events))
        return True

    def mark_visit(self, key: str, event_id: str) -> None:
        info = self.known_states[key]
        info.visits[event_id] = info.visits.get(event_id, 0) + 1

    def untried(self, key: str) -> list[InputEvent]:
        return self.known_states[key].untried()

    def has_untried(self, key: str) -> bool:
        info = self.known_states.get(key)
        return info is not None and any(not info.visits.get(e.event_id) for e in info.events)

    def record_transition(self, from_key: str, event: InputEvent, to_key: str,
                          history: Optional[Sequence[InputEvent]] = None,
                          offer_path: bool = True) -> "ExplorationModel":
        """Store a transition and offer a reach path for ``to_key``.

        ``history`` is the concrete event list since the last restart that ended
        in ``to_key``. It is preferred over extending ``from_key``'s path because
        state keys hide the back stack and text values, so a spliced path need
        not lead to the same state.
        """
        self.transitions[(from_key, event.event_id)] = to_key
        self.transition_events[(from_key, event.event_id)] = event
        if not offer_path:
            return self
        if history is not None:
            length = len(history)
        else:
            base = self.reach_path.get(from_key)
            if base is None:
                return self
            length = len(base) + 1
        current = self.reach_path.get(to_key)
        if current is None or length < len(current):
            self.reach_path[to_key] = list(history) if history is not None else base + [event]
        return self

    def path_to(self, src: str, goal: Callable[[str], bool]) -> Optional[list[tuple[str, InputEvent, str]]]:
        """Shortest known path from ``src`` to the nearest key satisfying ``goal``.

        Returns a list of (from_key, event, to_key) steps, ``[]`` when ``src``
        already satisfies the goal, or None when no known path exists.
        """
        if goal(src):
            return []
        parent: dict[str, tuple[str, InputEvent]] = {src: None}  # type: ignore[dict-item]
        queue = deque([src])
        while queue:
            key = queue.popleft()
            info = self.known_states.get(key)
            if info is None:
                continue
            for ev in info.events:
                nxt = self.transitions.get((key, ev.event_id))
                if nxt is None or nxt in parent:
                    continue
                parent[nxt] = (key, self.transition_events[(key, ev.event_id)])
                if goal(nxt):
                    steps = []
                    node = nxt
                    while parent[node] is not None:
                        prev, pev = parent[node]
                        steps.append((prev, pev, node))
                        node = prev
                    return steps[::-1]
                queue.append(nxt)
        return None


class Navigator:
    """Follows a planned path over known transitions, replanning on deviation."""

    def __init__(self, exploration: ExplorationModel):
        self.exploration = exploration
        self.plan: list[tuple[str, InputEvent, str]] = []
        self.goal_key: Optional[str] = None

    def toward(self, current: str, goal: Callable[[str], bool], goal_key: Optional[str] = None) -> Optional[InputEvent]:
        if not (self.plan and self.plan[0][0] == current and self.goal_key == goal_key
                and goal(self.plan[-1][2])):
            self.plan = self.exploration.path_to(current, goal) or []
            self.goal_key = goal_key
        if not self.plan:
            return None
        return self.plan.pop(0)[1]

    def reset(self) -> None:
        self.plan = []
        self.goal_key = None


def _current(event: InputEvent, enabled: Sequence[InputEvent]) -> InputEvent:
    for ev in enabled:
        if ev.event_id == event.event_id:
            return ev
    return event


class Strategy:
    """Base class: one instance per run loop."""

    kind: StrategyKind

    def __init__(self, exploration: ExplorationModel):
        self.exploration = exploration

    def next_event(self, state: GuiState, key: str, enabled: Sequence[InputEvent]) -> InputEvent:
        raise NotImplementedError

    def observe(self, key_before: str, event: InputEvent, key_after: str, crashed: bool) -> None:
        pass


class RandomStrategy(Strategy):
    kind = StrategyKind.RANDOM

    def __init__(self, exploration: ExplorationModel, rng: random.Random):
        super().__init__(exploration)
        self.rng = rng

    def next_event(self, state, key, enabled):
        return next_event_random(enabled, self.rng)


def next_event_random(enabled: Sequence[InputEvent], rng: random.Random) -> InputEvent:
    return enabled[rng.randrange(len(enabled))]


class DfsStrategy(Strategy):
    """Depth-first exploration: untried events first, in declaration order.

    When the current state is exhausted it walks the known transition graph to
    the nearest state that still has untried events. If no known path leads
    there it presses back while there is something to unwind; once every known
    state is exhausted it falls back to the least-visited event.
    """

    kind = StrategyKind.DFS

    def __init__(self, exploration: ExplorationModel):
        super().__init__(exploration)
        self.nav = Navigator(exploration)

    def next_event(self, state, key, enabled):
        return next_event_dfs(self.exploration, key, enabled, self.nav, can_unwind=can_unwind(state))


def can_unwind(state: GuiState) -> bool:
    return bool(state.back_stack) or len(state.active_layouts) > 1


def next_event_dfs(
    exploration: ExplorationModel,
    key: str,
    enabled: Sequence[InputEvent],
    nav: Optional[Navigator] = None,
    can_unwind: bool = False,
) -> InputEvent:
    info = exploration.known_states[key]
    untried = info.untried()
    if untried:
        event = _current(untried[0], enabled)
    else:
        nav = nav or Navigator(exploration)
        step = nav.toward(key, exploration.has_untried)
        if step is not None:
            event = step
        elif can_unwind and any(exploration.has_untried(k) for k in exploration.known_states):
            # stranded: the back stack is invisible to state keys, so unwind it
            event = BACK
        else:
            event = _current(info.least_visited(), enabled)
    exploration.mark_visit(key, event.event_id)
    return event


class StartBiasedStrategy(Strategy):
    """Keeps gravitating to the start screen.

    On the start screen an untried event is drawn at random; elsewhere, with
    probability ``back_probability`` the strategy presses back, otherwise it
    follows the depth-first rule.
    """

    kind = StrategyKind.START_BIASED

    def __init__(self, exploration: ExplorationModel, rng: random.Random, start_activity: str,
                 back_probability: float = 0.7):
        super().__init__(exploration)
        self.rng = rng
        self.start_activity = start_activity
        self.back_probability = back_probability
        self.dfs = DfsStrategy(exploration)

    def next_event(self, state, key, enabled):
        return next_event_start_biased(self, state, key, enabled)


def next_event_start_biased(
    strat: StartBiasedStrategy, state: GuiState, key: str, enabled: Sequence[InputEvent]
) -> InputEvent:
    exploration = strat.exploration
    on_start_screen = state.activity_id == strat.start_activity and not state.back_stack
    if on_start_screen:
        untried = exploration.untried(key)
        if untried:
            event = _current(untried[strat.rng.randrange(len(untried))], enabled)
            exploration.mark_visit(key, event.event_id)
            return event
    elif strat.rng.random() < strat.back_probability:
        exploration.mark_visit(key, BACK.event_id)
        return BACK
    return strat.dfs.next_event(state, key, enabled)
