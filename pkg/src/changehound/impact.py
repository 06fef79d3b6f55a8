"""Combined GUI-function map and change impact analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .model import AppModel, GotoActivity, flatten_layout


class UnknownChangeEntry(KeyError):
    pass


class EmptyChangeSet(ValueError):
    pass


class NotPending(ValueError):
    pass


@dataclass
class CombinedMap:
    """Undirected graph over function signatures and element ids.

    ``residence`` is filled by :func:`bind_elements_to_activities`; until then
    the map only holds the expanded function graph.
    """

    functions: set[str] = field(default_factory=set)
    elements: set[str] = field(default_factory=set)
    adjacency: dict[str, set[str]] = field(default_factory=dict)
    residence: dict[str, frozenset[str]] = field(default_factory=dict)
    unresolved_dynamic: set[str] = field(default_factory=set)
    complete: bool = False

    @property
    def nodes(self) -> set[str]:
        return self.functions | self.elements

    @property
    def edges(self) -> set[frozenset[str]]:
        return {frozenset((a, b)) for a, nbrs in self.adjacency.items() for b in nbrs}

    def add_edge(self, a: str, b: str) -> None:
        self.adjacency.setdefault(a, set()).add(b)
        self.adjacency.setdefault(b, set()).add(a)

    def to_dot(self) -> str:
        lines = ["graph combined {"]
        for n in sorted(self.functions):
            lines.append(f'  "{n}" [shape=box];')
        for n in sorted(self.elements):
            where = ",".join(sorted(self.residence.get(n, ()))) or "?"
            lines.append(f'  "{n}" [shape=ellipse, label="{n}\\n@{where}"];')
        # a self-loop collapses to a one-element frozenset
        pairs = sorted((min(e), max(e)) for e in self.edges)
        for a, b in pairs:
            lines.append(f'  "{a}" -- "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ChangeSet:
    changed_functions: tuple[str, ...] = ()
    new_elements: tuple[str, ...] = ()
    modified_activities: tuple[str, ...] = ()

    def __post_init__(self):
        if not (self.changed_functions or self.new_elements or self.modified_activities):
            raise EmptyChangeSet("change set lists no changes")

    @classmethod
    def from_dict(cls, data: dict) -> "ChangeSet":
        return cls(
            changed_functions=tuple(data.get("changed_functions", [])),
            new_elements=tuple(data.get("new_elements", [])),
            modified_activities=tuple(data.get("modified_activities", [])),
        )

    def to_dict(self) -> dict:
        return {
            "changed_functions": list(self.changed_functions),
            "new_elements": list(self.new_elements),
            "modified_activities": list(self.modified_activities),
        }


def load_change_set(path: Union[str, Path]) -> ChangeSet:
    return ChangeSet.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TargetSet:
    target_elements: set[str] = field(default_factory=set)
    target_activities: set[str] = field(default_factory=set)
    affected_functions: set[str] = field(default_factory=set)
    pending_dynamic_activities: set[str] = field(default_factory=set)
    changed_functions: set[str] = field(default_factory=set)
    # activity -> element that first led into it at runtime
    resolved_dynamic: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "TargetSet":
        return replace(
            self,
            target_elements=set(self.target_elements),
            target_activities=set(self.target_activities),
            affected_functions=set(self.affected_functions),
            pending_dynamic_activities=set(self.pending_dynamic_activities),
            changed_functions=set(self.changed_functions),
            resolved_dynamic=dict(self.resolved_dynamic),
        )

    def to_dict(self) -> dict:
        return {
            "target_elements": sorted(self.target_elements),
            "target_activities": sorted(self.target_activities),
            "affected_functions": sorted(self.affected_functions),
            "pending_dynamic_activities": sorted(self.pending_dynamic_activities),
            "changed_functions": sorted(self.changed_functions),
            "resolved_dynamic": dict(sorted(self.resolved_dynamic.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TargetSet":
        return cls(
            target_elements=set(data.get("target_elements", [])),
            target_activities=set(data.get("target_activities", [])),
            affected_functions=set(data.get("affected_functions", [])),
            pending_dynamic_activities=set(data.get("pending_dynamic_activities", [])),
            changed_functions=set(data.get("changed_functions", [])),
            resolved_dynamic=dict(data.get("resolved_dynamic", {})),
        )


def build_function_graph(model: AppModel) -> CombinedMap:
    """Undirected call graph expanded with element nodes tied to their listeners."""
    cmap = CombinedMap(functions=set(model.call_graph.nodes))
    for fn in model.call_graph.nodes:
        cmap.adjacency.setdefault(fn, set())
    for caller, callee in model.call_graph.edges:
        cmap.add_edge(caller, callee)
    for el in model.elements:
        if not el.listeners:
            continue
        cmap.elements.add(el.element_id)
        cmap.adjacency.setdefault(el.element_id, set())
        for sig in el.listeners.values():
            cmap.add_edge(el.element_id, sig)
    return cmap


def bind_elements_to_activities(model: AppModel, cmap: CombinedMap) -> CombinedMap:
    """Attach activity residence to every statically placed element.

    Elements declared dynamic stay unresolved until the run loop observes
    which activity they lead into.
    """
    residence: dict[str, set[str]] = {}
    for act in model.activities:
        layouts = [act.initial_layout, *sorted(act.inflatable_layouts)]
        for lid in layouts:
            for eid in flatten_layout(model, lid):
                residence.setdefault(eid, set()).add(act.activity_id)
    unresolved = {e.element_id for e in model.elements if e.is_dynamic}
    return replace(
        cmap,
        functions=set(cmap.functions),
        elements=set(cmap.elements),
        adjacency={k: set(v) for k, v in cmap.adjacency.items()},
        residence={eid: frozenset(acts) for eid, acts in residence.items() if eid not in unresolved},
        unresolved_dynamic=unresolved,
        complete=True,
    )


def build_combined_map(model: AppModel) -> CombinedMap:
    return bind_elements_to_activities(model, build_function_graph(model))


def static_entry_elements(model: AppModel, activity_id: str) -> list[str]:
    """Non-dynamic elements with a rule that statically navigates to ``activity_id``."""
    out: list[str] = []
    for rule in model.transitions:
        el = model.element_by_id.get(rule.element)
        if el is None or el.is_dynamic or rule.element in out:
            continue
        if any(isinstance(eff, GotoActivity) and eff.activity == activity_id for eff in rule.effects):
            out.append(rule.element)
    return out


def _reach(cmap: CombinedMap, roots: Iterable[str]) -> set[str]:
    seen: set[str] = set()
    stack = list(roots)
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(n for n in cmap.adjacency.get(node, ()) if n not in seen)
    return seen


def compute_change_impact(model: AppModel, cmap: CombinedMap, changes: ChangeSet) -> TargetSet:
    if not cmap.complete:
        raise ValueError("combined map has no activity residence; call bind_elements_to_activities first")
    for sig in changes.changed_functions:
        if sig not in cmap.functions:
            raise UnknownChangeEntry(f"changed function not in call graph: {sig}")
    for eid in changes.new_elements:
        if eid not in model.element_by_id:
            raise UnknownChangeEntry(f"new element not in model: {eid}")
    for aid in changes.modified_activities:
        if aid not in model.activity_by_id:
            raise UnknownChangeEntry(f"modified activity not in model: {aid}")

    visited = _reach(cmap, changes.changed_functions)
    targets = TargetSet(
        target_elements={n for n in visited if n in cmap.elements},
        affected_functions={n for n in visited if n in cmap.functions} | set(changes.changed_functions),
        changed_functions=set(changes.changed_functions),
    )
    targets.target_elements.update(changes.new_elements)
    for aid in changes.modified_activities:
        entries = static_entry_elements(model, aid)
        if entries:
            targets.target_elements.update(entries)
        else:
            targets.pending_dynamic_activities.add(aid)

    for eid in targets.target_elements:
        targets.target_activities.update(cmap.residence.get(eid, ()))
    targets.target_activities.update(targets.pending_dynamic_activities)
    return targets


def resolve_dynamic_target(
    targets: TargetSet,
    entered_activity: str,
    causing_element: str,
    source_activity: Optional[str] = None,
) -> TargetSet:
    """Promote the element that first led into a pending activity.

    Returns a new TargetSet; ``source_activity`` (where the element was
    interacted with) becomes a target activity when given.
    """
    if entered_activity not in targets.pending_dynamic_activities:
        raise NotPending(entered_activity)
    out = targets.copy()
    out.pending_dynamic_activities.discard(entered_activity)
    out.target_elements.add(causing_element)
    out.resolved_dynamic[entered_activity] = causing_element
    if source_activity is not None:
        out.target_activities.add(source_activity)
    return out


def analyze(model: AppModel, changes: ChangeSet) -> tuple[CombinedMap, TargetSet]:
    cmap = build_combined_map(model)
    return cmap, compute_change_impact(model, cmap, changes)
