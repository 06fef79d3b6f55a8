"""Random app-model documents for oracle and property tests."""

from __future__ import annotations

import random

ACTIONS = ("click", "long_click")


def random_app(
    rng: random.Random,
    n_functions: int = 40,
    n_elements: int = 30,
    n_activities: int = 6,
    edge_factor: float = 1.2,
    dynamic_fraction: float = 0.1,
) -> dict:
    """A valid app document with a random call graph, listeners and navigation."""
    funcs = [f"gen.pkg{i % 3}.C{i // 7}.m{i}()" for i in range(n_functions)]
    edges = set()
    for _ in range(int(edge_factor * n_functions)):
        a, b = rng.randrange(n_functions), rng.randrange(n_functions)
        edges.add((funcs[a], funcs[b]))

    activities = [f"Act{i}" for i in range(n_activities)]
    elements = []
    for i in range(n_elements):
        actions = ["click"] if rng.random() < 0.7 else ["click", "long_click"]
        listeners = {}
        for action in actions:
            if funcs and rng.random() < 0.75:
                listeners[action] = rng.choice(funcs)
        dynamic = rng.choice(activities) if rng.random() < dynamic_fraction else None
        elements.append({
            "id": f"e{i}", "kind": "button", "actions": actions, "listeners": listeners,
            "dynamic_target_of": dynamic, "persistent_fields": [],
        })

    # one initial and one inflatable layout per activity; layouts only embed
    # higher-numbered ones, so the embedding graph is acyclic
    n_layouts = 2 * n_activities
    layout_elems: list[list[str]] = [[] for _ in range(n_layouts)]
    for el in elements:
        for _ in range(1 + (rng.random() < 0.2)):
            layout_elems[rng.randrange(n_layouts)].append(el["id"])
    layouts = []
    for i in range(n_layouts):
        embeds = sorted({rng.randrange(i + 1, n_layouts) for _ in range(rng.randrange(3)) if i + 1 < n_layouts})
        seen, elems = set(), []
        for e in layout_elems[i]:
            if e not in seen:
                seen.add(e)
                elems.append(e)
        layouts.append({"id": f"L{i}", "elements": elems, "embedded_layouts": [f"L{j}" for j in embeds]})

    acts = [
        {"id": a, "initial_layout": f"L{2 * i}", "inflatable_layouts": [f"L{2 * i + 1}"], "is_start": i == 0}
        for i, a in enumerate(activities)
    ]
    rules = []
    for el in elements:
        roll = rng.random()
        if el["dynamic_target_of"]:
            effects = [{"type": "goto_activity", "activity": el["dynamic_target_of"]}]
        elif roll < 0.35:
            effects = [{"type": "goto_activity", "activity": rng.choice(activities)}]
        elif roll < 0.5:
            effects = [{"type": "pop_back"}]
        elif roll < 0.65:
            effects = [{"type": "inflate", "layout": f"L{rng.randrange(n_layouts)}"}]
        else:
            continue
        rules.append({"id": f"r_{el['id']}", "trigger": {"element": el["id"], "action": "click"},
                      "guard": None, "effects": effects})

    return {
        "name": f"random_{rng.randrange(10**6)}",
        "activities": acts,
        "layouts": layouts,
        "elements": elements,
        "call_graph": {"nodes": funcs, "edges": sorted(map(list, edges))},
        "transitions": rules,
        "faults": [],
        "flags": [],
        "values": [],
    }


def random_changes(rng: random.Random, doc: dict) -> dict:
    funcs = doc["call_graph"]["nodes"]
    changes = {
        "changed_functions": rng.sample(funcs, k=min(len(funcs), rng.randrange(1, 4))),
        "new_elements": [],
        "modified_activities": [],
    }
    if rng.random() < 0.3:
        changes["new_elements"] = [rng.choice(doc["elements"])["id"]]
    if rng.random() < 0.3:
        changes["modified_activities"] = [rng.choice(doc["activities"])["id"]]
    return changes


def navigation_app(rng: random.Random, n_screens: int = 20) -> dict:
    """Screens linked by random goto buttons plus a flag toggle; every screen is a distinct state."""
    screens = [f"S{i}" for i in range(n_screens)]
    elements, layouts, rules = [], [], []
    for i, s in enumerate(screens):
        items = []
        for j in range(rng.randrange(1, 4)):
            eid = f"{s.lower()}_b{j}"
            items.append(eid)
            elements.append({"id": eid, "kind": "button", "actions": ["click"], "listeners": {},
                             "dynamic_target_of": None, "persistent_fields": []})
            dest = screens[min(i + 1, n_screens - 1)] if j == 0 else rng.choice(screens)
            rules.append({"id": f"r_{eid}", "trigger": {"element": eid, "action": "click"},
                          "guard": None, "effects": [{"type": "goto_activity", "activity": dest}]})
        layouts.append({"id": f"{s}_layout", "elements": items, "embedded_layouts": []})
    toggle = "s0_toggle"
    elements.append({"id": toggle, "kind": "button", "actions": ["click"], "listeners": {},
                     "dynamic_target_of": None, "persistent_fields": []})
    layouts[0]["elements"].append(toggle)
    rules.append({"id": "r_on", "trigger": {"element": toggle, "action": "click"},
                  "guard": {"type": "flag_is", "flag": "dark", "value": False},
                  "effects": [{"type": "set_flag", "flag": "dark", "value": True}]})
    rules.append({"id": "r_off", "trigger": {"element": toggle, "action": "click"},
                  "guard": None, "effects": [{"type": "set_flag", "flag": "dark", "value": False}]})
    return {
        "name": "navigation",
        "activities": [{"id": s, "initial_layout": f"{s}_layout", "inflatable_layouts": [], "is_start": i == 0}
                       for i, s in enumerate(screens)],
        "layouts": layouts,
        "elements": elements,
        "call_graph": {"nodes": [], "edges": []},
        "transitions": rules,
        "faults": [],
        "flags": ["dark"],
        "values": [],
    }
