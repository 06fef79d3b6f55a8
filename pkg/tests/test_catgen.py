import json
from collections import Counter

import pytest

from changehound.catgen import (
    EventDescriptor,
    GuidanceMismatch,
    NoTargets,
    SequenceStatus,
    enumerate_length3,
    is_target_state,
    load_guidance,
    run_with_guidance,
)
from changehound.impact import TargetSet
from changehound.model import ActionKind, app_model_from_dict
from changehound.runner import run_strategy
from changehound.simulator import BACK, InputEvent, Simulator, find_enabled
from changehound.strategies import StrategyConfig, StrategyKind

from conftest import targets_for
from invariants import sequence_ledger_problems
from oracles import brute_force_sequences


def clicks(names):
    return [InputEvent.make(n, ActionKind.CLICK) for n in names]


def ids(seq):
    return tuple(d.event_id for d in seq.events)


# -- enumeration --------------------------------------------------------------------

def test_enumeration_matches_oracle_for_all_small_sizes():
    for n_enabled in range(1, 9):
        enabled = clicks([f"e{i}" for i in range(n_enabled)])
        for n_targets in range(1, n_enabled + 1):
            targets = enabled[:n_targets]
            seqs = enumerate_length3(enabled, targets, max_sequences=10**6)
            n = n_enabled - n_targets
            per_target = 3 * n * (n - 1) if n >= 2 else (3 if n == 1 else 1)
            assert len(seqs) == n_targets * per_target
            assert {ids(s) for s in seqs} == brute_force_sequences(enabled, targets)
            assert len({s.sequence_id for s in seqs}) == len(seqs)
            target_ids = {t.event_id for t in targets}
            for s in seqs:
                assert s.target_positions
                assert all(s.events[p].event_id in target_ids for p in s.target_positions)


def test_abcd_target_c():
    enabled = clicks("ABCD")
    seqs = enumerate_length3(enabled, [enabled[2]])
    assert len(seqs) == 18
    assert all("C.click" in ids(s) for s in seqs)
    assert Counter(next(iter(s.target_positions)) for s in seqs) == {0: 6, 1: 6, 2: 6}


def test_single_enabled_target():
    (t,) = clicks("t")
    seqs = enumerate_length3([t], [t])
    assert [ids(s) for s in seqs] == [("t.click",) * 3]
    assert seqs[0].target_positions == {0, 1, 2}


def test_enumeration_preconditions():
    enabled = clicks("ab")
    with pytest.raises(NoTargets):
        enumerate_length3(enabled, [])
    with pytest.raises(NoTargets):
        enumerate_length3(enabled, clicks("z"))


def test_sampling_is_seeded_and_ordered():
    enabled = clicks("abcdefghij")
    full = enumerate_length3(enabled, enabled[:2], max_sequences=10**6)
    a = enumerate_length3(enabled, enabled[:2], max_sequences=50, seed=3)
    b = enumerate_length3(enabled, enabled[:2], max_sequences=50, seed=3)
    assert len(a) == 50 and [s.sequence_id for s in a] == [s.sequence_id for s in b]
    order = {s.sequence_id: i for i, s in enumerate(full)}
    assert [order[s.sequence_id] for s in a] == sorted(order[s.sequence_id] for s in a)


def test_beecount_add_remove_save(by_name):
    entry = by_name["beecount_like"]
    sim = Simulator(entry.model, 1)
    state = sim.step(sim.start(), find_enabled(sim.enabled_events(sim.start()), "new_project", ActionKind.CLICK)).new_state
    enabled = sim.enabled_events(state)
    targets = [e for e in enabled if e.element_id in targets_for(entry).target_elements]
    seqs = enumerate_length3(enabled, targets)
    assert ("add_count.click", "remove_count.click", "save_project.click") in {ids(s) for s in seqs}


# -- target states ------------------------------------------------------------------

def test_is_target_state(amaze):
    sim = Simulator(amaze.model, 1)
    state = sim.start()
    for element, action in [("file_row", ActionKind.LONG_CLICK), ("ctx_overflow", ActionKind.CLICK)]:
        state = sim.step(state, find_enabled(sim.enabled_events(state), element, action)).new_state
    assert "compress" in state.visible_elements
    assert is_target_state(state, TargetSet(target_elements={"compress"}))
    assert not is_target_state(state, TargetSet())
    assert not is_target_state(sim.start(), TargetSet(target_elements={"compress"}))


def test_pending_activity_is_target_state(chain_model):
    sim = Simulator(chain_model)
    state = sim.step(sim.start(), find_enabled(sim.enabled_events(sim.start()), "screena_next",
                                               ActionKind.CLICK)).new_state
    assert is_target_state(state, TargetSet(pending_dynamic_activities={"ScreenB"}))


# -- cat strategy ---------------------------------------------------------------------

def cat_run(entry, seed=1, budget=1000, **kw):
    return run_strategy(entry.model, targets_for(entry), StrategyConfig(StrategyKind.CAT, budget, seed, **kw))


def test_takeover_on_first_entry(amaze):
    result = cat_run(amaze)
    keys = result.target_keys
    entry = next(r.index for r in result.trace if r.state_after in keys)
    owned = {i for s in result.sequences for i in s.event_indices}
    assert entry + 1 in owned
    first_hit = next(r.index for r in result.trace if r.event.element_id == "compress")
    assert first_hit - entry <= 2


def _pause_model():
    el = lambda i: {"id": i, "kind": "button", "actions": ["click"], "listeners": {}, "dynamic_target_of": None,
                    "persistent_fields": []}
    doc = {
        "name": "pause", "flags": [], "values": [], "faults": [],
        "activities": [
            {"id": "Main", "initial_layout": "main", "inflatable_layouts": [], "is_start": True},
            {"id": "Other", "initial_layout": "other", "inflatable_layouts": [], "is_start": False},
        ],
        "layouts": [
            {"id": "main", "elements": ["x", "go", "t"], "embedded_layouts": []},
            {"id": "other", "elements": ["o"], "embedded_layouts": []},
        ],
        "elements": [el("x"), el("go"), el("t"), el("o")],
        "call_graph": {"nodes": [], "edges": []},
        "transitions": [{"id": "g", "trigger": {"element": "go", "action": "click"}, "guard": None,
                         "effects": [{"type": "goto_activity", "activity": "Other"}]}],
    }
    return app_model_from_dict(doc)


def test_sequence_paused_when_knocked_out():
    model = _pause_model()
    targets = TargetSet(target_elements={"t"}, target_activities={"Main"})
    result = run_strategy(model, targets, StrategyConfig(StrategyKind.CAT, 8, 1))
    by_events = {ids(s): s for s in result.sequences}
    knocked = by_events[("x.click", "go.click", "t.click")]
    events = [r.event.event_id for r in result.trace]
    # the middle-slot sequence runs first and ends outside Main; back re-enters
    assert events[:4] == ["x.click", "t.click", "go.click", "back"]
    # the next one is knocked out after two steps, re-enters, then runs only its suffix
    assert events[4:8] == ["x.click", "go.click", "back", "t.click"]
    assert knocked.status is SequenceStatus.COMPLETE
    assert knocked.event_indices == [5, 6, 8]
    assert sequence_ledger_problems(result) == []


def test_paused_state_at_budget_end():
    model = _pause_model()
    targets = TargetSet(target_elements={"t"}, target_activities={"Main"})
    result = run_strategy(model, targets, StrategyConfig(StrategyKind.CAT, 6, 1))
    knocked = next(s for s in result.sequences if ids(s) == ("x.click", "go.click", "t.click"))
    assert knocked.status is SequenceStatus.PAUSED and knocked.executed_prefix == 2
    assert [d.event_id for d in knocked.remaining] == ["t.click"]


def test_crash_in_sequence_pauses_and_target_is_revisited(by_name):
    entry = by_name["worldweather_like"]
    result = cat_run(entry)
    crash = next(r.index for r in result.trace if r.crashed)
    assert result.trace[crash - 1].event.element_id == "change_api_key"
    later = [r.index for r in result.trace if r.index > crash and r.event.element_id == "change_api_key"]
    assert later
    assert sequence_ledger_problems(result) == []


@pytest.mark.parametrize("seed", [1, 2])
def test_ledger_consistent_on_corpus(entries, seed):
    for e in entries:
        assert sequence_ledger_problems(cat_run(e, seed, 400)) == [], e.name


def test_cat_returns_to_dfs_after_all_sequences(chain_model):
    targets = TargetSet(target_elements={"screena_label"}, target_activities={"ScreenA"})
    result = run_strategy(chain_model, targets, StrategyConfig(StrategyKind.CAT, 200, 1))
    assert all(s.status is SequenceStatus.COMPLETE for s in result.sequences)
    assert any(act == "ScreenC" for act, _ in result.states.values())


# -- guidance -------------------------------------------------------------------------

def test_empty_guidance_equals_plain_cat(amaze):
    plain = cat_run(amaze, 4, 300).trace.to_ndjson()
    guided = run_with_guidance(amaze.model, targets_for(amaze), [], StrategyConfig(StrategyKind.CAT, 300, 4))
    assert guided.trace.to_ndjson() == plain


def test_guidance_mismatch_at_first_step(amaze):
    bad = [EventDescriptor("no_such_button", ActionKind.CLICK)]
    with pytest.raises(GuidanceMismatch) as err:
        run_with_guidance(amaze.model, targets_for(amaze), bad, StrategyConfig(StrategyKind.CAT, 100, 1))
    assert err.value.index == 1
    assert "no_such_button" in str(err.value) and "MainFragment" in str(err.value)


def test_guidance_counts_against_budget(by_name):
    entry = by_name["simplefm_like"]
    guidance = entry.guidance()
    result = run_with_guidance(entry.model, targets_for(entry), guidance, StrategyConfig(StrategyKind.CAT, 3, 1))
    assert [r.event.event_id for r in result.trace] == [d.event_id for d in guidance[:3]]


def test_simplefm_guidance_reaches_target(by_name):
    entry = by_name["simplefm_like"]
    targets = targets_for(entry)
    for seed in (1, 2, 3):
        result = run_with_guidance(entry.model, targets, entry.guidance(), StrategyConfig(StrategyKind.CAT, 1000, seed))
        assert any(r.event.element_id in targets.target_elements for r in result.trace)


def test_guidance_payload_is_used_verbatim(by_name):
    entry = by_name["simplefm_like"]
    result = run_with_guidance(entry.model, targets_for(entry), entry.guidance(), StrategyConfig(StrategyKind.CAT, 10, 1))
    payloads = [r.event.payload for r in result.trace if r.event.action is ActionKind.EDIT_TEXT]
    assert payloads[:2] == ["s3cret-pass", "s3cret-pass"]


def test_load_guidance_formats(tmp_path):
    events = [{"element_id": "a", "action": "click"}, {"element_id": None, "action": "back"}]
    (tmp_path / "list.json").write_text(json.dumps(events))
    (tmp_path / "obj.json").write_text(json.dumps({"events": events}))
    for name in ("list.json", "obj.json"):
        got = load_guidance(tmp_path / name)
        assert [d.event_id for d in got] == ["a.click", BACK.event_id]
