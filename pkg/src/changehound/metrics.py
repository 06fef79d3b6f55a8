"""Per-run scoring and cross-seed aggregation."""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .impact import TargetSet
from .model import AppModel
from .simulator import ExecutionTrace


class TargetModelMismatch(ValueError):
    pass


class InsufficientEvidence(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class CrashPattern(str, Enum):
    FIRST_INTERACTION_ONLY = "first_interaction_only"
    PERSISTENT = "persistent"
    NOT_CRASHING = "not_crashing"
    INTERMITTENT = "intermittent"


@dataclass
class FaultFinding:
    fault_id: str
    index: int
    element_id: Optional[str]
    classification: str


@dataclass
class RunReport:
    app: str
    strategy: str
    seed: int
    first_target_interaction_index: Optional[int]
    first_target_state_index: Optional[int]
    target_interaction_count: int
    affected_function_coverage: float
    revealed_faults: list[FaultFinding] = field(default_factory=list)
    total_events: int = 0
    wall_time_ms: float = 0.0

    @property
    def failed(self) -> bool:
        return self.first_target_interaction_index is None

    def to_dict(self) -> dict:
        return asdict(self)


def crash_history(trace: ExecutionTrace, element_id: str) -> list[bool]:
    """Whether each interaction with ``element_id`` crashed, in trace order."""
    return [r.crashed for r in trace if r.event.element_id == element_id]


def classify_crash_pattern(history: Sequence[bool]) -> CrashPattern:
    if len(history) < 2:
        raise InsufficientEvidence(f"{len(history)} interaction(s); need at least 2")
    if all(history):
        return CrashPattern.PERSISTENT
    if history[0] and not any(history[1:]):
        return CrashPattern.FIRST_INTERACTION_ONLY
    if not any(history):
        return CrashPattern.NOT_CRASHING
    return CrashPattern.INTERMITTENT


def _check_ids(trace: ExecutionTrace, targets: TargetSet, model: AppModel) -> None:
    for r in trace:
        eid = r.event.element_id
        if eid is not None and eid not in model.element_by_id:
            raise TargetModelMismatch(f"trace index {r.index}: unknown element {eid}")
        for fn in r.invoked_functions:
            if fn not in model.call_graph.nodes:
                raise TargetModelMismatch(f"trace index {r.index}: unknown function {fn}")
        for fid in r.revealed_faults:
            if fid not in model.fault_by_id:
                raise TargetModelMismatch(f"trace index {r.index}: unknown fault {fid}")
    for eid in targets.target_elements:
        if eid not in model.element_by_id:
            raise TargetModelMismatch(f"unknown target element {eid}")


def score_trace(
    trace: ExecutionTrace,
    targets: TargetSet,
    *,
    app: str = "",
    strategy: str = "",
    seed: int = 0,
    target_keys: Optional[Iterable[str]] = None,
    start_key: Optional[str] = None,
    model: Optional[AppModel] = None,
    wall_time_ms: float = 0.0,
) -> RunReport:
    """Compute the evaluation metrics of one run.

    An interaction is any event on a target element. ``target_keys`` (state
    keys that show a target element) enables ``first_target_state_index``; it
    is 0 when the start state itself is a target state. Passing ``model``
    checks that the trace only references ids the model declares.
    """
    if model is not None:
        _check_ids(trace, targets, model)

    first_hit: Optional[int] = None
    hits = 0
    invoked: set[str] = set()
    first_reveal: dict[str, tuple[int, Optional[str]]] = {}
    for r in trace:
        if r.event.element_id is not None and r.event.element_id in targets.target_elements:
            hits += 1
            if first_hit is None:
                first_hit = r.index
        invoked.update(r.invoked_functions)
        for fid in r.revealed_faults:
            first_reveal.setdefault(fid, (r.index, r.event.element_id))

    affected = targets.affected_functions
    coverage = 1.0 if not affected else len(invoked & affected) / len(affected)

    first_state: Optional[int] = None
    if target_keys is not None:
        tk = set(target_keys)
        if start_key is not None and start_key in tk:
            first_state = 0
        else:
            first_state = next((r.index for r in trace if r.state_after in tk), None)

    findings = []
    for fid, (index, eid) in sorted(first_reveal.items(), key=lambda kv: kv[1][0]):
        kind = model.fault_by_id[fid].kind.value if model is not None else None
        if kind == "state_loss_fault":
            label = "state_loss"
        elif eid is None:
            label = "insufficient_evidence"
        else:
            try:
                label = classify_crash_pattern(crash_history(trace, eid)).value
            except InsufficientEvidence:
                label = "insufficient_evidence"
        findings.append(FaultFinding(fid, index, eid, label))

    return RunReport(
        app=app,
        strategy=strategy,
        seed=seed,
        first_target_interaction_index=first_hit,
        first_target_state_index=first_state,
        target_interaction_count=hits,
        affected_function_coverage=coverage,
        revealed_faults=findings,
        total_events=len(trace),
        wall_time_ms=wall_time_ms,
    )


NUMERIC_FIELDS = (
    "first_target_interaction_index",
    "first_target_state_index",
    "target_interaction_count",
    "affected_function_coverage",
    "total_events",
    "wall_time_ms",
)


@dataclass
class AggregateRow:
    app: str
    strategy: str
    seeds: list[int]
    mean: dict[str, Optional[float]]
    median: dict[str, Optional[float]]
    failures: int
    faults_revealed: dict[str, int]

    @property
    def seed_count(self) -> int:
        return len(self.seeds)


@dataclass
class AggregateReport:
    rows: list[AggregateRow]

    def row(self, app: str, strategy: str) -> AggregateRow:
        for r in self.rows:
            if r.app == app and r.strategy == strategy:
                return r
        raise KeyError((app, strategy))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["app", "strategy", "seed-count", "mean_first_interaction", "failures",
                         "mean_interactions", "mean_coverage", "faults_revealed"])
        for r in self.rows:
            mfi = r.mean["first_target_interaction_index"]
            writer.writerow([
                r.app,
                r.strategy,
                r.seed_count,
                "" if mfi is None else f"{mfi:.2f}",
                r.failures,
                f"{r.mean['target_interaction_count']:.2f}",
                f"{r.mean['affected_function_coverage']:.4f}",
                ";".join(f"{k}:{v}" for k, v in sorted(r.faults_revealed.items())),
            ])
        return buf.getvalue()


def aggregate(reports: Sequence[RunReport]) -> AggregateReport:
    """Mean/median of every numeric metric per (app, strategy).

    Failed runs (no target interaction) are left out of the index means and
    counted in ``failures`` instead.
    """
    if not reports:
        raise EmptyInput("no reports to aggregate")
    groups: dict[tuple[str, str], list[RunReport]] = {}
    for rep in reports:
        groups.setdefault((rep.app, rep.strategy), []).append(rep)

    rows = []
    for (app, strategy), reps in sorted(groups.items()):
        reps = sorted(reps, key=lambda r: r.seed)
        mean: dict[str, Optional[float]] = {}
        median: dict[str, Optional[float]] = {}
        for name in NUMERIC_FIELDS:
            vals = [getattr(r, name) for r in reps if getattr(r, name) is not None]
            mean[name] = statistics.fmean(vals) if vals else None
            median[name] = statistics.median(vals) if vals else None
        faults: dict[str, int] = {}
        for r in reps:
            for f in r.revealed_faults:
                faults[f.fault_id] = faults.get(f.fault_id, 0) + 1
        rows.append(AggregateRow(
            app=app,
            strategy=strategy,
            seeds=[r.seed for r in reps],
            mean=mean,
            median=median,
            failures=sum(1 for r in reps if r.failed),
            faults_revealed=faults,
        ))
    return AggregateReport(rows)


def ranking_table(agg: AggregateReport) -> str:
    """Plain-text table ordering strategies per app by mean events to first interaction."""
    lines = [f"{'app':<22} {'strategy':<13} {'first-hit':>10} {'fails':>6} {'hits':>9} {'coverage':>9}"]
    by_app: dict[str, list[AggregateRow]] = {}
    for r in agg.rows:
        by_app.setdefault(r.app, []).append(r)
    for app, rows in by_app.items():
        rows.sort(key=lambda r: (r.mean["first_target_interaction_index"] is None,
                                 r.mean["first_target_interaction_index"] or 0.0))
        for r in rows:
            mfi = r.mean["first_target_interaction_index"]
            lines.append(
                f"{app:<22} {r.strategy:<13} {'Failure' if mfi is None else f'{mfi:.1f}':>10} "
                f"{r.failures:>6} {r.mean['target_interaction_count']:>9.1f} "
                f"{r.mean['affected_function_coverage']:>9.2f}"
            )
    return "\n".join(lines) + "\n"
