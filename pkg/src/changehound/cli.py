"""Command-line interface: validate, analyze, run, compare."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import corpus as bundled
from .catgen import EventDescriptor, GuidanceMismatch, load_guidance
from .impact import ChangeSet, EmptyChangeSet, UnknownChangeEntry, analyze, load_change_set
from .metrics import RunReport, aggregate, ranking_table, score_trace
from .model import AppModel, ModelError, ParseError, ValidationError, app_model_from_dict, load_app_model, validate_app_model
from .runner import run_strategy, write_run
from .strategies import StrategyConfig, StrategyKind

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_IO = 2


class UsageError(Exception):
    """Bad arguments or unreadable inputs; maps to exit status 2."""


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:12]


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"1,4,9"`` or ``"1-10"`` (ranges inclusive)."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(part)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed list: {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    if len(set(seeds)) != len(seeds):
        raise argparse.ArgumentTypeError(f"duplicate seeds in {text!r}")
    return seeds


def parse_strategies(text: str) -> list[StrategyKind]:
    try:
        return [StrategyKind.parse(s.strip()) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


@dataclass
class RunConfig:
    model_path: Path
    changes_path: Path
    strategies: list[StrategyKind]
    budget: int
    seeds: list[int]
    guidance_path: Optional[Path]
    out: Path
    max_sequences: int


@dataclass
class AppInputs:
    name: str
    model_path: Path
    changes_path: Optional[Path]


def resolve_inputs(app: str, changes: Optional[str]) -> AppInputs:
    path = Path(app)
    if path.suffix == ".json" or path.exists():
        return AppInputs(path.name.removesuffix(".app.json"), path, Path(changes) if changes else None)
    try:
        entry = bundled.entry(app)
    except (KeyError, FileNotFoundError) as exc:
        raise UsageError(f"{app}: not a file and not a corpus app ({exc})") from None
    return AppInputs(entry.name, entry.model_path, Path(changes) if changes else entry.changes_path)


def load_inputs(inputs: AppInputs) -> tuple[AppModel, ChangeSet]:
    if inputs.changes_path is None:
        raise UsageError(f"{inputs.name}: --changes is required for apps outside the corpus")
    try:
        model = load_app_model(inputs.model_path)
        changes = load_change_set(inputs.changes_path)
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {exc.filename}") from None
    except (ParseError, json.JSONDecodeError, EmptyChangeSet) as exc:
        raise UsageError(str(exc)) from None
    return model, changes


def echo_config(command: str, inputs: AppInputs, **extra) -> None:
    parts = [f"changehound {__version__}", f"cmd={command}", f"app={inputs.name}",
             f"model=sha256:{digest(inputs.model_path)}"]
    if inputs.changes_path is not None and inputs.changes_path.exists():
        parts.append(f"changes=sha256:{digest(inputs.changes_path)}")
    parts += [f"{k}={v}" for k, v in extra.items()]
    print("# " + " ".join(parts))


# -- commands --------------------------------------------------------------------

def cmd_validate(args) -> int:
    status = EXIT_OK
    for ref in args.app:
        inputs = resolve_inputs(ref, None)
        try:
            data = json.loads(inputs.model_path.read_text(encoding="utf-8"))
            model = app_model_from_dict(data)
        except FileNotFoundError:
            raise UsageError(f"file not found: {inputs.model_path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{inputs.model_path}: line {exc.lineno}: {exc.msg}") from None
        except ParseError as exc:
            raise UsageError(f"{inputs.model_path}: {exc}") from None
        violations = validate_app_model(model)
        for v in violations:
            print(f"{inputs.model_path}: {v}")
        if violations:
            status = EXIT_FINDINGS
        else:
            print(f"{inputs.model_path}: ok")
    return status


def cmd_analyze(args) -> int:
    inputs = resolve_inputs(single(args.app), args.changes)
    model, changes = load_inputs(inputs)
    echo_config("analyze", inputs)
    try:
        cmap, targets = analyze(model, changes)
    except UnknownChangeEntry as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_FINDINGS
    print("target elements:   " + (", ".join(sorted(targets.target_elements)) or "-"))
    print("target activities: " + (", ".join(sorted(targets.target_activities)) or "-"))
    if targets.pending_dynamic_activities:
        print("pending (dynamic): " + ", ".join(sorted(targets.pending_dynamic_activities)))
    print(f"affected functions: {len(targets.affected_functions)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "targets.json").write_text(json.dumps(targets.to_dict(), indent=2) + "\n", encoding="utf-8")
        if args.dot:
            (out / "combined.dot").write_text(cmap.to_dot(), encoding="utf-8")
    return EXIT_OK


def single(apps: Sequence[str]) -> str:
    if not apps:
        raise UsageError("--app is required")
    if len(apps) > 1:
        raise UsageError("this command takes exactly one --app")
    return apps[0]


def _guidance(path: Optional[str]) -> list[EventDescriptor]:
    if not path:
        return []
    try:
        return load_guidance(path)
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"{path}: malformed guidance ({exc})") from None


def execute(model: AppModel, changes: ChangeSet, name: str, kind: StrategyKind, seed: int,
            budget: int, max_sequences: int, guidance: list[EventDescriptor]):
    _, targets = analyze(model, changes)
    config = StrategyConfig(kind, budget, seed, max_sequences=max_sequences)
    result = run_strategy(model, targets, config, guidance=guidance)
    report = score_trace(
        result.trace, result.targets, app=name, strategy=kind.value, seed=seed,
        target_keys=result.target_keys, start_key=result.exploration.start_key,
        model=model, wall_time_ms=result.wall_time_ms,
    )
    return result, report


def cmd_run(args) -> int:
    inputs = resolve_inputs(single(args.app), args.changes)
    model, changes = load_inputs(inputs)
    kinds = args.strategy or [StrategyKind.CAT]
    if len(kinds) != 1:
        raise UsageError("run takes a single --strategy; use compare for several")
    kind = kinds[0]
    seeds = args.seeds or [args.seed]
    guidance = _guidance(args.guidance)
    echo_config("run", inputs, strategy=kind.value, budget=args.budget, seeds=",".join(map(str, seeds)),
                max_sequences=args.max_sequences, guidance=args.guidance or "-")
    out = Path(args.out)
    for seed in seeds:
        try:
            result, report = execute(model, changes, inputs.name, kind, seed, args.budget,
                                     args.max_sequences, guidance)
        except GuidanceMismatch as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        except UnknownChangeEntry as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_FINDINGS
        payload = {"config": {"app": inputs.name, "strategy": kind.value, "seed": seed, "budget": args.budget,
                              "max_sequences": args.max_sequences, "guidance": args.guidance},
                   **report.to_dict()}
        write_run(result, out / f"seed-{seed}", payload)
        first = report.first_target_interaction_index
        faults = ",".join(f.fault_id for f in report.revealed_faults) or "-"
        print(f"seed {seed}: first_interaction={'Failure' if first is None else first} "
              f"interactions={report.target_interaction_count} "
              f"coverage={report.affected_function_coverage:.2f} faults={faults}")
    return EXIT_OK


def cmd_compare(args) -> int:
    apps = args.app or [e.name for e in bundled.entries()]
    if args.changes and len(apps) > 1:
        raise UsageError("--changes applies to a single --app")
    kinds = args.strategy or list(StrategyKind)
    seeds = args.seeds or [args.seed]
    guidance = _guidance(args.guidance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    reports: list[RunReport] = []
    errors: list[dict] = []
    for ref in apps:
        inputs = resolve_inputs(ref, args.changes)
        model, changes = load_inputs(inputs)
        echo_config("compare", inputs, strategies=",".join(k.value for k in kinds), budget=args.budget,
                    seeds=",".join(map(str, seeds)), max_sequences=args.max_sequences)
        for kind in kinds:
            for seed in seeds:
                try:
                    _, report = execute(model, changes, inputs.name, kind, seed, args.budget,
                                        args.max_sequences, guidance)
                except (GuidanceMismatch, UnknownChangeEntry, ModelError) as exc:
                    errors.append({"app": inputs.name, "strategy": kind.value, "seed": seed, "error": str(exc)})
                    print(f"error: {inputs.name}/{kind.value}/seed {seed}: {exc}", file=sys.stderr)
                    continue
                reports.append(report)

    if reports:
        agg = aggregate(reports)
        (out / "summary.csv").write_text(agg.to_csv(), encoding="utf-8")
        table = ranking_table(agg)
        (out / "ranking.txt").write_text(table, encoding="utf-8")
        print(table, end="")
    (out / "reports.json").write_text(
        json.dumps({"reports": [r.to_dict() for r in reports], "errors": errors}, indent=2) + "\n",
        encoding="utf-8",
    )
    return EXIT_FINDINGS if errors else EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="changehound", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--corpus", help="corpus directory (overrides CHANGEHOUND_CORPUS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, outdir: bool = True, out_required: bool = False):
        p.add_argument("--app", action="append", default=[], help="app model file or corpus app name")
        p.add_argument("--changes", help="change-set JSON (defaults to the corpus entry's)")
        if outdir:
            p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("validate", help="check app models for invariant violations")
    p.add_argument("--app", action="append", default=[], required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="compute the target set of a change")
    common(p)
    p.add_argument("--dot", action="store_true", help="also write the combined map as DOT")
    p.set_defaults(func=cmd_analyze)

    for name, func, helptext in (("run", cmd_run, "run one strategy over one or more seeds"),
                                 ("compare", cmd_compare, "run strategies x seeds and summarize")):
        p = sub.add_parser(name, help=helptext)
        common(p, out_required=True)
        p.add_argument("--strategy", type=parse_strategies,
                       help="random, dfs, start-biased or cat; comma-separated for compare")
        p.add_argument("--budget", type=int, default=1000, help="events per run (default 1000)")
        p.add_argument("--seed", type=int, default=1, help="single seed (default 1)")
        p.add_argument("--seeds", type=parse_seeds, help="e.g. 1-10 or 1,3,5")
        p.add_argument("--guidance", help="guidance JSON executed before exploration")
        p.add_argument("--max-sequences", type=int, default=500,
                       help="cap on length-3 sequences per target state (default 500)")
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.corpus:
        os.environ[bundled.ENV_VAR] = args.corpus
    if getattr(args, "budget", 1) < 1 or getattr(args, "max_sequences", 1) < 1:
        print("error: --budget and --max-sequences must be positive", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
