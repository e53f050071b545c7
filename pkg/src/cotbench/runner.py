"""Experiment orchestration: run grids of calls, persist them, aggregate accuracy.

A run is a directory: ``spec.json`` freezes the experiment definition,
``records/<cell>.jsonl`` collects one call record per line, and
``table.json`` / ``table.txt`` hold the aggregates.  Records are keyed by
(cell, index) so interrupted runs resume without duplicating work, and
every instance derives from the master seed alone, so the same spec
produces the same instances regardless of worker count.
"""

from __future__ import annotations

import json
import math
import statistics
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from cotbench.backends import (
    BackendError,
    CallContext,
    CompletionConfig,
    ModelBackend,
)
from cotbench.extraction import (
    ExtractedAnswer,
    ExtractionFailure,
    FailureReason,
    Verdict,
    extract_result,
    score,
)
from cotbench.prompts import SupervisionKind, get_template, render_prompt
from cotbench.tasks import (
    ANSWER_KINDS,
    InputRendering,
    OracleAnswer,
    TaskId,
    TaskInstance,
    generate_instance,
    make_instance,
    oracle_solve,
)
from cotbench.textgrid import format_grid

# Per-task instance lengths used in the large-scale accuracy grid.  The
# palindrome task's published lengths count the middle marker, so in
# payload terms (marker excluded) they come out one lower and even.
DEFAULT_LENGTHS: dict[TaskId, tuple[int, ...]] = {
    TaskId.PARITY_CHECK: (20, 25, 30, 35),
    TaskId.EVEN_PAIRS: (10, 15, 20, 25),
    TaskId.CYCLE_NAVIGATION: (30, 40, 50, 60),
    TaskId.REVERSE_LIST: (10, 15, 20, 25),
    TaskId.EQUAL_NUMBER: (20, 30, 40, 50),
    TaskId.PALINDROME_VERIFICATION: (24, 34, 44, 54),
    TaskId.ODDS_FIRST: (8, 10, 12, 15),
    TaskId.SORTING_LIST: (8, 10, 12, 15),
    TaskId.DUPLICATE_LIST: (40, 50, 60, 70),
}

Z_95 = statistics.NormalDist().inv_cdf(0.975)

_TASK_ORDER = {task: i for i, task in enumerate(TaskId)}
_KIND_ORDER = {kind: i for i, kind in enumerate(SupervisionKind)}


class RunnerError(Exception):
    pass


class SpecError(RunnerError):
    """Experiment spec is invalid or conflicts with an existing run."""


class StructureMismatch(RunnerError):
    """Two runs do not share the cell structure needed for comparison."""


class EmptyCellWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CellKey:
    """One (task, length, kind, rendering) combination of the grid."""

    task: TaskId
    length: int
    kind: SupervisionKind
    rendering: InputRendering

    @property
    def label(self) -> str:
        return f"{self.task.value}.{self.length}.{self.kind.value}.{self.rendering.value}"

    @property
    def sort_key(self):
        return (_TASK_ORDER[self.task], self.length, _KIND_ORDER[self.kind], self.rendering.value)

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "length": self.length,
            "kind": self.kind.value,
            "rendering": self.rendering.value,
        }

    @staticmethod
    def from_json(data: dict) -> "CellKey":
        return CellKey(
            TaskId.parse(data["task"]),
            int(data["length"]),
            SupervisionKind.parse(data["kind"]),
            InputRendering.parse(data["rendering"]),
        )


@dataclass
class ExperimentSpec:
    """Declarative description of a full experiment grid."""

    tasks: list[TaskId]
    lengths: dict[TaskId, list[int]]
    kinds: list[SupervisionKind]
    rendering: InputRendering
    instances_per_cell: int
    master_seed: int
    backend: dict = field(default_factory=lambda: {"kind": "echo"})
    completion: CompletionConfig = field(default_factory=CompletionConfig)
    workers: int = 4

    def validate(self) -> None:
        if not self.tasks:
            raise SpecError("spec lists no tasks")
        if self.instances_per_cell < 1:
            raise SpecError("instances_per_cell must be positive")
        if len(set(self.tasks)) != len(self.tasks):
            raise SpecError("duplicate tasks in spec")
        for task in self.tasks:
            lengths = self.lengths.get(task)
            if not lengths:
                raise SpecError(f"no lengths for task {task.value}")
            if len(set(lengths)) != len(lengths):
                raise SpecError(f"duplicate lengths for task {task.value}")
            for length in lengths:
                if length < 2:
                    raise SpecError(f"{task.value} length {length} below minimum 2")
                if task in (TaskId.PALINDROME_VERIFICATION, TaskId.EQUAL_NUMBER) and length % 2:
                    raise SpecError(f"{task.value} requires even lengths, got {length}")

    def cells(self) -> list[CellKey]:
        return [
            CellKey(task, length, kind, self.rendering)
            for task in self.tasks
            for length in self.lengths[task]
            for kind in self.kinds
        ]

    def to_json(self) -> dict:
        return {
            "tasks": [t.value for t in self.tasks],
            "lengths": {t.value: list(self.lengths[t]) for t in self.tasks},
            "kinds": [k.value for k in self.kinds],
            "rendering": self.rendering.value,
            "instances_per_cell": self.instances_per_cell,
            "master_seed": self.master_seed,
            "backend": self.backend,
            "completion": self.completion.to_json(),
            "workers": self.workers,
        }

    @staticmethod
    def from_json(data: dict) -> "ExperimentSpec":
        tasks = [TaskId.parse(t) for t in data["tasks"]]
        raw_lengths = data.get("lengths") or {}
        lengths = {}
        for task in tasks:
            if task.value in raw_lengths:
                lengths[task] = [int(x) for x in raw_lengths[task.value]]
            else:
                lengths[task] = list(DEFAULT_LENGTHS[task])
        return ExperimentSpec(
            tasks=tasks,
            lengths=lengths,
            kinds=[SupervisionKind.parse(k) for k in data.get("kinds", ["base", "cot", "scot", "scot-sub"])],
            rendering=InputRendering.parse(data.get("rendering", "list")),
            instances_per_cell=int(data.get("instances_per_cell", 50)),
            master_seed=int(data.get("master_seed", 0)),
            backend=data.get("backend", {"kind": "echo"}),
            completion=CompletionConfig.from_json(data.get("completion", {})),
            workers=int(data.get("workers", 4)),
        )


def instance_seed_path(master_seed: int, cell: CellKey, index: int) -> str:
    return f"{master_seed}/{cell.label}/{index}"


@dataclass
class CallRecord:
    """Everything needed to audit or re-score one evaluation event."""

    cell: CellKey
    index: int
    instance: TaskInstance
    oracle: OracleAnswer
    prompt_sha256: str
    transcript: str
    extraction: ExtractedAnswer | ExtractionFailure
    verdict: Verdict
    error: str | None
    error_detail: str
    latency_s: float
    attempts: int
    timestamp: str

    def to_json(self) -> dict:
        if isinstance(self.extraction, ExtractedAnswer):
            extraction = {
                "ok": True,
                "value": self.extraction.value,
                "raw_span": self.extraction.raw_span,
                "position": self.extraction.position,
            }
        else:
            extraction = {
                "ok": False,
                "reason": self.extraction.reason.value,
                "detail": self.extraction.detail,
            }
        return {
            **self.cell.to_json(),
            "index": self.index,
            "instance": {
                "elements": list(self.instance.elements),
                "params": self.instance.params,
                "seed_path": self.instance.seed_path,
            },
            "oracle": self.oracle.to_json(),
            "prompt_sha256": self.prompt_sha256,
            "transcript": self.transcript,
            "extraction": extraction,
            "verdict": self.verdict.value,
            "error": self.error,
            "error_detail": self.error_detail,
            "latency_s": self.latency_s,
            "attempts": self.attempts,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_json(data: dict) -> "CallRecord":
        cell = CellKey.from_json(data)
        kind = ANSWER_KINDS[cell.task]
        instance = make_instance(
            cell.task,
            data["instance"]["elements"],
            data["instance"].get("params") or {},
            data["instance"].get("seed_path", ""),
        )
        oracle = OracleAnswer.from_json(kind, data["oracle"])
        raw = data["extraction"]
        extraction: ExtractedAnswer | ExtractionFailure
        if raw.get("ok"):
            extraction = ExtractedAnswer(raw["raw_span"], raw["value"], kind, raw["position"])
        else:
            extraction = ExtractionFailure(FailureReason(raw["reason"]), raw.get("detail", ""))
        return CallRecord(
            cell=cell,
            index=int(data["index"]),
            instance=instance,
            oracle=oracle,
            prompt_sha256=data["prompt_sha256"],
            transcript=data["transcript"],
            extraction=extraction,
            verdict=Verdict(data["verdict"]),
            error=data.get("error"),
            error_detail=data.get("error_detail", ""),
            latency_s=data.get("latency_s", 0.0),
            attempts=data.get("attempts", 1),
            timestamp=data.get("timestamp", ""),
        )


def rescore(record: CallRecord) -> Verdict:
    """Recompute the verdict from the stored transcript and oracle alone."""
    kind = ANSWER_KINDS[record.cell.task]
    return score(extract_result(record.transcript, kind), record.oracle)


def _build_instance(cell: CellKey, master_seed: int, index: int) -> TaskInstance:
    path = instance_seed_path(master_seed, cell, index)
    return generate_instance(cell.task, cell.length, seed_path=path)


def _execute_call(
    spec: ExperimentSpec, backend: ModelBackend, cell: CellKey, index: int
) -> CallRecord:
    instance = _build_instance(cell, spec.master_seed, index)
    oracle = oracle_solve(cell.task, instance)
    prompt = render_prompt(get_template(cell.task, cell.kind), instance, cell.rendering)
    kind = ANSWER_KINDS[cell.task]

    start = time.monotonic()
    error = None
    error_detail = ""
    transcript = ""
    attempts = 0
    try:
        transcript, attempts = backend.complete_with_meta(
            prompt.text, spec.completion, CallContext(instance, oracle)
        )
    except BackendError as exc:
        error = type(exc).__name__
        error_detail = str(exc)
        attempts = exc.attempts
    latency = time.monotonic() - start

    if error is None:
        extraction = extract_result(transcript, kind)
    else:
        extraction = ExtractionFailure(FailureReason.NO_RESULT_FOUND, f"backend error: {error}")
    verdict = score(extraction, oracle)
    return CallRecord(
        cell=cell,
        index=index,
        instance=instance,
        oracle=oracle,
        prompt_sha256=prompt.sha256,
        transcript=transcript,
        extraction=extraction,
        verdict=verdict,
        error=error,
        error_detail=error_detail,
        latency_s=latency,
        attempts=attempts,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def _records_dir(run_dir: Path) -> Path:
    return run_dir / "records"


def _cell_file(run_dir: Path, cell: CellKey) -> Path:
    return _records_dir(run_dir) / f"{cell.label}.jsonl"


def _load_cell_records(path: Path) -> dict[int, CallRecord]:
    """Parse one cell file, skipping truncated lines and duplicate indices."""
    records: dict[int, CallRecord] = {}
    if not path.exists():
        return records
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                record = CallRecord.from_json(json.loads(line))
            except (ValueError, KeyError):
                continue
            records.setdefault(record.index, record)
    return records


def load_records(run_dir: str | Path) -> dict[tuple[str, int], CallRecord]:
    """All persisted records of a run, keyed and deduplicated by (cell, index)."""
    run_dir = Path(run_dir)
    out: dict[tuple[str, int], CallRecord] = {}
    records_dir = _records_dir(run_dir)
    if not records_dir.is_dir():
        return out
    for path in sorted(records_dir.glob("*.jsonl")):
        for index, record in _load_cell_records(path).items():
            out.setdefault((record.cell.label, index), record)
    return out


def run_experiment(
    spec: ExperimentSpec,
    backend: ModelBackend,
    out_dir: str | Path,
    workers: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> Path:
    """Execute (or resume) every cell of the spec against the backend.

    Backend errors are recorded on the affected call and never abort the
    run; spec problems abort before any call is issued.
    """
    spec.validate()
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    _records_dir(run_dir).mkdir(exist_ok=True)

    spec_path = run_dir / "spec.json"
    frozen = json.dumps(spec.to_json(), indent=2, ensure_ascii=False) + "\n"
    if spec_path.exists():
        if json.loads(spec_path.read_text(encoding="utf-8")) != spec.to_json():
            raise SpecError(f"{spec_path} holds a different spec; refusing to mix runs")
    else:
        spec_path.write_text(frozen, encoding="utf-8")

    cells = spec.cells()
    pending: list[tuple[CellKey, int]] = []
    for cell in cells:
        done = _load_cell_records(_cell_file(run_dir, cell))
        for index in range(spec.instances_per_cell):
            if index not in done:
                pending.append((cell, index))

    total = len(cells) * spec.instances_per_cell
    completed = total - len(pending)
    if progress:
        progress(completed, total)
    if not pending:
        return run_dir

    handles = {}
    try:
        with ThreadPoolExecutor(max_workers=workers or spec.workers) as pool:
            futures = {
                pool.submit(_execute_call, spec, backend, cell, index): cell
                for cell, index in pending
            }
            for future in as_completed(futures):
                record = future.result()
                cell = futures[future]
                handle = handles.get(cell.label)
                if handle is None:
                    path = _cell_file(run_dir, cell)
                    # a crash can leave a torn final line with no newline;
                    # terminate it so appended records stay parseable
                    needs_newline = path.exists() and path.stat().st_size > 0 and not path.read_bytes().endswith(b"\n")
                    handle = open(path, "a", encoding="utf-8")
                    if needs_newline:
                        handle.write("\n")
                    handles[cell.label] = handle
                handle.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
                handle.flush()
                completed += 1
                if progress:
                    progress(completed, total)
    finally:
        for handle in handles.values():
            handle.close()
    return run_dir


def wilson_interval(successes: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    margin = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # at the extremes the bound is exactly the proportion; avoid float dust
    low = 0.0 if successes == 0 else max(0.0, center - margin)
    high = 1.0 if successes == n else min(1.0, center + margin)
    return (low, high)


def format_accuracy(value: float) -> str:
    """Accuracy as a percentage with one decimal, e.g. 0.953 -> '95.3'."""
    return f"{value * 100:.1f}"


@dataclass(frozen=True)
class CellStats:
    cell: CellKey
    n: int
    n_correct: int
    n_unparseable: int

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.n_correct, self.n)

    def to_json(self) -> dict:
        low, high = self.interval
        return {
            **self.cell.to_json(),
            "n": self.n,
            "n_correct": self.n_correct,
            "n_unparseable": self.n_unparseable,
            "accuracy": self.accuracy,
            "ci_low": low,
            "ci_high": high,
        }


@dataclass
class AccuracyTable:
    cells: list[CellStats]

    def to_json(self) -> dict:
        return {"cells": [c.to_json() for c in self.cells]}

    def by_key(self) -> dict[tuple, CellStats]:
        return {(c.cell.task, c.cell.length, c.cell.kind, c.cell.rendering): c for c in self.cells}

    def format_text(self) -> str:
        kinds = sorted({c.cell.kind for c in self.cells}, key=_KIND_ORDER.get)
        renderings = sorted({c.cell.rendering for c in self.cells}, key=lambda r: r.value)
        multi_rendering = len(renderings) > 1
        headers = ["Task", "Len"] + (["Input"] if multi_rendering else []) + ["n"]
        headers += [k.display for k in kinds]

        grouped: dict[tuple, dict[SupervisionKind, CellStats]] = {}
        for stats in self.cells:
            row_key = (_TASK_ORDER[stats.cell.task], stats.cell.length, stats.cell.rendering.value)
            grouped.setdefault(row_key, {})[stats.cell.kind] = stats

        rows = []
        for row_key in sorted(grouped):
            by_kind = grouped[row_key]
            any_stats = next(iter(by_kind.values()))
            cell = any_stats.cell
            row = [cell.task.display, str(cell.length)]
            if multi_rendering:
                row.append(cell.rendering.value)
            ns = {s.n for s in by_kind.values()}
            row.append(str(ns.pop()) if len(ns) == 1 else "mixed")
            for kind in kinds:
                stats = by_kind.get(kind)
                if stats is None:
                    row.append("-")
                else:
                    low, high = stats.interval
                    row.append(
                        f"{format_accuracy(stats.accuracy)} "
                        f"[{format_accuracy(low)}, {format_accuracy(high)}]"
                    )
            rows.append(row)
        return format_grid(headers, rows)


def aggregate(run_dir: str | Path, write: bool = True) -> AccuracyTable:
    """Group a run's records by cell and compute accuracy with Wilson bounds."""
    run_dir = Path(run_dir)
    records = load_records(run_dir)

    by_cell: dict[str, list[CallRecord]] = {}
    for (label, _), record in records.items():
        by_cell.setdefault(label, []).append(record)

    stats = []
    for label, cell_records in by_cell.items():
        cell = cell_records[0].cell
        n = len(cell_records)
        n_correct = sum(1 for r in cell_records if r.verdict is Verdict.CORRECT)
        n_unparseable = sum(1 for r in cell_records if r.verdict is Verdict.UNPARSEABLE)
        stats.append(CellStats(cell, n, n_correct, n_unparseable))
    stats.sort(key=lambda s: s.cell.sort_key)

    spec_path = run_dir / "spec.json"
    if spec_path.exists():
        spec = ExperimentSpec.from_json(json.loads(spec_path.read_text(encoding="utf-8")))
        recorded = {s.cell.label for s in stats}
        for cell in spec.cells():
            if cell.label not in recorded:
                warnings.warn(f"cell {cell.label} has no records", EmptyCellWarning)

    table = AccuracyTable(stats)
    if write:
        (run_dir / "table.json").write_text(
            json.dumps(table.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        (run_dir / "table.txt").write_text(table.format_text(), encoding="utf-8")
    return table


@dataclass(frozen=True)
class CellComparison:
    task: TaskId
    length: int
    kind: SupervisionKind
    n_a: int
    accuracy_a: float
    n_b: int
    accuracy_b: float
    delta: float
    z: float
    significant: bool

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "length": self.length,
            "kind": self.kind.value,
            "n_a": self.n_a,
            "accuracy_a": self.accuracy_a,
            "n_b": self.n_b,
            "accuracy_b": self.accuracy_b,
            "delta": self.delta,
            "z": self.z,
            "significant": self.significant,
        }


@dataclass
class ComparisonTable:
    rows: list[CellComparison]

    def to_json(self) -> dict:
        return {"cells": [r.to_json() for r in self.rows]}

    def format_text(self) -> str:
        headers = ["Task", "Len", "Kind", "acc A", "acc B", "delta", "z", "sig"]
        rows = []
        for r in self.rows:
            rows.append(
                [
                    r.task.display,
                    str(r.length),
                    r.kind.display,
                    format_accuracy(r.accuracy_a),
                    format_accuracy(r.accuracy_b),
                    f"{r.delta * 100:+.1f}",
                    f"{r.z:+.2f}",
                    "*" if r.significant else "",
                ]
            )
        return format_grid(headers, rows)


def two_proportion_z(k_a: int, n_a: int, k_b: int, n_b: int) -> float:
    """Pooled two-proportion z statistic (b minus a)."""
    pooled = (k_a + k_b) / (n_a + n_b)
    if pooled in (0.0, 1.0):
        return 0.0
    se = math.sqrt(pooled * (1 - pooled) * (1 / n_a + 1 / n_b))
    return (k_b / n_b - k_a / n_a) / se


def compare_runs(run_a: str | Path, run_b: str | Path, alpha: float = 0.05) -> ComparisonTable:
    """Per-cell accuracy deltas between two runs sharing (task, length, kind) cells.

    The rendering axis may differ between the runs (that is the point of
    the tokenization comparison); everything else must line up.
    """
    table_a = aggregate(run_a, write=False)
    table_b = aggregate(run_b, write=False)

    def keyed(table: AccuracyTable) -> dict[tuple, CellStats]:
        out = {}
        for stats in table.cells:
            key = (stats.cell.task, stats.cell.length, stats.cell.kind)
            if key in out:
                raise StructureMismatch(
                    f"run has multiple renderings for {key}; compare one rendering at a time"
                )
            out[key] = stats
        return out

    cells_a = keyed(table_a)
    cells_b = keyed(table_b)
    if set(cells_a) != set(cells_b):
        only_a = {f"{t.value}/{l}/{k.value}" for t, l, k in set(cells_a) - set(cells_b)}
        only_b = {f"{t.value}/{l}/{k.value}" for t, l, k in set(cells_b) - set(cells_a)}
        raise StructureMismatch(f"cell structures differ (only in A: {only_a}, only in B: {only_b})")

    z_crit = statistics.NormalDist().inv_cdf(1 - alpha / 2)
    rows = []
    for key in sorted(cells_a, key=lambda k: (_TASK_ORDER[k[0]], k[1], _KIND_ORDER[k[2]])):
        a, b = cells_a[key], cells_b[key]
        z = two_proportion_z(a.n_correct, a.n, b.n_correct, b.n)
        rows.append(
            CellComparison(
                task=key[0],
                length=key[1],
                kind=key[2],
                n_a=a.n,
                accuracy_a=a.accuracy,
                n_b=b.n,
                accuracy_b=b.accuracy,
                delta=b.accuracy - a.accuracy,
                z=z,
                significant=abs(z) > z_crit,
            )
        )
    return ComparisonTable(rows)


def stderr_progress(done: int, total: int) -> None:
    """Progress printer for CLI use; keeps stdout clean for data."""
    sys.stderr.write(f"\r{done}/{total} calls")
    sys.stderr.flush()
    if done >= total:
        sys.stderr.write("\n")
