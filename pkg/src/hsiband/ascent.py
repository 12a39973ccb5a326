"""Rule-driven steepest ascent over the (redundancy, relevance) threshold grid.

Every grid point is scored by an evaluator returning an
:class:`~hsiband.wrapper.EvaluationRecord`. Moving to a neighbour is classified
by the sign of the accuracy change and of the band-count change; the move
priority is J-best, then J-great, then J-lost, and J-not moves are never taken.

Direction geometry: LEFT/RIGHT step the redundancy index down/up, TOP/DOWN
step the relevance index down/up.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .bandselect import SelectionThresholds
from .errors import EvaluationError, HsiBandError, ValidationError
from .wrapper import EvaluationRecord

Point = Tuple[int, int]
Evaluator = Callable[[SelectionThresholds], EvaluationRecord]

DEFAULT_REDUNDANCY_AXIS = (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.43, 0.45, 0.46, 0.47, 0.48, 0.49,
                           0.50, 0.51, 0.52, 0.53, 0.54, 0.55, 0.56, 0.70, 0.90, 1.00)
DEFAULT_RELEVANCE_AXIS = (0.0, 0.4, 0.45, 0.57, 0.6, 0.9, 0.91, 0.93)


class Operator(enum.Enum):
    J_NOT = "J-not"
    J_BEST = "J-best"
    J_LOST = "J-lost"
    J_GREAT = "J-great"
    INT = "Int"


class Direction(enum.Enum):
    # declaration order is the tie-break priority
    LEFT = (-1, 0)
    DOWN = (0, 1)
    TOP = (0, -1)
    RIGHT = (1, 0)

    @property
    def label(self) -> str:
        return self.name.lower()


MOVABLE = (Operator.J_BEST, Operator.J_GREAT, Operator.J_LOST)


@dataclass(frozen=True)
class ThresholdGrid:
    redundancy_axis: Tuple[float, ...] = DEFAULT_REDUNDANCY_AXIS
    relevance_axis: Tuple[float, ...] = DEFAULT_RELEVANCE_AXIS

    def __post_init__(self):
        red = tuple(float(v) for v in self.redundancy_axis)
        rel = tuple(float(v) for v in self.relevance_axis)
        for name, axis in (("redundancy", red), ("relevance", rel)):
            if not axis:
                raise ValidationError(f"{name} axis is empty")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValidationError(f"{name} axis must be strictly increasing")
        if red[0] < 0 or red[-1] > 1:
            raise ValidationError("redundancy thresholds must lie in [0, 1]")
        if rel[0] < 0:
            raise ValidationError("relevance thresholds must be >= 0")
        object.__setattr__(self, "redundancy_axis", red)
        object.__setattr__(self, "relevance_axis", rel)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.redundancy_axis), len(self.relevance_axis)

    @property
    def size(self) -> int:
        return len(self.redundancy_axis) * len(self.relevance_axis)

    def points(self) -> List[Point]:
        return [(ri, mi) for ri in range(len(self.redundancy_axis)) for mi in range(len(self.relevance_axis))]

    def contains(self, point: Point) -> bool:
        ri, mi = point
        return 0 <= ri < len(self.redundancy_axis) and 0 <= mi < len(self.relevance_axis)

    def neighbor(self, point: Point, direction: Direction) -> Optional[Point]:
        dr, dm = direction.value
        target = (point[0] + dr, point[1] + dm)
        return target if self.contains(target) else None

    def thresholds(self, point: Point) -> SelectionThresholds:
        ri, mi = point
        return SelectionThresholds(self.relevance_axis[mi], self.redundancy_axis[ri])

    def label(self, point: Point) -> str:
        th = self.thresholds(point)
        return f"{th.th_redundancy:g}-{th.th_relevance:g}"


@dataclass(frozen=True)
class DirectionAssessment:
    direction: Direction
    target: Optional[Point]
    operator: Operator
    ratio: Optional[float] = None


@dataclass(frozen=True)
class TrajectoryStep:
    point: Point
    record: EvaluationRecord
    assessments: Tuple[DirectionAssessment, ...]
    chosen: Optional[Direction]  # None means terminate
    reason: str  # moved | all-J-not | target-already-visited | undefined-start


@dataclass
class SearchResult:
    trajectory: List[TrajectoryStep]
    final_point: Point
    final_record: EvaluationRecord
    restart_seed: Optional[int] = None
    start_point: Optional[Point] = None
    degenerate: bool = False

    @property
    def points(self) -> List[Point]:
        return [step.point for step in self.trajectory]


def classify_direction(origin: EvaluationRecord, target: Optional[EvaluationRecord]):
    """Return ``(operator, ratio)`` for moving from ``origin`` to ``target``.

    ``ratio`` is |delta accuracy| / |delta bands| (``inf`` when the band count
    does not change) and is ``None`` for J-not.
    """
    if target is None or not target.defined:
        return Operator.J_NOT, None
    da = target.accuracy - origin.accuracy
    db = target.n_bands - origin.n_bands
    if da > 0:
        if db <= 0:
            return Operator.J_BEST, (math.inf if db == 0 else da / -db)
        return Operator.J_GREAT, da / db
    if da < 0:
        if db > 0:
            return Operator.J_NOT, None
        return Operator.J_LOST, (math.inf if db == 0 else -da / -db)
    # unchanged accuracy: any band-count change is J-lost with zero ratio
    if db != 0:
        return Operator.J_LOST, 0.0
    return Operator.J_NOT, None


def interdict(assessments: Sequence[DirectionAssessment], predecessor: Optional[Point]):
    """Mark the move back to ``predecessor`` as INT."""
    if predecessor is None:
        return tuple(assessments)
    return tuple(
        DirectionAssessment(a.direction, a.target, Operator.INT, None) if a.target == predecessor else a
        for a in assessments
    )


def choose_move(assessments: Sequence[DirectionAssessment], predecessor: Optional[Point] = None):
    """Pick the direction to move in, or ``(None, J_NOT)`` when nothing is allowed."""
    marked = interdict(assessments, predecessor)
    priority = {d: i for i, d in enumerate(Direction)}
    for op in MOVABLE:
        candidates = [a for a in marked if a.operator is op]
        if not candidates:
            continue
        if op is Operator.J_LOST:
            best = min(candidates, key=lambda a: (a.ratio, priority[a.direction]))
        else:
            best = min(candidates, key=lambda a: (-a.ratio, priority[a.direction]))
        return best.direction, op
    return None, Operator.J_NOT


class _Memo:
    """Evaluate each grid point at most once, attaching the couple to failures."""

    def __init__(self, grid: ThresholdGrid, evaluator: Evaluator, store: Optional[Dict] = None):
        self.grid = grid
        self.evaluator = evaluator
        self.store = {} if store is None else store

    def __call__(self, point: Point) -> EvaluationRecord:
        if point not in self.store:
            th = self.grid.thresholds(point)
            try:
                self.store[point] = self.evaluator(th)
            except HsiBandError as exc:
                # keep the type (the CLI maps it to an exit code) but name the couple
                exc.thresholds = th
                raise
            except Exception as exc:
                raise EvaluationError(
                    f"evaluating (th_redundancy={th.th_redundancy:g}, th_relevance={th.th_relevance:g}) "
                    f"failed: {exc}", th) from exc
        return self.store[point]


def assess(grid: ThresholdGrid, point: Point, evaluate: Callable[[Point], EvaluationRecord]):
    origin = evaluate(point)
    out = []
    for direction in Direction:
        target = grid.neighbor(point, direction)
        record = evaluate(target) if target is not None else None
        op, ratio = classify_direction(origin, record)
        out.append(DirectionAssessment(direction, target, op, ratio))
    return tuple(out)


def steepest_ascent(grid: ThresholdGrid, start: Point, evaluator: Evaluator,
                    _store: Optional[Dict] = None) -> SearchResult:
    """Climb from ``start`` until no move is allowed or the chosen move revisits a point."""
    if not grid.contains(start):
        raise ValidationError(f"start point {start} is off the {grid.shape} grid")
    evaluate = _Memo(grid, evaluator, _store)
    start = tuple(start)
    record = evaluate(start)
    if not record.defined:
        step = TrajectoryStep(start, record, (), None, "undefined-start")
        return SearchResult([step], start, record, start_point=start, degenerate=True)

    trajectory: List[TrajectoryStep] = []
    visited = {start}
    current, predecessor = start, None
    while True:
        record = evaluate(current)
        marked = interdict(assess(grid, current, evaluate), predecessor)
        direction, _ = choose_move(marked)
        if direction is None:
            trajectory.append(TrajectoryStep(current, record, marked, None, "all-J-not"))
            break
        target = grid.neighbor(current, direction)
        if target in visited:
            trajectory.append(TrajectoryStep(current, record, marked, None, "target-already-visited"))
            break
        trajectory.append(TrajectoryStep(current, record, marked, direction, "moved"))
        visited.add(target)
        predecessor, current = current, target
    return SearchResult(trajectory, current, evaluate(current), start_point=start)


def is_local_maximum(point: Point, grid: ThresholdGrid, evaluator: Evaluator,
                     visited: Iterable[Point] = (), predecessor: Optional[Point] = None) -> bool:
    """True when no move is allowed from ``point`` or the selected move targets a visited point."""
    evaluate = _Memo(grid, evaluator)
    direction, _ = choose_move(assess(grid, point, evaluate), predecessor)
    if direction is None:
        return True
    return grid.neighbor(point, direction) in set(map(tuple, visited))


def multistart(grid: ThresholdGrid, n_restarts: int, seed: int, evaluator: Evaluator):
    """Run ``n_restarts`` climbs from seeded random defined start points.

    Starts are drawn without replacement from a seeded permutation of the grid,
    skipping undefined points; once every defined point has been used the draw
    continues with replacement among them. Returns ``(best, all_results)``.
    """
    if n_restarts < 1:
        raise ValidationError("n_restarts must be >= 1")
    rng = np.random.default_rng(seed)
    points = grid.points()
    order = iter(rng.permutation(len(points)).tolist())
    store: Dict[Point, EvaluationRecord] = {}
    evaluate = _Memo(grid, evaluator, store)
    used: List[Point] = []

    def next_start() -> Point:
        for idx in order:
            if evaluate(points[idx]).defined:
                return points[idx]
        if not used:
            raise HsiBandError("no grid point selects any band; nothing to search")
        return used[int(rng.integers(len(used)))]

    results = []
    for _ in range(n_restarts):
        start = next_start()
        if start not in used:
            used.append(start)
        result = steepest_ascent(grid, start, evaluator, _store=store)
        result.restart_seed = seed
        results.append(result)
    best_index = min(
        range(len(results)),
        key=lambda i: (-results[i].final_record.accuracy, results[i].final_record.n_bands, i),
    )
    return results[best_index], results


# ---------------------------------------------------------------------------
# logs

TRAJECTORY_FIELDS = ["step", "th_redundancy", "th_relevance", "n_bands", "accuracy",
                     "left_op", "left_R", "down_op", "down_R", "top_op", "top_R", "right_op", "right_R",
                     "chosen", "reason"]
SUMMARY_FIELDS = ["restart", "seed", "start_point", "final_point", "final_n_bands", "final_accuracy", "steps"]


def format_ratio(ratio: Optional[float]) -> str:
    if ratio is None:
        return ""
    if math.isinf(ratio):
        return "inf"
    return f"{ratio:.4f}"


def trajectory_rows(grid: ThresholdGrid, result: SearchResult):
    for i, step in enumerate(result.trajectory):
        th = grid.thresholds(step.point)
        row = {"step": i, "th_redundancy": f"{th.th_redundancy:g}", "th_relevance": f"{th.th_relevance:g}",
               "n_bands": step.record.n_bands,
               "accuracy": f"{step.record.accuracy:.4f}" if step.record.defined else "-"}
        by_dir = {a.direction: a for a in step.assessments}
        for d in Direction:
            a = by_dir.get(d)
            row[f"{d.label}_op"] = a.operator.value if a else ""
            row[f"{d.label}_R"] = format_ratio(a.ratio) if a else ""
        row["chosen"] = step.chosen.label if step.chosen else "terminate"
        row["reason"] = step.reason
        yield row


def write_trajectory(grid: ThresholdGrid, result: SearchResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, TRAJECTORY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(trajectory_rows(grid, result))


def write_summary(grid: ThresholdGrid, results: Sequence[SearchResult], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        for i, r in enumerate(results):
            writer.writerow({
                "restart": i,
                "seed": r.restart_seed,
                "start_point": grid.label(r.start_point),
                "final_point": grid.label(r.final_point),
                "final_n_bands": r.final_record.n_bands,
                "final_accuracy": f"{r.final_record.accuracy:.4f}",
                "steps": len(r.trajectory),
            })
