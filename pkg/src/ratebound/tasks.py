"""Built-in benchmark tasks and the JSON task-file format.

Task file layout (UTF-8 JSON)::

    {
      "actions": ["a", "b", ...],
      "observations": ["y1", "y2", ...],
      "utility": [[U(a,y1), U(b,y1), ...], ...],   # one row per observation
      "p_y": [0.5, 0.5]                            # optional, default uniform
    }

A document may give ``"loss"`` instead of ``"utility"``; losses are negated
on load.
"""
from __future__ import annotations

import itertools
import json
import math

import numpy as np

from .core import TaskSpec, task_violations
from .errors import GridTooLarge, InvalidTaskId, ParseError, SchemaError

MAX_GRID_N = 4
BUILTINS = ("two-task", "grid3")


def two_task_problem() -> TaskSpec:
    """Two tasks over four action vectors; task 1 pays x1, task 2 pays |x1 - x2|."""
    vectors = [(0.0, 0.0), (0.0, 1.0), (0.7, 0.0), (1.0, 1.0)]
    labels = ["[0,0]", "[0,1]", "[0.7,0]", "[1,1]"]
    utility = [[x1 for x1, _ in vectors],
               [abs(x1 - x2) for x1, x2 in vectors]]
    return TaskSpec(labels, ["y1", "y2"], utility, [0.5, 0.5])


def _check_pattern(cells) -> tuple[np.ndarray, int]:
    cells = np.asarray(cells)
    n = math.isqrt(cells.size)
    if cells.ndim != 1 or n * n != cells.size or n == 0:
        raise ValueError(f"pattern length {cells.size} is not a perfect square")
    if not np.isin(cells, (0, 1)).all():
        raise ValueError("pattern cells must be 0 or 1")
    return cells.astype(int), n


def grid_utility(pattern, task_id: int) -> float:
    """Utility of a binary grid pattern (row-major cells) under task 1, 2 or 3.

    1: number of colored cells, provided some row and some column are all white.
    2: 4 if exactly four cells are colored.
    3: number of colored cells if that number is even (zero counts as even).
    """
    if task_id not in (1, 2, 3):
        raise InvalidTaskId(f"grid task id must be 1, 2 or 3, got {task_id!r}")
    cells, n = _check_pattern(pattern)
    colored = int(cells.sum())
    if task_id == 1:
        grid = cells.reshape(n, n)
        white_row = (grid.sum(axis=1) == 0).any()
        white_col = (grid.sum(axis=0) == 0).any()
        return float(colored) if white_row and white_col else 0.0
    if task_id == 2:
        return 4.0 if colored == 4 else 0.0
    return float(colored) if colored % 2 == 0 else 0.0


def grid_patterns(n: int) -> np.ndarray:
    """All 2**(n*n) binary patterns, in the order of their bitstring labels."""
    return np.array(list(itertools.product((0, 1), repeat=n * n)), dtype=int)


def grid_task(n: int = 3) -> TaskSpec:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"grid size must be an integer >= 2, got {n!r}")
    if n > MAX_GRID_N:
        raise GridTooLarge(f"grid size {n} gives 2**{n * n} actions; the limit is n={MAX_GRID_N}")
    patterns = grid_patterns(n)
    labels = ["".join(map(str, p)) for p in patterns]
    utility = [[grid_utility(p, t) for p in patterns] for t in (1, 2, 3)]
    return TaskSpec(labels, ["task1", "task2", "task3"], utility)


def builtin(name: str) -> TaskSpec:
    if name == "two-task":
        return two_task_problem()
    if name == "grid3":
        return grid_task(3)
    raise KeyError(f"unknown builtin task {name!r}; choose from {', '.join(BUILTINS)}")


# -- serialization ----------------------------------------------------------

def task_to_dict(task: TaskSpec) -> dict:
    return {
        "actions": list(task.actions.labels),
        "observations": list(task.observations.labels),
        "utility": task.utility.tolist(),
        "p_y": task.p_y.mass.tolist(),
    }


def save_task(task: TaskSpec) -> str:
    return json.dumps(task_to_dict(task), indent=1) + "\n"


def _violations_to_error(problems):
    first = problems[0]
    return SchemaError("; ".join(problems), field=first.split(":", 1)[0])


def validate_task(spec) -> list[str]:
    """List invariant violations of a TaskSpec or a raw task document (dict)."""
    if isinstance(spec, TaskSpec):
        return task_violations(spec.actions, spec.observations, spec.utility, spec.p_y)
    if not isinstance(spec, dict):
        return [f"document: expected an object, got {type(spec).__name__}"]
    problems = []
    for key in ("actions", "observations"):
        if key not in spec:
            problems.append(f"{key}: missing")
        elif not isinstance(spec[key], list) or not all(isinstance(s, str) for s in spec[key]):
            problems.append(f"{key}: must be a list of strings")
    has_u, has_l = "utility" in spec, "loss" in spec
    if has_u == has_l:
        problems.append("utility: exactly one of 'utility' or 'loss' is required")
    table = spec.get("utility", spec.get("loss"))
    if table is not None and not (isinstance(table, list)
                                  and all(isinstance(r, list) for r in table)):
        problems.append("utility: must be a list of rows")
        table = None
    if problems:
        return problems
    for i, row in enumerate(table):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            problems.append(f"utility[{i}]: entries must be numbers")
    p_y = spec.get("p_y")
    if p_y is not None and not (isinstance(p_y, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in p_y)):
        problems.append("p_y: must be a list of numbers")
    if problems:
        return problems
    return task_violations(spec["actions"], spec["observations"], table, p_y)


def load_task(text) -> TaskSpec:
    """Parse and validate a task document (str or UTF-8 bytes)."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"task document is not UTF-8: {e}") from None
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, ValueError) as e:
        raise ParseError(f"malformed task document: {e}") from None
    problems = validate_task(doc)
    if problems:
        raise _violations_to_error(problems)
    if "loss" in doc:
        return TaskSpec.from_loss(doc["actions"], doc["observations"], doc["loss"], doc.get("p_y"))
    return TaskSpec(doc["actions"], doc["observations"], doc["utility"], doc.get("p_y"))
