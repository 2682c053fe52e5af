"""Task registry: the eleven algorithms and their data-module variants."""

from __future__ import annotations

from algomem.tasks.addition import AdditionTask
from algomem.tasks.arithmetic import ArithmeticTask
from algomem.tasks.base import DataModule, OracleTrace, Task, TaskSample
from algomem.tasks.copy_family import CopyFamilyTask
from algomem.tasks.sokoban import SearchTask
from algomem.tasks.sort import SortTask

# Stable numeric ids; part of the sample seeding scheme, do not reorder.
TASK_IDS = {
    "copy": 1,
    "repeat-copy": 2,
    "duplicated": 3,
    "reverse": 4,
    "sort": 5,
    "addition": 6,
    "arithmetic": 7,
    "search": 8,
    "plan": 9,
    "search-plus": 10,
    "plan-plus": 11,
}

TASK_NAMES = tuple(TASK_IDS)


def get_task(name: str) -> Task:
    if name in ("copy", "repeat-copy", "duplicated", "reverse"):
        return CopyFamilyTask(name)
    if name == "sort":
        return SortTask()
    if name == "addition":
        return AdditionTask()
    if name == "arithmetic":
        return ArithmeticTask()
    if name in ("search", "plan", "search-plus", "plan-plus"):
        return SearchTask(name)
    raise KeyError(f"unknown task {name!r}")


__all__ = [
    "DataModule", "OracleTrace", "Task", "TaskSample",
    "TASK_IDS", "TASK_NAMES", "get_task",
]
