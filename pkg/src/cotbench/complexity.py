"""Search-space size calculations for step templates and final answers.

Two quantities: the number of distinct step templates when a reasoning
step verbalizes s of n available bits (a plain binomial coefficient,
kept exact at any size), and the density of correct answers inside an
enumerable candidate answer space, reported as an exact rational.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from cotbench.tasks import (
    AnswerKind,
    TaskId,
    TaskInstance,
    expected_answer_kind,
    make_instance,
    oracle_solve,
)
from cotbench.textgrid import format_grid

ENUMERATION_LIMIT = 10**7


class ComplexityError(Exception):
    pass


class InvalidParams(ComplexityError):
    pass


class SpaceTooLarge(ComplexityError):
    """The candidate space exceeds the exhaustive-enumeration budget."""


@dataclass(frozen=True)
class PromptSpaceParams:
    """n bits of latent information, s bits verbalized per reasoning step."""

    n: int
    s: int

    def __post_init__(self):
        if self.n <= 0 or self.s <= 0 or self.s > self.n:
            raise InvalidParams(f"need 0 < s <= n, got n={self.n}, s={self.s}")


def template_count(params: PromptSpaceParams) -> int:
    """Number of distinct step templates: ways to choose s of n bits."""
    return math.comb(params.n, params.s)


class CandidateModel(Enum):
    """Enumeration rule defining a task's candidate answer space."""

    BOOLEAN = "boolean"
    CYCLE_POSITIONS = "cycle-positions"
    COUNT_RANGE = "count-range"
    PERMUTATIONS = "permutations"
    ALPHABET_STRINGS = "alphabet-strings"

    @classmethod
    def parse(cls, text: str) -> "CandidateModel":
        for member in cls:
            if text.strip().lower() in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown candidate model {text!r}")


DEFAULT_CANDIDATE_MODELS = {
    TaskId.PARITY_CHECK: CandidateModel.BOOLEAN,
    TaskId.EQUAL_NUMBER: CandidateModel.BOOLEAN,
    TaskId.PALINDROME_VERIFICATION: CandidateModel.BOOLEAN,
    TaskId.CYCLE_NAVIGATION: CandidateModel.CYCLE_POSITIONS,
    TaskId.EVEN_PAIRS: CandidateModel.COUNT_RANGE,
    TaskId.REVERSE_LIST: CandidateModel.PERMUTATIONS,
    TaskId.ODDS_FIRST: CandidateModel.PERMUTATIONS,
    TaskId.SORTING_LIST: CandidateModel.PERMUTATIONS,
    TaskId.DUPLICATE_LIST: CandidateModel.ALPHABET_STRINGS,
}


@dataclass(frozen=True)
class AnswerSpaceCensus:
    """Exact counts over one instance's enumerated candidate answers."""

    task: TaskId
    length: int
    model: CandidateModel
    total: int
    correct: int

    @property
    def density(self) -> Fraction:
        return Fraction(self.correct, self.total)

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "length": self.length,
            "model": self.model.value,
            "total": self.total,
            "correct": self.correct,
            "density": f"{self.density.numerator}/{self.density.denominator}",
        }


def reference_instance(task: TaskId, length: int) -> TaskInstance:
    """Deterministic instance used when a census is asked for by length only.

    Permutation-space tasks get distinct letters so the census lands on
    the canonical 1/length! density.
    """
    letters = string.ascii_lowercase
    if task in (TaskId.REVERSE_LIST, TaskId.ODDS_FIRST, TaskId.SORTING_LIST):
        if length > len(letters):
            raise InvalidParams(f"distinct-letter instance caps at {len(letters)} symbols")
        return make_instance(task, list(letters[:length]))
    if task is TaskId.PALINDROME_VERIFICATION:
        if length % 2:
            raise InvalidParams("palindrome lengths are even")
        half = [letters[i % 26] for i in range(length // 2)]
        return make_instance(task, half + ["#"] + half[::-1])
    if task is TaskId.EQUAL_NUMBER:
        if length % 2:
            raise InvalidParams("balanced lists have even length")
        return make_instance(task, ["0"] * (length // 2) + ["1"] * (length // 2))
    if task is TaskId.CYCLE_NAVIGATION:
        return make_instance(task, ["1"] * length)
    return make_instance(task, [("a" if i % 2 == 0 else "b") for i in range(length)])


def answer_space_census(
    task: TaskId,
    length: int | None = None,
    instance: TaskInstance | None = None,
    model: CandidateModel | None = None,
) -> AnswerSpaceCensus:
    """Enumerate a candidate answer space and count the correct members."""
    if instance is None:
        if length is None:
            raise InvalidParams("pass a length or an instance")
        instance = reference_instance(task, length)
    if model is None:
        model = DEFAULT_CANDIDATE_MODELS[task]
    oracle = oracle_solve(task, instance)

    if model is CandidateModel.BOOLEAN:
        candidates: list = [True, False]
    elif model is CandidateModel.CYCLE_POSITIONS:
        modulus = instance.params.get("modulus", 5)
        candidates = list(range(modulus))
    elif model is CandidateModel.COUNT_RANGE:
        candidates = list(range(instance.length))
    elif model is CandidateModel.PERMUTATIONS:
        size = math.factorial(instance.length)
        if size > ENUMERATION_LIMIT:
            raise SpaceTooLarge(f"{instance.length}! = {size} candidates")
        total = 0
        correct = 0
        target = oracle.value
        for perm in itertools.permutations(instance.elements):
            total += 1
            if "".join(perm) == target:
                correct += 1
        return AnswerSpaceCensus(task, instance.length, model, total, correct)
    else:  # ALPHABET_STRINGS
        alphabet = sorted(set(instance.elements))
        out_len = len(oracle.value)
        size = len(alphabet) ** out_len
        if size > ENUMERATION_LIMIT:
            raise SpaceTooLarge(f"{len(alphabet)}^{out_len} = {size} candidates")
        total = 0
        correct = 0
        target = oracle.value
        for combo in itertools.product(alphabet, repeat=out_len):
            total += 1
            if "".join(combo) == target:
                correct += 1
        return AnswerSpaceCensus(task, instance.length, model, total, correct)

    correct = sum(1 for c in candidates if c == oracle.value and type(c) is type(oracle.value))
    return AnswerSpaceCensus(task, instance.length, model, len(candidates), correct)


@dataclass
class DensityReport:
    rows: list[AnswerSpaceCensus]
    failures: list[tuple[TaskId, int, str]]

    def to_json(self) -> dict:
        return {
            "cells": [r.to_json() for r in self.rows],
            "failures": [
                {"task": t.value, "length": length, "error": msg} for t, length, msg in self.failures
            ],
        }

    def format_text(self) -> str:
        headers = ["Task", "Len", "Model", "Correct", "Total", "Density"]
        body = []
        for row in self.rows:
            body.append(
                [
                    row.task.display,
                    str(row.length),
                    row.model.value,
                    str(row.correct),
                    str(row.total),
                    f"{row.density.numerator}/{row.density.denominator}",
                ]
            )
        for task, length, msg in self.failures:
            body.append([task.display, str(length), "-", "-", "-", f"error: {msg}"])
        return format_grid(headers, body)


def density_report(tasks: list[TaskId], lengths: list[int]) -> DensityReport:
    """Censuses across a task x length grid; per-cell failures don't stop the rest."""
    rows = []
    failures = []
    for task in tasks:
        for length in lengths:
            try:
                rows.append(answer_space_census(task, length))
            except ComplexityError as exc:
                failures.append((task, length, str(exc)))
    return DensityReport(rows, failures)


__all__ = [
    "AnswerSpaceCensus",
    "CandidateModel",
    "ComplexityError",
    "DensityReport",
    "InvalidParams",
    "PromptSpaceParams",
    "SpaceTooLarge",
    "answer_space_census",
    "density_report",
    "reference_instance",
    "template_count",
    "AnswerKind",
    "expected_answer_kind",
]
