"""Generator and oracle tests, including the brute-force cross checks."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotbench.tasks import (
    ALPHABETS,
    AnswerKind,
    InputRendering,
    InstanceTooLarge,
    MalformedInstance,
    OracleAnswer,
    TaskId,
    TaskLevel,
    UnsupportedLength,
    brute_force_oracle,
    dump_instances,
    generate_instance,
    instance_record,
    iter_all_instances,
    make_instance,
    oracle_solve,
    parse_instance_record,
    render_input,
    rng_for,
    task_level,
)

# The failing-transcript input from the worked examples; its answer is 9.
EP_CASE_LIST = list("bbbbababbbbbababbbba")
RL_CASE_LIST = list("ofgbkvimhkdexve")


def solve(task, elements, **params):
    return oracle_solve(task, make_instance(task, elements, params)).value


class TestOracleKnownValues:
    def test_even_pairs_long_case(self):
        assert solve(TaskId.EVEN_PAIRS, EP_CASE_LIST) == 9

    def test_reverse_list_long_case(self):
        assert solve(TaskId.REVERSE_LIST, RL_CASE_LIST) == "evxedkhmivkbgfo"

    def test_cycle_navigation_example(self):
        assert solve(TaskId.CYCLE_NAVIGATION, ["0", "1", "2", "1"]) == 1

    def test_even_pairs_example(self):
        assert solve(TaskId.EVEN_PAIRS, ["a", "b", "b", "a"]) == 2

    def test_odds_first_example(self):
        assert solve(TaskId.ODDS_FIRST, ["a", "b", "c", "d"]) == "bdac"

    def test_sorting_list_example(self):
        assert solve(TaskId.SORTING_LIST, ["a", "B", "C", "d"]) == "BCad"

    def test_palindrome_example(self):
        assert solve(TaskId.PALINDROME_VERIFICATION, ["a", "b", "#", "a", "b"]) is False

    def test_equal_number_example(self):
        assert solve(TaskId.EQUAL_NUMBER, ["0", "0", "1", "1"]) is True

    def test_duplicate_list_example(self):
        assert solve(TaskId.DUPLICATE_LIST, ["a", "b"]) == "abab"

    def test_parity_empty_is_even(self):
        assert solve(TaskId.PARITY_CHECK, []) is True

    def test_cycle_all_stay(self):
        assert solve(TaskId.CYCLE_NAVIGATION, ["0"] * 8) == 0

    def test_answer_kinds(self):
        inst = make_instance(TaskId.PARITY_CHECK, ["a", "b"])
        assert oracle_solve(TaskId.PARITY_CHECK, inst).kind is AnswerKind.BOOL
        inst = make_instance(TaskId.EVEN_PAIRS, ["a", "b"])
        assert oracle_solve(TaskId.EVEN_PAIRS, inst).kind is AnswerKind.INT
        inst = make_instance(TaskId.REVERSE_LIST, ["a", "b"])
        assert oracle_solve(TaskId.REVERSE_LIST, inst).kind is AnswerKind.TEXT


class TestLevels:
    def test_level_assignment(self):
        assert task_level(TaskId.PARITY_CHECK) is TaskLevel.REGULAR
        assert task_level(TaskId.EVEN_PAIRS) is TaskLevel.REGULAR
        assert task_level(TaskId.CYCLE_NAVIGATION) is TaskLevel.REGULAR
        assert task_level(TaskId.REVERSE_LIST) is TaskLevel.DETERMINISTIC_CONTEXT_FREE
        assert task_level(TaskId.EQUAL_NUMBER) is TaskLevel.DETERMINISTIC_CONTEXT_FREE
        assert task_level(TaskId.PALINDROME_VERIFICATION) is TaskLevel.DETERMINISTIC_CONTEXT_FREE
        assert task_level(TaskId.ODDS_FIRST) is TaskLevel.CONTEXT_SENSITIVE
        assert task_level(TaskId.SORTING_LIST) is TaskLevel.CONTEXT_SENSITIVE
        assert task_level(TaskId.DUPLICATE_LIST) is TaskLevel.CONTEXT_SENSITIVE

    def test_nine_tasks(self):
        assert len(TaskId) == 9


class TestGenerators:
    @pytest.mark.parametrize("task", list(TaskId))
    def test_alphabet_and_length(self, task):
        length = 12
        inst = generate_instance(task, length, rng_for(f"alpha/{task.value}"))
        assert inst.length == length
        assert inst.task is task
        if task is TaskId.PALINDROME_VERIFICATION:
            assert len(inst.elements) == length + 1
            assert inst.elements.count("#") == 1
            assert inst.elements.index("#") == length // 2
        else:
            assert len(inst.elements) == length
        pool = set(ALPHABETS[task]) | ({"#"} if task is TaskId.PALINDROME_VERIFICATION else set())
        assert set(inst.elements) <= pool

    def test_rejects_short_lengths(self):
        with pytest.raises(UnsupportedLength):
            generate_instance(TaskId.PARITY_CHECK, 1, rng_for("x"))

    @pytest.mark.parametrize("task", [TaskId.PALINDROME_VERIFICATION, TaskId.EQUAL_NUMBER])
    def test_rejects_odd_lengths(self, task):
        with pytest.raises(UnsupportedLength):
            generate_instance(task, 5, rng_for("x"))

    def test_seed_path_reproducible(self):
        for task in TaskId:
            a = generate_instance(task, 10, seed_path=f"repro/{task.value}")
            b = generate_instance(task, 10, seed_path=f"repro/{task.value}")
            assert a == b

    @pytest.mark.parametrize(
        "task,length",
        [
            (TaskId.PARITY_CHECK, 20),
            (TaskId.EQUAL_NUMBER, 20),
            (TaskId.PALINDROME_VERIFICATION, 20),
        ],
    )
    def test_boolean_class_balance(self, task, length):
        rng = rng_for(f"balance/{task.value}")
        draws = 10_000
        positives = 0
        for _ in range(draws):
            inst = generate_instance(task, length, rng)
            if oracle_solve(task, inst).value:
                positives += 1
        assert 0.47 <= positives / draws <= 0.53

    def test_equal_number_instances_are_balanced_lists(self):
        rng = rng_for("en/balanced")
        for _ in range(50):
            inst = generate_instance(TaskId.EQUAL_NUMBER, 12, rng)
            assert inst.elements.count("0") == inst.elements.count("1")

    def test_duplicate_list_custom_alphabet(self):
        inst = generate_instance(TaskId.DUPLICATE_LIST, 8, rng_for("dl"), alphabet="xyz")
        assert set(inst.elements) <= set("xyz")
        assert inst.params["alphabet"] == "xyz"

    def test_parity_custom_letter(self):
        inst = generate_instance(TaskId.PARITY_CHECK, 10, rng_for("pc-b"), letter="b")
        assert inst.params["letter"] == "b"
        want = inst.elements.count("b") % 2 == 0
        assert oracle_solve(TaskId.PARITY_CHECK, inst).value is want


class TestBruteForceAgreement:
    @pytest.mark.parametrize("task", [TaskId.PARITY_CHECK, TaskId.EVEN_PAIRS, TaskId.EQUAL_NUMBER, TaskId.DUPLICATE_LIST])
    def test_exhaustive_binary_short(self, task):
        for length in range(1, 9):
            for inst in iter_all_instances(task, length):
                assert oracle_solve(task, inst) == brute_force_oracle(task, inst)

    @pytest.mark.parametrize("task", list(TaskId))
    def test_random_instances(self, task):
        rng = rng_for(f"bf/{task.value}")
        for _ in range(300):
            length = rng.choice([2, 4, 6, 10, 14, 18, 20])
            inst = generate_instance(task, length, rng)
            assert oracle_solve(task, inst) == brute_force_oracle(task, inst)

    def test_brute_force_refuses_large(self):
        inst = generate_instance(TaskId.REVERSE_LIST, 21, rng_for("big"))
        with pytest.raises(InstanceTooLarge):
            brute_force_oracle(TaskId.REVERSE_LIST, inst)

    def test_balanced_binary_lists_length_10(self):
        # every arrangement of five '0's and five '1's
        positions = range(10)
        seen = 0
        for zeros in itertools.combinations(positions, 5):
            elems = ["1"] * 10
            for z in zeros:
                elems[z] = "0"
            inst = make_instance(TaskId.EQUAL_NUMBER, elems)
            assert oracle_solve(TaskId.EQUAL_NUMBER, inst) == brute_force_oracle(TaskId.EQUAL_NUMBER, inst)
            seen += 1
        assert seen == 252


@st.composite
def task_instances(draw, tasks=tuple(TaskId)):
    task = draw(st.sampled_from(tasks))
    if task in (TaskId.EQUAL_NUMBER, TaskId.PALINDROME_VERIFICATION):
        length = draw(st.integers(1, 10)) * 2
    else:
        length = draw(st.integers(2, 20))
    path = draw(st.integers(0, 10**6))
    return generate_instance(task, length, seed_path=f"hyp/{task.value}/{length}/{path}")


class TestProperties:
    @given(task_instances())
    @settings(max_examples=150, deadline=None)
    def test_oracle_equals_brute_force(self, inst):
        assert oracle_solve(inst.task, inst) == brute_force_oracle(inst.task, inst)

    @given(task_instances(tasks=(TaskId.REVERSE_LIST,)))
    @settings(max_examples=60, deadline=None)
    def test_reverse_is_involution(self, inst):
        once = oracle_solve(TaskId.REVERSE_LIST, inst).value
        again = oracle_solve(TaskId.REVERSE_LIST, make_instance(TaskId.REVERSE_LIST, list(once)))
        assert again.value == "".join(inst.elements)

    @given(task_instances(tasks=(TaskId.EVEN_PAIRS,)))
    @settings(max_examples=60, deadline=None)
    def test_even_pairs_counts_runs(self, inst):
        answer = oracle_solve(TaskId.EVEN_PAIRS, inst).value
        runs = 1 + sum(1 for a, b in zip(inst.elements, inst.elements[1:]) if a != b)
        assert answer == runs - 1
        assert 0 <= answer <= inst.length - 1

    @given(task_instances(tasks=(TaskId.CYCLE_NAVIGATION,)))
    @settings(max_examples=60, deadline=None)
    def test_cycle_navigation_neutral_moves(self, inst):
        answer = oracle_solve(TaskId.CYCLE_NAVIGATION, inst).value
        assert answer in range(5)
        stay = make_instance(TaskId.CYCLE_NAVIGATION, list(inst.elements) + ["0"])
        assert oracle_solve(TaskId.CYCLE_NAVIGATION, stay).value == answer
        updown = make_instance(TaskId.CYCLE_NAVIGATION, list(inst.elements) + ["1", "2"])
        assert oracle_solve(TaskId.CYCLE_NAVIGATION, updown).value == answer

    @given(st.lists(st.sampled_from("01"), min_size=2, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_equal_number_is_dyck_condition(self, bits):
        inst = make_instance(TaskId.EQUAL_NUMBER, bits)
        answer = oracle_solve(TaskId.EQUAL_NUMBER, inst).value
        depth, dyck = 0, True
        for b in bits:
            depth += 1 if b == "0" else -1
            if depth < 0:
                dyck = False
        assert answer is (dyck and depth == 0)

    @given(task_instances(tasks=(TaskId.ODDS_FIRST, TaskId.SORTING_LIST)))
    @settings(max_examples=60, deadline=None)
    def test_permutation_outputs(self, inst):
        out = oracle_solve(inst.task, inst).value
        assert sorted(out) == sorted(inst.elements)
        if inst.task is TaskId.SORTING_LIST:
            assert list(out) == sorted(out, key=ord)

    @given(task_instances(tasks=(TaskId.DUPLICATE_LIST,)))
    @settings(max_examples=60, deadline=None)
    def test_duplicate_structure(self, inst):
        out = oracle_solve(TaskId.DUPLICATE_LIST, inst).value
        n = inst.length
        assert len(out) == 2 * n
        assert out[:n] == out[n:] == "".join(inst.elements)


class TestRendering:
    def test_listfied_example(self):
        inst = make_instance(TaskId.EVEN_PAIRS, ["a", "b", "b", "a"])
        assert render_input(inst, InputRendering.LIST_FIED) == "['a', 'b', 'b', 'a']"

    def test_compact_example(self):
        inst = make_instance(TaskId.EVEN_PAIRS, ["a", "b", "b", "a"])
        assert render_input(inst, InputRendering.COMPACT_STRING) == "abba"

    def test_compact_duplicate_string(self):
        inst = make_instance(TaskId.DUPLICATE_LIST, ["a", "b"])
        assert render_input(inst, InputRendering.COMPACT_STRING) == "ab"

    def test_palindrome_marker_rendered(self):
        inst = make_instance(TaskId.PALINDROME_VERIFICATION, ["a", "b", "#", "b", "a"])
        assert render_input(inst, InputRendering.LIST_FIED) == "['a', 'b', '#', 'b', 'a']"

    @given(task_instances())
    @settings(max_examples=80, deadline=None)
    def test_rendering_injective_per_task(self, inst):
        other = generate_instance(inst.task, inst.length, seed_path=inst.seed_path + "/other")
        for rendering in InputRendering:
            if inst.elements != other.elements:
                assert render_input(inst, rendering) != render_input(other, rendering)
            else:
                assert render_input(inst, rendering) == render_input(other, rendering)


class TestDumpFormat:
    def test_record_field_order(self):
        inst = generate_instance(TaskId.PARITY_CHECK, 4, seed_path="dump/pc")
        rec = instance_record(inst)
        assert list(rec.keys()) == ["task", "length", "elements", "params", "oracle"]

    def test_round_trip(self):
        insts = [generate_instance(t, 6 if t not in (TaskId.EQUAL_NUMBER, TaskId.PALINDROME_VERIFICATION) else 6, seed_path=f"dump/{t.value}") for t in TaskId]
        text = dump_instances(insts)
        lines = text.strip().split("\n")
        assert len(lines) == len(insts)
        for line, inst in zip(lines, insts):
            parsed, oracle = parse_instance_record(line)
            assert parsed.elements == inst.elements
            assert oracle == oracle_solve(inst.task, inst)

    def test_malformed_palindrome_rejected(self):
        with pytest.raises(MalformedInstance):
            make_instance(TaskId.PALINDROME_VERIFICATION, ["a", "b", "a"])
        with pytest.raises(MalformedInstance):
            make_instance(TaskId.PALINDROME_VERIFICATION, ["a", "#", "#", "a"])

    def test_bad_alphabet_rejected(self):
        with pytest.raises(MalformedInstance):
            make_instance(TaskId.PARITY_CHECK, ["a", "z"])

    def test_oracle_answer_json_typing(self):
        assert OracleAnswer.from_json(AnswerKind.BOOL, True).value is True
        with pytest.raises(ValueError):
            OracleAnswer.from_json(AnswerKind.INT, True)
        with pytest.raises(ValueError):
            OracleAnswer.from_json(AnswerKind.BOOL, 1)
