import json

import numpy as np
import pytest

from ratebound.errors import GridTooLarge, InvalidTaskId, ParseError, SchemaError
from ratebound.tasks import (builtin, grid_task, grid_utility, load_task, save_task,
                             two_task_problem, validate_task)


def oracle_grid_utility(bits: str, task_id: int) -> int:
    n = int(round(len(bits) ** 0.5))
    rows = [bits[i * n:(i + 1) * n] for i in range(n)]
    cols = ["".join(r[j] for r in rows) for j in range(n)]
    colored = bits.count("1")
    if task_id == 1:
        ok = any(r == "0" * n for r in rows) and any(c == "0" * n for c in cols)
        return colored if ok else 0
    if task_id == 2:
        return 4 if colored == 4 else 0
    return colored if colored % 2 == 0 else 0


class TestTwoTask:
    def test_table(self, two_task):
        assert two_task.actions.labels == ("[0,0]", "[0,1]", "[0.7,0]", "[1,1]")
        np.testing.assert_array_equal(two_task.utility, [[0, 0, 0.7, 1], [0, 1, 0.7, 0]])
        np.testing.assert_array_equal(two_task.p_y.mass, [0.5, 0.5])

    def test_structure(self, two_task):
        u = two_task.utility
        assert set(np.flatnonzero(u[0] == u[0].max())).isdisjoint(np.flatnonzero(u[1] == u[1].max()))
        sub = two_task.actions.index("[0.7,0]")
        for row in u:
            second = np.sort(np.unique(row))[-2]
            assert row[sub] == second and (row == second).sum() == 1


class TestGridUtility:
    def test_examples(self):
        assert [grid_utility([0] * 9, t) for t in (1, 2, 3)] == [0, 0, 0]
        block = [1, 1, 0, 1, 1, 0, 0, 0, 0]
        assert [grid_utility(block, t) for t in (1, 2, 3)] == [4, 4, 4]
        eight = [1, 1, 1, 1, 0, 1, 1, 1, 1]
        assert [grid_utility(eight, t) for t in (1, 2, 3)] == [0, 0, 8]

    def test_matches_oracle_exhaustively(self, grid3):
        for j, bits in enumerate(grid3.actions):
            for t in (1, 2, 3):
                assert grid3.utility[t - 1, j] == oracle_grid_utility(bits, t)

    def test_invalid(self):
        with pytest.raises(InvalidTaskId):
            grid_utility([0] * 9, 4)
        with pytest.raises(ValueError):
            grid_utility([0] * 8, 1)
        with pytest.raises(ValueError):
            grid_utility([2] * 9, 1)


class TestGridTask:
    def test_sizes(self, grid3):
        assert grid3.n_actions == 512 and grid3.n_observations == 3
        assert grid_task(2).n_actions == 16
        assert grid3.actions[0] == "000000000" and grid3.actions[-1] == "111111111"

    def test_maxima(self, grid3):
        assert tuple(grid3.utility.max(axis=1)) == (4, 4, 8)

    def test_maximizer_sets(self, grid3):
        u = grid3.utility
        best = [set(np.flatnonzero(row == row.max())) for row in u]
        assert len(best[0]) == 9 and len(best[2]) == 9
        assert best[0] < best[1]
        assert set(np.unique(u[1])) <= {0, 4}
        assert (u[2] % 2 == 0).all()

    def test_too_large(self):
        with pytest.raises(GridTooLarge):
            grid_task(5)
        with pytest.raises(ValueError):
            grid_task(1)


class TestTaskFiles:
    def test_round_trip(self, two_task, grid3):
        assert load_task(save_task(two_task)) == two_task
        assert load_task(save_task(grid3).encode("utf-8")) == grid3

    def test_default_p_y(self):
        doc = {"actions": ["a", "b"], "observations": ["1", "2", "3"],
               "utility": [[0, 1], [1, 0], [0.5, 0.5]]}
        t = load_task(json.dumps(doc))
        np.testing.assert_allclose(t.p_y.mass, [1 / 3] * 3)

    def test_wrong_row_length(self):
        doc = {"actions": ["a", "b"], "observations": ["1", "2"], "utility": [[0, 1], [1]]}
        with pytest.raises(SchemaError) as info:
            load_task(json.dumps(doc))
        assert info.value.field == "utility[1]"
        assert "utility[1]" in str(info.value)

    @pytest.mark.parametrize("patch, field", [
        ({"utility": [[0, 1], [1, float("inf")]]}, "utility[1]"),
        ({"utility": [[0, 1], [1, float("nan")]]}, "utility[1]"),
        ({"p_y": [0.6, 0.6]}, "p_y"),
        ({"p_y": [1.0]}, "p_y"),
        ({"actions": ["a", "a"]}, "actions"),
        ({"observations": "12"}, "observations"),
        ({"utility": [[0, "x"], [1, 0]]}, "utility[0]"),
    ])
    def test_schema_errors(self, patch, field):
        doc = {"actions": ["a", "b"], "observations": ["1", "2"], "utility": [[0, 1], [1, 0]]}
        doc.update(patch)
        with pytest.raises(SchemaError) as info:
            load_task(json.dumps(doc))
        assert info.value.field == field

    @pytest.mark.parametrize("text", ["{", "[1, 2", b"\xff\xfe", ""])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            load_task(text)

    def test_loss_documents(self):
        doc = {"actions": ["a", "b"], "observations": ["1"], "loss": [[2, 1]]}
        np.testing.assert_array_equal(load_task(json.dumps(doc)).utility, [[-2, -1]])

    def test_validate(self, two_task):
        assert validate_task(two_task) == []
        assert validate_task(json.loads(save_task(two_task))) == []
        assert validate_task([1, 2]) != []
        assert any("utility" in v for v in validate_task({"actions": ["a"], "observations": ["y"]}))


def test_builtin_names():
    assert builtin("two-task") == two_task_problem()
    assert builtin("grid3").n_actions == 512
    with pytest.raises(KeyError):
        builtin("three-task")
