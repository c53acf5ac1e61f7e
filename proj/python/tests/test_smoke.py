import math

import pytest

import psica


def test_simulate_shapes():
    data, oracle = psica.simulate("M5", 60, seed=2)
    assert len(data) == 60
    assert len(oracle) == 60
    assert data.treatment_set == ["T1", "T2", "T3"]
    assert all(set(o) <= {"T1", "T2", "T3"} for o in oracle)


def test_probability_rows_sum_to_one():
    data, _ = psica.simulate("M1", 120, seed=3)
    p = psica.estimate_probabilities(data, B=40, trees=10)
    assert len(p) == 120
    assert all(math.isclose(sum(r), 1.0, abs_tol=1e-9) for r in p)


def test_fit_predict_and_json_round_trip():
    data, oracle = psica.simulate("M5", 300, seed=1)
    tree, probs = psica.fit(data, B=60, trees=20)
    assert tree.num_leaves >= 1
    assert len(probs) == len(data)
    back = psica.Tree.from_json(tree.to_json())
    assert back.to_json() == tree.to_json()
    labels = tree.predict_dataset(data)
    assert [l["leaf"] for l in labels] == [back.predict(data.row(i))["leaf"] for i in range(len(data))]
    metrics = psica.evaluate(tree, data, oracle, psica.relevant_features("M5"))
    assert 0.0 <= metrics["accuracy"] <= 1.0
    assert tree.to_dot().startswith("digraph")


def test_fit_is_deterministic_across_threads():
    data, _ = psica.simulate("M2", 150, seed=4)
    a, _ = psica.fit(data, B=40, trees=10, threads=1)
    b, _ = psica.fit(data, B=40, trees=10, threads=3)
    assert a.to_json() == b.to_json()


def test_constant_effects_keep_all_treatments():
    x = [i / 40 for i in range(40)]
    data = psica.Dataset([("x", "numeric")], [x], [1.0] * 40, ["A", "B"] * 20, ["A", "B"])
    tree, _ = psica.fit(data, B=30, trees=10)
    assert tree.num_leaves == 1
    assert tree.leaves()[0]["potential"] == ["A", "B"]


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        psica.Tree.from_json("{}")
    with pytest.raises(ValueError):
        psica.Dataset([("x", "numeric")], [[0.0]], [1.0], ["Z"], ["A", "B"])
