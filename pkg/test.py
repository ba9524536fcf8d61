"""
Test file for the top-down induction system.
Run with pytest, or directly with python3 test.py.
"""

import json
import math
import sys

import numpy as np
import pandas as pd
import pytest

from builders.exact_builder import (
    bare_tree_after,
    build_topdown_exact,
    phase_one_bound,
    phase_two_bound,
    robust_size_bound,
    size_bound,
)
from builders.practical_builder import PracticalTopDownBuilder, build_topdown_practical
from core.distribution import ProductDistribution, Restriction, reach_probability
from core.errors import (
    ConfigError,
    DimensionMismatchError,
    EmptySampleError,
    EnumerationBudgetError,
    TreeFormatError,
    UnknownLeafError,
)
from core.oracle import FunctionOracle, TreeOracle, as_oracle
from core.tree_format import load_tree, parse_distribution, parse_tree, save_distribution, save_tree, serialize_tree
from core.trees import (
    BareTree,
    DecisionTree,
    Internal,
    Leaf,
    average_depth,
    leaf_reach_probabilities,
    max_depth,
    route,
    route_many,
)
from engines.exact_engine import (
    Normalization,
    SubfunctionView,
    completion_error,
    cost,
    f_completion,
    influence,
    influence_by_definition,
    leaf_error,
    leaf_scores,
    majority_value,
    pairwise_disagreement,
    score,
    total_influence,
    tree_error,
    variance,
)
from experiments.config import ExperimentConfig, TargetSpec
from experiments.runner import fit_sample_complexity, make_target, run_experiment, sample_complexity_model
from experiments.targets import (
    generate_balanced_target,
    generate_parity_target,
    generate_path_target,
    generate_random_tree,
    has_minimum_size,
    tree_from_truth_table,
)
from main import _parser
from main import main as cli_main
from utils import settings
from utils.growth_loop import GrowthLoop
from utils.sampling import (
    draw_pair,
    draw_pairs,
    empirical_error,
    majority_label,
    score_estimate,
)
from utils.schedules import (
    error_samples_value,
    chernoff_selection_failure,
    excess_error_bound,
    labeling_samples_value,
    schedule_M_EE,
    schedule_M_LL,
    schedule_M_S,
    score_pairs_value,
)
from utils.seeding import derive_rng
from verify.checks import (
    CheckReport,
    check_cost_telescoping,
    check_error_vs_cost,
    check_estimator_unbiasedness,
    check_influence_vs_variance,
    check_leaf_error_vs_influence,
    check_max_influence,
    check_normalizations,
    check_robust_selection,
    check_score_bounds,
    check_size_bound,
    check_variance_chain,
)
from verify.instances import InstanceGenerator, dictator_instance
from verify.reports import write_witness
from verify.suite import SuiteResult, check_instance, run_property_suite


def dictator(n: int = 1) -> DecisionTree:
    return DecisionTree(Internal(0, Leaf(label=-1), Leaf(label=1)), n)


def parity() -> DecisionTree:
    return DecisionTree(Internal(
        0,
        Internal(1, Leaf(label=1), Leaf(label=-1)),
        Internal(1, Leaf(label=-1), Leaf(label=1)),
    ), 2)


def constant(label: int = 1, n: int = 2) -> DecisionTree:
    return DecisionTree(Leaf(label=label), n)


def root_view(target, dist) -> SubfunctionView:
    return SubfunctionView(target, Restriction(), dist.n)


# Core types

def test_distribution_rejects_degenerate_biases():
    with pytest.raises(ValueError):
        ProductDistribution((0.5, 0.0))
    with pytest.raises(ValueError):
        ProductDistribution((1.0,))
    with pytest.raises(ValueError):
        ProductDistribution(())


def test_reach_probability():
    dist = ProductDistribution((0.3, 0.5, 0.2))
    assert reach_probability(dist, Restriction(((0, 1), (2, 0)))) == pytest.approx(0.24, abs=1e-12)
    assert reach_probability(dist, Restriction()) == 1.0
    with pytest.raises(DimensionMismatchError):
        reach_probability(dist, Restriction(((3, 1),)))


def test_restriction_rejects_repeated_coordinate():
    with pytest.raises(ValueError):
        Restriction(((1, 0), (1, 1)))
    r = Restriction(((2, 1),)).extend(0, 0)
    assert r.fixed == ((0, 0), (2, 1))
    assert r.free_coordinates(4) == (1, 3)
    assert Restriction.from_mapping({2: 1, 0: 0}) == r


def test_bare_tree_split_ids_and_restrictions():
    bare = BareTree.single_leaf(3)
    assert bare.leaf_ids() == [0]
    bare, lo, hi = bare.split(0, 1)
    assert (lo, hi) == (1, 2)
    bare, lo2, hi2 = bare.split(2, 0)
    assert (lo2, hi2) == (3, 4)
    assert bare.leaf_ids() == [1, 3, 4]
    assert bare.restriction_of(4).fixed == ((0, 1), (1, 1))
    with pytest.raises(TreeFormatError):
        bare.split(4, 1)
    with pytest.raises(UnknownLeafError):
        bare.restriction_of(0)
    with pytest.raises(KeyError):
        bare.split(99, 0)


def test_tree_rejects_repeated_variable_on_path():
    with pytest.raises(TreeFormatError):
        DecisionTree(Internal(0, Internal(0, Leaf(label=1), Leaf(label=-1)), Leaf(label=1)))


def test_route_matches_route_many():
    tree = parity()
    points = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
    assert route_many(tree, points).tolist() == [1, -1, -1, 1]
    assert [route(tree, p) for p in points] == [1, -1, -1, 1]
    with pytest.raises(DimensionMismatchError):
        route(tree, [0, 1, 1])


def test_leaf_reach_probabilities_sum_to_one():
    bare = BareTree.single_leaf(3)
    bare, _, _ = bare.split(0, 2)
    bare, _, _ = bare.split(1, 0)
    dist = ProductDistribution((0.2, 0.6, 0.7))
    probs = leaf_reach_probabilities(bare, dist)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    assert probs[2] == pytest.approx(0.7, abs=1e-12)


def test_tree_format_parse_and_serialize():
    text = '{"var": 0, "lo": {"leaf": -1}, "hi": {"leaf": 1}}'
    tree = parse_tree(text)
    assert isinstance(tree, DecisionTree)
    assert tree.root == dictator().root
    assert json.loads(serialize_tree(tree)) == json.loads(text)

    bare = parse_tree('{"var": 1, "lo": {"leaf": null, "id": 3}, "hi": {"leaf": null, "id": 4}}')
    assert isinstance(bare, BareTree)
    assert bare.leaf_ids() == [3, 4]
    assert bare.next_id == 5

    for bad in ('{"leaf": true}', '{"leaf": 2}', '{"var": 0, "lo": {"leaf": 1}}', "not json",
                '{"var": 0, "lo": {"var": 0, "lo": {"leaf": 1}, "hi": {"leaf": -1}}, "hi": {"leaf": 1}}'):
        with pytest.raises(TreeFormatError):
            parse_tree(bad)
    with pytest.raises(TreeFormatError):
        parse_tree('{"var": 5, "lo": {"leaf": 1}, "hi": {"leaf": -1}}', dimension=3)


def test_distribution_format():
    dist = parse_distribution('{"biases": [0.3, 0.5]}')
    assert dist.biases == (0.3, 0.5)
    with pytest.raises(TreeFormatError):
        parse_distribution('{"biases": [0.0]}')
    with pytest.raises(TreeFormatError):
        parse_distribution('[0.5]')


def test_path_tree_depths():
    tree = generate_path_target(3, np.random.default_rng(1))
    assert tree.size == 4
    assert max_depth(tree) == 3
    assert average_depth(tree, ProductDistribution.uniform(3)) == pytest.approx(1.75, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 11))
def test_path_average_depth_closed_form(n):
    tree = generate_path_target(n, np.random.default_rng(n))
    expected = sum(k * 2.0 ** -k for k in range(1, n)) + n * 2.0 ** -(n - 1)
    delta = average_depth(tree, ProductDistribution.uniform(n))
    assert delta == pytest.approx(expected, abs=1e-12)
    assert delta <= 2.0


@pytest.mark.parametrize("depth", [0, 1, 2, 3])
def test_balanced_tree_depths(depth):
    tree = generate_balanced_target(depth, 5, np.random.default_rng(depth))
    dist = ProductDistribution((0.5, 0.3, 0.1, 0.7, 0.2))
    assert tree.size == 2 ** depth
    assert max_depth(tree) == depth
    assert average_depth(tree, dist) == pytest.approx(depth, abs=1e-12)


# Oracle

def test_oracle_counts_queries_and_draws():
    dist = ProductDistribution.uniform(3)
    oracle = TreeOracle(parity_on(3), dist)
    points = oracle.draw(np.random.default_rng(0), 10)
    oracle.label_batch(points)
    oracle.label([0, 1, 0])
    assert oracle.random_draws == 10
    assert oracle.label_queries == 11
    oracle.truth_table()
    assert oracle.label_queries == 11


def test_truth_table_is_built_in_blocks(monkeypatch):
    dist = ProductDistribution.uniform(4)
    oracle = TreeOracle(parity_on(4), dist)
    expected = oracle.truth_table(Restriction(((3, 1),)))
    monkeypatch.setattr("core.oracle.TRUTH_TABLE_BLOCK", 3)
    assert np.array_equal(oracle.truth_table(Restriction(((3, 1),))), expected)
    assert expected.shape == (2, 2, 2)
    assert expected[0, 1, 0] == -1 and expected[1, 1, 1] == 1


def test_truth_table_at_twenty_free_coordinates():
    n = 20
    oracle = FunctionOracle(lambda x: np.where(x[:, n - 1] == 1, 1, -1), ProductDistribution.uniform(n))
    view = SubfunctionView(oracle, Restriction(), n)
    assert view.table.shape == (2,) * n
    assert variance(view, oracle.distribution) == pytest.approx(1.0, abs=1e-12)
    assert np.all(view.table[..., 1] == 1) and np.all(view.table[..., 0] == -1)


def parity_on(n: int) -> DecisionTree:
    return DecisionTree(parity().root, n)


def test_function_oracle_validates_values():
    dist = ProductDistribution.uniform(2)
    oracle = FunctionOracle(lambda x: np.where(x[:, 0] == 1, 1, -1), dist)
    assert oracle.label([1, 0]) == 1
    bad = FunctionOracle(lambda x: np.zeros(x.shape[0]), dist)
    with pytest.raises(ValueError):
        bad.label([0, 0])
    with pytest.raises(DimensionMismatchError):
        as_oracle(oracle, ProductDistribution.uniform(3))


# Exact engine

def test_dictator_influence_uniform():
    dist = ProductDistribution.uniform(2)
    view = root_view(dictator(2), dist)
    assert influence(view, dist, 0) == pytest.approx(0.5, abs=1e-12)
    assert influence(view, dist, 1) == 0.0
    assert total_influence(view, dist) == pytest.approx(0.5, abs=1e-12)
    assert variance(view, dist) == pytest.approx(1.0, abs=1e-12)
    assert pairwise_disagreement(view, dist) == pytest.approx(0.5, abs=1e-12)
    assert leaf_error(view, dist) == pytest.approx(0.5, abs=1e-12)


def test_biased_dictator_influence_and_error():
    dist = ProductDistribution((0.3,))
    view = root_view(dictator(), dist)
    assert influence(view, dist, 0) == pytest.approx(0.42, abs=1e-12)
    assert influence(view, dist, 0, Normalization.FLIP) == pytest.approx(1.0, abs=1e-12)
    assert influence(view, dist, 0, Normalization.DOUBLED) == pytest.approx(0.84, abs=1e-12)
    assert leaf_error(view, dist) == pytest.approx(0.3, abs=1e-12)
    assert variance(view, dist) == pytest.approx(0.84, abs=1e-12)
    assert majority_value(view, dist) == -1
    assert influence_by_definition(view, dist, 0) == pytest.approx(0.42, abs=1e-12)


def test_restricted_coordinate_has_zero_influence():
    dist = ProductDistribution.uniform(2)
    view = SubfunctionView(parity(), Restriction(((0, 1),)), 2)
    assert influence(view, dist, 0) == 0.0
    assert influence(view, dist, 1) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DimensionMismatchError):
        influence(view, dist, 2)


def test_majority_tie_resolves_to_plus_one():
    dist = ProductDistribution.uniform(2)
    assert majority_value(root_view(parity(), dist), dist) == 1


def test_enumeration_budget():
    dist = ProductDistribution.uniform(3)
    view = SubfunctionView(parity_on(3), Restriction(), 3, max_free=2)
    with pytest.raises(EnumerationBudgetError):
        variance(view, dist)
    narrower = SubfunctionView(parity_on(3), Restriction(((2, 0),)), 3, max_free=2)
    assert variance(narrower, dist) == pytest.approx(1.0, abs=1e-12)


def test_score_cost_and_completion():
    dist = ProductDistribution.uniform(2)
    f = dictator(2)
    bare = BareTree.single_leaf(2)
    assert score(bare, 0, f, dist) == (pytest.approx(0.5, abs=1e-12), 0)
    assert cost(bare, f, dist) == pytest.approx(0.5, abs=1e-12)
    split, _, _ = bare.split(0, 0)
    assert cost(split, f, dist) == pytest.approx(0.0, abs=1e-12)
    completion = f_completion(split, f, dist)
    assert tree_error(completion, f, dist) == 0.0
    assert completion_error(split, f, dist) == 0.0
    assert tree_error(constant(1, 2), f, dist) == pytest.approx(0.5, abs=1e-12)


def test_leaf_scores_after_one_split():
    dist = ProductDistribution.uniform(2)
    bare, lo, hi = BareTree.single_leaf(2).split(0, 0)
    scores = leaf_scores(bare, parity(), dist)
    assert scores[lo] == (pytest.approx(0.25, abs=1e-12), 1)
    assert scores[hi] == (pytest.approx(0.25, abs=1e-12), 1)


def test_tree_error_against_oracle():
    dist = ProductDistribution((0.2, 0.9))
    oracle = TreeOracle(parity(), dist)
    assert tree_error(parity(), oracle, dist) == 0.0
    expected = 0.2 * 0.9 + 0.8 * 0.1
    assert tree_error(constant(-1, 2), oracle, dist) == pytest.approx(expected, abs=1e-12)


# Greedy with exact influences

def test_greedy_constant_target():
    tree, trace = build_topdown_exact(constant(1, 3), ProductDistribution.uniform(3), 0.1)
    assert tree.size == 1
    assert trace.splits == 0
    assert trace.terminated


def test_greedy_dictator():
    dist = ProductDistribution.uniform(3)
    tree, trace = build_topdown_exact(dictator(3), dist, 0.1)
    assert tree.size == 2
    assert trace.steps[0].coordinate == 0
    assert tree_error(tree, dictator(3), dist) == 0.0


def test_greedy_parity_trace():
    dist = ProductDistribution.uniform(2)
    tree, trace = build_topdown_exact(parity(), dist, 0.01)
    assert trace.terminated
    assert tree.size == 4
    assert [s.score for s in trace.steps] == pytest.approx([0.5, 0.25, 0.25], abs=1e-12)
    assert [(s.leaf_id, s.coordinate) for s in trace.steps] == [(0, 0), (1, 1), (2, 1)]
    assert trace.initial_cost == pytest.approx(1.0, abs=1e-12)
    assert [s.cost_after for s in trace.steps] == pytest.approx([0.5, 0.25, 0.0], abs=1e-12)
    assert [s.leaves for s in trace.steps] == [1, 2, 3]
    assert tree_error(tree, parity(), dist) == 0.0
    assert trace.to_rows()[0]["score"] == pytest.approx(0.5)


def test_greedy_budget_exhausted():
    tree, trace = build_topdown_exact(parity(), ProductDistribution.uniform(2), 0.01, max_splits=1)
    assert not trace.terminated
    assert trace.splits == 1
    assert tree.size == 2


def test_bare_tree_replay_matches_trace():
    _, trace = build_topdown_exact(parity(), ProductDistribution.uniform(2), 0.01)
    assert bare_tree_after(trace, trace.splits, 2).root == trace.bare.root


def test_size_bounds():
    assert size_bound(0.1, 1, 1) == pytest.approx(10 * math.e)
    assert size_bound(0.1, 0, 0) == 1.0
    assert size_bound(0.5, 2, 1) == pytest.approx(math.exp(2))
    assert size_bound(0.1, 3, 3) == pytest.approx((10 * math.e) ** 9, rel=1e-9)
    assert phase_one_bound(0.1, 1, 1) == pytest.approx(10.0)
    assert phase_two_bound(phase_one_bound(0.1, 1, 1), 1, 1) == pytest.approx(size_bound(0.1, 1, 1))
    assert robust_size_bound(0.1, 1, 1) == pytest.approx((20 * math.e) ** 4)
    assert size_bound(0.01, 40, 40) == math.inf


# Schedules

def test_schedule_values():
    assert schedule_M_S(1, 0.1, 0.5, 2) == 488
    assert schedule_M_LL(1, 0.5, 0.1) == 3309
    assert schedule_M_EE(1, 0.5, 0.1) == 650
    assert schedule_M_EE(2, 0.5, 0.1) == 828


def test_schedule_scaling_and_monotonicity():
    assert score_pairs_value(1, 0.1, 0.25, 2) == pytest.approx(2 * score_pairs_value(1, 0.1, 0.5, 2))
    assert labeling_samples_value(1, 0.25, 0.1) == pytest.approx(4 * labeling_samples_value(1, 0.5, 0.1))
    assert error_samples_value(3, 0.2, 0.1) == pytest.approx(32 / 0.04 * math.log(144 / 0.1))
    for j in range(1, 20):
        assert schedule_M_S(j + 1, 0.1, 0.3, 4) >= schedule_M_S(j, 0.1, 0.3, 4)
        assert schedule_M_LL(j + 1, 0.3, 0.1) >= schedule_M_LL(j, 0.3, 0.1)
        assert schedule_M_EE(j + 1, 0.3, 0.1) >= schedule_M_EE(j, 0.3, 0.1)


def test_labeling_schedule_meets_excess_error_hypothesis():
    for j in range(1, 30):
        m = schedule_M_LL(j, 0.2, 0.1)
        assert excess_error_bound(j + 1, j, 0.1, m) <= 0.2 / 8 + 1e-12


def test_selection_failure_bound():
    assert chernoff_selection_failure(1, 2, 120, 0.1) == pytest.approx(4 * math.exp(-1))
    m = schedule_M_S(3, 0.1, 0.2, 5)
    assert chernoff_selection_failure(3, 5, m, 0.2 / 4) < 0.1


def test_schedule_rejects_bad_parameters():
    with pytest.raises(ValueError):
        schedule_M_S(0, 0.1, 0.5, 2)
    with pytest.raises(ValueError):
        schedule_M_LL(1, 1.5, 0.1)
    with pytest.raises(ValueError):
        schedule_M_EE(1, 0.5, 0.0)


# Sampling

def test_draw_pair_differs_only_at_coordinate():
    dist = ProductDistribution((0.3, 0.6, 0.5))
    oracle = TreeOracle(parity_on(3), dist)
    rng = np.random.default_rng(3)
    for _ in range(50):
        (x, fx), (xi, fxi) = draw_pair(oracle, dist, 1, rng)
        assert np.all(np.delete(x, 1) == np.delete(xi, 1))
        assert fx == route(parity_on(3), x)
        assert fxi == route(parity_on(3), xi)
    assert oracle.random_draws == 100
    assert oracle.label_queries == 100


def test_pair_rerandomization_rate():
    dist = ProductDistribution((0.3, 0.5))
    oracle = TreeOracle(dictator(2), dist)
    batch = draw_pairs(oracle, 0, np.random.default_rng(7), 100_000)
    rate = float(np.mean(batch.x[:, 0] != batch.xi[:, 0]))
    assert abs(rate - 0.42) <= 0.01


def test_score_estimate_basic_cases():
    dist = ProductDistribution.uniform(2)
    rng = np.random.default_rng(11)
    flat = draw_pairs(TreeOracle(constant(1, 2), dist), 0, rng, 500)
    assert score_estimate(flat, 0, BareTree.single_leaf(2)) == 0.0

    pairs = draw_pairs(TreeOracle(dictator(2), dist), 0, rng, 500)
    assert score_estimate(pairs, 0, BareTree.single_leaf(2)) == pytest.approx(float(np.mean(pairs.disagree)))

    empty = draw_pairs(TreeOracle(dictator(2), dist), 0, rng, 0)
    with pytest.raises(EmptySampleError):
        score_estimate(empty, 0, BareTree.single_leaf(2))


def test_majority_label():
    assert majority_label(np.array([1, 1, -1])) == 1
    assert majority_label(np.array([], dtype=np.int8)) == 1
    assert majority_label(np.array([1, -1])) == 1
    assert majority_label(np.array([-1, -1, 1])) == -1


def test_empirical_error():
    assert empirical_error({0: 1}, np.array([0, 0, 0, 0]), np.array([1, 1, 1, -1])) == (1, 4)
    assert empirical_error({1: 1, 2: -1}, np.array([1, 2, 2]), np.array([1, -1, -1])) == (0, 3)
    assert empirical_error({1: 1, 2: -1}, np.array([1, 2, 2]), np.array([-1, 1, -1])) == (2, 3)
    with pytest.raises(UnknownLeafError):
        empirical_error({1: 1}, np.array([3]), np.array([1]))


# Greedy from samples

def test_practical_constant_target_stops_immediately():
    dist = ProductDistribution.uniform(2)
    tree, trace, usage = build_topdown_practical(constant(1, 2), dist, 0.3, 0.1, seed=0)
    assert tree.size == 1
    assert tree.root.label == 1
    assert trace.terminated
    assert trace.final_misclassified == 0
    expected = schedule_M_LL(1, 0.3, 0.1) + schedule_M_EE(1, 0.3, 0.1) + 2 * 2 * schedule_M_S(1, 0.1, 0.3, 2)
    assert usage.rows[0].label_queries == expected
    assert usage.rows[0].random_draws == expected


def test_practical_dictator_is_accurate():
    dist = ProductDistribution.uniform(2)
    good = 0
    for seed in range(6):
        tree, trace, _ = build_topdown_practical(dictator(2), dist, 0.15, 0.1, seed=seed)
        if tree_error(tree, dictator(2), dist) <= 0.15 and tree.size <= 4:
            good += 1
    assert good >= 5


def test_practical_holdings_follow_schedules():
    dist = ProductDistribution((0.5, 0.3, 0.7))
    target = parity_on(3)
    builder = PracticalTopDownBuilder(target, dist, 0.3, 0.1, seed=5)
    tree, trace, usage = builder.build(max_splits=3)
    m_s, m_ll, m_ee = builder.schedules(builder.step)
    states = [builder.leaf_state(leaf_id) for leaf_id in builder.bare.leaf_ids()]
    assert sum(len(s.labeling) for s in states) == m_ll
    assert sum(len(s.error) for s in states) == m_ee
    for i in range(3):
        assert sum(len(s.pairs[i]) for s in states) == m_s
    for state in states:
        for batch in state.pairs.values():
            assert np.all(route_many(builder.bare, batch.x) == state.leaf_id)
    labels = builder.leaf_labels()
    assert all(state.label == labels[state.leaf_id] for state in states)
    assert sum(state.misclassified for state in states) == builder.evaluate()["misclassified"]
    assert [row.step for row in usage.rows] == list(range(1, builder.step + 1))
    assert all(a.random_draws < b.random_draws for a, b in zip(usage.rows, usage.rows[1:]))


def test_owner_counted_scores_match_the_pair_estimator():
    dist = ProductDistribution((0.5, 0.3, 0.7, 0.4))
    builder = PracticalTopDownBuilder(parity_on(4), dist, 0.3, 0.1, seed=8)
    builder.build(max_splits=3)
    estimates = builder.score_estimates()
    assert estimates
    for (leaf_id, i), value in estimates.items():
        assert value == score_estimate(builder._pairs[i].batch(), leaf_id, builder.bare)


def test_sample_driven_builds_are_accurate_with_high_probability():
    epsilon, delta = 0.2, 0.1
    misses = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        target = generate_random_tree(n, 3, rng)
        dist = ProductDistribution(tuple(float(p) for p in rng.uniform(0.2, 0.8, size=n)))
        tree, _, _ = build_topdown_practical(target, dist, epsilon, delta, seed=seed, ground_truth=target)
        misses += tree_error(tree, target, dist) > epsilon
    assert misses <= delta * 100


def test_practical_build_is_reproducible():
    dist = ProductDistribution((0.5, 0.3, 0.7))
    first = build_topdown_practical(parity_on(3), dist, 0.2, 0.1, seed=9)
    second = build_topdown_practical(parity_on(3), dist, 0.2, 0.1, seed=9)
    assert first[0] == second[0]
    assert first[1].to_rows() == second[1].to_rows()
    assert first[2].to_frame().equals(second[2].to_frame())


def test_practical_halving_epsilon():
    builder = PracticalTopDownBuilder(dictator(2), ProductDistribution.uniform(2), 0.3, 0.1, seed=0, halve_epsilon=True)
    assert builder.accuracy == pytest.approx(0.15)
    assert builder.schedules(1)[2] == schedule_M_EE(1, 0.15, 0.1)


def test_practical_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_topdown_practical(dictator(2), ProductDistribution.uniform(2), 0.3, 1.0)
    with pytest.raises(ValueError):
        build_topdown_practical(dictator(2), ProductDistribution.uniform(2), 0.0, 0.1)


# Checkers

def test_error_vs_cost_examples():
    dist = ProductDistribution.uniform(2)
    _, trace = build_topdown_exact(constant(1, 2), dist, 0.1)
    report = check_error_vs_cost(constant(1, 2), dist, trace)
    assert report.passed
    assert report.details["max_gap"] == 0.0

    biased = ProductDistribution((0.3,))
    report = check_leaf_error_vs_influence(BareTree.single_leaf(1), dictator(), biased)
    assert report.passed
    assert report.details["max_gap"] == pytest.approx(0.3 - 0.42, abs=1e-12)


def test_max_influence_dictator_probe():
    report = check_max_influence(dictator(), ProductDistribution.uniform(1))
    assert report.passed
    assert report.details["raw_holds_rerandomized"] == 0.0
    assert report.details["raw_holds_flip"] == 1.0
    assert report.details["raw_holds_doubled"] == 1.0


def test_no_normalization_satisfies_every_raw_inequality():
    uniform = ProductDistribution.uniform(1)
    _, trace = build_topdown_exact(dictator(), uniform, 0.1)
    record = check_normalizations(dictator(), uniform, trace)
    assert record.passed and not record.hard
    assert record.details["consistent_rerandomized"] == 0.0
    assert record.details["consistent_flip"] == 1.0
    assert record.details["consistent_doubled"] == 1.0

    biased = ProductDistribution((0.3,))
    _, trace = build_topdown_exact(dictator(), biased, 0.1)
    record = check_normalizations(dictator(), biased, trace)
    assert record.details["raw_max_influence_rerandomized"] == 0.0
    assert record.details["variance_chain_rerandomized"] == 1.0
    assert record.details["variance_chain_flip"] == 0.0
    assert record.details["variance_chain_doubled"] == 0.0
    assert record.details["influence_vs_variance_flip"] == 0.0
    assert record.details["error_vs_cost_doubled"] == 1.0
    assert all(record.details[f"consistent_{name}"] == 0.0 for name in ("rerandomized", "flip", "doubled"))

    result = SuiteResult(check_instance(dictator_instance(p=0.3)) + check_instance(dictator_instance()))
    result.record_normalizations()
    summary = result.summary()
    assert summary["normalizations satisfying every raw inequality"] == "none"
    assert summary["every raw inequality under flip"] == "fails on 1 instances"
    assert summary["every raw inequality under rerandomized"] == "fails on 2 instances"
    assert summary["score bounds with textbook constants"] == "missed on 0 of 2 instances"


def test_inequality_checks_on_path_tree():
    tree = generate_path_target(4, np.random.default_rng(2))
    dist = ProductDistribution.uniform(4)
    assert check_influence_vs_variance(tree, dist).passed
    assert check_max_influence(tree, dist).passed
    assert check_variance_chain(tree, dist).passed


def test_telescoping_and_score_bounds():
    dist = ProductDistribution.uniform(1)
    _, empty_trace = build_topdown_exact(constant(1, 1), dist, 0.1)
    assert check_cost_telescoping(empty_trace).passed

    _, trace = build_topdown_exact(dictator(), dist, 0.1)
    report = check_cost_telescoping(trace)
    assert report.passed
    assert report.details["score_sum"] == pytest.approx(0.5, abs=1e-12)

    bounds = check_score_bounds(trace, dictator(), 0.1, dist)
    assert bounds.passed
    assert bounds.details["stated_high_error_misses"] == 0
    assert bounds.details["stated_high_cost_misses"] == 0

    _, parity_trace = build_topdown_exact(parity(), ProductDistribution.uniform(2), 0.01)
    assert check_cost_telescoping(parity_trace).passed


def test_robust_selection_on_sampled_build():
    dist = ProductDistribution((0.5, 0.4, 0.6))
    _, trace, _ = build_topdown_practical(parity_on(3), dist, 0.2, 0.1, seed=2)
    report = check_robust_selection(trace, parity_on(3), dist)
    assert not report.hard
    assert report.details["steps"] == trace.splits
    assert report.passed


def test_size_bound_check():
    report = check_size_bound(2, 0.1, 1, 1)
    assert report.passed
    assert report.details["bound"] == pytest.approx(27.18281828, rel=1e-8)
    assert not check_size_bound(30, 0.1, 1, 1).passed


def test_estimator_unbiasedness_on_dictator():
    report = check_estimator_unbiasedness(dictator(2), ProductDistribution.uniform(2),
                                          BareTree.single_leaf(2), repetitions=200, pair_count=1000, seed=1)
    assert report.details["probes"] == 2
    assert report.passed

    bare, _, _ = BareTree.single_leaf(2).split(0, 1)
    report = check_estimator_unbiasedness(constant(1, 2), ProductDistribution((0.3, 0.5)), bare,
                                          repetitions=20, pair_count=100, seed=1)
    assert report.passed
    assert report.details["misses"] == 0

    lopsided = ProductDistribution((0.3, 0.5))
    bare, _, hi = BareTree.single_leaf(2).split(0, 0)
    view = SubfunctionView(parity_on(2), bare.restriction_of(hi), 2)
    exact = 0.3 * influence(view, lopsided, 1)
    assert exact == pytest.approx(0.15, abs=1e-12)
    oracle = TreeOracle(parity_on(2), lopsided)
    rng = np.random.default_rng(7)
    estimates = np.array([score_estimate(draw_pairs(oracle, 1, rng, 1000), hi, bare) for _ in range(200)])
    assert abs(float(np.mean(estimates)) - exact) <= 4.0 * float(np.std(estimates, ddof=1)) / np.sqrt(200)
    report = check_estimator_unbiasedness(parity_on(2), lopsided, bare, repetitions=200, pair_count=1000, seed=3)
    assert report.details["probes"] == 2
    assert report.passed


def test_instance_generator_is_reproducible():
    first = InstanceGenerator(4).generate(10)
    second = InstanceGenerator(4).generate(10)
    assert [serialize_tree(i.target) for i in first] == [serialize_tree(i.target) for i in second]
    assert [i.distribution for i in first] == [i.distribution for i in second]
    assert all(1 <= i.n <= 6 for i in first)
    with pytest.raises(ValueError):
        InstanceGenerator(0, max_n=9)


def test_property_suite_vacuous_and_small(tmp_path):
    empty = run_property_suite(0, 0)
    assert empty.reports == []
    assert empty.exit_status == 0

    first = run_property_suite(3, 8, out_dir=tmp_path / "a", estimator_instances=1, repetitions=50, pair_count=200)
    second = run_property_suite(3, 8, out_dir=tmp_path / "b", estimator_instances=1, repetitions=50, pair_count=200)
    assert first.violations == []
    assert first.exit_status == 0
    assert (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()
    assert first.normalization_summary["rerandomized"] is False


def test_estimator_instance_count_is_configurable():
    assert _parser().parse_args(["props"]).estimator_instances == 20
    assert _parser().parse_args(["props", "--estimator-instances", "4"]).estimator_instances == 4
    suite = run_property_suite(3, 2, estimator_instances=2, repetitions=20, pair_count=100, workers=1)
    unbiasedness = [r for r in suite.reports if r.check == "estimator_unbiasedness"]
    assert len(unbiasedness) == 2
    assert len([r for r in suite.reports if r.check == "robust_selection"]) == 2


def test_witness_replays(tmp_path):
    instance = dictator_instance(p=0.3)
    report = CheckReport("error_vs_cost", instance.seed, False, bare=BareTree.single_leaf(1))
    path = write_witness(report, instance, tmp_path)
    assert report.witness == str(path)
    assert load_tree(path / "target.json") == instance.target
    assert isinstance(load_tree(path / "bare.json"), BareTree)


# Experiments

def test_generators():
    rng = np.random.default_rng(0)
    assert generate_balanced_target(0, 3, rng).size == 1
    tree = generate_balanced_target(3, 5, rng)
    assert tree.size == 8
    labels = [info.leaf.label for info in tree.leaves()]
    assert all(labels[k] != labels[k + 1] for k in range(0, 8, 2))
    with pytest.raises(ValueError):
        generate_balanced_target(4, 3, rng)
    assert generate_path_target(1, rng).size == 2
    assert generate_path_target(6, rng).size == 7
    with pytest.raises(ValueError):
        generate_path_target(3, rng, length=4)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_balanced_targets_need_every_leaf(n):
    dist = ProductDistribution.uniform(n)
    for seed in range(40):
        target = generate_balanced_target(3, n, np.random.default_rng([n, seed]))
        learned, trace = build_topdown_exact(target, dist, 1e-9)
        assert trace.terminated
        assert learned.size >= target.size == 8


def test_minimum_size_certificate():
    rng = np.random.default_rng(0)
    collapsed = DecisionTree(Internal(0, Internal(1, Leaf(label=-1), Leaf(label=1)),
                                      Internal(1, Leaf(label=-1), Leaf(label=1))), 2)
    assert not has_minimum_size(collapsed, rng)
    assert has_minimum_size(generate_parity_target([2, 0, 1], 4), rng)
    assert has_minimum_size(parity(), rng)
    assert has_minimum_size(constant(1, 3), rng)


def test_full_depth_balanced_target_is_a_parity():
    signs = (-1) ** np.indices((2,) * 4).sum(axis=0)
    for seed in range(5):
        target = generate_balanced_target(4, 4, np.random.default_rng(seed))
        table = TreeOracle(target, ProductDistribution.uniform(4)).truth_table()
        assert abs(int(np.sum(table * signs))) == 16


def test_tree_from_truth_table():
    table = np.random.default_rng(5).choice(np.array([-1, 1], dtype=np.int8), size=(2, 2, 2, 2))
    tree = tree_from_truth_table(table)
    oracle = TreeOracle(tree, ProductDistribution.uniform(4))
    assert np.array_equal(oracle.truth_table(), table)


def test_make_target_caps_path_length():
    tree = make_target(TargetSpec("path", leaves=8), 5, np.random.default_rng(0))
    assert tree.size == 6
    assert make_target(TargetSpec("constant", label=-1), 3, np.random.default_rng(0)).size == 1


def test_experiment_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "size-vs-n", "repetitions": 0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "size-vs-n", "epsilon": [0.1, 1.5]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "unknown"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "size-vs-n", "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "size-vs-n", "n": 2, "target": {"family": "balanced", "depth": 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "properties", "estimator_instances": -1})
    assert ExperimentConfig.from_dict({"experiment": "properties"}).estimator_instances == 20
    assert ExperimentConfig.from_dict({"experiment": "properties", "estimator_instances": 5}).estimator_instances == 5
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"experiment": "size-vs-n", "n": [3, 4], "biases": [0.5, 0.3]}))
    config = ExperimentConfig.from_json(path)
    assert config.n_values == (3, 4)
    assert config.points() == 4
    assert config.config_hash() == ExperimentConfig.from_json(path).config_hash()
    assert config.config_hash() != config.with_overrides(repetitions=2).config_hash()


def test_single_constant_run(tmp_path):
    config = ExperimentConfig.from_dict({
        "experiment": "single-run", "n": 3, "epsilon": 0.2, "biases": 0.5,
        "target": {"family": "constant", "label": 1}, "repetitions": 1,
    })
    out = tmp_path / "runs.csv"
    result = run_experiment(config, out, workers=1)
    assert len(result.runs) == 1
    row = result.runs.iloc[0]
    assert row["size"] == 1
    assert row["exact_error"] == 0.0
    assert row["status"] == "ok"
    assert out.read_text().startswith("# topdown-runs v1")
    assert (tmp_path / "runs_summary.csv").exists()
    assert (tmp_path / "runs_timing.csv").exists()


def test_experiment_csv_is_deterministic(tmp_path):
    config = ExperimentConfig.from_dict({
        "experiment": "size-vs-n", "n": [3], "epsilon": 0.3, "biases": [0.5, 0.3],
        "target": {"family": "balanced", "depth": 2}, "repetitions": 2, "master_seed": 4,
    })
    first = run_experiment(config, tmp_path / "a.csv", workers=1)
    run_experiment(config, tmp_path / "b.csv", workers=1)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() == (tmp_path / "b_summary.csv").read_bytes()
    recomputed = first.runs.groupby(["target", "n", "epsilon", "bias"])["size"].mean().to_numpy()
    assert np.allclose(recomputed, first.summary["size_mean"].to_numpy())


def test_sample_complexity_fit():
    assert sample_complexity_model(4, 4, 0.5, math.exp(-1)) == pytest.approx(4 * math.log(4) * 4 * math.log(4) * 4)
    rows = []
    for n in (4, 6, 8):
        for eps in (0.15, 0.3):
            draws = 3.0 * sample_complexity_model(5, n, eps, 0.1)
            rows.append({"status": "ok", "size": 5, "n": n, "epsilon": eps, "delta": 0.1, "random_draws": draws})
    c, factor = fit_sample_complexity(pd.DataFrame(rows))
    assert c == pytest.approx(3.0)
    assert factor == pytest.approx(1.0)


# Configuration and command line

def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("TOPDOWN_MAX_FREE_COORDS", "12")
    assert settings.max_free_coords() == 12
    monkeypatch.setenv("TOPDOWN_MAX_FREE_COORDS", "many")
    with pytest.raises(ValueError, match="TOPDOWN_MAX_FREE_COORDS"):
        settings.max_free_coords()
    monkeypatch.setenv("TOPDOWN_WORKERS", "0")
    with pytest.raises(ValueError):
        settings.workers()
    monkeypatch.delenv("TOPDOWN_MASTER_SEED", raising=False)
    assert settings.master_seed() == 0


def test_growth_loop_rejects_negative_budget():
    with pytest.raises(ValueError):
        GrowthLoop(builder=None, max_splits=-1)


def test_derived_streams_are_independent_of_order():
    a = derive_rng(7, 2, 3).random(5)
    derive_rng(7, 0, 1).random(100)
    b = derive_rng(7, 2, 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, derive_rng(7, 2, 4).random(5))


def test_cli_build_and_verify(tmp_path, capsys):
    dist = ProductDistribution.uniform(3)
    save_tree(parity_on(3), tmp_path / "target.json")
    save_distribution(dist, tmp_path / "dist.json")
    code = cli_main(["build", "--target", str(tmp_path / "target.json"), "--dist", str(tmp_path / "dist.json"),
                     "--epsilon", "0.1", "--mode", "exact", "--out", str(tmp_path / "trace.csv")])
    assert code == 0
    learned = load_tree(tmp_path / "trace_tree.json")
    assert tree_error(learned, parity_on(3), dist) <= 0.1
    assert len(pd.read_csv(tmp_path / "trace.csv")) == 3

    code = cli_main(["verify", "--tree", str(tmp_path / "trace_tree.json"),
                     "--target", str(tmp_path / "target.json"), "--dist", str(tmp_path / "dist.json")])
    assert code == 0
    assert "Exact error: 0" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    assert cli_main(["props", "--count", "0"]) == 0
    assert cli_main(["build", "--epsilon", "0.1"]) == 1
    assert cli_main(["verify", "--tree", str(tmp_path / "missing.json"), "--target", "x", "--dist", "y"]) == 1
    (tmp_path / "bad.json").write_text('{"experiment": "size-vs-n", "repetitions": 0}')
    assert cli_main(["run", "--config", str(tmp_path / "bad.json")]) == 1


def main():
    """Run all tests."""
    print("=" * 60)
    print("Top-Down Induction - Test Suite")
    print("=" * 60)
    return pytest.main([__file__, "test_properties.py", "-q"])


if __name__ == "__main__":
    sys.exit(main())
