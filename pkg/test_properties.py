"""
Property-based tests for the exact engine, the greedy builder and the samplers.

Targets, bare trees and product distributions are drawn with hypothesis; every
property is checked by exhaustive enumeration, so dimensions stay small.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from builders.exact_builder import bare_tree_after, build_topdown_exact
from core.distribution import ProductDistribution, Restriction
from core.trees import BareTree, DecisionTree, leaf_reach_probabilities, route_many
from engines.exact_engine import (
    SubfunctionView,
    completion_error,
    cost,
    influence,
    influence_by_definition,
    leaf_error,
    leaf_views,
    pairwise_disagreement,
    variance,
)
from experiments.targets import generate_random_tree, tree_from_truth_table
from utils.sampling import empirical_error, majority_label
from utils.schedules import schedule_M_EE, schedule_M_LL, schedule_M_S
from verify.checks import (
    check_cost_telescoping,
    check_disagreement_vs_depth,
    check_error_vs_cost,
    check_influence_vs_variance,
    check_leaf_error_vs_influence,
    check_max_influence,
    check_score_bounds,
    check_variance_chain,
)

_TOL = 1e-10

_PROPERTY_SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

_bias = st.floats(min_value=0.05, max_value=0.95, allow_nan=False, allow_infinity=False)


@st.composite
def distributions(draw, n):
    return ProductDistribution(tuple(draw(st.lists(_bias, min_size=n, max_size=n))))


@st.composite
def targets(draw, max_n=5):
    """A (target tree, distribution) pair from either a random tree or a random truth table."""
    n = draw(st.integers(min_value=1, max_value=max_n))
    if draw(st.booleans()):
        values = draw(st.lists(st.sampled_from([-1, 1]), min_size=2 ** n, max_size=2 ** n))
        tree = tree_from_truth_table(np.array(values, dtype=np.int8).reshape((2,) * n))
        tree = DecisionTree(tree.root, n)
    else:
        seed = draw(st.integers(min_value=0, max_value=2 ** 32 - 1))
        tree = generate_random_tree(n, min(n, 4), np.random.default_rng(seed))
    return tree, draw(distributions(n))


@st.composite
def bare_trees(draw, n):
    """A bare tree grown by splitting random leaves on random free coordinates."""
    bare = BareTree.single_leaf(n)
    for _ in range(draw(st.integers(min_value=0, max_value=6))):
        choices = [
            (info.leaf.id, i)
            for info in bare.leaves()
            for i in info.restriction.free_coordinates(n)
        ]
        if not choices:
            break
        leaf_id, var = draw(st.sampled_from(choices))
        bare, _, _ = bare.split(leaf_id, var)
    return bare


@st.composite
def instances(draw, max_n=5):
    target, dist = draw(targets(max_n))
    return target, dist, draw(bare_trees(dist.n))


_labels = st.lists(st.sampled_from([-1, 1]), min_size=0, max_size=40)


class TestTreeProperties:
    """Reach probabilities and routing."""

    @given(data=instances())
    @_PROPERTY_SETTINGS
    def test_reach_probabilities_sum_to_one(self, data):
        target, dist, bare = data
        assert sum(leaf_reach_probabilities(bare, dist).values()) == pytest.approx(1.0, abs=_TOL)
        assert sum(leaf_reach_probabilities(target, dist).values()) == pytest.approx(1.0, abs=_TOL)

    @given(data=instances(), seed=st.integers(min_value=0, max_value=1000))
    @_PROPERTY_SETTINGS
    def test_points_reach_the_leaf_whose_restriction_they_satisfy(self, data, seed):
        _, dist, bare = data
        points = dist.sample(np.random.default_rng(seed), 64)
        leaves = route_many(bare, points)
        for leaf_id in bare.leaf_ids():
            mask = bare.restriction_of(leaf_id).agrees(points)
            assert np.array_equal(mask, leaves == leaf_id)


class TestInfluenceProperties:
    """Closed forms of the exact engine against their definitions."""

    @given(data=instances(max_n=4))
    @_PROPERTY_SETTINGS
    def test_closed_form_influence_matches_definition(self, data):
        target, dist, bare = data
        for view in leaf_views(bare, target, dist).values():
            for i in range(dist.n):
                assert influence(view, dist, i) == pytest.approx(influence_by_definition(view, dist, i), abs=_TOL)

    @given(data=targets())
    @_PROPERTY_SETTINGS
    def test_variance_error_and_disagreement(self, data):
        target, dist = data
        view = SubfunctionView(target, Restriction(), dist.n)
        var = variance(view, dist)
        assert 0.0 <= var <= 1.0 + _TOL
        assert pairwise_disagreement(view, dist) == pytest.approx(var / 2.0, abs=_TOL)
        assert leaf_error(view, dist) <= var / 2.0 + _TOL

    @given(data=instances())
    @_PROPERTY_SETTINGS
    def test_restricted_coordinates_have_zero_influence(self, data):
        target, dist, bare = data
        for view in leaf_views(bare, target, dist).values():
            for i, _ in view.restriction:
                assert influence(view, dist, i) == 0.0

    @given(data=instances())
    @_PROPERTY_SETTINGS
    def test_leaf_error_at_most_influence(self, data):
        target, dist, bare = data
        assert check_leaf_error_vs_influence(bare, target, dist).passed


class TestStructuralInequalities:
    """Inequalities relating influence, variance and depth of the target tree."""

    @given(data=targets())
    @_PROPERTY_SETTINGS
    def test_influence_error_variance_chain(self, data):
        target, dist = data
        assert check_variance_chain(target, dist).passed

    @given(data=instances())
    @_PROPERTY_SETTINGS
    def test_influence_error_variance_chain_at_every_leaf(self, data):
        target, dist, bare = data
        assert check_variance_chain(target, dist, bare).passed

    @given(data=targets())
    @_PROPERTY_SETTINGS
    def test_some_coordinate_is_influential(self, data):
        target, dist = data
        assert check_influence_vs_variance(target, dist).passed
        assert check_max_influence(target, dist).passed
        assert check_disagreement_vs_depth(target, dist).passed

    @given(data=instances())
    @_PROPERTY_SETTINGS
    def test_completion_error_at_most_cost(self, data):
        target, dist, bare = data
        assert completion_error(bare, target, dist) <= cost(bare, target, dist) + _TOL


class TestGreedyProperties:
    """Invariants of the greedy builder with exact influences."""

    @given(data=targets(), epsilon=st.sampled_from([0.05, 0.1, 0.2, 0.3]))
    @_PROPERTY_SETTINGS
    def test_greedy_trace_invariants(self, data, epsilon):
        target, dist = data
        tree, trace = build_topdown_exact(target, dist, epsilon)
        assert check_cost_telescoping(trace).passed
        assert check_error_vs_cost(target, dist, trace).passed
        assert check_score_bounds(trace, target, epsilon, dist).passed
        assert tree.size == trace.splits + 1
        assert [step.leaves for step in trace.steps] == list(range(1, trace.splits + 1))
        costs = [trace.initial_cost] + [step.cost_after for step in trace.steps]
        assert all(b <= a + _TOL for a, b in zip(costs, costs[1:]))
        if trace.terminated:
            assert trace.final_error <= epsilon + _TOL

    @given(data=targets(max_n=4))
    @_PROPERTY_SETTINGS
    def test_greedy_prefixes_replay(self, data):
        target, dist = data
        _, trace = build_topdown_exact(target, dist, 0.05)
        for k, step in enumerate(trace.steps):
            prefix = bare_tree_after(trace, k, dist.n)
            assert cost(prefix, target, dist) == pytest.approx(step.cost_before, abs=_TOL)
        assert bare_tree_after(trace, trace.splits, dist.n).root == trace.bare.root


class TestSamplingProperties:
    """Majority labels, empirical errors and schedules."""

    @given(labels=_labels)
    def test_majority_label_is_a_majority(self, labels):
        values = np.array(labels, dtype=np.int8)
        label = majority_label(values)
        assert label in (-1, 1)
        assert np.sum(values == label) >= np.sum(values == -label)
        if np.sum(values == 1) != np.sum(values == -1):
            assert majority_label(-values) == -label

    @given(labels=_labels, leaf_label=st.sampled_from([-1, 1]))
    def test_empirical_error_counts_mismatches(self, labels, leaf_label):
        values = np.array(labels, dtype=np.int8)
        mc, total = empirical_error({0: leaf_label}, np.zeros(len(values), dtype=np.int64), values)
        assert total == len(values)
        assert mc == int(np.sum(values != leaf_label))

    @given(
        j=st.integers(min_value=1, max_value=500),
        epsilon=st.floats(min_value=0.01, max_value=0.99),
        delta=st.floats(min_value=0.01, max_value=0.99),
        n=st.integers(min_value=1, max_value=40),
    )
    def test_schedules_grow_with_step(self, j, epsilon, delta, n):
        assert schedule_M_S(j + 1, delta, epsilon, n) >= schedule_M_S(j, delta, epsilon, n) >= 1
        assert schedule_M_LL(j + 1, epsilon, delta) > schedule_M_LL(j, epsilon, delta) >= 1
        assert schedule_M_EE(j + 1, epsilon, delta) >= schedule_M_EE(j, epsilon, delta) >= 1
