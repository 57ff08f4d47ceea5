import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import min_work_exhaustive, enumerate_integral_plans, plan_scaled_work
from webcentral.emd import (
    COST_SCALE,
    DiscreteDistribution,
    FlowPlan,
    decentralized_reference,
    emd_between,
    emd_centralization,
    solve_transport,
)
from webcentral.metrics import Layer, ProviderDistribution, centralization_score


def dist(counts, country="US", layer=Layer.HOSTING):
    return ProviderDistribution(country=country, layer=layer, counts=counts)


def matrix_distance(cost):
    return lambda i, j: cost[i][j]


def check_feasible(plan: FlowPlan, a: DiscreteDistribution, r: DiscreteDistribution):
    row_sums = [0.0] * len(a.masses)
    col_sums = [0.0] * len(r.masses)
    for (i, j), f in plan.flows.items():
        assert f > 0
        row_sums[i] += f
        col_sums[j] += f
    for i, mass in enumerate(a.masses):
        assert row_sums[i] == pytest.approx(mass, abs=1e-9)
    for j, mass in enumerate(r.masses):
        assert col_sums[j] == pytest.approx(mass, abs=1e-9)


class TestDecentralizedReference:
    def test_small(self):
        assert decentralized_reference(3).masses == (1.0, 1.0, 1.0)

    def test_single(self):
        assert decentralized_reference(1).masses == (1.0,)

    def test_ten_unit_buckets(self):
        ref = decentralized_reference(10)
        assert len(ref.masses) == 10 and set(ref.masses) == {1.0}

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            decentralized_reference(0)


class TestSolveTransport:
    def test_zero_distance_zero_work(self):
        plan = solve_transport(
            DiscreteDistribution((2.0,)), DiscreteDistribution((2.0,)), lambda i, j: 0.0
        )
        assert plan.total_work == 0.0

    def test_fixed_cost_spread(self):
        plan = solve_transport(
            DiscreteDistribution((2.0,)),
            DiscreteDistribution((1.0, 1.0)),
            lambda i, j: 0.5,
        )
        assert plan.total_work == pytest.approx(1.0, abs=1e-12)

    def test_worked_example_against_uniform(self):
        # work = sum a_i (a_i - 1) / 10 = (30 + 6 + 0) / 10
        a = DiscreteDistribution((6.0, 3.0, 1.0))
        counts = [6, 3, 1]
        plan = solve_transport(
            a, decentralized_reference(10), lambda i, j: (counts[i] - 1) / 10
        )
        assert plan.total_work == pytest.approx(3.6, abs=1e-9)
        check_feasible(plan, a, decentralized_reference(10))

    def test_unbalanced_rejected(self):
        with pytest.raises(ValueError, match="unbalanced problem"):
            solve_transport(
                DiscreteDistribution((2.0,)),
                DiscreteDistribution((3.0,)),
                lambda i, j: 0.0,
            )

    def test_size_cap(self):
        with pytest.raises(ValueError, match="too large"):
            solve_transport(
                DiscreteDistribution((600.0,)),
                decentralized_reference(600),
                lambda i, j: 0.0,
                max_cells=500,
            )

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError, match="ground distance"):
            solve_transport(
                DiscreteDistribution((1.0,)),
                DiscreteDistribution((1.0,)),
                lambda i, j: -0.5,
            )

    def test_asymmetric_costs_pick_cheap_assignment(self):
        # Row 0 must prefer column 1, row 1 column 0.
        cost = [[0.9, 0.1], [0.2, 0.8]]
        plan = solve_transport(
            DiscreteDistribution((1.0, 1.0)),
            DiscreteDistribution((1.0, 1.0)),
            matrix_distance(cost),
        )
        assert plan.total_work == pytest.approx(0.3, abs=1e-12)
        assert plan.flows == {(0, 1): 1, (1, 0): 1}


small_instances = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.integers(min_value=1, max_value=6).flatmap(
        lambda m: st.tuples(
            st.lists(st.integers(0, 6), min_size=n, max_size=n).filter(
                lambda xs: sum(xs) > 0
            ),
            st.lists(st.lists(st.integers(0, 16), min_size=m, max_size=m),
                     min_size=n, max_size=n),
            st.integers(0, 2**32 - 1),
        )
    )
)


class TestOptimality:
    @given(small_instances)
    @settings(max_examples=150, deadline=None)
    def test_matches_exhaustive_search(self, case):
        supplies, sixteenths, _ = case
        total = sum(supplies)
        rng = random.Random(sum(x * 31 for row in sixteenths for x in row))
        m = len(sixteenths[0])
        demands = _random_partition(rng, total, m)
        cost_int = [[x * (COST_SCALE // 16) for x in row] for row in sixteenths]
        a = DiscreteDistribution(tuple(map(float, supplies)))
        r = DiscreteDistribution(tuple(map(float, demands))) if any(demands) else None
        if r is None:
            return
        plan = solve_transport(a, r, lambda i, j: cost_int[i][j] / COST_SCALE)
        check_feasible(plan, a, r)
        got = plan_scaled_work(plan.flows, cost_int)
        expected = min_work_exhaustive(tuple(supplies), tuple(demands), cost_int)
        assert got == expected
        assert plan.total_work == got / COST_SCALE

    @given(small_instances)
    @settings(max_examples=40, deadline=None)
    def test_merge_fast_path_agrees_with_generic(self, case):
        supplies, sixteenths, seed = case
        rng = random.Random(seed)
        m = len(sixteenths[0])
        demands = _random_partition(rng, sum(supplies), m)
        if not any(demands):
            return
        # duplicated columns make the merge path actually merge
        cost = [[row[j % max(1, m // 2)] / 16 for j in range(m)] for row in sixteenths]
        a = DiscreteDistribution(tuple(map(float, supplies)))
        r = DiscreteDistribution(tuple(map(float, demands)))
        merged = solve_transport(a, r, matrix_distance(cost))
        generic = solve_transport(a, r, matrix_distance(cost), merge_equal_columns=False)
        assert merged.total_work == pytest.approx(generic.total_work, abs=1e-12)
        check_feasible(merged, a, r)

    def test_exhaustive_oracle_agrees_with_literal_enumeration(self):
        # validates the memoized search itself on tiny instances
        rng = random.Random(7)
        for supplies in [(1,), (2,), (1, 1), (2, 1), (2, 2)]:
            for demands in [(1,), (2,), (1, 1), (2, 1), (2, 2)]:
                if sum(supplies) != sum(demands):
                    continue
                cost = [
                    [rng.randrange(16) * (COST_SCALE // 16) for _ in demands]
                    for _ in supplies
                ]
                literal = min(
                    sum(
                        plan[i][j] * cost[i][j]
                        for i in range(len(supplies))
                        for j in range(len(demands))
                    )
                    for plan in enumerate_integral_plans(supplies, demands)
                )
                assert min_work_exhaustive(supplies, demands, cost) == literal


class TestEmdCentralization:
    def test_uniform(self):
        assert emd_centralization(dist({f"p{i}": 1 for i in range(10)})) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_monopoly(self):
        assert emd_centralization(dist({"p1": 10})) == pytest.approx(0.9, abs=1e-9)

    def test_worked_example(self):
        assert emd_centralization(dist({"p1": 6, "p2": 3, "p3": 1})) == pytest.approx(
            0.36, abs=1e-9
        )

    @given(
        st.dictionaries(
            st.text(alphabet="abcdefghij", min_size=1, max_size=3),
            st.integers(min_value=1, max_value=30),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_agrees_with_closed_form(self, counts):
        d = dist(counts)
        assert abs(emd_centralization(d) - centralization_score(d).value) <= 1e-9


class TestEmdBetween:
    def euclid(self, i, j):
        return abs(i - j) / 10

    def test_identical_distributions(self):
        a = dist({"p1": 3, "p2": 2})
        assert emd_between(a, a, self.euclid) == pytest.approx(0.0, abs=1e-12)

    def test_all_mass_crosses(self):
        a = dist({"p1": 1})
        b = dist({"p2": 1})
        assert emd_between(a, b, lambda i, j: 1.0 if i != j else 0.0) == pytest.approx(
            1.0, abs=1e-12
        )

    @given(
        st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), min_size=1),
        st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), min_size=1),
    )
    @settings(max_examples=40, deadline=None)
    def test_symmetry(self, ca, cb):
        a, b = dist(ca), dist(cb)
        forward = emd_between(a, b, self.euclid)
        backward = emd_between(b, a, lambda i, j: self.euclid(j, i))
        assert forward == pytest.approx(backward, abs=1e-9)

    def test_zero_distance_zero_work(self):
        a = dist({"p1": 5})
        b = dist({"p2": 3, "p3": 4})
        assert emd_between(a, b, lambda i, j: 0.0) == 0.0


def _random_partition(rng, total, m):
    demands = [0] * m
    for _ in range(total):
        demands[rng.randrange(m)] += 1
    return demands
