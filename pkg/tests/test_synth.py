import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.space import FeatureSet
from errors import ParameterError, UsageError
from synth.expression import parse_expression
from synth.functions import ground_truth_pairs, make_function, relu_counterexample, relu_terms, wedge
from synth.gam import flattened, random_gam, symmetric_gam
from synth.registry import parse_gam_name, resolve_function


def test_f1_and_f2_closed_forms():
    f1, f2 = make_function("F1"), make_function("F2")
    assert f1(f1.target) == 240.0
    assert f2(f2.target) == 42.0
    assert f2(f2.baseline) == -42.0


def test_unknown_function_is_a_usage_error():
    with pytest.raises(UsageError):
        make_function("F9")


def test_wedge():
    v = np.array([1.0, -1.0, 1.0])
    assert wedge(v, {0: 1.0, 2: 1.0}) == 1.0
    assert wedge(v, {0: 1.0, 1: 1.0}) == -1.0
    assert wedge(v, {}) == 1.0


@given(st.permutations(list(range(6))))
@settings(max_examples=50)
def test_wedge_ignores_key_order(order):
    v = np.array([1.0, -1.0, 1.0, 1.0, -1.0, 1.0])
    keys = {i: v[i] for i in order}
    assert wedge(v, keys) == 1.0
    keys[order[0]] = -v[order[0]]
    assert wedge(v, keys) == -1.0


def test_ground_truth_pairs():
    f1 = ground_truth_pairs(make_function("F1"))
    assert len(f1) == 45 + 100
    assert (0, 9) in f1 and (10, 20) in f1 and (10, 11) not in f1
    f4 = ground_truth_pairs(make_function("F4"))
    assert {(0, 2), (1, 2), (0, 1)} <= f4
    assert ground_truth_pairs(make_function("F2")) == ground_truth_pairs(make_function("F3"))
    assert len(ground_truth_pairs(make_function("F2"))) == 335


def test_truncated_function_clips_blocks():
    f3 = make_function("F3", p=10)
    assert f3.p == 10
    assert [s.indices for s in f3.ground_truth_sets] == [tuple(range(10))]


def test_relu_counterexample_terms():
    fn = relu_counterexample()
    assert relu_terms(fn.target) == {"x1_x3": 3.0, "x2": 2.0}
    assert fn(fn.target) == 6.0
    assert fn(fn.baseline) == 1.0


def test_random_gam_is_seeded_and_rooted():
    first, second = random_gam(11, 12, 3), random_gam(11, 12, 3)
    assert [s.indices for s in first.sets] == [s.indices for s in second.sets]
    assert first(first.target) == second(second.target)
    assert sorted(i for s in first.sets for i in s) == list(range(12))
    assert all(len(s) >= 2 for s in first.sets)
    for g in first.subfunctions:
        assert g.value(first.baseline) == 0.0
    assert first(first.baseline) == first.bias


def test_random_gam_rejects_infeasible_partition():
    with pytest.raises(ParameterError):
        random_gam(0, 5, 3)


def test_random_gam_overrides_share_structure():
    base = random_gam(2, 10, 2)
    other = random_gam(3, 10, 2, sets=base.sets, target=base.target, baseline=base.baseline)
    assert other.sets == base.sets
    assert np.array_equal(other.target, base.target)
    assert other(base.target) != base(base.target)


def test_flattened_instance_is_equivalent():
    instance = random_gam(5, 14, 4)
    flat = flattened(instance)
    rng = np.random.default_rng(0)
    for v in rng.uniform(-2, 2, size=(20, 14)):
        assert flat(v) == pytest.approx(instance(v), rel=1e-12, abs=1e-12)


def test_without_drops_dependence_on_a_set():
    instance = random_gam(8, 10, 3)
    reduced = instance.without(1)
    v = instance.baseline.copy()
    v[list(instance.sets[1])] = instance.target[list(instance.sets[1])]
    assert reduced(v) == reduced(instance.baseline)


def test_symmetric_gam_mirrors_its_first_two_sets():
    instance = symmetric_gam(4, 9)
    first, second = instance.sets[0], instance.sets[1]
    assert len(first) == len(second)
    assert np.array_equal(instance.target[list(first)], instance.target[list(second)])
    assert instance.expected_attributions()[0] == instance.expected_attributions()[1]


def test_expression_grammar():
    expression = parse_expression("relu(x1 + x3 + 1) + relu(x2) + 1")
    assert expression.p == 3
    assert expression([1.0, 2.0, 1.0]) == 6.0
    assert parse_expression("max(x1, -x2) / 2 - abs(x1)")([1.0, 3.0]) == -0.5


@pytest.mark.parametrize("source", ["__import__('os')", "x0 + 1", "x1 ** 2", "min(x1)", "y1", "x1 if x2 else x3", "'a'"])
def test_expression_rejects_unsupported_syntax(source):
    with pytest.raises(UsageError):
        parse_expression(source)


def test_registry_resolves_named_sources():
    gam = resolve_function("gam:7:12:3")
    assert gam.source.seed == 7 and gam.target.size == 12
    assert resolve_function("sum", target=[1.0, 2.0], baseline=[0.0, 0.0]).fn([1.0, 2.0]) == 3.0
    assert parse_gam_name("gam:1:2:3") == (1, 2, 3)
    with pytest.raises(UsageError):
        parse_gam_name("gam:1:2")
    with pytest.raises(UsageError):
        resolve_function("gam:1:8:2", target=[0.0] * 8)


def test_feature_sets_compare_by_value():
    assert FeatureSet.of(2, 1) == FeatureSet.of(1, 2)
