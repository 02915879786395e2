import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from analysis.detect import (
    ContextRegime,
    DetectorConfig,
    InteractionRanking,
    PairStrength,
    detect_full_expectation,
    detect_pairs,
    interaction_matrix,
    omega_pair,
    redundancy_curve,
)
from analysis.metrics import overlap_ratio, ranking_auc, top_k_pairs
from core.space import Context, HConvention
from errors import CapacityError, InertFeatureError, ParameterError
from synth.functions import ground_truth_pairs, make_function
from tests.helpers import black_box, synthetic_box


def test_linear_function_has_no_interactions():
    bb = black_box(lambda v: float(3 * v[0] - 2 * v[1] + v[2]), [1, 2, 3], [0, 0, 0])
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        assert omega_pair(bb, i, j, Context.full(3)) == 0.0


def test_product_strength_under_both_step_conventions():
    fn = lambda v: float(v[0] * v[1])
    unit = black_box(fn, [1, 1], [-1, -1])
    assert omega_pair(unit, 0, 1, Context.empty(2)) == 16.0
    eq4 = black_box(fn, [1, 1], [-1, -1], HConvention.EQ4)
    assert omega_pair(eq4, 0, 1, Context.empty(2)) == 1.0


def test_f1_pinned_strengths():
    _, eq4 = synthetic_box("F1", h=HConvention.EQ4)
    for ctx in (Context.full(40), Context.empty(40), Context.of(40, range(0, 40, 3))):
        assert omega_pair(eq4, 0, 1, ctx) == 4.0
    _, unit = synthetic_box("F1")
    assert omega_pair(unit, 0, 1, Context.full(40)) == 64.0


def test_f3_depends_on_the_context():
    _, bb = synthetic_box("F3", h=HConvention.EQ4)
    assert omega_pair(bb, 0, 1, Context.full(40)) == 0.0
    assert omega_pair(bb, 0, 1, Context.empty(40)) == 0.25


def test_omega_is_symmetric_and_rejects_bad_pairs():
    bb = black_box(lambda v: float(v[0] * v[1] ** 2 + v[2]), [1, 2, 3], [0, 2, 1])
    with pytest.raises(InertFeatureError):
        omega_pair(bb, 0, 1, Context.full(3))
    with pytest.raises(ParameterError):
        omega_pair(bb, 2, 2, Context.full(3))
    assert omega_pair(bb, 0, 2, Context.full(3)) == omega_pair(bb, 2, 0, Context.full(3))


@given(
    st.lists(st.floats(min_value=-3, max_value=3), min_size=4, max_size=4),
    st.integers(min_value=0, max_value=15),
)
@settings(max_examples=100, deadline=None)
def test_omega_symmetry_and_non_negativity(coefs, mask):
    a, b, c, d = coefs
    fn = lambda v: float(a * v[0] * v[1] + b * v[1] * v[2] * v[3] + c * v[0] ** 2 * v[3] + d * v[2])
    bb = black_box(fn, [1.0, 2.0, -1.0, 0.5], [0.0, -1.0, 1.0, 2.0])
    ctx = Context(4, mask)
    for i in range(4):
        for j in range(i + 1, 4):
            value = omega_pair(bb, i, j, ctx)
            assert value >= 0.0
            assert value == omega_pair(bb, j, i, ctx)


@given(st.lists(st.floats(min_value=-2, max_value=2), min_size=5, max_size=5))
@settings(max_examples=50, deadline=None)
def test_additive_function_scores_zero(target):
    bb = black_box(lambda v: float(np.sum(np.sin(v) + v ** 3)), target, [t + 1.0 for t in target])
    ranking = detect_pairs(bb)
    assert all(ps.strength <= 1e-20 for ps in ranking.pairs)


def test_scaling_f_scales_strength_by_c_squared():
    fn = lambda v: float(v[0] * v[1] * v[2] + v[1] * v[3])
    target, baseline = [1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 0.0, 1.0]
    plain = detect_pairs(black_box(fn, target, baseline))
    scaled = detect_pairs(black_box(lambda v: 2.0 * fn(v), target, baseline))
    for ps in plain.pairs:
        assert scaled.strength(ps.i, ps.j) == pytest.approx(4.0 * ps.strength, rel=1e-12)


@pytest.mark.parametrize("name", ["F1", "F2", "F3", "F4"])
def test_archdetect_separates_ground_truth(name):
    fn, bb = synthetic_box(name)
    ranking = detect_pairs(bb)
    truth = ground_truth_pairs(fn)
    for ps in ranking.pairs:
        assert (ps.strength > 0) == ((ps.i, ps.j) in truth)
    assert ranking_auc(ranking, truth) == 1.0
    assert bb.call_count <= 40 * 39 + 2 * 40 + 2


@pytest.mark.parametrize(
    "name, regime, expected",
    [
        ("F3", "target-only", 105 / 134),
        ("F3", "baseline-only", 105 / 134),
        ("F2", "baseline-only", 0.5),
        ("F4", "target-only", 192.5 / 193),
    ],
)
def test_single_context_regimes_miss_interactions(name, regime, expected):
    fn, bb = synthetic_box(name)
    ranking = detect_pairs(bb, DetectorConfig.parse(regime))
    assert ranking_auc(ranking, ground_truth_pairs(fn)) == pytest.approx(expected, abs=1e-12)


def test_target_only_misses_the_baseline_triggered_block_of_f3():
    _, bb = synthetic_box("F3")
    ranking = detect_pairs(bb, DetectorConfig(contexts=ContextRegime.TARGET_ONLY))
    assert ranking.strength(0, 1) == 0.0
    assert ranking.strength(12, 25) > 0.0


def test_ranking_order_and_frame():
    _, bb = synthetic_box("F2")
    ranking = detect_pairs(bb)
    strengths = [ps.strength for ps in ranking.pairs]
    assert strengths == sorted(strengths, reverse=True)
    assert (ranking.pairs[0].i, ranking.pairs[0].j) == (10, 11)
    frame = ranking.to_frame()
    assert list(frame.columns) == ["i", "j", "strength", "omega_target", "omega_baseline"]
    assert len(frame) == 780
    assert ranking.pairs[0].omega("target") == 16.0
    assert ranking.pairs[0].omega("baseline") == 0.0


def test_select_honors_top_k_threshold_and_floor():
    _, bb = synthetic_box("F2")
    ranking = detect_pairs(bb)
    assert len(ranking.select()) == 335
    assert len(ranking.select(top_k=5)) == 5
    assert len(ranking.select(threshold=5.0)) == 45


def test_interaction_matrix_is_symmetric():
    _, bb = synthetic_box("F1", p=30)
    matrix = interaction_matrix(detect_pairs(bb)).to_numpy()
    assert np.array_equal(matrix, matrix.T)
    assert np.all(np.diag(matrix) == 0)
    assert matrix[10, 20] > 0 and matrix[10, 11] == 0


def test_detection_is_deterministic_across_workers():
    fn = make_function("F4")
    first = detect_pairs(black_box(fn, fn.target, fn.baseline), DetectorConfig.parse("random:3", seed=5))
    second = detect_pairs(black_box(fn, fn.target, fn.baseline),
                          DetectorConfig.parse("random:3", seed=5, workers=4))
    assert first.pairs == second.pairs


def test_full_expectation_examples():
    product = black_box(lambda v: float(v[0] * v[1]), [1, 1, 1, 1], [-1, -1, -1, -1])
    assert detect_full_expectation(product, 0, 1) == 16.0

    f3 = make_function("F3", p=10)
    bb = black_box(f3, f3.target, f3.baseline, HConvention.EQ4)
    expected = detect_full_expectation(bb, 0, 1)
    assert 0.0 < expected < 0.25
    assert expected == pytest.approx(0.25 / 256)


def test_full_expectation_respects_the_cap():
    bb = black_box(lambda v: float(v[0] * v[1]), [1.0] * 17, [0.0] * 17)
    with pytest.raises(CapacityError):
        detect_full_expectation(bb, 0, 1)
    with pytest.raises(CapacityError):
        detect_pairs(bb, DetectorConfig.parse("full"))


@pytest.mark.parametrize("seed", range(50))
def test_archdetect_matches_full_expectation_on_pairwise_functions(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(3, 13))
    coefs = np.triu(rng.uniform(-2, 2, size=(p, p)) * (rng.random((p, p)) < 0.4), k=1)
    linear = rng.uniform(-1, 1, size=p)
    fn = lambda v: float(v @ coefs @ v + linear @ v)
    target = rng.uniform(-2, 2, size=p)
    baseline = target + rng.uniform(0.5, 2.0, size=p)

    arch = detect_pairs(black_box(fn, target, baseline))
    full = detect_pairs(black_box(fn, target, baseline), DetectorConfig.parse("full"))
    for ps in arch.pairs:
        assert ps.strength == pytest.approx(full.strength(ps.i, ps.j), rel=1e-9, abs=1e-12)
    assert [(ps.i, ps.j) for ps in arch.select()] == [(ps.i, ps.j) for ps in full.select()]


def test_redundancy_on_f2_is_stable_with_ground_truth_k():
    _, bb = synthetic_box("F2")
    curve = redundancy_curve(bb, "fixed", N=6, k=335, seed=0)
    assert list(curve.index) == [2, 3, 4, 5, 6]
    assert (curve == 1.0).all()


@pytest.mark.parametrize("sequence", ["fixed", "random"])
def test_redundancy_is_flat_for_context_independent_interactions(sequence):
    _, bb = synthetic_box("F1")
    curve = redundancy_curve(bb, sequence, N=5, k=145, seed=3)
    assert (curve == 1.0).all()


def test_redundancy_rejects_bad_arguments():
    _, bb = synthetic_box("F1", p=10)
    with pytest.raises(ParameterError):
        redundancy_curve(bb, "fixed", N=1, k=3)
    with pytest.raises(ParameterError):
        redundancy_curve(bb, "sideways", N=3, k=3)


def test_metric_helpers():
    assert top_k_pairs([(0, 2), (0, 1), (1, 2)], [1.0, 1.0, 3.0], 2) == [(1, 2), (0, 1)]
    assert overlap_ratio([(0, 1), (1, 2)], [(1, 2), (2, 3)], 2) == 0.5


def test_strength_lookup_ignores_pair_order():
    ranking = InteractionRanking(p=3, pairs=(PairStrength(0, 2, 5.0), PairStrength(0, 1, 1.0)))
    assert ranking.strength(2, 0) == ranking.strength(0, 2) == 5.0
    assert ranking.strength(1, 0) == 1.0
    with pytest.raises(KeyError):
        ranking.strength(1, 2)
