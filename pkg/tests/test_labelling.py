import numpy as np
import pytest

from core.affinity import gaussian_affinity, normalize_propagation
from core.clustering import APParams, ClusterAssignment
from core.exceptions import LabellingError
from core.labelling import (
    ExemplarSet, LabelAssignment, LabelMatrix, Labeller, LPParams, ap_refine_exemplars,
    assign_cluster_labels, closed_form_propagation, majority_vote, mean_exemplars,
    propagate_labels, random_exemplars,
)


def oracle_for(labels, n_classes=None):
    labels = list(labels)
    n_classes = n_classes or max(labels) + 1
    return Labeller('oracle', [f"img{i}" for i in range(len(labels))],
                    [f"c{i}" for i in range(n_classes)], true_labels=labels)


# ============== 标注者 ==============

def test_oracle_labeller_records_queries():
    labeller = oracle_for([1, 0, 1])
    assert labeller.label_many([2, 0]).tolist() == [1, 1]
    assert labeller.queried == [2, 0]


def test_file_labeller(tiny_dataset):
    view = tiny_dataset.subset('train')
    labeller = Labeller.from_annotations(view, {'a1-1': 'a', 'b1-1': 'b'})
    assert labeller.label(2) == 1
    with pytest.raises(LabellingError):
        labeller.label(1)


def test_file_labeller_unknown_class(tiny_dataset):
    view = tiny_dataset.subset('train')
    labeller = Labeller.from_annotations(view, {'a1-1': 'thistle'})
    with pytest.raises(LabellingError):
        labeller.label(0)


# ============== 样例选择 ==============

def test_mean_exemplar_hand_case():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [10.0, 0.0], [5.0, 5.0]])
    clusters = ClusterAssignment([0, 0, 0, 1])
    exemplars = mean_exemplars(X, clusters)
    assert exemplars.indices.tolist() == [1, 3]
    assert len(exemplars) == clusters.n_clusters


def test_ap_refine_splits_two_triads(two_triads):
    clusters = ClusterAssignment(np.zeros(6, dtype=int))
    exemplars = ap_refine_exemplars(two_triads, clusters, APParams())
    assert len(exemplars) == 2
    assert exemplars.parent_of.tolist() == [0, 0]
    sub = exemplars.subcluster_of
    assert len(set(sub[:3])) == 1 and len(set(sub[3:])) == 1 and sub[0] != sub[3]


def test_ap_refine_tight_clusters_and_singleton(two_triads):
    X = np.vstack([two_triads, [[0.0, 0.0, 1.0]]])
    clusters = ClusterAssignment([0, 0, 0, 1, 1, 1, 2])
    exemplars = ap_refine_exemplars(X, clusters)
    assert len(exemplars) == 3
    assert 6 in exemplars.indices.tolist()
    assert len(exemplars) >= clusters.n_clusters


def test_random_exemplars():
    assert random_exemplars(5, 5, seed=1).indices.tolist() == [0, 1, 2, 3, 4]
    assert np.array_equal(random_exemplars(100, 10, 3).indices, random_exemplars(100, 10, 3).indices)
    with pytest.raises(LabellingError):
        random_exemplars(5, 6, seed=0)


def test_random_exemplars_uniform():
    counts = np.zeros(100)
    for seed in range(40000):
        counts[random_exemplars(100, 10, seed).indices] += 1
    frequency = counts / 40000
    assert np.all(np.abs(frequency - 0.10) <= 0.01)


# ============== 按簇传递标签 ==============

def test_assign_pure_clusters_is_exact():
    y = [0, 0, 1, 1, 1]
    clusters = ClusterAssignment([0, 0, 1, 1, 1])
    result = assign_cluster_labels(clusters, mean_exemplars(np.eye(5), clusters), oracle_for(y))
    assert result.labels.tolist() == y
    assert result.accuracy(y) == pytest.approx(100.0)
    assert result.percent_labelled() == pytest.approx(40.0)


def test_assign_impure_cluster_mislabels_minority():
    y = [0] * 9 + [1]
    clusters = ClusterAssignment(np.zeros(10, dtype=int))
    exemplars = ExemplarSet([0], 'cluster_mean', cluster_of=[0])
    result = assign_cluster_labels(clusters, exemplars, oracle_for(y, 2))
    assert result.labels.tolist() == [0] * 10
    assert result.accuracy(y) == pytest.approx(90.0)


def test_ap_refine_recovers_minority_subcluster(two_triads):
    y = [0, 0, 0, 1, 1, 1]
    clusters = ClusterAssignment(np.zeros(6, dtype=int))
    result = assign_cluster_labels(clusters, ap_refine_exemplars(two_triads, clusters), oracle_for(y))
    assert result.labels.tolist() == y


def test_assign_requires_exemplar_per_cluster():
    clusters = ClusterAssignment([0, 0, 1])
    exemplars = ExemplarSet([0], 'cluster_mean', cluster_of=[0])
    with pytest.raises(LabellingError):
        assign_cluster_labels(clusters, exemplars, oracle_for([0, 0, 1]))


# ============== 标签传播 ==============

def test_closed_form_three_node_chain():
    X = np.array([[0.0], [0.1], [0.2]])
    exemplars = ExemplarSet([0], 'random')
    params = LPParams(sigma=0.16, tolerance=1e-12)
    result = propagate_labels(X, exemplars, oracle_for([0, 0, 0], 2), params)
    S = normalize_propagation(gaussian_affinity(X, 0.16)).values
    Y = LabelMatrix.one_hot(3, 2, [0], [0]).values
    assert np.max(np.abs(result.confidences - closed_form_propagation(S, Y, 0.2))) <= 1e-6


def test_unlocked_matches_closed_form_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(5, 51))
        c = int(rng.integers(2, 6))
        X = rng.standard_normal((n, 4)) * 0.3
        truth = rng.integers(c, size=n)
        m = int(rng.integers(1, n + 1))
        exemplars = random_exemplars(n, m, int(rng.integers(1 << 30)))
        params = LPParams(sigma=0.5, tolerance=1e-12)
        result = propagate_labels(X, exemplars, oracle_for(truth, c), params)
        S = normalize_propagation(gaussian_affinity(X, 0.5)).values
        Y = LabelMatrix.one_hot(n, c, exemplars.indices, truth[exemplars.indices]).values
        expected = closed_form_propagation(S, Y, 0.2)
        assert result.converged
        assert np.max(np.abs(result.confidences - expected)) <= 1e-6


def test_locked_all_labelled_returns_input_labels():
    X = np.random.default_rng(0).standard_normal((8, 3)) * 0.2
    y = [0, 1, 2, 0, 1, 2, 0, 1]
    result = propagate_labels(X, ExemplarSet(range(8), 'random'), oracle_for(y),
                              LPParams(locked=True))
    assert result.labels.tolist() == y
    assert result.clamp_violations == 0
    assert result.method == 'llp'


def star_instance(n_leaves=100):
    """一个中心样本周围 n_leaves 个互相正交的叶子，距中心 0.64"""
    X = np.zeros((n_leaves + 1, n_leaves + 1))
    X[:, 0] = 1.0
    for k in range(1, n_leaves + 1):
        X[k, k] = 0.64
    y = [0] + [1] * n_leaves
    return X, y


def test_unlocked_propagation_overwrites_user_label():
    X, y = star_instance()
    exemplars = ExemplarSet(range(len(y)), 'random')
    result = propagate_labels(X, exemplars, oracle_for(y), LPParams(locked=False))
    assert result.labels[0] == 1
    assert result.clamp_violations >= 1


def test_locked_propagation_keeps_user_label():
    X, y = star_instance()
    exemplars = ExemplarSet(range(len(y)), 'random')
    result = propagate_labels(X, exemplars, oracle_for(y), LPParams(locked=True))
    assert result.labels[0] == 0
    assert result.clamp_violations == 0


def test_locked_propagation_clamps_on_random_instances():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(10, 40))
        X = rng.standard_normal((n, 3)) * 0.2
        truth = rng.integers(3, size=n)
        exemplars = random_exemplars(n, max(1, n // 4), int(rng.integers(1 << 30)))
        result = propagate_labels(X, exemplars, oracle_for(truth, 3), LPParams(locked=True))
        assert np.array_equal(result.labels[exemplars.indices], truth[exemplars.indices])


def test_propagation_non_convergence_is_flagged():
    X = np.random.default_rng(1).standard_normal((10, 2)) * 0.2
    result = propagate_labels(X, ExemplarSet([0, 1], 'random'), oracle_for([0, 1] * 5),
                              LPParams(max_iterations=1, tolerance=1e-15))
    assert not result.converged
    assert result.iterations == 1


def test_label_matrix_initial():
    Y = LabelMatrix.one_hot(4, 3, [0, 2], [2, 1])
    assert Y.is_initial()
    assert Y.argmax().tolist() == [2, 0, 1, 0]


# ============== 多数投票 ==============

def _assignment(labels, confidences=None, n_classes=2):
    labels = np.asarray(labels)
    if confidences is None:
        confidences = np.eye(n_classes)[labels]
    return LabelAssignment(labels, confidences, [0], labels[:1])


def test_majority_vote_simple():
    result = majority_vote(_assignment([0, 0, 1, 1]), ['p', 'p', 'p', 'q'])
    assert result.labels.tolist() == [0, 0, 0, 1]


def test_majority_vote_single_image_plant_unchanged():
    result = majority_vote(_assignment([1, 0]), ['p', 'q'])
    assert result.labels.tolist() == [1, 0]


def test_majority_vote_tie_uses_confidence():
    confidences = np.array([[0.9, 0.1], [0.1, 0.6]])
    result = majority_vote(_assignment([0, 1], confidences), ['p', 'p'])
    assert result.labels.tolist() == [0, 0]
    confidences = np.array([[0.5, 0.1], [0.1, 0.6]])
    result = majority_vote(_assignment([0, 1], confidences), ['p', 'p'])
    assert result.labels.tolist() == [1, 1]


def test_majority_vote_length_mismatch():
    with pytest.raises(LabellingError):
        majority_vote(_assignment([0, 1]), ['p'])


def test_majority_vote_is_idempotent():
    rng = np.random.default_rng(9)
    for _ in range(20):
        labels = rng.integers(0, 3, size=15)
        confidences = rng.dirichlet(np.ones(3), size=15)
        plant_ids = [f"p{int(k)}" for k in rng.integers(0, 6, size=15)]
        once = majority_vote(_assignment(labels, confidences, 3), plant_ids)
        twice = majority_vote(once, plant_ids)
        assert np.array_equal(twice.labels, once.labels)
