import numpy as np
import pytest

from core.classifier import (
    SoftmaxModel, TrainConfig, classify_plants, predict_scores, train_softmax,
)
from core.exceptions import ClassifierError, DimensionMismatchError, SingleClassError


def separable_blobs(seed=0, n=20):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal([2.0, 0.0], 0.3, (n, 2)), rng.normal([-2.0, 0.0], 0.3, (n, 2))])
    y = np.array([0] * n + [1] * n)
    return X, y


def fixed_model(weights, bias=None):
    weights = np.asarray(weights, dtype=float)
    bias = np.zeros(weights.shape[0]) if bias is None else bias
    return SoftmaxModel(weights, bias, [f"c{i}" for i in range(weights.shape[0])])


def test_train_separable_blobs():
    X, y = separable_blobs()
    model = train_softmax(X, y)
    assert np.array_equal(np.argmax(predict_scores(model, X), axis=1), y)
    assert model.loss_history[-1] < model.loss_history[0]


def test_train_duplicated_samples_same_predictions():
    X, y = separable_blobs(seed=1)
    original = train_softmax(X, y)
    doubled = train_softmax(np.vstack([X, X]), np.concatenate([y, y]))
    points = np.random.default_rng(2).standard_normal((50, 2)) * 3
    assert np.array_equal(np.argmax(predict_scores(original, points), axis=1),
                          np.argmax(predict_scores(doubled, points), axis=1))


def test_train_single_class_is_error():
    with pytest.raises(SingleClassError):
        train_softmax(np.eye(3), [1, 1, 1])


def test_train_keeps_all_class_names():
    X, y = separable_blobs()
    model = train_softmax(X, y, TrainConfig(epochs=10), class_names=['a', 'b', 'c'])
    assert model.weights.shape == (3, 2)


def test_train_config_validation():
    with pytest.raises(ClassifierError):
        TrainConfig(learning_rate=0.0)


def test_zero_model_uniform_scores():
    scores = predict_scores(fixed_model(np.zeros((4, 3))), np.ones((2, 3)))
    assert scores == pytest.approx(np.full((2, 4), 0.25))


def test_scores_rows_sum_to_one():
    model = fixed_model(np.random.default_rng(0).standard_normal((3, 5)))
    scores = predict_scores(model, np.random.default_rng(1).standard_normal((7, 5)) * 10)
    assert np.abs(scores.sum(axis=1) - 1.0).max() <= 1e-9


def test_scores_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        predict_scores(fixed_model(np.zeros((2, 3))), np.ones((1, 4)))


def test_model_round_trip():
    model = fixed_model([[1.0, 2.0], [3.0, 4.0]], np.array([0.5, -0.5]))
    clone = SoftmaxModel.from_dict(model.to_dict())
    assert np.array_equal(clone.weights, model.weights)
    assert clone.class_names == model.class_names


# ============== 按植物汇总 ==============

def identity_probability_model():
    """单位权重：输入为对数概率时 softmax 还原该概率"""
    return fixed_model(np.eye(2))


def test_classify_single_image_plant():
    model = fixed_model([[1.0, 0.0], [0.0, 1.0]])
    predictions = classify_plants(model, [[2.0, 0.0]], ['p'])
    assert predictions.plant_classes.tolist() == predictions.image_classes.tolist() == [0]


def test_classify_sums_probabilities():
    # 两张图像的概率为 (0.6, 0.4) 与 (0.3, 0.7)
    model = identity_probability_model()
    X = np.log(np.array([[0.6, 0.4], [0.3, 0.7]]))
    predictions = classify_plants(model, X, ['p', 'p'])
    assert predictions.plant_scores[0] == pytest.approx([0.9, 1.1])
    assert predictions.plant_classes.tolist() == [1]


def test_classify_uses_sum_not_vote():
    model = identity_probability_model()
    X = np.log(np.array([[0.55, 0.45], [0.55, 0.45], [1e-300, 1.0]]))
    predictions = classify_plants(model, X, ['p', 'p', 'p'])
    assert predictions.image_classes.tolist() == [0, 0, 1]
    assert predictions.plant_scores[0] == pytest.approx([1.1, 1.9])
    assert predictions.plant_class_of() == {'p': 1}


def test_classify_logit_mode():
    model = identity_probability_model()
    predictions = classify_plants(model, [[3.0, 0.0], [0.0, 1.0]], ['p', 'p'], score_mode='logit')
    assert predictions.plant_scores[0] == pytest.approx([3.0, 1.0])
    with pytest.raises(ClassifierError):
        classify_plants(model, [[1.0, 0.0]], ['p'], score_mode='vote')


def test_classify_groups_keep_first_appearance_order():
    model = identity_probability_model()
    predictions = classify_plants(model, np.eye(2)[[1, 0, 1]], ['q', 'p', 'q'])
    assert predictions.plant_ids == ['q', 'p']
    assert predictions.plant_classes.tolist() == [1, 0]


@pytest.mark.parametrize('score_mode', ['probability', 'logit'])
def test_classify_ignores_image_order_within_plants(score_mode):
    rng = np.random.default_rng(5)
    model = fixed_model(rng.standard_normal((3, 4)), rng.standard_normal(3))
    X = rng.standard_normal((30, 4))
    plant_ids = [f"p{i % 8}" for i in range(30)]
    order = rng.permutation(30)
    before = classify_plants(model, X, plant_ids, score_mode)
    after = classify_plants(model, X[order], [plant_ids[i] for i in order], score_mode)
    assert after.plant_class_of() == before.plant_class_of()
    scores = dict(zip(after.plant_ids, after.plant_scores))
    for plant_id, row in zip(before.plant_ids, before.plant_scores):
        assert scores[plant_id] == pytest.approx(row)
