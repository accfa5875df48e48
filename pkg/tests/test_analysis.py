import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from radoncdt.analysis import (
    LabeledDataset,
    LinearModel,
    accuracy,
    components_for,
    cpv_curve,
    cross_validate,
    discriminant_projection,
    pca_fit,
    plda_fit,
    stratified_folds,
    svm_predict,
    svm_train,
    write_cpv_csv,
    write_cv_csv,
    write_projections_csv,
    write_results_csv,
)
from radoncdt.errors import DomainError


def two_blobs(n, d, gap, seed=0, cov_scale=None):
    rng = np.random.default_rng(seed)
    scale = np.ones(d) if cov_scale is None else cov_scale
    a = rng.normal(size=(n, d)) * scale
    b = rng.normal(size=(n, d)) * scale + gap
    return np.vstack([a, b]), np.repeat([0, 1], n)


def cos(u, v):
    u, v = np.ravel(u), np.ravel(v)
    return abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))


# --- PCA -------------------------------------------------------------------

def test_pca_rank_one_line():
    direction = np.array([1.0, 2.0, -2.0]) / 3.0
    pts = np.outer(np.linspace(-5, 7, 40), direction) + [1.0, -1.0, 0.5]
    pca = pca_fit(pts)
    assert pca.rank == 1
    assert cos(pca.components[:, 0], direction) >= 1 - 1e-9


def test_pca_isotropic_sample():
    pts = np.random.default_rng(4).normal(size=(10_000, 2))
    lam = pca_fit(pts).eigenvalues
    assert 0.9 <= lam[0] / lam[1] <= 1.1


def test_pca_duplicated_point_has_no_components():
    pca = pca_fit(np.tile([[3.0, 1.0, -2.0]], (5, 1)))
    assert pca.rank == 0 and pca.components.shape == (3, 0)


def test_pca_needs_two_samples():
    with pytest.raises(DomainError):
        pca_fit(np.ones((1, 3)))


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 8)),
                  elements=st.floats(-100, 100, allow_nan=False)))
def test_pca_components_orthonormal(data):
    v = pca_fit(data).components
    assert np.max(np.abs(v.T @ v - np.eye(v.shape[1])), initial=0.0) <= 1e-8


def test_pca_transform_centres_data():
    x = np.random.default_rng(0).normal(size=(50, 4)) + 10
    z = pca_fit(x).transform(x)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-10)


# --- CPV -------------------------------------------------------------------

def test_cpv_examples():
    np.testing.assert_array_equal(cpv_curve([3, 1]), [0.75, 1.0])
    np.testing.assert_array_equal(cpv_curve([1]), [1.0])
    assert components_for([3, 1], 0.75) == 1
    assert components_for([3, 1], 0.95) == 2


def test_cpv_rejects_bad_input():
    for bad in ([], [0, 0], [1, -1]):
        with pytest.raises(DomainError):
            cpv_curve(bad)


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=30).filter(lambda v: sum(v) > 0))
def test_cpv_monotone_and_ends_at_one(lam):
    c = cpv_curve(lam)
    assert np.all(np.diff(c) >= 0) and c[-1] == 1.0


# --- pLDA ------------------------------------------------------------------

def test_plda_spherical_classes_follow_mean_difference():
    gap = np.array([2.0, -1.0, 0.5, 0.0])
    x, y = two_blobs(500, 4, gap, seed=1)
    assert cos(plda_fit(x, y, lam=0.0), gap) >= 0.99


def test_plda_large_penalty_ignores_anisotropy():
    gap = np.array([1.0, 1.0, 0.0])
    x, y = two_blobs(300, 3, gap, seed=2, cov_scale=np.array([10.0, 0.1, 1.0]))
    mean_diff = x[y == 1].mean(axis=0) - x[y == 0].mean(axis=0)
    assert cos(plda_fit(x, y, lam=1e6), mean_diff) >= 1 - 1e-4
    # without the penalty the anisotropy tilts the direction away
    assert cos(plda_fit(x, y, lam=0.0), mean_diff) < 0.9


def test_plda_single_class():
    with pytest.raises(DomainError):
        plda_fit(np.ones((4, 2)), [1, 1, 1, 1])


@given(st.integers(0, 2**32 - 1), hnp.arrays(np.float64, 3, elements=st.floats(-1e3, 1e3)))
def test_plda_translation_invariant(seed, offset):
    x, y = two_blobs(40, 3, np.array([1.5, 0.0, -1.0]), seed=seed % 1000)
    assert cos(plda_fit(x, y), plda_fit(x + offset, y)) >= 1 - 1e-6


def test_discriminant_projection_shape_and_separation():
    x, y = two_blobs(60, 10, np.r_[4.0, np.zeros(9)], seed=3)
    z = discriminant_projection(x, y)
    assert z.shape == (120, 2)
    assert z[y == 0, 0].mean() != pytest.approx(z[y == 1, 0].mean(), abs=1.0)


# --- SVM -------------------------------------------------------------------

def test_svm_two_points():
    x, y = np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([1, 0])
    assert accuracy(svm_train(x, y), x, y) == 1.0


def test_svm_xor_is_not_separable():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    assert accuracy(svm_train(x, y), x, y) <= 0.75


def test_svm_deterministic():
    x, y = two_blobs(30, 5, 1.0, seed=5)
    a, b = svm_train(x, y, seed=7), svm_train(x, y, seed=7)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_svm_separable_with_small_margin():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, size=(200, 2))
    x = x[np.abs(x[:, 0]) >= 0.1]
    y = (x[:, 0] > 0).astype(int)
    assert accuracy(svm_train(x, y, C=10), x, y) == 1.0


def test_svm_predict_examples():
    model = LinearModel(np.array([1.0, 0.0]), 0.0)
    np.testing.assert_array_equal(svm_predict(model, [[2, 5], [-2, 5], [0, 0]]), [1, 0, 1])
    with pytest.raises(DomainError):
        svm_predict(model, [[1.0, 2.0, 3.0]])


def test_svm_rejects_bad_arguments():
    x = np.eye(2)
    with pytest.raises(DomainError):
        svm_train(x, [0, 2])
    with pytest.raises(DomainError):
        svm_train(x, [0, 1], C=0)


# --- cross-validation ------------------------------------------------------

def test_fold_sizes():
    y = np.repeat([0, 1], 50)
    assign = stratified_folds(y, 10, seed=0)
    assert np.all(np.bincount(assign) == 10)
    for k in range(10):
        assert np.sum(y[assign == k]) == 5


def test_cv_separable_duplicates():
    x, y = two_blobs(10, 3, 20.0)
    res = cross_validate(np.vstack([x, x]), np.r_[y, y], folds=5)
    assert res.mean == 1.0


def test_cv_shuffled_labels_near_chance():
    x, _ = two_blobs(100, 5, 0.0, seed=8)
    y = np.random.default_rng(9).permutation(np.repeat([0, 1], 100))
    res = cross_validate(x, y, folds=10, seed=1, epochs=50)
    assert 0.35 <= res.mean <= 0.65


def test_cv_mean_is_mean_of_folds():
    x, y = two_blobs(25, 4, 0.8, seed=10)
    res = cross_validate(x, y, folds=5, epochs=20)
    assert res.mean == float(np.mean(res.fold_accuracies))
    assert res.fold_accuracies.shape == (5,)


def test_cv_rejects_small_classes():
    x, y = two_blobs(3, 2, 1.0)
    with pytest.raises(DomainError):
        cross_validate(x, y, folds=5)
    with pytest.raises(DomainError):
        cross_validate(x, y, folds=1)


# --- containers and CSV ----------------------------------------------------

def test_labeled_dataset_validation():
    ds = LabeledDataset(np.ones((2, 3)), np.array([0, 1]))
    assert ds.vectors.dtype == float and ds.space == "image"
    for vectors, labels in ((np.ones(3), [0]), (np.ones((2, 2)), [0]), (np.full((1, 1), np.nan), [0]),
                            (np.ones((1, 1)), [-1]), (np.ones((1, 1)), [0.5])):
        with pytest.raises(DomainError):
            LabeledDataset(vectors, np.asarray(labels))


def test_csv_writers(tmp_path):
    x, y = two_blobs(10, 3, 3.0)
    res = {"image": cross_validate(x, y, folds=2, epochs=5)}
    write_results_csv(tmp_path / "r.csv", res)
    write_cv_csv(tmp_path / "f.csv", res)
    write_cpv_csv(tmp_path / "c.csv", {"image": cpv_curve([3, 1])})
    write_projections_csv(tmp_path / "p.csv", {"image": discriminant_projection(x, y)}, y)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "space,mean_accuracy,std"
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 3
    assert (tmp_path / "c.csv").read_text().splitlines()[1:] == ["image,1,0.75", "image,2,1"]
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "space,plda_1,pc_residual_1,label" and len(lines) == 21
