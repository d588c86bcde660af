"""Feature extraction, PCA with an independent oracle, and k-means."""

import itertools

import numpy as np
import pytest

from jumplab.analysis import (CORPUS_LABELS, FEATURE_NAMES, AnalysisError,
                              FeatureMatrix, feature_vector, featurize,
                              generate_corpus, kmeans, kmeans_scan, pca,
                              report)
from jumplab.automaton import ModeParams
from jumplab.fit import JumpModel


def controlled_model(**over):
    kw = dict(game_id="g", character_id="c",
              up_control=ModeParams(gravity=-0.08, reset=3.2),
              up_fixed=ModeParams(gravity=-0.15, reset=0.1, multiplier=1.0),
              down=ModeParams(gravity=-0.25, reset=0.2),
              min_hold=2, max_hold=14, has_control=True)
    kw.update(over)
    return JumpModel(**kw)


def test_feature_vector_layout():
    v = feature_vector(controlled_model())
    assert v.shape == (len(FEATURE_NAMES),)
    assert v[FEATURE_NAMES.index("max_hold")] == 14
    assert v[FEATURE_NAMES.index("initial_gravity")] == -0.08
    assert v[FEATURE_NAMES.index("down_reset")] == 0.2
    assert v[FEATURE_NAMES.index("has_control")] == 1.0


def test_feature_vector_initial_from_up_fixed_without_control():
    model = JumpModel(game_id="g", character_id="c",
                      up_fixed=ModeParams(gravity=-0.18, reset=4.5),
                      down=ModeParams(gravity=-0.15, reset=0.0))
    v = feature_vector(model)
    assert v[FEATURE_NAMES.index("initial_gravity")] == -0.18
    assert v[FEATURE_NAMES.index("initial_reset")] == 4.5
    assert v[FEATURE_NAMES.index("has_control")] == 0.0


def test_featurize_standardizes_and_zeroes_constant_columns():
    models = [controlled_model(max_hold=h) for h in (10, 14, 20)]
    matrix = featurize(models)
    col = FEATURE_NAMES.index("max_hold")
    assert matrix.standardized[:, col].mean() == pytest.approx(0.0)
    assert matrix.standardized[:, col].std() == pytest.approx(1.0)
    const = FEATURE_NAMES.index("has_control")
    assert np.all(matrix.standardized[:, const] == 0.0)


def test_featurize_empty_rejected():
    with pytest.raises(AnalysisError):
        featurize([])


# -- PCA ---------------------------------------------------------------------

def random_matrix(rng, n, d):
    x = rng.normal(size=(n, d)) @ rng.normal(size=(d, d))
    std = x.std(axis=0)
    standardized = (x - x.mean(axis=0)) / std
    return FeatureMatrix(tuple(("g", str(i)) for i in range(n)), x,
                         x.mean(axis=0), std, standardized)


def test_pca_matches_svd_oracle_up_to_6x6():
    """Independent oracle: singular value decomposition of centered data."""
    rng = np.random.default_rng(2)
    for d in range(2, 7):
        for _ in range(5):
            matrix = random_matrix(rng, d + 6, d)
            result = pca(matrix)
            x = matrix.standardized - matrix.standardized.mean(axis=0)
            _, s, vt = np.linalg.svd(x, full_matrices=False)
            var = s ** 2 / (len(x) - 1)
            want = var / var.sum()
            assert np.allclose(result.variance_fractions[:len(want)], want,
                               atol=1e-6)
            for i in range(d):
                dot = abs(float(result.components[i] @ vt[i]))
                if want[i] > 1e-9:  # sign-free loading comparison
                    assert dot == pytest.approx(1.0, abs=1e-6)


def test_pca_invariants_on_corpus():
    models, _, _ = generate_corpus()
    result = pca(featurize(models))
    fractions = result.variance_fractions
    assert fractions.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(fractions) <= 1e-12)
    sums = result.contributions.sum(axis=0)
    assert np.allclose(sums, 100.0, atol=1e-6)
    # canonical sign: the dominant loading of each component is positive
    for row in result.components:
        assert row[int(np.argmax(np.abs(row)))] >= 0


def test_corpus_scree_reaches_75_percent_within_5_components():
    models, _, _ = generate_corpus()
    result = pca(featurize(models))
    assert result.variance_fractions[:5].sum() >= 0.75


def test_pca_needs_rows():
    models = [controlled_model()]
    with pytest.raises(AnalysisError):
        pca(featurize(models))


def test_projection_shape():
    models, _, _ = generate_corpus(n=10)
    matrix = featurize(models)
    proj = pca(matrix).project(matrix.standardized, k=2)
    assert proj.shape == (10, 2)


# -- k-means -----------------------------------------------------------------

def blob_points(rng, centers, n_each, scale=0.05):
    points, labels = [], []
    for i, c in enumerate(centers):
        points.append(c + rng.normal(scale=scale, size=(n_each, len(c))))
        labels += [i] * n_each
    return np.vstack(points), np.array(labels)


def best_agreement(got, want, k):
    best = 0.0
    for perm in itertools.permutations(range(k)):
        mapped = np.array([perm[g] for g in got])
        best = max(best, float((mapped == want).mean()))
    return best


def test_kmeans_separates_clear_blobs():
    rng = np.random.default_rng(4)
    points, labels = blob_points(rng, np.eye(3) * 10.0, 12)
    result = kmeans(points, 3)
    assert best_agreement(result.assignments, labels, 3) == 1.0


def test_kmeans_deterministic():
    rng = np.random.default_rng(4)
    points, _ = blob_points(rng, np.eye(3) * 10.0, 12)
    a = kmeans(points, 3)
    b = kmeans(points, 3)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.wcss == b.wcss


def test_kmeans_k_validation():
    points = np.zeros((5, 2))
    with pytest.raises(AnalysisError):
        kmeans(points, 0)
    with pytest.raises(AnalysisError):
        kmeans(points, 6)


def test_corpus_scan_monotone_and_elbow_at_three():
    models, labels, _ = generate_corpus()
    matrix = featurize(models)
    result = kmeans_scan(matrix)
    scan = [result.wcss_scan[k] for k in range(2, 16)]
    assert all(a >= b - 1e-9 for a, b in zip(scan, scan[1:]))
    assert result.k == 3
    want = np.array([CORPUS_LABELS.index(lab) for lab in labels])
    assert best_agreement(result.assignments, want, 3) >= 0.90


def test_report_bundle():
    models, _, years = generate_corpus(n=12)
    matrix = featurize(models)
    bundle = report(pca(matrix), kmeans_scan(matrix, k_max=6), matrix,
                    years=years)
    for name in ("scree.csv", "contributions.csv", "assignments.csv",
                 "projection.csv", "wcss_scan.csv", "control_by_year.csv",
                 "cluster_by_year.csv"):
        assert name in bundle
        assert bundle[name].endswith("\n")
    assert len(bundle["assignments.csv"].strip().splitlines()) == 13


def test_generate_corpus_composition():
    models, labels, years = generate_corpus()
    assert len(models) == 52
    assert set(labels) == set(CORPUS_LABELS)
    assert all(m.game_id in years for m in models)
    assert all((m.has_control == (m.up_control is not None)) for m in models)
