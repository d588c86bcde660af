"""Cross-game analysis: feature vectors, PCA, and k-means clustering.

Eleven features shared by every learned model are standardized per
column, decomposed with unrotated PCA, and clustered with a best-of-
restarts k-means over k = 2..15; the elbow rule picks the smallest k
whose relative WCSS improvement to k+1 drops below a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .automaton import ModeParams
from .fit import JumpModel

FEATURE_NAMES = (
    "max_hold", "min_hold", "initial_gravity", "initial_reset",
    "up_fixed_gravity", "up_fixed_multiplier", "up_fixed_reset",
    "down_gravity", "down_multiplier", "down_reset", "has_control",
)

DEFAULT_ELBOW_THRESHOLD = 0.10
DEFAULT_RESTARTS = 32
DEFAULT_SEED = 0


class AnalysisError(ValueError):
    pass


def feature_vector(model: JumpModel) -> np.ndarray:
    """The 11 shared features; "initial" fields come from up_control when
    the jump has control, from up_fixed when it does not."""
    if model.up_fixed is None or model.down is None:
        raise AnalysisError(
            f"model {model.game_id}/{model.character_id} is missing a mode")
    initial = model.up_control if model.has_control else model.up_fixed
    return np.array([
        model.max_hold, model.min_hold,
        initial.gravity, initial.reset,
        model.up_fixed.gravity, model.up_fixed.multiplier,
        model.up_fixed.reset,
        model.down.gravity, model.down.multiplier, model.down.reset,
        1.0 if model.has_control else 0.0,
    ])


@dataclass(frozen=True)
class FeatureMatrix:
    ids: tuple[tuple[str, str], ...]      # (game_id, character_id) per row
    raw: np.ndarray
    means: np.ndarray
    stds: np.ndarray                      # zero-variance columns keep std 0
    standardized: np.ndarray


def featurize(models: list[JumpModel]) -> FeatureMatrix:
    if not models:
        raise AnalysisError("no models to featurize")
    raw = np.vstack([feature_vector(m) for m in models])
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    standardized = np.zeros_like(raw)
    nz = stds > 0
    standardized[:, nz] = (raw[:, nz] - means[nz]) / stds[nz]
    ids = tuple((m.game_id, m.character_id) for m in models)
    return FeatureMatrix(ids, raw, means, stds, standardized)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray          # one orthonormal loading vector per row
    variance_fractions: np.ndarray  # non-increasing, sums to 1
    contributions: np.ndarray       # percent, features x components

    def project(self, standardized: np.ndarray, k: int = 2) -> np.ndarray:
        return standardized @ self.components[:k].T


def pca(matrix: FeatureMatrix) -> PcaResult:
    x = matrix.standardized
    if x.shape[0] < 2:
        raise AnalysisError("PCA needs at least 2 rows")
    cov = np.cov(x, rowvar=False)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    components = eigvecs[:, order].T
    for i in range(components.shape[0]):
        # canonical sign: the largest-magnitude loading is positive
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    total = eigvals.sum()
    if total <= 0:
        raise AnalysisError("degenerate data: zero total variance")
    fractions = eigvals / total
    sq = components.T ** 2                       # features x components
    contributions = 100.0 * sq / sq.sum(axis=0)
    return PcaResult(components, fractions, contributions)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KMeansResult:
    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    wcss: float
    wcss_scan: dict[int, float]


def _farthest_point_seed(points: np.ndarray, k: int, first: int) -> np.ndarray:
    centers = [points[first]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        centers.append(points[nxt])
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(points: np.ndarray, centers: np.ndarray,
           max_iterations: int = 300) -> tuple[np.ndarray, np.ndarray, float]:
    labels = None
    for _ in range(max_iterations):
        new_labels, _ = kernels.kmeans_assign(points, centers)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(len(centers)):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # revive an empty cluster at the worst-fit point
                d2 = ((points - centers[labels]) ** 2).sum(axis=1)
                centers[c] = points[int(np.argmax(d2))]
    labels, wcss = kernels.kmeans_assign(points, centers)
    return labels, centers, wcss


def kmeans(points: np.ndarray, k: int, restarts: int = DEFAULT_RESTARTS,
           seed: int = DEFAULT_SEED,
           warm_centers: np.ndarray | None = None) -> KMeansResult:
    if k < 1 or k > len(points):
        raise AnalysisError(f"k={k} out of range for {len(points)} points")
    rng = np.random.default_rng([seed, k])
    best = None
    starts = [_farthest_point_seed(points, k, int(rng.integers(len(points))))
              for _ in range(restarts)]
    if warm_centers is not None and len(warm_centers) == k:
        starts.append(warm_centers.copy())
    for centers in starts:
        labels, centers, wcss = _lloyd(points, centers.copy())
        if best is None or wcss < best.wcss - 1e-12:
            best = KMeansResult(k, labels, centers, wcss, {})
    return best


def kmeans_scan(matrix: FeatureMatrix, k_min: int = 2, k_max: int = 15,
                restarts: int = DEFAULT_RESTARTS, seed: int = DEFAULT_SEED,
                elbow_threshold: float = DEFAULT_ELBOW_THRESHOLD) -> KMeansResult:
    """Best-of-restarts k-means per k, elbow rule choosing the final k.

    Each k also warm-starts from the previous best centers plus the
    farthest point, which keeps the scan monotone non-increasing.
    """
    points = matrix.standardized
    if k_max > len(points):
        raise AnalysisError(f"k_max={k_max} exceeds {len(points)} rows")
    results: dict[int, KMeansResult] = {}
    prev_centers = None
    for k in range(k_min, k_max + 1):
        warm = None
        if prev_centers is not None:
            d2 = ((points[:, None, :] - prev_centers[None, :, :]) ** 2
                  ).sum(axis=2).min(axis=1)
            warm = np.vstack([prev_centers, points[int(np.argmax(d2))]])
        results[k] = kmeans(points, k, restarts, seed, warm)
        prev_centers = results[k].centroids
    scan = {k: r.wcss for k, r in results.items()}
    chosen = k_max
    for k in range(k_min, k_max):
        w = scan[k]
        if w <= 0 or (w - scan[k + 1]) / w < elbow_threshold:
            chosen = k
            break
    r = results[chosen]
    return KMeansResult(r.k, r.assignments, r.centroids, r.wcss, scan)


# ---------------------------------------------------------------------------
# report bundle
# ---------------------------------------------------------------------------

def report(pca_result: PcaResult, km: KMeansResult, matrix: FeatureMatrix,
           years: dict[str, int] | None = None) -> dict[str, str]:
    """CSV bundle: scree, contribution table, cluster assignments, 2-D
    projection, and by-year tallies when release years are provided."""
    out = {}

    lines = ["component,variance_fraction,cumulative"]
    cum = 0.0
    for i, f in enumerate(pca_result.variance_fractions, start=1):
        cum += float(f)
        lines.append(f"{i},{f:.9f},{cum:.9f}")
    out["scree.csv"] = "\n".join(lines) + "\n"

    n_comp = pca_result.contributions.shape[1]
    header = "feature," + ",".join(f"pc{i+1}" for i in range(n_comp))
    lines = [header]
    for fi, name in enumerate(FEATURE_NAMES):
        row = ",".join(f"{pca_result.contributions[fi, ci]:.6f}"
                       for ci in range(n_comp))
        lines.append(f"{name},{row}")
    out["contributions.csv"] = "\n".join(lines) + "\n"

    lines = ["game,character,cluster"]
    for (game, character), label in zip(matrix.ids, km.assignments):
        lines.append(f"{game},{character},{int(label)}")
    out["assignments.csv"] = "\n".join(lines) + "\n"

    proj = pca_result.project(matrix.standardized, k=2)
    lines = ["game,character,pc1,pc2"]
    for (game, character), (p1, p2) in zip(matrix.ids, proj):
        lines.append(f"{game},{character},{p1:.6f},{p2:.6f}")
    out["projection.csv"] = "\n".join(lines) + "\n"

    lines = ["k,wcss"]
    for k in sorted(km.wcss_scan):
        lines.append(f"{k},{km.wcss_scan[k]:.6f}")
    out["wcss_scan.csv"] = "\n".join(lines) + "\n"

    if years is not None:
        control_col = FEATURE_NAMES.index("has_control")
        by_year: dict[int, list[int]] = {}
        cluster_year: dict[tuple[int, int], int] = {}
        for row, (game, _character) in enumerate(matrix.ids):
            if game not in years:
                continue
            year = years[game]
            has_control = int(matrix.raw[row, control_col] > 0)
            by_year.setdefault(year, [0, 0])[has_control] += 1
            key = (year, int(km.assignments[row]))
            cluster_year[key] = cluster_year.get(key, 0) + 1
        lines = ["year,fixed,controlled"]
        for year in sorted(by_year):
            fixed, controlled = by_year[year]
            lines.append(f"{year},{fixed},{controlled}")
        out["control_by_year.csv"] = "\n".join(lines) + "\n"
        lines = ["year,cluster,count"]
        for year, cluster in sorted(cluster_year):
            lines.append(f"{year},{cluster},{cluster_year[(year, cluster)]}")
        out["cluster_by_year.csv"] = "\n".join(lines) + "\n"
    return out


# ---------------------------------------------------------------------------
# bundled synthetic corpus
# ---------------------------------------------------------------------------

CORPUS_LABELS = ("controlled_asymmetric", "controlled_symmetric", "fixed")


def _controlled_asymmetric(rng) -> JumpModel:
    """Long controllable jump, falling faster than rising.

    Every varying feature stays tightly grouped around a class-specific
    center, so the three archetypes form well-separated clusters in
    standardized feature space (the corpus's documented property).
    """
    max_hold = 4 + int(rng.integers(16, 18))
    return JumpModel(
        game_id="", character_id="hero",
        up_control=ModeParams(gravity=rng.uniform(-0.195, -0.185),
                              reset=rng.uniform(4.074, 4.126)),
        up_fixed=ModeParams(gravity=rng.uniform(-0.396, -0.384),
                            reset=rng.uniform(0.29, 0.61),
                            multiplier=rng.uniform(0.972, 1.028)),
        down=ModeParams(gravity=rng.uniform(-0.613, -0.587),
                        reset=rng.uniform(0.129, 0.171)),
        min_hold=4, max_hold=max_hold, has_control=True)


def _controlled_symmetric(rng) -> JumpModel:
    """Floaty jump whose rise and fall share nearly one gravity; release
    cuts the velocity, so up_fixed approximately mirrors down."""
    max_hold = 10 + int(rng.integers(24, 26))
    return JumpModel(
        game_id="", character_id="hero",
        up_control=ModeParams(gravity=rng.uniform(-0.1368, -0.1232),
                              reset=rng.uniform(4.376, 4.424)),
        up_fixed=ModeParams(gravity=rng.uniform(-0.138, -0.122),
                            reset=rng.uniform(-0.44, -0.16),
                            multiplier=rng.uniform(-0.031, 0.031)),
        down=ModeParams(gravity=rng.uniform(-0.144, -0.116),
                        reset=rng.uniform(-0.324, -0.276)),
        min_hold=10, max_hold=max_hold, has_control=True)


def _fixed(rng) -> JumpModel:
    """Committed single-arc jump; the hold duration is ignored."""
    return JumpModel(
        game_id="", character_id="hero",
        up_fixed=ModeParams(gravity=rng.uniform(-0.3242, -0.3158),
                            reset=rng.uniform(4.9715, 5.0285),
                            multiplier=rng.uniform(-0.032, 0.032)),
        down=ModeParams(gravity=rng.uniform(-0.515, -0.485),
                        reset=rng.uniform(0.576, 0.624)),
        min_hold=1, max_hold=1, has_control=False)


_CORPUS_MAKERS = (_controlled_asymmetric, _controlled_symmetric, _fixed)
_CORPUS_YEAR_RANGES = ((1985, 1993), (1986, 1991), (1983, 1988))


def generate_corpus(n: int = 52, seed: int = 7) \
        -> tuple[list[JumpModel], list[str], dict[str, int]]:
    """Synthetic model corpus drawn from three archetype distributions.

    Returns (models, archetype labels, release years by game id); sized
    like the paper-scale analysis corpus by default.
    """
    rng = np.random.default_rng(seed)
    models, labels, years = [], [], {}
    for i in range(n):
        which = i % len(_CORPUS_MAKERS)
        model = _CORPUS_MAKERS[which](rng)
        game_id = f"synth{i:02d}"
        model = JumpModel(**{**model.__dict__, "game_id": game_id})
        lo, hi = _CORPUS_YEAR_RANGES[which]
        models.append(model)
        labels.append(CORPUS_LABELS[which])
        years[game_id] = int(rng.integers(lo, hi + 1))
    return models, labels, years
