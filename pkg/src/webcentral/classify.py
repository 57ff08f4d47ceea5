"""Provider classification: thresholding, PCA, scaling, clustering, labeling.

Providers are described by total usage and endemicity ratio, long-tail
providers are split off by fixed thresholds, the rest are transformed
(2-D PCA, then min-max scaling), clustered with affinity propagation, and
each cluster is mapped onto an eight-class size/reach taxonomy by
configurable rules applied to its exemplar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .metrics import UsageCurve, endemicity_ratio, usage

__all__ = [
    "ProviderFeatures",
    "ProviderClass",
    "ClusterResult",
    "ClassRules",
    "ClassificationOutcome",
    "features_from_curve",
    "filter_long_tail",
    "pca2",
    "minmax_scale",
    "affinity_propagation",
    "assign_classes",
    "classify_providers",
    "load_class_rules",
    "write_cluster_csv",
]


@dataclass(frozen=True)
class ProviderFeatures:
    """Usage/endemicity summary of one provider across all countries."""

    provider: str
    usage: float
    endemicity_ratio: float
    max_country_usage: float


class ProviderClass(Enum):
    """Size (usage) x reach (endemicity) taxonomy."""

    XL_GP = "XL-GP"
    L_GP = "L-GP"
    L_GP_R = "L-GP(R)"
    M_GP = "M-GP"
    S_GP = "S-GP"
    L_RP = "L-RP"
    S_RP = "S-RP"
    XS_RP = "XS-RP"


@dataclass(frozen=True)
class ClusterResult:
    assignments: Mapping[Hashable, int]
    exemplars: tuple[Hashable, ...]
    iterations_run: int
    converged: bool


@dataclass(frozen=True)
class ClassRules:
    """Thresholds mapping cluster exemplars onto provider classes.

    The global/regional split is at ``er_regional_min`` (endemicity ratio
    above it is regional). Size tiers come from usage quantiles of the kept
    providers. A large global exemplar whose endemicity ratio falls in
    (``lgpr_er_min``, ``er_regional_min``] is the regional flavor L-GP(R).
    """

    er_regional_min: float = 0.5
    lgpr_er_min: float = 0.35
    xl_usage_quantile: float = 0.99
    l_usage_quantile: float = 0.95
    m_usage_quantile: float = 0.85
    lrp_usage_quantile: float = 0.60

    def __post_init__(self) -> None:
        if not 0.0 <= self.lgpr_er_min < self.er_regional_min <= 1.0:
            raise ValueError(
                "endemicity-ratio rules overlap: need "
                f"0 <= lgpr_er_min ({self.lgpr_er_min}) < er_regional_min "
                f"({self.er_regional_min}) <= 1"
            )
        quantiles = (
            self.lrp_usage_quantile,
            self.m_usage_quantile,
            self.l_usage_quantile,
            self.xl_usage_quantile,
        )
        if not all(0.0 < q < 1.0 for q in quantiles):
            raise ValueError(f"usage quantiles must lie in (0, 1): {quantiles}")
        if not all(a < b for a, b in zip(quantiles, quantiles[1:])):
            raise ValueError(
                "usage quantiles overlap: need lrp < m < l < xl, got "
                f"{quantiles}"
            )


@dataclass(frozen=True)
class ClassificationOutcome:
    classes: Mapping[str, ProviderClass]
    clusters: ClusterResult
    kept: tuple[ProviderFeatures, ...]
    long_tail: tuple[ProviderFeatures, ...]


def features_from_curve(curve: UsageCurve) -> ProviderFeatures:
    return ProviderFeatures(
        provider=curve.provider,
        usage=usage(curve),
        endemicity_ratio=endemicity_ratio(curve),
        max_country_usage=curve.values[0],
    )


def filter_long_tail(
    features: Sequence[ProviderFeatures],
    *,
    min_max_country_usage: float = 0.1,
    min_usage: float = 10.0,
) -> tuple[list[ProviderFeatures], list[ProviderFeatures]]:
    """Split providers into (kept, long_tail).

    A provider is long tail when its best per-country share is below
    ``min_max_country_usage`` percent or its total usage is below
    ``min_usage``; such providers skip clustering and are pre-assigned
    XS-RP.
    """
    kept: list[ProviderFeatures] = []
    long_tail: list[ProviderFeatures] = []
    for f in features:
        if f.max_country_usage < min_max_country_usage or f.usage < min_usage:
            long_tail.append(f)
        else:
            kept.append(f)
    return kept, long_tail


def pca2(points: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Project 2-D points onto the principal axes of their sample covariance.

    Mean-centers, then rotates onto the orthonormal eigenvectors ordered by
    descending eigenvalue, so pairwise distances are preserved and the
    output covariance is diagonal. Eigenvector signs are fixed so the
    largest-magnitude component of each axis is positive.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError(f"expected n x 2 points, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite point")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    if eigenvalues[-1] <= 0.0:
        raise ValueError("zero variance: all points identical")
    order = np.argsort(eigenvalues)[::-1]
    basis = eigenvectors[:, order]
    for k in range(2):
        pivot = np.argmax(np.abs(basis[:, k]))
        if basis[pivot, k] < 0:
            basis[:, k] = -basis[:, k]
    return centered @ basis


def minmax_scale(points: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Rescale each dimension onto [0, 1]; a zero-range dimension maps to 0.5."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected n x d points, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    out = np.empty_like(x)
    for dim in range(x.shape[1]):
        if span[dim] == 0.0:
            out[:, dim] = 0.5
        else:
            out[:, dim] = (x[:, dim] - lo[dim]) / span[dim]
    return out


def affinity_propagation(
    points: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[Hashable] | None = None,
    *,
    preference: float | str = "median",
    damping: float = 0.9,
    max_iter: int = 1000,
    convergence_iter: int = 50,
) -> ClusterResult:
    """Cluster points by responsibility/availability message passing.

    Similarity is negative squared Euclidean distance with the preference on
    the diagonal (``"median"`` takes the median off-diagonal similarity).
    Converged means the exemplar set was stable for ``convergence_iter``
    consecutive iterations; otherwise the current assignments are returned
    with ``converged=False``. No jitter is added, so identical inputs give
    identical results. If message passing ends with no positive-evidence
    exemplar (fully degenerate inputs), the single best candidate point is
    used as one exemplar for all.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    if not 0.5 <= damping < 1.0:
        raise ValueError(f"damping must be in [0.5, 1), got {damping}")
    n = x.shape[0]
    if labels is None:
        labels = tuple(range(n))
    elif len(labels) != n:
        raise ValueError("labels and points length mismatch")
    if len(set(labels)) != n:
        raise ValueError("duplicate labels")

    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    similarity = -sq
    if preference == "median":
        off_diag = similarity[~np.eye(n, dtype=bool)]
        pref = float(np.median(off_diag))
    else:
        pref = float(preference)
    np.fill_diagonal(similarity, pref)

    responsibility = np.zeros((n, n))
    availability = np.zeros((n, n))
    idx = np.arange(n)
    stable = 0
    exemplar_mask = np.zeros(n, dtype=bool)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        # responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
        combined = availability + similarity
        first_idx = combined.argmax(axis=1)
        first = combined[idx, first_idx]
        combined[idx, first_idx] = -np.inf
        second = combined.max(axis=1)
        new_r = similarity - first[:, None]
        new_r[idx, first_idx] = similarity[idx, first_idx] - second
        responsibility = damping * responsibility + (1 - damping) * new_r

        # availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        clipped = np.maximum(responsibility, 0)
        np.fill_diagonal(clipped, responsibility.diagonal())
        col_sums = clipped.sum(axis=0)
        new_a = col_sums[None, :] - clipped
        diag_a = col_sums - clipped.diagonal()
        new_a = np.minimum(new_a, 0)
        np.fill_diagonal(new_a, diag_a)
        availability = damping * availability + (1 - damping) * new_a

        mask = (availability.diagonal() + responsibility.diagonal()) > 0
        if np.array_equal(mask, exemplar_mask):
            stable += 1
        else:
            stable = 0
            exemplar_mask = mask
        if stable >= convergence_iter and mask.any():
            converged = True
            break

    exemplar_idx = np.flatnonzero(exemplar_mask)
    if exemplar_idx.size == 0:
        evidence = availability.diagonal() + responsibility.diagonal()
        exemplar_idx = np.array([int(np.argmax(evidence))])
    cluster_of = {int(e): cid for cid, e in enumerate(exemplar_idx)}
    nearest = similarity[:, exemplar_idx].argmax(axis=1)
    assignments: dict[Hashable, int] = {}
    for i in range(n):
        if i in cluster_of:
            assignments[labels[i]] = cluster_of[i]
        else:
            assignments[labels[i]] = int(nearest[i])
    return ClusterResult(
        assignments=assignments,
        exemplars=tuple(labels[int(e)] for e in exemplar_idx),
        iterations_run=iterations,
        converged=converged,
    )


def assign_classes(
    clusters: ClusterResult,
    features: Sequence[ProviderFeatures],
    rules: ClassRules,
) -> dict[str, ProviderClass]:
    """Label every provider with exactly one class.

    Clustered providers inherit the class of their cluster's exemplar,
    judged on the exemplar's raw (usage, endemicity ratio); providers
    absent from the clustering (the long tail) are XS-RP.
    """
    by_provider = {f.provider: f for f in features}
    missing = [p for p in clusters.assignments if p not in by_provider]
    if missing:
        raise ValueError(f"clustered providers without features: {sorted(missing)[:5]}")

    kept_usages = sorted(
        by_provider[p].usage for p in clusters.assignments
    )
    tiers = {
        "xl": _quantile(kept_usages, rules.xl_usage_quantile),
        "l": _quantile(kept_usages, rules.l_usage_quantile),
        "m": _quantile(kept_usages, rules.m_usage_quantile),
        "lrp": _quantile(kept_usages, rules.lrp_usage_quantile),
    }
    cluster_class = {
        clusters.assignments[exemplar]: _classify_exemplar(
            by_provider[exemplar], rules, tiers
        )
        for exemplar in clusters.exemplars
    }
    out: dict[str, ProviderClass] = {}
    for f in features:
        if f.provider in clusters.assignments:
            out[f.provider] = cluster_class[clusters.assignments[f.provider]]
        else:
            out[f.provider] = ProviderClass.XS_RP
    return out


def _classify_exemplar(
    f: ProviderFeatures, rules: ClassRules, tiers: Mapping[str, float]
) -> ProviderClass:
    if f.endemicity_ratio > rules.er_regional_min:
        return ProviderClass.L_RP if f.usage >= tiers["lrp"] else ProviderClass.S_RP
    if f.usage >= tiers["xl"]:
        return ProviderClass.XL_GP
    if f.usage >= tiers["l"]:
        if f.endemicity_ratio > rules.lgpr_er_min:
            return ProviderClass.L_GP_R
        return ProviderClass.L_GP
    if f.usage >= tiers["m"]:
        return ProviderClass.M_GP
    return ProviderClass.S_GP


def _quantile(sorted_values: Sequence[float], q: float) -> float:
    if not sorted_values:
        raise ValueError("no values for quantile")
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return sorted_values[lo]
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def classify_providers(
    features: Iterable[ProviderFeatures],
    rules: ClassRules | None = None,
    *,
    transform: str = "pca-minmax",
    min_max_country_usage: float = 0.1,
    min_usage: float = 10.0,
    preference: float | str = "median",
    damping: float = 0.9,
    max_iter: int = 1000,
    convergence_iter: int = 50,
) -> ClassificationOutcome:
    """Threshold, transform, cluster, and label a full provider set.

    Providers are processed in sorted key order internally, so the outcome
    is independent of input ordering. ``transform`` selects the feature
    transformation: "pca-minmax" (default), "minmax-pca", or "minmax".
    """
    rules = rules or ClassRules()
    ordered = sorted(features, key=lambda f: f.provider)
    if len({f.provider for f in ordered}) != len(ordered):
        raise ValueError("duplicate provider keys")
    kept, long_tail = filter_long_tail(
        ordered,
        min_max_country_usage=min_max_country_usage,
        min_usage=min_usage,
    )
    if len(kept) < 2:
        # nothing to cluster; kept providers (if any) get the top class of
        # an empty comparison set, so label them by rules on a trivial tier
        clusters = ClusterResult(
            assignments={f.provider: i for i, f in enumerate(kept)},
            exemplars=tuple(f.provider for f in kept),
            iterations_run=0,
            converged=True,
        )
        classes = assign_classes(clusters, ordered, rules) if kept else {
            f.provider: ProviderClass.XS_RP for f in ordered
        }
        return ClassificationOutcome(
            classes=classes,
            clusters=clusters,
            kept=tuple(kept),
            long_tail=tuple(long_tail),
        )

    raw = np.array([(f.usage, f.endemicity_ratio) for f in kept])
    if transform == "pca-minmax":
        points = minmax_scale(pca2(raw))
    elif transform == "minmax-pca":
        points = pca2(minmax_scale(raw))
    elif transform == "minmax":
        points = minmax_scale(raw)
    else:
        raise ValueError(f"unknown transform {transform!r}")
    clusters = affinity_propagation(
        points,
        labels=[f.provider for f in kept],
        preference=preference,
        damping=damping,
        max_iter=max_iter,
        convergence_iter=convergence_iter,
    )
    classes = assign_classes(clusters, ordered, rules)
    return ClassificationOutcome(
        classes=classes,
        clusters=clusters,
        kept=tuple(kept),
        long_tail=tuple(long_tail),
    )


_RULE_FIELDS = {
    "er_regional_min",
    "lgpr_er_min",
    "xl_usage_quantile",
    "l_usage_quantile",
    "m_usage_quantile",
    "lrp_usage_quantile",
}


def load_class_rules(path: str | Path) -> ClassRules:
    """Read threshold overrides from a ``key = value`` file."""
    overrides: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _RULE_FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown rule {key!r}")
        try:
            overrides[key] = float(value.strip())
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a decimal: {value.strip()!r}") from None
    try:
        return ClassRules(**overrides)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_cluster_csv(
    outcome: ClassificationOutcome, path: str | Path
) -> None:
    """Dump provider, cluster id, cluster exemplar, and class as CSV."""
    exemplar_of = {
        outcome.clusters.assignments[e]: e for e in outcome.clusters.exemplars
    }
    lines = ["provider,cluster_id,exemplar,class"]
    for provider in sorted(outcome.classes):
        cid = outcome.clusters.assignments.get(provider)
        exemplar = exemplar_of.get(cid, "") if cid is not None else ""
        cid_text = "" if cid is None else str(cid)
        lines.append(
            f"{provider},{cid_text},{exemplar},{outcome.classes[provider].value}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
