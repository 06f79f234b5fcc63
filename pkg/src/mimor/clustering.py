"""Document clustering: fuzzy memberships or overlapping hard rules.

Each document gets a membership vector over K clusters. Fuzzy mode fits
c-means on z-score standardized feature vectors and yields memberships that
sum to 1; hard-rule mode evaluates an ordered predicate list and yields 0/1
memberships where overlap (several 1s) is allowed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .corpus import FEATURE_NAMES, FeatureVector


@dataclass(frozen=True)
class MembershipVector:
    """Per-document degrees of belonging to the K clusters."""

    values: tuple[float, ...]

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


@dataclass(frozen=True)
class HardRule:
    """One cluster predicate; ``feature is None`` marks a catch-all rule."""

    cluster: str
    feature: str | None = None
    op: str | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.feature is None:
            return
        if self.feature not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.op not in ("<", ">="):
            raise ValueError(f"rule op must be '<' or '>=', got {self.op!r}")
        if self.threshold is None:
            raise ValueError("rule with a feature needs a threshold")

    def matches(self, f: FeatureVector) -> bool:
        if self.feature is None:
            return True
        value = getattr(f, self.feature)
        return value < self.threshold if self.op == "<" else value >= self.threshold


def load_rules(path) -> list[HardRule]:
    """Read an ordered rule list from a JSON config file.

    Each entry is {"cluster_name", "feature", "op", "threshold"}; an entry
    without a feature is a catch-all. The shorter key "cluster" is accepted
    as an alias.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError("rule config must be a non-empty JSON list")
    rules = []
    for entry in raw:
        name = entry.get("cluster_name", entry.get("cluster"))
        if not name:
            raise ValueError("rule entry missing 'cluster_name'")
        rules.append(
            HardRule(
                cluster=name,
                feature=entry.get("feature"),
                op=entry.get("op"),
                threshold=entry.get("threshold"),
            )
        )
    names = [r.cluster for r in rules]
    if len(set(names)) != len(names):
        raise ValueError("cluster names in a rule set must be unique")
    return rules


def hard_membership(rules: Sequence[HardRule], f: FeatureVector) -> MembershipVector:
    """0/1 membership per rule cluster; a document may sit in several clusters."""
    values = tuple(1.0 if r.matches(f) else 0.0 for r in rules)
    if not any(values):
        raise ValueError(
            "no rule matches the document; the rule set must cover every input "
            "(add a catch-all cluster)"
        )
    return MembershipVector(values)


@dataclass
class ClusterModel:
    """A fitted clustering: either c-means centroids or a hard rule set.

    Centroids live in standardized feature space; ``feature_names`` records
    which raw features survived the constant-feature drop, in order.
    """

    k: int
    mode: str  # "fuzzy" | "hard-rule"
    fuzzifier: float = 2.0
    feature_names: tuple[str, ...] = ()
    feature_means: np.ndarray | None = None
    feature_stds: np.ndarray | None = None
    centroids: np.ndarray | None = None
    rules: tuple[HardRule, ...] = ()
    objective_history: list[float] = field(default_factory=list)
    cluster_names: tuple[str, ...] = ()

    @property
    def fitted(self) -> bool:
        if self.mode == "hard-rule":
            return bool(self.rules)
        return self.centroids is not None

    def standardize(self, f: FeatureVector) -> np.ndarray:
        raw = {name: value for name, value in zip(FEATURE_NAMES, f.as_tuple())}
        x = np.array([raw[name] for name in self.feature_names], dtype=np.float64)
        return (x - self.feature_means) / self.feature_stds


def _feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    return np.array([f.as_tuple() for f in features], dtype=np.float64)


def _fuzzy_memberships(dist: np.ndarray, m: float) -> np.ndarray:
    """Membership matrix from a (n, K) distance matrix.

    A point sitting exactly on a centroid gets membership 1 there (split
    evenly if several centroids coincide with it).
    """
    n, k = dist.shape
    u = np.zeros((n, k), dtype=np.float64)
    zero_rows = (dist == 0).any(axis=1)
    if zero_rows.any():
        hits = dist[zero_rows] == 0
        u[zero_rows] = hits / hits.sum(axis=1, keepdims=True)
    rest = ~zero_rows
    if rest.any():
        d = dist[rest]
        power = 2.0 / (m - 1.0)
        # u_ik = 1 / sum_j (d_ik / d_ij)^power
        ratios = (d[:, :, None] / d[:, None, :]) ** power
        u[rest] = 1.0 / ratios.sum(axis=2)
    return u


def _distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diffs = x[:, None, :] - centroids[None, :, :]
    return np.sqrt((diffs * diffs).sum(axis=2))


def fit_fuzzy(
    features: Sequence[FeatureVector],
    k: int,
    m: float = 2.0,
    tol: float = 1e-6,
    max_iter: int = 300,
    seed: int = 0,
) -> ClusterModel:
    """Fit fuzzy c-means on standardized features; deterministic given seed.

    Centroids are initialized by a seeded random choice of K distinct points.
    Iteration alternates membership and centroid updates until the largest
    centroid shift drops below ``tol``; the objective value recorded for each
    iteration never increases.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(features) < k:
        raise ValueError(f"need at least k={k} feature vectors, got {len(features)}")
    if m <= 1.0:
        raise ValueError("fuzzifier m must be > 1")

    x_raw = _feature_matrix(features)
    means = x_raw.mean(axis=0)
    stds = x_raw.std(axis=0)
    keep = stds > 0
    if not keep.any():
        raise ValueError("all features are constant; nothing to cluster on")
    kept_names = tuple(n for n, flag in zip(FEATURE_NAMES, keep) if flag)
    x = (x_raw[:, keep] - means[keep]) / stds[keep]

    rng = np.random.default_rng(seed)
    init_idx = rng.choice(len(features), size=k, replace=False)
    centroids = x[np.sort(init_idx)].copy()

    history: list[float] = []
    for _ in range(max_iter):
        dist = _distances(x, centroids)
        u = _fuzzy_memberships(dist, m)
        um = u**m
        new_centroids = (um.T @ x) / um.sum(axis=0)[:, None]
        history.append(float((um * dist**2).sum()))
        shift = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        if shift < tol:
            break

    return ClusterModel(
        k=k,
        mode="fuzzy",
        fuzzifier=m,
        feature_names=kept_names,
        feature_means=means[keep],
        feature_stds=stds[keep],
        centroids=centroids,
        objective_history=history,
        cluster_names=tuple(f"c{i}" for i in range(k)),
    )


def rule_model(rules: Sequence[HardRule]) -> ClusterModel:
    """Wrap an ordered rule list as a cluster model (K = number of rules)."""
    rules = tuple(rules)
    if not rules:
        raise ValueError("rule set is empty")
    return ClusterModel(
        k=len(rules),
        mode="hard-rule",
        rules=rules,
        cluster_names=tuple(r.cluster for r in rules),
    )


def membership(model: ClusterModel, f: FeatureVector) -> MembershipVector:
    """Membership vector for one feature vector under a fitted model."""
    if not model.fitted:
        raise ValueError("cluster model is not fitted")
    if model.mode == "hard-rule":
        return hard_membership(model.rules, f)
    z = model.standardize(f)
    dist = _distances(z[None, :], model.centroids)
    u = _fuzzy_memberships(dist, model.fuzzifier)[0]
    return MembershipVector(tuple(float(v) for v in u))


def membership_rows(
    model: ClusterModel, features: Mapping[str, FeatureVector]
) -> Iterator[tuple[str, MembershipVector]]:
    """Memberships for a whole corpus, e.g. for JSONL export."""
    for doc_id, f in features.items():
        yield doc_id, membership(model, f)


def save_cluster_model(model: ClusterModel, path) -> None:
    payload: dict[str, object] = {"k": model.k, "mode": model.mode}
    if model.mode == "fuzzy":
        payload.update(
            fuzzifier=model.fuzzifier,
            feature_names=list(model.feature_names),
            feature_means=model.feature_means.tolist(),
            feature_stds=model.feature_stds.tolist(),
            centroids=model.centroids.tolist(),
        )
    else:
        payload["rules"] = [
            {
                "cluster": r.cluster,
                "feature": r.feature,
                "op": r.op,
                "threshold": r.threshold,
            }
            for r in model.rules
        ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def load_cluster_model(path) -> ClusterModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    mode = payload["mode"]
    if mode == "fuzzy":
        return ClusterModel(
            k=int(payload["k"]),
            mode="fuzzy",
            fuzzifier=float(payload["fuzzifier"]),
            feature_names=tuple(payload["feature_names"]),
            feature_means=np.array(payload["feature_means"], dtype=np.float64),
            feature_stds=np.array(payload["feature_stds"], dtype=np.float64),
            centroids=np.array(payload["centroids"], dtype=np.float64),
            cluster_names=tuple(f"c{i}" for i in range(int(payload["k"]))),
        )
    if mode == "hard-rule":
        rules = tuple(
            HardRule(
                cluster=r["cluster"],
                feature=r.get("feature"),
                op=r.get("op"),
                threshold=r.get("threshold"),
            )
            for r in payload["rules"]
        )
        return rule_model(rules)
    raise ValueError(f"unknown cluster model mode: {mode!r}")
