"""Linear fusion of per-engine scores and the relevance-feedback weight update.

All functions here are pure: given the same weights, memberships, and
normalized scores they return the same value, bit for bit. The fused score of
a document is the weighted sum of its per-engine scores divided by the number
of engines N (and additionally by the cluster count K in clustered mode); the
divisor is a fixed convention and never affects ranking order.

Learning nudges each weight by ``epsilon * membership * rf * rsv`` and clamps
it into [0, 1]: an engine that scored a document highly gets more credit (or
blame) for the user's judgment of that document, and only in proportion to
how much the document belongs to each cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .clustering import MembershipVector

MODES = ("flat", "clustered", "blended", "blended-clustered")


@dataclass(frozen=True)
class FusionConfig:
    """Learning and ranking knobs; ties always break by ascending doc id."""

    learning_rate: float = 0.05
    weight_init: float = 0.5
    mode: str = "blended"

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 <= self.weight_init <= 1.0:
            raise ValueError("weight_init must be in [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class WeightMatrix:
    """N engines x K clusters weight table, every entry in [0, 1]."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("weight matrix needs at least one engine row")
        k = len(self.rows[0])
        if k < 1:
            raise ValueError("weight matrix needs at least one cluster column")
        for row in self.rows:
            if len(row) != k:
                raise ValueError("ragged weight matrix")
            for w in row:
                if not 0.0 <= w <= 1.0:
                    raise ValueError(f"weight {w!r} outside [0, 1]")

    @classmethod
    def filled(cls, n_engines: int, n_clusters: int, value: float) -> "WeightMatrix":
        return cls(tuple(tuple(value for _ in range(n_clusters)) for _ in range(n_engines)))

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[float]]) -> "WeightMatrix":
        return cls(tuple(tuple(float(w) for w in row) for row in rows))

    @property
    def n_engines(self) -> int:
        return len(self.rows)

    @property
    def n_clusters(self) -> int:
        return len(self.rows[0])

    def column(self, c: int) -> tuple[float, ...]:
        return tuple(row[c] for row in self.rows)

    def to_lists(self) -> list[list[float]]:
        return [list(row) for row in self.rows]


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def _check_rsvs(rsvs: Sequence[float]) -> None:
    for v in rsvs:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"rsv {v!r} outside [0, 1]; fuse normalized scores only")


def fuse_flat(weights: Sequence[float], rsvs: Sequence[float]) -> float:
    """Weighted sum of per-engine scores divided by the engine count."""
    if len(weights) != len(rsvs):
        raise ValueError(f"{len(weights)} weights vs {len(rsvs)} rsvs")
    if not weights:
        raise ValueError("need at least one engine")
    _check_rsvs(rsvs)
    total = 0.0
    for w, r in zip(weights, rsvs):
        total += w * r
    return total / len(weights)


def fuse_clustered(
    matrix: WeightMatrix, memb: MembershipVector | Sequence[float], rsvs: Sequence[float]
) -> float:
    """Cluster-weighted fusion: each engine's score counts through every
    cluster in proportion to the document's membership there."""
    n, k = matrix.n_engines, matrix.n_clusters
    if len(rsvs) != n:
        raise ValueError(f"{n} engine rows vs {len(rsvs)} rsvs")
    if len(memb) != k:
        raise ValueError(f"{k} cluster columns vs {len(memb)} membership values")
    _check_rsvs(rsvs)
    total = 0.0
    for s in range(n):
        for c in range(k):
            total += matrix.rows[s][c] * memb[c] * rsvs[s]
    return total / (k * n)


def fuse_blended(
    w_private: Sequence[float],
    w_public: Sequence[float],
    p: float,
    rsvs: Sequence[float],
) -> float:
    """Flat fusion with per-engine weights blended from the user's private
    model (share p) and the shared public model (share 1-p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"blend parameter p={p!r} outside [0, 1]")
    if not len(w_private) == len(w_public) == len(rsvs):
        raise ValueError("private weights, public weights, and rsvs must align")
    if not rsvs:
        raise ValueError("need at least one engine")
    _check_rsvs(rsvs)
    total = 0.0
    for wp, wq, r in zip(w_private, w_public, rsvs):
        total += (p * wp + (1.0 - p) * wq) * r
    return total / len(rsvs)


def fuse_blended_clustered(
    m_private: WeightMatrix,
    m_public: WeightMatrix,
    p: float,
    memb: MembershipVector | Sequence[float],
    rsvs: Sequence[float],
) -> float:
    """Private/public blend applied entrywise inside cluster-weighted fusion.

    This composes the user blend with per-cluster weights; it is an extension
    beyond the plain modes and is off unless explicitly configured.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"blend parameter p={p!r} outside [0, 1]")
    n, k = m_private.n_engines, m_private.n_clusters
    if (m_public.n_engines, m_public.n_clusters) != (n, k):
        raise ValueError("private and public matrices must share dimensions")
    if len(rsvs) != n or len(memb) != k:
        raise ValueError("matrix, membership, and rsv dimensions must align")
    _check_rsvs(rsvs)
    total = 0.0
    for s in range(n):
        for c in range(k):
            w = p * m_private.rows[s][c] + (1.0 - p) * m_public.rows[s][c]
            total += w * memb[c] * rsvs[s]
    return total / (k * n)


def learn_flat(
    weights: Sequence[float], rf: int, rsvs: Sequence[float], epsilon: float
) -> list[float]:
    """One feedback update on a flat weight vector; returns new weights."""
    if len(weights) != len(rsvs):
        raise ValueError(f"{len(weights)} weights vs {len(rsvs)} rsvs")
    if rf not in (1, -1):
        raise ValueError(f"rf must be +1 or -1, got {rf!r}")
    return [_clamp01(w + epsilon * rf * r) for w, r in zip(weights, rsvs)]


def learn_clustered(
    matrix: WeightMatrix,
    memb: MembershipVector | Sequence[float],
    rf: int,
    rsvs: Sequence[float],
    epsilon: float,
) -> WeightMatrix:
    """One feedback update on an N x K matrix; returns a new matrix.

    The (engine, cluster) entry moves by epsilon * membership * rf * rsv, so
    only clusters the judged document belongs to (and engines that actually
    scored it) are touched.
    """
    n, k = matrix.n_engines, matrix.n_clusters
    if len(rsvs) != n:
        raise ValueError(f"{n} engine rows vs {len(rsvs)} rsvs")
    if len(memb) != k:
        raise ValueError(f"{k} cluster columns vs {len(memb)} membership values")
    if rf not in (1, -1):
        raise ValueError(f"rf must be +1 or -1, got {rf!r}")
    rows = tuple(
        tuple(
            _clamp01(matrix.rows[s][c] + epsilon * memb[c] * rf * rsvs[s]) for c in range(k)
        )
        for s in range(n)
    )
    return WeightMatrix(rows)
