"""Adaptive retrieval fusion with online relevance-feedback learning.

Multiple retrieval engines score each query; their normalized scores are
combined linearly with weights kept per engine, per document cluster, and per
user. User judgments nudge those weights online, so the system gradually
routes each kind of document (and each user) to the engines that serve them
best.
"""

from .clustering import ClusterModel, MembershipVector, fit_fuzzy, hard_membership, membership
from .corpus import Corpus, Document, FeatureVector, extract_features, ingest, tokenize
from .engines import ENGINE_IDS, RsvList, normalize, score, score_all
from .evalharness import (
    QrelSet,
    SessionConfig,
    average_precision,
    combmnz,
    combsum,
    load_qrels,
    precision_at_k,
    simulate_session,
)
from .fusion import (
    FusionConfig,
    WeightMatrix,
    fuse_blended,
    fuse_blended_clustered,
    fuse_clustered,
    fuse_flat,
    learn_clustered,
    learn_flat,
)
from .pipeline import RankedHit, SearchPipeline
from .usermodel import (
    FeedbackEvent,
    ModelStore,
    PublicModel,
    StoreConfig,
    UserModel,
    blend_parameter,
)

__all__ = [
    "ClusterModel",
    "Corpus",
    "Document",
    "ENGINE_IDS",
    "FeatureVector",
    "FeedbackEvent",
    "FusionConfig",
    "MembershipVector",
    "ModelStore",
    "PublicModel",
    "QrelSet",
    "RankedHit",
    "RsvList",
    "SearchPipeline",
    "SessionConfig",
    "StoreConfig",
    "UserModel",
    "WeightMatrix",
    "average_precision",
    "blend_parameter",
    "combmnz",
    "combsum",
    "extract_features",
    "fit_fuzzy",
    "fuse_blended",
    "fuse_blended_clustered",
    "fuse_clustered",
    "fuse_flat",
    "hard_membership",
    "ingest",
    "learn_clustered",
    "learn_flat",
    "load_qrels",
    "membership",
    "normalize",
    "precision_at_k",
    "score",
    "score_all",
    "simulate_session",
    "tokenize",
]

__version__ = "0.1.0"
