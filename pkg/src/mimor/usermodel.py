"""Private per-user models, the shared public model, and their persistence.

Every feedback event updates two weight tables with the same increment: the
judging user's private matrix and the public matrix trained by everyone. A
blend parameter p = min(1, n/T) grows with the user's feedback count n, so a
newcomer leans on the public model and a saturated user is ranked almost
entirely by their own history.

The feedback log is append-only JSONL and carries the score and membership
snapshots each update used, which makes a fresh replay of the log reproduce
the persisted matrices exactly.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .clustering import MembershipVector
from .fusion import WeightMatrix, learn_clustered

DEFAULT_T = 50
DEFAULT_EPSILON = 0.05
DEFAULT_WEIGHT_INIT = 0.5

_JUDGMENT_RF = {"relevant": 1, "nonrelevant": -1}


class ModelLoadError(RuntimeError):
    """A persisted model file is corrupt or inconsistent; names the file."""

    def __init__(self, path, reason: str):
        super().__init__(f"cannot load {path}: {reason}")
        self.path = str(path)


def blend_parameter(n: int, t: int = DEFAULT_T) -> float:
    """Private-model share after n feedback decisions: min(1, n/T)."""
    if t < 1:
        raise ValueError("saturation count T must be >= 1")
    if n < 0:
        raise ValueError("feedback count n must be >= 0")
    return min(1.0, n / t)


@dataclass(frozen=True)
class UserModel:
    user_id: str
    private_weights: WeightMatrix
    feedback_count: int = 0
    p: float = 0.0


@dataclass(frozen=True)
class PublicModel:
    public_weights: WeightMatrix
    total_feedback: int = 0


@dataclass(frozen=True)
class FeedbackEvent:
    user_id: str
    query_id: str
    doc_id: str
    judgment: str  # "relevant" | "nonrelevant"
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.judgment not in _JUDGMENT_RF:
            raise ValueError(f"judgment must be 'relevant' or 'nonrelevant', got {self.judgment!r}")

    @property
    def rf(self) -> int:
        return _JUDGMENT_RF[self.judgment]

    @classmethod
    def now(cls, user_id: str, query_id: str, doc_id: str, judgment: str) -> "FeedbackEvent":
        ts = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return cls(user_id, query_id, doc_id, judgment, ts)


def _user_filename(user_id: str) -> str:
    return urllib.parse.quote(user_id, safe="") + ".json"


@dataclass
class StoreConfig:
    """Registry facts every persisted model must agree with.

    Unlike FusionConfig, epsilon may be 0 here: the evaluation harness uses a
    zero learning rate to separate measurement from learning.
    """

    engines: tuple[str, ...]
    k: int
    epsilon: float = DEFAULT_EPSILON
    t_saturation: int = DEFAULT_T
    mode: str = "blended"
    weight_init: float = DEFAULT_WEIGHT_INIT

    def __post_init__(self) -> None:
        from .fusion import MODES

        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.t_saturation < 1:
            raise ValueError("saturation count T must be >= 1")

    @property
    def n_engines(self) -> int:
        return len(self.engines)


class ModelStore:
    """Holds the public model and all user models; single writer for updates.

    ``data_dir`` is optional: without it the store is purely in-memory (the
    evaluation harness uses that). With it, ``save()`` writes one JSON file
    per user plus the public model and registry, and every recorded feedback
    event is appended to ``feedback.log`` immediately.
    """

    def __init__(
        self,
        config: StoreConfig,
        data_dir: Path | str | None = None,
        doc_exists: Callable[[str], bool] | None = None,
    ):
        self.config = config
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._doc_exists = doc_exists
        self._lock = threading.Lock()
        self.public = PublicModel(
            public_weights=WeightMatrix.filled(config.n_engines, config.k, config.weight_init)
        )
        self.users: dict[str, UserModel] = {}

    def _default_user(self, user_id: str) -> UserModel:
        return UserModel(
            user_id=user_id,
            private_weights=WeightMatrix.filled(
                self.config.n_engines, self.config.k, self.config.weight_init
            ),
            feedback_count=0,
            p=blend_parameter(0, self.config.t_saturation),
        )

    def user(self, user_id: str) -> UserModel:
        """Fetch a user model, creating the default one on first contact."""
        with self._lock:
            if user_id not in self.users:
                self.users[user_id] = self._default_user(user_id)
            return self.users[user_id]

    def has_user(self, user_id: str) -> bool:
        return user_id in self.users

    def record_feedback(
        self,
        event: FeedbackEvent,
        rsvs: Sequence[float],
        memb: MembershipVector | Sequence[float],
        log: bool = True,
    ) -> tuple[UserModel, PublicModel]:
        """Apply one judgment to the private and public models.

        Both matrices receive the identical increment derived from the score
        snapshot the user actually saw. The feedback count rises even when all
        scores are zero (the update is then a no-op on the weights).
        """
        if self._doc_exists is not None and not self._doc_exists(event.doc_id):
            raise ValueError(f"unknown document id: {event.doc_id!r}")
        with self._lock:
            user = self.users.get(event.user_id) or self._default_user(event.user_id)
            eps = self.config.epsilon
            new_private = learn_clustered(user.private_weights, memb, event.rf, rsvs, eps)
            new_public = learn_clustered(self.public.public_weights, memb, event.rf, rsvs, eps)
            n = user.feedback_count + 1
            user = replace(
                user,
                private_weights=new_private,
                feedback_count=n,
                p=blend_parameter(n, self.config.t_saturation),
            )
            self.users[event.user_id] = user
            self.public = PublicModel(
                public_weights=new_public, total_feedback=self.public.total_feedback + 1
            )
            if log and self.data_dir is not None:
                self._append_log(event, rsvs, memb)
            return user, self.public

    def _append_log(self, event: FeedbackEvent, rsvs, memb) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        record = {
            "user_id": event.user_id,
            "query_id": event.query_id,
            "doc_id": event.doc_id,
            "judgment": event.judgment,
            "timestamp": event.timestamp,
            "rsvs": [float(v) for v in rsvs],
            "membership": [float(v) for v in memb],
        }
        with open(self.data_dir / "feedback.log", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # ------------------------------------------------------------------
    # persistence

    def save(self, data_dir: Path | str | None = None) -> Path:
        target = Path(data_dir) if data_dir is not None else self.data_dir
        if target is None:
            raise ValueError("no data directory to save into")
        target.mkdir(parents=True, exist_ok=True)
        (target / "users").mkdir(exist_ok=True)
        registry = {
            "engines": list(self.config.engines),
            "k": self.config.k,
            "epsilon": self.config.epsilon,
            "t_saturation": self.config.t_saturation,
            "mode": self.config.mode,
            "weight_init": self.config.weight_init,
        }
        (target / "registry.json").write_text(json.dumps(registry, indent=2, sort_keys=True))
        public = {
            "weights": self.public.public_weights.to_lists(),
            "total_feedback": self.public.total_feedback,
        }
        (target / "public.json").write_text(json.dumps(public, indent=2, sort_keys=True))
        for user in self.users.values():
            payload = {
                "user_id": user.user_id,
                "weights": user.private_weights.to_lists(),
                "feedback_count": user.feedback_count,
            }
            path = target / "users" / _user_filename(user.user_id)
            path.write_text(json.dumps(payload, indent=2, sort_keys=True))
        return target

    @classmethod
    def load(
        cls,
        config: StoreConfig,
        data_dir: Path | str,
        doc_exists: Callable[[str], bool] | None = None,
    ) -> "ModelStore":
        """Restore a store; a missing directory yields the fresh default state.

        A present-but-unreadable file or a matrix whose shape disagrees with
        the engine registry or cluster count is an error, never a silent reset.
        """
        store = cls(config, data_dir=data_dir, doc_exists=doc_exists)
        root = Path(data_dir)
        if not root.exists():
            return store

        registry_path = root / "registry.json"
        if registry_path.exists():
            reg = _read_json(registry_path)
            persisted_engines = tuple(reg.get("engines", ()))
            if persisted_engines != config.engines:
                raise ModelLoadError(
                    registry_path,
                    f"engine registry {persisted_engines!r} does not match {config.engines!r}",
                )
            if int(reg.get("k", config.k)) != config.k:
                raise ModelLoadError(
                    registry_path, f"cluster count {reg.get('k')} does not match k={config.k}"
                )

        public_path = root / "public.json"
        if public_path.exists():
            payload = _read_json(public_path)
            store.public = PublicModel(
                public_weights=_matrix_from(payload, "weights", public_path, config),
                total_feedback=int(payload.get("total_feedback", 0)),
            )

        users_dir = root / "users"
        if users_dir.exists():
            for path in sorted(users_dir.glob("*.json")):
                payload = _read_json(path)
                user_id = payload.get("user_id")
                if not isinstance(user_id, str) or not user_id:
                    raise ModelLoadError(path, "missing user_id")
                n = int(payload.get("feedback_count", 0))
                store.users[user_id] = UserModel(
                    user_id=user_id,
                    private_weights=_matrix_from(payload, "weights", path, config),
                    feedback_count=n,
                    p=blend_parameter(n, config.t_saturation),
                )
        return store


def _read_json(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelLoadError(path, f"unreadable JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ModelLoadError(path, "expected a JSON object")
    return data


def _matrix_from(payload: dict, key: str, path: Path, config: StoreConfig) -> WeightMatrix:
    raw = payload.get(key)
    if not isinstance(raw, list):
        raise ModelLoadError(path, f"missing {key!r} matrix")
    try:
        matrix = WeightMatrix.from_lists(raw)
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(path, str(exc)) from exc
    if (matrix.n_engines, matrix.n_clusters) != (config.n_engines, config.k):
        raise ModelLoadError(
            path,
            f"matrix is {matrix.n_engines}x{matrix.n_clusters}, registry expects "
            f"{config.n_engines}x{config.k}",
        )
    return matrix


def read_feedback_log(path: Path | str) -> list[dict]:
    """Parse feedback.log into replayable records, preserving order."""
    records = []
    log_path = Path(path)
    if not log_path.exists():
        return records
    with open(log_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ModelLoadError(log_path, f"bad log line {lineno}: {exc.msg}") from exc
    return records


def replay_feedback(store: ModelStore, records: Sequence[dict]) -> ModelStore:
    """Apply logged events in order onto a store (normally a fresh one)."""
    for rec in records:
        event = FeedbackEvent(
            user_id=rec["user_id"],
            query_id=rec["query_id"],
            doc_id=rec["doc_id"],
            judgment=rec["judgment"],
            timestamp=rec.get("timestamp", ""),
        )
        store.record_feedback(event, rec["rsvs"], rec["membership"], log=False)
    return store
