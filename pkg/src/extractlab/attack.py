"""Black-box extraction attacks against a label oracle.

An :class:`OracleSession` wraps the victim behind a budgeted, optionally
defended query interface: every row sent to the oracle consumes budget
whether or not an answer is served. The attack runners share one query
loop that differs only in how the next batch of inputs is synthesized:

* ``latent-bo``     - Bayesian optimization over a random subspace of a
                      frozen decoder's latent box, steering toward inputs
                      whose vicinal neighborhood gets diverse labels.
* ``random-latent`` - uniform subspace points, otherwise the same pipeline.
* ``proxy``         - rows of a stand-in dataset in seeded random order.
* ``pixel-noise``   - i.i.d. Gaussian input-space noise.

Every runner returns the trained surrogate plus a :class:`RunMetrics`
record holding the agreement-versus-queries curve.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .bayesopt import AcquisitionConfig, GaussianProcess, RandomEmbedding, propose_candidate
from .exceptions import (
    BudgetExceededError,
    ConfigError,
    InvalidInputError,
)
from .numerics import shannon_entropy, softmax
from .rng import SeededRng, derive_seed
from .validation import as_labels, as_matrix, as_vector

OUTCOME_SERVED = "served"

_LABEL_MODES = ("hard", "soft")


@dataclass
class QueryResult:
    """Per-row outcome of an oracle query."""

    index: int            # 1-based position in the session's query stream
    served: bool
    outcome: str
    label: int | None = None
    proba: np.ndarray | None = None
    consensus: float | None = None
    drift: float | None = None


class OracleSession:
    """Budgeted query interface to a victim model, optionally defended.

    Parameters
    ----------
    victim : fitted classifier exposing ``predict``, ``predict_proba``,
        ``forward_one``, ``n_features_in_`` and ``n_classes_``.
    budget : int
        Maximum number of rows this session may send.
    label_mode : {"hard", "soft"}
        Hard mode serves top-1 labels; soft mode serves full distributions.
    defense : object or None
        Per-query inspector with ``inspect(x) -> decision``; when present
        the victim is only evaluated through the inspector (it is the
        defended master model), and flagged rows consume budget without
        returning an answer.
    """

    def __init__(self, victim, budget: int, label_mode: str = "hard",
                 defense=None, session_id: str = "session-0"):
        if label_mode not in _LABEL_MODES:
            raise ConfigError(f"label_mode must be one of {_LABEL_MODES}")
        if int(budget) < 0:
            raise ConfigError("budget must be non-negative")
        self.victim = victim
        self.budget = int(budget)
        self.label_mode = label_mode
        self.defense = defense
        self.session_id = str(session_id)
        self.queries_used = 0
        self.served_count = 0
        self.flag_counts: dict[str, int] = {}
        self.log: list[tuple[int, str, float | None, float | None]] = []

    @property
    def remaining(self) -> int:
        return self.budget - self.queries_used

    @property
    def flags_total(self) -> int:
        return sum(self.flag_counts.values())

    @property
    def first_flag_index(self) -> int | None:
        for index, outcome, _, _ in self.log:
            if outcome != OUTCOME_SERVED:
                return index
        return None

    def query(self, X) -> list[QueryResult]:
        """Send rows to the oracle in order; every row consumes budget.

        Raises BudgetExceededError before consuming anything if the batch
        would overrun the budget.
        """
        X = as_matrix(X, "X", cols=self.victim.n_features_in_)
        n = X.shape[0]
        if self.queries_used + n > self.budget:
            raise BudgetExceededError(
                f"batch of {n} rows would exceed budget "
                f"({self.queries_used} of {self.budget} used)"
            )
        results = []
        if self.defense is None:
            if self.label_mode == "soft":
                probas = self.victim.predict_proba(X)
                labels = np.argmax(probas, axis=1)
            else:
                probas = None
                labels = self.victim.predict(X)
            for i in range(n):
                self.queries_used += 1
                self.served_count += 1
                result = QueryResult(
                    index=self.queries_used,
                    served=True,
                    outcome=OUTCOME_SERVED,
                    label=int(labels[i]),
                    proba=None if probas is None else probas[i],
                )
                self.log.append((result.index, OUTCOME_SERVED, None, None))
                results.append(result)
            return results

        for i in range(n):
            self.queries_used += 1
            decision = self.defense.inspect(X[i])
            served = decision.outcome == OUTCOME_SERVED
            if served:
                self.served_count += 1
                result = QueryResult(
                    index=self.queries_used,
                    served=True,
                    outcome=OUTCOME_SERVED,
                    label=decision.label,
                    proba=(
                        softmax(decision.logits)
                        if self.label_mode == "soft" else None
                    ),
                    consensus=decision.consensus,
                    drift=decision.drift,
                )
            else:
                self.flag_counts[decision.outcome] = (
                    self.flag_counts.get(decision.outcome, 0) + 1
                )
                result = QueryResult(
                    index=self.queries_used,
                    served=False,
                    outcome=decision.outcome,
                    consensus=decision.consensus,
                    drift=decision.drift,
                )
            self.log.append(
                (result.index, result.outcome, result.consensus, result.drift)
            )
            results.append(result)
        return results


def vicinal_sample(z_base, cloud_size: int, sigma: float, rng: SeededRng,
                   box_low, box_high) -> tuple[np.ndarray, int]:
    """Gaussian cloud around a latent point, clipped into the latent box.

    Each of the ``cloud_size`` rows is ``z_base`` plus an i.i.d.
    N(0, sigma^2 I) perturbation (sigma is a standard deviation).
    Returns the clipped rows and the count of rows that needed clipping.
    """
    z = as_vector(z_base, "z_base")
    if cloud_size < 1:
        raise InvalidInputError("cloud_size must be >= 1")
    if not np.isfinite(sigma) or sigma < 0:
        raise InvalidInputError("sigma must be non-negative and finite")
    eps = sigma * rng.normal((cloud_size, z.shape[0]))
    raw = z[None, :] + eps
    cloud = np.clip(raw, np.asarray(box_low), np.asarray(box_high))
    moved = int(np.any(cloud != raw, axis=1).sum())
    return cloud, moved


def observe_objective(cloud_results, label_mode: str) -> float:
    """Scalar exploration objective from one cloud's oracle results.

    Soft mode: mean Shannon entropy of the served distributions.
    Hard mode: Shannon entropy of the empirical histogram of served
    labels (the degenerate per-row entropy of a hard answer is zero, so
    the cloud's label diversity stands in for it).
    A fully flagged cloud yields the sentinel 0.0.
    """
    if label_mode not in _LABEL_MODES:
        raise ConfigError(f"label_mode must be one of {_LABEL_MODES}")
    served = [r for r in cloud_results if r.served]
    if not served:
        return 0.0
    if label_mode == "soft":
        return float(np.mean([shannon_entropy(r.proba) for r in served]))
    labels = np.array([r.label for r in served])
    _, counts = np.unique(labels, return_counts=True)
    return shannon_entropy(counts / counts.sum())


@dataclass
class AttackConfig:
    """Knobs shared by the attack runners. Everything is seeded."""

    budget: int = 2000
    cloud_size: int = 8
    vicinal_sigma: float = 0.1
    retrain_interval: int = 250
    label_mode: str = "hard"
    subspace_dim: int = 4
    ucb_beta: float = 2.0
    pool_size: int = 512
    gp_lengthscale: float = 1.0     # unit = the box-normalized scale
    gp_signal_var: float = 1.0
    gp_noise_var: float = 1e-4
    gp_max_observations: int = 500
    gp_refit_interval: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.cloud_size < 1:
            raise ConfigError("cloud_size must be >= 1", field="attack.cloud_size")
        if self.budget < self.cloud_size:
            raise ConfigError(
                "budget must be at least one cloud", field="attack.budget"
            )
        if not np.isfinite(self.vicinal_sigma) or self.vicinal_sigma < 0:
            raise ConfigError(
                "vicinal_sigma must be non-negative", field="attack.vicinal_sigma"
            )
        if self.retrain_interval < 1:
            raise ConfigError(
                "retrain_interval must be >= 1", field="attack.retrain_interval"
            )
        if self.label_mode not in _LABEL_MODES:
            raise ConfigError(
                f"label_mode must be one of {_LABEL_MODES}",
                field="attack.label_mode",
            )
        if self.subspace_dim < 1:
            raise ConfigError(
                "subspace_dim must be >= 1", field="attack.subspace_dim"
            )


@dataclass
class CheckpointRecord:
    queries_used: int
    agreement: float
    flags_total: int
    clip_events: int
    gp_observations: int
    wall_time_ms: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "queries_used": self.queries_used,
                "agreement": self.agreement,
                "flags_total": self.flags_total,
                "clip_events": self.clip_events,
                "gp_observations": self.gp_observations,
                "wall_time_ms": self.wall_time_ms,
            },
            sort_keys=True,
        )


@dataclass
class RunMetrics:
    """Everything measured during one attack run."""

    method: str
    label_mode: str
    budget: int
    seed: int
    curve: list[CheckpointRecord] = field(default_factory=list)
    final_agreement: float = 0.0
    queries_used: int = 0
    served: int = 0
    flags: dict[str, int] = field(default_factory=dict)
    flags_total: int = 0
    clip_events: int = 0
    gp_observations: int = 0
    detection_index: int | None = None
    early_mean_entropy: float | None = None
    wall_time_ms: float = 0.0

    def validate(self):
        xs = [c.queries_used for c in self.curve]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise InvalidInputError("curve must be monotone in queries_used")
        if self.curve and self.curve[-1].agreement != self.final_agreement:
            raise InvalidInputError(
                "final agreement must equal the last curve point"
            )
        return self

    def to_jsonl(self) -> str:
        """Line-delimited self-describing checkpoint records."""
        return "\n".join(c.to_json() for c in self.curve) + "\n"

    def summary(self) -> dict:
        return {
            "method": self.method,
            "label_mode": self.label_mode,
            "budget": self.budget,
            "seed": self.seed,
            "final_agreement": self.final_agreement,
            "queries_used": self.queries_used,
            "served": self.served,
            "flags_total": self.flags_total,
            "clip_events": self.clip_events,
            "gp_observations": self.gp_observations,
            "detection_index": self.detection_index,
            "early_mean_entropy": self.early_mean_entropy,
        }


_EARLY_WINDOW = 100


class _ExtractionLoop:
    """Shared query/checkpoint/retrain machinery for all runners."""

    def __init__(self, method, cfg: AttackConfig, session: OracleSession,
                 surrogate_template, eval_X, eval_labels):
        self.method = method
        self.cfg = cfg
        self.session = session
        self.template = surrogate_template
        self.eval_X = as_matrix(eval_X, "eval_X")
        self.eval_labels = as_labels(eval_labels, "eval_labels")
        if self.eval_labels.shape[0] != self.eval_X.shape[0]:
            raise InvalidInputError("eval_X and eval_labels disagree on rows")
        self.n_features = int(session.victim.n_features_in_)
        self.n_classes = int(session.victim.n_classes_)
        self.rows: list[np.ndarray] = []
        self.hard_targets: list[int] = []
        self.soft_targets: list[np.ndarray] = []
        self.curve: list[CheckpointRecord] = []
        self.clip_events = 0
        self.gp_observations = 0
        self.early_entropies: list = []
        self.next_mark = cfg.retrain_interval
        self.retrain_count = 0
        self.rows_at_last_retrain = -1
        self.surrogate = None
        self.start = time.perf_counter()

    def record_batch(self, X_batch, results):
        for x, r in zip(X_batch, results):
            if not r.served:
                continue
            self.rows.append(x)
            if self.cfg.label_mode == "soft":
                self.soft_targets.append(r.proba)
            else:
                self.hard_targets.append(r.label)

    def _elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0

    def _retrain(self):
        seed = derive_seed(self.cfg.seed, "surrogate", self.retrain_count)
        self.retrain_count += 1
        clf = clone(self.template)
        clf.set_params(seed=seed, n_classes=self.n_classes)
        if not self.rows:
            clf.init_weights(self.n_features, self.n_classes)
        else:
            X = np.vstack(self.rows)
            if self.cfg.label_mode == "soft":
                clf.fit(X, np.vstack(self.soft_targets))
            else:
                clf.fit(X, np.asarray(self.hard_targets, dtype=np.int64))
        self.rows_at_last_retrain = len(self.rows)
        self.surrogate = clf
        return float(np.mean(clf.predict(self.eval_X) == self.eval_labels))

    def checkpoint_if_due(self):
        served = len(self.rows)
        if served < self.next_mark:
            return
        agreement = self._retrain()
        self.curve.append(
            CheckpointRecord(
                queries_used=self.session.queries_used,
                agreement=agreement,
                flags_total=self.session.flags_total,
                clip_events=self.clip_events,
                gp_observations=self.gp_observations,
                wall_time_ms=self._elapsed_ms(),
            )
        )
        interval = self.cfg.retrain_interval
        self.next_mark = (served // interval + 1) * interval

    def finish(self) -> tuple:
        # final surrogate on the complete transcript, unless the last
        # checkpoint already saw every served pair
        if self.rows_at_last_retrain != len(self.rows) or self.surrogate is None:
            agreement = self._retrain()
            self.curve.append(
                CheckpointRecord(
                    queries_used=self.session.queries_used,
                    agreement=agreement,
                    flags_total=self.session.flags_total,
                    clip_events=self.clip_events,
                    gp_observations=self.gp_observations,
                    wall_time_ms=self._elapsed_ms(),
                )
            )
        early = None
        if self.early_entropies:
            early = float(np.mean(self.early_entropies))
        metrics = RunMetrics(
            method=self.method,
            label_mode=self.cfg.label_mode,
            budget=self.cfg.budget,
            seed=self.cfg.seed,
            curve=self.curve,
            final_agreement=self.curve[-1].agreement,
            queries_used=self.session.queries_used,
            served=self.session.served_count,
            flags=dict(self.session.flag_counts),
            flags_total=self.session.flags_total,
            clip_events=self.clip_events,
            gp_observations=self.gp_observations,
            detection_index=self.session.first_flag_index,
            early_mean_entropy=early,
            wall_time_ms=self._elapsed_ms(),
        ).validate()
        return self.surrogate, metrics


def run_latent_attack(
    cfg: AttackConfig,
    session: OracleSession,
    prior,
    surrogate_template,
    eval_X,
    eval_labels,
    method: str = "latent-bo",
) -> tuple:
    """Latent-space extraction: optimize label diversity over a subspace.

    ``method="latent-bo"`` proposes subspace points by GP-UCB on the
    cloud-diversity objective; ``method="random-latent"`` draws them
    uniformly and skips the GP, keeping the rest of the pipeline equal.
    """
    if method not in ("latent-bo", "random-latent"):
        raise ConfigError(f"unknown latent method {method!r}")
    if cfg.subspace_dim > prior.latent_dim:
        raise ConfigError(
            "subspace_dim must not exceed the prior's latent dimension",
            field="attack.subspace_dim",
        )
    embedding = RandomEmbedding(
        derive_seed(cfg.seed, "embedding"),
        prior.latent_dim,
        cfg.subspace_dim,
        prior.box_low,
        prior.box_high,
    )
    use_gp = method == "latent-bo"
    gp = GaussianProcess(
        lengthscale=cfg.gp_lengthscale * np.sqrt(cfg.subspace_dim),
        signal_var=cfg.gp_signal_var,
        noise_var=cfg.gp_noise_var,
        max_observations=cfg.gp_max_observations,
        refit_interval=cfg.gp_refit_interval,
    )
    acq = AcquisitionConfig(beta=cfg.ucb_beta, pool_size=cfg.pool_size)
    rng = SeededRng(derive_seed(cfg.seed, "attack-stream"))

    loop = _ExtractionLoop(method, cfg, session, surrogate_template,
                           eval_X, eval_labels)
    while session.remaining >= cfg.cloud_size:
        if use_gp:
            theta = propose_candidate(gp, embedding, acq, rng)
        else:
            theta = embedding.sample_pool(rng, 1)[0]
        z_star, clipped = embedding.project(theta)
        loop.clip_events += int(clipped)
        cloud, moved = vicinal_sample(
            z_star, cfg.cloud_size, cfg.vicinal_sigma, rng,
            prior.box_low, prior.box_high,
        )
        loop.clip_events += moved
        X_batch = prior.decode_batch(cloud)
        results = session.query(X_batch)
        loop.record_batch(X_batch, results)
        if use_gp:
            gp.add_observation(theta, observe_objective(results, cfg.label_mode))
            loop.gp_observations = gp.n_observations
        loop.checkpoint_if_due()
    return loop.finish()


def run_random_latent_baseline(cfg, session, prior, surrogate_template,
                               eval_X, eval_labels):
    """Uniform-latent ablation of the optimized attack."""
    return run_latent_attack(cfg, session, prior, surrogate_template,
                             eval_X, eval_labels, method="random-latent")


def run_proxy_baseline(cfg: AttackConfig, session: OracleSession, proxy_X,
                       surrogate_template, eval_X, eval_labels) -> tuple:
    """Query budget-many rows of a proxy dataset in seeded random order."""
    proxy_X = as_matrix(proxy_X, "proxy_X")
    if proxy_X.shape[0] < cfg.budget:
        raise InvalidInputError(
            f"proxy dataset has {proxy_X.shape[0]} rows, need >= {cfg.budget}"
        )
    order = SeededRng(derive_seed(cfg.seed, "proxy-order")).permutation(
        proxy_X.shape[0]
    )[: cfg.budget]
    loop = _ExtractionLoop("proxy", cfg, session, surrogate_template,
                           eval_X, eval_labels)
    cursor = 0
    while session.remaining > 0 and cursor < order.shape[0]:
        take = min(cfg.cloud_size, session.remaining, order.shape[0] - cursor)
        X_batch = proxy_X[order[cursor : cursor + take]]
        cursor += take
        results = session.query(X_batch)
        loop.record_batch(X_batch, results)
        loop.checkpoint_if_due()
    return loop.finish()


def run_pixel_noise_baseline(cfg: AttackConfig, session: OracleSession,
                             noise_sigma: float, surrogate_template,
                             eval_X, eval_labels) -> tuple:
    """Query i.i.d. Gaussian input-space noise (the cold-start floor).

    Also records the mean victim-answer entropy over the first
    ``min(100, budget)`` served queries: per-row distribution entropy in
    soft mode, entropy of the served-label histogram in hard mode.
    """
    if not np.isfinite(noise_sigma) or noise_sigma < 0:
        raise InvalidInputError("noise_sigma must be non-negative and finite")
    rng = SeededRng(derive_seed(cfg.seed, "attack-stream"))
    loop = _ExtractionLoop("pixel-noise", cfg, session, surrogate_template,
                           eval_X, eval_labels)
    dim = int(session.victim.n_features_in_)
    early_raw: list = []
    while session.remaining > 0:
        take = min(cfg.cloud_size, session.remaining)
        X_batch = noise_sigma * rng.normal((take, dim))
        results = session.query(X_batch)
        loop.record_batch(X_batch, results)
        for r in results:
            if r.served and r.index <= min(_EARLY_WINDOW, cfg.budget):
                early_raw.append(
                    shannon_entropy(r.proba) if cfg.label_mode == "soft"
                    else r.label
                )
        loop.checkpoint_if_due()
    if early_raw:
        if cfg.label_mode == "hard":
            _, counts = np.unique(
                np.asarray(early_raw, dtype=np.int64), return_counts=True
            )
            loop.early_entropies = [shannon_entropy(counts / counts.sum())]
        else:
            loop.early_entropies = [float(np.mean(early_raw))]
    return loop.finish()
