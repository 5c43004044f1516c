"""Stateful per-query defense for a served classifier.

Two complementary checks guard the master model:

* **Spatial consensus** - a small ensemble trained on data subsamples
  votes on every query; in-distribution inputs produce near-unanimous
  agreement with the master, so low consensus marks the query as
  out-of-distribution and the answer is withheld.
* **Temporal drift** - penultimate-layer features of recently served
  queries sit in a sliding window; the mean cosine similarity between
  consecutive feature displacements is near a benign baseline for
  independent traffic but rises when a query sequence walks the feature
  space systematically, as optimization loops do.

Both thresholds are calibrated on benign traffic to a target false-flag
rate. A simplified distance-distribution detector (`prada_lite`,
:class:`PradaLiteInspector`) is included as a stateful baseline.

Inspectors attach to an :class:`~extractlab.attack.OracleSession`; flagged
queries consume attacker budget but return no answer.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .attack import OUTCOME_SERVED, OracleSession
from .exceptions import (
    ArchitectureError,
    ConfigError,
    InvalidInputError,
)
from .models import accuracy
from .validation import as_labels, as_matrix, as_vector

FLAG_LOW_CONSENSUS = "flag_low_consensus"
FLAG_OPTIMIZATION = "flag_optimization"
FLAG_DISTRIBUTION = "flag_query_distribution"
FLAG_TERMINATED = "flag_session_terminated"

_MODES = ("spatial", "temporal", "hybrid")
_POLICIES = ("reject", "terminate")
_NORM_FLOOR = 1e-12

# 99th percentile of the chi-squared distribution with 2 degrees of freedom
PRADA_THRESHOLD_99 = 9.21


def _safe_cos(u, v) -> float:
    """Cosine similarity where near-zero displacements contribute 0."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu <= _NORM_FLOOR or nv <= _NORM_FLOOR:
        return 0.0
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def consensus_score(x, master, ensemble) -> float:
    """Fraction of sub-models whose top-1 label matches the master's."""
    if not ensemble:
        raise InvalidInputError("ensemble must be non-empty")
    x = as_vector(x, "x")
    master_label = int(np.argmax(master.forward_one(x)[0]))
    votes = [int(np.argmax(sub.forward_one(x)[0])) for sub in ensemble]
    return float(np.mean([v == master_label for v in votes]))


def consensus_scores(X, master, ensemble) -> np.ndarray:
    """Vectorized consensus over rows of X."""
    if not ensemble:
        raise InvalidInputError("ensemble must be non-empty")
    X = as_matrix(X, "X")
    master_labels = master.predict(X)
    agree = np.zeros(X.shape[0])
    for sub in ensemble:
        agree += sub.predict(X) == master_labels
    return agree / len(ensemble)


def drift_score(features) -> float:
    """Mean cosine similarity of consecutive feature displacements.

    For a window of k feature vectors there are k-1 displacements and
    k-2 consecutive displacement pairs; the score averages their cosine
    similarities. Pairs touching a near-zero displacement contribute 0.
    A straight-line walk scores 1, independent steps hover near 0, and a
    perfect zig-zag scores -1.
    """
    F = as_matrix(features, "features")
    k = F.shape[0]
    if k < 3:
        raise InvalidInputError("drift needs at least 3 feature vectors")
    V = np.diff(F, axis=0)
    norms = np.linalg.norm(V, axis=1)
    dots = np.einsum("ij,ij->i", V[:-1], V[1:])
    cos = np.zeros(k - 2)
    good = (norms[:-1] > _NORM_FLOOR) & (norms[1:] > _NORM_FLOOR)
    denom = norms[:-1] * norms[1:]
    cos[good] = np.clip(dots[good] / denom[good], -1.0, 1.0)
    return float(cos.mean())


def sliding_drift_scores(features, window: int) -> np.ndarray:
    """Drift score of every length-``window`` slice of a feature stream.

    Equivalent to calling :func:`drift_score` on each consecutive window;
    computed in one vectorized pass for calibration streams.
    """
    F = as_matrix(features, "features")
    if window < 3:
        raise InvalidInputError("window must be >= 3")
    n = F.shape[0]
    if n < window:
        raise InvalidInputError(
            f"stream of {n} features is shorter than the window {window}"
        )
    V = np.diff(F, axis=0)
    norms = np.linalg.norm(V, axis=1)
    dots = np.einsum("ij,ij->i", V[:-1], V[1:])
    cos = np.zeros(n - 2)
    good = (norms[:-1] > _NORM_FLOOR) & (norms[1:] > _NORM_FLOOR)
    denom = norms[:-1] * norms[1:]
    cos[good] = np.clip(dots[good] / denom[good], -1.0, 1.0)
    kernel = np.full(window - 2, 1.0 / (window - 2))
    return np.convolve(cos, kernel, mode="valid")


class _DriftTracker:
    """Incremental sliding-window drift: O(1) array work per feature.

    Keeps the last window-2 displacement-pair cosines (each computed once
    from the same displacement floats as the batch formula) plus the
    previous displacement and its norm, so one append costs a vector
    subtraction, one dot product and a handful of scalar operations.
    """

    def __init__(self, window: int):
        if window < 3:
            raise InvalidInputError("window must be >= 3")
        self.window = int(window)
        self._count = 0
        self._pairs = self.window - 2
        self._cosines = deque(maxlen=self._pairs)
        self._prev_feature = None
        self._prev_disp = None
        self._prev_norm = 0.0

    def append(self, feature) -> None:
        h = np.asarray(feature, dtype=np.float64)
        prev = self._prev_feature
        if prev is not None:
            disp = h - prev
            norm = math.sqrt(float(disp @ disp))
            if self._prev_disp is not None:
                if norm <= _NORM_FLOOR or self._prev_norm <= _NORM_FLOOR:
                    cos = 0.0
                else:
                    cos = float(self._prev_disp @ disp) / (self._prev_norm * norm)
                    cos = min(1.0, max(-1.0, cos))
                self._cosines.append(cos)
            self._prev_disp = disp
            self._prev_norm = norm
        self._prev_feature = h
        self._count += 1

    def __len__(self) -> int:
        return min(self._count, self.window)

    @property
    def full(self) -> bool:
        return self._count >= self.window

    def score(self) -> float:
        if not self.full:
            raise InvalidInputError("drift window is not full yet")
        return sum(self._cosines) / self._pairs


class _StackedEnsemble:
    """Evaluate same-architecture sub-models in a few fused array ops.

    Same-shape one-hidden-layer ensembles (the common case) collapse to
    two matrix-vector products by concatenating first layers and putting
    the per-model output layers on a block diagonal; deeper uniform
    ensembles use stacked einsum contractions, anything else falls back
    to per-model forwards. Inspection latency rides on this path, so the
    fused variants matter.
    """

    def __init__(self, models):
        self.models = list(models)
        first = self.models[0]
        self.n = len(self.models)
        self.activation = first.activation
        self._stacked = all(
            m.layer_dims_ == first.layer_dims_ and m.activation == first.activation
            for m in self.models
        )
        self._fused = self._stacked and len(first.weights_) == 2
        if self._fused:
            n, hidden = self.n, first.weights_[0].shape[0]
            n_out = first.weights_[1].shape[0]
            self._W0 = np.concatenate([m.weights_[0] for m in self.models])
            self._b0 = np.concatenate([m.biases_[0] for m in self.models])
            self._W1 = np.zeros((n * n_out, n * hidden))
            for i, m in enumerate(self.models):
                self._W1[
                    i * n_out : (i + 1) * n_out, i * hidden : (i + 1) * hidden
                ] = m.weights_[1]
            self._b1 = np.concatenate([m.biases_[1] for m in self.models])
            self._out_shape = (n, n_out)
        elif self._stacked:
            depth = len(first.weights_)
            self._Ws = [
                np.stack([m.weights_[layer] for m in self.models])
                for layer in range(depth)
            ]
            self._bs = [
                np.stack([m.biases_[layer] for m in self.models])
                for layer in range(depth)
            ]

    def labels_one(self, x) -> np.ndarray:
        if self._fused:
            h = self._W0 @ x + self._b0
            h = np.tanh(h) if self.activation == "tanh" else np.maximum(h, 0.0)
            logits = (self._W1 @ h + self._b1).reshape(self._out_shape)
            return np.argmax(logits, axis=1)
        if not self._stacked:
            return np.array(
                [int(np.argmax(m.forward_one(x)[0])) for m in self.models]
            )
        h = np.einsum("noi,i->no", self._Ws[0], x) + self._bs[0]
        for layer in range(1, len(self._Ws)):
            h = np.tanh(h) if self.activation == "tanh" else np.maximum(h, 0.0)
            h = np.einsum("noi,ni->no", self._Ws[layer], h) + self._bs[layer]
        return np.argmax(h, axis=1)


@dataclass
class InspectionDecision:
    """Outcome of inspecting one query. ``label`` is present iff served.

    ``logits`` carries the master's raw scores on served queries so the
    session can derive a probability vector without a second forward
    pass; flagged queries expose neither.
    """

    outcome: str
    label: int | None = None
    logits: np.ndarray | None = None
    consensus: float | None = None
    drift: float | None = None


@dataclass(frozen=True)
class DefenseThresholds:
    tau_spatial: float
    tau_drift: float


class StatefulInspector:
    """Per-session query inspector combining the spatial and temporal checks.

    Parameters
    ----------
    master : the protected classifier (answers come from it alone).
    ensemble : list of sub-models for the consensus vote. Required for
        the spatial and hybrid modes.
    tau_spatial : flag when consensus falls strictly below this.
    tau_drift : flag when windowed drift rises strictly above this.
    window : temporal window length k (>= 3).
    mode : {"spatial", "temporal", "hybrid"}.
    policy : {"reject", "terminate"}; reject withholds single answers,
        terminate additionally refuses everything after the first flag.

    Per query the master runs exactly once; the temporal feature is read
    from that same forward pass, so the only extra model evaluations are
    the ensemble's (spatial modes). Queries flagged by the spatial check
    do not enter the temporal window.
    """

    def __init__(self, master, ensemble=None, tau_spatial=0.0, tau_drift=np.inf,
                 window: int = 20, mode: str = "hybrid", policy: str = "reject"):
        if mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}")
        if policy not in _POLICIES:
            raise ConfigError(f"policy must be one of {_POLICIES}")
        self.master = master
        self.mode = mode
        self.policy = policy
        self.tau_spatial = float(tau_spatial)
        self.tau_drift = float(tau_drift)
        self.window = int(window)
        self.spatial_enabled = mode in ("spatial", "hybrid")
        self.temporal_enabled = mode in ("temporal", "hybrid")
        if self.spatial_enabled:
            if not ensemble:
                raise ConfigError("spatial modes need a non-empty ensemble")
            self.ensemble = list(ensemble)
            self._stack = _StackedEnsemble(self.ensemble)
        else:
            self.ensemble = list(ensemble) if ensemble else []
            self._stack = None
        if self.temporal_enabled:
            if len(master.weights_) < 2:
                raise ArchitectureError(
                    "temporal mode needs a master with a hidden layer"
                )
            self._tracker = _DriftTracker(self.window)
        else:
            self._tracker = None
        self.extra_passes_per_query = len(self.ensemble) if self.spatial_enabled else 0
        self.inspected = 0
        self.flag_counts: dict[str, int] = {}
        self._terminated = False

    @property
    def flags_total(self) -> int:
        return sum(self.flag_counts.values())

    @property
    def buffer_len(self) -> int:
        return 0 if self._tracker is None else len(self._tracker)

    def reset(self) -> None:
        """Forget all per-session state (window, counters, termination)."""
        if self.temporal_enabled:
            self._tracker = _DriftTracker(self.window)
        self.inspected = 0
        self.flag_counts = {}
        self._terminated = False

    def _flag(self, outcome, consensus=None, drift=None) -> InspectionDecision:
        self.flag_counts[outcome] = self.flag_counts.get(outcome, 0) + 1
        if self.policy == "terminate":
            self._terminated = True
        return InspectionDecision(outcome, consensus=consensus, drift=drift)

    def inspect(self, x) -> InspectionDecision:
        """Run the enabled checks on one query, in spatial-then-temporal order."""
        self.inspected += 1
        if self._terminated:
            return self._flag(FLAG_TERMINATED)
        if x.__class__ is not np.ndarray or x.dtype != np.float64 or x.ndim != 1:
            x = np.asarray(x, dtype=np.float64)
        logits, hidden = self.master.forward_one(x)
        label = int(np.argmax(logits))
        consensus = None
        if self.spatial_enabled:
            votes = self._stack.labels_one(x)
            consensus = int(np.count_nonzero(votes == label)) / votes.shape[0]
            if consensus < self.tau_spatial:
                return self._flag(FLAG_LOW_CONSENSUS, consensus=consensus)
        drift = None
        if self.temporal_enabled:
            tracker = self._tracker
            tracker.append(hidden)
            if tracker.full:
                drift = tracker.score()
                if drift > self.tau_drift:
                    return self._flag(
                        FLAG_OPTIMIZATION, consensus=consensus, drift=drift
                    )
        return InspectionDecision(
            OUTCOME_SERVED, label=label, logits=logits,
            consensus=consensus, drift=drift,
        )


def calibrate_thresholds(master, ensemble, benign_X, window: int = 20,
                         target_fpr: float = 0.05) -> DefenseThresholds:
    """Pick flag thresholds from benign traffic.

    tau_spatial is the ``target_fpr`` quantile of benign consensus scores
    (flag strictly below it) and tau_drift is the ``1 - target_fpr``
    quantile of benign drift scores over sliding windows (flag strictly
    above it). Quantiles use the lower/higher order statistics so that on
    the calibration stream itself each check flags at most a target_fpr
    fraction. target_fpr = 0 never flags benign calibration data;
    target_fpr = 1 flags everything.
    """
    X = as_matrix(benign_X, "benign_X")
    if window < 3:
        raise InvalidInputError("window must be >= 3")
    if not 0.0 <= float(target_fpr) <= 1.0:
        raise InvalidInputError("target_fpr must lie in [0, 1]")
    if X.shape[0] < 10 * window:
        raise InvalidInputError(
            f"benign stream of {X.shape[0]} rows is too short to calibrate "
            f"a window of {window} (need at least {10 * window})"
        )
    if float(target_fpr) >= 1.0:
        return DefenseThresholds(tau_spatial=np.inf, tau_drift=-np.inf)
    cons = consensus_scores(X, master, ensemble)
    feats = master.hidden_features(X)
    drifts = sliding_drift_scores(feats, window)
    tau_spatial = float(np.quantile(cons, target_fpr, method="lower"))
    tau_drift = float(np.quantile(drifts, 1.0 - target_fpr, method="higher"))
    return DefenseThresholds(tau_spatial=tau_spatial, tau_drift=tau_drift)


# ----------------------------------------------------------------------
# distance-distribution baseline

def jarque_bera_statistic(values) -> float:
    """Jarque-Bera normality statistic over a history of scalars.

    n/6 * (skewness^2 + excess_kurtosis^2 / 4); asymptotically
    chi-squared with 2 degrees of freedom under normality. A constant
    history has no scale to judge normality against, so it returns
    infinity (callers flag it explicitly).
    """
    v = as_vector(values, "values")
    n = v.shape[0]
    centered = v - v.mean()
    m2 = float(np.mean(centered**2))
    if m2 <= 1e-24:
        return float(np.inf)
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    skew = m3 / m2**1.5
    excess_kurt = m4 / (m2 * m2) - 3.0
    return n / 6.0 * (skew**2 + excess_kurt**2 / 4.0)


def prada_lite(min_distance_history, flag_threshold: float = PRADA_THRESHOLD_99) -> bool:
    """Flag when the min-distance history deviates from normality.

    The history holds, for each past query, its minimum input-space
    distance to all earlier queries. Benign traffic keeps this roughly
    bell-shaped; query synthesis concentrates or spreads it. Requires at
    least 30 samples. A constant history flags explicitly.
    """
    v = as_vector(min_distance_history, "min_distance_history")
    if v.shape[0] < 30:
        raise InvalidInputError(
            "min-distance history needs at least 30 samples"
        )
    return bool(jarque_bera_statistic(v) > float(flag_threshold))


class PradaLiteInspector:
    """Stateful min-distance normality detector, attachable to a session.

    Tracks every inspected query, maintains the min-distance history, and
    flags queries once the history's normality statistic crosses the
    threshold. Cost grows with history length (one distance row per
    query), which is the point of comparison against the constant-cost
    consensus/drift checks.
    """

    def __init__(self, master, flag_threshold: float = PRADA_THRESHOLD_99,
                 min_history: int = 30, policy: str = "reject"):
        if policy not in _POLICIES:
            raise ConfigError(f"policy must be one of {_POLICIES}")
        if min_history < 30:
            raise ConfigError("min_history must be >= 30")
        self.master = master
        self.flag_threshold = float(flag_threshold)
        self.min_history = int(min_history)
        self.policy = policy
        self._capacity = 256
        self._rows = None
        self._n_rows = 0
        self._history: list[float] = []
        self.inspected = 0
        self.flag_counts: dict[str, int] = {}
        self._terminated = False
        self.extra_passes_per_query = 0

    @property
    def flags_total(self) -> int:
        return sum(self.flag_counts.values())

    def _remember(self, x):
        if self._rows is None:
            self._rows = np.empty((self._capacity, x.shape[0]))
        elif self._n_rows == self._rows.shape[0]:
            grown = np.empty((2 * self._rows.shape[0], x.shape[0]))
            grown[: self._n_rows] = self._rows
            self._rows = grown
        self._rows[self._n_rows] = x
        self._n_rows += 1

    def inspect(self, x) -> InspectionDecision:
        self.inspected += 1
        if self._terminated:
            self.flag_counts[FLAG_TERMINATED] = (
                self.flag_counts.get(FLAG_TERMINATED, 0) + 1
            )
            return InspectionDecision(FLAG_TERMINATED)
        x = np.asarray(x, dtype=np.float64)
        logits, _ = self.master.forward_one(x)
        if self._n_rows > 0:
            diff = self._rows[: self._n_rows] - x
            self._history.append(float(np.sqrt((diff * diff).sum(axis=1).min())))
        self._remember(x)
        if len(self._history) >= self.min_history:
            stat = jarque_bera_statistic(np.asarray(self._history))
            if stat > self.flag_threshold:
                self.flag_counts[FLAG_DISTRIBUTION] = (
                    self.flag_counts.get(FLAG_DISTRIBUTION, 0) + 1
                )
                if self.policy == "terminate":
                    self._terminated = True
                return InspectionDecision(FLAG_DISTRIBUTION)
        label = int(np.argmax(logits))
        return InspectionDecision(OUTCOME_SERVED, label=label, logits=logits)


# ----------------------------------------------------------------------
# benign utility and end-to-end evaluation

@dataclass
class BenignStreamReport:
    n: int
    flags_total: int
    flag_rate: float
    accuracy: float | None          # flagged rows count as errors
    served_labels: np.ndarray       # -1 where flagged
    outcomes: list[str] = field(repr=False, default_factory=list)


def run_benign_stream(inspector, X, y=None) -> BenignStreamReport:
    """Feed rows through an inspector in order and measure utility."""
    X = as_matrix(X, "X")
    labels = np.full(X.shape[0], -1, dtype=np.int64)
    outcomes = []
    for i in range(X.shape[0]):
        decision = inspector.inspect(X[i])
        outcomes.append(decision.outcome)
        if decision.outcome == OUTCOME_SERVED:
            labels[i] = decision.label
    flags = int(np.sum(labels < 0))
    acc = None
    if y is not None:
        truth = as_labels(y, "y", n_classes=None)
        acc = float(np.mean(labels == truth))
    return BenignStreamReport(
        n=X.shape[0],
        flags_total=flags,
        flag_rate=flags / X.shape[0],
        accuracy=acc,
        served_labels=labels,
        outcomes=outcomes,
    )


@dataclass
class DefenseModeResult:
    mode: str
    attack_agreement: float
    flags_total: int
    detection_index: int | None
    benign_flag_rate: float
    benign_accuracy: float
    accuracy_drop: float
    latency_extra_passes: int


@dataclass
class DefenseReport:
    thresholds: DefenseThresholds
    undefended_agreement: float
    undefended_benign_accuracy: float
    modes: dict[str, DefenseModeResult]


def evaluate_defense(
    run_attack,
    victim,
    ensemble,
    attack_cfg,
    calib_X,
    benign_X,
    benign_y,
    window: int = 20,
    target_fpr: float = 0.05,
    modes=("none", "spatial", "temporal", "hybrid"),
    policy: str = "reject",
) -> DefenseReport:
    """Run one attack under each defense mode and measure both sides.

    ``run_attack(session)`` must execute the attack against the given
    session and return ``(surrogate, RunMetrics)``. Thresholds are
    calibrated once on ``calib_X`` and shared by every mode so the
    ablation rows are comparable. Benign utility is measured on the
    held-out ``benign_X``/``benign_y`` stream with a fresh inspector.
    """
    thresholds = calibrate_thresholds(victim, ensemble, calib_X, window, target_fpr)
    benign_X = as_matrix(benign_X, "benign_X")
    undef_benign_acc = accuracy(victim, benign_X, benign_y)

    results: dict[str, DefenseModeResult] = {}
    undefended_agreement = None
    for mode in modes:
        if mode == "none":
            session = OracleSession(victim, attack_cfg.budget, attack_cfg.label_mode)
            _, metrics = run_attack(session)
            undefended_agreement = metrics.final_agreement
            results["none"] = DefenseModeResult(
                mode="none",
                attack_agreement=metrics.final_agreement,
                flags_total=0,
                detection_index=None,
                benign_flag_rate=0.0,
                benign_accuracy=undef_benign_acc,
                accuracy_drop=0.0,
                latency_extra_passes=0,
            )
            continue
        inspector = StatefulInspector(
            victim, ensemble,
            tau_spatial=thresholds.tau_spatial,
            tau_drift=thresholds.tau_drift,
            window=window, mode=mode, policy=policy,
        )
        session = OracleSession(
            victim, attack_cfg.budget, attack_cfg.label_mode, defense=inspector
        )
        _, metrics = run_attack(session)
        benign_inspector = StatefulInspector(
            victim, ensemble,
            tau_spatial=thresholds.tau_spatial,
            tau_drift=thresholds.tau_drift,
            window=window, mode=mode, policy=policy,
        )
        benign = run_benign_stream(benign_inspector, benign_X, benign_y)
        drop = (
            0.0 if undef_benign_acc == 0
            else 1.0 - benign.accuracy / undef_benign_acc
        )
        results[mode] = DefenseModeResult(
            mode=mode,
            attack_agreement=metrics.final_agreement,
            flags_total=metrics.flags_total,
            detection_index=metrics.detection_index,
            benign_flag_rate=benign.flag_rate,
            benign_accuracy=benign.accuracy,
            accuracy_drop=drop,
            latency_extra_passes=inspector.extra_passes_per_query,
        )
    if undefended_agreement is None:
        raise ConfigError('modes must include "none" for the ASR reference')
    return DefenseReport(
        thresholds=thresholds,
        undefended_agreement=undefended_agreement,
        undefended_benign_accuracy=undef_benign_acc,
        modes=results,
    )
