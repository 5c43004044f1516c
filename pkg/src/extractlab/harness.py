"""Deterministic end-to-end experiment scenarios.

Every scenario is a pure function of (config overrides, seed) plus an
output directory. Component seeds are derived from the scenario seed by
labeled branches, so re-running a scenario reproduces every file except
``metrics.jsonl``, which is the only artifact allowed to contain wall
times. Summary tables are formatted (percent, one decimal) rather than
dumped as raw floats so they are byte-stable across runs and platforms.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .attack import (
    AttackConfig,
    OracleSession,
    OUTCOME_SERVED,
    RunMetrics,
    run_latent_attack,
    run_pixel_noise_baseline,
    run_proxy_baseline,
)
from .config import effective_config, serialize_config
from .data import Dataset, generate_mixture_dataset, sample_mixture
from .defense import (
    DefenseReport,
    StatefulInspector,
    calibrate_thresholds,
    evaluate_defense,
)
from .exceptions import ConfigError, ExtractLabError, InvalidInputError
from .generator import build_seeded_prior, train_world_prior
from .models import NeuralClassifier, accuracy, train_ensemble
from .rng import SeededRng, derive_seed
from .serialization import _atomic_write, save_classifier, save_decoder

METHODS = ("latent-bo", "random-latent", "proxy", "pixel-noise")

# ablation row label -> inspector mode (None = undefended)
ABLATION_ROWS = (
    ("none", None),
    ("spatial", "spatial"),
    ("temporal", "temporal"),
    ("full", "hybrid"),
)


class AblationCheckFailure(ExtractLabError):
    """The ablation table violates an expected ordering."""


def _write_text(path, text: str) -> None:
    _atomic_write(path, text.encode("utf-8"))


def _write_csv(path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)] + [",".join(row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def _opt(x) -> str:
    return "" if x is None else str(x)


@dataclass
class World:
    """Everything one scenario seed materializes before the attack."""

    cfg: dict
    seed: int
    dataset: Dataset
    victim: NeuralClassifier
    prior: object
    surrogate_template: NeuralClassifier
    eval_X: np.ndarray
    eval_labels: np.ndarray
    victim_train_accuracy: float
    victim_test_accuracy: float


def _shell_center_sampler(decoder, n_classes: int, lo: float, hi: float):
    """Centers on the decoder's image: one anchor class at the origin
    image plus ``n_classes - 1`` classes decoded from a thin latent
    shell. Methods that can reach the decoder's manifold see all the
    class structure; origin-ball noise sees only the anchor."""
    dim_z = decoder.latent_dim

    def sampler(rng):
        centers = np.empty((n_classes, decoder.output_dim))
        centers[0] = decoder.decode(np.zeros(dim_z))
        for i in range(1, n_classes):
            u = rng.normal(dim_z)
            u /= np.linalg.norm(u)
            norm = lo + (hi - lo) * rng.uniform(1)[0]
            centers[i] = decoder.decode(norm * u)
        return centers

    return sampler


def build_world(cfg: dict, seed: int) -> World:
    # the seeded decoder doubles as the world's generative geometry, so
    # it is built before the dataset it may place centers for
    shell_decoder = build_seeded_prior(
        derive_seed(seed, "prior"),
        latent_dim=cfg["prior.latent_dim"],
        output_dim=cfg["data.n_features"],
        hidden_width=cfg["prior.hidden_width"],
        scale=cfg["prior.scale"],
        box_half_width=cfg["prior.box_half_width"],
    )
    sampler = None
    if cfg["data.center_source"] == "prior-shell":
        lo = cfg["data.center_latent_min"]
        hi = cfg["data.center_latent_max"]
        if lo < 0 or hi < lo:
            raise ConfigError(
                "need 0 <= center_latent_min <= center_latent_max",
                field="data.center_latent_min",
            )
        sampler = _shell_center_sampler(
            shell_decoder, cfg["data.n_classes"], lo, hi
        )
    dataset = generate_mixture_dataset(
        n_classes=cfg["data.n_classes"],
        n_features=cfg["data.n_features"],
        per_class=cfg["data.per_class"],
        spread=cfg["data.spread"],
        center_scale=cfg["data.center_scale"],
        train_fraction=cfg["data.train_fraction"],
        seed=derive_seed(seed, "data"),
        center_sampler=sampler,
    )
    w = cfg["victim.hidden_width"]
    victim = NeuralClassifier(
        hidden_layers=(w, w),
        epochs=cfg["victim.epochs"],
        batch_size=cfg["victim.batch_size"],
        learning_rate=cfg["victim.learning_rate"],
        momentum=cfg["victim.momentum"],
        weight_decay=cfg["victim.weight_decay"],
        seed=derive_seed(seed, "victim"),
    ).fit(dataset.X_train, dataset.y_train)
    if cfg["prior.source"] == "world":
        prior, _ = train_world_prior(
            dataset.X_train,
            latent_dim=cfg["prior.latent_dim"],
            hidden_width=cfg["prior.hidden_width"],
            epochs=cfg["prior.world_epochs"],
            seed=derive_seed(seed, "prior"),
            box_half_width=cfg["prior.box_half_width"],
        )
    else:
        prior = shell_decoder
    surrogate_template = NeuralClassifier(
        hidden_layers=(cfg["surrogate.hidden_width"],),
        epochs=cfg["surrogate.epochs"],
        batch_size=cfg["surrogate.batch_size"],
        learning_rate=cfg["surrogate.learning_rate"],
        momentum=cfg["surrogate.momentum"],
        weight_decay=cfg["surrogate.weight_decay"],
    )
    return World(
        cfg=cfg,
        seed=seed,
        dataset=dataset,
        victim=victim,
        prior=prior,
        surrogate_template=surrogate_template,
        eval_X=dataset.X_test,
        eval_labels=victim.predict(dataset.X_test),
        victim_train_accuracy=accuracy(victim, dataset.X_train, dataset.y_train),
        victim_test_accuracy=accuracy(victim, dataset.X_test, dataset.y_test),
    )


def build_ensemble(world: World) -> list[NeuralClassifier]:
    cfg = world.cfg
    template = NeuralClassifier(
        hidden_layers=(cfg["defense.sub_hidden_width"],),
        epochs=cfg["defense.sub_epochs"],
        batch_size=cfg["victim.batch_size"],
        learning_rate=cfg["victim.learning_rate"],
        momentum=cfg["victim.momentum"],
        weight_decay=cfg["victim.weight_decay"],
        seed=derive_seed(world.seed, "ensemble-template"),
    )
    return train_ensemble(
        world.dataset.X_train,
        world.dataset.y_train,
        n_models=cfg["defense.n_submodels"],
        fraction=cfg["defense.subsample_fraction"],
        template=template,
        seed=derive_seed(world.seed, "ensemble-subsets"),
    )


def build_attack_config(cfg: dict, seed: int) -> AttackConfig:
    return AttackConfig(
        budget=cfg["attack.budget"],
        cloud_size=cfg["attack.cloud_size"],
        vicinal_sigma=cfg["attack.vicinal_sigma"],
        retrain_interval=cfg["attack.retrain_interval"],
        label_mode=cfg["attack.label_mode"],
        subspace_dim=cfg["attack.subspace_dim"],
        ucb_beta=cfg["attack.ucb_beta"],
        pool_size=cfg["attack.pool_size"],
        gp_lengthscale=cfg["attack.gp_lengthscale"],
        gp_signal_var=cfg["attack.gp_signal_var"],
        gp_noise_var=cfg["attack.gp_noise_var"],
        gp_max_observations=cfg["attack.gp_max_observations"],
        gp_refit_interval=cfg["attack.gp_refit_interval"],
        # one attack seed for every method: paired methods share the
        # embedding and query streams, so comparisons isolate the method
        seed=derive_seed(seed, "attack"),
    )


def proxy_pool(world: World) -> np.ndarray:
    """Attacker-side stand-in data drawn from the task mixture."""
    X, _ = sample_mixture(
        world.dataset.centers,
        world.dataset.spread,
        world.cfg["attack.budget"],
        SeededRng(derive_seed(world.seed, "proxy-data")),
    )
    return X


def run_method(method: str, world: World, session: OracleSession):
    """Dispatch one attack method against an existing session."""
    acfg = build_attack_config(world.cfg, world.seed)
    common = (world.surrogate_template, world.eval_X, world.eval_labels)
    if method in ("latent-bo", "random-latent"):
        return run_latent_attack(acfg, session, world.prior, *common, method=method)
    if method == "proxy":
        return run_proxy_baseline(acfg, session, proxy_pool(world), *common)
    if method == "pixel-noise":
        return run_pixel_noise_baseline(
            acfg, session, world.cfg["attack.noise_sigma"], *common
        )
    raise ConfigError(f"unknown attack method {method!r}")


def _metrics_lines(metrics: RunMetrics) -> list[str]:
    """One self-describing record per checkpoint (wall time included)."""
    return [
        json.dumps(
            {
                "method": metrics.method,
                "label_mode": metrics.label_mode,
                "seed": metrics.seed,
                "budget": metrics.budget,
                "queries_used": c.queries_used,
                "agreement": c.agreement,
                "flags_total": c.flags_total,
                "clip_events": c.clip_events,
                "gp_observations": c.gp_observations,
                "wall_time_ms": c.wall_time_ms,
            },
            sort_keys=True,
        )
        for c in metrics.curve
    ]


def _curve_rows(metrics: RunMetrics) -> list[list[str]]:
    return [
        [
            str(c.queries_used),
            _pct(c.agreement),
            str(c.flags_total),
            str(c.clip_events),
            str(c.gp_observations),
        ]
        for c in metrics.curve
    ]


_CURVE_HEADER = [
    "queries_used", "agreement_pct", "flags_total",
    "clip_events", "gp_observations",
]


# ----------------------------------------------------------------------
# scenarios

def train_victim_scenario(overrides, seed: int, out_dir) -> dict:
    """Train the victim and persist it plus the query prior."""
    cfg = effective_config(overrides)
    os.makedirs(out_dir, exist_ok=True)
    world = build_world(cfg, seed)
    save_classifier(world.victim, os.path.join(out_dir, "victim.model"))
    save_decoder(world.prior, os.path.join(out_dir, "prior.decoder"))
    _write_text(
        os.path.join(out_dir, "effective_config.txt"), serialize_config(cfg)
    )
    summary = {
        "scenario": "train-victim",
        "seed": seed,
        "victim_train_accuracy": world.victim_train_accuracy,
        "victim_test_accuracy": world.victim_test_accuracy,
        "victim_parameters": world.victim.n_parameters(),
        "prior_source": cfg["prior.source"],
        "prior_weights_sha256": world.prior.weights_hash(),
    }
    _write_text(
        os.path.join(out_dir, "run_summary.json"),
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
    )
    return summary


_SUMMARY_HEADER = [
    "method", "label_mode", "seed", "budget", "served", "flags_total",
    "clip_events", "final_agreement_pct", "detection_index",
]


def attack_scenario(overrides, seed: int, out_dir, methods=METHODS) -> dict:
    """Run each attack method against a fresh undefended oracle."""
    cfg = effective_config(overrides)
    os.makedirs(out_dir, exist_ok=True)
    world = build_world(cfg, seed)
    _write_text(
        os.path.join(out_dir, "effective_config.txt"), serialize_config(cfg)
    )

    results: dict[str, RunMetrics] = {}
    metric_lines = []
    summary_rows = []
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown attack method {method!r}")
        session = OracleSession(
            world.victim, cfg["attack.budget"], cfg["attack.label_mode"]
        )
        _, metrics = run_method(method, world, session)
        results[method] = metrics
        metric_lines.extend(_metrics_lines(metrics))
        _write_csv(
            os.path.join(out_dir, f"curve_{method}.csv"),
            _CURVE_HEADER, _curve_rows(metrics),
        )
        summary_rows.append([
            method,
            metrics.label_mode,
            str(metrics.seed),
            str(metrics.budget),
            str(metrics.served),
            str(metrics.flags_total),
            str(metrics.clip_events),
            _pct(metrics.final_agreement),
            _opt(metrics.detection_index),
        ])
    _write_text(
        os.path.join(out_dir, "metrics.jsonl"), "\n".join(metric_lines) + "\n"
    )
    _write_csv(os.path.join(out_dir, "summary.csv"), _SUMMARY_HEADER, summary_rows)

    summary = {
        "scenario": "attack",
        "seed": seed,
        "victim_test_accuracy": world.victim_test_accuracy,
        "label_mode": cfg["attack.label_mode"],
        "budget": cfg["attack.budget"],
        "final_agreement": {
            m: results[m].final_agreement for m in results
        },
    }
    _write_text(
        os.path.join(out_dir, "run_summary.json"),
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
    )
    return {"summary": summary, "metrics": results}


def _benign_streams(world: World):
    cfg = world.cfg
    calib_X, _ = sample_mixture(
        world.dataset.centers, world.dataset.spread,
        cfg["benign.calibration_queries"],
        SeededRng(derive_seed(world.seed, "benign-calibration")),
    )
    eval_X, eval_y = sample_mixture(
        world.dataset.centers, world.dataset.spread,
        cfg["benign.eval_queries"],
        SeededRng(derive_seed(world.seed, "benign-eval")),
    )
    return calib_X, eval_X, eval_y


def calibrate_scenario(overrides, seed: int, out_dir) -> dict:
    """Fit defense thresholds on a benign stream and persist them."""
    cfg = effective_config(overrides)
    os.makedirs(out_dir, exist_ok=True)
    world = build_world(cfg, seed)
    ensemble = build_ensemble(world)
    calib_X, _, _ = _benign_streams(world)
    thresholds = calibrate_thresholds(
        world.victim, ensemble, calib_X,
        window=cfg["defense.window"], target_fpr=cfg["defense.target_fpr"],
    )
    summary = {
        "scenario": "calibrate",
        "seed": seed,
        "tau_spatial": thresholds.tau_spatial,
        "tau_drift": thresholds.tau_drift,
        "window": cfg["defense.window"],
        "target_fpr": cfg["defense.target_fpr"],
        "calibration_queries": cfg["benign.calibration_queries"],
        "n_submodels": cfg["defense.n_submodels"],
    }
    _write_text(
        os.path.join(out_dir, "thresholds.json"),
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
    )
    _write_text(
        os.path.join(out_dir, "effective_config.txt"), serialize_config(cfg)
    )
    return summary


_DEFENSE_HEADER = [
    "mode", "attack_agreement_pct", "flags_total", "detection_index",
    "benign_flag_rate_pct", "benign_accuracy_pct", "accuracy_drop_pct",
    "extra_passes_per_query",
]


def _defense_rows(report: DefenseReport, row_order) -> list[list[str]]:
    rows = []
    for label, mode in row_order:
        key = mode if mode is not None else "none"
        r = report.modes[key]
        rows.append([
            label,
            _pct(r.attack_agreement),
            str(r.flags_total),
            _opt(r.detection_index),
            _pct(r.benign_flag_rate),
            _pct(r.benign_accuracy),
            _pct(r.accuracy_drop),
            str(r.latency_extra_passes),
        ])
    return rows


def _evaluate_world(world: World, modes, policy: str):
    """Calibrate once, then attack this world under each defense mode."""
    cfg = world.cfg
    ensemble = build_ensemble(world)
    calib_X, benign_X, benign_y = _benign_streams(world)
    acfg = build_attack_config(cfg, world.seed)
    sessions: list[OracleSession] = []

    def run(session: OracleSession):
        sessions.append(session)
        return run_latent_attack(
            acfg, session, world.prior,
            world.surrogate_template, world.eval_X, world.eval_labels,
        )

    report = evaluate_defense(
        run, world.victim, ensemble, acfg,
        calib_X, benign_X, benign_y,
        window=cfg["defense.window"],
        target_fpr=cfg["defense.target_fpr"],
        modes=modes,
        policy=policy,
    )
    return report, sessions


def _flag_log_lines(session: OracleSession) -> list[str]:
    lines = []
    for index, outcome, consensus, drift in session.log:
        if outcome == OUTCOME_SERVED:
            continue
        lines.append(json.dumps(
            {
                "session_id": session.session_id,
                "query_index": index,
                "outcome": outcome,
                "consensus_score": consensus,
                "drift_score": drift,
            },
            sort_keys=True,
        ))
    return lines


def defend_scenario(overrides, seed: int, out_dir) -> dict:
    """Attack the configured defense mode, with undefended reference."""
    cfg = effective_config(overrides)
    os.makedirs(out_dir, exist_ok=True)
    world = build_world(cfg, seed)
    mode = cfg["defense.mode"]
    report, sessions = _evaluate_world(
        world, modes=("none", mode), policy=cfg["defense.policy"]
    )
    # sessions arrive in mode order; the defended one is second
    _write_text(
        os.path.join(out_dir, "flags.jsonl"),
        "\n".join(_flag_log_lines(sessions[1]) or [""]) + "\n",
    )
    row_order = (("none", None), (mode, mode))
    _write_csv(
        os.path.join(out_dir, "defense_summary.csv"),
        _DEFENSE_HEADER, _defense_rows(report, row_order),
    )
    _write_text(
        os.path.join(out_dir, "effective_config.txt"), serialize_config(cfg)
    )
    defended = report.modes[mode]
    summary = {
        "scenario": "defend",
        "seed": seed,
        "mode": mode,
        "tau_spatial": report.thresholds.tau_spatial,
        "tau_drift": report.thresholds.tau_drift,
        "undefended_agreement": report.undefended_agreement,
        "defended_agreement": defended.attack_agreement,
        "asr_ratio": (
            defended.attack_agreement / report.undefended_agreement
            if report.undefended_agreement > 0 else 0.0
        ),
        "flags_total": defended.flags_total,
        "detection_index": defended.detection_index,
        "benign_flag_rate": defended.benign_flag_rate,
        "accuracy_drop": defended.accuracy_drop,
    }
    _write_text(
        os.path.join(out_dir, "run_summary.json"),
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
    )
    return {"summary": summary, "report": report}


_ABLATION_HEADER = [
    "seed", "mode", "attack_agreement_pct", "flags_total",
    "benign_flag_rate_pct", "accuracy_drop_pct", "extra_passes_per_query",
]

_ABLATION_SUMMARY_HEADER = [
    "mode", "mean_attack_agreement_pct", "asr_ratio_vs_none",
    "mean_benign_flag_rate_pct", "mean_accuracy_drop_pct",
    "extra_passes_per_query",
]


def ablation_scenario(overrides, seed: int, out_dir, n_seeds: int = 5,
                      check: bool = False) -> dict:
    """Defense ablation (none/spatial/temporal/full) over several seeds."""
    if n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    cfg = effective_config(overrides)
    os.makedirs(out_dir, exist_ok=True)
    modes = tuple(m if m is not None else "none" for _, m in ABLATION_ROWS)

    per_seed_rows = []
    collected: dict[str, list] = {label: [] for label, _ in ABLATION_ROWS}
    for s in range(seed, seed + n_seeds):
        world = build_world(cfg, s)
        report, _ = _evaluate_world(world, modes=modes, policy=cfg["defense.policy"])
        for label, mode in ABLATION_ROWS:
            r = report.modes[mode if mode is not None else "none"]
            collected[label].append(r)
            per_seed_rows.append([
                str(s), label,
                _pct(r.attack_agreement),
                str(r.flags_total),
                _pct(r.benign_flag_rate),
                _pct(r.accuracy_drop),
                str(r.latency_extra_passes),
            ])
    _write_csv(os.path.join(out_dir, "ablation.csv"), _ABLATION_HEADER,
               per_seed_rows)

    means = {
        label: {
            "attack_agreement": float(
                np.mean([r.attack_agreement for r in rows])
            ),
            "benign_flag_rate": float(np.mean([r.benign_flag_rate for r in rows])),
            "accuracy_drop": float(np.mean([r.accuracy_drop for r in rows])),
            "extra_passes": rows[0].latency_extra_passes,
        }
        for label, rows in collected.items()
    }
    none_mean = means["none"]["attack_agreement"]
    summary_rows = []
    for label, _ in ABLATION_ROWS:
        m = means[label]
        ratio = m["attack_agreement"] / none_mean if none_mean > 0 else 0.0
        summary_rows.append([
            label,
            _pct(m["attack_agreement"]),
            f"{ratio:.3f}",
            _pct(m["benign_flag_rate"]),
            _pct(m["accuracy_drop"]),
            str(m["extra_passes"]),
        ])
    _write_csv(
        os.path.join(out_dir, "ablation_summary.csv"),
        _ABLATION_SUMMARY_HEADER, summary_rows,
    )
    _write_text(
        os.path.join(out_dir, "effective_config.txt"), serialize_config(cfg)
    )

    result = {
        "scenario": "ablation",
        "seeds": list(range(seed, seed + n_seeds)),
        "means": {
            label: means[label]["attack_agreement"] for label, _ in ABLATION_ROWS
        },
    }
    _write_text(
        os.path.join(out_dir, "run_summary.json"),
        json.dumps(result, sort_keys=True, indent=2) + "\n",
    )

    if check:
        failures = []
        spatial = means["spatial"]["attack_agreement"]
        temporal = means["temporal"]["attack_agreement"]
        full = means["full"]["attack_agreement"]
        if full > 0.7 * none_mean:
            failures.append(
                f"full defense keeps {full:.4f} agreement, above "
                f"0.7 x undefended ({0.7 * none_mean:.4f})"
            )
        if spatial >= none_mean:
            failures.append(
                f"spatial-only ({spatial:.4f}) does not beat undefended "
                f"({none_mean:.4f})"
            )
        if temporal >= none_mean:
            failures.append(
                f"temporal-only ({temporal:.4f}) does not beat undefended "
                f"({none_mean:.4f})"
            )
        if full > min(spatial, temporal) + 0.02:
            failures.append(
                f"full defense ({full:.4f}) exceeds the better single check "
                f"({min(spatial, temporal):.4f}) by more than 2 points"
            )
        if failures:
            raise AblationCheckFailure("; ".join(failures))
    return result


def report_scenario(metrics_dir, out_dir) -> dict:
    """Aggregate every metrics.jsonl under a directory into one table.

    The table has one row per method and one column per (budget,
    label_mode) pair found in the records, holding the mean final
    agreement (percent, one decimal) over seeds. A plot-ready mean
    curve file (queries, agreement) is written per column group.
    """
    records = []
    for root, _, files in sorted(os.walk(metrics_dir)):
        for name in sorted(files):
            if name != "metrics.jsonl":
                continue
            with open(os.path.join(root, name), "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        records.append(json.loads(line))
    if not records:
        raise InvalidInputError(
            f"no metrics.jsonl records found under {metrics_dir}"
        )
    os.makedirs(out_dir, exist_ok=True)

    # final agreement of one run = its checkpoint with the most queries
    runs: dict[tuple, dict] = {}
    for rec in records:
        key = (rec["method"], rec["label_mode"], rec["budget"], rec["seed"])
        best = runs.get(key)
        if best is None or rec["queries_used"] >= best["queries_used"]:
            runs[key] = rec

    columns = sorted({(k[2], k[1]) for k in runs})     # (budget, label_mode)
    methods = sorted({k[0] for k in runs})
    header = ["method"] + [f"{mode}@{budget}" for budget, mode in columns]
    rows = []
    for method in methods:
        row = [method]
        for budget, mode in columns:
            finals = [
                rec["agreement"] for key, rec in runs.items()
                if key[0] == method and key[1] == mode and key[2] == budget
            ]
            row.append(_pct(float(np.mean(finals))) if finals else "")
        rows.append(row)
    _write_csv(os.path.join(out_dir, "report.csv"), header, rows)

    curve_files = 0
    for budget, mode in columns:
        for method in methods:
            group = [
                rec for rec in records
                if rec["method"] == method and rec["label_mode"] == mode
                and rec["budget"] == budget
            ]
            if not group:
                continue
            by_q: dict[int, list] = {}
            for rec in group:
                by_q.setdefault(rec["queries_used"], []).append(rec["agreement"])
            curve_rows = [
                [str(q), _pct(float(np.mean(by_q[q])))] for q in sorted(by_q)
            ]
            _write_csv(
                os.path.join(out_dir, f"curve_{method}_{mode}_{budget}.csv"),
                ["queries", "agreement_pct"], curve_rows,
            )
            curve_files += 1
    return {
        "scenario": "report",
        "methods": methods,
        "columns": [f"{mode}@{budget}" for budget, mode in columns],
        "runs": len(runs),
        "curve_files": curve_files,
    }
