"""Flat text configuration for the experiment harness.

Files hold one ``dotted.key = value`` pair per line; ``#`` starts a
comment and blank lines are ignored. Every key must appear in
:data:`DEFAULTS`, which fixes its type and default, so a config file
only ever lists overrides. ``parse_config`` and ``serialize_config``
round-trip exactly.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError

# key -> (type, default). bool before int: bool is not accepted as int.
DEFAULTS: dict[str, tuple[type, object]] = {
    # task
    "data.n_classes": (int, 10),
    "data.n_features": (int, 32),
    "data.per_class": (int, 150),
    "data.spread": (float, 1.0),
    "data.center_scale": (float, 4.0),
    # where cluster centers come from: "prior-shell" decodes them from a
    # thin latent shell of the query prior (plus one anchor class at the
    # decoder's origin image), "gaussian" draws them isotropically
    "data.center_source": (str, "prior-shell"),
    "data.center_latent_min": (float, 0.20),
    "data.center_latent_max": (float, 0.90),
    "data.train_fraction": (float, 0.8),
    # victim model
    "victim.hidden_width": (int, 64),
    "victim.epochs": (int, 40),
    "victim.batch_size": (int, 32),
    "victim.learning_rate": (float, 0.05),
    "victim.momentum": (float, 0.9),
    "victim.weight_decay": (float, 1e-2),
    # surrogate trained from stolen labels
    "surrogate.hidden_width": (int, 32),
    "surrogate.epochs": (int, 30),
    "surrogate.batch_size": (int, 32),
    "surrogate.learning_rate": (float, 0.05),
    "surrogate.momentum": (float, 0.9),
    "surrogate.weight_decay": (float, 1e-4),
    # generative prior over queries
    "prior.source": (str, "seeded"),
    "prior.latent_dim": (int, 8),
    "prior.hidden_width": (int, 64),
    "prior.scale": (float, 8.0),
    "prior.box_half_width": (float, 3.0),
    "prior.world_epochs": (int, 80),
    # extraction attack
    "attack.budget": (int, 2000),
    "attack.cloud_size": (int, 8),
    "attack.vicinal_sigma": (float, 0.1),
    "attack.retrain_interval": (int, 250),
    "attack.label_mode": (str, "hard"),
    "attack.subspace_dim": (int, 4),
    "attack.ucb_beta": (float, 2.0),
    "attack.pool_size": (int, 512),
    "attack.gp_lengthscale": (float, 1.0),
    "attack.gp_signal_var": (float, 1.0),
    "attack.gp_noise_var": (float, 1e-4),
    "attack.gp_max_observations": (int, 500),
    "attack.gp_refit_interval": (int, 0),
    "attack.noise_sigma": (float, 1.0),
    # defense
    "defense.n_submodels": (int, 5),
    "defense.subsample_fraction": (float, 0.5),
    "defense.sub_hidden_width": (int, 8),
    "defense.sub_epochs": (int, 20),
    "defense.window": (int, 20),
    "defense.target_fpr": (float, 0.05),
    "defense.mode": (str, "hybrid"),
    "defense.policy": (str, "reject"),
    # benign traffic
    "benign.calibration_queries": (int, 1000),
    "benign.eval_queries": (int, 5000),
}

_CHOICES = {
    "prior.source": ("seeded", "world"),
    "data.center_source": ("prior-shell", "gaussian"),
    "attack.label_mode": ("hard", "soft"),
    "defense.mode": ("spatial", "temporal", "hybrid"),
    "defense.policy": ("reject", "terminate"),
}


def _coerce(key: str, raw: str):
    expected, _ = DEFAULTS[key]
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        text = text[1:-1]
    if expected is bool:
        low = text.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"expected true or false, got {raw!r}", field=key)
        return low == "true"
    if expected is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", field=key)
    if expected is float:
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}", field=key)
        if not np.isfinite(value):
            raise ConfigError(f"expected a finite number, got {raw!r}", field=key)
        return value
    if key in _CHOICES and text not in _CHOICES[key]:
        raise ConfigError(
            f"must be one of {', '.join(_CHOICES[key])}; got {text!r}", field=key
        )
    return text


def parse_config(text: str) -> dict:
    """Parse override pairs from config text. Unknown keys are errors."""
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key", field=key)
        if key in overrides:
            raise ConfigError("key appears more than once", field=key)
        overrides[key] = _coerce(key, raw)
    return overrides


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def effective_config(overrides: dict | None = None) -> dict:
    """Defaults with overrides applied; rejects unknown keys and bad types."""
    cfg = {key: default for key, (_, default) in DEFAULTS.items()}
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key", field=key)
        expected, _ = DEFAULTS[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected) or (
            expected is int and isinstance(value, bool)
        ):
            raise ConfigError(
                f"expected {expected.__name__}, got {type(value).__name__}",
                field=key,
            )
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ConfigError(
                f"must be one of {', '.join(_CHOICES[key])}; got {value!r}",
                field=key,
            )
        cfg[key] = value
    return cfg


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: dict) -> str:
    """Canonical text form: sorted keys, one pair per line."""
    for key in cfg:
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key", field=key)
    lines = [f"{key} = {_format_value(cfg[key])}" for key in sorted(cfg)]
    return "\n".join(lines) + "\n"
