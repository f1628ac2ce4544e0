"""Optimal investment under drift uncertainty with Bayesian learning and smooth ambiguity."""

import json as _json

from ._ambmerton import (
    SCHEMA_VERSION,
    Error,
    MarketModel,
    Preferences,
    TwoPointModel,
    adjust_prior,
    default_config_json,
    dual_norm_discrete,
    fraction_convex,
    kmm_value,
    lower_weight_g,
    merton_fraction,
    optimal_fraction,
    posterior_sample,
    precommit_fraction,
    precommit_value,
    run_cli,
    value,
    value_log_learning,
    value_log_precommit,
    value_of_learning,
)

__version__ = "0.1.0"


def default_config():
    """The built-in default configuration as a dict."""
    return _json.loads(default_config_json())


def cli_record(*args):
    """Runs a record command of the command-line tool and returns the parsed JSON document.

    Raises RuntimeError carrying the exit code and message when the command fails.
    """
    code, out, err = run_cli([str(a) for a in args])
    if code != 0:
        raise RuntimeError(f"ambmerton {' '.join(map(str, args))} exited with {code}: {err.strip()}")
    return _json.loads(out)


__all__ = [name for name in dir() if not name.startswith("_")]
