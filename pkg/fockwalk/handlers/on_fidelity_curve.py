"""
Analytic fidelity budget against simulated stationary fidelity, per target.
"""

import math

import pandas as pd
from loguru import logger

from fockwalk.core.analysis import (
    MIN_ALPHA_TARGETS,
    alpha_from_record,
    analytic_fidelity,
    estimate_alpha,
    solve_balance_fidelity,
)
from fockwalk.core.entities import ConfigError, NotStationaryError
from fockwalk.core.protocol import run_protocol, stationary_record
from fockwalk.utils.config.client import CurveSettings
from fockwalk.utils.hash import config_digest


def on_fidelity_curve(settings: CurveSettings) -> tuple[pd.DataFrame, dict]:
    if not settings.targets:
        raise ConfigError("no targets")
    rows = []
    stationary_runs = {}
    for n_target in settings.targets:
        budget = settings.budget(n_target)
        row = {
            "n_T": n_target,
            "F_analytic": analytic_fidelity(budget),
            "F_balance": solve_balance_fidelity(budget),
            "F_numeric": math.nan,
            "alpha_estimate": math.nan,
        }
        if not settings.analytic_only:
            records = run_protocol(settings.protocol_params(n_target))
            try:
                record = stationary_record(records)
            except NotStationaryError:
                logger.warning(f"n_T = {n_target} did not reach a stationary state, leaving it out of alpha")
            else:
                stationary_runs[n_target] = records
                row["F_numeric"] = record.fidelity
                if record.fidelity < 1:
                    row["alpha_estimate"] = alpha_from_record(record, n_target)
        rows.append(row)

    alpha = None
    if len(stationary_runs) >= MIN_ALPHA_TARGETS:
        try:
            alpha = estimate_alpha(stationary_runs)
        except ConfigError as e:
            logger.warning(f"Skipping the alpha estimate: {e}")
    config = settings.dict()
    summary = {
        "alpha_estimate": alpha.alpha if alpha else None,
        "alpha_spread": alpha.spread if alpha else None,
        "alpha_assumed": settings.alpha,
        "targets": list(settings.targets),
        "config": config,
        "config_digest": config_digest(config),
    }
    return pd.DataFrame(rows, columns=["n_T", "F_analytic", "F_balance", "F_numeric", "alpha_estimate"]), summary
