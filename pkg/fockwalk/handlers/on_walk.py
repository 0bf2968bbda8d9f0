"""
Walker distributions step by step, long format for heat maps.
"""

import pandas as pd
from loguru import logger

from fockwalk.core.jc_walk import run_walk
from fockwalk.core.quantum import EXCITED, GROUND, SystemSpace
from fockwalk.utils.config.client import WalkSettings
from fockwalk.utils.hash import config_digest


def on_walk(settings: WalkSettings) -> tuple[pd.DataFrame, dict]:
    space = SystemSpace(n_max=settings.resolved_n_max)
    params = settings.jc_params()
    variant = settings.walk_variant()
    coin = EXCITED if settings.initial_coin == "excited" else GROUND
    logger.info(f"Walking {settings.steps} steps with the {variant.kind} coin (g tau = {params.g * params.tau:.6f}, n_max = {space.n_max})")

    distributions = run_walk(variant, params, settings.steps, space.basis_state(coin, 0))
    table = pd.DataFrame(
        [(step, n, float(p)) for step, dist in enumerate(distributions) for n, p in enumerate(dist)],
        columns=["step", "n", "probability"],
    )

    final = distributions[-1]
    config = {**settings.dict(), "n_max": space.n_max, "tau": params.tau}
    summary = {
        "steps": settings.steps,
        "final_target_population": float(final[settings.n_target]) if settings.n_target <= space.n_max else None,
        "max_population_above_target": float(max(dist[settings.n_target + 1 :].sum() for dist in distributions)),
        "final_mean_photon_number": float(sum(n * p for n, p in enumerate(final))),
        "config": config,
        "config_digest": config_digest(config),
    }
    return table, summary
