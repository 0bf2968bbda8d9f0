import pandas as pd
from loguru import logger

from fockwalk.core.entities import ProtocolParams, StepRecord
from fockwalk.core.protocol import (
    off_resonant_emission,
    peak_fidelity,
    run_protocol,
    stabilization_step,
    stationary_record,
    step_duration,
)
from fockwalk.utils.config.server import SNAPSHOT_STEP
from fockwalk.utils.hash import config_digest


def records_table(records: list[StepRecord]) -> pd.DataFrame:
    rows = []
    for r in records:
        row = {
            "step": r.step,
            "fidelity": r.fidelity,
            "fidelity_std": r.fidelity_std,
            "leak": r.leak,
            "coin_excited": r.coin_excited,
        }
        row.update({f"p{n}": p for n, p in enumerate(r.populations)})
        rows.append(row)
    return pd.DataFrame(rows)


def protocol_summary(records: list[StepRecord], p: ProtocolParams) -> dict:
    peak_step, peak = peak_fidelity(records)
    stable_at = stabilization_step(records)
    snapshot = next((r for r in records if r.step == SNAPSHOT_STEP), None)
    config = p.dict()
    return {
        "peak_step": peak_step,
        "peak_fidelity": peak,
        "stabilization_step": stable_at,
        "stationary_fidelity": stationary_record(records).fidelity if stable_at is not None else None,
        "final_fidelity": records[-1].fidelity,
        "final_leak": records[-1].leak,
        "max_truncation_leak": max(r.truncation_leak for r in records),
        "snapshot_step": SNAPSHOT_STEP if snapshot else None,
        "snapshot_populations": snapshot.populations if snapshot else None,
        "off_resonant_emission": off_resonant_emission(p, p.n_target),
        "step_duration": step_duration(p),
        "trajectories": 1 if p.sigma_n == 0 else p.trajectories,
        "config": config,
        "config_digest": config_digest(config),
    }


def on_protocol(p: ProtocolParams) -> tuple[pd.DataFrame, dict]:
    records = run_protocol(p)
    summary = protocol_summary(records, p)
    if summary["stabilization_step"] is None:
        logger.warning(f"Fidelity did not stabilize within {p.steps} steps")
    logger.info(f"Peak fidelity {summary['peak_fidelity']:.4f} at step {summary['peak_step']}")
    return records_table(records), summary
