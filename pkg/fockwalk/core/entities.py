import math
from typing import Literal

from pydantic import BaseModel, root_validator, validator

from fockwalk.utils.config.server import (
    DEFAULT_TRAJECTORIES,
    LEAK_TRAP_LEVEL,
    MIN_TRUNCATION_MARGIN,
    TRUNCATION_TOLERANCE,
    TRUNCATION_MARGIN,
)


class FockwalkError(Exception):
    pass


class DimensionMismatchError(FockwalkError, ValueError):
    pass


class InvalidStateError(FockwalkError, ValueError):
    pass


class ConfigError(FockwalkError, ValueError):
    pass


class NotStationaryError(FockwalkError):
    def __init__(self, message="Fidelity trace never stabilized"):
        super().__init__(message)


class ValidationFailure(FockwalkError):
    def __init__(self, failed: list[str]):
        self.failed = failed
        super().__init__(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: {', '.join(failed)}")


class TruncationFault(FockwalkError):
    """
    Population reached the top of the truncated Fock ladder, so the run no
    longer represents the untruncated dynamics.
    """

    def __init__(self, leak: float, n_max: int, step: int | None = None):
        self.leak = leak
        self.n_max = n_max
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"Truncation fault{where}: P(n >= {n_max - 2}) = {leak:.3e} with n_max = {n_max}")


class JCParams(BaseModel):
    g: float
    tau: float

    class Config:
        frozen = True

    @validator("g")
    def g_positive(cls, g):
        if not g > 0:
            raise ValueError(f"g must be positive, got {g}")
        return g

    @validator("tau")
    def tau_non_negative(cls, tau):
        if tau < 0:
            raise ValueError(f"tau must be non-negative, got {tau}")
        return tau

    def theta(self, n):
        return self.g * self.tau * math.sqrt(n + 1)


class WalkVariant(BaseModel):
    kind: Literal["hadamard"] | Literal["flip"] | Literal["damped"]
    eta: float = 0.0

    class Config:
        frozen = True

    @validator("eta")
    def eta_in_unit_interval(cls, eta):
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        return eta

    @classmethod
    def unitary_hadamard(cls) -> "WalkVariant":
        return cls(kind="hadamard")

    @classmethod
    def unitary_flip(cls) -> "WalkVariant":
        return cls(kind="flip")

    @classmethod
    def damped(cls, eta: float = 0.0) -> "WalkVariant":
        return cls(kind="damped", eta=eta)


class ProtocolParams(BaseModel):
    """
    Rates in units of the NV decay rate gamma, times in units of 1/gamma.
    Defaults are the standard operating point of the protocol.
    """

    g: float = 30.0
    delta_g: float = 300.0
    gamma: float = 1.0
    gamma_c: float = 0.1
    gamma_sted: float = 1e4
    sigma_n: float = 0.0
    n_target: int = 6
    k: int = 1
    n_max: int | None = None
    steps: int = 150
    trajectories: int = DEFAULT_TRAJECTORIES
    seed: int = 0
    tau_gamma: float | None = None
    decay_hamiltonian: bool = False
    jc_mode: Literal["unitary"] | Literal["lindblad"] = "unitary"
    truncation_tolerance: float = TRUNCATION_TOLERANCE

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def check_and_resolve(cls, values):
        if not values["gamma"] > 0:
            raise ValueError("gamma must be positive")
        if values["gamma_sted"] < values["gamma"]:
            raise ValueError("gamma_sted must be at least gamma")
        if values["g"] <= 0:
            raise ValueError("g must be positive")
        for name in ("gamma_c", "sigma_n", "delta_g"):
            if values[name] < 0:
                raise ValueError(f"{name} must be non-negative")
        if values["n_target"] < 0 or values["k"] < 1:
            raise ValueError("n_target must be >= 0 and k >= 1")
        if values["steps"] < 0 or values["trajectories"] < 1:
            raise ValueError("steps must be >= 0 and trajectories >= 1")
        if not 0 <= values["seed"] < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        n_target = values["n_target"]
        if values["n_max"] is None:
            trapped = values["sigma_n"] == 0 and not values["decay_hamiltonian"] and values["jc_mode"] == "unitary"
            leak_ceiling = LEAK_TRAP_LEVEL**2 * (n_target + 1) - 1
            values["n_max"] = n_target + TRUNCATION_MARGIN if trapped else leak_ceiling + MIN_TRUNCATION_MARGIN
        if values["n_max"] < n_target + MIN_TRUNCATION_MARGIN:
            raise ValueError(f"n_max must be at least n_target + {MIN_TRUNCATION_MARGIN}")
        if values["tau_gamma"] is None:
            values["tau_gamma"] = 5.0 / values["gamma_sted"]
        if not values["truncation_tolerance"] > 0:
            raise ValueError("truncation_tolerance must be positive")
        if values["tau_gamma"] < 0:
            raise ValueError("tau_gamma must be non-negative")
        return values

    @property
    def trapping_time(self) -> float:
        return self.k * math.pi / (self.g * math.sqrt(self.n_target + 1))


class NoiseDraws(BaseModel):
    delta_tau: float = 0.0
    delta_x: float = 0.0

    class Config:
        frozen = True

    @validator("delta_tau")
    def duration_stays_positive(cls, delta_tau):
        if delta_tau <= -1.0:
            raise ValueError("delta_tau must exceed -1")
        return delta_tau


class StepRecord(BaseModel):
    step: int
    fidelity: float
    fidelity_std: float = 0.0
    populations: list[float]
    coin_excited: float
    leak: float
    truncation_leak: float

    @validator("populations")
    def populations_form_distribution(cls, populations):
        if abs(sum(populations) - 1.0) > 1e-8:
            raise InvalidStateError(f"populations sum to {sum(populations)}")
        if min(populations) < -1e-9:
            raise InvalidStateError(f"negative population {min(populations)}")
        return populations


class BudgetParams(BaseModel):
    n_target: int
    wait_multiple: float = 5.0
    alpha: float = 0.5
    rate_ratio: float = 1e-5

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def check_ranges(cls, values):
        if values["n_target"] < 1:
            raise ValueError("n_target must be >= 1")
        if not values["wait_multiple"] > 0:
            raise ValueError("wait_multiple must be positive")
        if not 0.0 <= values["alpha"] <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if values["rate_ratio"] < 0:
            raise ValueError("rate_ratio must be non-negative")
        return values
