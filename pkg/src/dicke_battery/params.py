from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .operators import nbar_to_temperature

# H_I = drive_strength * cos(omega t) * J_x, where the drive strength is the
# amplitude times this factor.  "pauli" couples each atom through A cos(wt)
# sigma_x (so 2 A J_x collectively); "spin" couples through A cos(wt) J_x.
DRIVE_CONVENTIONS = {"pauli": 2.0, "spin": 1.0}

STEPS_PER_PERIOD = 400
# Without dissipation nothing damps RK4's amplitude error, and purity and
# entropy must stay constant, so closed-system runs use a finer default.
CLOSED_STEPS_PER_PERIOD = 1600
MIN_STEPS_PER_PERIOD = 200
DISSIPATIVE_STEPS = 40


class ParameterError(ValueError):
    """Invalid simulation parameter; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SimulationParams:
    omega0: float = 2.0
    omega: float = 2.0
    amplitude: float = 1.0
    gamma: float = 0.06
    nbar: float = 0.2
    n_atoms: int = 1
    t_max: float = 300.0
    dt: Optional[float] = None  # None: chosen from the drive period and the decay rate
    record_stride: int = 10
    ss_tolerance: float = 1e-6
    positivity_tolerance: float = 1e-8
    drive_convention: str = "pauli"

    def __post_init__(self):
        for key in ("omega0", "omega"):
            if not getattr(self, key) > 0:
                raise ParameterError(key, "must be positive")
        for key in ("amplitude", "gamma", "nbar"):
            v = getattr(self, key)
            if not (v >= 0 and math.isfinite(v)):
                raise ParameterError(key, "must be finite and non-negative")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ParameterError("n_atoms", "must be a positive integer")
        if not self.t_max > 0:
            raise ParameterError("t_max", "must be positive")
        if self.dt is not None:
            if not self.dt > 0:
                raise ParameterError("dt", "must be positive")
            if self.dt > self.period / MIN_STEPS_PER_PERIOD * (1 + 1e-12):
                raise ParameterError("dt", f"must not exceed drive period / {MIN_STEPS_PER_PERIOD}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ParameterError("record_stride", "must be a positive integer")
        if not self.ss_tolerance > 0:
            raise ParameterError("ss_tolerance", "must be positive")
        if not self.positivity_tolerance >= 0:
            raise ParameterError("positivity_tolerance", "must be non-negative")
        if self.drive_convention not in DRIVE_CONVENTIONS:
            raise ParameterError(
                "drive_convention", f"must be one of {sorted(DRIVE_CONVENTIONS)}"
            )

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def chi(self) -> float:
        return 1 + 2 * self.nbar

    @property
    def temperature(self) -> float:
        # bath occupancy is referred to the drive frequency
        return nbar_to_temperature(self.nbar, self.omega)

    @property
    def drive_strength(self) -> float:
        """Coefficient of ``cos(omega t) J_x`` in the Hamiltonian."""
        return DRIVE_CONVENTIONS[self.drive_convention] * self.amplitude

    @property
    def time_step(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        steps = STEPS_PER_PERIOD if self.gamma > 0 else CLOSED_STEPS_PER_PERIOD
        rate = self.gamma * self.n_atoms * self.chi
        if rate > 0:
            steps = max(steps, math.ceil(self.period * DISSIPATIVE_STEPS * rate))
        # whole number of records per drive period keeps period averages exact
        steps = math.ceil(steps / self.record_stride) * self.record_stride
        return self.period / steps

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.time_step))

    def with_(self, **changes) -> "SimulationParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]
