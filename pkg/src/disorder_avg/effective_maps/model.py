from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DisorderModel:
    """Random all-to-all transverse-field Ising ensemble.

    ``H = sum_{i<j} J_ij g Z_i Z_j + h sum_i X_i`` with ``J_ij ~ Normal(mean_J, sigma^2)``
    i.i.d. and ``g = 1/sqrt(N)`` when ``scaled`` (else ``g = 1``).
    """

    N: int
    h: float = 1.0
    mean_J: float = 0.0
    sigma: float = 0.0
    scaled: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def coupling_scale(self) -> float:
        return 1.0 / math.sqrt(self.N) if self.scaled else 1.0

    @property
    def J_eff(self) -> float:
        """Mean coefficient of each Z_i Z_j term."""
        return self.mean_J * self.coupling_scale

    @property
    def sigma_eff(self) -> float:
        """Standard deviation of each Z_i Z_j coefficient."""
        return self.sigma * self.coupling_scale

    def replace(self, **changes) -> "DisorderModel":
        from dataclasses import replace

        return replace(self, **changes)
