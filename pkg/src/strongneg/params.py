"""Algorithm and analysis parameters."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import InputError

FIELDS = ("pi", "theta", "tau", "kappa", "beta", "delta", "gamma")


@dataclass(frozen=True)
class ParameterSet:
    """Class width ``pi``, cluster threshold ``theta`` and rate cap ``tau``.

    ``kappa``, ``beta``, ``delta`` and ``gamma`` only enter the ratio analysis.
    """

    pi: float
    theta: float
    tau: float
    kappa: float
    beta: float
    delta: float
    gamma: float

    def __post_init__(self):
        for name in FIELDS:
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InputError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.pi > 1:
            raise InputError("pi must exceed 1")
        if not 0 < self.theta < self.tau <= 0.75:
            raise InputError("need 0 < theta < tau <= 3/4")
        if not 0 < self.kappa < 1:
            raise InputError("kappa must lie in (0, 1)")
        if not self.beta > 0:
            raise InputError("beta must be positive")
        if self.delta < 0 or self.gamma < 0:
            raise InputError("delta and gamma must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSet":
        missing = [k for k in FIELDS if k not in d]
        if missing:
            raise InputError(f"parameter set lacks {', '.join(missing)}")
        try:
            return cls(**{k: float(d[k]) for k in FIELDS})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad parameter value: {exc}") from None

    def with_(self, **kw) -> "ParameterSet":
        return replace(self, **kw)


# Output of ``constants.parameter_search(1.40, seed=0)``; see notebooks/03_ratio.py.
# kappa is ``constants.kappa_for(theta)``, inlined to avoid an import cycle.
DEFAULT = ParameterSet(pi=4.090625, theta=0.555, tau=0.604, kappa=0.7439999988444868,
                       beta=1.93, delta=1.4, gamma=0.0052)
