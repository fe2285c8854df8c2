__all__ = [
    "EstimateResult",
    "SweepRow",
    "SweepResult",
    "SWEEP_COLUMNS",
]

import math
import numpy as np

from dataclasses import dataclass, asdict, fields
from typing      import Optional, List, Dict


class EstimateResult:

    def __init__(self,
                 posterior_mean  : np.ndarray,
                 posterior_trace : float,
                 squared_error   : Optional[float]=None,
        ):
            """
            Output of a channel estimator.

            Parameters:
            ----------
            posterior_mean : np.ndarray
                Channel estimate ĥ.
            posterior_trace : float
                Trace of the posterior covariance (nan for non-Bayesian estimators).
            squared_error : float, optional
                ‖ĥ - h‖² when the true channel is known.
            """
            self.posterior_mean = np.asarray(posterior_mean, dtype=complex)
            self.posterior_trace = float(posterior_trace)
            self.squared_error = None if squared_error is None else float(squared_error)

    def __repr__(self) -> str:
        return f"EstimateResult(trace={self.posterior_trace:.6g}, squared_error={self.squared_error})"


SWEEP_COLUMNS = ["designer", "estimator", "axis", "value", "nmse_db", "mse", "delta", "analytic_nmse_db", "trials"]


@dataclass(frozen=True)
class SweepRow:
    designer         : str
    estimator        : str
    axis             : str
    value            : float
    nmse_db          : float
    mse              : float
    delta            : float = math.nan
    analytic_nmse_db : float = math.nan
    trials           : int = 0
    wall_time        : float = 0.0

    def to_dict(self, timing : bool=False) -> Dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    @classmethod
    def from_dict(cls, data : Dict) -> 'SweepRow':
        kwargs = {}
        for field in fields(cls):
            if field.name not in data or data[field.name] in ("", None):
                continue
            kwargs[field.name] = field.type(data[field.name]) if field.type in (int, float, str) else data[field.name]
        return cls(**kwargs)


class SweepResult:

    def __init__(self, rows : Optional[List[SweepRow]]=None, config_hash : str=""):
        self.rows = list(rows or [])
        self.config_hash = config_hash

    def append(self, row : SweepRow):
        self.rows.append(row)

    def select(self, designer : Optional[str]=None, estimator : Optional[str]=None) -> List[SweepRow]:
        return [row for row in self.rows
                if (designer is None or row.designer == designer)
                and (estimator is None or row.estimator == estimator)]

    def curve(self, designer : str, estimator : str="mmse") -> Dict[float, float]:
        """NMSE in dB keyed by axis value for one designer/estimator pair."""
        return {row.value : row.nmse_db for row in self.select(designer, estimator)}

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)
