"""
Experiment configuration for the sweep runner.

A configuration is a YAML document with the nested sections `geometry`,
`channel`, `kernel`, `design`, `estimation`, `sweep` and `run`. Missing keys
take the defaults below, unknown keys are rejected. The defaults describe the
desk-scale protocol: an 8x8 array at λ/8 spacing, Q=64 pilots, 3000 trials.
"""

__all__ = [
    "ExperimentConfig",
    "GeometrySection",
    "ChannelSection",
    "KernelSection",
    "DesignSection",
    "EstimationSection",
    "SweepSection",
    "RunSection",
    "DESIGNERS",
    "MAJORIZERS",
    "ESTIMATORS",
    "AXES",
]

import yaml

from dataclasses import dataclass, field, asdict, fields
from typing      import Dict, List, Optional, Any
from icefill.exceptions import ConfigError, UnknownMethodError


DESIGNERS      = ("wf", "if", "mm", "random-gaussian", "random-phase", "topq", "dft")
MAJORIZERS     = ("spectral", "trace")
ESTIMATORS     = ("mmse", "ls", "omp")
AXES           = ("snr_db", "q", "spacing", "sigma_h2")
SOURCES        = ("gaussian", "clustered")
SOURCE_KERNELS = ("clustered", "exponential", "bessel")
PRIOR_KERNELS  = ("perfect", "statistical", "exponential", "bessel")


@dataclass
class GeometrySection:
    mx           : int = 8
    my           : int = 8
    spacing      : float = 0.125     # d/λ
    carrier_freq : float = 3.5e9

@dataclass
class ChannelSection:
    source           : str = "gaussian"
    kernel           : str = "clustered"   # kernel the gaussian source draws from
    rank             : Optional[int] = None
    eta1             : float = 0.56
    eta2             : float = 0.85
    num_clusters     : int = 23
    rays_per_cluster : int = 20
    angle_spread_deg : float = 5.0
    delay_spread_ns  : float = 30.0
    kernel_samples   : int = 100000
    power_samples    : int = 10000
    kernel_seed      : int = 2024
    cache_dir        : Optional[str] = None

@dataclass
class KernelSection:
    name        : str = "perfect"
    sigma_h2_db : float = -20.0   # relative to the mean eigenvalue of the true kernel
    eta1        : float = 0.56
    eta2        : float = 0.85

@dataclass
class DesignSection:
    designers     : List[str] = field(default_factory=lambda: ["wf", "if"])
    q             : int = 64
    mm_max_iter   : int = 200
    mm_rel_tol    : float = 1e-6
    mm_majorizer  : str = "spectral"
    mm_accelerate : bool = True

@dataclass
class EstimationSection:
    estimators   : List[str] = field(default_factory=lambda: ["mmse"])
    omp_sparsity : Optional[int] = None

@dataclass
class SweepSection:
    axis   : str = "snr_db"
    values : List[float] = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0])
    snr_db : float = 0.0

@dataclass
class RunSection:
    trials    : int = 3000
    base_seed : int = 0
    output    : str = "sweep.csv"
    workers   : int = 4


SECTIONS = {
    "geometry"   : GeometrySection,
    "channel"    : ChannelSection,
    "kernel"     : KernelSection,
    "design"     : DesignSection,
    "estimation" : EstimationSection,
    "sweep"      : SweepSection,
    "run"        : RunSection,
}


def _build_section(name : str, cls, raw : Optional[Dict[str, Any]]):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name : f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}'")
    return cls(**raw)


class ExperimentConfig:

    def __init__(self,
                 geometry   : GeometrySection=None,
                 channel    : ChannelSection=None,
                 kernel     : KernelSection=None,
                 design     : DesignSection=None,
                 estimation : EstimationSection=None,
                 sweep      : SweepSection=None,
                 run        : RunSection=None,
        ):
            """
            Initializes and validates an experiment configuration.

            Raises:
            ------
            ConfigError
                If a grid is empty or unsorted, trials < 1, a name is unknown, or the
                ls estimator is requested without the dft designer.
            """
            self.geometry   = geometry or GeometrySection()
            self.channel    = channel or ChannelSection()
            self.kernel     = kernel or KernelSection()
            self.design     = design or DesignSection()
            self.estimation = estimation or EstimationSection()
            self.sweep      = sweep or SweepSection()
            self.run        = run or RunSection()
            self.validate()

    def validate(self):
        if self.geometry.mx < 1 or self.geometry.my < 1 or self.geometry.spacing <= 0:
            raise ConfigError("geometry needs mx, my >= 1 and a positive spacing")
        if self.channel.source not in SOURCES:
            raise UnknownMethodError(self.channel.source, SOURCES)
        if self.channel.kernel not in SOURCE_KERNELS:
            raise UnknownMethodError(self.channel.kernel, SOURCE_KERNELS)
        if self.kernel.name not in PRIOR_KERNELS:
            raise UnknownMethodError(self.kernel.name, PRIOR_KERNELS)
        if not self.design.designers:
            raise ConfigError("at least one designer is required")
        for name in self.design.designers:
            if name not in DESIGNERS:
                raise UnknownMethodError(name, DESIGNERS)
        if self.design.mm_majorizer not in MAJORIZERS:
            raise UnknownMethodError(self.design.mm_majorizer, MAJORIZERS)
        if self.design.mm_max_iter < 1:
            raise ConfigError("design.mm_max_iter must be >= 1")
        if not self.estimation.estimators:
            raise ConfigError("at least one estimator is required")
        for name in self.estimation.estimators:
            if name not in ESTIMATORS:
                raise UnknownMethodError(name, ESTIMATORS)
        if "ls" in self.estimation.estimators and self.design.designers != ["dft"]:
            raise ConfigError("the ls estimator needs a square invertible observation matrix, use it with the dft designer only")
        if self.sweep.axis not in AXES:
            raise UnknownMethodError(self.sweep.axis, AXES)
        values = list(self.sweep.values)
        if not values:
            raise ConfigError("sweep values must be non-empty")
        if values != sorted(values):
            raise ConfigError("sweep values must be sorted ascending")
        if self.sweep.axis == "q" and any(int(v) != v or v < 1 for v in values):
            raise ConfigError("pilot counts on the q axis must be positive integers")
        if self.design.q < 1:
            raise ConfigError("design.q must be >= 1")
        if self.run.trials < 1:
            raise ConfigError("run.trials must be >= 1")
        if self.run.workers < 1:
            raise ConfigError("run.workers must be >= 1")

    def to_dict(self) -> Dict:
        return { name : asdict(getattr(self, name)) for name in SECTIONS }

    @classmethod
    def from_dict(cls, data : Optional[Dict]) -> 'ExperimentConfig':
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a mapping")
        for key in data:
            if key not in SECTIONS:
                raise ConfigError(f"unknown section '{key}'")
        try:
            sections = { name : _build_section(name, section, data.get(name)) for name, section in SECTIONS.items() }
        except TypeError as e:
            raise ConfigError(str(e))
        return cls(**sections)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text : str) -> 'ExperimentConfig':
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse configuration: {e}")
        return cls.from_dict(data)

    def dump(self, path : str):
        with open(path, 'w') as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path : str) -> 'ExperimentConfig':
        try:
            with open(path, 'r') as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read configuration file {path}: {e}")
        return cls.loads(text)

    def __eq__(self, other) -> bool:
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()
