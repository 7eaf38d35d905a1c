"""Time-indexed scalar signals for operator inputs and disturbance fluxes."""

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t: float) -> float:
        return self.value


@dataclass(frozen=True)
class Sinusoid:
    """amplitude*sin(2*pi*t/period) + offset."""

    amplitude: float
    period: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.period > 0.0:
            raise InvalidParameterError(f"period must be positive, got {self.period!r}")

    def __call__(self, t: float) -> float:
        return self.amplitude * math.sin(2.0 * math.pi * t / self.period) + self.offset


@dataclass(frozen=True)
class Sampled:
    """Zero-order hold over recorded (time, value) samples; times ascending."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise InvalidParameterError("sampled signal needs matching nonempty arrays")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InvalidParameterError("sample times must be strictly increasing")

    def __call__(self, t: float) -> float:
        i = bisect_right(self.times, t) - 1
        return self.values[max(i, 0)]


def random_piecewise(seed: int, lo: float, hi: float, dwell: float,
                     horizon: float) -> Sampled:
    """Seeded piecewise-constant signal uniform on [lo, hi), one draw per dwell."""
    if not dwell > 0.0 or not horizon >= 0.0:
        raise InvalidParameterError("dwell must be positive and horizon nonnegative")
    rng = np.random.default_rng(seed)
    n = max(1, int(math.ceil(horizon / dwell)) + 1)
    times = tuple(i * dwell for i in range(n))
    values = tuple(float(v) for v in rng.uniform(lo, hi, size=n))
    return Sampled(times=times, values=values)


def load_samples(path) -> Sampled:
    """Two-column whitespace/comma separated file: time value."""
    times, values = [], []
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise InvalidParameterError(f"bad sample line {raw!r} in {path}")
            times.append(float(parts[0]))
            values.append(float(parts[1]))
    return Sampled(times=tuple(times), values=tuple(values))
