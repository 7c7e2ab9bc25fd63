"""Probe distributions and reproducible per-probe random streams.

Every probe vector is drawn from its own counter-based stream: a Philox
generator whose key is derived from the master seed and whose counter
encodes ``(probe index, replicate, trial)``.  Probe ``z`` therefore does not
depend on which probes were drawn before it, so serial and parallel
evaluation see bit-identical probes.

Values are produced from the raw 64-bit Philox output by fixed transforms
(documented on each sampler) rather than by ``numpy.random.Generator``
methods, so the probes do not change with numpy's sampling algorithms.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

_SQRT3 = math.sqrt(3.0)
_TWO_PI = 2.0 * math.pi
_MAX_SEED = 2**64


@dataclass(frozen=True)
class ProbeDistribution:
    """Mean-0, variance-1 distribution for probe entries.

    ``fourth_moment`` is E[g^4] and ``subgauss_param`` is the K with
    E[exp(g^2 / K^2)] = 2.  For custom distributions both are declared by the
    caller and trusted; ``validate_moments`` checks them empirically.
    """

    name: str
    fourth_moment: float
    subgauss_param: float
    is_symmetric: bool = True
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = field(
        default=None, compare=False, repr=False
    )

    @property
    def kind(self) -> str:
        return self.name if self.name in _BUILTIN_SAMPLERS else "custom"

    @classmethod
    def custom(cls, name, sampler, fourth_moment, subgauss_param, is_symmetric=True):
        """Declare a user distribution.

        ``sampler(rng, n)`` must return ``n`` i.i.d. draws using only ``rng``
        (a ``numpy.random.Generator`` over the probe's own stream).
        """
        if name in _BUILTIN_SAMPLERS:
            raise ValueError(f"{name!r} is reserved for a built-in distribution")
        if fourth_moment < 1:
            raise ValueError("a variance-1 distribution has fourth moment >= 1")
        if subgauss_param <= 0:
            raise ValueError("sub-Gaussian parameter must be positive")
        return cls(name, float(fourth_moment), float(subgauss_param), bool(is_symmetric), sampler)


# K solves E[exp(g^2/K^2)] = 2; see subgaussian_parameter for the root-find.
RADEMACHER = ProbeDistribution("rademacher", 1.0, 1.2011224087864498)
GAUSSIAN = ProbeDistribution("gaussian", 3.0, 1.632993161855452)
UNIFORM = ProbeDistribution("uniform", 1.8, 1.338369155430911)

DISTRIBUTIONS = {d.name: d for d in (RADEMACHER, GAUSSIAN, UNIFORM)}


def get_distribution(name: str | ProbeDistribution) -> ProbeDistribution:
    if isinstance(name, ProbeDistribution):
        return name
    try:
        return DISTRIBUTIONS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown distribution {name!r}; choose from {', '.join(DISTRIBUTIONS)}"
        ) from None


def fourth_moment(dist: ProbeDistribution | str) -> float:
    return get_distribution(dist).fourth_moment


# ---------------------------------------------------------------------------
# streams


@functools.lru_cache(maxsize=256)
def _philox_key(master_seed: int) -> np.ndarray:
    key = np.random.SeedSequence(master_seed).generate_state(2, np.uint64)
    key.setflags(write=False)
    return key


@dataclass(frozen=True)
class ProbeStream:
    """Family of independent substreams under one master seed.

    The substream for probe ``z`` is Philox keyed by a hash of
    ``master_seed`` with counter ``[0, z, replicate, trial]``; the first
    counter word is consumed by the draws themselves.
    """

    master_seed: int
    replicate: int = 0
    trial: int = 0

    def __post_init__(self):
        for name in ("master_seed", "replicate", "trial"):
            v = getattr(self, name)
            if not 0 <= int(v) < _MAX_SEED:
                raise ValueError(f"{name} must be in [0, 2**64), got {v}")

    def with_replicate(self, replicate: int) -> ProbeStream:
        return replace(self, replicate=int(replicate))

    def with_trial(self, trial: int) -> ProbeStream:
        return replace(self, trial=int(trial))

    def bit_generator(self, z: int) -> np.random.Philox:
        if not 0 <= z < _MAX_SEED:
            raise ValueError(f"probe index must be in [0, 2**64), got {z}")
        counter = np.array([0, z, self.replicate, self.trial], dtype=np.uint64)
        return np.random.Philox(key=_philox_key(int(self.master_seed)), counter=counter)


def as_stream(seed: int | ProbeStream) -> ProbeStream:
    if isinstance(seed, ProbeStream):
        return seed
    return ProbeStream(int(seed))


# ---------------------------------------------------------------------------
# raw-output transforms


def _uniform01(bitgen: np.random.Philox, n: int) -> np.ndarray:
    # top 53 bits -> [0, 1)
    raw = bitgen.random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _rademacher(bitgen, n):
    # one sign per bit, least significant bit first
    words = bitgen.random_raw(-(-n // 64)).astype("<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n]
    return 1.0 - 2.0 * bits.astype(np.float64)


def _gaussian(bitgen, n):
    # Box-Muller on consecutive uniform pairs (u1, u2) with u1 in (0, 1]
    k = -(-n // 2)
    u = _uniform01(bitgen, 2 * k)
    radius = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
    theta = _TWO_PI * u[1::2]
    out = np.empty(2 * k)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return out[:n]


def _uniform_symmetric(bitgen, n):
    return _SQRT3 * (2.0 * _uniform01(bitgen, n) - 1.0)


_BUILTIN_SAMPLERS = {
    "rademacher": _rademacher,
    "gaussian": _gaussian,
    "uniform": _uniform_symmetric,
}


def sample_probe(dist: ProbeDistribution | str, n: int, stream: int | ProbeStream, z: int) -> np.ndarray:
    """Draw probe ``z`` (an ``n``-vector) from ``dist`` on ``stream``.

    Pure in its arguments: the same ``(dist, n, stream, z)`` always returns
    the same vector.
    """
    if n < 1:
        raise ValueError(f"probe length must be positive, got {n}")
    dist = get_distribution(dist)
    bitgen = as_stream(stream).bit_generator(int(z))
    builtin = _BUILTIN_SAMPLERS.get(dist.name)
    if builtin is not None:
        return builtin(bitgen, n)
    g = np.asarray(dist.sampler(np.random.Generator(bitgen), n), dtype=np.float64)
    if g.shape != (n,):
        raise ValueError(f"custom sampler returned shape {g.shape}, expected ({n},)")
    return g


# ---------------------------------------------------------------------------
# moment bookkeeping


def _psi(kind: str, t: float) -> float:
    """E[exp(t g^2)] for the built-in distributions."""
    from scipy import integrate

    if kind == "rademacher":
        return math.exp(t)
    if kind == "gaussian":
        return math.inf if t >= 0.5 else (1.0 - 2.0 * t) ** -0.5
    if kind == "uniform":
        val, _ = integrate.quad(lambda x: math.exp(t * x * x), 0.0, _SQRT3, epsabs=0, epsrel=1e-13)
        return val / _SQRT3
    raise ValueError(f"no closed-form moment generating function for {kind!r}")


def subgaussian_parameter(dist: ProbeDistribution | str) -> float:
    """Solve E[exp(g^2/K^2)] = 2 for K by a one-dimensional root-find."""
    from scipy import optimize

    kind = get_distribution(dist).kind

    def excess(t):
        return min(_psi(kind, t), 1e300) - 2.0

    hi = 0.25
    while excess(hi) < 0:
        hi *= 2.0
    t = optimize.brentq(excess, 1e-12, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return 1.0 / math.sqrt(t)


@dataclass
class MomentReport:
    name: str
    draws: int
    mean: float
    variance: float
    third: float
    fourth: float
    z_mean: float
    z_variance: float
    z_third: float
    z_fourth: float
    tolerance: float

    @property
    def passed(self) -> bool:
        zs = [self.z_mean, self.z_variance, self.z_fourth]
        if self.is_symmetric_claimed:
            zs.append(self.z_third)
        return all(abs(z) <= self.tolerance for z in zs)

    is_symmetric_claimed: bool = True


def validate_moments(dist, draws: int = 10**6, seed: int = 0, tolerance: float = 5.0) -> MomentReport:
    """Compare empirical moments of ``dist`` with its declared values.

    Each statistic is turned into a z-score using its own empirical standard
    error; the report passes when every |z| is within ``tolerance``.
    """
    dist = get_distribution(dist)
    x = sample_probe(dist, draws, ProbeStream(seed), 0)
    sqrt_n = math.sqrt(draws)

    def z(samples, target):
        se = samples.std(ddof=1) / sqrt_n
        return (samples.mean() - target) / se if se > 0 else (0.0 if samples.mean() == target else math.inf)

    x2 = x * x
    x3 = x2 * x
    x4 = x2 * x2
    return MomentReport(
        name=dist.name,
        draws=draws,
        mean=float(x.mean()),
        variance=float(x2.mean()),
        third=float(x3.mean()),
        fourth=float(x4.mean()),
        z_mean=float(z(x, 0.0)),
        z_variance=float(z(x2, 1.0)),
        z_third=float(z(x3, 0.0)),
        z_fourth=float(z(x4, dist.fourth_moment)),
        tolerance=tolerance,
        is_symmetric_claimed=dist.is_symmetric,
    )
