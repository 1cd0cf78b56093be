"""Secret-key-rate lower bound, secure-distance search, intensity optimization.

The rate formula is the GLLP lower bound

    R_L = q * [ -Q * f(E) * H2(E) + P1(lam) * S1_L * (1 - H2(e1_U)) ]

with the sifting factor q, error-correction inefficiency f, binary entropy
H2, and the decoy bounds S1_L, e1_U.  Negative rates are floored at zero
with a flag so the distance search has a clean sign predicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

from . import bounds as bounds_mod
from .bounds import DecoyBounds, DecoyProtocol, extract_bounds
from .channel import (
    DEFAULT_VARIANT,
    ChannelParams,
    ObservedStatistics,
    observed_series,
    vacuum_yield,
)
from .source import DEFAULT_TAIL_BOUND, build_distribution, pair_probability


@dataclass(frozen=True)
class ProtocolConstants:
    """Sifting factor q and error-correction inefficiency f.

    f may be a constant or a function of the observed error rate; the
    default is the constant 1.2.
    """

    q: float = 0.5
    f_ec: float | Callable[[float], float] = 1.2

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"sifting factor must lie in (0, 1], got {self.q!r}")
        if not callable(self.f_ec) and self.f_ec < 1.0:
            raise ValueError(f"error-correction inefficiency must be >= 1, got {self.f_ec!r}")

    def f_of(self, error_rate: float) -> float:
        return self.f_ec(error_rate) if callable(self.f_ec) else self.f_ec


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy H2(x), with H2(0) = H2(1) = 0 by continuity."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument must lie in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class RateValue:
    """Floored rate plus the raw formula value and the floor flag."""

    value: float
    raw: float
    flagged: bool


def gllp_rate(
    obs: ObservedStatistics, decoy_bounds: DecoyBounds, consts: ProtocolConstants
) -> RateValue:
    """Key-rate lower bound from one signal observation and its decoy bounds."""
    ec_cost = obs.q * consts.f_of(obs.e) * binary_entropy(obs.e)
    single_pair = (
        pair_probability(obs.lam, 1)
        * decoy_bounds.s1_lower
        * (1.0 - binary_entropy(decoy_bounds.e1_upper))
    )
    raw = consts.q * (-ec_cost + single_pair)
    flagged = raw < 0.0 or not decoy_bounds.single_pair_available
    return RateValue(value=max(0.0, raw), raw=raw, flagged=flagged)


@dataclass(frozen=True)
class KeyRatePoint:
    """One evaluated operating point of the pipeline."""

    length_km: float
    protocol: DecoyProtocol
    bounds: DecoyBounds
    q_signal: float
    e_signal: float
    rate: float
    rate_raw: float
    flagged: bool


def evaluate_point(
    length_km: float,
    protocol: DecoyProtocol,
    k_db_per_km: float,
    dark_count: float,
    consts: ProtocolConstants = ProtocolConstants(),
    variant: str = DEFAULT_VARIANT,
    tail_bound: float = DEFAULT_TAIL_BOUND,
) -> KeyRatePoint:
    """Full pipeline at one distance: observations, bounds, rate.

    Observations come from the series model (the ground-truth oracle path),
    so the error-term variant is honored; the three-intensity background is
    the vacuum-decoy measurement.
    """
    params = ChannelParams(k_db_per_km=k_db_per_km, length_km=length_km, dark_count=dark_count)
    obs_signal = observed_series(
        protocol.lam, params, build_distribution(protocol.lam, tail_bound), variant
    )
    obs_decoy = None
    s0 = None
    if protocol.kind in (bounds_mod.THREE_INTENSITY, bounds_mod.TWO_INTENSITY):
        obs_decoy = observed_series(
            protocol.lam_prime, params, build_distribution(protocol.lam_prime, tail_bound), variant
        )
    if protocol.kind == bounds_mod.THREE_INTENSITY:
        s0 = vacuum_yield(params)
    decoy_bounds = extract_bounds(protocol, obs_signal, obs_decoy, s0)
    rate = gllp_rate(obs_signal, decoy_bounds, consts)
    return KeyRatePoint(
        length_km=length_km,
        protocol=protocol,
        bounds=decoy_bounds,
        q_signal=obs_signal.q,
        e_signal=obs_signal.e,
        rate=rate.value,
        rate_raw=rate.raw,
        flagged=rate.flagged,
    )


@dataclass(frozen=True)
class SecureDistanceResult:
    """Outcome of the secure-distance search."""

    distance_km: float | None
    rate_at_zero: float
    no_secure_distance: bool


def max_secure_distance(
    protocol: DecoyProtocol,
    k_db_per_km: float,
    dark_count: float,
    consts: ProtocolConstants = ProtocolConstants(),
    variant: str = DEFAULT_VARIANT,
    l_max_km: float = 200.0,
    coarse_step_km: float = 1.0,
    refine_km: float = 0.01,
) -> SecureDistanceResult:
    """Largest distance with a positive rate: coarse scan plus bisection.

    Scans [0, l_max_km] at coarse_step_km, then bisects the last positive-to-
    nonpositive transition down to refine_km.  Rates here are monotone in L;
    if the scan ever sees more than one sign change it raises rather than
    silently picking one.
    """

    def raw_rate(length: float) -> float:
        return evaluate_point(
            length, protocol, k_db_per_km, dark_count, consts, variant
        ).rate_raw

    r0 = raw_rate(0.0)
    if r0 <= 0.0:
        return SecureDistanceResult(distance_km=None, rate_at_zero=r0, no_secure_distance=True)

    lengths = [0.0]
    while lengths[-1] < l_max_km:
        lengths.append(min(lengths[-1] + coarse_step_km, l_max_km))
    rates = [r0] + [raw_rate(length) for length in lengths[1:]]

    transitions = [
        i for i in range(len(lengths) - 1) if rates[i] > 0.0 and rates[i + 1] <= 0.0
    ]
    if not transitions:
        raise ValueError(
            f"rate still positive at l_max_km={l_max_km}; increase the scan range"
        )
    if len(transitions) > 1:
        raise RuntimeError(
            f"multiple sign changes at {[lengths[i] for i in transitions]} km; "
            "the rate curve is expected to be monotone"
        )

    lo, hi = lengths[transitions[0]], lengths[transitions[0] + 1]
    while hi - lo > refine_km:
        mid = 0.5 * (lo + hi)
        if raw_rate(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return SecureDistanceResult(
        distance_km=0.5 * (lo + hi), rate_at_zero=r0, no_secure_distance=False
    )


def pns_limit_distance(lam: float, k_db_per_km: float, attack_success: float = 0.30) -> float:
    """Distance below which single-pair counts dominate the attacked multi-pairs.

    Solves P1(lam) * eta^2 = attack_success * P2(lam) for the fiber length,
    with eta = 10^(-k L / 10).  attack_success = 0 means the attack never
    succeeds and the constraint is vacuous (+inf).
    """
    if lam <= 0:
        raise ValueError(f"pair intensity must be positive, got {lam!r}")
    if k_db_per_km <= 0:
        raise ValueError(f"loss constant must be positive, got {k_db_per_km!r}")
    if not 0.0 <= attack_success <= 1.0:
        raise ValueError(f"attack success must lie in [0, 1], got {attack_success!r}")
    if attack_success == 0.0:
        return math.inf
    eta_squared = attack_success * pair_probability(lam, 2) / pair_probability(lam, 1)
    return -10.0 / k_db_per_km * math.log10(math.sqrt(eta_squared))


@dataclass(frozen=True)
class OptimizeResult:
    """Best intensity pair on a grid, or the explicit no-secure-rate outcome."""

    best: KeyRatePoint | None
    lam: float | None
    lam_prime: float | None
    no_secure_rate: bool


def optimize_intensities(
    length_km: float,
    k_db_per_km: float,
    dark_count: float,
    consts: ProtocolConstants,
    kind: str,
    lam_grid: Iterable[float],
    lam_prime_grid: Iterable[float] = (),
    variant: str = DEFAULT_VARIANT,
) -> OptimizeResult:
    """Exhaustive grid search maximizing the rate at a fixed distance.

    Ties break toward the smaller lam, then the smaller lam_prime (the grid
    is scanned in sorted order and only strict improvements replace the
    incumbent).  When every feasible point has a floored-zero rate the
    result is the explicit no-secure-rate outcome, not an arbitrary pair.
    """
    lams = sorted(set(lam_grid))
    if kind == bounds_mod.NO_DECOY:
        pairs = [(lam, None) for lam in lams]
    else:
        primes = sorted(set(lam_prime_grid))
        pairs = [(lam, lp) for lam in lams for lp in primes if lp < lam]
    if not pairs:
        raise ValueError("empty feasible intensity grid")

    best_point = None
    best_pair = (None, None)
    for lam, lam_prime in pairs:
        protocol = DecoyProtocol(kind=kind, lam=lam, lam_prime=lam_prime)
        point = evaluate_point(length_km, protocol, k_db_per_km, dark_count, consts, variant)
        if point.rate > 0.0 and (best_point is None or point.rate > best_point.rate):
            best_point = point
            best_pair = (lam, lam_prime)
    if best_point is None:
        return OptimizeResult(best=None, lam=None, lam_prime=None, no_secure_rate=True)
    return OptimizeResult(
        best=best_point, lam=best_pair[0], lam_prime=best_pair[1], no_secure_rate=False
    )
