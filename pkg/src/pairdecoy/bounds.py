"""Decoy-state bounds on the single-pair yield and error rate.

Given the observed counting rates at two source intensities (plus the
vacuum-decoy background for the three-intensity protocol), these functions
extract a lower bound S1_L on the single-pair counting rate and an upper
bound e1_U on the single-pair error rate.  The no-decoy variant bounds S1
from one intensity alone by assuming every multi-pair emission is counted.

All bounds clamp to their physical ranges ([0, 1] for S1, [0, 0.5] for e1)
and flag the clamp; intermediate values outside those ranges do occur at
long distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ObservedStatistics
from .source import pair_probability

#: Denominators smaller than this indicate effectively equal intensities.
DEGENERATE_DENOMINATOR = 1e-30

THREE_INTENSITY = "three_intensity"
TWO_INTENSITY = "two_intensity"
NO_DECOY = "no_decoy"
PROTOCOL_KINDS = (THREE_INTENSITY, TWO_INTENSITY, NO_DECOY)


class DegenerateIntensitiesError(ValueError):
    """Signal and decoy intensities too close: the bound denominator vanishes."""


class BoundUnavailableError(ValueError):
    """No usable single-pair bound (S1 lower bound is not positive)."""


@dataclass(frozen=True)
class DecoyProtocol:
    """Protocol selector: which intensities are emitted.

    three_intensity uses (lam, lam_prime, vacuum); two_intensity uses
    (lam, lam_prime); no_decoy uses lam alone.  lam > lam_prime > 0 is
    enforced at construction where a decoy intensity is present.
    """

    kind: str
    lam: float
    lam_prime: float | None = None

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"unknown protocol kind {self.kind!r}; expected one of {PROTOCOL_KINDS}")
        if self.lam <= 0:
            raise ValueError(f"signal intensity must be positive, got {self.lam!r}")
        if self.kind == NO_DECOY:
            return
        if self.lam_prime is None:
            raise ValueError(f"{self.kind} requires a decoy intensity")
        if not 0 < self.lam_prime < self.lam:
            raise ValueError(
                f"intensities must satisfy lam > lam_prime > 0, got "
                f"lam={self.lam!r}, lam_prime={self.lam_prime!r}"
            )


@dataclass(frozen=True)
class ClampedBound:
    """A bound value together with its pre-clamp raw value."""

    value: float
    raw: float

    @property
    def clamped(self) -> bool:
        return self.value != self.raw


@dataclass(frozen=True)
class DecoyBounds:
    """Extracted bounds, the background rate used, and any clamping applied."""

    s1_lower: float
    e1_upper: float
    s0_used: float
    protocol: DecoyProtocol
    clamp_flags: tuple[str, ...]
    s1_lower_raw: float
    e1_upper_raw: float

    @property
    def single_pair_available(self) -> bool:
        return "e1_unavailable" not in self.clamp_flags


def _clamp(raw: float, lo: float, hi: float) -> ClampedBound:
    return ClampedBound(value=min(hi, max(lo, raw)), raw=raw)


def _p(lam: float, n: int) -> float:
    return pair_probability(lam, n)


def _pair_denominator(lam: float, lam_prime: float) -> float:
    den = _p(lam, 2) * _p(lam_prime, 1) - _p(lam_prime, 2) * _p(lam, 1)
    if abs(den) < DEGENERATE_DENOMINATOR:
        raise DegenerateIntensitiesError(
            f"intensities lam={lam!r}, lam_prime={lam_prime!r} are degenerate "
            f"(denominator {den!r})"
        )
    return den


def s1_lower_three(
    obs_signal: ObservedStatistics, obs_decoy: ObservedStatistics, s0: float
) -> ClampedBound:
    """Three-intensity lower bound on S1, using the measured background s0."""
    lam, lam_prime = obs_signal.lam, obs_decoy.lam
    if not lam > lam_prime > 0:
        raise ValueError(f"need lam > lam_prime > 0, got {lam!r}, {lam_prime!r}")
    if not 0.0 <= s0 <= 1.0:
        raise ValueError(f"background rate must lie in [0, 1], got {s0!r}")
    den = _pair_denominator(lam, lam_prime)
    num = (
        (_p(lam_prime, 2) * _p(lam, 0) - _p(lam, 2) * _p(lam_prime, 0)) * s0
        + _p(lam, 2) * obs_decoy.q
        - _p(lam_prime, 2) * obs_signal.q
    )
    return _clamp(num / den, 0.0, 1.0)


def e1_upper_three(obs_signal: ObservedStatistics, s0: float, s1_lower: float) -> ClampedBound:
    """Upper bound on e1: all errors beyond the background's half go to single pairs."""
    if s1_lower <= 0:
        raise BoundUnavailableError(
            "single-pair error bound needs a positive S1 lower bound; the caller "
            "should treat the single-pair contribution as zero"
        )
    lam = obs_signal.lam
    raw = (obs_signal.e * obs_signal.q - s0 * _p(lam, 0) / 2.0) / (_p(lam, 1) * s1_lower)
    return _clamp(raw, 0.0, 0.5)


def s0_upper_two(obs_signal: ObservedStatistics) -> float:
    """Upper bound on the background rate from the signal error rate alone."""
    return 2.0 * obs_signal.e * obs_signal.q / _p(obs_signal.lam, 0)


def s1_lower_two(obs_signal: ObservedStatistics, obs_decoy: ObservedStatistics) -> ClampedBound:
    """Two-intensity lower bound on S1.

    This is the three-intensity bound with the background replaced by its
    upper bound 2*E*Q/P0, which is the worst case because the background
    coefficient is negative.  The substitution leaves the denominator
    unchanged (see the discrepancy catalog for the rejected variant that
    divides the whole bound by P0).
    """
    lam, lam_prime = obs_signal.lam, obs_decoy.lam
    if not lam > lam_prime > 0:
        raise ValueError(f"need lam > lam_prime > 0, got {lam!r}, {lam_prime!r}")
    den = _pair_denominator(lam, lam_prime)
    s0u = s0_upper_two(obs_signal)
    num = (
        (_p(lam_prime, 2) * _p(lam, 0) - _p(lam, 2) * _p(lam_prime, 0)) * s0u
        + _p(lam, 2) * obs_decoy.q
        - _p(lam_prime, 2) * obs_signal.q
    )
    return _clamp(num / den, 0.0, 1.0)


def _s1_lower_two_printed_form(
    obs_signal: ObservedStatistics, obs_decoy: ObservedStatistics
) -> float:
    """Rejected as-printed variant with the extra 1/P0 on the whole bound.

    Kept only so the deviation can be demonstrated; it overshoots the true
    S1 and must not be used for key rates.
    """
    correct = s1_lower_two(obs_signal, obs_decoy)
    return correct.raw / _p(obs_signal.lam, 0)


def e1_upper_two(obs_signal: ObservedStatistics, s1_lower: float) -> ClampedBound:
    """Two-intensity upper bound on e1: the background lower bound is taken as 0."""
    if s1_lower <= 0:
        raise BoundUnavailableError(
            "single-pair error bound needs a positive S1 lower bound; the caller "
            "should treat the single-pair contribution as zero"
        )
    lam = obs_signal.lam
    raw = obs_signal.e * obs_signal.q / (_p(lam, 1) * s1_lower)
    return _clamp(raw, 0.0, 0.5)


def s1_lower_none(obs_signal: ObservedStatistics) -> ClampedBound:
    """No-decoy lower bound on S1, assuming every multi-pair emission counts.

    Pessimistically sets S_n = 1 for n >= 2 and bounds the background by
    2*E*Q/P0; goes negative (clamped to 0) once the multi-pair mass exceeds
    the observed counts, which is what kills the no-decoy curve early.
    """
    lam = obs_signal.lam
    p0, p1 = _p(lam, 0), _p(lam, 1)
    raw = (obs_signal.q * (1.0 - 2.0 * obs_signal.e) - (1.0 - p0 - p1)) / p1
    return _clamp(raw, 0.0, 1.0)


def extract_bounds(
    protocol: DecoyProtocol,
    obs_signal: ObservedStatistics,
    obs_decoy: ObservedStatistics | None = None,
    s0: float | None = None,
) -> DecoyBounds:
    """Run the bound extraction for a protocol and package the results.

    For three_intensity, ``s0`` is the vacuum-decoy measurement.  When the
    S1 bound clamps to zero the e1 bound is unavailable; it is reported as
    the maximal 0.5 with the ``e1_unavailable`` flag so that downstream key
    rates treat the single-pair contribution as zero.
    """
    if protocol.kind in (THREE_INTENSITY, TWO_INTENSITY):
        if obs_decoy is None:
            raise ValueError(f"{protocol.kind} requires decoy observations")
        if obs_decoy.lam != protocol.lam_prime or obs_signal.lam != protocol.lam:
            raise ValueError("observations do not match the protocol intensities")
    flags: list[str] = []

    if protocol.kind == THREE_INTENSITY:
        if s0 is None:
            raise ValueError("three_intensity requires the vacuum background s0")
        s1 = s1_lower_three(obs_signal, obs_decoy, s0)
        s0_used = s0
    elif protocol.kind == TWO_INTENSITY:
        s1 = s1_lower_two(obs_signal, obs_decoy)
        s0_used = s0_upper_two(obs_signal)
    else:
        s1 = s1_lower_none(obs_signal)
        s0_used = s0_upper_two(obs_signal)

    if s1.clamped:
        flags.append("s1_clamped_low" if s1.raw < 0.0 else "s1_clamped_high")

    if s1.value > 0.0:
        if protocol.kind == THREE_INTENSITY:
            e1 = e1_upper_three(obs_signal, s0_used, s1.value)
        else:
            e1 = e1_upper_two(obs_signal, s1.value)
        if e1.clamped:
            flags.append("e1_clamped_low" if e1.raw < 0.0 else "e1_clamped_high")
        e1_value, e1_raw = e1.value, e1.raw
    else:
        flags.append("e1_unavailable")
        e1_value = 0.5
        e1_raw = math.nan

    return DecoyBounds(
        s1_lower=s1.value,
        e1_upper=e1_value,
        s0_used=s0_used,
        protocol=protocol,
        clamp_flags=tuple(flags),
        s1_lower_raw=s1.raw,
        e1_upper_raw=e1_raw,
    )
