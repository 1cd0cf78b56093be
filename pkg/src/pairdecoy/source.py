"""Photon-pair-number statistics of a phase-randomized down-conversion source.

A type-II parametric down-conversion source pumped by a phase-randomized
pulse emits ``n`` photon pairs with probability

    P_n(lam) = (n + 1) * lam**n / (1 + lam)**(n + 2)

where ``lam`` is half the average number of pairs per pump pulse.  The
distribution is normalized (sum over n is 1) and has mean pair number
``2 * lam``.  ``lam = 0`` is a valid intensity: it is the vacuum decoy
setting used by the three-intensity protocol, not a special case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Default bound on the probability mass discarded by truncation.
DEFAULT_TAIL_BOUND = 1e-12

#: Hard cap on the truncation order accepted by build_distribution.
DEFAULT_TRUNCATION_CAP = 10_000

# The pair intensity is an ordinary nonnegative float throughout the package.
PairIntensity = float


def _check_intensity(lam: float) -> None:
    if math.isnan(lam) or lam < 0.0:
        raise ValueError(f"pair intensity must be a nonnegative real, got {lam!r}")


def pair_probability(lam: float, n: int) -> float:
    """Probability that a single pump pulse produces exactly ``n`` photon pairs.

    Evaluated in log space for lam > 0 so that large ``n`` neither overflows
    (the two power terms individually) nor loses the ratio to premature
    underflow.
    """
    _check_intensity(lam)
    if n < 0:
        raise ValueError(f"pair number must be nonnegative, got {n}")
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    if n == 0:
        return 1.0 / (1.0 + lam) ** 2
    log_p = math.log(n + 1) + n * math.log(lam) - (n + 2) * math.log1p(lam)
    return math.exp(log_p)


@dataclass(frozen=True)
class PairDistribution:
    """Truncated pair-number distribution for one source intensity.

    ``probabilities[n]`` is P_n(lam) for n = 0 .. n_max; the discarded tail
    ``1 - sum(probabilities)`` is at most ``tail_bound``.  Instances are
    immutable and safe to share between workers.
    """

    lam: float
    tail_bound: float
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        self.probabilities.setflags(write=False)

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    def total(self) -> float:
        return float(self.probabilities.sum())

    def mean_pair_number(self) -> float:
        return float(np.arange(len(self.probabilities)) @ self.probabilities)


def build_distribution(
    lam: float,
    tail_bound: float = DEFAULT_TAIL_BOUND,
    truncation_cap: int = DEFAULT_TRUNCATION_CAP,
) -> PairDistribution:
    """Build the smallest truncated distribution whose tail is below ``tail_bound``.

    Raises ValueError when the intensity is so large that more than
    ``truncation_cap`` terms would be needed.
    """
    _check_intensity(lam)
    if not 0.0 < tail_bound < 1.0:
        raise ValueError(f"tail bound must lie in (0, 1), got {tail_bound!r}")
    probs = []
    total = 0.0
    n = 0
    while True:
        p = pair_probability(lam, n)
        probs.append(p)
        total += p
        if 1.0 - total <= tail_bound:
            break
        n += 1
        if n > truncation_cap:
            raise ValueError(
                f"truncation order exceeds cap {truncation_cap} for lam={lam!r}; "
                f"accumulated mass {total!r}"
            )
    return PairDistribution(lam=lam, tail_bound=tail_bound, probabilities=np.array(probs))
