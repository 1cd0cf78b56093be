"""Discrepancy ledger: places where derivation disagrees with a reference.

Every entry records both values side by side.  Entries are produced in two
ways: a static catalog of the known deviations of this implementation from
its reference values (:func:`known_reference_deviations`), and dynamic
entries appended by validation sweeps such as
:func:`pairdecoy.channel.cross_validate`.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DiscrepancyEntry:
    context: str
    reference: str
    derived: str
    note: str


def format_entries(entries) -> str:
    if not entries:
        return "(no discrepancies recorded)"
    lines = []
    for e in entries:
        lines.append(f"- {e.context}")
        lines.append(f"    reference: {e.reference}")
        lines.append(f"    derived:   {e.derived}")
        lines.append(f"    note:      {e.note}")
    return "\n".join(lines)


def known_reference_deviations() -> tuple[DiscrepancyEntry, ...]:
    """The catalog of reference values this implementation cannot reproduce.

    Derived numbers are computed live from the library, not hard-coded.
    """
    # Imported lazily: this module sits below channel/optics/keyrate in the
    # dependency order.
    from . import keyrate, optics, reference

    trace = optics.run_full_attack("minus")
    pns_derived = keyrate.pns_limit_distance(
        reference.DEFAULT_SIGNAL_INTENSITY,
        reference.DEFAULT_LOSS_DB_PER_KM,
        reference.OVERALL_CONDITIONAL_PROBABILITY,
    )
    return (
        DiscrepancyEntry(
            context="first ancilla projection probability of the splitting attack",
            reference=f"{reference.FIRST_PROJECTION_PROBABILITY}",
            derived=f"{trace.p_first_projection!r} (exactly 5/6)",
            note=(
                "the reference value counts the eight post-splitter operator "
                "monomials as orthonormal; collecting them into Fock states "
                "(equal patterns add coherently) gives 5/6"
            ),
        ),
        DiscrepancyEntry(
            context="overall conditional success probability of the splitting attack",
            reference=f"{reference.OVERALL_CONDITIONAL_PROBABILITY}",
            derived=f"{trace.overall_conditional!r} (exactly 1/3)",
            note="product of the derived stage probabilities 5/6 and 2/5",
        ),
        DiscrepancyEntry(
            context=(
                "splitting-attack-limited distance at lam=0.1, k=0.2 dB/km, "
                "attack success 0.30"
            ),
            reference=f"{reference.PNS_LIMIT_DISTANCE_KM} km",
            derived=f"{pns_derived:.4f} km",
            note=(
                "direct solution of P1 * eta^2 = 0.30 * P2; the closed form and "
                "an independent bisection agree, so the reference figure appears "
                "to be a transcription slip"
            ),
        ),
        DiscrepancyEntry(
            context="both-sides-dark term of the per-n error weight",
            reference="2 * D * (1-eta)^(2n) (linear in D, as printed)",
            derived="2 * D^2 * (1-eta)^(2n) (squared)",
            note=(
                "the linear form makes the n=0 error weight exceed the n=0 yield "
                "for D < 1/2; the squared form reproduces the closed-form error "
                "rate exactly and is the default variant"
            ),
        ),
        DiscrepancyEntry(
            context="two-intensity single-pair bound, placement of the 1/P0 factor",
            reference="entire bound divided by P0(lam) (as printed)",
            derived="only the background term divided by P0(lam)",
            note=(
                "substituting the background upper bound 2*E*Q/P0 into the "
                "three-intensity bound leaves the denominator unchanged; the "
                "printed extra factor breaks the lower-bound property"
            ),
        ),
    )
