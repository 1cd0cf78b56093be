"""Exact sparse Fock-state simulation of the two-pair splitting attack.

The simulator works in the occupation-number basis of twelve bosonic modes:
six spatial-temporal modes (the source outputs ``a``, ``b`` and the
beam-splitter outputs ``a1``, ``a2``, ``b1``, ``b2``), each carrying an H and
a V polarization mode.  States are sparse maps from (occupation vector,
ancilla label) to a complex amplitude.  Creation operators carry the bosonic
sqrt(k+1) factors, so inner products and projection probabilities come out
exactly; nothing here relies on treating operator monomials as orthogonal.

The attack replayed by :func:`run_full_attack` against a two-pair emission:

1. a 50/50 beam splitter on each of ``a`` and ``b``,
2. post-selection on exactly one photon in each of ``a1``, ``a2``, ``b1``,
   ``b2`` (succeeds with probability 1/4),
3. an isometry on the ``a1``/``b2`` photons that writes their polarization
   parity onto an ancilla, followed by projection onto the parity-odd label
   (succeeds with probability 5/6),
4. a second isometry that shears off part of the even-parity component into
   a sink, followed by ancilla projection (succeeds with probability 2/5).

The surviving state factorizes exactly into a pair on (a1, b2) times a pair
on (a2, b1), both carrying the original code, which is what makes the attack
a photon-number-splitting attack.  The widely quoted stage probabilities
3/4 and 0.30 are what one obtains by treating the eight operator monomials
after the beam splitter as orthonormal; the exact values on the collected
Fock state are 5/6 and 1/3 (see DERIVED_STAGE_PROBABILITIES, confirmed by an
independent exact-arithmetic oracle in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

SPATIAL_MODES = ("a", "b", "a1", "a2", "b1", "b2")
SOURCE_SPATIALS = ("a", "b")
SPLIT_SPATIALS = ("a1", "a2", "b1", "b2")
POLARIZATIONS = ("H", "V")
ANCILLA_LABELS = ("none", "E0", "E1", "E2", "E3")

#: Sink occupation token: one extra basis vector orthogonal to every
#: physical occupation pattern, used as the garbage branch of the second
#: attack isometry.
SINK = "sink"

#: Amplitudes below this magnitude are dropped when states are built.
PRUNE_EPSILON = 1e-14

#: Squared-norm threshold under which a projection outcome counts as empty.
_EMPTY_PROBABILITY = 1e-28

#: Residual squared norm above which an isometry input is considered to
#: contain a basis pattern outside the declared domain.
_COVERAGE_TOLERANCE = 1e-24

CODES = ("minus", "plus", "zero", "one")

#: Exact per-stage success probabilities of the attack on a two-pair
#: emission, identical for all four codes: post-selection, first ancilla
#: projection, second ancilla projection, and the product of the last two
#: (the overall probability conditioned on post-selection success).
DERIVED_STAGE_PROBABILITIES = (0.25, 5.0 / 6.0, 2.0 / 5.0, 1.0 / 3.0)


class ModeLabel(NamedTuple):
    spatial: str
    polarization: str


MODES = tuple(ModeLabel(s, p) for s in SPATIAL_MODES for p in POLARIZATIONS)
MODE_INDEX = {m: i for i, m in enumerate(MODES)}
_N_MODES = len(MODES)
_VACUUM_OCC = (0,) * _N_MODES


def _as_mode(mode) -> ModeLabel:
    m = ModeLabel(*mode)
    if m not in MODE_INDEX:
        raise ValueError(f"unknown mode {mode!r}")
    return m


def _occ_text(occ) -> str:
    if occ == SINK:
        return SINK
    parts = [
        f"{m.spatial}.{m.polarization}={k}"
        for m, k in zip(MODES, occ)
        if k
    ]
    return " ".join(parts) if parts else "vacuum"


class FockState:
    """Sparse multi-mode bosonic state with a single ancilla register.

    Terms map (occupation tuple | SINK, ancilla label) to complex
    amplitudes.  Instances are immutable by convention: every operation
    returns a new state.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: dict, *, prune: bool = True):
        if prune:
            self._terms = {k: complex(v) for k, v in terms.items() if abs(v) > PRUNE_EPSILON}
        else:
            self._terms = {k: complex(v) for k, v in terms.items()}

    @classmethod
    def empty(cls) -> "FockState":
        """Designated empty outcome of a projection with probability zero."""
        return cls({})

    @classmethod
    def vacuum(cls, ancilla: str = "none") -> "FockState":
        return cls({(_VACUUM_OCC, ancilla): 1.0})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def is_empty(self) -> bool:
        return not self._terms

    def items(self):
        return self._terms.items()

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    def inner_product(self, other: "FockState") -> complex:
        """<self|other> in the occupation basis (sink included)."""
        small, big = self._terms, other._terms
        if len(big) < len(small):
            acc = sum(small[k].conjugate() * v for k, v in big.items() if k in small)
        else:
            acc = sum(v.conjugate() * big[k] for k, v in small.items() if k in big)
        return complex(acc)

    def scaled(self, factor: complex) -> "FockState":
        return FockState({k: factor * v for k, v in self._terms.items()})

    def normalized(self) -> "FockState":
        n2 = self.norm_squared()
        if n2 <= _EMPTY_PROBABILITY:
            raise ValueError("cannot normalize a state of vanishing norm")
        return self.scaled(1.0 / math.sqrt(n2))

    def with_ancilla(self, label: str) -> "FockState":
        """Relabel the ancilla register, e.g. to arm a fresh ancilla at E0."""
        if label not in ANCILLA_LABELS:
            raise ValueError(f"unknown ancilla label {label!r}")
        out: dict = {}
        for (occ, _), amp in self._terms.items():
            key = (occ, label)
            out[key] = out.get(key, 0.0) + amp
        return FockState(out)

    def occupied_spatials(self) -> set:
        spatials = set()
        for (occ, _) in self._terms:
            if occ == SINK:
                spatials.add(SINK)
                continue
            for m, k in zip(MODES, occ):
                if k:
                    spatials.add(m.spatial)
        return spatials

    def dump_table(self) -> str:
        """Debug dump: tab-separated (pattern, ancilla, real, imag) rows.

        Amplitudes are printed with 15 significant digits; rows are sorted
        so the dump is deterministic.
        """
        def sort_key(item):
            (occ, anc), _ = item
            return (1, (), anc) if occ == SINK else (0, occ, anc)

        lines = []
        for (occ, anc), amp in sorted(self._terms.items(), key=sort_key):
            lines.append(f"{_occ_text(occ)}\t{anc}\t{amp.real:.14e}\t{amp.imag:.14e}")
        return "\n".join(lines)


def superpose(*weighted: tuple[complex, FockState]) -> FockState:
    out: dict = {}
    for coeff, state in weighted:
        for key, amp in state.items():
            out[key] = out.get(key, 0.0) + coeff * amp
    return FockState(out)


def creation_monomial(ops: Iterable, coefficient: complex = 1.0, ancilla: str = "none") -> FockState:
    """Apply a product of creation operators to the vacuum.

    Bosonic normalization is respected: raising occupation k contributes a
    sqrt(k+1) factor, so e.g. two identical operators yield amplitude
    sqrt(2) on the doubly occupied mode.
    """
    occ = list(_VACUUM_OCC)
    amp = complex(coefficient)
    for mode in ops:
        i = MODE_INDEX[_as_mode(mode)]
        amp *= math.sqrt(occ[i] + 1)
        occ[i] += 1
    return FockState({(tuple(occ), ancilla): amp})


def tensor_product(left: FockState, right: FockState) -> FockState:
    """Combine states occupying disjoint mode sets (no bosonic cross factors)."""
    out: dict = {}
    for (occ_l, anc_l), amp_l in left.items():
        for (occ_r, anc_r), amp_r in right.items():
            if occ_l == SINK or occ_r == SINK:
                raise ValueError("tensor_product does not accept sink terms")
            if any(a and b for a, b in zip(occ_l, occ_r)):
                raise ValueError("tensor_product requires disjoint occupied modes")
            if anc_l != "none" and anc_r != "none":
                raise ValueError("at most one factor may carry a non-trivial ancilla")
            anc = anc_l if anc_l != "none" else anc_r
            occ = tuple(a + b for a, b in zip(occ_l, occ_r))
            key = (occ, anc)
            out[key] = out.get(key, 0.0) + amp_l * amp_r
    return FockState(out)


def fidelity(a: FockState, b: FockState) -> float:
    """Global-phase-insensitive overlap |<a|b>|^2 of two normalized states."""
    na, nb = a.norm_squared(), b.norm_squared()
    if na <= _EMPTY_PROBABILITY or nb <= _EMPTY_PROBABILITY:
        return 0.0
    return abs(a.inner_product(b)) ** 2 / (na * nb)


# --------------------------------------------------------------------------
# encoded states and the beam splitter
# --------------------------------------------------------------------------

# Creation-operator coefficients of the two-pair encodings, written against
# the monomials Ha^2 Vb^2, Ha Va Hb Vb, Va^2 Hb^2 (common prefactor
# 1/(2 sqrt(3))).
_ENCODING_COEFFS = {
    "minus": (1.0, -2.0, 1.0),
    "plus": (1.0, 2.0, 1.0),
    "zero": (1.0, 2.0j, -1.0),
    "one": (1.0, -2.0j, -1.0),
}

# Relative phase of the V x H term of the corresponding single-pair encoding.
_PAIR_PHASE = {"minus": -1.0, "plus": 1.0, "zero": 1.0j, "one": -1.0j}


def encoded_pair_state(code: str) -> FockState:
    """Normalized two-pair encoding of ``code`` on source modes a, b."""
    if code not in _ENCODING_COEFFS:
        raise ValueError(f"unknown code {code!r}; expected one of {CODES}")
    c0, c1, c2 = _ENCODING_COEFFS[code]
    pref = 1.0 / (2.0 * math.sqrt(3.0))
    return superpose(
        (pref * c0, creation_monomial([("a", "H"), ("a", "H"), ("b", "V"), ("b", "V")])),
        (pref * c1, creation_monomial([("a", "H"), ("a", "V"), ("b", "H"), ("b", "V")])),
        (pref * c2, creation_monomial([("a", "V"), ("a", "V"), ("b", "H"), ("b", "H")])),
    )


def single_pair_state(code: str, spatial_x: str, spatial_y: str) -> FockState:
    """Single-pair encoding of ``code`` across two spatial modes.

    (H_x V_y + phase * V_x H_y)/sqrt(2) with the code-dependent phase.
    """
    phase = _PAIR_PHASE[code]
    inv = 1.0 / math.sqrt(2.0)
    return superpose(
        (inv, creation_monomial([(spatial_x, "H"), (spatial_y, "V")])),
        (inv * phase, creation_monomial([(spatial_x, "V"), (spatial_y, "H")])),
    )


def factorized_reference_state(code: str) -> FockState:
    """Product of the code's pair on (a1, b2) with its pair on (a2, b1)."""
    return tensor_product(
        single_pair_state(code, "a1", "b2"),
        single_pair_state(code, "a2", "b1"),
    )


def apply_beamsplitter(state: FockState) -> FockState:
    """Split source modes: O_s -> (O_s1 - O_s2)/sqrt(2) for s in {a, b}.

    The same substitution is applied to both polarizations.  Occupation k of
    an input mode distributes over the two outputs with the exact binomial
    amplitudes 2**(-k/2) * (-1)**(k-j) * sqrt(C(k, j)); this preserves the
    norm.  States already occupying split modes are rejected.
    """
    out: dict = {}
    for (occ, anc), amp in state.items():
        if occ == SINK:
            raise ValueError("beam splitter cannot act on the sink component")
        for s in SPLIT_SPATIALS:
            for p in POLARIZATIONS:
                if occ[MODE_INDEX[ModeLabel(s, p)]]:
                    raise ValueError(
                        "state already occupies split modes; the beam splitter "
                        "acts on source modes a, b only"
                    )
        partial = {(_VACUUM_OCC, anc): amp}
        for s in SOURCE_SPATIALS:
            for p in POLARIZATIONS:
                k = occ[MODE_INDEX[ModeLabel(s, p)]]
                if k == 0:
                    continue
                i1 = MODE_INDEX[ModeLabel(s + "1", p)]
                i2 = MODE_INDEX[ModeLabel(s + "2", p)]
                scale = 2.0 ** (-k / 2.0)
                nxt: dict = {}
                for (occ2, anc2), amp2 in partial.items():
                    for j in range(k + 1):
                        coeff = amp2 * scale * (-1.0) ** (k - j) * math.sqrt(math.comb(k, j))
                        lst = list(occ2)
                        lst[i1] += j
                        lst[i2] += k - j
                        key = (tuple(lst), anc2)
                        nxt[key] = nxt.get(key, 0.0) + coeff
                partial = nxt
        for key, val in partial.items():
            out[key] = out.get(key, 0.0) + val
    return FockState(out)


def postselect_one_per_mode(state: FockState) -> tuple[FockState, float]:
    """Project onto exactly one photon (H plus V) in each split spatial mode.

    Returns the normalized remainder and the projection probability.  A
    vanishing remainder yields (FockState.empty(), 0.0) rather than an
    exception.
    """
    total = state.norm_squared()
    if total <= _EMPTY_PROBABILITY:
        return FockState.empty(), 0.0
    occupied = state.occupied_spatials()
    if any(s in occupied for s in SOURCE_SPATIALS):
        raise ValueError("post-selection expects a state on split modes only")
    kept: dict = {}
    for (occ, anc), amp in state.items():
        if occ == SINK:
            continue
        ok = all(
            occ[MODE_INDEX[ModeLabel(s, "H")]] + occ[MODE_INDEX[ModeLabel(s, "V")]] == 1
            for s in SPLIT_SPATIALS
        )
        if ok:
            kept[(occ, anc)] = amp
    kept_state = FockState(kept)
    p = kept_state.norm_squared() / total
    if p <= _EMPTY_PROBABILITY:
        return FockState.empty(), 0.0
    return kept_state.normalized(), p


# --------------------------------------------------------------------------
# isometries with ancilla projection
# --------------------------------------------------------------------------


class DomainCoverageError(ValueError):
    """The input state contains a basis pattern outside the isometry's domain."""


@dataclass(frozen=True)
class Isometry:
    """Linear map defined by images of orthonormal basis states on a mode subset.

    ``rules`` pairs input basis states with their output states; both live on
    the declared modes (plus the ancilla register; sink terms are allowed in
    outputs).  Construction checks that the inputs are orthonormal and that
    the map preserves all pairwise inner products on its domain.
    """

    name: str
    declared_modes: tuple
    rules: tuple

    def __post_init__(self):
        declared = {_as_mode(m) for m in self.declared_modes}
        for ket_in, ket_out in self.rules:
            for st in (ket_in, ket_out):
                for (occ, _), _amp in st.items():
                    if occ == SINK:
                        continue
                    for m, k in zip(MODES, occ):
                        if k and m not in declared:
                            raise ValueError(
                                f"isometry {self.name!r}: rule state occupies "
                                f"undeclared mode {m}"
                            )
        n = len(self.rules)
        for i in range(n):
            for j in range(n):
                g_in = self.rules[i][0].inner_product(self.rules[j][0])
                g_out = self.rules[i][1].inner_product(self.rules[j][1])
                expected = 1.0 if i == j else 0.0
                if abs(g_in - expected) > 1e-12:
                    raise ValueError(
                        f"isometry {self.name!r}: domain basis is not orthonormal "
                        f"(<in_{i}|in_{j}> = {g_in})"
                    )
                if abs(g_out - g_in) > 1e-12:
                    raise ValueError(
                        f"isometry {self.name!r}: inner product not preserved on "
                        f"basis pair ({i}, {j}): {g_in} -> {g_out}"
                    )

    def _declared_indices(self) -> tuple:
        return tuple(MODE_INDEX[_as_mode(m)] for m in self.declared_modes)

    def _sub_vector(self, state_items, indices) -> dict:
        sub: dict = {}
        for (occ, anc), amp in state_items:
            key = (SINK, anc) if occ == SINK else (tuple(occ[i] for i in indices), anc)
            sub[key] = sub.get(key, 0.0) + amp
        return sub


def apply_isometry_and_project(
    state: FockState, iso: Isometry, keep: str
) -> tuple[FockState, float]:
    """Apply ``iso`` on its declared modes, then project the ancilla onto ``keep``.

    Returns (normalized post-projection state, probability).  Raises
    DomainCoverageError naming the uncovered pattern when the state has a
    component outside the span of the isometry's domain basis.
    """
    if keep not in ANCILLA_LABELS:
        raise ValueError(f"unknown ancilla label {keep!r}")
    total = state.norm_squared()
    if total <= _EMPTY_PROBABILITY:
        return FockState.empty(), 0.0

    indices = iso._declared_indices()
    index_set = set(indices)
    rule_subs = [
        (iso._sub_vector(ket_in.items(), indices), iso._sub_vector(ket_out.items(), indices))
        for ket_in, ket_out in iso.rules
    ]

    # Group terms by the occupation pattern on the untouched modes.
    groups: dict = {}
    for (occ, anc), amp in state.items():
        if occ == SINK:
            raise DomainCoverageError(
                f"isometry {iso.name!r} does not cover the sink component"
            )
        rest = tuple(0 if i in index_set else k for i, k in enumerate(occ))
        sub_key = (tuple(occ[i] for i in indices), anc)
        group = groups.setdefault(rest, {})
        group[sub_key] = group.get(sub_key, 0.0) + amp

    out: dict = {}
    for rest, vec in groups.items():
        coeffs = []
        residual = dict(vec)
        for sub_in, _ in rule_subs:
            c = sum(sub_in[k].conjugate() * residual.get(k, 0.0) for k in sub_in)
            coeffs.append(c)
        for (sub_in, _), c in zip(rule_subs, coeffs):
            for k, v in sub_in.items():
                residual[k] = residual.get(k, 0.0) - c * v
        resid_norm2 = sum(abs(v) ** 2 for v in residual.values())
        if resid_norm2 > _COVERAGE_TOLERANCE:
            worst = max(residual, key=lambda k: abs(residual[k]))
            sub_occ, anc = worst
            if sub_occ == SINK:
                pattern = SINK
            else:
                pattern = " ".join(
                    f"{MODES[i].spatial}.{MODES[i].polarization}={k}"
                    for i, k in zip(indices, sub_occ)
                ) or "vacuum"
            raise DomainCoverageError(
                f"isometry {iso.name!r} domain does not cover pattern "
                f"[{pattern} / ancilla {anc}] present in the input state"
            )
        for (_, sub_out), c in zip(rule_subs, coeffs):
            if abs(c) <= PRUNE_EPSILON:
                continue
            for (sub_occ, anc), v in sub_out.items():
                if sub_occ == SINK:
                    if any(rest):
                        raise ValueError(
                            f"isometry {iso.name!r}: sink output requires the "
                            "declared modes to cover all occupied modes"
                        )
                    key = (SINK, anc)
                else:
                    lst = list(rest)
                    for i, k in zip(indices, sub_occ):
                        lst[i] = k
                    key = (tuple(lst), anc)
                out[key] = out.get(key, 0.0) + c * v

    projected = FockState({k: v for k, v in out.items() if k[1] == keep})
    p = projected.norm_squared() / total
    if p <= _EMPTY_PROBABILITY:
        return FockState.empty(), 0.0
    return projected.normalized(), p


def identity_isometry(modes: Iterable, patterns: Iterable[FockState], name: str = "identity") -> Isometry:
    """Isometry mapping each given basis state to itself (ancilla untouched)."""
    rules = tuple((st, st) for st in patterns)
    return Isometry(name=name, declared_modes=tuple(_as_mode(m) for m in modes), rules=rules)


def intermediate_basis_states() -> tuple[FockState, FockState, FockState]:
    """The orthonormal four-photon states spanning the post-projection space.

    even_sym: (H_a1 V_b1 H_a2 V_b2 + V_a1 H_b1 V_a2 H_b2)/sqrt(2)
    even_asym: same with a relative minus sign
    odd: (H_a1 H_b1 V_a2 V_b2 + V_a1 V_b1 H_a2 H_b2)/sqrt(2)
    """
    inv = 1.0 / math.sqrt(2.0)
    even_sym = superpose(
        (inv, creation_monomial([("a1", "H"), ("b1", "V"), ("a2", "H"), ("b2", "V")])),
        (inv, creation_monomial([("a1", "V"), ("b1", "H"), ("a2", "V"), ("b2", "H")])),
    )
    even_asym = superpose(
        (inv, creation_monomial([("a1", "H"), ("b1", "V"), ("a2", "H"), ("b2", "V")])),
        (-inv, creation_monomial([("a1", "V"), ("b1", "H"), ("a2", "V"), ("b2", "H")])),
    )
    odd = superpose(
        (inv, creation_monomial([("a1", "H"), ("b1", "H"), ("a2", "V"), ("b2", "V")])),
        (inv, creation_monomial([("a1", "V"), ("b1", "V"), ("a2", "H"), ("b2", "H")])),
    )
    return even_sym, even_asym, odd


_U1_MODES = (ModeLabel("a1", "H"), ModeLabel("a1", "V"), ModeLabel("b2", "H"), ModeLabel("b2", "V"))
_U2_MODES = tuple(ModeLabel(s, p) for s in SPLIT_SPATIALS for p in POLARIZATIONS)


def attack_first_isometry() -> Isometry:
    """Polarization-parity readout on the a1/b2 photons.

    Opposite polarizations write E1 onto the (E0-armed) ancilla, equal
    polarizations write E2; the photons themselves are untouched.
    """
    def pattern(pa: str, pb: str, anc: str) -> FockState:
        return creation_monomial([("a1", pa), ("b2", pb)], ancilla=anc)

    rules = (
        (pattern("H", "V", "E0"), pattern("H", "V", "E1")),
        (pattern("V", "H", "E0"), pattern("V", "H", "E1")),
        (pattern("H", "H", "E0"), pattern("H", "H", "E2")),
        (pattern("V", "V", "E0"), pattern("V", "V", "E2")),
    )
    return Isometry(name="parity_readout", declared_modes=_U1_MODES, rules=rules)


def attack_second_isometry() -> Isometry:
    """Amplitude rebalancing between the even- and odd-parity components.

    The two even-parity basis states are split between a sink branch
    (amplitude sqrt(3)/2, ancilla E1 or E3) and a kept branch (amplitude
    1/2, ancilla E2); the odd-parity state passes to E2 unchanged.  The sink
    is a dedicated basis vector orthogonal to all physical patterns, so the
    kept-branch probability is exact.
    """
    even_sym, even_asym, odd = intermediate_basis_states()
    sink_e1 = FockState({(SINK, "E1"): 1.0})
    sink_e3 = FockState({(SINK, "E3"): 1.0})
    half_sqrt3 = math.sqrt(3.0) / 2.0
    rules = (
        (
            even_sym.with_ancilla("E0"),
            superpose((half_sqrt3, sink_e1), (0.5, even_sym.with_ancilla("E2"))),
        ),
        (
            even_asym.with_ancilla("E0"),
            superpose((half_sqrt3, sink_e3), (0.5, even_asym.with_ancilla("E2"))),
        ),
        (odd.with_ancilla("E0"), odd.with_ancilla("E2")),
    )
    return Isometry(name="even_parity_rebalance", declared_modes=_U2_MODES, rules=rules)


# --------------------------------------------------------------------------
# the full attack
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackTrace:
    """Per-stage states and probabilities of one attack run."""

    code: str
    initial: FockState
    after_beamsplitter: FockState
    postselected: FockState
    p_postselect: float
    after_first_projection: FockState
    p_first_projection: float
    final: FockState
    p_second_projection: float

    @property
    def overall_conditional(self) -> float:
        """Success probability of the two projections, given post-selection."""
        return self.p_first_projection * self.p_second_projection

    @property
    def stage_probabilities(self) -> tuple[float, float, float]:
        return (self.p_postselect, self.p_first_projection, self.p_second_projection)


def run_full_attack(code: str) -> AttackTrace:
    """Replay the attack on the two-pair encoding of ``code``.

    The post-selection is modeled as conditioning on success (the many-
    beam-splitter limit); a fresh E0 ancilla is armed before each isometry.
    The final state's ancilla is relabeled to "none" for clean comparisons
    with reference product states.
    """
    initial = encoded_pair_state(code)
    split = apply_beamsplitter(initial)
    postselected, p_post = postselect_one_per_mode(split)
    armed = postselected.with_ancilla("E0")
    after_u1, p1 = apply_isometry_and_project(armed, attack_first_isometry(), "E1")
    rearmed = after_u1.with_ancilla("E0")
    final, p2 = apply_isometry_and_project(rearmed, attack_second_isometry(), "E2")
    return AttackTrace(
        code=code,
        initial=initial,
        after_beamsplitter=split,
        postselected=postselected,
        p_postselect=p_post,
        after_first_projection=after_u1,
        p_first_projection=p1,
        final=final.with_ancilla("none"),
        p_second_projection=p2,
    )


def split_pair_matrix(state: FockState):
    """Reshape a one-photon-per-split-mode state into a 4x4 matrix.

    Rows index the (a1, b2) polarization pattern, columns the (a2, b1)
    pattern; a rank-1 matrix means the state factorizes into a pair on
    (a1, b2) times a pair on (a2, b1).
    """
    import numpy as np

    pol_index = {"H": 0, "V": 1}

    def pol_at(occ, spatial):
        if occ[MODE_INDEX[ModeLabel(spatial, "H")]] == 1:
            return "H"
        if occ[MODE_INDEX[ModeLabel(spatial, "V")]] == 1:
            return "V"
        raise ValueError(f"mode {spatial} does not hold exactly one photon")

    matrix = np.zeros((4, 4), dtype=complex)
    for (occ, _anc), amp in state.items():
        if occ == SINK:
            raise ValueError("sink term has no pair decomposition")
        row = pol_index[pol_at(occ, "a1")] * 2 + pol_index[pol_at(occ, "b2")]
        col = pol_index[pol_at(occ, "a2")] * 2 + pol_index[pol_at(occ, "b1")]
        matrix[row, col] += amp
    return matrix
