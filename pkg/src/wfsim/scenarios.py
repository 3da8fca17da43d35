"""The shipped scenarios: the four-photon friend experiment, a two-agent
counterexample protocol, a bare pointer coupling, and a Bell singlet.

Factor labels and order
-----------------------
The four-photon scenario uses the fixed factor order

    (a, alpha_prime, alpha, b, beta_prime, beta)

where ``a``/``b`` are the source photons, ``alpha``/``beta`` the friend
photons that record them, and ``alpha_prime``/``beta_prime`` the
heralding photons whose detection certifies the recording happened.  The
counterexample uses ``(A, B, C)`` (two spin-like memories plus a
communication mode) and the singlet uses ``(e1, e2)``.  Reports echo the
order so basis strings are unambiguous.

Normalization conventions
-------------------------
A heralded interaction is an isometry followed by post-selection, so two
state conventions coexist: the raw surviving branch (squared norm equal
to the herald probability, 1/4 per side here) and the renormalized
conditional state.  :class:`ScenarioState` carries both; nothing in the
package silently picks one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import HeraldImpossible, InvalidState, ShapeError, UnknownSubsystem
from .hilbert import (
    ALGEBRA_TOL,
    CompositeSpace,
    DensityOperator,
    PureState,
    tensor,
)
from .measurement import (
    SUBJECTIVE_COLLAPSE,
    UNITARY_ONLY,
    CollapseHypothesis,
    ProjectiveMeasurement,
    dephase,
    projective_collapse,
)

PROIETTI_ORDER = ("a", "alpha_prime", "alpha", "b", "beta_prime", "beta")
COUNTEREXAMPLE_ORDER = ("A", "B", "C")
SINGLET_ORDER = ("e1", "e2")

_SIDES = {
    "A": ("a", "alpha_prime", "alpha"),
    "B": ("b", "beta_prime", "beta"),
}

_COS = math.cos(math.pi / 8)
_SIN = math.sin(math.pi / 8)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ScenarioState:
    """A stage of a scenario run.

    ``stage`` is one of ``prepared``, ``friends_interacted``,
    ``collapsed`` or ``final``.  ``herald_probability`` is the squared
    norm of the surviving branch whenever heralding post-selection
    occurred at this step (1.0 otherwise); ``raw_state`` is that
    sub-normalized branch itself.  ``branch`` records the sampled outcome
    index for collapse-style steps.
    """

    stage: str
    state: Union[PureState, DensityOperator]
    herald_probability: float = 1.0
    hypothesis: CollapseHypothesis | None = None
    raw_state: PureState | None = None
    branch: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.herald_probability <= 1.0 + ALGEBRA_TOL:
            raise InvalidState(
                f"herald probability {self.herald_probability!r} outside (0, 1]"
            )


def source_state() -> PureState:
    """The entangled photon pair feeding both wings.

    (1/sqrt2) [cos(pi/8) (|h_a v_b> + |v_a h_b>) + sin(pi/8) (|h_a h_b> - |v_a v_b>)]

    Both reduced single-photon states are maximally mixed.
    """
    space = CompositeSpace.qubits("a", "b")
    return PureState.from_mapping(
        space,
        {
            "hv": _COS / _SQRT2,
            "vh": _COS / _SQRT2,
            "hh": _SIN / _SQRT2,
            "vv": -_SIN / _SQRT2,
        },
    )


def friend_pair_state(side: str) -> PureState:
    """Singlet pair (herald, friend) for one wing:
    (1/sqrt2)(|h v> - |v h>) on (alpha_prime, alpha) or (beta_prime, beta)."""
    _, prime, friend = _side_labels(side)
    space = CompositeSpace.qubits(prime, friend)
    return PureState.from_mapping(space, {"hv": 1 / _SQRT2, "vh": -1 / _SQRT2})


def prepared_state() -> ScenarioState:
    """Source and both friend pairs, reordered to the canonical factor order."""
    joint = tensor(source_state(), friend_pair_state("A"), friend_pair_state("B"))
    return ScenarioState(stage="prepared", state=joint.reorder(PROIETTI_ORDER))


def _side_labels(side: str) -> tuple[str, str, str]:
    key = str(side).upper()
    if key not in _SIDES:
        raise ShapeError(f"side must be 'A' or 'B', got {side!r}")
    return _SIDES[key]


# The friend interaction on one wing, written directly as the heralded map
#
#     M = 1/2 sum_i |i>_in |not-i>_friend <i|_in <singlet|_(prime, friend)
#
# i.e. the anti-correlating copy (h -> v, v -> h) conditioned on detecting
# the heralding photon.  M^dag M = (1/4) P_in <= I, so this is an isometry
# scaled by the heralding amplitude: applying it yields the raw
# (sub-normalized) branch whose squared norm is the herald probability.
_SINGLET_MATRIX = np.array([[0, 1], [-1, 0]], dtype=complex) / _SQRT2


def friend_interaction(joint: PureState, side: str) -> ScenarioState:
    """One wing's friend photon records the incoming photon, heralded.

    The input must contain that side's incoming photon and friend pair.
    The heralding photon is projected out, so the output space drops the
    prime factor while every other factor keeps its position.  Returns
    the renormalized state together with the herald probability and the
    raw branch.
    """
    in_label, prime_label, friend_label = _side_labels(side)
    space = joint.space
    for lbl in (in_label, prime_label, friend_label):
        if lbl not in space.labels:
            raise UnknownSubsystem(f"factor {lbl!r} missing from {space.labels}")
    if not joint.normalized:
        raise InvalidState("friend_interaction expects a normalized input")

    ax_in = space.axis(in_label)
    ax_prime = space.axis(prime_label)
    ax_friend = space.axis(friend_label)
    if space.dims[ax_in] != 2 or space.dims[ax_prime] != 2 or space.dims[ax_friend] != 2:
        raise ShapeError("friend interaction is defined for two-dimensional factors")

    tens = joint.amplitudes.reshape(space.dims)
    # Contract (prime, friend) against the singlet bra.
    contracted = np.tensordot(tens, _SINGLET_MATRIX.conj(), axes=([ax_prime, ax_friend], [0, 1]))

    removed = sorted((ax_prime, ax_friend))
    new_in = ax_in - sum(1 for r in removed if r < ax_in)
    new_friend = ax_friend - (1 if ax_prime < ax_friend else 0)

    out_factors = [f for i, f in enumerate(space.factors) if i != ax_prime]
    out_space = CompositeSpace(tuple(out_factors))
    out_shape = list(contracted.shape)
    out_shape.insert(new_friend, 2)
    out = np.zeros(out_shape, dtype=complex)

    in_axis_out = new_in if new_in < new_friend else new_in + 1
    for i in (0, 1):
        sl_src: list = [slice(None)] * contracted.ndim
        sl_src[new_in] = i
        sl_dst: list = [slice(None)] * out.ndim
        sl_dst[in_axis_out] = i
        sl_dst[new_friend] = 1 - i
        out[tuple(sl_dst)] = 0.5 * contracted[tuple(sl_src)]

    raw = PureState(out_space, out.reshape(-1), normalized=False)
    herald = raw.squared_norm
    if herald <= ALGEBRA_TOL:
        raise HeraldImpossible(
            f"heralding on side {side!r} survives with probability {herald!r}"
        )
    return ScenarioState(
        stage="friends_interacted",
        state=raw.normalize(),
        herald_probability=herald,
        hypothesis=UNITARY_ONLY,
        raw_state=raw,
    )


def claimed_branch_collapse(
    joint: PureState, side: str, rng: np.random.Generator
) -> ScenarioState:
    """The reading under test: the incoming photon already HAS a value.

    Samples a definite h/v branch for the incoming photon by the Born
    rule, then runs the friend interaction on the collapsed input.  The
    single-run output is a product between (incoming, friend) and the
    rest; the ensemble over seeds equals dephasing the unitary output on
    those factors.
    """
    in_label, _, _ = _side_labels(side)
    outcome, collapsed = projective_collapse(joint, on=(in_label,), rng=rng)
    after = friend_interaction(collapsed, side)
    return replace(
        after,
        stage="collapsed",
        hypothesis=SUBJECTIVE_COLLAPSE,
        branch=outcome,
    )


def expected_final_state() -> PureState:
    """The post-both-interactions state written out directly.

    (1/sqrt2) [cos(pi/8)(|h v v h> + |v h h v>) + sin(pi/8)(|h v h v> - |v h v h>)]

    over (a, alpha, b, beta).  This is constructed independently of the
    interaction machinery so the two routes can be checked against each
    other.
    """
    space = CompositeSpace.qubits("a", "alpha", "b", "beta")
    return PureState.from_mapping(
        space,
        {
            "hvvh": _COS / _SQRT2,
            "vhhv": _COS / _SQRT2,
            "hvhv": _SIN / _SQRT2,
            "vhvh": -_SIN / _SQRT2,
        },
    )


class ProiettiScenario:
    """Holds the full four-photon chain and its per-hypothesis endpoints.

    Alice's wing is the (a, alpha) pair and Bob's is (b, beta); inequality
    searches measure each wing jointly as a four-dimensional dichotomic
    observable.
    """

    alice_labels = ("a", "alpha")
    bob_labels = ("b", "beta")

    def __init__(self) -> None:
        self.prepared = prepared_state()
        self.after_side_a = friend_interaction(self.prepared.state, "A")
        after_b = friend_interaction(self.after_side_a.state, "B")
        self.final = replace(after_b, stage="final")

    @property
    def herald_probabilities(self) -> tuple[float, float]:
        """(side A, side B), each in the per-step normalized convention."""
        return (
            self.after_side_a.herald_probability,
            self.final.herald_probability,
        )

    @property
    def chained_herald_probability(self) -> float:
        """Probability that both heralds fire, raw printed convention."""
        a, b = self.herald_probabilities
        return a * b

    def exact_state_under(
        self, hypothesis: CollapseHypothesis | str
    ) -> DensityOperator:
        """Exact pre-measurement density operator for a hypothesis.

        * unitary_only: the pure final state.
        * friend_dephasing: friend factors (alpha, beta) dephased.
        * friend_projective: realized outcomes at both friends; its exact
          ensemble is the same dephasing (the two differ per run, not in
          the average).
        * subjective_collapse: ensemble of claimed-branch runs on both
          wings, a dephasing on (a, alpha, b, beta).
        * stochastic_collapse(p): each wing collapses independently with
          probability p; convex mixture of the four combinations.
        """
        if isinstance(hypothesis, str):
            hypothesis = CollapseHypothesis.parse(hypothesis)
        rho_u = self.final.state.density()
        variant = hypothesis.variant
        if variant == "unitary_only":
            return rho_u
        if variant in ("friend_dephasing", "friend_projective"):
            return dephase(rho_u, ("alpha", "beta"))
        if variant == "subjective_collapse":
            return dephase(rho_u, ("a", "alpha", "b", "beta"))
        if variant == "stochastic_collapse":
            p = float(hypothesis.probability)
            rho_a = dephase(rho_u, ("a", "alpha"))
            rho_b = dephase(rho_u, ("b", "beta"))
            rho_ab = dephase(rho_u, ("a", "alpha", "b", "beta"))
            return DensityOperator.mixture(
                [
                    ((1 - p) * (1 - p), rho_u),
                    (p * (1 - p), rho_a),
                    ((1 - p) * p, rho_b),
                    (p * p, rho_ab),
                ]
            )
        raise ShapeError(f"no exact state defined for hypothesis {hypothesis.name}")


@lru_cache(maxsize=1)
def _cached_scenario() -> ProiettiScenario:
    return ProiettiScenario()


def proietti_scenario() -> ProiettiScenario:
    """Shared immutable instance of the four-photon scenario."""
    return _cached_scenario()


def counterexample_measurement() -> ProjectiveMeasurement:
    """W's binary Bell measurement on (A, B): {P_phi_plus, complement}.

    Only the first outcome has a specified consequence (the photon is
    emitted to the communication mode); everything else is lumped into
    "no photon".
    """
    space = CompositeSpace.qubits("A", "B")
    phi_plus = np.zeros(4, dtype=complex)
    phi_plus[space.basis_index("uu")] = 1 / _SQRT2
    phi_plus[space.basis_index("dd")] = 1 / _SQRT2
    return ProjectiveMeasurement.binary(
        space, np.outer(phi_plus, phi_plus.conj()), ("photon", "no_photon")
    )


def _counterexample_amplitudes(amplitudes: Sequence[complex]) -> tuple[complex, complex]:
    c_up, c_down = complex(amplitudes[0]), complex(amplitudes[1])
    total = abs(c_up) ** 2 + abs(c_down) ** 2
    if abs(total - 1.0) > 1e-10:
        raise InvalidState(f"branch amplitudes have squared norm {total!r}, not 1")
    return c_up, c_down


def _coerce_hypothesis(hypothesis: CollapseHypothesis | str) -> CollapseHypothesis:
    if isinstance(hypothesis, str):
        return CollapseHypothesis.parse(hypothesis)
    return hypothesis


def counterexample_state_under(
    hypothesis: CollapseHypothesis | str,
    rng: np.random.Generator | None = None,
    amplitudes: Sequence[complex] = (1 / _SQRT2, 1 / _SQRT2),
) -> ScenarioState:
    """Pre-measurement state of the two-agent protocol under a hypothesis.

    Under unitary_only the two memories stay in the coherent superposition
    c_up |u u> + c_down |d d> with the communication mode empty.  Under
    subjective_collapse one branch is sampled (|u u 0> or |d d 0>) with
    the Born weights.  The equal-amplitude case is the one the shipped
    protocol specifies; other amplitudes are supported but exercise the
    same machinery without an external reference.
    """
    hypothesis = _coerce_hypothesis(hypothesis)
    c_up, c_down = _counterexample_amplitudes(amplitudes)
    space = CompositeSpace.qubits(*COUNTEREXAMPLE_ORDER)
    if hypothesis.variant == "unitary_only":
        state = PureState.from_mapping(space, {"uu0": c_up, "dd0": c_down})
        return ScenarioState(stage="final", state=state, hypothesis=hypothesis)
    if hypothesis.variant == "subjective_collapse":
        if rng is None:
            raise InvalidState("subjective_collapse sampling needs a Generator")
        p_up = abs(c_up) ** 2
        branch = 0 if rng.random() < p_up else 1
        state = PureState.basis(space, "uu0" if branch == 0 else "dd0")
        return ScenarioState(
            stage="collapsed", state=state, hypothesis=hypothesis, branch=branch
        )
    raise ShapeError(
        f"the counterexample protocol compares unitary_only with "
        f"subjective_collapse, not {hypothesis.name}"
    )


def counterexample_density(
    hypothesis: CollapseHypothesis | str,
    amplitudes: Sequence[complex] = (1 / _SQRT2, 1 / _SQRT2),
) -> DensityOperator:
    """Exact ensemble density operator for either hypothesis."""
    hypothesis = _coerce_hypothesis(hypothesis)
    c_up, c_down = _counterexample_amplitudes(amplitudes)
    space = CompositeSpace.qubits(*COUNTEREXAMPLE_ORDER)
    if hypothesis.variant == "unitary_only":
        return PureState.from_mapping(space, {"uu0": c_up, "dd0": c_down}).density()
    if hypothesis.variant == "subjective_collapse":
        up = PureState.basis(space, "uu0").density()
        down = PureState.basis(space, "dd0").density()
        return DensityOperator.mixture(
            [(abs(c_up) ** 2, up), (abs(c_down) ** 2, down)]
        )
    raise ShapeError(
        f"the counterexample protocol compares unitary_only with "
        f"subjective_collapse, not {hypothesis.name}"
    )


def counterexample_probability(
    hypothesis: CollapseHypothesis | str,
    amplitudes: Sequence[complex] = (1 / _SQRT2, 1 / _SQRT2),
) -> float:
    """Exact P(photon received by F) under a hypothesis."""
    from .measurement import born_probabilities

    rho = counterexample_density(hypothesis, amplitudes)
    return float(born_probabilities(rho, counterexample_measurement())[0])


def counterexample_run(
    hypothesis: CollapseHypothesis | str,
    rng: np.random.Generator,
    amplitudes: Sequence[complex] = (1 / _SQRT2, 1 / _SQRT2),
) -> bool:
    """One seeded run: prepare under the hypothesis, measure, emit or not."""
    scenario = counterexample_state_under(hypothesis, rng=rng, amplitudes=amplitudes)
    outcome, _ = projective_collapse(
        scenario.state, basis=counterexample_measurement(), rng=rng
    )
    return outcome == 0


def counterexample_frequencies(
    hypothesis: CollapseHypothesis | str,
    runs: int,
    rng: np.random.Generator,
    amplitudes: Sequence[complex] = (1 / _SQRT2, 1 / _SQRT2),
) -> float:
    """Frequency of photon receipt over many seeded runs, vectorized.

    Draw order is documented and fixed: under subjective_collapse one
    uniform array selects branches, then a second uniform array decides
    outcomes against the per-branch Born probability.  Under unitary_only
    a single uniform array is compared against the exact probability.
    Statistically identical to looping :func:`counterexample_run`.
    """
    if runs < 1:
        raise ShapeError("runs must be at least 1")
    hypothesis = _coerce_hypothesis(hypothesis)
    c_up, c_down = _counterexample_amplitudes(amplitudes)
    meas = counterexample_measurement()
    if hypothesis.variant == "unitary_only":
        p = counterexample_probability(hypothesis, amplitudes)
        hits = rng.random(runs) < p
        return float(hits.mean())
    if hypothesis.variant == "subjective_collapse":
        from .measurement import born_probabilities

        space = CompositeSpace.qubits(*COUNTEREXAMPLE_ORDER)
        p_branch = np.array(
            [
                born_probabilities(PureState.basis(space, "uu0"), meas)[0],
                born_probabilities(PureState.basis(space, "dd0"), meas)[0],
            ]
        )
        branches = (rng.random(runs) >= abs(c_up) ** 2).astype(int)
        hits = rng.random(runs) < p_branch[branches]
        return float(hits.mean())
    raise ShapeError(
        f"the counterexample protocol compares unitary_only with "
        f"subjective_collapse, not {hypothesis.name}"
    )


def bell_singlet() -> PureState:
    """The spin singlet (1/sqrt2)(|u d> - |d u>) on (e1, e2).

    Its reduced states are maximally mixed and diagonal, yet no definite
    z value is attributable to either electron: the composite is pure and
    the anticorrelation <sigma_z sigma_z> = -1 lives in the entanglement,
    not in a statistical ensemble.
    """
    space = CompositeSpace.qubits(*SINGLET_ORDER)
    return PureState.from_mapping(space, {"ud": 1 / _SQRT2, "du": -1 / _SQRT2})
