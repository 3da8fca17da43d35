"""Correlators, the four-setting inequality, settings search, sampling.

The inequality combination used throughout is

    S = E(A1, B1) + E(A1, B0) + E(A0, B1) - E(A0, B0)

with classical (locally definite) bound 2 and quantum ceiling 2*sqrt(2).

Observable families
-------------------
Each wing measures either one factor or a two-factor pair:

* single factor: the Bloch family n(theta, phi) . sigma;
* pair of factors: the same Bloch pattern applied blockwise on the
  anti-correlated span {|01>, |10>} and the correlated span {|00>, |11>}.
  theta=0 reduces to "which value does the first factor have" (sigma_z on
  the incoming photon) and theta=pi/2, phi=0 has its +1/-1 eigenspaces
  spanned by the four maximally entangled pair states, so the two named
  default observables are members of one continuously parameterized
  family.

Both families satisfy the Pauli algebra observable-by-observable, so the
correlator is exactly bilinear in the two Bloch vectors through a real
3x3 kernel K:  E(a, b) = a . K b.

Settings search
---------------
``optimize_settings`` scans Bob's two directions over the full
(theta, phi) product grid and, for each Bob pair, uses the exact
closed-form optimum for Alice: the best unit vectors against fixed
(b1, b0) are along K(b1 + b0) and K(b1 - b0), giving

    S(b1, b0) = |K(b1 + b0)| + |K(b1 - b0)|.

The scan is therefore exhaustive over Bob's grid with Alice exact, which
keeps the search deterministic and makes refinement monotone: halving
grid_step produces a superset of Bob grid points, so the maximum can
only grow.  Ties take the first candidate in row-major grid order, i.e.
the lexicographically smallest (theta_b1, phi_b1, theta_b0, phi_b0).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Sequence, Union

import numpy as np

from .errors import InvariantViolation, ShapeError
from .hilbert import (
    CompositeSpace,
    DensityOperator,
    DichotomicObservable,
    PureState,
    bloch_vector,
    expectation,
)
from .measurement import (
    UNITARY_ONLY,
    CollapseHypothesis,
    ProjectiveMeasurement,
    born_probabilities,
)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
TSIRELSON_TOL = 1e-9

_PAULI_TRIPLE = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _pair_basis_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Blockwise Pauli triple on a two-qubit pair.

    Basis order (|00>, |01>, |10>, |11>); each Pauli acts on the
    anti-correlated block (|01>, |10>) and on the correlated block
    (|00>, |11>) simultaneously.  The triple satisfies the Pauli algebra,
    so unit Bloch combinations square to the identity.
    """
    ops = []
    for pauli in _PAULI_TRIPLE:
        mat = np.zeros((4, 4), dtype=complex)
        for bi, i in enumerate((1, 2)):
            for bj, j in enumerate((1, 2)):
                mat[i, j] += pauli[bi, bj]
        for bi, i in enumerate((0, 3)):
            for bj, j in enumerate((0, 3)):
                mat[i, j] += pauli[bi, bj]
        ops.append(mat)
    return tuple(ops)


_PAIR_TRIPLE = _pair_basis_operators()


def _basis_triple(nfactors: int) -> tuple[np.ndarray, ...]:
    if nfactors == 1:
        return _PAULI_TRIPLE
    if nfactors == 2:
        return _PAIR_TRIPLE
    raise ShapeError(
        f"observable families are defined for one or two factors, got {nfactors}"
    )


def observable_from_bloch(
    theta: float, phi: float, space: CompositeSpace
) -> DichotomicObservable:
    """Member of the wing's observable family for a Bloch direction.

    One factor gives the ordinary n.sigma; a pair gives the blockwise
    version described in the module docstring.
    """
    triple = _basis_triple(space.nfactors)
    n = bloch_vector(theta, phi)
    mat = n[0] * triple[0] + n[1] * triple[1] + n[2] * triple[2]
    return DichotomicObservable(space, mat)


@dataclass(frozen=True)
class MeasurementSettings:
    """The four observables of one inequality evaluation.

    ``alice`` and ``bob`` are (obs0, obs1) pairs; angles, when the
    setting came from the Bloch families, are ((theta0, phi0),
    (theta1, phi1)) for reporting.  ``origin`` says where the settings
    came from ("defaults", "optimized(...)", or "custom").
    """

    alice: tuple[DichotomicObservable, DichotomicObservable]
    bob: tuple[DichotomicObservable, DichotomicObservable]
    alice_angles: tuple[tuple[float, float], tuple[float, float]] | None = None
    bob_angles: tuple[tuple[float, float], tuple[float, float]] | None = None
    origin: str = "custom"

    def __post_init__(self) -> None:
        if len(self.alice) != 2 or len(self.bob) != 2:
            raise ShapeError("settings need exactly two observables per wing")

    @classmethod
    def defaults(
        cls, alice_space: CompositeSpace, bob_space: CompositeSpace
    ) -> "MeasurementSettings":
        """The labeled default pair per wing.

        obs0 (theta=0) asks which basis value the wing's first factor
        carries; obs1 (theta=pi/2, phi=0) is the entangled-basis
        observable whose eigenspaces are spanned by the pair's maximally
        entangled states.  These are defaults of this artifact, not
        values taken from any experiment.
        """
        angles = ((0.0, 0.0), (math.pi / 2, 0.0))
        return cls(
            alice=tuple(observable_from_bloch(t, p, alice_space) for t, p in angles),
            bob=tuple(observable_from_bloch(t, p, bob_space) for t, p in angles),
            alice_angles=angles,
            bob_angles=angles,
            origin="defaults",
        )


@dataclass(frozen=True)
class InequalityResult:
    """One inequality evaluation, exact or sampled.

    ``s_value`` and ``correlators`` describe the evaluation itself; the
    correlator order is (E11, E10, E01, E00) matching
    S = E11 + E10 + E01 - E00.  For sampled results (``exact=False``)
    they are estimates and ``exact_s``/``exact_correlators`` carry the
    exact companions at the same settings.  ``s_max`` is the grid-search
    maximum for the same state when a search ran.
    ``consistent_with_data`` is set by hypothesis comparisons: whether
    this hypothesis reproduces the unitary-model statistics that stand in
    for the observed data.
    """

    s_value: float
    correlators: tuple[float, float, float, float]
    bound: float = CLASSICAL_BOUND
    hypothesis: CollapseHypothesis | None = None
    exact: bool = True
    shots: int | None = None
    std_error: float | None = None
    s_max: float | None = None
    exact_s: float | None = None
    exact_correlators: tuple[float, float, float, float] | None = None
    consistent_with_data: bool | None = None

    def __post_init__(self) -> None:
        if self.exact and abs(self.s_value) > TSIRELSON_BOUND + TSIRELSON_TOL:
            raise InvariantViolation(
                f"exact |S| = {abs(self.s_value)!r} exceeds the quantum ceiling "
                f"{TSIRELSON_BOUND} + {TSIRELSON_TOL}"
            )


State = Union[PureState, DensityOperator]


def correlator(state: State, a: DichotomicObservable, b: DichotomicObservable) -> float:
    """E = <A tensor B> for observables on disjoint factors of the state."""
    overlap = set(a.space.labels) & set(b.space.labels)
    if overlap:
        raise ShapeError(f"observables overlap on factors {sorted(overlap)}")
    joint_space = CompositeSpace(a.space.factors + b.space.factors)
    joint = DichotomicObservable(joint_space, np.kron(a.matrix, b.matrix))
    value = expectation(state, joint)
    if abs(value) > 1.0 + 1e-10:
        raise InvariantViolation(f"correlator {value!r} outside [-1, 1]")
    return value


def chsh_value(
    state: State,
    settings: MeasurementSettings,
    hypothesis: CollapseHypothesis | None = None,
) -> InequalityResult:
    """Exact S for the given settings, with the quantum ceiling enforced."""
    a0, a1 = settings.alice
    b0, b1 = settings.bob
    e11 = correlator(state, a1, b1)
    e10 = correlator(state, a1, b0)
    e01 = correlator(state, a0, b1)
    e00 = correlator(state, a0, b0)
    s = e11 + e10 + e01 - e00
    return InequalityResult(
        s_value=s,
        correlators=(e11, e10, e01, e00),
        hypothesis=hypothesis,
        exact=True,
    )


def local_deterministic_bound() -> float:
    """Maximum of the S combination over all 16 deterministic assignments.

    Every wing answers +1 or -1 regardless of the other; brute-force
    enumeration reproduces the classical bound.
    """
    best = -math.inf
    for a1, a0, b1, b0 in product((1, -1), repeat=4):
        best = max(best, a1 * b1 + a1 * b0 + a0 * b1 - a0 * b0)
    return float(best)


def _correlation_kernel(
    state: State, alice_space: CompositeSpace, bob_space: CompositeSpace
) -> np.ndarray:
    """K[m, n] = E(basis_m on Alice, basis_n on Bob); E(a,b) = a.K b."""
    kernel = np.empty((3, 3))
    a_triple = _basis_triple(alice_space.nfactors)
    b_triple = _basis_triple(bob_space.nfactors)
    for m in range(3):
        a_obs = DichotomicObservable(alice_space, a_triple[m])
        for n in range(3):
            b_obs = DichotomicObservable(bob_space, b_triple[n])
            kernel[m, n] = correlator(state, a_obs, b_obs)
    return kernel


def _sphere_grid(step: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(theta values, phi values, unit vectors) for the product grid.

    theta runs over multiples of step in [0, pi]; phi over multiples in
    [0, 2 pi).  Vectors are in row-major (theta, phi) order.
    """
    n_theta = int(math.floor(math.pi / step + 1e-9)) + 1
    n_phi = int(math.floor(2.0 * math.pi / step - 1e-9)) + 1
    thetas = np.arange(n_theta) * step
    phis = np.arange(n_phi) * step
    theta_grid, phi_grid = np.meshgrid(thetas, phis, indexing="ij")
    sin_t = np.sin(theta_grid)
    vectors = np.stack(
        [sin_t * np.cos(phi_grid), sin_t * np.sin(phi_grid), np.cos(theta_grid)],
        axis=-1,
    ).reshape(-1, 3)
    return thetas, phis, vectors


def _scan_block(
    w: np.ndarray, norms2: np.ndarray, start: int, stop: int
) -> tuple[float, int]:
    """Best (value, flat index) over rows [start, stop) of the pair table."""
    block = w[start:stop]
    gram = block @ w.T
    pair_sum = norms2[start:stop, None] + norms2[None, :]
    plus = pair_sum + 2.0 * gram
    np.clip(plus, 0.0, None, out=plus)
    np.sqrt(plus, out=plus)
    minus = pair_sum - 2.0 * gram
    np.clip(minus, 0.0, None, out=minus)
    np.sqrt(minus, out=minus)
    plus += minus
    local = int(np.argmax(plus))
    value = float(plus.flat[local])
    row, col = divmod(local, w.shape[0])
    return value, (start + row) * w.shape[0] + col


def _angles_of(vector: np.ndarray) -> tuple[float, float]:
    theta = math.acos(min(1.0, max(-1.0, float(vector[2]))))
    phi = math.atan2(float(vector[1]), float(vector[0])) % (2.0 * math.pi)
    return theta, phi


def optimize_settings(
    state: State,
    grid_step: float = math.pi / 64,
    alice_labels: Sequence[str] | None = None,
    bob_labels: Sequence[str] | None = None,
    threads: int | None = None,
) -> tuple[MeasurementSettings, float]:
    """Deterministic settings search maximizing |S|; see module docstring.

    For a two-factor state the wings default to one factor each;
    otherwise pass each wing's labels explicitly (e.g. the four-photon
    final state measures the pairs ("a", "alpha") and ("b", "beta")).
    Returns the maximizing settings and the value.  Refining the grid
    (halving grid_step) never decreases the result beyond arithmetic
    noise, since Bob's coarse grid is a subset of the fine one and
    Alice's response is exact.
    """
    if not 0.0 < grid_step <= math.pi / 8 + 1e-12:
        raise ShapeError(f"grid_step {grid_step!r} outside (0, pi/8]")
    if alice_labels is None and bob_labels is None:
        if state.space.nfactors != 2:
            raise ShapeError(
                f"state has factors {state.space.labels}; pass alice_labels "
                "and bob_labels to say which wing measures what"
            )
        alice_labels = (state.space.labels[0],)
        bob_labels = (state.space.labels[1],)
    if alice_labels is None or bob_labels is None:
        raise ShapeError("give both wings' labels or neither")

    alice_space = state.space.subspace(alice_labels)
    bob_space = state.space.subspace(bob_labels)
    kernel = _correlation_kernel(state, alice_space, bob_space)

    _, _, vectors = _sphere_grid(grid_step)
    w = vectors @ kernel.T  # row i = K b_i
    norms2 = np.einsum("ij,ij->i", w, w)
    n = vectors.shape[0]

    block_rows = n if n * n <= (1 << 25) else max(64, (1 << 24) // n)
    spans = [(s, min(s + block_rows, n)) for s in range(0, n, block_rows)]
    if threads is not None and threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda sp: _scan_block(w, norms2, *sp), spans))
    else:
        results = [_scan_block(w, norms2, s, e) for s, e in spans]

    best_value = -math.inf
    best_flat = 0
    for value, flat in results:  # block order, strict >, keeps the earliest
        if value > best_value:
            best_value = value
            best_flat = flat

    idx_b1, idx_b0 = divmod(best_flat, n)
    b1_vec = vectors[idx_b1]
    b0_vec = vectors[idx_b0]

    def _alice_vector(direction: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(direction))
        if norm < 1e-15:
            return np.array([0.0, 0.0, 1.0])
        return direction / norm

    a1_vec = _alice_vector(kernel @ (b1_vec + b0_vec))
    a0_vec = _alice_vector(kernel @ (b1_vec - b0_vec))

    a_angles = (_angles_of(a0_vec), _angles_of(a1_vec))
    b_angles = (_angles_of(b0_vec), _angles_of(b1_vec))
    settings = MeasurementSettings(
        alice=tuple(observable_from_bloch(t, p, alice_space) for t, p in a_angles),
        bob=tuple(observable_from_bloch(t, p, bob_space) for t, p in b_angles),
        alice_angles=a_angles,
        bob_angles=b_angles,
        origin=f"optimized(grid_step={grid_step:.9g})",
    )
    result = chsh_value(state, settings)
    return settings, result.s_value


_SETTING_ORDER = ((1, 1), (1, 0), (0, 1), (0, 0))


def _joint_distribution(
    state: State, a: DichotomicObservable, b: DichotomicObservable
) -> np.ndarray:
    """p(s_a, s_b) over (++, +-, -+, --) for one setting pair."""
    a_plus, a_minus = a.projectors()
    b_plus, b_minus = b.projectors()
    space = CompositeSpace(a.space.factors + b.space.factors)
    projs = tuple(
        np.kron(pa, pb)
        for pa in (a_plus, a_minus)
        for pb in (b_plus, b_minus)
    )
    meas = ProjectiveMeasurement(space, projs, ("++", "+-", "-+", "--"))
    return born_probabilities(state, meas)


def sample_inequality(
    state: State,
    settings: MeasurementSettings,
    shots: int,
    rng: np.random.Generator,
    threads: int | None = None,
    hypothesis: CollapseHypothesis | None = None,
) -> InequalityResult:
    """Estimate S from finite per-setting counts.

    Each of the four setting pairs, in the fixed order (A1,B1), (A1,B0),
    (A0,B1), (A0,B0), owns an independent child stream spawned from
    ``rng`` (one spawn call, children in that order), and draws its
    outcome counts from a multinomial over the exact joint distribution.
    The split rule makes results independent of the thread count.  The
    standard error is the plug-in estimate sqrt(sum (1 - E_k^2) / shots).
    """
    if shots < 1:
        raise ShapeError("sample_inequality needs shots >= 1")
    pairs = [
        (settings.alice[i], settings.bob[j]) for i, j in _SETTING_ORDER
    ]
    distributions = [_joint_distribution(state, a, b) for a, b in pairs]
    streams = rng.spawn(len(pairs))

    def _draw(k: int) -> np.ndarray:
        return streams[k].multinomial(shots, distributions[k])

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(pairs))) as pool:
            counts = list(pool.map(_draw, range(len(pairs))))
    else:
        counts = [_draw(k) for k in range(len(pairs))]

    estimates = []
    variances = []
    for n in counts:
        e_hat = float(n[0] - n[1] - n[2] + n[3]) / shots
        estimates.append(e_hat)
        variances.append(max(0.0, 1.0 - e_hat * e_hat) / shots)
    e11, e10, e01, e00 = estimates
    s_hat = e11 + e10 + e01 - e00
    return InequalityResult(
        s_value=s_hat,
        correlators=tuple(estimates),
        hypothesis=hypothesis,
        exact=False,
        shots=shots,
        std_error=math.sqrt(sum(variances)),
    )


def hypothesis_comparison(
    scenario,
    hypotheses: Sequence[Union[CollapseHypothesis, str]],
    settings: MeasurementSettings | None = None,
    shots: int = 0,
    rng: np.random.Generator | None = None,
    grid_step: float = math.pi / 64,
    threads: int | None = None,
    consistency_tol: float = 1e-6,
) -> list[InequalityResult]:
    """Evaluate each hypothesis against the unitary-model statistics.

    The unitary-only exact state stands in for "the data": settings
    default to the grid optimum for that state, and every hypothesis is
    evaluated exactly at those shared settings.  A hypothesis is flagged
    inconsistent when its exact S at the shared settings differs from the
    unitary value by more than ``consistency_tol``.  Each result also
    carries the hypothesis's own grid-search maximum ``s_max``.  With
    ``shots > 0`` the returned results are sampling estimates (one child
    stream per hypothesis, spawned from ``rng`` in list order) with the
    exact companions attached.
    """
    scenario_states = {}
    parsed: list[CollapseHypothesis] = []
    for h in hypotheses:
        hyp = CollapseHypothesis.parse(h) if isinstance(h, str) else h
        parsed.append(hyp)
        scenario_states[hyp.name] = scenario.exact_state_under(hyp)

    rho_unitary = scenario.exact_state_under(UNITARY_ONLY)
    alice_labels = tuple(scenario.alice_labels)
    bob_labels = tuple(scenario.bob_labels)
    if settings is None:
        settings, _ = optimize_settings(
            rho_unitary, grid_step, alice_labels, bob_labels, threads
        )
    s_data = chsh_value(rho_unitary, settings).s_value

    streams = rng.spawn(len(parsed)) if (shots > 0 and rng is not None) else None
    if shots > 0 and streams is None:
        raise ShapeError("sampling a comparison needs a Generator")

    results: list[InequalityResult] = []
    for k, hyp in enumerate(parsed):
        rho = scenario_states[hyp.name]
        exact = chsh_value(rho, settings, hypothesis=hyp)
        _, s_max = optimize_settings(rho, grid_step, alice_labels, bob_labels, threads)
        consistent = abs(exact.s_value - s_data) <= consistency_tol
        if shots > 0:
            sampled = sample_inequality(rho, settings, shots, streams[k], threads, hyp)
            results.append(
                InequalityResult(
                    s_value=sampled.s_value,
                    correlators=sampled.correlators,
                    hypothesis=hyp,
                    exact=False,
                    shots=shots,
                    std_error=sampled.std_error,
                    s_max=s_max,
                    exact_s=exact.s_value,
                    exact_correlators=exact.correlators,
                    consistent_with_data=consistent,
                )
            )
        else:
            results.append(
                InequalityResult(
                    s_value=exact.s_value,
                    correlators=exact.correlators,
                    hypothesis=hyp,
                    exact=True,
                    s_max=s_max,
                    exact_s=exact.s_value,
                    exact_correlators=exact.correlators,
                    consistent_with_data=consistent,
                )
            )
    return results
