"""Labeled composite Hilbert spaces and dense linear algebra on them.

Everything in this module is small and concrete: a state or operator is a
plain ``complex128`` numpy array tied to a :class:`CompositeSpace`, which
is just an ordered tuple of named tensor factors.  Every factor used by
the shipped scenarios is two-dimensional (photon polarization or a
spin-1/2 degree of freedom), but nothing below assumes that.

Conventions
-----------
* Factor order is significant and big-endian: the flat basis index runs
  fastest over the *last* factor.  For qubit factors (x, y) the basis
  order is ``|00>, |01>, |10>, |11>`` with the left digit belonging to
  ``x``, so a basis string reads left to right in factor order.
* Basis characters: ``h``, ``u`` and ``0`` mean index 0; ``v``, ``d`` and
  ``1`` mean index 1 (horizontal/vertical polarization, spin up/down).
* ``VALIDITY_TOL`` (1e-10) guards constructor invariants.
  ``ALGEBRA_TOL`` (1e-12) is the headroom claimed for algebraic
  identities at these dimensions.

All values are immutable after construction (arrays are marked
read-only), so they are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    InvalidState,
    LabelCollision,
    ShapeError,
    UnknownSubsystem,
)

VALIDITY_TOL = 1e-10
ALGEBRA_TOL = 1e-12

BASIS_CHARS = {"h": 0, "v": 1, "u": 0, "d": 1, "0": 0, "1": 1}

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CompositeSpace:
    """An ordered collection of labeled tensor factors.

    Parameters
    ----------
    factors : tuple of (label, dim) pairs
        Subsystem labels must be unique and dimensions positive.
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        factors = tuple((str(lbl), int(dim)) for lbl, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ShapeError("a composite space needs at least one factor")
        labels = [lbl for lbl, _ in factors]
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise LabelCollision(f"duplicate factor labels: {dupes}")
        for lbl, dim in factors:
            if dim < 1:
                raise ShapeError(f"factor {lbl!r} has non-positive dimension {dim}")

    @classmethod
    def qubits(cls, *labels: str) -> "CompositeSpace":
        """Space of two-dimensional factors with the given labels."""
        return cls(tuple((lbl, 2) for lbl in labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        """Total dimension (product of factor dimensions)."""
        return math.prod(self.dims)

    @property
    def nfactors(self) -> int:
        return len(self.factors)

    def axis(self, label: str) -> int:
        """Position of the factor with this label, raising UnknownSubsystem."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownSubsystem(
                f"no factor labeled {label!r} in {self.labels}"
            ) from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def axes(self, labels: Sequence[str]) -> tuple[int, ...]:
        found = tuple(self.axis(l) for l in labels)
        if len(set(found)) != len(found):
            raise ShapeError(f"repeated labels in {tuple(labels)}")
        return found

    def subspace(self, labels: Sequence[str]) -> "CompositeSpace":
        """Sub-collection of factors in the *requested* order."""
        return CompositeSpace(tuple(self.factors[a] for a in self.axes(labels)))

    def basis_index(self, which: Union[str, Sequence[int]]) -> int:
        """Flat basis index for a per-factor assignment.

        ``which`` is either a string with one character per factor (see
        ``BASIS_CHARS``; plain digits also work) or a sequence of integer
        indices, ordered like the factors.
        """
        if isinstance(which, str):
            if len(which) != self.nfactors:
                raise ShapeError(
                    f"basis string {which!r} has {len(which)} characters, "
                    f"space has {self.nfactors} factors"
                )
            digits = []
            for ch in which:
                if ch in BASIS_CHARS:
                    digits.append(BASIS_CHARS[ch])
                elif ch.isdigit():
                    digits.append(int(ch))
                else:
                    raise ShapeError(f"unknown basis character {ch!r}")
        else:
            digits = [int(i) for i in which]
            if len(digits) != self.nfactors:
                raise ShapeError(
                    f"assignment has {len(digits)} entries, space has "
                    f"{self.nfactors} factors"
                )
        index = 0
        for digit, dim in zip(digits, self.dims):
            if not 0 <= digit < dim:
                raise ShapeError(f"basis index {digit} out of range for dim {dim}")
            index = index * dim + digit
        return index

    def __str__(self) -> str:
        return "(" + ", ".join(self.labels) + ")"


@dataclass(frozen=True)
class PureState:
    """A state vector over a :class:`CompositeSpace`.

    States are normalized by default; a sub-normalized vector (for example
    the surviving branch of a heralding projection, before renormalizing)
    must be constructed with ``normalized=False`` and then carries its
    squared norm explicitly via :attr:`squared_norm`.
    """

    space: CompositeSpace
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.space.dim,):
            raise ShapeError(
                f"amplitude vector has length {amps.size}, space {self.space} "
                f"has dimension {self.space.dim}"
            )
        object.__setattr__(self, "amplitudes", _freeze(amps))
        if self.normalized:
            nrm2 = float(np.vdot(amps, amps).real)
            if abs(nrm2 - 1.0) > VALIDITY_TOL:
                raise InvalidState(
                    f"squared norm {nrm2!r} differs from 1 beyond {VALIDITY_TOL}; "
                    "pass normalized=False for a sub-normalized state"
                )

    @classmethod
    def basis(cls, space: CompositeSpace, which: Union[str, Sequence[int]]) -> "PureState":
        """Computational basis vector |which>."""
        amps = np.zeros(space.dim, dtype=complex)
        amps[space.basis_index(which)] = 1.0
        return cls(space, amps)

    @classmethod
    def from_mapping(
        cls,
        space: CompositeSpace,
        entries: dict,
        normalized: bool = True,
    ) -> "PureState":
        """State with the given {basis string: amplitude} entries."""
        amps = np.zeros(space.dim, dtype=complex)
        for which, value in entries.items():
            amps[space.basis_index(which)] = value
        return cls(space, amps, normalized=normalized)

    @property
    def squared_norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, which: Union[str, Sequence[int]]) -> complex:
        return complex(self.amplitudes[self.space.basis_index(which)])

    def normalize(self) -> "PureState":
        """Unit-norm copy. Raises InvalidState on a numerically null vector."""
        nrm2 = self.squared_norm
        if nrm2 <= ALGEBRA_TOL:
            raise InvalidState("cannot normalize a numerically null vector")
        return PureState(self.space, self.amplitudes / math.sqrt(nrm2))

    def density(self) -> "DensityOperator":
        """The projector |psi><psi| as a DensityOperator.

        Only defined for normalized states; call :meth:`normalize` first
        on a sub-normalized branch.
        """
        if not self.normalized:
            raise InvalidState(
                "density() requires a normalized state; call normalize() first"
            )
        return DensityOperator(
            self.space, np.outer(self.amplitudes, self.amplitudes.conj())
        )

    def reorder(self, labels: Sequence[str]) -> "PureState":
        """The same state with factors permuted into the given label order."""
        if sorted(labels) != sorted(self.space.labels):
            raise ShapeError(
                f"reorder needs a permutation of {self.space.labels}, got {tuple(labels)}"
            )
        perm = self.space.axes(labels)
        tens = self.amplitudes.reshape(self.space.dims).transpose(perm)
        return PureState(
            self.space.subspace(labels),
            tens.reshape(-1),
            normalized=self.normalized,
        )


def _density_residuals(matrix: np.ndarray) -> tuple[float, float, float]:
    """(hermiticity residual, trace residual, min eigenvalue) of a square matrix.

    The eigenvalue is taken from the hermitized part (M + M*)/2, so the
    diagnostic stays meaningful for slightly (or badly) non-hermitian input.
    """
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    trace = float(abs(np.trace(matrix) - 1.0))
    hermitized = (matrix + matrix.conj().T) / 2.0
    mineig = float(np.linalg.eigvalsh(hermitized)[0])
    return herm, trace, mineig


@dataclass(frozen=True)
class DensityOperator:
    """A hermitian, unit-trace, positive-semidefinite matrix over a space.

    Construction validates all three invariants within ``VALIDITY_TOL``
    (positivity allows eigenvalues down to -1e-10 for roundoff).
    """

    space: CompositeSpace
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ShapeError(
                f"matrix has shape {mat.shape}, space {self.space} needs ({d}, {d})"
            )
        herm, trace, mineig = _density_residuals(mat)
        if herm > VALIDITY_TOL:
            raise InvalidState(f"hermiticity residual {herm:.3e} exceeds {VALIDITY_TOL}")
        if trace > VALIDITY_TOL:
            raise InvalidState(f"trace residual {trace:.3e} exceeds {VALIDITY_TOL}")
        if mineig < -VALIDITY_TOL:
            raise InvalidState(f"minimum eigenvalue {mineig:.3e} below -{VALIDITY_TOL}")
        object.__setattr__(self, "matrix", _freeze(mat))

    @classmethod
    def mixture(
        cls, weighted: Iterable[tuple[float, "DensityOperator"]]
    ) -> "DensityOperator":
        """Convex mixture sum(w_k rho_k); weights must be a distribution."""
        weighted = list(weighted)
        if not weighted:
            raise ShapeError("mixture of nothing")
        space = weighted[0][1].space
        total = 0.0
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        for w, rho in weighted:
            if rho.space.labels != space.labels:
                raise ShapeError("mixture components live on different spaces")
            if w < -ALGEBRA_TOL:
                raise InvalidState(f"negative mixture weight {w}")
            mat += w * rho.matrix
            total += w
        if abs(total - 1.0) > VALIDITY_TOL:
            raise InvalidState(f"mixture weights sum to {total!r}, not 1")
        return cls(space, mat)

    def diagonal(self) -> np.ndarray:
        """Real diagonal (the computational-basis probabilities)."""
        return _freeze(self.matrix.diagonal().real.copy())


@dataclass(frozen=True)
class DichotomicObservable:
    """A hermitian observable with eigenvalues in {+1, -1}.

    Equivalently: the matrix squares to the identity (within
    ``VALIDITY_TOL``), so ``(I + O)/2`` and ``(I - O)/2`` are the
    projectors onto the +1 and -1 eigenspaces.  Outcome order throughout
    the package is (+1, -1).
    """

    space: CompositeSpace
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ShapeError(
                f"matrix has shape {mat.shape}, space {self.space} needs ({d}, {d})"
            )
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        if herm > VALIDITY_TOL:
            raise InvalidState(f"hermiticity residual {herm:.3e} exceeds {VALIDITY_TOL}")
        square = float(np.max(np.abs(mat @ mat - np.eye(d))))
        if square > VALIDITY_TOL:
            raise InvalidState(
                f"observable does not square to identity (residual {square:.3e})"
            )
        object.__setattr__(self, "matrix", _freeze(mat))

    @classmethod
    def pauli(cls, axis: str, label: str) -> "DichotomicObservable":
        """Single-qubit Pauli observable on a factor with the given label."""
        if axis not in _PAULI:
            raise ShapeError(f"unknown Pauli axis {axis!r}")
        return cls(CompositeSpace.qubits(label), _PAULI[axis].copy())

    @classmethod
    def bloch(cls, theta: float, phi: float, label: str) -> "DichotomicObservable":
        """Single-qubit observable n.sigma for the Bloch direction (theta, phi)."""
        n = bloch_vector(theta, phi)
        mat = n[0] * _PAULI["x"] + n[1] * _PAULI["y"] + n[2] * _PAULI["z"]
        return cls(CompositeSpace.qubits(label), mat)

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Projectors onto the (+1, -1) eigenspaces, in that order."""
        eye = np.eye(self.space.dim)
        return (
            _freeze((eye + self.matrix) / 2.0),
            _freeze((eye - self.matrix) / 2.0),
        )

    def retarget(self, labels: Sequence[str]) -> "DichotomicObservable":
        """The same matrix acting on differently labeled factors."""
        labels = tuple(labels)
        if len(labels) != self.space.nfactors:
            raise ShapeError(
                f"retarget needs {self.space.nfactors} labels, got {len(labels)}"
            )
        space = CompositeSpace(tuple(zip(labels, self.space.dims)))
        return DichotomicObservable(space, self.matrix)


@dataclass(frozen=True)
class ValidityReport:
    """Diagnostics from :func:`validate`; residuals against VALIDITY_TOL."""

    hermiticity_residual: float
    trace_residual: float
    min_eigenvalue: float
    tolerance: float
    hermitian_ok: bool
    trace_ok: bool
    psd_ok: bool

    @property
    def ok(self) -> bool:
        return self.hermitian_ok and self.trace_ok and self.psd_ok


def bloch_vector(theta: float, phi: float) -> np.ndarray:
    """Unit vector (sin t cos p, sin t sin p, cos t)."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def tensor(*states: PureState) -> PureState:
    """Kronecker product of pure states; factors concatenate in argument order.

    Raises LabelCollision when two arguments share a factor label.  The
    result is flagged normalized only when every input is.
    """
    if len(states) == 1 and isinstance(states[0], (list, tuple)):
        states = tuple(states[0])
    if not states:
        raise ShapeError("tensor of nothing")
    seen: list[str] = []
    for st in states:
        seen.extend(st.space.labels)
    if len(set(seen)) != len(seen):
        dupes = sorted({l for l in seen if seen.count(l) > 1})
        raise LabelCollision(f"factor labels appear twice in tensor: {dupes}")
    amps = states[0].amplitudes
    factors = list(states[0].space.factors)
    for st in states[1:]:
        amps = np.kron(amps, st.amplitudes)
        factors.extend(st.space.factors)
    return PureState(
        CompositeSpace(tuple(factors)),
        amps,
        normalized=all(st.normalized for st in states),
    )


def partial_trace(
    rho: Union[DensityOperator, PureState], keep: Sequence[str]
) -> DensityOperator:
    """Trace out every factor not listed in ``keep``.

    The result acts on the kept factors in their *original* relative
    order (regardless of the order they are listed in ``keep``), per the
    big-endian indexing convention.  Accepts a normalized PureState as a
    convenience, forming its density operator first.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    keep = tuple(keep)
    if not keep:
        raise ShapeError("keep must name at least one factor")
    keep_axes = sorted(rho.space.axes(keep))
    n = rho.space.nfactors
    dims = rho.space.dims
    tens = rho.matrix.reshape(dims + dims)

    letters = [chr(ord("a") + i) for i in range(2 * n)]
    row = list(letters[:n])
    col = list(letters[n:])
    for ax in range(n):
        if ax not in keep_axes:
            col[ax] = row[ax]
    out = [row[ax] for ax in keep_axes] + [col[ax] for ax in keep_axes]
    subscripts = "".join(row) + "".join(col) + "->" + "".join(out)
    reduced = np.einsum(subscripts, tens)

    kept_labels = [rho.space.labels[ax] for ax in keep_axes]
    sub = rho.space.subspace(kept_labels)
    return DensityOperator(sub, reduced.reshape(sub.dim, sub.dim))


def purity(rho: DensityOperator) -> float:
    """Tr(rho^2). Equals 1 exactly when rho is a pure projector.

    Uses the hermitian identity Tr(rho^2) = sum |rho_ij|^2.
    """
    return float(np.vdot(rho.matrix, rho.matrix).real)


def coherence_norm(
    rho: DensityOperator, basis_labels: Sequence[str] | None = None
) -> float:
    """Sum of |entries| between basis states that differ on the given factors.

    With ``basis_labels=None`` every factor counts, so the value is the
    plain sum of absolute off-diagonal entries in the computational
    product basis, and it vanishes exactly when rho is diagonal there.
    Restricting to a subset measures only the coherences the subset's
    basis can see, which is the quantity a dephasing on those factors
    sends to zero.
    """
    if basis_labels is None:
        basis_labels = rho.space.labels
    axes = rho.space.axes(basis_labels)
    if not axes:
        return 0.0
    grid = np.unravel_index(np.arange(rho.space.dim), rho.space.dims)
    differs = np.zeros((rho.space.dim, rho.space.dim), dtype=bool)
    for ax in axes:
        comp = grid[ax]
        differs |= comp[:, None] != comp[None, :]
    return float(np.abs(rho.matrix[differs]).sum())


def embed(
    matrix: np.ndarray, sub: CompositeSpace, space: CompositeSpace
) -> np.ndarray:
    """Extend an operator on ``sub`` to ``space`` with identity elsewhere.

    ``sub``'s labels must all exist in ``space`` with matching dimensions;
    the embedding respects ``space``'s factor order.
    """
    for lbl, dim in sub.factors:
        if space.dim_of(lbl) != dim:
            raise ShapeError(
                f"factor {lbl!r} has dim {dim} in the operator but "
                f"{space.dim_of(lbl)} in the target space"
            )
    sub_axes = space.axes(sub.labels)
    rest_axes = [i for i in range(space.nfactors) if i not in sub_axes]
    rest_dim = math.prod(space.dims[i] for i in rest_axes) if rest_axes else 1

    full = np.kron(matrix, np.eye(rest_dim))
    cur_order = list(sub_axes) + rest_axes
    cur_dims = tuple(space.dims[i] for i in cur_order)
    tens = full.reshape(cur_dims + cur_dims)
    perm = [cur_order.index(i) for i in range(space.nfactors)]
    perm = perm + [space.nfactors + p for p in perm]
    return tens.transpose(perm).reshape(space.dim, space.dim)


def expectation(
    state: Union[PureState, DensityOperator],
    obs: DichotomicObservable,
    on: Sequence[str] | None = None,
) -> float:
    """<O> with the observable embedded (identity elsewhere) by label.

    ``on`` retargets the observable onto the named factors of the state's
    space; by default the observable's own labels are used.  For a
    dichotomic observable the result lies in [-1, 1] up to tolerance.
    """
    if on is not None:
        obs = obs.retarget(on)
    space = state.space
    full = embed(obs.matrix, obs.space, space)
    if isinstance(state, PureState):
        if not state.normalized:
            raise InvalidState("expectation requires a normalized state")
        value = np.vdot(state.amplitudes, full @ state.amplitudes)
    else:
        value = np.einsum("ij,ji->", state.matrix, full)
    return float(value.real)


def validate(rho: Union[DensityOperator, np.ndarray]) -> ValidityReport:
    """Validity diagnostics for a density operator or a raw square matrix.

    Never raises for bad numbers; that is the point: it reports the
    hermiticity residual, trace residual, and minimum eigenvalue, with
    per-check flags against ``VALIDITY_TOL``.
    """
    matrix = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"validate needs a square matrix, got shape {matrix.shape}")
    herm, trace, mineig = _density_residuals(matrix)
    return ValidityReport(
        hermiticity_residual=herm,
        trace_residual=trace,
        min_eigenvalue=mineig,
        tolerance=VALIDITY_TOL,
        hermitian_ok=herm <= VALIDITY_TOL,
        trace_ok=trace <= VALIDITY_TOL,
        psd_ok=mineig >= -VALIDITY_TOL,
    )
