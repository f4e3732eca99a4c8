"""Exact finite-dimensional quantum register algebra.

Dense, double-precision linear algebra over named tensor-product registers:
state vectors, density operators, unitaries/projectors acting on register
subsets, measurement channels, partial trace and trace distance.  Flattening
is row major with the first register most significant, and that convention is
the single source of truth for every index computation in the package.

All values are immutable after construction and every operation is pure
(given its rng), so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Operator identities are accepted at 1e-10; norm and trace preservation at
# 1e-12 (double precision accumulated over <= 1e4-dim contractions).
ATOL_OP = 1e-10
ATOL_NORM = 1e-12


class LayoutMismatchError(ValueError):
    """Two values live over incompatible register layouts."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers defining a tensor-product index space."""

    registers: tuple[tuple[str, int], ...]

    def __init__(self, registers: Iterable[tuple[str, int]]):
        regs = tuple((str(name), int(dim)) for name, dim in registers)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be distinct, got {names}")
        for name, dim in regs:
            if dim < 1:
                raise ValueError(f"register {name!r} has dimension {dim} < 1")
        object.__setattr__(self, "registers", regs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.registers)

    @property
    def total_dim(self) -> int:
        out = 1
        for _, dim in self.registers:
            out *= dim
        return out

    def axis(self, name: str) -> int:
        """Position of a register in the layout order."""
        for i, (reg, _) in enumerate(self.registers):
            if reg == name:
                return i
        raise KeyError(f"unknown register {name!r}; layout has {self.names}")

    def dim_of(self, name: str) -> int:
        return self.registers[self.axis(name)][1]

    def axes(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.axis(name) for name in names)

    def flatten(self, indices: Sequence[int]) -> int:
        """Row-major flat index of a multi-index (first register most significant)."""
        if len(indices) != len(self.registers):
            raise ValueError("multi-index length does not match register count")
        flat = 0
        for idx, (name, dim) in zip(indices, self.registers):
            if not 0 <= idx < dim:
                raise ValueError(f"index {idx} out of range for register {name!r} (dim {dim})")
            flat = flat * dim + idx
        return flat

    def unflatten(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.total_dim:
            raise ValueError(f"flat index {flat} out of range [0, {self.total_dim})")
        out = []
        for dim in reversed(self.dims):
            out.append(flat % dim)
            flat //= dim
        return tuple(reversed(out))

    def keep(self, names: Sequence[str]) -> "RegisterLayout":
        """Sub-layout containing only the given registers, original order."""
        wanted = set(names)
        missing = wanted - set(self.names)
        if missing:
            raise KeyError(f"unknown registers {sorted(missing)}")
        return RegisterLayout(tuple(reg for reg in self.registers if reg[0] in wanted))

    def extend(self, extra: Iterable[tuple[str, int]]) -> "RegisterLayout":
        return RegisterLayout(self.registers + tuple(extra))


def _require_same_layout(a: RegisterLayout, b: RegisterLayout) -> None:
    if a.registers != b.registers:
        raise LayoutMismatchError(f"layouts differ: {a.registers} vs {b.registers}")


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over a layout.

    Public operations only ever hand out unit vectors; unnormalized
    intermediates are kept as raw ndarrays internally.
    """

    layout: RegisterLayout
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.layout.total_dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.layout.total_dim},)"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state vector norm {norm} is not 1")
        # Scrub the residual O(eps) norm drift so chained operations cannot
        # accumulate past the 1e-12 contract.
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def to_density_operator(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amps, self.amps.conj()))

    def overlap(self, other: "StateVector") -> complex:
        _require_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "StateVector") -> float:
        """Squared overlap magnitude; insensitive to global phase."""
        return float(abs(self.overlap(other)) ** 2)


@dataclass(frozen=True)
class DensityOperator:
    """PSD unit-trace operator over a layout."""

    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix has shape {mat.shape}, expected ({d}, {d})")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("density operator is not Hermitian within 1e-10")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density operator trace {tr} is not 1")
        lo = float(np.linalg.eigvalsh(mat)[0])
        if lo < -1e-10:
            raise ValueError(f"density operator has eigenvalue {lo} < -1e-10")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)


def _canonical_targets(layout: RegisterLayout, targets: Sequence[str]) -> tuple[str, ...]:
    """Targets sorted into layout order; duplicates and unknown names rejected."""
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets in {targets}")
    axes = layout.axes(targets)
    order = np.argsort(axes)
    return tuple(targets[i] for i in order)


@dataclass(frozen=True)
class LinearOp:
    """Dense unitary or projector on a subset of registers.

    The matrix is indexed row major over the targets in layout order.  An op
    may be applied to any state whose layout carries the same (name, dim)
    pairs for every target, so one operator serves both the four-register
    verifier-view space and the six-register simulator space.
    """

    layout: RegisterLayout
    targets: tuple[str, ...]
    matrix: np.ndarray
    kind: str

    def __init__(self, layout: RegisterLayout, targets: Sequence[str], matrix, kind: str):
        targets = _canonical_targets(layout, targets)
        mat = np.asarray(matrix, dtype=complex)
        side = 1
        for name in targets:
            side *= layout.dim_of(name)
        if mat.shape != (side, side):
            raise ValueError(f"matrix has shape {mat.shape}, expected ({side}, {side})")
        if kind == "unitary":
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(side)))
            if err > ATOL_OP:
                raise ValueError(f"matrix is not unitary (deviation {err:.3e})")
        elif kind == "projector":
            err = max(
                np.max(np.abs(mat @ mat - mat)),
                np.max(np.abs(mat - mat.conj().T)),
            )
            if err > ATOL_OP:
                raise ValueError(f"matrix is not a projector (deviation {err:.3e})")
        else:
            raise ValueError(f"kind must be 'unitary' or 'projector', got {kind!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "kind", kind)

    def adjoint(self) -> "LinearOp":
        return LinearOp(self.layout, self.targets, self.matrix.conj().T, self.kind)

    def apply_to(self, layout: RegisterLayout, amps: np.ndarray) -> np.ndarray:
        _check_targets_compatible(self, layout)
        return apply_on_subset(layout, self.targets, self.matrix, amps)

    def to_matrix(self, layout: RegisterLayout | None = None) -> np.ndarray:
        layout = self.layout if layout is None else layout
        _check_targets_compatible(self, layout)
        return embed_matrix(layout, self.targets, self.matrix)


@dataclass(frozen=True)
class DiagonalOp:
    """Unitary diagonal in the computational basis of its targets."""

    layout: RegisterLayout
    targets: tuple[str, ...]
    phases: np.ndarray

    def __init__(self, layout: RegisterLayout, targets: Sequence[str], phases):
        targets = _canonical_targets(layout, targets)
        vec = np.asarray(phases, dtype=complex)
        side = 1
        for name in targets:
            side *= layout.dim_of(name)
        if vec.shape != (side,):
            raise ValueError(f"diagonal has shape {vec.shape}, expected ({side},)")
        if np.max(np.abs(np.abs(vec) - 1.0)) > ATOL_NORM:
            raise ValueError("diagonal entries must have unit modulus")
        vec.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "phases", vec)

    kind: str = field(default="unitary", init=False)

    def adjoint(self) -> "DiagonalOp":
        return DiagonalOp(self.layout, self.targets, self.phases.conj())

    def apply_to(self, layout: RegisterLayout, amps: np.ndarray) -> np.ndarray:
        _check_targets_compatible(self, layout)
        axes = layout.axes(self.targets)
        tdims = [layout.dims[a] for a in axes]
        moved = np.moveaxis(amps.reshape(layout.dims), axes, range(len(axes)))
        shape = moved.shape
        out = self.phases[:, None] * moved.reshape(len(self.phases), -1)
        out = np.moveaxis(out.reshape(tdims + list(shape[len(axes):])), range(len(axes)), axes)
        return out.reshape(-1)

    def to_matrix(self, layout: RegisterLayout | None = None) -> np.ndarray:
        layout = self.layout if layout is None else layout
        _check_targets_compatible(self, layout)
        return embed_matrix(layout, self.targets, np.diag(self.phases))


@dataclass(frozen=True)
class PermutationOp:
    """Unitary relabeling of the computational basis of its targets.

    ``image[j]`` is the flat target index that basis state ``j`` maps to, so
    the dense matrix has a single 1 per column at row ``image[j]``.
    """

    layout: RegisterLayout
    targets: tuple[str, ...]
    image: np.ndarray

    def __init__(self, layout: RegisterLayout, targets: Sequence[str], image):
        targets = _canonical_targets(layout, targets)
        img = np.asarray(image, dtype=np.int64)
        side = 1
        for name in targets:
            side *= layout.dim_of(name)
        if img.shape != (side,):
            raise ValueError(f"image has shape {img.shape}, expected ({side},)")
        if sorted(img.tolist()) != list(range(side)):
            raise ValueError("image is not a permutation of the target basis")
        img.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "image", img)

    kind: str = field(default="unitary", init=False)

    def adjoint(self) -> "PermutationOp":
        inverse = np.empty_like(self.image)
        inverse[self.image] = np.arange(len(self.image))
        return PermutationOp(self.layout, self.targets, inverse)

    def apply_to(self, layout: RegisterLayout, amps: np.ndarray) -> np.ndarray:
        _check_targets_compatible(self, layout)
        axes = layout.axes(self.targets)
        tdims = [layout.dims[a] for a in axes]
        moved = np.moveaxis(amps.reshape(layout.dims), axes, range(len(axes)))
        shape = moved.shape
        flat = moved.reshape(len(self.image), -1)
        out = np.empty_like(flat)
        out[self.image] = flat
        out = np.moveaxis(out.reshape(tdims + list(shape[len(axes):])), range(len(axes)), axes)
        return out.reshape(-1)

    def to_matrix(self, layout: RegisterLayout | None = None) -> np.ndarray:
        layout = self.layout if layout is None else layout
        _check_targets_compatible(self, layout)
        side = len(self.image)
        mat = np.zeros((side, side), dtype=complex)
        mat[self.image, np.arange(side)] = 1.0
        return embed_matrix(layout, self.targets, mat)


@dataclass(frozen=True)
class OpChain:
    """Product of unitaries, applied first factor first.

    ``OpChain((f, g, h))`` acts as the matrix product ``h @ g @ f``.
    """

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("empty operator chain")
        for op in self.factors:
            if getattr(op, "kind", None) != "unitary":
                raise ValueError("chain factors must be unitary operators")

    kind: str = field(default="unitary", init=False)

    @property
    def targets(self) -> tuple[str, ...]:
        seen: list[str] = []
        for op in self.factors:
            for name in op.targets:
                if name not in seen:
                    seen.append(name)
        return tuple(seen)

    def adjoint(self) -> "OpChain":
        return OpChain(tuple(op.adjoint() for op in reversed(self.factors)))

    def apply_to(self, layout: RegisterLayout, amps: np.ndarray) -> np.ndarray:
        for op in self.factors:
            amps = op.apply_to(layout, amps)
        return amps

    def to_matrix(self, layout: RegisterLayout) -> np.ndarray:
        out = self.factors[0].to_matrix(layout)
        for op in self.factors[1:]:
            out = op.to_matrix(layout) @ out
        return out


def _check_targets_compatible(op, layout: RegisterLayout) -> None:
    for name in op.targets:
        try:
            dim = layout.dim_of(name)
        except KeyError:
            raise LayoutMismatchError(
                f"operator targets {op.targets} but layout has {layout.names}"
            ) from None
        if dim != op.layout.dim_of(name):
            raise LayoutMismatchError(
                f"register {name!r} has dim {dim} in the state layout "
                f"but {op.layout.dim_of(name)} in the operator layout"
            )


def apply_on_subset(
    layout: RegisterLayout, targets: Sequence[str], matrix: np.ndarray, amps: np.ndarray
) -> np.ndarray:
    """Apply ``matrix`` (indexed over ``targets`` in layout order) to raw amplitudes."""
    axes = layout.axes(targets)
    tdims = [layout.dims[a] for a in axes]
    moved = np.moveaxis(amps.reshape(layout.dims), axes, range(len(axes)))
    shape = moved.shape
    flat = moved.reshape(matrix.shape[1], -1)
    out = matrix @ flat
    out = np.moveaxis(out.reshape(tdims + list(shape[len(axes):])), range(len(axes)), axes)
    return out.reshape(-1)


_EMBED_DIM_LIMIT = 8192


def embed_matrix(layout: RegisterLayout, targets: Sequence[str], matrix: np.ndarray) -> np.ndarray:
    """Dense layout-sized matrix for an operator on a register subset."""
    total = layout.total_dim
    if total > _EMBED_DIM_LIMIT:
        raise MemoryError(
            f"refusing to materialize a {total}x{total} dense operator; "
            "apply the factored form instead"
        )
    axes = list(layout.axes(targets))
    rest_axes = [i for i in range(len(layout.dims)) if i not in axes]
    tdims = [layout.dims[a] for a in axes]
    rdims = [layout.dims[a] for a in rest_axes]
    rest = 1
    for d in rdims:
        rest *= d
    big = np.kron(matrix, np.eye(rest, dtype=complex))
    # big acts on targets (x) rest; permute row and column tensor axes back to
    # layout order.
    perm = axes + rest_axes
    inv = np.argsort(perm)
    n = len(layout.dims)
    tensor = big.reshape(tdims + rdims + tdims + rdims)
    tensor = tensor.transpose(list(inv) + [n + i for i in inv])
    return np.ascontiguousarray(tensor.reshape(total, total))


# ---------------------------------------------------------------------------
# Operations on states and density operators
# ---------------------------------------------------------------------------

def basis_state(layout: RegisterLayout, assignment: Mapping[str, int]) -> StateVector:
    """Computational basis state with every register assigned an index."""
    unknown = set(assignment) - set(layout.names)
    if unknown:
        raise KeyError(f"unknown registers {sorted(unknown)}; layout has {layout.names}")
    missing = set(layout.names) - set(assignment)
    if missing:
        raise KeyError(f"registers {sorted(missing)} not assigned")
    flat = layout.flatten([assignment[name] for name in layout.names])
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[flat] = 1.0
    return StateVector(layout, amps)


def apply(op, state: StateVector) -> StateVector:
    """Apply an operator (tensored with identity elsewhere) to a state.

    Intended for unitaries; a projector that actually shrinks the state is
    rejected so callers go through :func:`project` and see the branch
    probability.
    """
    out = op.apply_to(state.layout, state.amps)
    norm = float(np.linalg.norm(out))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(
            f"operator application changed the norm to {norm}; "
            "use project() for measurements"
        )
    return StateVector(state.layout, out)


def project(proj, state: StateVector) -> tuple[float, StateVector | None]:
    """Born probability and collapsed state for a projective outcome.

    Returns ``(0.0, None)`` when the branch has no support, so callers can
    never renormalize numerical noise into a fake state.
    """
    if getattr(proj, "kind", None) != "projector":
        raise ValueError("project() requires a projector operator")
    out = proj.apply_to(state.layout, state.amps)
    norm = float(np.linalg.norm(out))
    prob = norm**2
    if norm < ATOL_NORM:
        return 0.0, None
    return prob, StateVector(state.layout, out / norm)


def dephase(rho: DensityOperator, register: str) -> DensityOperator:
    """Measure-and-forget channel: kill coherences of one register."""
    return DensityOperator(
        rho.layout, dephase_matrix(rho.layout, rho.matrix, register)
    )


def dephase_matrix(layout: RegisterLayout, matrix: np.ndarray, register: str) -> np.ndarray:
    """Raw-matrix dephasing used on unnormalized blocks."""
    axis = layout.axis(register)
    dims = layout.dims
    d = dims[axis]
    left = 1
    for k in range(axis):
        left *= dims[k]
    right = layout.total_dim // (left * d)
    t = matrix.reshape(left, d, right, left, d, right)
    mask = np.eye(d)[None, :, None, None, :, None]
    return (t * mask).reshape(layout.total_dim, layout.total_dim)


def measurement_probabilities(state: StateVector, register: str) -> np.ndarray:
    """Born probability of each computational outcome of one register."""
    axis = state.layout.axis(register)
    dims = state.layout.dims
    moved = np.moveaxis(state.amps.reshape(dims), axis, 0)
    return np.sum(np.abs(moved.reshape(dims[axis], -1)) ** 2, axis=1)


def measure(
    state: StateVector, register: str, rng: np.random.Generator
) -> tuple[int, float, StateVector]:
    """Sample a computational-basis measurement of one register.

    Deterministic given the generator state; the collapsed state is the
    renormalized conditional vector for the sampled outcome.
    """
    probs = measurement_probabilities(state, register)
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    axis = state.layout.axis(register)
    dims = state.layout.dims
    tensor = np.moveaxis(state.amps.reshape(dims), axis, 0).copy()
    keep = tensor[outcome].copy()
    tensor[:] = 0
    tensor[outcome] = keep
    collapsed = np.moveaxis(tensor, 0, axis).reshape(-1)
    collapsed = collapsed / np.linalg.norm(collapsed)
    return outcome, float(probs[outcome]), StateVector(state.layout, collapsed)


def partial_trace(rho: DensityOperator, keep: Sequence[str]) -> DensityOperator:
    """Trace out every register not named in ``keep`` (original order kept)."""
    return DensityOperator(
        rho.layout.keep(keep),
        partial_trace_matrix(rho.layout, rho.matrix, keep),
    )


def partial_trace_matrix(
    layout: RegisterLayout, matrix: np.ndarray, keep: Sequence[str]
) -> np.ndarray:
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("keep set must be nonempty")
    missing = keep_set - set(layout.names)
    if missing:
        raise KeyError(f"unknown registers {sorted(missing)}")
    n = len(layout.dims)
    tensor = matrix.reshape(layout.dims + layout.dims)
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i, name in enumerate(layout.names):
        if name not in keep_set:
            col[i] = row[i]
    kept_axes = [i for i, name in enumerate(layout.names) if name in keep_set]
    out_axes = kept_axes + [col[i] for i in kept_axes]
    reduced = np.einsum(tensor, row + col, out_axes)
    side = 1
    for i in kept_axes:
        side *= layout.dims[i]
    return reduced.reshape(side, side)


def trace_distance(r1: DensityOperator, r2: DensityOperator) -> float:
    """Half the trace norm of the difference, via the Hermitian spectrum."""
    _require_same_layout(r1.layout, r2.layout)
    return trace_distance_matrices(r1.matrix, r2.matrix)


def trace_distance_matrices(m1: np.ndarray, m2: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(m1 - m2))))


def haar_random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary matrix, deterministic per seed.

    QR of a complex Ginibre matrix with the R diagonal phase-fixed, which
    makes the distribution exactly Haar invariant.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_state(dim: int, seed: int) -> np.ndarray:
    """Haar-random unit vector, deterministic per seed."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
