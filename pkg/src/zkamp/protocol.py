"""Quantum model of the graph-isomorphism identification round.

One round: the prover relabels its first graph uniformly at random and sends
the result (register Y), the verifier processes its workspace (W holds an
arbitrary auxiliary input, V scratch space, A the challenge qubit) with a
unitary and measures A, and the prover answers with a permutation that the
verifier checks.  The verifier's end-of-round view is the dephased W,V,A,Y
state together with the classical record of the sent graph, kept in an extra
register Zp (and optionally the response permutation, kept in Z).

Views are handled in two equivalent forms: a dense density operator over the
full space, and a :class:`RecordedView` keyed by the classical record values.
The record registers are never coherent, so the trace distance between two
views is the sum of per-record block distances; the blocked form is what
makes the largest problem sizes fit in memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .registers import (
    DensityOperator,
    LinearOp,
    RegisterLayout,
    StateVector,
    dephase_matrix,
    haar_random_unitary,
    random_state,
    trace_distance_matrices,
)
from .symm import (
    Graph,
    Permutation,
    act,
    compose,
    encode,
    enumerate_sn,
    find_isomorphism,
    invert,
    num_graph_codes,
)

_DENSE_VIEW_LIMIT = 4096


class NotIsomorphicError(ValueError):
    """The given graph pair has no isomorphism, so no witness exists."""


def view_layout(dims: tuple[int, int], n: int) -> RegisterLayout:
    """Registers the verifier sees coherently: W, V, A, Y."""
    dim_w, dim_v = dims
    return RegisterLayout(
        [("W", dim_w), ("V", dim_v), ("A", 2), ("Y", num_graph_codes(n))]
    )


def aux_layout(dim_w: int) -> RegisterLayout:
    return RegisterLayout([("W", dim_w)])


@dataclass(frozen=True)
class Instance:
    """A yes-instance: two graphs with a stored isomorphism witness."""

    g0: Graph
    g1: Graph
    tau: Permutation

    def __post_init__(self):
        if not (self.g0.n == self.g1.n == self.tau.n):
            raise ValueError("graphs and witness must share the vertex count")
        if act(self.tau, self.g0) != self.g1:
            raise ValueError("witness does not map g0 onto g1")

    @property
    def n(self) -> int:
        return self.g0.n

    @classmethod
    def from_graphs(cls, g0: Graph, g1: Graph) -> "Instance":
        """Build an instance, finding the first witness in enumeration order."""
        tau = find_isomorphism(g0, g1)
        if tau is None:
            raise NotIsomorphicError("graphs are not isomorphic")
        return cls(g0, g1, tau)

    def graph_for_challenge(self, a: int) -> Graph:
        if a not in (0, 1):
            raise ValueError(f"challenge must be 0 or 1, got {a}")
        return self.g0 if a == 0 else self.g1


@dataclass(frozen=True)
class VerifierModel:
    """Verifier strategy: workspace dimensions plus a unitary on W,V,A,Y."""

    dims: tuple[int, int]
    u_v: LinearOp

    def __post_init__(self):
        if min(self.dims) < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")
        if set(self.u_v.targets) != {"W", "V", "A", "Y"}:
            raise ValueError(f"verifier unitary must target W,V,A,Y, got {self.u_v.targets}")

    @property
    def dim_w(self) -> int:
        return self.dims[0]


def honest_verifier(dims: tuple[int, int], n: int) -> VerifierModel:
    """The protocol verifier: flip the challenge qubit into uniform, touch nothing else."""
    layout = view_layout(dims, n)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    dim_w, dim_v = dims
    dim_y = num_graph_codes(n)
    full = np.kron(np.eye(dim_w * dim_v), np.kron(h, np.eye(dim_y)))
    return VerifierModel(dims, LinearOp(layout, ("W", "V", "A", "Y"), full, "unitary"))


def adversarial_verifier(dims: tuple[int, int], n: int, seed: int) -> VerifierModel:
    """Haar-random verifier unitary over the whole of W,V,A,Y."""
    layout = view_layout(dims, n)
    dim = layout.total_dim
    u = haar_random_unitary(dim, seed)
    return VerifierModel(dims, LinearOp(layout, ("W", "V", "A", "Y"), u, "unitary"))


def random_aux(dim_w: int, seed: int) -> StateVector:
    """Haar-random auxiliary input on W."""
    return StateVector(aux_layout(dim_w), random_state(dim_w, seed))


def honest_response(inst: Instance, tau: Permutation, a: int) -> Permutation:
    """The prover's answer to challenge ``a`` after having sent ``act(tau, g0)``.

    For a = 1 the answer routes through the witness, so that relabeling g1
    with it reproduces the sent graph.
    """
    if a == 0:
        return tau
    if a == 1:
        return compose(tau, invert(inst.tau))
    raise ValueError(f"challenge must be 0 or 1, got {a}")


def accept(sent: Graph, a: int, response: Permutation, inst: Instance) -> bool:
    """Step-(c) check: the response must relabel the challenged graph onto the sent one."""
    target = inst.graph_for_challenge(a)
    if response.n != target.n or sent.n != target.n:
        raise ValueError("vertex counts of response, graphs, and instance must agree")
    return act(response, target) == sent


@dataclass(frozen=True)
class RecordedView:
    """Mixture of coherent blocks keyed by classical record values.

    ``blocks[key]`` is the unnormalized density block on ``base_layout`` for
    record value ``key`` (a tuple, one index per record register).  The full
    operator is the direct sum of the blocks over the record basis, i.e.
    ``sum_key blocks[key] (x) |key><key|``.
    """

    base_layout: RegisterLayout
    record_registers: tuple[tuple[str, int], ...]
    blocks: Mapping[tuple[int, ...], np.ndarray]

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def record_weights(self) -> dict[tuple[int, ...], float]:
        return {key: float(np.trace(b).real) for key, b in self.blocks.items()}

    def trace_distance(self, other: "RecordedView") -> float:
        """Half trace norm of the difference, block by block.

        Exact because both operators are block diagonal over the same
        classical record basis, where the trace norm is additive.
        """
        if (
            self.base_layout.registers != other.base_layout.registers
            or self.record_registers != other.record_registers
        ):
            raise ValueError("recorded views live over different layouts")
        total = 0.0
        zero = np.zeros((self.base_layout.total_dim,) * 2, dtype=complex)
        for key in set(self.blocks) | set(other.blocks):
            a = self.blocks.get(key, zero)
            b = other.blocks.get(key, zero)
            total += trace_distance_matrices(a, b)
        return total

    def full_layout(self) -> RegisterLayout:
        return self.base_layout.extend(self.record_registers)

    def to_density_operator(self) -> DensityOperator:
        """Dense operator with the record registers appended to the layout."""
        layout = self.full_layout()
        if layout.total_dim > _DENSE_VIEW_LIMIT:
            raise MemoryError(
                f"dense view would be {layout.total_dim}x{layout.total_dim}; "
                "compare RecordedView blocks instead"
            )
        record_layout = RegisterLayout(self.record_registers)
        rec_dim = record_layout.total_dim
        full = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
        for key, block in self.blocks.items():
            offset = record_layout.flatten(key)
            full[offset::rec_dim, offset::rec_dim] = block
        return DensityOperator(layout, full)


def _check_aux(ver: VerifierModel, aux: StateVector) -> None:
    if aux.layout.registers != (("W", ver.dim_w),):
        raise ValueError(
            f"auxiliary input must live on a W-only layout of dim {ver.dim_w}, "
            f"got {aux.layout.registers}"
        )


def real_view_recorded(
    inst: Instance, ver: VerifierModel, aux: StateVector, keep_z: bool = False
) -> RecordedView:
    """Verifier view of one real round, averaged over the prover's choices.

    Per relabeling tau: run the verifier unitary on the initial product
    state, dephase the challenge register, and record the sent graph in Zp.
    With ``keep_z`` the prover's step-(c) response is recorded too, which
    splits each tau branch by challenge value.
    """
    _check_aux(ver, aux)
    n = inst.n
    layout = view_layout(ver.dims, n)
    base = aux.amps
    dim_vay = layout.total_dim // ver.dim_w
    perms = enumerate_sn(n)
    weight = 1.0 / len(perms)
    dim_y = num_graph_codes(n)

    blocks: dict[tuple[int, ...], np.ndarray] = {}
    for tau in perms:
        sent = act(tau, inst.g0)
        code = encode(sent)
        start = np.zeros(dim_vay, dtype=complex)
        start[layout.keep(["V", "A", "Y"]).flatten((0, 0, code))] = 1.0
        vec = ver.u_v.apply_to(layout, np.kron(base, start))
        block = weight * dephase_matrix(layout, np.outer(vec, vec.conj()), "A")
        if keep_z:
            for a in (0, 1):
                picked = _challenge_block(layout, block, a)
                response = honest_response(inst, tau, a)
                key = (perms.index(response), code)
                _accumulate(blocks, key, picked)
        else:
            _accumulate(blocks, (code,), block)

    records: tuple[tuple[str, int], ...]
    if keep_z:
        records = (("Z", len(perms)), ("Zp", dim_y))
    else:
        records = (("Zp", dim_y),)
    return RecordedView(layout, records, blocks)


def _challenge_block(layout: RegisterLayout, block: np.ndarray, a: int) -> np.ndarray:
    """Restrict an A-dephased block to one challenge outcome."""
    axis = layout.axis("A")
    dims = layout.dims
    left = int(np.prod(dims[:axis], dtype=int))
    right = layout.total_dim // (left * dims[axis])
    t = block.reshape(left, dims[axis], right, left, dims[axis], right).copy()
    mask = np.zeros(dims[axis])
    mask[a] = 1.0
    t *= mask[None, :, None, None, None, None]
    t *= mask[None, None, None, None, :, None]
    return t.reshape(layout.total_dim, layout.total_dim)


def _accumulate(blocks: dict, key: tuple[int, ...], block: np.ndarray) -> None:
    if key in blocks:
        blocks[key] = blocks[key] + block
    else:
        blocks[key] = block


def real_view(
    inst: Instance, ver: VerifierModel, aux: StateVector, keep_z: bool = False
) -> DensityOperator:
    """Dense form of :func:`real_view_recorded` (guarded by layout size)."""
    return real_view_recorded(inst, ver, aux, keep_z=keep_z).to_density_operator()
