"""Experiment runner: build instances, run the verification suites, emit JSON.

Every command produces one report document with a fixed key order and floats
printed at 17 significant digits, so identical configurations diff to
nothing except the timings block.  Exit code 0 means every record passed,
1 means some check failed, 2 means the configuration was invalid.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import amplify, protocol, simulator
from .amplify import PhasePair
from .protocol import Instance, NotIsomorphicError
from .registers import OpChain
from .symm import format_graph_literal, parse_graph_literal

OP_TOL = 1e-10
ROTATION_TOL = 1e-12
ORDER_GAP = 1e-6

_version = "0.1.0"


class ConfigError(Exception):
    """Invalid command configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one run, echoed verbatim into the report."""

    command: str
    n: int | None
    m: int | None
    trials: int
    seed: int
    dims: tuple[int, int]
    g0: str | None
    g1: str | None
    out: str | None
    completion: str
    extras: dict

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n is not None and not 2 <= self.n <= 4:
            raise ConfigError(f"n must be in 2..4 for full verification runs, got {self.n}")
        if min(self.dims) < 1:
            raise ConfigError(f"dims must be >= 1, got {self.dims}")

    def as_dict(self) -> dict:
        out = {
            "command": self.command,
            "n": self.n,
            "m": self.m,
            "trials": self.trials,
            "seed": self.seed,
            "dims": list(self.dims),
            "g0": self.g0,
            "g1": self.g1,
            "completion": self.completion,
            "out": self.out,
        }
        out.update(self.extras)
        return out


def trial_seeds(seed: int, trial: int, count: int = 3) -> list[int]:
    """Well-separated child seeds for one trial, deterministic in (seed, trial)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return [int(x) for x in ss.generate_state(count)]


def record(name: str, claim: str, value, tolerance, passed: bool, **extras) -> dict:
    rec = {
        "name": name,
        "claim": claim,
        "value": value,
        "tolerance": tolerance,
        "pass": bool(passed),
    }
    rec.update(extras)
    return rec


def residual_record(name: str, claim: str, value: float, tolerance: float = OP_TOL, **extras) -> dict:
    return record(name, claim, float(value), tolerance, float(value) <= tolerance, **extras)


# ---------------------------------------------------------------------------
# JSON emission with explicit float formatting
# ---------------------------------------------------------------------------

def dump_json(obj) -> str:
    pieces: list[str] = []
    _dump(obj, pieces)
    return "".join(pieces)


def _dump(obj, pieces: list[str]) -> None:
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(format(float(obj), ".17g"))
    elif isinstance(obj, (complex, np.complexfloating)):
        _dump({"re": float(obj.real), "im": float(obj.imag)}, pieces)
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, dict):
        pieces.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                pieces.append(", ")
            pieces.append(json.dumps(str(key)))
            pieces.append(": ")
            _dump(value, pieces)
        pieces.append("}")
    elif isinstance(obj, (list, tuple)):
        pieces.append("[")
        for i, value in enumerate(obj):
            if i:
                pieces.append(", ")
            _dump(value, pieces)
        pieces.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


# ---------------------------------------------------------------------------
# Shared construction helpers
# ---------------------------------------------------------------------------

def _parse_graph(text: str, n: int | None):
    try:
        if ";" in text:
            g = parse_graph_literal(text)
            if n is not None and g.n != n:
                raise ConfigError(f"graph literal {text!r} disagrees with --n {n}")
            return g
        if n is None:
            raise ConfigError("--n is required when graphs are given as bare edge lists")
        return parse_graph_literal(f"n={n};edges={text}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_instance(cfg: RunConfig) -> Instance:
    if cfg.g0 is None or cfg.g1 is None:
        raise ConfigError("this command needs --g0 and --g1")
    g0 = _parse_graph(cfg.g0, cfg.n)
    g1 = _parse_graph(cfg.g1, cfg.n)
    try:
        return Instance.from_graphs(g0, g1)
    except NotIsomorphicError as exc:
        raise ConfigError(f"graphs are not isomorphic: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _verifier(cfg: RunConfig, kind: str, seed: int, n: int):
    if kind == "honest":
        return protocol.honest_verifier(cfg.dims, n)
    return protocol.adversarial_verifier(cfg.dims, n, seed)


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def run_verify_eq1(cfg: RunConfig) -> list[dict]:
    inst = build_instance(cfg)
    records = []
    honest = simulator.build_circuit(inst, protocol.honest_verifier(cfg.dims, inst.n), cfg.completion)
    records.append(
        residual_record(
            "half-success-block[honest]",
            "half-success-block",
            simulator.success_block_residual(honest),
            verifier="honest",
        )
    )
    for t in range(cfg.trials):
        ver_seed = trial_seeds(cfg.seed, t)[0]
        circ = simulator.build_circuit(
            inst, protocol.adversarial_verifier(cfg.dims, inst.n, ver_seed), cfg.completion
        )
        records.append(
            residual_record(
                f"half-success-block[trial={t}]",
                "half-success-block",
                simulator.success_block_residual(circ),
                verifier="adversarial",
                verifier_seed=ver_seed,
            )
        )
    return records


def run_verify_eq2(cfg: RunConfig) -> list[dict]:
    inst = build_instance(cfg)
    records = []
    for t in range(cfg.trials):
        ver_seed, aux_seed, _ = trial_seeds(cfg.seed, t)
        circ = simulator.build_circuit(
            inst, protocol.adversarial_verifier(cfg.dims, inst.n, ver_seed), cfg.completion
        )
        aux = protocol.random_aux(cfg.dims[0], aux_seed)
        check = simulator.amplification_check(circ, aux)
        records.append(
            residual_record(
                f"one-step-amplification[trial={t}]",
                "one-step-amplification",
                check.residual,
            )
        )
        records.append(
            record(
                f"post-step-success-probability[trial={t}]",
                "post-step-success-probability",
                check.success_prob,
                OP_TOL,
                abs(check.success_prob - 1.0) <= OP_TOL,
                target=1.0,
            )
        )
        records.append(
            record(
                f"operator-order-disambiguation[trial={t}]",
                "operator-order-disambiguation",
                check.swapped_order_residual,
                None,
                check.swapped_order_residual > ORDER_GAP,
                note="the swapped operator order must visibly differ",
            )
        )
    return records


def run_zk_check(cfg: RunConfig) -> list[dict]:
    inst = build_instance(cfg)
    verifier_kind = cfg.extras.get("verifier", "adversarial")
    keep_z = bool(cfg.extras.get("keep_z", False))
    records = []
    for t in range(cfg.trials):
        ver_seed, aux_seed, sample_seed = trial_seeds(cfg.seed, t)
        ver = _verifier(cfg, verifier_kind, ver_seed, inst.n)
        circ = simulator.build_circuit(inst, ver, cfg.completion)
        aux = protocol.random_aux(cfg.dims[0], aux_seed)
        sim_view = simulator.simulate_round_recorded(circ, aux, keep_z=keep_z)
        real = protocol.real_view_recorded(inst, ver, aux, keep_z=keep_z)
        distance = sim_view.trace_distance(real)
        sampled = simulator.sample_round(circ, aux, np.random.default_rng(sample_seed))
        records.append(
            residual_record(
                f"view-equality[trial={t}]",
                "view-equality",
                distance,
                verifier=verifier_kind,
                transcript={
                    "guess": sampled.guess,
                    "challenge": sampled.challenge,
                    "relabeling": list(sampled.permutation.mapping),
                    "sent": format_graph_literal(sampled.sent),
                    "accepted": sampled.accepted,
                },
            )
        )
    return records


def run_watrous(cfg: RunConfig) -> list[dict]:
    inst = build_instance(cfg)
    records = []
    for t in range(cfg.trials):
        ver_seed, aux_seed, branch_seed = trial_seeds(cfg.seed, t)
        circ = simulator.build_circuit(
            inst, protocol.adversarial_verifier(cfg.dims, inst.n, ver_seed), cfg.completion
        )
        aux = protocol.random_aux(cfg.dims[0], aux_seed)
        prob = simulator.success_probability(circ, aux)
        records.append(
            record(
                f"first-measurement-probability[trial={t}]",
                "first-measurement-probability",
                prob,
                OP_TOL,
                abs(prob - 0.5) <= OP_TOL,
                target=0.5,
            )
        )
        # Fidelity of the reflected failure branch with the success state.
        layout = circ.layout
        s1 = simulator.attempt_output(circ, aux)
        succ = circ.success_proj.apply_to(layout, s1)
        succ = succ / np.linalg.norm(succ)
        fail = s1 - circ.success_proj.apply_to(layout, s1)
        fail = fail / np.linalg.norm(fail)
        reflect = OpChain(
            (circ.attempt.adjoint(), simulator.phase_on_start(layout, -1.0), circ.attempt)
        )
        reflected = reflect.apply_to(layout, fail)
        overlap = complex(np.vdot(succ, reflected))
        fidelity = abs(overlap) ** 2
        succeeded, _ = simulator.watrous_round(circ, aux, np.random.default_rng(branch_seed))
        records.append(
            record(
                f"reflected-state-fidelity[trial={t}]",
                "reflected-state-fidelity",
                fidelity,
                OP_TOL,
                1.0 - fidelity <= OP_TOL,
                target=1.0,
                relative_phase=overlap,
                sampled_first_measurement_succeeded=succeeded,
            )
        )
    return records


def _blocks_circuits(cfg: RunConfig):
    if cfg.m is not None:
        expected = 1.0 / cfg.m
        if cfg.m < 2:
            raise ConfigError(f"--m must be >= 2, got {cfg.m}")
        for t in range(cfg.trials):
            seed = trial_seeds(cfg.seed, t)[0]
            yield f"toy[m={cfg.m},trial={t}]", amplify.toy_circuit(cfg.m, cfg.dims, seed), expected
        return
    inst = build_instance(cfg)
    if inst.n > 3:
        raise ConfigError("dense block decomposition is guarded at n <= 3")
    for t in range(cfg.trials):
        seed = trial_seeds(cfg.seed, t)[0]
        ver = protocol.adversarial_verifier(cfg.dims, inst.n, seed)
        yield f"gmw[trial={t}]", simulator.build_circuit(inst, ver, cfg.completion), 0.5


def run_blocks(cfg: RunConfig) -> list[dict]:
    records = []
    for label, circ, expected in _blocks_circuits(cfg):
        decomp = amplify.block_decompose(circ.attempt, circ.success_proj, circ.layout)
        records.append(
            record(
                f"scalar-top-block[{label}]",
                "scalar-top-block",
                decomp.success_prob,
                OP_TOL,
                abs(decomp.success_prob - expected) <= OP_TOL,
                expected=expected,
            )
        )
        r1, r2, r3 = amplify.verify_block_identities(decomp)
        for i, value in enumerate((r1, r2, r3), start=1):
            records.append(
                residual_record(
                    f"idempotence-identity-{i}[{label}]",
                    f"idempotence-identity-{i}",
                    value,
                )
            )
        aux = protocol.random_aux(cfg.dims[0], cfg.seed + 1)
        for phases, tag in ((PhasePair(1j, 1j), "i,i"), (PhasePair(-1.0, -1.0), "-1,-1")):
            records.append(
                residual_record(
                    f"subspace-closure[{label},phases={tag}]",
                    "subspace-closure",
                    amplify.verify_subspace_closure(circ, aux, phases),
                )
            )
        lam = decomp.success_prob
        theta = np.arcsin(np.sqrt(lam))
        rotation = np.array(
            [
                [np.cos(2 * theta), np.sin(2 * theta)],
                [-np.sin(2 * theta), np.cos(2 * theta)],
            ]
        )
        deviation = float(
            np.max(np.abs(-amplify.subspace_matrix(lam, PhasePair(-1.0, -1.0)) - rotation))
        )
        records.append(
            residual_record(
                f"grover-rotation-form[{label}]",
                "grover-rotation-form",
                deviation,
                ROTATION_TOL,
            )
        )
    return records


def run_phases(cfg: RunConfig) -> list[dict]:
    lambdas = cfg.extras["lambdas"]
    k_max = cfg.extras["k_max"]
    records = []
    single_step_ok: list[float] = []
    for lam in lambdas:
        if not 0 < lam < 1:
            raise ConfigError(f"lambda values must be in (0, 1), got {lam}")
        single = amplify.solve_phases(lam, 1) is not None
        if single:
            single_step_ok.append(lam)
        found = amplify.smallest_feasible_k(lam, k_max)
        if found is None:
            records.append(
                record(
                    f"exact-amplification-phases[lambda={lam:g}]",
                    "exact-amplification-phases",
                    None,
                    OP_TOL,
                    False,
                    k=None,
                    single_step_feasible=single,
                    note=f"no certified solution up to k={k_max}",
                )
            )
            continue
        k, pair = found
        residual = amplify.final_fail_amplitude(lam, k, pair)
        records.append(
            record(
                f"exact-amplification-phases[lambda={lam:g}]",
                "exact-amplification-phases",
                residual,
                OP_TOL,
                residual <= OP_TOL,
                k=k,
                phi=complex(pair.phi),
                varphi=complex(pair.varphi),
                single_step_feasible=single,
            )
        )
    records.append(
        record(
            "single-step-feasibility-boundary",
            "single-step-feasibility-boundary",
            min(single_step_ok) if single_step_ok else None,
            None,
            True,
            note="smallest grid value where one step already amplifies exactly",
        )
    )
    return records


def run_schedule(cfg: RunConfig) -> list[dict]:
    if cfg.m is None:
        raise ConfigError("schedule needs --m")
    if cfg.m < 2:
        raise ConfigError(f"--m must be >= 2, got {cfg.m}")
    steps = cfg.extras["steps"]
    lam = 1.0 / cfg.m
    two_dim = amplify.iterative_schedule(lam, steps)
    circ = amplify.toy_circuit(cfg.m, cfg.dims, trial_seeds(cfg.seed, 0)[0])
    aux = protocol.random_aux(cfg.dims[0], cfg.seed + 1)
    full = amplify.iterative_schedule_full(circ, aux, steps)

    records = [
        record(
            "first-measurement-probability",
            "first-measurement-probability",
            two_dim[0],
            OP_TOL,
            abs(two_dim[0] - lam) <= OP_TOL,
            target=lam,
        )
    ]
    computed = amplify.computed_second_probability(lam)
    stated = amplify.stated_second_probability(cfg.m)
    if len(two_dim) > 1:
        records.append(
            record(
                "second-measurement-probability",
                "second-measurement-probability",
                two_dim[1],
                OP_TOL,
                abs(two_dim[1] - computed) <= OP_TOL,
                computed_form=computed,
                stated_form=stated,
                discrepancy_flagged=abs(computed - stated) > 1e-12,
            )
        )
    agreement = max(
        (abs(a - b) for a, b in zip(full, two_dim)), default=0.0
    ) + abs(len(full) - len(two_dim))
    records.append(
        residual_record(
            "full-vs-two-dim-agreement", "full-vs-two-dim-agreement", agreement
        )
    )
    floor_gap = min(two_dim) - lam
    records.append(
        record(
            "every-entry-at-least-lambda",
            "every-entry-at-least-lambda",
            float(min(two_dim)),
            None,
            floor_gap >= -OP_TOL,
            floor=lam,
            schedule=list(map(float, two_dim)),
        )
    )
    return records


HANDLERS = {
    "verify-eq1": run_verify_eq1,
    "verify-eq2": run_verify_eq2,
    "zk-check": run_zk_check,
    "watrous": run_watrous,
    "blocks": run_blocks,
    "phases": run_phases,
    "schedule": run_schedule,
}


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=None, help="vertex count of the graph pair")
    parser.add_argument("--g0", type=str, default=None, help="first graph, e.g. 01,12")
    parser.add_argument("--g1", type=str, default=None, help="second graph, e.g. 01,02")
    parser.add_argument("--m", type=int, default=None, help="guess-space dimension of the abstract circuit")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0, help="base seed (env ZKAMP_SEED overrides)")
    parser.add_argument("--dim-w", type=int, default=2)
    parser.add_argument("--dim-v", type=int, default=2)
    parser.add_argument(
        "--completion",
        choices=("householder", "dft"),
        default="householder",
        help="which unitary completion fills the relabeling superposition",
    )
    parser.add_argument("--out", type=str, default=None, help="also write the report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zkamp",
        description="Numeric certification suite for the amplified round simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    helps = {
        "verify-eq1": "check the input-independent half-probability block identity",
        "verify-eq2": "check the single phase-i amplification step identity",
        "zk-check": "compare the simulated verifier view against the real one",
        "watrous": "check the measure-then-reflect variant",
        "blocks": "check the block decomposition identities and subspace closure",
        "phases": "solve for exact amplification phases over a success-probability grid",
        "schedule": "run the measure-then-reflect schedule and report its probabilities",
    }
    for name, help_text in helps.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "zk-check":
            p.add_argument("--verifier", choices=("honest", "adversarial"), default="adversarial")
            p.add_argument("--keep-z", action="store_true", help="also record the response permutation")
        if name == "phases":
            p.add_argument(
                "--lambdas",
                type=str,
                default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                help="comma-separated success probabilities",
            )
            p.add_argument("--k-max", type=int, default=64)
        if name == "schedule":
            p.add_argument("--steps", type=int, default=4)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    env_seed = os.environ.get("ZKAMP_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"ZKAMP_SEED must be an integer, got {env_seed!r}") from None
    extras = {}
    if args.command == "zk-check":
        extras = {"verifier": args.verifier, "keep_z": args.keep_z}
    elif args.command == "phases":
        try:
            lambdas = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"bad --lambdas value {args.lambdas!r}") from None
        extras = {"lambdas": lambdas, "k_max": args.k_max}
    elif args.command == "schedule":
        if args.steps < 1:
            raise ConfigError(f"--steps must be >= 1, got {args.steps}")
        extras = {"steps": args.steps}
    cfg = RunConfig(
        command=args.command,
        n=args.n,
        m=args.m,
        trials=args.trials,
        seed=seed,
        dims=(args.dim_w, args.dim_v),
        g0=args.g0,
        g1=args.g1,
        out=args.out,
        completion=args.completion,
        extras=extras,
    )
    cfg.validate()
    return cfg


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        cfg = config_from_args(args)
        records = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    overall = all(rec["pass"] for rec in records)
    report = {
        "command": cfg.command,
        "config": cfg.as_dict(),
        "records": records,
        "environment": {
            "seed": cfg.seed,
            "dims": list(cfg.dims),
            "package_version": _version,
            "timings": {"total_seconds": time.monotonic() - started},
        },
        "pass": overall,
    }
    text = dump_json(report)
    print(text)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0 if overall else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
