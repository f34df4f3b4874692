"""Command-line interface: ``orfh <subcommand> [options]``.

Every subcommand that writes to ``--out`` also writes ``<out>.manifest.json``
holding the argument vector, the resolved configuration and SHA-256 hashes of
inputs and outputs. ``orfh --replay manifest.json`` reruns the recorded argument
vector. Failures print a JSON object to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .operators import CapabilityError, jordan_wigner
from .models import HubbardParams, PRNG_ID, orfh_tensors
from . import io as fio

EXIT_ERROR, EXIT_CAPABILITY, EXIT_USAGE = 1, 3, 2
ED_WIDTH_LIMIT = 20


def _thread_limit():
    """``ORFH_NUM_THREADS`` caps BLAS/OpenMP pools; unset means all cores."""
    value = os.environ.get("ORFH_NUM_THREADS")
    if not value:
        return contextlib.nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ValueError(f"ORFH_NUM_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise ValueError("ORFH_NUM_THREADS must be positive")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def _descriptor(args, n_sites=None) -> dict:
    params = HubbardParams(n_sites or args.sites, args.t, args.u, args.mu)
    return {"n_sites": params.n_sites, "t": params.t, "u": params.u, "mu": params.mu,
            "seed": None if args.no_rotation else args.seed, "real_flag": bool(args.real),
            "prng_id": PRNG_ID}


def tensors_from_descriptor(desc: dict):
    if desc.get("prng_id", PRNG_ID) != PRNG_ID:
        raise ValueError(f"unsupported prng_id {desc['prng_id']!r}; expected {PRNG_ID!r}")
    params = HubbardParams(int(desc["n_sites"]), desc.get("t", 1.0), desc.get("u", 1.0),
                           desc.get("mu"))
    tensors, _ = orfh_tensors(params, desc.get("seed"), bool(desc.get("real_flag", False)))
    return tensors


def load_instance(args, n_sites=None):
    """Return ``(tensors, descriptor or None, source tag, input paths)``."""
    if getattr(args, "fcidump", None):
        return fio.read_fcidump_file(args.fcidump), None, "FCIDUMP", {"fcidump": args.fcidump}
    if getattr(args, "instance", None):
        data = json.loads(Path(args.instance).read_text())
        if "n_spin_orbitals" in data:
            return fio.tensors_from_dict(data), None, "FILE", {"instance": args.instance}
        source = "FH" if data.get("seed") is None else "ORFH"
        return tensors_from_descriptor(data), data, source, {"instance": args.instance}
    if args.sites is None and n_sites is None:
        raise ValueError("give --sites, --instance or --fcidump")
    desc = _descriptor(args, n_sites)
    source = "FH" if desc["seed"] is None else "ORFH"
    return tensors_from_descriptor(desc), desc, source, {}


def _n_electrons(args, tensors):
    return args.electrons if getattr(args, "electrons", None) else tensors.n_spin_orbitals // 2


def _exact_energy(psum, n_particles=None):
    from .exact import exact_ground_state
    if psum.width > ED_WIDTH_LIMIT:
        raise CapabilityError(f"exact diagonalization limited to {ED_WIDTH_LIMIT} qubits, "
                              f"instance has {psum.width}")
    return exact_ground_state(psum, n_particles=n_particles)[0]


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, columns or None)
# ---------------------------------------------------------------------------


def cmd_generate(args):
    if not args.out:
        raise ValueError("generate needs --out DIR")
    tensors, desc, source, _ = load_instance(args)
    out = Path(args.out)
    written = {}
    fio.write_tensors(out / "tensors.json", tensors)
    written["tensors"] = out / "tensors.json"
    fio.atomic_write(out / "descriptor.json", fio.json_text(desc, rounded=False))
    written["descriptor"] = out / "descriptor.json"
    if args.pauli:
        fio.write_pauli_sum(out / "hamiltonian.pauli", jordan_wigner(tensors))
        written["pauli"] = out / "hamiltonian.pauli"
    if args.fcidump_out:
        fio.atomic_write(out / "hamiltonian.fcidump", fio.write_fcidump(tensors))
        written["fcidump"] = out / "hamiltonian.fcidump"
    return {"written": {k: str(v) for k, v in written.items()}, "source": source}, None


def cmd_ingest(args):
    tensors = fio.read_fcidump_file(args.path)
    if args.out:
        fio.write_tensors(args.out, tensors)
        return None, None
    return fio.tensors_to_dict(tensors), None


def cmd_analyze(args):
    from .analysis import structure_report
    rows = []
    sizes = args.sizes or [None]
    for n in sizes:
        tensors, _, source, _ = load_instance(args, n)
        source = source if source in ("FH", "ORFH", "FCIDUMP") else "FCIDUMP"
        rows.append(structure_report(tensors, source).row())
    return rows, ["n_spin_orbitals", "source", "term_count", "one_norm", "two_norm"]


def cmd_hf(args):
    from .scf import run_ghf, correlation_ratio
    rows = []
    for u in (args.u_values or [args.u]):
        args.u = u
        tensors, desc, source, _ = load_instance(args)
        n_el = _n_electrons(args, tensors)
        res = run_ghf(tensors, n_el, attempts=args.attempts, seed=args.scf_seed)
        exact = _exact_energy(jordan_wigner(tensors), n_particles=n_el).energy
        rows.append({"n_sites": desc["n_sites"] if desc else tensors.n_spin_orbitals // 2,
                     "U": u if desc else "", "E_HF": res.hf_energy, "E_exact": exact,
                     "corr_ratio": correlation_ratio(exact, res.hf_energy),
                     "converged": res.converged, "method": "GHF"})
    return rows, ["n_sites", "U", "E_HF", "E_exact", "corr_ratio", "converged", "method"]


def cmd_exact(args):
    from .exact import exact_ground_state, DENSE_GUARD
    tensors, _, _, _ = load_instance(args)
    psum = jordan_wigner(tensors)
    if args.dense and psum.width > DENSE_GUARD:
        raise CapabilityError(f"dense diagonalization limited to {DENSE_GUARD} qubits, "
                              f"requested {psum.width}")
    results = exact_ground_state(psum, k=args.k, dense=True if args.dense else None,
                                 n_particles=args.electrons, with_states=False)
    rows = [{"index": i, "energy": r.energy, "residual": r.residual,
             "degenerate": r.degenerate} for i, r in enumerate(results)]
    return rows, ["index", "energy", "residual", "degenerate"]


def cmd_bethe(args):
    from .bethe import bethe_half_filled_energy, bethe_bulk_energy_density
    mu = args.u / 2 if args.mu is None else args.mu
    if args.bulk:
        e = bethe_bulk_energy_density(args.u, args.t)
        return {"energy_density": e, "energy_density_with_mu": e - mu,
                "reference": "bulk"}, None
    sol = bethe_half_filled_energy(args.sites, args.t, args.u)
    out = sol.to_dict()
    out.update({"n_sites": args.sites, "mu": mu, "total_energy": sol.energy - mu * args.sites,
                "reference": "finite-size"})
    return out, None


def _state_for(psum):
    from .exact import exact_ground_state
    return exact_ground_state(psum)[0].statevector


def cmd_group(args):
    from .measurement import group, estimate_shots
    tensors, _, _, _ = load_instance(args)
    psum = jordan_wigner(tensors)
    grouping = group(tensors if args.method.upper() in ("BR", "BASIS_ROTATION") else psum,
                     args.method)
    est = None
    if args.with_state:
        est = estimate_shots(grouping, psum, _state_for(psum), args.eps)
    return grouping.to_dict(est), None


def cmd_shots(args):
    from .measurement import group, estimate_shots
    tensors, _, _, _ = load_instance(args)
    psum = jordan_wigner(tensors)
    state = _state_for(psum)
    rows = []
    for method in args.method:
        grouping = group(tensors if method.upper() in ("BR", "BASIS_ROTATION") else psum,
                         method)
        est = estimate_shots(grouping, psum, state, args.eps)
        rows.append({"qubits": psum.width, "method": grouping.method,
                     "groups": len(grouping), "K": est.k_factor, "epsilon": args.eps,
                     "M": est.shots, "clamped": est.clamped})
    return rows, ["qubits", "method", "groups", "K", "epsilon", "M", "clamped"]


def cmd_vqe(args):
    from .vqe import AnsatzCircuit, run_vqe
    tensors, _, _, _ = load_instance(args)
    psum = jordan_wigner(tensors)
    circuit = AnsatzCircuit(psum.width, args.depth)
    rows = []
    for opt in args.optimizer:
        for trial in range(args.trials):
            traj = run_vqe(psum, circuit, opt, seed=args.trial_seed + trial,
                           max_iterations=args.max_iter)
            rows.extend(traj.rows(trial))
    return rows, ["optimizer", "trial", "iteration", "energy", "evaluations"]


def cmd_dmrg(args):
    from .dmrg import error_scan
    from .bethe import bethe_half_filled_energy
    tensors, desc, source, _ = load_instance(args)
    psum = jordan_wigner(tensors)
    instances = {source: psum}
    if args.pair and desc is not None and desc["seed"] is not None:
        fh = tensors_from_descriptor({**desc, "seed": None})
        instances = {"FH": jordan_wigner(fh), "ORFH": psum}
    if args.reference == "ed":
        reference = _exact_energy(psum).energy
        label = "ED"
    else:
        if desc is None:
            raise ValueError("a Bethe reference needs a Hubbard instance descriptor")
        sol = bethe_half_filled_energy(desc["n_sites"], desc["t"], desc["u"])
        reference = sol.energy - desc["mu"] * desc["n_sites"]
        label = "Bethe finite-size"
    rows = error_scan(instances, args.bonds, reference,
                      n_sites=desc["n_sites"] if desc else None,
                      max_sweeps=args.max_sweeps, energy_tol=args.energy_tol,
                      seed=args.dmrg_seed, reference_label=label)
    return rows, ["model", "n_sites", "D", "sweeps", "E_DMRG", "E_reference", "reference",
                  "error"]


COMMANDS = {"generate": cmd_generate, "ingest": cmd_ingest, "analyze": cmd_analyze,
            "hf": cmd_hf, "exact": cmd_exact, "bethe": cmd_bethe, "group": cmd_group,
            "shots": cmd_shots, "vqe": cmd_vqe, "dmrg": cmd_dmrg}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="rotation seed (default 0)")
    common.add_argument("--out", help="output file (directory for generate)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="report format (csv for tables, json otherwise)")
    inst = argparse.ArgumentParser(add_help=False)
    inst.add_argument("--sites", type=int, help="number of lattice sites N")
    inst.add_argument("--t", type=float, default=1.0)
    inst.add_argument("--u", type=float, default=1.0)
    inst.add_argument("--mu", type=float, default=None, help="default u/2")
    inst.add_argument("--real", action="store_true", help="real orthogonal rotation")
    inst.add_argument("--no-rotation", action="store_true", help="plain Hubbard model")
    inst.add_argument("--instance", help="tensors JSON or instance descriptor JSON")
    inst.add_argument("--fcidump", help="FCIDUMP file")

    parser = argparse.ArgumentParser(prog="orfh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"orfh {__version__}")
    parser.add_argument("--replay", metavar="MANIFEST", help="rerun a recorded manifest")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", parents=[common, inst], help="write instance files")
    p.add_argument("--pauli", action="store_true", help="also write the Pauli sum")
    p.add_argument("--fcidump-out", action="store_true",
                   help="also write a spin-orbital FCIDUMP (real instances only)")

    p = sub.add_parser("ingest", parents=[common], help="FCIDUMP to tensors JSON")
    p.add_argument("path")

    p = sub.add_parser("analyze", parents=[common, inst], help="term counts and norms")
    p.add_argument("--sizes", type=int, nargs="+", help="sweep over these N")

    p = sub.add_parser("hf", parents=[common, inst], help="GHF and correlation ratio")
    p.add_argument("--u-values", type=float, nargs="+")
    p.add_argument("--attempts", type=int, default=8)
    p.add_argument("--scf-seed", type=int, default=0)
    p.add_argument("--electrons", type=int)

    p = sub.add_parser("exact", parents=[common, inst], help="exact diagonalization")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--dense", action="store_true")
    p.add_argument("--electrons", type=int)

    p = sub.add_parser("bethe", parents=[common, inst], help="Bethe-ansatz energies")
    p.add_argument("--bulk", action="store_true", help="thermodynamic-limit density")

    p = sub.add_parser("group", parents=[common, inst], help="measurement grouping")
    p.add_argument("--method", default="gc", choices=("qwc", "gc", "br"))
    p.add_argument("--with-state", action="store_true",
                   help="add per-group deviations on the exact ground state")
    p.add_argument("--eps", type=float, default=1e-3)

    p = sub.add_parser("shots", parents=[common, inst], help="shot estimates")
    p.add_argument("--method", nargs="+", default=["qwc", "gc", "br"],
                   choices=("qwc", "gc", "br"))
    p.add_argument("--eps", type=float, default=1e-3)

    p = sub.add_parser("vqe", parents=[common, inst], help="VQE trajectories")
    p.add_argument("--optimizer", nargs="+", default=["ADAM", "LBFGS", "NFT", "SPSA"],
                   type=str.upper, choices=("ADAM", "LBFGS", "NFT", "SPSA"))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--trial-seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--max-iter", type=int, default=100)

    p = sub.add_parser("dmrg", parents=[common, inst], help="DMRG error scan")
    p.add_argument("--bonds", type=int, nargs="+", default=[8, 16, 32])
    p.add_argument("--max-sweeps", type=int, default=20)
    p.add_argument("--energy-tol", type=float, default=1e-10)
    p.add_argument("--dmrg-seed", type=int, default=0)
    p.add_argument("--reference", choices=("ed", "bethe"), default="ed")
    p.add_argument("--pair", action="store_true", help="also run the unrotated model")
    return parser


def _render(payload, columns, fmt_name):
    if isinstance(payload, list) and fmt_name != "json":
        return fio.csv_text(payload, columns)
    return fio.json_text(payload)


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.replay:
        manifest = json.loads(Path(args.replay).read_text())
        if manifest.get("tool") != "orfh":
            raise ValueError(f"{args.replay} is not an orfh manifest")
        return run(manifest["argv"])
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    with _thread_limit():
        payload, columns = COMMANDS[args.command](args)
    inputs = {}
    for key in ("instance", "fcidump", "path"):
        if getattr(args, key, None):
            inputs[key] = getattr(args, key)
    outputs = {}
    if args.command == "generate":
        outputs = payload["written"]
        text = fio.json_text(payload)
        sys.stdout.write(text)
        manifest_path = Path(args.out) / "manifest.json"
    else:
        text = _render(payload, columns, args.format) if payload is not None else None
        if args.out:
            if text is not None:
                fio.atomic_write(args.out, text)
            outputs = {"report": args.out}
            manifest_path = Path(str(args.out) + ".manifest.json")
        else:
            sys.stdout.write(text)
            return 0
    config = {k: v for k, v in sorted(vars(args).items()) if k != "replay"}
    manifest = fio.build_manifest(__version__, args.command, argv, config, inputs, outputs)
    fio.atomic_write(manifest_path, fio.json_text(manifest, rounded=False))
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except CapabilityError as exc:
        sys.stderr.write(json.dumps({"error": "capability", "message": str(exc)}) + "\n")
        return EXIT_CAPABILITY
    except Exception as exc:  # noqa: BLE001 - reported as machine-readable JSON
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
