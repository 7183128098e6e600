"""Command-line entry point.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .circuit import CircuitError, builtin, parse, render, validate
from .experiment import (
    ConfigError,
    ExperimentConfig,
    NoCrossing,
    estimate_threshold,
    read_curves,
    run_experiment,
)
from .modelio import graph_export, save_model
from .montecarlo import NonAdjacentChain, PopulationCollapse
from .oracle import TooLarge, exact_ml_success
from .spacetime import gauge_basis, stabilizer_generators
from .spinmodel import DegenerateChannel, GeneralPauli, IndependentXZ, build_hamiltonian, simplify


class _Usage(Exception):
    pass


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if not _:
            raise _Usage(f"parameter {item!r} is not key=value")
        try:
            out[key] = int(val)
        except ValueError:
            out[key] = val
    return out


def _circuit(args):
    if args.circuit:
        with open(args.circuit) as fh:
            return parse(fh.read())
    if args.builtin:
        return builtin(args.builtin, **_params(args.param))
    raise _Usage("give --circuit FILE or --builtin NAME")


def _channel(args):
    if args.general:
        p_i, p_x, p_y, p_z = args.general
        return GeneralPauli(p_i, p_x, p_y, p_z)
    return IndependentXZ(args.px, args.pz)


def _add_circuit_args(p):
    p.add_argument("--circuit", help="circuit file in the text format")
    p.add_argument("--builtin", help="builtin family name")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="builtin parameter")
    p.add_argument("--gauge-fix", action="store_true",
                   help="use a fully reduced basis even for toric families")


def _add_channel_args(p):
    p.add_argument("--px", type=float, default=0.1)
    p.add_argument("--pz", type=float, default=0.0)
    p.add_argument("--general", type=float, nargs=4, metavar=("PI", "PX", "PY", "PZ"))


def cmd_build_model(args) -> int:
    circuit = _circuit(args)
    basis = gauge_basis(circuit, keep_redundant=False if args.gauge_fix else None)
    model = build_hamiltonian(basis, _channel(args))
    if args.half:
        split = model.css_split
        if split is None:
            raise _Usage("model is not CSS")
        model = model.restrict(split[0] if args.half == "x" else split[1])
    if not args.no_simplify:
        model = simplify(model)
    save_model(model, args.out)
    if args.graph:
        with open(args.graph, "w") as fh:
            json.dump(graph_export(model), fh, indent=1)
    print(json.dumps(model.summary(), sort_keys=True))
    return 0


def cmd_inspect(args) -> int:
    circuit = _circuit(args)
    problems = validate(circuit)
    basis = gauge_basis(circuit, keep_redundant=False if args.gauge_fix else None)
    print(f"qubits {circuit.num_qubits}  duration {circuit.duration}  "
          f"family {circuit.family or '-'}")
    print(f"generators {len(basis.generators)}  rank {basis.rank}  "
          f"redundancies {len(basis.redundancies)}  css {basis.is_css()}")
    if args.render:
        print(render(circuit), end="")
    if args.generators:
        labels = basis.generator_labels or [""] * len(basis.generators)
        for k, (g, lab) in enumerate(zip(basis.generators, labels)):
            print(f"g{k}  {g.render()}    # {lab}")
    if args.redundancies:
        for r in basis.redundancies:
            print("rel " + " ".join(f"g{k}" for k in r))
    if args.stabilizers:
        for s in stabilizer_generators(basis):
            print("stab " + s.render())
    if not args.render:
        for obs in circuit.observables:
            print(obs.text())
    for msg in problems:
        print("problem: " + msg)
    return 1 if problems else 0


def cmd_oracle(args) -> int:
    circuit = _circuit(args)
    channel = _channel(args)
    value = exact_ml_success(circuit, channel)
    print(json.dumps({"ml_success": value, "failure": 1.0 - value,
                      "channel": channel.probabilities()}, sort_keys=True))
    return 0


def cmd_run_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output:
        cfg.output = args.output
    log = None if args.quiet else (lambda s: print(s, file=sys.stderr))
    points = run_experiment(cfg, log=log)
    if not cfg.output:
        for pt in points:
            print(f"{pt.d},{pt.p!r},{pt.rate:.10g},{pt.ci:.10g},{pt.n},{pt.seed}")
    return 0


def cmd_estimate_threshold(args) -> int:
    points = read_curves(args.csv)
    window = tuple(args.window) if args.window else None
    est = estimate_threshold(points, window, n_boot=args.boot, seed=args.seed)
    print(json.dumps({"x_c": est.x_c, "y_c": est.y_c, "ci": list(est.ci), "window": list(est.window),
                      "sigma": est.sigma,
                      "fits": {str(d): {"slope": f[0], "intercept": f[1]} for d, f in est.fits.items()}},
                     sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spacetime-spins", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-model", help="compile a circuit into a spin-model file")
    _add_circuit_args(p)
    _add_channel_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--graph", help="also write a hypergraph export")
    p.add_argument("--half", choices=("x", "z"), help="keep only H_X or H_Z")
    p.add_argument("--no-simplify", action="store_true")
    p.set_defaults(func=cmd_build_model)

    p = sub.add_parser("inspect", help="summarize a circuit and its gauge basis")
    _add_circuit_args(p)
    p.add_argument("--render", action="store_true")
    p.add_argument("--generators", action="store_true")
    p.add_argument("--redundancies", action="store_true")
    p.add_argument("--stabilizers", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("oracle", help="exact ML success probability by enumeration")
    _add_circuit_args(p)
    _add_channel_args(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run-experiment", help="disorder-averaged ML failure curves")
    p.add_argument("config")
    p.add_argument("--output", help="output prefix (overrides the config)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("estimate-threshold", help="crossing of failure curves from a CSV")
    p.add_argument("csv")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--boot", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_estimate_threshold)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TooLarge, PopulationCollapse, NonAdjacentChain, NoCrossing, DegenerateChannel) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (_Usage, ConfigError, CircuitError, OSError, KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
