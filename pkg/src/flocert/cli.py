"""Command-line front end.

Subcommands are thin shells over the library: identical inputs through the
CLI and the Python API produce identical numbers.  Exit codes: 0 success,
2 validation error, 3 numerical failure / unknown / no result.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import convex, extension, simulator
from .antisym import pfaffian
from .clifford import DensityOperator, check_modes, maximally_mixed

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _load_matrix(path):
    if str(path).endswith(".json"):
        with open(path) as fh:
            return np.asarray(json.load(fh), dtype=float)
    return np.atleast_2d(np.loadtxt(path))


def cmd_pfaffian(args):
    A = _load_matrix(args.file)
    value = pfaffian(A)
    det = np.linalg.det(A)
    residual = abs(value * value - det) / max(1.0, abs(det))
    print(f"pfaffian {value:.17g}")
    print(f"det_consistency_residual {residual:.3e}")
    return EXIT_OK


def _grid_from_spec(spec):
    try:
        a, b, step = (float(tok) for tok in spec.split(":"))
    except ValueError as exc:
        raise ValueError("grid must be start:stop:step") from exc
    if step <= 0 or b < a:
        raise ValueError("grid must satisfy start <= stop with positive step")
    if not (0.0 <= a and b <= 1.0):
        raise ValueError("grid must lie inside [0, 1]")
    count = int(np.floor((b - a) / step + 1e-12)) + 1
    return [a + i * step for i in range(count)]


def _witness_row(p):
    value = convex.witness_value(p)
    verdict = convex.witness_verdict(convex.depolarized_a8(p))
    feasible = convex.decompose_a8(p).feasible
    return p, value, verdict, feasible


def cmd_witness_scan(args):
    grid = _grid_from_spec(args.grid)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_witness_row, grid))
    else:
        rows = [_witness_row(p) for p in grid]
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("p,witness_value,verdict,decompose_feasible\n")
        for p, value, verdict, feasible in rows:
            out.write(f"{p!r},{value!r},{verdict},{str(feasible).lower()}\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_decompose(args):
    result = convex.decompose_a8(args.p)
    if not result.feasible:
        print(f"infeasible within the three-pairing family at p={args.p:.17g}",
              file=sys.stderr)
        print(f"nnls residual {result.residual:.3e}; negative least-squares "
              f"gammas: {sorted(result.certificate['negative_gammas'])}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    simulator.dump_ensemble(result.ensemble, args.out)
    print(f"wrote {len(result.ensemble.entries)} pure-Gaussian entries to {args.out}")
    return EXIT_OK


def cmd_simulate(args):
    circuit = simulator.load_circuit(args.circuit)
    histogram, _records = simulator.run(circuit, args.shots, args.seed)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        simulator.write_histogram_csv(out, histogram, shots=args.shots)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def _parse_state_spec(spec):
    if spec.startswith("a8:p="):
        return convex.depolarized_a8(float(spec[len("a8:p="):]))
    if spec.startswith("maximally-mixed:m="):
        return maximally_mixed(check_modes(int(spec[len("maximally-mixed:m="):])))
    with open(spec) as fh:
        return DensityOperator.from_json_dict(json.load(fh))


def cmd_sdp(args):
    rho = _parse_state_spec(args.state)
    inst = extension.build_extension_sdp(rho, ppt=args.ppt)
    if args.export:
        meta_path = extension.export_sdpa(inst, args.export)
        print(f"wrote {args.export} ({inst.variable_count} variables, "
              f"blocks {inst.meta['block_dims']}, "
              f"{inst.meta['equality_rows']} equality rows)")
        print(f"metadata sidecar: {meta_path}")
        return EXIT_OK
    if inst.m > extension.EMBEDDED_SOLVE_MODE_CAP and not args.long_run:
        print("embedded solving is capped at m <= 3; use --export to write an "
              "SDPA file for an external solver, or pass --long-run to attempt "
              "the day-scale embedded solve", file=sys.stderr)
        return EXIT_VALIDATION
    cert = extension.solve_feasibility(inst, tol=args.tol, long_run=args.long_run)
    print(f"status {cert.status}")
    for key, value in sorted(cert.residuals.items()):
        print(f"residual {key} {value}")
    for key, value in sorted(cert.certificate.items()):
        print(f"certificate {key} {value}")
    return EXIT_OK if cert.status in ("feasible", "infeasible") else EXIT_NUMERICAL


def cmd_selftest(args):
    del args
    failures = 0

    def check(name, fn):
        nonlocal failures
        try:
            fn()
            print(f"PASS {name}")
        except Exception as exc:  # noqa: BLE001 - report and count
            failures += 1
            print(f"FAIL {name}: {exc}")

    def pfaffian_det():
        rng = np.random.default_rng(7)
        for dim in (2, 4, 6, 8):
            A = rng.standard_normal((dim, dim))
            A = A - A.T
            assert abs(pfaffian(A) ** 2 - np.linalg.det(A)) < 1e-8 * abs(np.linalg.det(A))

    def witness_closed_form():
        assert abs(convex.witness_value(8.0 / 15.0) - 0.5) < 1e-15
        assert convex.witness_verdict(convex.depolarized_a8(0.5)) == convex.NOT_CONVEX_GAUSSIAN
        assert convex.witness_verdict(convex.depolarized_a8(0.54)) == convex.INCONCLUSIVE

    def decompose_endpoints():
        assert convex.decompose_a8(1.0).feasible
        assert convex.decompose_a8(8.0 / 9.0).feasible
        assert not convex.decompose_a8(0.85).feasible

    def wick_consistency():
        from .gaussian import correlation_matrix, random_mixed_gaussian, wick_expectation
        rho = random_mixed_gaussian(2, 11)
        M = correlation_matrix(rho)
        from .clifford import correlator_matrix
        dense = np.trace(correlator_matrix(0b1111, 2) @ rho.matrix).real
        assert abs(wick_expectation(M, (1, 2, 3, 4)) - dense) < 1e-9

    def sdp_m1():
        cert = extension.solve_feasibility(
            extension.build_extension_sdp(maximally_mixed(1)))
        assert cert.feasible, cert.status

    def simulator_roundtrip():
        circuit = simulator.FloCircuit(
            modes=2,
            steps=[simulator.Braid(i=1, j=3), simulator.MeasureMode(mode=1)])
        dist = simulator.exact_distribution(circuit)
        assert abs(sum(dist.values()) - 1.0) < 1e-12

    check("pfaffian-det-consistency", pfaffian_det)
    check("witness-closed-form", witness_closed_form)
    check("decompose-endpoints", decompose_endpoints)
    check("wick-consistency", wick_consistency)
    check("sdp-m1-feasible", sdp_m1)
    check("simulator-distribution", simulator_roundtrip)
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flocert",
        description="fermionic Gaussian-state toolkit: Pfaffians, FLO "
                    "simulation, convex-Gaussian certification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pfaffian", help="Pfaffian of an antisymmetric matrix file")
    p.add_argument("file")
    p.set_defaults(func=cmd_pfaffian)

    p = sub.add_parser("witness-scan",
                       help="scan the depolarized-ancilla family over a p grid")
    p.add_argument("--grid", required=True, help="start:stop:step inside [0,1]")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_witness_scan)

    p = sub.add_parser("decompose",
                       help="pure-Gaussian ensemble for the depolarized ancilla")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--out", required=True, help="ensemble JSON output path")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", help="run a circuit file and emit a histogram")
    p.add_argument("--circuit", required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sdp", help="build, solve or export an extension instance")
    p.add_argument("--state", required=True,
                   help='"a8:p=<x>", "maximally-mixed:m=<k>" or a '
                        "density-matrix JSON file")
    p.add_argument("--ppt", action="store_true")
    p.add_argument("--solve", action="store_true")
    p.add_argument("--export", default=None, metavar="PATH")
    p.add_argument("--long-run", action="store_true", dest="long_run")
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_sdp)

    p = sub.add_parser("selftest", help="run the fast verification tier")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sdp" and not (args.solve or args.export):
        parser.error("sdp requires --solve or --export")
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
