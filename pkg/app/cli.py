"""
qsc: command-line front end over the services.

Exit codes: 0 success / feasible / property holds, 2 malformed input,
3 infeasible / property fails, 4 boundary verdict, 1 solver failure.
"""
import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.core.config import RunConfig, settings
from app.core.exceptions import InvalidInputError, QSCError, SolverError
from app.core.logger import configure_logging, get_logger
from app.services import divergences, entropies, serialization, supermaps
from app.services.channels import is_channel
from app.services.generator import KINDS, InstanceGenerator
from app.services.majorization import MajorizationCertificate, Verdict, gibbs_majorize, majorize_direct

logger = get_logger(__name__)

EXIT_OK, EXIT_SOLVER, EXIT_INPUT, EXIT_NO, EXIT_BOUNDARY = 0, 1, 2, 3, 4


def _yes(ok) -> str:
    return "yes" if ok else "no"


def _fmt(value: float) -> str:
    return f"{value:.9f}"


def _read(path: str, parse: Callable[[str], Any]):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInputError(e.strerror or str(e), field=path)
    try:
        return parse(text)
    except InvalidInputError as e:
        raise InvalidInputError(str(e), field=path) from e


def _fan_out(fn: Callable[[str], Any], paths: Sequence[str]) -> List[Any]:
    """Independent solves over the given files; results come back in input order."""
    if settings.WORKERS == 1 or len(paths) == 1:
        return [fn(p) for p in paths]
    with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
        return list(pool.map(fn, paths))


def _report(config: RunConfig, human: str, payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2) if config.json_output else human)


def _write_certificate(config: RunConfig, payload: Dict[str, Any]) -> None:
    if config.certificate is None:
        return
    config.certificate.write_text(json.dumps(payload), encoding="utf-8")
    logger.info(f"CLI: certificate written to {config.certificate}")


def _labelled(paths: Sequence[str], lines: Sequence[str]) -> str:
    if len(paths) == 1:
        return lines[0]
    return "\n".join(f"{p}: {line}" for p, line in zip(paths, lines))


# ---- subcommands ----

def cmd_check_channel(args, config: RunConfig) -> int:
    channel = _read(args.file, serialization.parse_channel_json)
    verdict = is_channel(channel, config.tol)
    human = (f"channel: {_yes(verdict.is_cptp)}; "
             f"cp: {_yes(verdict.cp)} (min eigenvalue {verdict.min_eigenvalue:.3e}); "
             f"tp: {_yes(verdict.tp)} (residual {verdict.tp_residual:.3e})")
    _report(config, human, {"channel": verdict.is_cptp, **verdict.__dict__})
    return EXIT_OK if verdict.is_cptp else EXIT_NO


def cmd_check_superchannel(args, config: RunConfig) -> int:
    theta = _read(args.file, serialization.parse_superchannel_json)
    keys = [args.property] if args.property else ["sc", "ds", "cup"]
    checks = [supermaps.PROPERTY_CHECKS[k] for k in keys]
    reports = {name: check(theta, config.tol) for name, check in checks}

    lines = ["; ".join(f"{name}: {_yes(report)}" for name, report in reports.items())]
    lines += [f"  {name}: {report.describe()}" for name, report in reports.items() if not report]
    payload = {name: {"ok": report.ok, "violations": [v.__dict__ for v in report.violations]}
               for name, report in reports.items()}
    _report(config, "\n".join(lines), payload)
    return EXIT_OK if all(reports.values()) else EXIT_NO


def cmd_hmin_ext(args, config: RunConfig) -> int:
    def run(path):
        channel = _read(path, serialization.parse_channel_json)
        return entropies.h_min_cond(channel.choi / channel.d_in, channel.dims, config.tol)

    results = _fan_out(run, args.files)
    _report(config, _labelled(args.files, [_fmt(r.value) for r in results]),
            {p: {"value": r.value, "dual_value": r.dual_value} for p, r in zip(args.files, results)})
    _write_certificate(config, {p: serialization.matrix_to_pairs(r.sigma) for p, r in zip(args.files, results)})
    return EXIT_OK


def cmd_hmin_cond(args, config: RunConfig) -> int:
    def run(path):
        rho, dims = _read(path, serialization.parse_state_json)
        if len(dims) != 2:
            raise InvalidInputError(f"need dims [d_cond, d_rest], got {list(dims)}", field=f"{path}: dims")
        return entropies.h_min_cond(rho, dims, config.tol)

    results = _fan_out(run, args.files)
    _report(config, _labelled(args.files, [_fmt(r.value) for r in results]),
            {p: {"value": r.value, "dual_value": r.dual_value} for p, r in zip(args.files, results)})
    _write_certificate(config, {p: serialization.matrix_to_pairs(r.sigma) for p, r in zip(args.files, results)})
    return EXIT_OK


def cmd_ecme(args, config: RunConfig) -> int:
    def run(path):
        omega = _read(path, serialization.parse_bipartite_json)
        result = entropies.ecme(omega, gap_tol=config.tol)
        bounds = (entropies.ecme_lower_bound(omega), entropies.ecme_upper_bound(omega)) if args.bounds else None
        return result, bounds

    results = _fan_out(run, args.files)
    lines, payload = [], {}
    for path, (result, bounds) in zip(args.files, results):
        line = _fmt(result.value)
        entry = {"value": result.value, "dual_value": result.dual_value, "gap": result.gap,
                 "status": result.status.value}
        if bounds is not None:
            line += f" (bounds [{_fmt(bounds[0])}, {_fmt(bounds[1])}])"
            entry.update(lower_bound=bounds[0], upper_bound=bounds[1])
        lines.append(line)
        payload[path] = entry
    _report(config, _labelled(args.files, lines), payload)
    _write_certificate(config, {p: {"gamma": serialization.matrix_to_pairs(r.gamma),
                                    "superchannel": serialization.matrix_to_pairs(r.superchannel.choi)}
                                for p, (r, _) in zip(args.files, results)})
    return EXIT_OK


def cmd_guess(args, config: RunConfig) -> int:
    fam = _read(args.file, serialization.parse_instrument_json)
    sdp_value = entropies.guess_probability_sdp(entropies.instrument_to_bipartite(fam))
    oracle = entropies.guess_probability_oracle(fam, restarts=args.restarts, seed=config.seed)
    method = "exact" if oracle.exact else ("seesaw, stalled" if oracle.stalled else "seesaw")
    human = f"guess: sdp {_fmt(sdp_value)}; oracle {_fmt(oracle.value)} ({method})"
    _report(config, human, {"sdp": sdp_value, "oracle": oracle.value, "exact": oracle.exact,
                            "stalled": oracle.stalled, "per_input": oracle.per_input})
    return EXIT_OK


def cmd_diamond(args, config: RunConfig) -> int:
    f = _read(args.first, serialization.parse_channel_json)
    g = _read(args.second, serialization.parse_channel_json)
    report = divergences.diamond_distance(f, g)
    state = np.array2string(report.input_state, precision=6, suppress_small=True)
    _report(config, f"diamond: {_fmt(report.value)}\ninput state:\n{state}",
            {"value": report.value, "input_state": serialization.matrix_to_pairs(report.input_state)})
    _write_certificate(config, {"input_state": serialization.matrix_to_pairs(report.input_state),
                                "dual": serialization.matrix_to_pairs(report.certificate)})
    return EXIT_OK


def _certificate_payload(cert: MajorizationCertificate) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"verdict": cert.verdict.value, "residual": cert.residual, "slack": cert.slack,
                               "minimax_value": cert.minimax_value, "superchannel": None, "witness": None}
    if cert.superchannel is not None:
        payload["superchannel"] = serialization.superchannel_to_payload(cert.superchannel).model_dump(by_alias=True)
    if cert.witness is not None:
        w = cert.witness
        payload["witness"] = {"h_src": w.h_src, "h_dst": w.h_dst, "separation": w.separation, "repair": w.repair,
                              "blocks": [[serialization.matrix_to_pairs(l) for l in row] for row in w.blocks]}
    return payload


def cmd_majorize(args, config: RunConfig) -> int:
    src = _read(args.source, serialization.parse_family_json)
    dst = _read(args.target, serialization.parse_family_json)
    if (args.gibbs_in is None) != (args.gibbs_out is None):
        raise InvalidInputError("give both --gibbs-in and --gibbs-out, or neither", field="--gibbs-in")

    tol = config.tolerance(settings.MAJORIZATION_TOL)
    if args.gibbs_in is not None:
        gamma_in, _ = _read(args.gibbs_in, serialization.parse_state_json)
        gamma_out, _ = _read(args.gibbs_out, serialization.parse_state_json)
        cert = gibbs_majorize(src, dst, gamma_in, gamma_out, tol)
    else:
        cert = majorize_direct(src, dst, tol)

    human = f"majorize: {cert.verdict.value}"
    if cert.superchannel is not None:
        human += f" (residual {cert.residual:.3e})"
    if cert.witness is not None:
        human += (f"; witness separation {cert.witness.separation:.6f} "
                  f"(h_src {_fmt(cert.witness.h_src)}, h_dst {_fmt(cert.witness.h_dst)})")
    summary = {k: v for k, v in _certificate_payload(cert).items() if k not in ("superchannel", "witness")}
    if cert.witness is not None:
        summary["separation"] = cert.witness.separation
    _report(config, human, summary)
    _write_certificate(config, _certificate_payload(cert))
    return {Verdict.FEASIBLE: EXIT_OK, Verdict.INFEASIBLE: EXIT_NO, Verdict.BOUNDARY: EXIT_BOUNDARY}[cert.verdict]


def cmd_realize(args, config: RunConfig) -> int:
    theta = _read(args.file, serialization.parse_superchannel_json)
    realization = supermaps.realize(theta, config.tol)
    document = serialization.emit_superchannel_json(realization)
    if config.output is not None:
        config.output.write_text(document + "\n", encoding="utf-8")
        _report(config, f"realization: d_E = {realization.d_e}, written to {config.output}",
                {"d_E": realization.d_e, "output": str(config.output)})
    elif config.json_output:
        print(document)
    else:
        print(f"realization: d_E = {realization.d_e}")
        print(document)
    return EXIT_OK


def _parse_params(pairs: Sequence[str]) -> Dict[str, Any]:
    params = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise InvalidInputError(f"expected key=value, got '{pair}'", field="--param")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def cmd_gen(args, config: RunConfig) -> int:
    if config.seed is None:
        logger.warning("CLI: gen without --seed is not reproducible")
    generator = InstanceGenerator(config.seed)
    params = _parse_params(args.param)
    documents = [generator.generate_json(args.kind, params) for _ in range(args.count)]
    text = "\n".join(documents) + "\n"
    if config.output is not None:
        config.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---- parser ----

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", dest="json_output", help="machine-readable output")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed for every random choice")
    common.add_argument("--tol", type=float, default=None, help="verdict and duality-gap tolerance in (0, 1e-2]")
    common.add_argument("--certificate", type=Path, default=None, help="dump the optimizer's certificate as JSON")
    common.add_argument("--log-level", default=None, help="override LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="qsc", description="Superchannels, min-entropies and channel majorization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-channel", parents=[common], help="CPTP check of a channel")
    p.add_argument("file")
    p.set_defaults(handler=cmd_check_channel)

    p = sub.add_parser("check-superchannel", parents=[common], help="superchannel and noise-model checks")
    p.add_argument("file")
    p.add_argument("--property", choices=sorted(supermaps.PROPERTY_CHECKS), default=None)
    p.set_defaults(handler=cmd_check_superchannel)

    p = sub.add_parser("hmin-ext", parents=[common], help="extended min-entropy of channels")
    p.add_argument("files", nargs="+")
    p.set_defaults(handler=cmd_hmin_ext)

    p = sub.add_parser("hmin-cond", parents=[common], help="conditional min-entropy of bipartite states")
    p.add_argument("files", nargs="+")
    p.set_defaults(handler=cmd_hmin_cond)

    p = sub.add_parser("ecme", parents=[common], help="extended conditional min-entropy of bipartite channels")
    p.add_argument("files", nargs="+")
    p.add_argument("--bounds", action="store_true", help="also print the marginal bounds")
    p.set_defaults(handler=cmd_ecme)

    p = sub.add_parser("guess", parents=[common], help="guessing probability of an instrument family")
    p.add_argument("file")
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(handler=cmd_guess)

    p = sub.add_parser("diamond", parents=[common], help="diamond distance between two channels")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(handler=cmd_diamond)

    p = sub.add_parser("majorize", parents=[common], help="decide whether one family majorizes another")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--gibbs-in", default=None)
    p.add_argument("--gibbs-out", default=None)
    p.set_defaults(handler=cmd_majorize)

    p = sub.add_parser("realize", parents=[common], help="pre/post-processing realization of a superchannel")
    p.add_argument("file")
    p.add_argument("--output", type=Path, default=None)
    p.set_defaults(handler=cmd_realize)

    p = sub.add_parser("gen", parents=[common], help="seeded random instances")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--param", action="append", default=[], help="builder argument as key=value (JSON value)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--output", type=Path, default=None)
    p.set_defaults(handler=cmd_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        configure_logging(args.log_level)
    try:
        config = RunConfig(tol=args.tol, seed=args.seed, json_output=args.json_output,
                           certificate=args.certificate, output=getattr(args, "output", None))
        return args.handler(args, config)
    except ValidationError as e:
        first = e.errors()[0]
        print(f"input error: --{first['loc'][0]}: {first['msg']}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as e:
        logger.error(f"CLI: {e}")
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except QSCError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
