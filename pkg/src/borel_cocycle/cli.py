"""Command line interface.

    borel-cocycle eval CHAIN.json
    borel-cocycle oracle CHAIN.json [--grid N] [--compare]
    borel-cocycle testcase1 [--d 3 --u 1 --m 1 --n 1]
    borel-cocycle testcase2 [--n 3 --v 1]

Exit codes: 0 success, 1 convergence or budget failure (partial results are
still printed), 2 input error, 3 singular input matrix.
"""

import argparse
from dataclasses import asdict, dataclass
import json
import os
import sys

from . import chainfile, oracle, series, simplex
from .chains import GroupChain, PhiConfig, build_testcase1, build_testcase2, phi_chain
from .errors import ParseError, Singular

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_SINGULAR = 3
WORKERS_ENV = "BOREL_COCYCLE_WORKERS"


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class RunConfig:
    theta: float = simplex.DEFAULT_THETA
    tol: float = series.DEFAULT_TOL
    k_max: int = series.DEFAULT_KMAX
    max_depth: int = simplex.DEFAULT_MAX_DEPTH
    simplex_budget: int = simplex.DEFAULT_SIMPLEX_BUDGET
    skip_repeated: bool = True
    translate: bool = True
    output_format: str = "table"
    min_depth: int = 0
    force: bool = False
    coordinates: str = "gram"
    method: str = "blocked"
    workers: int = 1

    def __post_init__(self):
        if self.output_format not in ("table", "json"):
            raise ValueError("output_format must be 'table' or 'json'")
        self.phi_config()

    def phi_config(self):
        d = asdict(self)
        d.pop("output_format")
        return PhiConfig(**d)


def parse_complex(text):
    try:
        return complex(text.strip().replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _common_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--theta", type=float, default=simplex.DEFAULT_THETA,
                   help="acceptance threshold on max ||U_i|| (default 0.40)")
    p.add_argument("--tol", type=float, default=series.DEFAULT_TOL,
                   help="target certified truncation error per piece (default 1e-10)")
    p.add_argument("--kmax", type=int, default=series.DEFAULT_KMAX,
                   help="maximum series order (default 14)")
    p.add_argument("--max-depth", type=int, default=simplex.DEFAULT_MAX_DEPTH,
                   help="maximum subdivision depth (default 8)")
    p.add_argument("--min-depth", type=int, default=0,
                   help="always subdivide at least this deep (default 0)")
    p.add_argument("--force", action="store_true",
                   help="evaluate pieces that still fail theta at max depth, uncertified")
    p.add_argument("--budget", type=int, default=simplex.DEFAULT_SIMPLEX_BUDGET,
                   help="maximum number of simplices visited per term (default 1e6)")
    p.add_argument("--coordinates", choices=simplex.COORDINATES, default="gram",
                   help="average Gram matrices (exact) or the matrices themselves")
    p.add_argument("--method", choices=series.METHODS, default="blocked",
                   help="series evaluator")
    p.add_argument("--no-skip-repeated", dest="skip_repeated", action="store_false",
                   help="evaluate tuples with repeated entries instead of recording 0")
    p.add_argument("--no-translate", dest="translate", action="store_false",
                   help="do not move the last entry of each tuple to the identity")
    p.add_argument("--format", dest="output_format", choices=("table", "json"), default="table")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${WORKERS_ENV} or all processors)")
    return p


def build_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="borel-cocycle",
        description="Evaluate the Borel class cocycle on 3-simplices and chains of matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", parents=[common], help="evaluate a chain file")
    p.add_argument("chain", help="JSON chain file")
    p = sub.add_parser("oracle", parents=[common], help="direct quadrature of each term")
    p.add_argument("chain", help="JSON chain file")
    p.add_argument("--grid", type=int, default=oracle.DEFAULT_SUBDIVISIONS,
                   help="subdivisions per axis of the coarse grid (default 24)")
    p.add_argument("--compare", action="store_true",
                   help="also run the series pipeline and compare")
    p = sub.add_parser("testcase1", parents=[common], help="six-term cycle in GL_2")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--u", type=parse_complex, default=1 + 0j)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p = sub.add_parser("testcase2", parents=[common], help="chains z1, z2 in GL_3")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--v", type=parse_complex, default=1 + 0j)
    return parser


def config_from_args(args):
    workers = args.workers if args.workers is not None else default_workers()
    return RunConfig(
        theta=args.theta,
        tol=args.tol,
        k_max=args.kmax,
        max_depth=args.max_depth,
        simplex_budget=args.budget,
        skip_repeated=args.skip_repeated,
        translate=args.translate,
        output_format=args.output_format,
        min_depth=args.min_depth,
        force=args.force,
        coordinates=args.coordinates,
        method=args.method,
        workers=workers,
    )


def _fmt(x, width=22):
    return f"{x:>{width}.15g}"


def format_header(cfg, title):
    keys = ", ".join(f"{k}={v}" for k, v in asdict(cfg).items())
    return [f"# {title}", f"# config: {keys}"]


def format_report(report, title=None):
    """Table projection of a PhiReport, one row per term plus totals."""
    lines = []
    if title:
        lines.append(f"## {title}")
    lines.append(
        f"{'term':<6}{'coeff':>6}{'POS':>23}{'NEG':>23}{'POS+NEG':>23}"
        f"{'Im(phi)':>23}{'err bound':>11}{'pieces':>8}{'depth':>6}{'K':>4}  status"
    )
    for t in report.per_term:
        lines.append(
            f"{t.label:<6}{t.coefficient:>6d} {_fmt(t.pos_sum)} {_fmt(t.neg_sum)}"
            f" {_fmt(t.pos_sum + t.neg_sum)} {_fmt(t.value.imag)}"
            f"{t.error_bound:>11.3g}{t.simplex_count:>8d}{t.max_depth_used:>6d}{t.k_reached:>4d}"
            f"  {t.status}"
        )
    lines.append("-" * 138)
    lines.append(
        f"{'total':<12} {_fmt(report.total_pos)} {_fmt(report.total_neg)}"
        f" {_fmt(report.total_pos + report.total_neg)} {_fmt(report.total_value.imag)}"
        f"{report.total_error_bound:>11.3g}"
    )
    z = report.total_value
    b = report.borel_value
    lines.append(f"phi = {z.real:.15g} {z.imag:+.15g}i   (error bound {report.total_error_bound:.3g})")
    lines.append(f"normalized Borel value = {b.real:.15g} {b.imag:+.15g}i")
    for t in report.per_term:
        if t.message and t.status not in ("ok", "skipped"):
            lines.append(f"note {t.label}: {t.message}")
    return "\n".join(lines)


def _emit(out, cfg, title, payload, text):
    if cfg.output_format == "json":
        out.write(json.dumps({"title": title, "run_config": asdict(cfg), **payload}, indent=1))
        out.write("\n")
    else:
        out.write("\n".join(format_header(cfg, title)) + "\n")
        out.write(text + "\n")


def _status(reports):
    statuses = {t.status for r in reports for t in r.per_term}
    if "singular" in statuses:
        return EXIT_SINGULAR
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAILURE


def cmd_eval(path, cfg, out=sys.stdout):
    chain = chainfile.load_chain(path)
    report = phi_chain(chain, cfg.phi_config())
    _emit(out, cfg, f"eval {path}", {"report": report.to_dict()}, format_report(report))
    return _status([report])


def cmd_oracle(path, grid, cfg, compare=False, out=sys.stdout):
    chain = chainfile.load_chain(path)
    if chain.n != 3:
        raise ParseError("the oracle needs a degree-3 chain")
    rows = []
    ok = True
    for label, (coeff, tup) in zip(chain.labels, chain.terms):
        q = oracle.quadrature_phi3(tup, grid)
        row = {
            "label": label,
            "coeff": coeff,
            "value": [q.value.real, q.value.imag],
            "richardson": [q.richardson_estimate.real, q.richardson_estimate.imag],
            "discrepancy": q.discrepancy,
            "grid_points": q.grid_points,
        }
        if compare:
            rep = phi_chain(GroupChain(3, [(1, tup)], [label]), cfg.phi_config())
            t = rep.per_term[0]
            tol = 3.0 * (t.error_bound + q.discrepancy)
            diff = abs(t.value - q.richardson_estimate)
            agree = bool(t.ok and diff <= tol)
            ok &= agree
            row.update(
                series=[t.value.real, t.value.imag],
                series_error_bound=t.error_bound,
                difference=diff,
                tolerance=tol,
                agree=agree,
            )
        rows.append(row)
    lines = [f"{'term':<6}{'Re':>23}{'Im':>23}{'Richardson Im':>23}{'discrepancy':>13}{'points':>9}"]
    for r in rows:
        lines.append(
            f"{r['label']:<6} {_fmt(r['value'][0])} {_fmt(r['value'][1])} {_fmt(r['richardson'][1])}"
            f"{r['discrepancy']:>13.3g}{r['grid_points']:>9d}"
        )
        if compare:
            lines.append(
                f"{'':<6} series Im {r['series'][1]:.15g}  |diff| {r['difference']:.3g}"
                f"  tolerance {r['tolerance']:.3g}  {'AGREE' if r['agree'] else 'DISAGREE'}"
            )
    _emit(out, cfg, f"oracle {path} grid={grid}", {"terms": rows}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_testcase1(d, u, m, n, cfg, out=sys.stdout):
    chain = build_testcase1(d, u, m, n)
    report = phi_chain(chain, cfg.phi_config())
    title = f"testcase1 d={d} u={u} m={m} n={n}"
    _emit(out, cfg, title, {"report": report.to_dict()}, format_report(report, "z"))
    return _status([report])


def cmd_testcase2(n, v, cfg, out=sys.stdout):
    z1, z2 = build_testcase2(n, v)
    r1 = phi_chain(z1, cfg.phi_config())
    r2 = phi_chain(z2, cfg.phi_config())
    ratio = r2.total_value / r1.total_value if r1.total_value != 0 else None
    payload = {
        "z1": r1.to_dict(),
        "z2": r2.to_dict(),
        "ratio_z2_over_z1": None if ratio is None else [ratio.real, ratio.imag],
    }
    text = format_report(r1, "z1") + "\n\n" + format_report(r2, "z2")
    text += "\nphi(z2)/phi(z1) = " + ("n/a (phi(z1) = 0)" if ratio is None else f"{ratio:.6g}")
    _emit(out, cfg, f"testcase2 n={n} v={v}", payload, text)
    return _status([r1, r2])


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        if args.command == "eval":
            return cmd_eval(args.chain, cfg, out)
        if args.command == "oracle":
            return cmd_oracle(args.chain, args.grid, cfg, args.compare, out)
        if args.command == "testcase1":
            return cmd_testcase1(args.d, args.u, args.m, args.n, cfg, out)
        return cmd_testcase2(args.n, args.v, cfg, out)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Singular as exc:
        print(f"singular matrix: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
