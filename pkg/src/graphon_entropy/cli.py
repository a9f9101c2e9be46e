"""Command-line entry point: ``graphon-entropy <subcommand> [flags]``.

Data goes to standard output (or ``--out``); diagnostics go to standard error.
Exit codes: 0 success, 1 usage error, 2 validation or domain error,
3 non-convergence, 4 verification failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io as gio
from . import named, scan, verify
from .core import DomainError, ValidationError, central_moment, density_report, h_derivative
from .optimizer import ConstraintProblem, InfeasibleTargetError, NonConvergenceError, maximize_entropy
from .spectral import spectrum

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3, 4
THREADS_ENV = "GRAPHON_ENTROPY_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
            if n >= 1:
                return n
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Defaults:
    seed: int = 42
    restarts: int = 32
    pods: int = 4
    tol: float = 1e-9
    scan_pods: int = 2
    scan_restarts: int = 8
    upper_bound_e: tuple = (0.48, 0.5, 0.52)
    samples: int = 1000
    tripodal_e: float = 0.15
    tripodal_sigmas: tuple = (0.02, 0.01, 0.005)
    a_min: float = 0.01
    a_max: float = 0.08
    a_steps: int = 20
    b11_e: float = 0.6
    b11_sigmas: tuple = (0.04, 0.02, 0.01)
    b11_restarts: int = 16
    vary_v_points: int = 100
    series_samples: int = 100
    series_k: int = 60


DEFAULTS = Defaults()


@dataclass
class CliConfig:
    command: str
    seed: int
    threads: int
    json: bool
    out: str | None
    params: dict = field(default_factory=dict)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _finite(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {s!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULTS.seed, help="random seed")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or CPU count)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", default=None, metavar="PATH", help="write the data output to PATH")

    p = _Parser(prog="graphon-entropy", formatter_class=fmt,
                description="Entropy maximization over multipodal graphons with fixed edge and triangle densities.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    mk = sub.add_parser("make", parents=[common], formatter_class=fmt, help="build a named graphon")
    mk.add_argument("kind", choices=["constant", "symbipodal", "bipodal", "bipodal-series", "tripodal"])
    mk.add_argument("--p", type=_finite, help="constant value")
    mk.add_argument("--e", type=_finite, help="edge density")
    mk.add_argument("--sigma", type=_finite, help="sigma with t = e^3 - sigma^3")
    for name in "abcd":
        mk.add_argument(f"--{name}", type=_finite, help=f"bipodal parameter {name}")
    mk.add_argument("--A", dest="A", type=_finite, help="tripodal A")
    mk.add_argument("--B", dest="B", type=_finite, help="tripodal B (default -H'''/(2H'') A^2)")
    mk.add_argument("--label", default=None, help="metadata label")

    ev = sub.add_parser("eval", parents=[common], formatter_class=fmt, help="evaluate a graphon document")
    ev.add_argument("--input", default="-", help="graphon JSON path, '-' for standard input")
    ev.add_argument("--spectral", action="store_true", help="include the spectrum about eps")
    ev.add_argument("--moments", type=_positive_int, default=None, metavar="K",
                    help="central moments of orders 1..K")
    ev.add_argument("--center", type=_finite, default=None, help="center for --moments (default eps)")
    ev.add_argument("--lenient", action="store_true", help="keep unknown document fields")

    op = sub.add_parser("optimize", parents=[common], formatter_class=fmt, help="maximize entropy at (e, t)")
    op.add_argument("--e", type=_finite, required=True)
    op.add_argument("--t", type=_finite, required=True)
    op.add_argument("--pods", type=_positive_int, default=DEFAULTS.pods)
    op.add_argument("--restarts", type=_positive_int, default=DEFAULTS.restarts)
    op.add_argument("--tol", type=_finite, default=DEFAULTS.tol, help="constraint tolerance")
    op.add_argument("--warm", default=None, metavar="PATH", help="graphon JSON used as the first start")

    sc = sub.add_parser("scan", parents=[common], formatter_class=fmt, help="sweep an (e, t) grid, CSV out")
    for ax in ("e", "t"):
        sc.add_argument(f"--{ax}-min", type=_finite, required=True)
        sc.add_argument(f"--{ax}-max", type=_finite, required=True)
        sc.add_argument(f"--{ax}-steps", type=_positive_int, required=True)
    sc.add_argument("--pods", type=_positive_int, default=DEFAULTS.scan_pods)
    sc.add_argument("--restarts", type=_positive_int, default=DEFAULTS.scan_restarts)
    sc.add_argument("--no-warm", action="store_true", help="disable warm starts along rows")

    vf = sub.add_parser("verify", parents=[common], formatter_class=fmt, help="run a verification suite")
    vf.add_argument("--suite", required=True,
                    choices=["upper-bound", "tripodal", "b11", "vary-v", "series", "e0", "all"])
    vf.add_argument("--e", type=_finite, nargs="+", default=None,
                    help="edge density (several allowed for upper-bound)")
    vf.add_argument("--sigma", type=_finite, nargs="+", default=None, help="sigma values")
    vf.add_argument("--samples", type=_positive_int, default=None,
                    help=f"samples (upper-bound {DEFAULTS.samples}, series {DEFAULTS.series_samples})")
    vf.add_argument("--a-min", type=_finite, default=DEFAULTS.a_min)
    vf.add_argument("--a-max", type=_finite, default=DEFAULTS.a_max)
    vf.add_argument("--a-steps", type=_positive_int, default=DEFAULTS.a_steps)
    vf.add_argument("--points", type=_positive_int, default=DEFAULTS.vary_v_points, help="vary-v grid size")
    vf.add_argument("--K", dest="K", type=_positive_int, default=DEFAULTS.series_k, help="series truncation")
    vf.add_argument("--restarts", type=_positive_int, default=DEFAULTS.b11_restarts, help="b11 restarts")

    fs = sub.add_parser("f-scan", parents=[common], formatter_class=fmt, help="tabulate F(A, B(A)), CSV out")
    fs.add_argument("--e", type=_finite, required=True)
    fs.add_argument("--a-min", type=_finite, required=True)
    fs.add_argument("--a-max", type=_finite, required=True)
    fs.add_argument("--steps", type=_positive_int, required=True)
    return p


def parse(argv) -> CliConfig:
    ns = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "seed", "threads", "json", "out")}
    cfg = CliConfig(ns.command, ns.seed, ns.threads or default_threads(), ns.json, ns.out, params)
    _validate(cfg)
    return cfg


def _need(cfg, *names):
    missing = [n for n in names if cfg.params.get(n) is None]
    if missing:
        raise UsageError(f"{cfg.command} {cfg.params.get('kind', '')}".strip()
                         + ": missing " + ", ".join("--" + n for n in missing))


def _forbid(cfg, *names):
    given = [n for n in names if cfg.params.get(n) is not None]
    if given:
        raise UsageError(f"{cfg.command} {cfg.params.get('kind', '')}".strip()
                         + ": unexpected " + ", ".join("--" + n for n in given))


def _validate(cfg: CliConfig) -> None:
    p = cfg.params
    if cfg.command == "make":
        req = {
            "constant": ("p",),
            "symbipodal": ("e", "sigma"),
            "bipodal": ("a", "b", "c", "d"),
            "bipodal-series": ("e", "sigma"),
            "tripodal": ("e", "sigma", "A"),
        }[p["kind"]]
        _need(cfg, *req)
        allowed = set(req) | ({"B"} if p["kind"] == "tripodal" else set())
        _forbid(cfg, *[n for n in ("p", "e", "sigma", "a", "b", "c", "d", "A", "B") if n not in allowed])
    elif cfg.command == "eval":
        if p["center"] is not None and p["moments"] is None:
            raise UsageError("eval: --center requires --moments")
    elif cfg.command == "optimize":
        if p["tol"] <= 0:
            raise UsageError("optimize: --tol must be positive")
    elif cfg.command == "scan":
        for ax in ("e", "t"):
            if p[f"{ax}_min"] > p[f"{ax}_max"]:
                raise UsageError(f"scan: --{ax}-min exceeds --{ax}-max")
    elif cfg.command == "verify":
        if p["suite"] not in ("upper-bound",) and p["e"] is not None and len(p["e"]) > 1:
            raise UsageError(f"verify: suite {p['suite']} takes a single --e")
        if p["suite"] in ("vary-v", "series", "e0", "all") and (p["e"] is not None or p["sigma"] is not None):
            raise UsageError(f"verify: suite {p['suite']} takes no --e or --sigma")
        if p["suite"] == "upper-bound" and p["sigma"] is not None and len(p["sigma"]) > 1:
            raise UsageError("verify: suite upper-bound takes a single --sigma")
        if p["a_min"] > p["a_max"]:
            raise UsageError("verify: --a-min exceeds --a-max")
    elif cfg.command == "f-scan":
        if p["a_min"] > p["a_max"]:
            raise UsageError("f-scan: --a-min exceeds --a-max")


# ---------------------------------------------------------------------------
# output helpers


class _Output:
    def __init__(self, cfg: CliConfig, stdout):
        self.cfg, self.stdout = cfg, stdout

    def data(self, text: str) -> None:
        if self.cfg.out:
            with open(self.cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            self.stdout.write(text)

    def document(self, payload: bytes, human: str | None) -> None:
        """Machine document to --out, or to stdout with --json; otherwise a human summary."""
        text = payload.decode("utf-8")
        if self.cfg.out:
            self.data(text)
            if human is not None and not self.cfg.json:
                self.stdout.write(human + "\n")
        elif self.cfg.json or human is None:
            self.stdout.write(text)
        else:
            self.stdout.write(human + "\n")


def _read_input(path: str, stdin) -> bytes:
    if path == "-":
        data = stdin.buffer.read() if hasattr(stdin, "buffer") else stdin.read()
        return data.encode("utf-8") if isinstance(data, str) else data
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_make(cfg, out, stdin):
    p = cfg.params
    kind = p["kind"]
    if kind == "constant":
        g = named.constant_graphon(p["p"])
    elif kind == "symbipodal":
        g = named.symmetric_bipodal(p["e"], p["sigma"])
    elif kind == "bipodal":
        g = named.bipodal(p["a"], p["b"], p["c"], p["d"])
    elif kind == "bipodal-series":
        g = named.bipodal_series(p["e"], p["sigma"])
    else:
        g, _ = named.tripodal_counterexample(p["e"], p["sigma"], p["A"], p["B"])
    meta = {"label": p["label"]} if p["label"] else None
    out.data(gio.write_graphon(g, meta).decode("utf-8"))
    return EXIT_OK


def _cmd_eval(cfg, out, stdin):
    p = cfg.params
    g = gio.read_graphon(_read_input(p["input"], stdin), strict=not p["lenient"])
    rep = density_report(g)
    spec = spectrum(g, rep.edge) if p["spectral"] else None
    moments = None
    if p["moments"]:
        center = rep.edge if p["center"] is None else p["center"]
        moments = {"center": center,
                   "values": [central_moment(g, k, center) for k in range(1, p["moments"] + 1)]}
    lines = [
        f"edge      {rep.edge:.17g}",
        f"triangle  {rep.triangle:.17g}",
        f"entropy   {rep.entropy:.17g}",
        f"two_star  {rep.two_star:.17g}",
        f"order_q   {rep.order_q:.17g}",
        "degrees   " + " ".join(f"{d:.17g}" for d in rep.degrees),
    ]
    if spec is not None:
        lines.append("eigenvalues about eps  " + " ".join(f"{x:.17g}" for x in spec.eigenvalues))
    if moments is not None:
        lines.append(f"moments about {moments['center']:.17g}  "
                     + " ".join(f"{x:.17g}" for x in moments["values"]))
    out.document(gio.write_evaluation(rep, spec, moments), "\n".join(lines))
    return EXIT_OK


def _cmd_optimize(cfg, out, stdin):
    p = cfg.params
    init = "random"
    if p["warm"]:
        with open(p["warm"], "rb") as fh:
            init = gio.read_graphon(fh.read())
    problem = ConstraintProblem(
        target_e=p["e"], target_t=p["t"], pods=p["pods"], restarts=p["restarts"], seed=cfg.seed,
        constraint_tol=p["tol"], init=init, threads=cfg.threads,
    )
    r = maximize_entropy(problem)
    g = r.graphon
    human = "\n".join([
        f"classification  {r.classification}",
        f"entropy         {r.entropy:.17g}",
        f"achieved e, t   {r.achieved_e:.17g} {r.achieved_t:.17g}",
        f"multipliers     {r.multipliers[0]:.17g} {r.multipliers[1]:.17g}",
        f"el_residual     {r.el_residual:.3e}",
        f"restarts        {r.restarts_agreeing} agreeing of {r.restarts_converged} converged / {len(r.restarts)}",
        f"c               {g.c.tolist()}",
        f"p               {g.p.tolist()}",
    ])
    out.document(gio.write_result(r), human)
    return EXIT_OK


def _cmd_scan(cfg, out, stdin):
    p = cfg.params
    template = ConstraintProblem(0.5, 0.117, pods=p["pods"], restarts=p["restarts"], seed=cfg.seed, threads=1)
    recs = scan.run_scan(scan.grid(p["e_min"], p["e_max"], p["e_steps"]),
                         scan.grid(p["t_min"], p["t_max"], p["t_steps"]),
                         template, warm_start=not p["no_warm"], threads=cfg.threads)
    out.data(scan.write_csv(recs))
    for r in recs:
        if r.classification == "failed":
            print(f"cell ({r.e:.6g}, {r.t:.6g}) failed: {r.message}", file=sys.stderr)
    return EXIT_OK


def _suite_params(cfg, name):
    p = cfg.params
    e, sig = p["e"], p["sigma"]
    if name == "upper-bound":
        return dict(e=list(e) if e else list(DEFAULTS.upper_bound_e),
                    sigma=sig[0] if sig else None,
                    n_samples=p["samples"] or DEFAULTS.samples, seed=cfg.seed)
    if name == "tripodal":
        return dict(e=e[0] if e else DEFAULTS.tripodal_e,
                    sigma_list=list(sig) if sig else list(DEFAULTS.tripodal_sigmas),
                    A_grid=verify.default_a_grid(p["a_min"], p["a_max"], p["a_steps"]))
    if name == "b11":
        return dict(e=e[0] if e else DEFAULTS.b11_e,
                    sigma_list=list(sig) if sig else list(DEFAULTS.b11_sigmas),
                    restarts=p["restarts"], seed=cfg.seed, threads=cfg.threads)
    if name == "vary-v":
        return dict(sigma_grid=verify.default_sigma_grid(p["points"]))
    if name == "series":
        return dict(graphon_samples=p["samples"] or DEFAULTS.series_samples, K=p["K"], seed=cfg.seed)
    return {}


def _cmd_verify(cfg, out, stdin):
    name = cfg.params["suite"]
    names = list(verify.SUITES) if name == "all" else [name]
    reports = [verify.run_suite(n, **_suite_params(cfg, n)) for n in names]
    payload = gio.write_report(reports if name == "all" else reports[0])
    out.document(payload, "\n".join(r.human() for r in reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def _cmd_fscan(cfg, out, stdin):
    p = cfg.params
    e = p["e"]
    h2 = h_derivative(2, e)
    lines = ["A,B,F,F_minus_H2"]
    for A in np.linspace(p["a_min"], p["a_max"], p["steps"]).tolist() if p["steps"] > 1 else [p["a_min"]]:
        B = named.tripodal_b(e, A)
        F = named.f_of_ab(e, A, B)
        lines.append(",".join(format(x, ".17g") for x in (A, B, F, F - h2)))
    out.data("\n".join(lines) + "\n")
    return EXIT_OK


COMMANDS = {
    "make": _cmd_make,
    "eval": _cmd_eval,
    "optimize": _cmd_optimize,
    "scan": _cmd_scan,
    "verify": _cmd_verify,
    "f-scan": _cmd_fscan,
}


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg = parse(sys.argv[1:] if argv is None else list(argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg, _Output(cfg, stdout), stdin)
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=stderr)
        return EXIT_NONCONVERGENCE
    except (InfeasibleTargetError, ValidationError, DomainError, gio.SerializationError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())
