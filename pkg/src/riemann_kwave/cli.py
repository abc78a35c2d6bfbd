"""``riemann-kwave`` command-line interface.

Exit codes: 0 success, 2 computation error or failed check, 3 verification
passed but some grid points were unresolved, 64 usage or config-schema error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from . import io as rio
from ._validation import parse_vector
from .config import RunConfig
from .errors import ConfigError, ContractError, RiemannKWaveError
from .geometry import certification_states, check_involutivity, commutation_residual, make_frame
from .kwave import KWaveSolution, NewtonSettings, integrate_surface, sample_grid
from .models import get_model, list_models, sample_states
from .symmetry import symmetry_report
from .verify import verify_grid
from .wave import characteristic_branches

EXIT_OK, EXIT_FAIL, EXIT_UNRESOLVED, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--format", choices=["json", "csv", "table"], default=default("table"))
    parser.add_argument("--threads", type=int, default=default(None), help="worker cap for grid sweeps")
    parser.add_argument("--quiet", action="store_true", default=default(False))
    parser.add_argument("--config", default=default(None), help="JSON run configuration")


def _model_flags(p):
    p.add_argument("--model")
    p.add_argument("--model-param", action="append", default=[], metavar="NAME=VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riemann-kwave", description="Riemann k-waves by the method of characteristics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        return p

    command("models", "list the model catalogue")

    p = command("branches", "characteristic branches at a state")
    _model_flags(p)
    p.add_argument("--state")

    p = command("involutivity", "check a frame for involutivity on sampled states")
    _model_flags(p)
    p.add_argument("--frame")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tracked", action="store_true", default=None)
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)

    p = command("build", "integrate the surface and store a solution")
    _model_flags(p)
    p.add_argument("--frame")
    p.add_argument("--tracked", action="store_true", default=None)
    p.add_argument("--base")
    p.add_argument("--rgrid")
    p.add_argument("--psi", help="JSON file with the implicit profiles")
    p.add_argument("--samples", type=int, help="states used to certify the frame")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = command("sample", "evaluate a solution over an x-grid and write CSV")
    p.add_argument("--solution")
    p.add_argument("--xgrid")
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true", default=None, help="also write a gnuplot script")

    p = command("verify", "PDE residual and rank over an x-grid")
    _model_flags(p)
    p.add_argument("--solution")
    p.add_argument("--xgrid")
    p.add_argument("--out")
    p.add_argument("--residual-tol", type=float)
    p.add_argument("--rank-tol", type=float)
    p.add_argument("--h", type=float)

    p = command("verify-symmetry", "invariance, rectification and reduced-system checks")
    p.add_argument("--solution")
    p.add_argument("--xgrid")
    p.add_argument("--out")
    p.add_argument("--h", type=float)
    p.add_argument("--eps", type=float)

    command("run", "build, sample, verify and verify-symmetry from --config")
    return parser


# -- option resolution ---------------------------------------------------------


class _Options:
    """Command-line value, else config value, else default."""

    def __init__(self, args, config: RunConfig):
        self.args = args
        self.config = config

    def get(self, flag, keys=(), default=None, required=False):
        value = getattr(self.args, flag, None)
        if value is None and keys:
            value = self.config.get(*keys)
        if value is None:
            value = default
        if value is None and required:
            raise UsageError(f"--{flag.replace('_', '-')} is required (or set it in --config)")
        return value

    @property
    def threads(self):
        return int(self.get("threads", ("threads",), 1))


def _model(opts: _Options):
    name = opts.get("model", ("model", "name"), required=True)
    params = dict(opts.config.get("model", "params", default={}) or {}) if getattr(opts.args, "model", None) is None else {}
    for item in getattr(opts.args, "model_param", []) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--model-param expects NAME=VALUE, got {item!r}")
        params[key.strip()] = float(val)
    return get_model(name, **params)


def _vector(value, name):
    return parse_vector(value, name=name) if isinstance(value, str) else np.asarray(value, dtype=float)


def _selectors(opts: _Options):
    value = getattr(opts.args, "frame", None)
    if value is not None:
        return [s.strip() for s in value.split(",") if s.strip()]
    value = opts.config.get("frame", "selectors")
    if value is None:
        raise UsageError("--frame is required (or set frame.selectors in --config)")
    return list(value)


def _tracked(opts: _Options) -> bool:
    return bool(opts.get("tracked", ("frame", "tracked"), False))


def _profiles(opts: _Options):
    path = getattr(opts.args, "psi", None)
    if path is not None:
        return rio.read_profiles(path)
    doc = opts.config.get("profiles")
    if doc is None:
        raise UsageError("--psi is required (or set profiles in --config)")
    return rio.profiles_from_doc(doc)


def _newton(opts: _Options) -> NewtonSettings:
    return NewtonSettings(**(opts.config.get("newton", default={}) or {}))


def _solution(opts: _Options):
    path = getattr(opts.args, "solution", None) or opts.config.get("outputs", "solution")
    if path is None:
        raise UsageError("--solution is required (or set outputs.solution in --config)")
    return rio.read_solution(path)


# -- output --------------------------------------------------------------------


class _Out:
    def __init__(self, args, stdout):
        self.fmt = getattr(args, "format", "table")
        self.quiet = bool(getattr(args, "quiet", False))
        self.stdout = stdout

    def rows(self, header, rows, doc):
        if self.quiet:
            return
        if self.fmt == "json":
            self.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
        elif self.fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            self.stdout.write(buf.getvalue())
        else:
            widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
            for line in [header, *rows]:
                self.stdout.write("  ".join(str(c).ljust(w) for c, w in zip(line, widths)).rstrip() + "\n")

    def summary(self, text, doc):
        if self.quiet:
            return
        if self.fmt == "json":
            self.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
        else:
            self.stdout.write(text + "\n")


def _g(v) -> str:
    return format(float(v), ".17g")


# -- commands ------------------------------------------------------------------


def cmd_models(opts, out):
    cat = list_models()
    rows = [[m["name"], m["p"], m["q"], " ".join(m["variables"]), " ".join(m["frames"])] for m in cat]
    out.rows(["name", "p", "q", "variables", "frames"], rows, {"schema_version": 1, "models": cat})
    return EXIT_OK


def cmd_branches(opts, out):
    model = _model(opts)
    state = _vector(opts.get("state", ("base_state",), required=True), "state")
    branches = characteristic_branches(model, state)
    rows = [
        [_g(b.speed), " ".join(_g(v) for v in b.wave_vector), " ".join(_g(v) for v in b.polarization), b.multiplicity]
        for b in branches
    ]
    doc = {"schema_version": 1, "model": model.config(), "state": state.tolist(), "branches": [b.to_dict() for b in branches]}
    out.rows(["speed", "lambda", "gamma", "multiplicity"], rows, doc)
    return EXIT_OK


def cmd_involutivity(opts, out):
    model = _model(opts)
    frame = make_frame(model, _selectors(opts), tracked=_tracked(opts))
    n = int(opts.get("samples", ("samples",), 25))
    states = sample_states(model, n, seed=int(opts.get("seed", ("seed",), 0)))
    tol = float(opts.get("tol", ("tolerances", "involutivity"), 1e-6))
    report = check_involutivity(frame, states, h=opts.get("h", ("tolerances", "step")), tol=tol)
    doc = {"schema_version": 1, "model": model.config(), "frame": list(frame.selectors), **report.to_dict()}
    for key in ("checks", "sample_states"):
        doc.pop(key)
    verdict = "pass" if report.passed else "FAIL"
    out.summary(
        f"involutivity {verdict}: {model.name} {','.join(frame.selectors)} on {n} states, "
        f"bracket residual {report.max_bracket_residual:.3e}, lambda residual {report.max_lambda_residual:.3e}",
        doc,
    )
    return EXIT_OK if report.passed else EXIT_FAIL


def _build(opts):
    model = _model(opts)
    frame = make_frame(model, _selectors(opts), tracked=_tracked(opts))
    base = _vector(opts.get("base", ("base_state",), required=True), "base state")
    rgrid = opts.get("rgrid", ("rgrid",), required=True)
    n = int(opts.get("samples", ("samples",), 25))
    states = certification_states(frame, base, n=n, seed=int(opts.get("seed", ("seed",), 0)))
    comm = commutation_residual(frame, states)
    if not frame.commuting_certified:
        raise ContractError(
            f"frame {list(frame.selectors)} does not commute near the base state (bracket residual {comm:.3e})"
        )
    surface = integrate_surface(frame, base, rgrid)
    return KWaveSolution(surface, _profiles(opts), _newton(opts)), comm


def cmd_build(opts, out):
    solution, comm = _build(opts)
    path = opts.get("out", ("outputs", "solution"), required=True)
    rio.write_solution(path, solution)
    nodes = int(np.prod([a.n for a in solution.surface.grid]))
    out.summary(
        f"built k={solution.k} surface on {nodes} nodes (commutation {comm:.3e}, "
        f"path error {solution.surface.path_error:.3e}); wrote {path}",
        {"k": solution.k, "nodes": nodes, "commutation": comm, "path_error": solution.surface.path_error, "out": str(path)},
    )
    return EXIT_OK


def _sample(opts, solution, out, path=None, plot=None):
    xgrid = opts.get("xgrid", ("xgrid",), required=True)
    sample = sample_grid(solution, xgrid, threads=opts.threads)
    path = path or opts.get("out", ("outputs", "samples"), required=True)
    rio.write_sample_csv(path, solution, sample)
    plot = opts.get("plot", ("outputs", "plot"), False) if plot is None else plot
    if plot:
        rio.write_plot(path, solution, sample)
    n = int(sample.resolved.size)
    out.summary(
        f"sampled {n} points: {n - sample.n_unresolved} resolved, {sample.n_unresolved} unresolved, "
        f"{len(sample.catastrophes)} catastrophe cells; wrote {path}",
        {"points": n, "unresolved": sample.n_unresolved, "catastrophes": sample.catastrophes.to_dict(), "out": str(path)},
    )
    return sample


def cmd_sample(opts, out):
    _sample(opts, _solution(opts), out)
    return EXIT_OK


def _verify(opts, solution, out, sample=None, path=None):
    model = solution.frame.model
    if getattr(opts.args, "model", None) is not None or getattr(opts.args, "model_param", None):
        requested = _model(opts)
        if requested.config() != model.config():
            raise ContractError(f"solution was built for {model.config()}, not {requested.config()}")
    report = verify_grid(
        model,
        solution,
        opts.get("xgrid", ("xgrid",), required=True),
        residual_tol=float(opts.get("residual_tol", ("tolerances", "residual"), 1e-6)),
        rank_tol=float(opts.get("rank_tol", ("tolerances", "rank"), 1e-6)),
        h=float(opts.get("h", ("tolerances", "step"), 1e-5)),
        threads=opts.threads,
        sample=sample,
    )
    path = path or opts.get("out", ("outputs", "report"))
    if path:
        rio.write_json(path, report.to_dict())
    verdict = {EXIT_OK: "pass", EXIT_FAIL: "FAIL", EXIT_UNRESOLVED: "pass with unresolved points"}[report.exit_code]
    out.summary(
        f"verify {verdict}: max residual {report.max_residual:.3e} over {len(report.points)} points, "
        f"max rank {report.max_rank} (k={report.k}), {report.n_unresolved} unresolved",
        report.to_dict(include_points=False),
    )
    return report.exit_code


def cmd_verify(opts, out):
    return _verify(opts, _solution(opts), out)


def _verify_symmetry(opts, solution, out, path=None):
    doc = symmetry_report(
        solution,
        opts.get("xgrid", ("xgrid",), required=True),
        h=float(opts.get("h", ("tolerances", "step"), 1e-5)),
        eps=float(opts.get("eps", ("tolerances", "eps"), 1e-3)),
        threads=opts.threads,
    )
    doc = {"schema_version": 1, **doc}
    path = path or opts.get("out", ("outputs", "symmetry"))
    if path:
        rio.write_json(path, doc)
    out.summary(
        f"symmetry: invariance {doc['invariance']['max']:.3e}, rectification "
        f"{doc['rectification']['max_normalized']:.3e} (per unit eps), reduced system {doc['reduced_system']['max']:.3e}",
        doc,
    )
    return EXIT_OK


def cmd_verify_symmetry(opts, out):
    return _verify_symmetry(opts, _solution(opts), out)


def cmd_run(opts, out):
    if opts.config.data == {}:
        raise UsageError("run needs --config")
    solution, _ = _build(opts)
    sol_path = opts.config.get("outputs", "solution")
    if sol_path:
        rio.write_solution(sol_path, solution)
        solution = rio.read_solution(sol_path)
    sample = _sample(opts, solution, out, path=opts.get("out", ("outputs", "samples"), required=True))
    code = _verify(opts, solution, out, sample=sample)
    _verify_symmetry(opts, solution, out)
    return code


COMMANDS = {
    "models": cmd_models,
    "branches": cmd_branches,
    "involutivity": cmd_involutivity,
    "build": cmd_build,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "verify-symmetry": cmd_verify_symmetry,
    "run": cmd_run,
}


# options whose values routinely start with "-" (grids, vectors)
_SIGNED_VALUES = {"--rgrid", "--xgrid", "--base", "--state"}


def _join_signed(argv):
    """Rewrite ``--xgrid -1:1:5`` as ``--xgrid=-1:1:5`` so argparse does not read a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_VALUES and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] not in ("-", ""):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run the command line ``argv``; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_signed(argv))
        if args.command is None:
            raise UsageError("riemann-kwave: a subcommand is required (see --help)")
        config = RunConfig.load(args.config) if args.config else RunConfig()
        opts = _Options(args, config)
        if opts.threads < 1:
            raise UsageError("--threads must be at least 1")
        return COMMANDS[args.command](opts, _Out(args, stdout))
    except ConfigError as exc:
        stderr.write(f"error: {exc} (pointer {exc.pointer})\n")
        return EXIT_USAGE
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (RiemannKWaveError, ValueError, KeyError, OSError) as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


def main():  # pragma: no cover - console entry point
    sys.exit(run())
