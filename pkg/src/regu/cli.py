"""Batch experiment runner: config file in, logs and images out.

The ``regu`` command drives a full experiment from one flat text
config: generate a test problem, add noise, run one or more solvers,
and write per-solver convergence CSVs, a summary, and PGM images of
the true solution, the noisy data, and the distinguished iterates.

Commands::

    regu run <config>       execute a config (a path, or a bundled name)
    regu defaults <id>      print the default options of a solver or problem
    regu list               list solver ids, problem kinds, bundled configs

Config format: ``key = value`` lines under ``[section]`` headers.  One
``[problem]`` block, an optional ``[noise]`` block, one or more
``[solver:<name>]`` blocks (the name doubles as the solver id unless a
``method`` key says otherwise), and an optional ``[output]`` block.
Values are scalars, ``none``/``true``/``false``, ``[a, b]`` pairs, or
``a:b`` inclusive integer ranges.  The ``REGU_OUTPUT_DIR`` environment
variable overrides the configured output directory.

Every solver block automatically receives the problem's true solution
(for the error history) and the realized relative noise level (for the
discrepancy principle); set ``x_true = none`` or ``NoiseLevel = 0`` in
a block to opt out.

Exit codes: 0 success, 1 config error, 2 solver failure; error
messages name the failing block.

Determinism contract: same config + same seeds  =>  byte-identical CSV
and PGM outputs.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import os
import re
import sys
from importlib import resources

import numpy as np

from .linop import IdentityOperator
from .problems import (
    NoiseSpec,
    ProblemInfo,
    TestProblem,
    add_noise,
    gen_blur,
    gen_diffusion,
    gen_invinterp2,
    gen_nmr,
    gen_tomo,
    write_pgm,
)
from .solvers import (
    SolveOptions,
    art,
    cgls,
    constr_ls,
    ell1,
    enriched_cgls,
    fista,
    htv,
    hybrid_fgmres,
    hybrid_gmres,
    hybrid_lsqr,
    irn,
    mrnsd,
    rrgmres,
    sirt,
)

__all__ = ["main", "run_config", "export_image"]


class ConfigError(Exception):
    """Invalid config content; the message names the failing block."""


_SOLVERS = {
    "art": art,
    "cgls": cgls,
    "constr_ls": constr_ls,
    "ell1": ell1,
    "enriched_cgls": enriched_cgls,
    "fista": fista,
    "htv": htv,
    "hybrid_fgmres": hybrid_fgmres,
    "hybrid_gmres": hybrid_gmres,
    "hybrid_lsqr": hybrid_lsqr,
    "irn": irn,
    "mrnsd": mrnsd,
    "rrgmres": rrgmres,
    "sirt": sirt,
}


def _gen_identity(n=64):
    """Trivial well-posed problem (A = I) for smoke tests and examples."""
    n = int(n)
    if n < 2:
        raise ValueError(f"identity problem needs n >= 2, got {n}")
    i = np.arange(n)
    x = np.sin(np.pi * (i + 0.5) / n)
    info = ProblemInfo(kind="identity", xgrid=(n, 1), bgrid=(n, 1), params={})
    return TestProblem(A=IdentityOperator(n), b=x.copy(), x=x, info=info)


_PROBLEMS = {
    "blur": gen_blur,
    "diffusion": gen_diffusion,
    "identity": _gen_identity,
    "invinterp2": gen_invinterp2,
    "nmr": gen_nmr,
    "tomo": gen_tomo,
}

_PROBLEM_DEFAULTS = {
    "blur": {
        "n": 256,
        "psf_kind": "gauss",
        "blur_level": "medium",
        "boundary": "reflective",
        "commit_crime": False,
        "true_image": "shepplike",
        "seed": 0,
    },
    "diffusion": {"n": 128, "TFinal": 0.01, "Tsteps": 100},
    "identity": {"n": 64},
    "invinterp2": {"n": 128, "method": "linear", "seed": 0},
    "nmr": {
        "n": 128,
        "numData": None,
        "Tloglimits": (-4, 1),
        "tauloglimits": (-4, 1),
        "material": "carbonate",
    },
    "tomo": {
        "n": 256,
        "angles": None,
        "rays_per_angle": None,
        "phantom": "shepplike",
        "seed": 0,
    },
}

#: command-line safety rails on the problem size per kind
_MAX_N = {
    "blur": 256,
    "diffusion": 128,
    "identity": 4096,
    "invinterp2": 256,
    "nmr": 128,
    "tomo": 128,
}

_RANGE_RE = re.compile(r"^(-?\d+):(-?\d+)$")


def _parse_scalar(text):
    lowered = text.lower()
    if lowered in ("none", ""):
        return None
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return ()
        return tuple(_parse_scalar(t.strip()) for t in inner.split(","))
    m = _RANGE_RE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return _parse_scalar(text)


def _format_value(value):
    if value is None:
        return "none"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _bundled_configs():
    root = resources.files("regu").joinpath("configs")
    if not root.is_dir():
        return {}
    return {
        entry.name[: -len(".cfg")]: entry
        for entry in sorted(root.iterdir(), key=lambda e: e.name)
        if entry.name.endswith(".cfg")
    }


def _read_config_text(target):
    if os.path.exists(target):
        with open(target, "r", encoding="utf-8") as fh:
            return fh.read(), os.path.basename(target)
    name = target[: -len(".cfg")] if target.endswith(".cfg") else target
    bundled = _bundled_configs()
    if name in bundled:
        return bundled[name].read_text(encoding="utf-8"), name
    raise ConfigError(
        f"no such config file or bundled config: {target!r} "
        f"(bundled: {', '.join(sorted(bundled)) or 'none'})"
    )


def _parse_config(text):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from exc

    sections = parser.sections()
    if "problem" not in sections:
        raise ConfigError("missing [problem] block")
    solver_sections = [s for s in sections if s.startswith("solver:")]
    if not solver_sections:
        raise ConfigError("no [solver:<name>] blocks")
    known = {"problem", "noise", "output"} | set(solver_sections)
    unknown = [s for s in sections if s not in known]
    if unknown:
        raise ConfigError(f"unknown block [{unknown[0]}]")
    return parser, solver_sections


def _build_problem(parser):
    block = dict(parser.items("problem"))
    kind = block.pop("kind", None)
    if kind not in _PROBLEMS:
        raise ConfigError(
            f"[problem] kind must be one of {sorted(_PROBLEMS)}, got {kind!r}"
        )
    defaults = _PROBLEM_DEFAULTS[kind]
    kwargs = {}
    for key, raw in block.items():
        if key not in defaults:
            raise ConfigError(
                f"[problem] unknown option {key!r} for kind {kind!r} "
                f"(valid: {sorted(defaults)})"
            )
        kwargs[key] = _parse_value(raw)
    n = kwargs.get("n", defaults.get("n"))
    if isinstance(n, int) and n > _MAX_N[kind]:
        raise ConfigError(
            f"[problem] n = {n} exceeds the command-line limit "
            f"{_MAX_N[kind]} for kind {kind!r}"
        )
    try:
        return kind, _PROBLEMS[kind](**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[problem] {exc}") from exc


def _build_noise(parser, b):
    if not parser.has_section("noise"):
        return b.copy(), 0.0
    block = dict(parser.items("noise"))
    spec_kw = {"kind": "gauss", "level": 0.01, "seed": 0}
    for key, raw in block.items():
        if key not in spec_kw:
            raise ConfigError(f"[noise] unknown option {key!r}")
        spec_kw[key] = _parse_value(raw)
    try:
        spec = NoiseSpec(**spec_kw)
        bn, noise = add_noise(b, spec)
    except ValueError as exc:
        raise ConfigError(f"[noise] {exc}") from exc
    bn_norm = np.linalg.norm(bn)
    level = float(np.linalg.norm(noise) / bn_norm) if bn_norm > 0 else 0.0
    return bn, level


_OPTION_FIELDS = {f.name: f for f in dataclasses.fields(SolveOptions)}


def _build_solver_block(parser, section, problem, noise_level):
    label = section[len("solver:") :]
    if not label:
        raise ConfigError(f"[{section}] empty solver name")
    block = dict(parser.items(section))
    method = block.pop("method", label)
    if method not in _SOLVERS:
        raise ConfigError(
            f"[{section}] unknown solver {method!r} (valid: {sorted(_SOLVERS)})"
        )
    K = None
    if "K" in block:
        K = _parse_value(block.pop("K"))
        if isinstance(K, int):
            K = [K]
        elif not isinstance(K, list):
            raise ConfigError(f"[{section}] K must be an int, range or list")

    kwargs = {"x_true": problem.x, "NoiseLevel": noise_level}
    for key, raw in block.items():
        if key not in _OPTION_FIELDS:
            raise ConfigError(f"[{section}] unknown option {key!r}")
        value = _parse_value(raw)
        if key == "enrichment_basis":
            if value == "ones":
                value = np.ones((problem.A.shape[1], 1))
            elif value is not None:
                raise ConfigError(
                    f"[{section}] enrichment_basis supports only 'ones' or none"
                )
        kwargs[key] = value
    try:
        opts = SolveOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc
    return label, method, K, opts


def _build_output(parser, config_name):
    directory = os.path.join("regu_output", config_name)
    formats = ("csv", "pgm")
    if parser.has_section("output"):
        block = dict(parser.items("output"))
        for key, raw in block.items():
            if key == "directory":
                directory = raw.strip()
            elif key == "formats":
                formats = tuple(t for t in re.split(r"[,\s]+", raw.strip()) if t)
                bad = [t for t in formats if t not in ("csv", "pgm")]
                if bad:
                    raise ConfigError(f"[output] unknown format {bad[0]!r}")
            else:
                raise ConfigError(f"[output] unknown option {key!r}")
    env = os.environ.get("REGU_OUTPUT_DIR")
    if env:
        directory = env
    return directory, formats


def export_image(vector, grid, path):
    """Write a flattened field as a PGM image (column-major unflatten)."""
    rows, cols = int(grid[0]), int(grid[1])
    vector = np.asarray(vector, dtype=np.float64).ravel()
    if vector.size != rows * cols:
        raise ValueError(
            f"vector of length {vector.size} does not fill a {rows}x{cols} grid"
        )
    write_pgm(path, vector.reshape((rows, cols), order="F"))


def _fmt_float(value):
    return format(float(value), ".17g")


def _write_csv(path, info):
    columns = [("k", np.arange(1, info.Rnrm.size + 1)), ("Rnrm", info.Rnrm)]
    if info.Enrm is not None:
        columns.append(("Enrm", info.Enrm))
    if info.NE_Rnrm is not None:
        columns.append(("NE_Rnrm", info.NE_Rnrm))
    if info.RegP is not None:
        columns.append(("lambda", info.RegP))
    lines = [",".join(name for name, _ in columns)]
    for i in range(info.Rnrm.size):
        row = [str(int(columns[0][1][i]))]
        row += [_fmt_float(col[i]) for _, col in columns[1:]]
        lines.append(",".join(row))
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_summary(path, label, method, info):
    lines = [
        f"solver = {method}",
        f"iterations = {info.its}",
        f"StopFlag = {info.StopFlag}",
        f"StopReg.It = {info.StopReg.It}",
        f"BestReg.It = {info.BestReg.It if info.BestReg is not None else 'none'}",
    ]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _is_image(grid):
    return len(grid) == 2 and grid[0] > 1 and grid[1] > 1


def run_config(target):
    """Execute one experiment config; returns the process exit code."""
    text, config_name = _read_config_text(target)
    parser, solver_sections = _parse_config(text)
    kind, problem = _build_problem(parser)
    bn, noise_level = _build_noise(parser, problem.b)
    blocks = [
        _build_solver_block(parser, section, problem, noise_level)
        for section in solver_sections
    ]
    out_dir, formats = _build_output(parser, config_name)

    os.makedirs(out_dir, exist_ok=True)
    if "pgm" in formats:
        if _is_image(problem.info.xgrid):
            export_image(problem.x, problem.info.xgrid, os.path.join(out_dir, "x_true.pgm"))
        if _is_image(problem.info.bgrid):
            export_image(bn, problem.info.bgrid, os.path.join(out_dir, "b_noisy.pgm"))

    failed = False
    for label, method, K, opts in blocks:
        try:
            result = _SOLVERS[method](problem.A, bn, K=K, opts=opts)
        except Exception as exc:  # noqa: BLE001 - reported with the block name
            print(f"solver error in [solver:{label}]: {exc}", file=sys.stderr)
            failed = True
            continue
        info = result.info
        if "csv" in formats:
            _write_csv(os.path.join(out_dir, f"{label}.csv"), info)
        _write_summary(os.path.join(out_dir, f"{label}_summary.txt"), label, method, info)
        if "pgm" in formats and _is_image(problem.info.xgrid):
            export_image(
                info.StopReg.X, problem.info.xgrid,
                os.path.join(out_dir, f"{label}_StopReg.pgm"),
            )
            if info.BestReg is not None:
                export_image(
                    info.BestReg.X, problem.info.xgrid,
                    os.path.join(out_dir, f"{label}_BestReg.pgm"),
                )
        best = f", best it {info.BestReg.It}" if info.BestReg is not None else ""
        print(
            f"[solver:{label}] {method}: {info.its} iterations, "
            f"stop {info.StopFlag} at it {info.StopReg.It}{best}"
        )
    print(f"outputs in {out_dir}")
    return 2 if failed else 0


def _cmd_defaults(identifier):
    if identifier in _SOLVERS:
        for f in dataclasses.fields(SolveOptions):
            print(f"{f.name} = {_format_value(f.default)}")
        return 0
    if identifier in _PROBLEM_DEFAULTS:
        for key, value in _PROBLEM_DEFAULTS[identifier].items():
            print(f"{key} = {_format_value(value)}")
        return 0
    valid = sorted(_SOLVERS) + sorted(_PROBLEM_DEFAULTS)
    print(f"unknown id {identifier!r}; valid ids: {', '.join(valid)}", file=sys.stderr)
    return 1


def _cmd_list():
    for name in sorted(_SOLVERS):
        print(f"solver {name}")
    for name in sorted(_PROBLEMS):
        print(f"problem {name}")
    for name in sorted(_bundled_configs()):
        print(f"config {name}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="regu", description="Run regularization experiments from config files."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="config path or bundled config name")
    p_def = sub.add_parser("defaults", help="print default options of a solver/problem")
    p_def.add_argument("id", help="solver or problem identifier")
    sub.add_parser("list", help="list solvers, problems and bundled configs")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            return run_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
    if args.command == "defaults":
        return _cmd_defaults(args.id)
    return _cmd_list()


if __name__ == "__main__":
    raise SystemExit(main())
