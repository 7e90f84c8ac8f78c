"""polygauss command line: check, faces, prob, selftest, bench.

Reports are JSON on stdout (or --output); floats carry 17 significant digits.
Exit codes: 0 ok, 2 unreadable problem file, 3 empty polyhedron or family
not in general position, 4 oracle disagreement, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time
import warnings

import numpy as np

from . import errors
from .complex import holonomic_rank, nerve
from .geometry import HPolyhedron, check_general_position, homogenize, kept_labels, strip_redundant
from .hgm import GaussianProblem, HGMConfig, compute_probability, prepare, standardize
from .instances import bundled
from .oracle import check_decomposition, estimate_phi
from .pfaffian import annihilator_residual, coordinate_directions, integrability_residual

EXIT_OK, EXIT_PARSE, EXIT_EMPTY, EXIT_ORACLE, EXIT_NUMERIC = 0, 2, 3, 4, 5

INTEGRABILITY_LIMIT = 1e-6
IDENTITY_LIMIT = 1e-10
DECOMPOSITION_LIMIT = 1e-10


class ProblemFileError(ValueError):
    pass


class _Exit(Exception):
    def __init__(self, code, report):
        self.code = code
        self.report = report


# --- JSON -------------------------------------------------------------------

def _encode(x) -> str:
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in x) + "]"
    if isinstance(x, (bool, np.bool_)) or x is None:
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        s = format(x, ".17g")
        if not any(c in s for c in ".en"):
            s += ".0"
        return s
    if isinstance(x, np.ndarray):
        return _encode(x.tolist())
    return json.dumps(x)


def dumps(report: dict) -> str:
    """JSON text with insertion-ordered keys and round-trip float formatting."""
    return _encode(report) + "\n"


# --- input ------------------------------------------------------------------

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _matrix(obj, name, shape=None):
    try:
        m = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"{name!r} is not numeric") from exc
    if shape is not None and m.shape != shape:
        raise ProblemFileError(f"{name!r} has shape {m.shape}, expected {shape}")
    if not np.all(np.isfinite(m)):
        raise ProblemFileError(f"{name!r} has non-finite entries")
    return m


def parse_problem(text: str) -> tuple[GaussianProblem, HGMConfig]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must be a JSON object")
    unknown = set(data) - {"a", "b", "mean", "covariance", "config"}
    if unknown:
        raise ProblemFileError(f"unknown keys {sorted(unknown)}")
    for key in ("a", "b"):
        if key not in data:
            raise ProblemFileError(f"missing key {key!r}")
    a = _matrix(data["a"], "a")
    if a.ndim != 2 or a.size == 0:
        raise ProblemFileError("'a' must be a non-empty d x n array")
    d, n = a.shape
    b = _matrix(data["b"], "b", (n,))
    mean = _matrix(data["mean"], "mean", (d,)) if data.get("mean") is not None else None
    cov = None
    if data.get("covariance") is not None:
        cov = _matrix(data["covariance"], "covariance", (d, d))
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ProblemFileError("covariance is not symmetric")
    try:
        cfg = HGMConfig.from_dict(data.get("config"))
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"bad config: {exc}") from exc
    return GaussianProblem(HPolyhedron(a, b), mean, cov), cfg


# --- commands -----------------------------------------------------------------

def _labels(J, kept):
    return [int(kept[j - 1]) for j in J]


def cmd_check(gp: GaussianProblem, cfg: HGMConfig, args) -> dict:
    p = gp.polyhedron
    family = check_general_position(homogenize(p), exhaustive=args.exhaustive)
    stripped, removed = strip_redundant(p)
    kept = kept_labels(p, removed)
    report = check_general_position(homogenize(stripped), exhaustive=args.exhaustive)
    faces = None
    if report.in_general_position:
        faces = [_labels(J, kept) for J in nerve(stripped, report).faces]
    witness = report.witness if not report.in_general_position else None
    return {
        "general_position": report.in_general_position,
        "witness": _witness(witness, kept),
        "removed_redundant": list(removed),
        "n_faces": len(faces) if faces is not None else None,
        "rank": len(faces) if faces is not None else None,
        "faces": faces if faces is not None else [],
        "family_general_position": family.in_general_position,
        "family_witness": list(family.witness) if family.witness is not None else None,
    }


def _witness(J, kept):
    """Witness in input labels; 0 stays the homogenizing half-space."""
    if J is None:
        return None
    return [0 if j == 0 else int(kept[j - 1]) for j in J]


def cmd_faces(gp: GaussianProblem, cfg: HGMConfig, args) -> dict:
    p = gp.polyhedron
    stripped, removed = strip_redundant(p)
    kept = kept_labels(p, removed)
    c = nerve(stripped, check_general_position(homogenize(stripped)))
    return {"rank": holonomic_rank(c), "faces": [_labels(J, kept) for J in c.faces]}


def cmd_prob(gp: GaussianProblem, cfg: HGMConfig, args) -> dict:
    phi, diag = compute_probability(gp, cfg)
    out = {
        "probability": phi,
        "rank": diag.rank,
        "doubling_gap": diag.doubling_gap,
        "singular_distance": diag.singular_distance,
        "removed_redundant": list(diag.removed_redundant),
        "shift_t": diag.shift_t,
        "steps_accepted": diag.steps_accepted,
    }
    if args.oracle:
        est = estimate_phi(standardize(gp), args.samples, args.seed, "QMC" if args.qmc else "MC")
        diff = abs(phi - est.value)
        out.update(mc_value=est.value, mc_stderr=est.std_error, abs_diff=diff)
        if diff > 4 * est.std_error + 1e-6:
            raise _Exit(EXIT_ORACLE, out)
    return out


def cmd_selftest(gp: GaussianProblem, cfg: HGMConfig, args) -> dict:
    stripped, removed, system = prepare(gp)
    b = stripped.b
    dirs = coordinate_directions(system)
    worst = 0.0
    for d1, d2 in itertools.combinations(dirs, 2):
        worst = max(worst, integrability_residual(system, (stripped.a, b), d1, d2))
    ident = annihilator_residual(system, b)
    decomp = check_decomposition(stripped, system.complex, args.samples, args.seed)
    passed = worst <= INTEGRABILITY_LIMIT and ident <= IDENTITY_LIMIT and decomp <= DECOMPOSITION_LIMIT
    out = {
        "integrability_residual": worst,
        "identity_residual": ident,
        "decomposition_residual": decomp,
        "thresholds": [INTEGRABILITY_LIMIT, IDENTITY_LIMIT, DECOMPOSITION_LIMIT],
        "pairs": len(dirs) * (len(dirs) - 1) // 2,
        "rank": holonomic_rank(system.complex),
        "passed": passed,
    }
    if not passed:
        raise _Exit(EXIT_NUMERIC, out)
    return out


def cmd_bench(args) -> dict:
    rows = []
    for name, data in bundled().items():
        gp, cfg = parse_problem(json.dumps(data))
        start = time.perf_counter()
        for _ in range(args.repeat):
            phi, diag = compute_probability(gp, cfg)
        rows.append({"name": name, "probability": phi, "rank": diag.rank,
                     "seconds": (time.perf_counter() - start) / args.repeat})
    return {"instances": rows}


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polygauss",
                                     description="Gaussian probability of convex polyhedra")
    parser.add_argument("-o", "--output", default="-", help="report path, '-' for stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_file(name, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("file", help="problem JSON, '-' for stdin")
        return sp

    sp = with_file("check", "general position, redundancy and the face complex")
    sp.add_argument("--exhaustive", action="store_true", help="classify every subset, not just up to the first violation")
    with_file("faces", "list the nonempty faces")
    sp = with_file("prob", "probability by holonomic gradient continuation")
    sp.add_argument("--oracle", action="store_true", help="compare against a sampling estimate")
    sp.add_argument("--qmc", action="store_true", help="randomized Sobol' instead of plain Monte Carlo")
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    sp = with_file("selftest", "integrability, matrix identity and decomposition residuals")
    sp.add_argument("--samples", type=int, default=10**5)
    sp.add_argument("--seed", type=int, default=0)
    sp = sub.add_parser("bench", help="time the bundled instances")
    sp.add_argument("--repeat", type=int, default=1)
    return parser


COMMANDS = {"check": cmd_check, "faces": cmd_faces, "prob": cmd_prob, "selftest": cmd_selftest}


def _error(exc: Exception) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, errors.NotGeneralPosition) and exc.witness is not None:
        out["witness"] = list(exc.witness)
    if isinstance(exc, errors.SingularGram):
        out["face"] = list(exc.face)
    return out


def run(argv=None) -> tuple[int, dict, str]:
    """Exit code, report and output path for one invocation."""
    args = build_parser().parse_args(argv)
    code, report = _dispatch(args)
    return code, report, args.output


def _dispatch(args) -> tuple[int, dict]:
    try:
        if args.command == "bench":
            return EXIT_OK, cmd_bench(args)
        gp, cfg = parse_problem(_read(args.file))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", errors.DegenerateNearTie)
            return EXIT_OK, COMMANDS[args.command](gp, cfg, args)
    except _Exit as e:
        return e.code, e.report
    except (ProblemFileError, OSError) as exc:
        return EXIT_PARSE, _error(exc)
    except (errors.EmptyPolyhedron, errors.InvalidPolyhedron, errors.NotGeneralPosition) as exc:
        return EXIT_EMPTY, _error(exc)
    except (errors.PolyGaussError, np.linalg.LinAlgError) as exc:
        return EXIT_NUMERIC, _error(exc)


def main(argv=None) -> int:
    code, report, output = run(argv)
    text = dumps(report)
    if output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
