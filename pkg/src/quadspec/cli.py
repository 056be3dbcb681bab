"""Command-line front end.

    quadspec analyze FILE [--validate] [--json OUT] [--seed S]
    quadspec validate FILE [--N N] [--dN DN] [--k K] [--times t0,t1,...] [--csv-dir DIR]
    quadspec fixtures

``FILE`` is a quadratic form in the ``{"n", "Q_re", "Q_im"}`` JSON schema
or the name of a bundled fixture.  Exit codes: 0 success, 1 malformed
input, 2 failed hypothesis (the report is still written), 3 dimension
bounds exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .decomposition import averaged_real_part, r_form
from .decomposition import split as make_split
from .errors import DimensionError, HypothesisError, QuadSpecError
from .galerkin import (
    MAX_DENSE_DIM,
    basis_dim,
    curve_to_csv,
    decay_fit,
    match_to_lattice,
    numerical_spectrum,
    semigroup_norm_curve,
    smoothing_diagnostic,
)
from .quadform import QuadraticForm
from .singular import analyze_singular_space
from .spectrum import SpectrumPrediction, Verdict, predict_spectrum
from .tolerances import Tolerances, from_env

EXIT_OK, EXIT_MALFORMED, EXIT_HYPOTHESIS, EXIT_DIMENSION = 0, 1, 2, 3

#: largest n accepted by the symbolic pipeline and by the Galerkin oracle
MAX_N_ANALYZE = 4
MAX_N_VALIDATE = 3
#: distance within which a converged eigenvalue counts as matching the lattice
TOL_MATCH = 1e-4
#: relative change below which a weighted norm counts as stabilised
SMOOTHING_RTOL = 0.01


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are malformed input; exit code 2 is reserved for failed hypotheses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MALFORMED, f"{self.prog}: error: {message}\n")


def to_jsonable(obj):
    """Plain JSON types: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(report: dict) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False)


def fixture_dir():
    return resources.files("quadspec") / "fixtures"


def list_fixtures() -> list[dict]:
    out = []
    for entry in sorted(fixture_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text())
            out.append({"name": entry.name[:-5], "provenance": data.get("provenance", ""),
                        "description": data.get("description", "")})
    return out


def load_form(path: str) -> tuple[QuadraticForm, dict]:
    """Read a form from a file, falling back to a bundled fixture name."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        candidate = fixture_dir() / (p.stem + ".json")
        if p.parent != Path(".") or not candidate.is_file():
            raise InputError(f"no such file or fixture: {path}")
        text = candidate.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("top-level JSON value must be an object")
    try:
        q = QuadraticForm.from_json(data)
    except DimensionError as exc:
        raise InputError(str(exc)) from exc
    if not np.all(np.isfinite(q.Q)):
        raise InputError("Q contains non-finite entries")
    return q, data


def default_truncation(n: int) -> tuple[int, int]:
    return {1: (40, 10), 2: (30, 10), 3: (12, 4)}[n]


def parse_times(text: str) -> list[float]:
    try:
        times = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad --times list: {text}") from exc
    if not times or any(t < 0 or not math.isfinite(t) for t in times):
        raise InputError("--times must be a non-empty list of non-negative numbers")
    return sorted(times)


def lattice_with_multiplicity(pred: SpectrumPrediction) -> np.ndarray:
    return np.array([p.value for p in pred.lattice for _ in range(p.count)], dtype=complex)


def validation_section(q: QuadraticForm, pred, split, *, N: int, dN: int, k: int,
                       times: list[float], seed: int, tol: Tolerances,
                       smoothing: bool = True) -> dict:
    """Galerkin comparisons: eigenvalues, norm curve, decay fit and smoothing."""
    out: dict = {"N": N, "dN": dN, "k": k, "seed": seed}
    k = min(k, basis_dim(q.n, N))
    conv = numerical_spectrum(q, N, dN, k, tol)
    eig = {"values": list(conv.values), "movements": list(conv.movements),
           "tol": tol.conv, "csv": conv.to_csv()}
    if isinstance(pred, SpectrumPrediction) and pred.lattice:
        ok, triples = match_to_lattice(conv.values, lattice_with_multiplicity(pred), TOL_MATCH)
        eig["matches"] = [{"computed": c, "predicted": p, "distance": d} for c, p, d in triples]
        eig["all_matched"] = ok
        eig["max_distance"] = max((t[2] for t in triples), default=0.0)
        eig["tol_match"] = TOL_MATCH
    out["eigenvalues"] = eig

    curve = semigroup_norm_curve(q, N, times)
    # fit on the later half of the samples, at least five of them
    m = min(len(times), max(5, math.ceil(len(times) / 2)))
    window = (times[-m], times[-1])
    decay: dict = {"curve": [list(c) for c in curve], "csv": curve_to_csv(curve),
                   "fit_window": list(window)}
    try:
        decay["fitted"] = decay_fit(curve, window)
    except QuadSpecError as exc:
        decay["fitted"] = None
        decay["note"] = str(exc)
    if isinstance(pred, SpectrumPrediction):
        decay["predicted"] = pred.decay_rate
        if decay["fitted"] is not None and pred.decay_rate > 0:
            decay["relative_error"] = abs(decay["fitted"] - pred.decay_rate) / pred.decay_rate
        decay["rtol"] = 0.1
    out["decay"] = decay

    if smoothing and isinstance(pred, SpectrumPrediction):
        rows = []
        for p in (1, 2):
            for t in (0.2, 0.0):
                rows += [r.to_json() for r in smoothing_diagnostic(q, split, N, t, p, dN=dN, seed=seed)]
        out["smoothing"] = {"rows": rows, "rtol": SMOOTHING_RTOL}
    return out


def run_pipeline(q: QuadraticForm, tol: Tolerances) -> tuple[dict, object, object]:
    """Symbolic pipeline.  Returns the report body, the prediction and the split."""
    report = analyze_singular_space(q, tol)
    body: dict = {
        "dissipative": {"value": q.is_dissipative(tol),
                        "max_real_eigenvalue": q.max_real_eigenvalue(),
                        "tol": tol.dissipative},
        "singular_space": {**report.to_json(),
                           "tol": {"rank": tol.rank, "symplectic": tol.symplectic,
                                   "ellipticity": tol.ellipticity}},
    }
    pred = predict_spectrum(q, report, tol=tol)
    if isinstance(pred, Verdict):
        body["verdict"] = pred.to_json()
        body["split"] = None
        body["spectrum"] = None
        body["theorems"] = []
        return body, pred, None
    split = make_split(q, report, tol)
    body["verdict"] = None
    body["split"] = {**split.to_json(), "tol": tol.split}
    if split.q1 is not None:
        rf = np.linalg.eigvalsh(r_form(split.q1).Q.real)
        avg = np.linalg.eigvalsh(averaged_real_part(split.q1, tol=tol).Q.real)
        body["split"]["r_form_max_eigenvalue"] = float(rf[-1])
        body["split"]["averaged_real_part_max_eigenvalue"] = float(avg[-1])
        body["split"]["averaged_real_part_tol"] = tol.quadrature
    body["spectrum"] = {**pred.to_json(),
                        "tol": {"cluster": tol.cluster, "boundary": tol.boundary, "real": tol.real}}
    body["theorems"] = list(pred.theorems)
    return body, pred, split


def cmd_analyze(args) -> int:
    tol = from_env()
    q, data = load_form(args.file)
    if q.n > MAX_N_ANALYZE:
        print(f"error: n = {q.n} exceeds the supported maximum {MAX_N_ANALYZE}", file=sys.stderr)
        return EXIT_DIMENSION
    if args.validate and q.n > MAX_N_VALIDATE:
        print(f"error: Galerkin validation supports n <= {MAX_N_VALIDATE}", file=sys.stderr)
        return EXIT_DIMENSION
    body, pred, split = run_pipeline(q, tol)
    report = {"input": {"source": args.file, **q.to_json()}, "tolerances": tol.as_dict(), **body}
    if args.validate:
        N, dN = default_truncation(q.n)
        report["validation"] = validation_section(
            q, pred, split, N=N, dN=dN, k=6, times=list(np.linspace(0.0, 8.0, 17)),
            seed=args.seed, tol=tol)
    code = EXIT_HYPOTHESIS if isinstance(pred, Verdict) else EXIT_OK
    report["exit_code"] = code
    emit(report, args.json)
    return code


def cmd_validate(args) -> int:
    tol = from_env()
    q, _ = load_form(args.file)
    N0, dN0 = default_truncation(min(q.n, MAX_N_VALIDATE))
    N = args.N if args.N is not None else N0
    dN = args.dN if args.dN is not None else dN0
    if q.n > MAX_N_VALIDATE or basis_dim(q.n, N + dN) > MAX_DENSE_DIM:
        print(f"error: Galerkin dimension {basis_dim(q.n, N + dN)} (n = {q.n}) exceeds the limits "
              f"n <= {MAX_N_VALIDATE}, dim <= {MAX_DENSE_DIM}", file=sys.stderr)
        return EXIT_DIMENSION
    if N < 2 or dN < 1 or args.k < 1:
        raise InputError("need N >= 2, dN >= 1 and k >= 1")
    times = parse_times(args.times)
    body, pred, split = run_pipeline(q, tol)
    section = validation_section(q, pred, split, N=N, dN=dN, k=args.k, times=times,
                                 seed=args.seed, tol=tol, smoothing=args.smoothing)
    if args.csv_dir:
        out = Path(args.csv_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eigenvalues.csv").write_text(section["eigenvalues"]["csv"])
        (out / "norm_curve.csv").write_text(section["decay"]["csv"])
    code = EXIT_HYPOTHESIS if isinstance(pred, Verdict) else EXIT_OK
    report = {"input": {"source": args.file, **q.to_json()}, "tolerances": tol.as_dict(),
              "verdict": body["verdict"], "validation": section, "exit_code": code}
    emit(report, args.json)
    return code


def cmd_fixtures(args) -> int:
    for f in list_fixtures():
        print(f"{f['name']}\t{f['provenance']}")
    return EXIT_OK


def emit(report: dict, path: str | None) -> None:
    text = dumps(report)
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quadspec", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the symbolic pipeline on a quadratic form")
    a.add_argument("file", help="form JSON file or bundled fixture name")
    a.add_argument("--validate", action="store_true", help="add Galerkin comparisons")
    a.add_argument("--json", metavar="OUT", help="write the report here instead of stdout")
    a.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="compare predictions with the Galerkin oracle")
    v.add_argument("file")
    v.add_argument("--N", type=int, default=None, help="truncation degree")
    v.add_argument("--dN", type=int, default=None, help="degree increment of the convergence check")
    v.add_argument("--k", type=int, default=6, help="number of eigenvalues to track")
    v.add_argument("--times", default="0,0.5,1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6,6.5,7,7.5,8",
                   help="comma-separated times of the norm curve")
    v.add_argument("--csv-dir", help="directory for eigenvalues.csv and norm_curve.csv")
    v.add_argument("--smoothing", action="store_true", help="include the smoothing table")
    v.add_argument("--json", metavar="OUT")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("fixtures", help="list bundled fixtures")
    f.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
