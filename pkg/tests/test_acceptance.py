"""Exit criteria of the build, one test per criterion.

Each test prints a single ``PASS n: ...`` or ``FAIL n: ...`` line; the
lines are also collected into a summary section at the end of the run.
"""

import json
import time

import numpy as np
import pytest

from builders import constructed_family, kfp, random_definite, random_symplectic
from quadspec import (
    QuadraticForm,
    SubspaceBasis,
    Tolerances,
    Verdict,
    analyze_singular_space,
    averaged_real_part,
    compute_singular_space,
    decay_fit,
    hamilton_map,
    match_to_lattice,
    numerical_spectrum,
    poisson_bracket,
    predict_spectrum,
    principal_angles,
    r_form,
    semigroup_norm_curve,
    smoothing_diagnostic,
    split,
)
from quadspec.cli import list_fixtures, load_form, main

pytestmark = pytest.mark.acceptance

HARMONIC = QuadraticForm(-np.eye(2))
MINUS_X2 = QuadraticForm(np.diag([-1.0, 0.0]))


def best_time(fn, repeats: int = 20) -> float:
    """Smallest wall time of ``fn`` over several calls after one warm-up."""
    fn()
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kfp_hamilton_exact(a: float) -> np.ndarray:
    return np.array([
        [0, -0.5j, 0, 0],
        [0.5j * a, 0, 0, -1],
        [0, 0, 0, -0.5j * a],
        [0, 0.25, 0.5j, 0],
    ], dtype=complex)


def constructed_forms(count: int, seed: int):
    rng = np.random.default_rng(seed)
    shapes = [(1, 1), (2, 1), (1, 2), (2, 2)]
    return [(n1, n2, *constructed_family(n1, n2, rng)) for n1, n2 in
            (shapes[i % len(shapes)] for i in range(count))]


def test_criterion_01_kfp_hamilton_map(report_criterion):
    bad = []
    for a in (1.0, 0.5, 2.0, 3.0, -1.25):
        F = hamilton_map(kfp(a)).F
        if not np.array_equal(F, kfp_hamilton_exact(a)):
            bad.append(a)
    elapsed = best_time(lambda: hamilton_map(kfp(1.0)))
    ok = not bad and elapsed < 1e-3
    report_criterion(1, ok, f"KFP Hamilton map exact for all a (mismatch: {bad}); {elapsed * 1e3:.3f} ms")


def test_criterion_02_kfp_singular_space(report_criterion):
    F = hamilton_map(kfp())
    tol = Tolerances(rank=1e-10)
    d = compute_singular_space(F, tol).d
    elapsed = best_time(lambda: compute_singular_space(F, tol))
    report_criterion(2, d == 0 and elapsed < 1e-2, f"KFP dim S = {d}; {elapsed * 1e3:.3f} ms")


def test_criterion_03_harmonic_end_to_end(report_criterion):
    t0 = time.perf_counter()
    pred = predict_spectrum(HARMONIC)
    lattice = pred.values()[:10]
    conv = numerical_spectrum(HARMONIC, 40, 10, k=10)
    matched, triples = match_to_lattice(conv.values, lattice, 1e-10)
    elapsed = time.perf_counter() - t0
    want = np.array([-(2 * k + 1) for k in range(10)], dtype=complex)
    # eigen-solver roundoff leaves ~1e-17 imaginary parts on the generator
    lattice_ok = len(lattice) == 10 and np.max(np.abs(np.asarray(lattice) - want)) < 1e-12
    dist = max((t[2] for t in triples), default=np.inf)
    ok = lattice_ok and matched and len(conv.values) == 10 and elapsed < 1.0
    report_criterion(3, ok, f"harmonic lattice exact: {lattice_ok}; {len(conv.values)} converged, "
                            f"max distance {dist:.2e}; {elapsed:.3f} s")


def test_criterion_04_kfp_spectrum_oracle(report_criterion):
    t0 = time.perf_counter()
    pred = predict_spectrum(kfp())
    conv = numerical_spectrum(kfp(), 30, 10, k=6)
    predicted = [p.value for p in pred.lattice for _ in range(p.count)]
    matched, triples = match_to_lattice(conv.values, predicted, 1e-4)
    elapsed = time.perf_counter() - t0
    dist = max((t[2] for t in triples), default=np.inf)
    ok = matched and len(conv.values) == 6 and elapsed < 60.0
    report_criterion(4, ok, f"KFP {len(conv.values)}/6 converged, bijective max distance {dist:.2e}; "
                            f"{elapsed:.2f} s")


def test_criterion_05_decay_rate(report_criterion):
    times = np.arange(0.0, 8.0 + 1e-9, 0.25)
    pred = predict_spectrum(kfp())
    a_kfp = decay_fit(semigroup_norm_curve(kfp(), 30, times), (3.0, 8.0))
    a_harm = decay_fit(semigroup_norm_curve(HARMONIC, 40, times), (2.0, 6.0))
    ok_kfp = abs(a_kfp - pred.decay_rate) <= 0.1 * pred.decay_rate
    ok_harm = abs(a_harm - 1.0) <= 1e-4
    report_criterion(5, ok_kfp and ok_harm,
                     f"KFP fitted {a_kfp:.6f} vs predicted {pred.decay_rate:.6f}; harmonic fitted {a_harm:.8f}")


def test_criterion_06_counterexample(report_criterion, tmp_path, capsys):
    path = tmp_path / "minus_x2.json"
    path.write_text(json.dumps(MINUS_X2.to_json()))
    code = main(["analyze", str(path)])
    rep = json.loads(capsys.readouterr().out)
    non_symplectic = rep["verdict"]["verdict"] == "singular space not symplectic"
    curve = semigroup_norm_curve(MINUS_X2, 60, np.linspace(0.0, 5.0, 21))
    norms = np.array([v for _, v in curve])
    # 1e-12 covers roundoff in the 2-norm of an exact contraction
    in_band = bool(np.all(norms >= 0.99) and np.all(norms <= 1.0 + 1e-12))
    ok = code == 2 and non_symplectic and in_band
    report_criterion(6, ok, f"-x^2 exit code {code}, non-symplectic: {non_symplectic}; "
                            f"Galerkin norm on [0,5] in [{norms.min():.4f}, {norms.max():.4f}] at N=60")


def test_criterion_07_bracket_identity(report_criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3, 4):
        rng = np.random.default_rng(700 + n)
        for _ in range(100):
            A = rng.standard_normal((2 * n, 2 * n)) + 1j * rng.standard_normal((2 * n, 2 * n))
            B = rng.standard_normal((2 * n, 2 * n)) + 1j * rng.standard_normal((2 * n, 2 * n))
            q1, q2 = QuadraticForm(A + A.T), QuadraticForm(B + B.T)
            F1, F2 = hamilton_map(q1).F, hamilton_map(q2).F
            lhs = hamilton_map(poisson_bracket(q1, q2)).F
            rhs = -2 * (F1 @ F2 - F2 @ F1)
            worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    elapsed = time.perf_counter() - t0
    report_criterion(7, worst <= 1e-12 and elapsed < 5.0,
                     f"400 pairs, worst relative error {worst:.2e}; {elapsed:.2f} s")


def test_criterion_08_constructed_forms(report_criterion):
    r_margin = np.inf
    avg_margin = np.inf
    angle = 0.0
    failures = []
    for i, (n1, n2, q, S_true, _, _) in enumerate(constructed_forms(50, 800)):
        report = analyze_singular_space(q)
        s = split(q, report)
        r_max = np.linalg.eigvalsh(r_form(s.q1).Q.real)[-1]
        a_max = max(np.linalg.eigvalsh(averaged_real_part(s.q1, T).Q.real)[-1] for T in (0.5, 1.0, 2.0))
        truth = SubspaceBasis.from_spanning(n1 + n2, S_true)
        ang = float(np.max(principal_angles(report.S, truth))) if report.d == truth.d else np.inf
        r_margin, avg_margin, angle = min(r_margin, -r_max), min(avg_margin, -a_max), max(angle, ang)
        if not (r_max < 0 and a_max < 0 and ang < 1e-8):
            failures.append(i)
    report_criterion(8, not failures,
                     f"50 forms, failures {failures}; r_form margin {r_margin:.3e}, "
                     f"averaged real part margin {avg_margin:.3e}, max principal angle {angle:.2e}")


def test_criterion_09_imaginary_iff_full_singular_space(report_criterion):
    cases = [q for *_, q, _, _, _ in constructed_forms(50, 800)]
    rng = np.random.default_rng(900)
    for i in range(50):
        n = 1 + i % 3
        A = rng.standard_normal((2 * n, 2 * n))
        P = random_definite(n, rng) if i % 2 else A + A.T
        if i % 5 == 0:
            R = random_symplectic(n, rng)
            P = R.T @ P @ R
        cases.append(QuadraticForm(1j * P))
    bad = []
    for i, q in enumerate(cases):
        imaginary = not np.any(q.Q.real)
        full = compute_singular_space(hamilton_map(q)).d == 2 * q.n
        if imaginary != full:
            bad.append(i)
    report_criterion(9, not bad, f"{len(cases)} forms, equivalence violated for {bad}")


def test_criterion_10_smoothing(report_criterion):
    q = kfp()
    s = split(q, analyze_singular_space(q))
    parts = []
    ok = True
    for p in (1, 2):
        rows = smoothing_diagnostic(q, s, 40, 0.2, p, dN=10)
        control = [r for r in smoothing_diagnostic(q, s, 40, 0.0, p, dN=10) if r.vector == "rough"]
        ok &= all(r.stabilized(0.01) for r in rows) and not any(r.stabilized(0.01) for r in control)
        parts += [f"p={p} {r.vector} {r.relative_change:.2%}" for r in rows]
        parts += [f"p={p} t=0 rough {r.relative_change:.2%}" for r in control]
    report_criterion(10, ok, "; ".join(parts))


def test_criterion_11_symplectic_invariance(report_criterion):
    rng = np.random.default_rng(1100)
    worst = 0.0
    bad = []
    for fx in list_fixtures():
        q, _ = load_form(fx["name"])
        base = predict_spectrum(q)
        for _ in range(20):
            R = random_symplectic(q.n, rng)
            moved = predict_spectrum(QuadraticForm(R.T @ q.Q @ R))
            if isinstance(base, Verdict) or isinstance(moved, Verdict):
                if not (isinstance(base, Verdict) and isinstance(moved, Verdict) and base.reason == moved.reason):
                    bad.append(fx["name"])
                continue
            a, b = base.generator_mus(), moved.generator_mus()
            matched, triples = match_to_lattice(a, b, 1e-8)
            worst = max([worst] + [t[2] for t in triples])
            if len(a) != len(b) or not matched:
                bad.append(fx["name"])
    report_criterion(11, not bad, f"{len(list_fixtures())} fixtures x 20 maps, mismatches {sorted(set(bad))}, "
                                  f"worst generator distance {worst:.2e}")
