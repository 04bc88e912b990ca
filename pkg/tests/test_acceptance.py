"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import io
import itertools
import json
import math
import time
from contextlib import redirect_stdout
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nonembed import cli, groups
from nonembed import cube_quotients as cq
from nonembed import edit_metric as em
from nonembed import fourier_cube as fc
from nonembed import l1_certifier as l1
from nonembed import metric_length as ml
from nonembed import noise_sensitivity as ns
from nonembed import torus_lattice as tl
from nonembed.errors import UnboundedError
from nonembed.finite_metric import FiniteMetric, exact_c1_lp, hamming_cube, random_metric
from nonembed.transport import transport_embedding, verify_group_invariant

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
LP_SLACK = 1e-9


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


def test_fourier_identities(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = {"round_trip": 0.0, "parseval": 0.0, "energy": 0.0}
    for _ in range(200):
        d = int(rng.integers(1, 15))
        f = fc.SpectralFunction.from_values(rng.standard_normal(1 << d), d)
        out = fc.check_consistency(f)
        worst["round_trip"] = max(worst["round_trip"], out["round_trip"])
        worst["parseval"] = max(worst["parseval"], out["parseval"])
        worst["energy"] = max(worst["energy"], abs(fc.derivative_energy(f) - fc.spectral_energy(f)))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-10 and elapsed < 10
    verdict(1, ok, f"max residuals {worst} over 200 functions, {elapsed:.2f}s")


def test_poincare_and_enflo(verdict):
    rng = np.random.default_rng(2)
    failures = 0
    for _ in range(1000):
        d = int(rng.integers(1, 11))
        c = rng.standard_normal(1 << d)
        cut = int(rng.integers(0, d))
        c[fc.popcounts(d) <= cut] = 0.0
        c[(1 << d) - 1] += 1.0  # keep f nonconstant
        f = fc.SpectralFunction.from_coeffs(c, d)
        failures += not fc.poincare_check(f)["holds"]
        failures += not fc.enflo_gap(fc.SpectralFunction.from_values(rng.standard_normal(1 << d), d))["holds"]
    mismatches = 0
    for d in range(1, 11):
        for A in range(1, 1 << d):
            m = bin(A).count("1")
            p = fc.poincare_check(fc.walsh_function(d, A))
            e = fc.enflo_gap(fc.walsh_function(d, A))
            mismatches += not (p["lhs"] == 2.0 and p["rhs"] == 2.0)
            mismatches += not (e["lhs"] == (4.0 if m % 2 else 0.0) and e["rhs"] == 4.0 * m)
    verdict(2, failures == 0 and mismatches == 0,
            f"{failures} inequality failures in 1000 instances, {mismatches} closed-form mismatches")


def subspaces(d):
    """Every subspace of F_2^d, as reduced echelon bases (highest bit is the pivot)."""
    for k in range(d + 1):
        for pivots in itertools.combinations(range(d), k):
            ps = set(pivots)
            free = [[b for b in range(p) if b not in ps] for p in pivots]
            for choice in itertools.product(*[range(1 << len(fr)) for fr in free]):
                rows = []
                for p, fr, bits in zip(pivots, free, choice):
                    rows.append((1 << p) | sum(1 << b for i, b in enumerate(fr) if bits >> i & 1))
                yield rows


def test_no_geo_exhaustive(verdict):
    actions = 0
    violations = []
    for d in range(1, 9):
        for basis in subspaces(d):
            out = cq.no_geo_check(cq.translation_action(d, basis))
            actions += 1
            if not (out["hypothesis_holds"] and out["equality_holds"]):
                violations.append((d, basis))
        for step in range(1, d + 1):
            if d % step == 0:
                out = cq.no_geo_check(cq.cyclic_action(d, step))
                actions += 1
                if not (out["hypothesis_holds"] and out["equality_holds"]):
                    violations.append((d, "shift", step))
    # subspace counts 2 + 5 + 16 + 67 + 374 + 2825 + 29212 + 417199, plus 20 shift subgroups
    verdict(3, not violations and actions == 449_720,
            f"{actions} actions checked, {len(violations)} violations {violations[:3]}")


def random_code(rng, d, k):
    while True:
        gens = rng.integers(1, 1 << d, size=k).tolist()
        if cq.rank(gens) == k:
            return cq.LinearCode(d, tuple(gens))


def min_distance_edges(X):
    M = X.exact_matrix()
    m = min(M[i][j] for i in range(X.n) for j in range(X.n) if i != j)
    return [(i, j) for i in range(X.n) for j in range(i + 1, X.n) if M[i][j] == m]


def generic_bounds(X):
    """distributions_bound and cut_poincare_engine with the default weights."""
    n = X.n
    edges = min_distance_edges(X)
    out = {"distributions_bound": l1.distributions_bound(
        l1.PairDistribution(X, l1.uniform_sigma(n), l1.edge_tau(n, edges)), 0).bound}
    a = [[int(i != j) for j in range(n)] for i in range(n)]
    b = [[0] * n for _ in range(n)]
    for i, j in edges:
        b[i][j] = b[j][i] = 1
    try:
        out["cut_poincare_engine"] = max(Fraction(1), l1.cut_poincare_engine(X, a, b)["bound"])
    except UnboundedError:
        pass
    return out


def test_soundness_against_exact_lp(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    instances = []
    fixture_codes = [cq.LinearCode.from_dict(json.loads((FIXTURES / f"{n}.json").read_text()))
                     for n in ("rep4", "simplex73", "code6")]
    codes = fixture_codes + [random_code(rng, int(rng.integers(3, 11)), int(rng.integers(1, 4)))
                             for _ in range(15)]
    for C in codes:
        X = cq.coset_quotient(C)
        bounds = {"theorem_code_bound": cq.theorem_code_bound(C)}
        if X.n >= 2:
            bounds.update(generic_bounds(X))
        instances.append((f"coset{C.to_dict()}", X, bounds))
    for d in (3, 4, 5):
        action = cq.cyclic_action(d)
        X = cq.orbit_quotient(action)
        a, b, _ = l1.quotient_cut_weights(action)
        eng = l1.cut_poincare_engine(X, a, b)
        instances.append((f"cyclic{d}", X, {"corollary_group_bound": cq.corollary_group_bound(action),
                                             "cut_poincare_engine": max(Fraction(1), eng["bound"])}))
    for d in range(2, 10):
        X = cq.weight_class_action_quotient(d)
        bound = cq.corollary_group_bound(cq.symmetric_action(d), order=math.factorial(d))
        instances.append((f"weights{d}", X, {"corollary_group_bound": bound, **generic_bounds(X)}))
    for name in ("k23", "c5"):
        X = FiniteMetric.from_dict(json.loads((FIXTURES / f"{name}.json").read_text()))
        instances.append((name, X, generic_bounds(X)))
    for _ in range(25):
        n = int(rng.integers(3, 11))
        X = random_metric(n, rng)
        bounds = generic_bounds(X)
        A = rng.integers(0, 3, size=(n, n)).tolist()
        B = (rng.integers(0, 3, size=(n, n)) + 1).tolist()
        bounds["cut_poincare_random"] = max(Fraction(1), l1.cut_poincare_engine(X, A, B)["bound"])
        instances.append((f"random{n}", X, bounds))
    violations = []
    for name, X, bounds in instances:
        assert X.n <= 10
        lp = float(exact_c1_lp(X)["value"])
        for key, b in bounds.items():
            if float(b) > lp + LP_SLACK:
                violations.append((name, key, float(b), lp))
    elapsed = time.perf_counter() - start
    ok = not violations and len(instances) >= 50 and elapsed < 300
    verdict(4, ok, f"{len(instances)} instances, {sum(len(b) for _, _, b in instances)} bounds, "
                   f"{len(violations)} violations {violations[:3]}, {elapsed:.1f}s")


def test_group_invariant_transport(verdict):
    rng = np.random.default_rng(5)
    codes = [cq.LinearCode(4, (15,)), cq.LinearCode(6, (7, 56, 21)), cq.LinearCode(3, (7,))]
    while len(codes) < 10:
        codes.append(random_code(rng, int(rng.integers(3, 7)), int(rng.integers(1, 4))))
    pairs = 0
    bad = []
    for C in codes:
        G = groups.cube_group(C.d)
        H = cq.dual_code(C).codewords().tolist()
        out = verify_group_invariant(G, hamming_cube(C.d), H)
        pairs += out["pairs"]
        if not (out["holds"] and transport_embedding(C)["isometric"]):
            bad.append(C.to_dict())
    verdict(5, not bad, f"{len(codes)} codes, {pairs} coset pairs compared exactly, failures {bad}")


def test_edit_average_and_balls(verdict):
    rows = []
    ok = True
    for d in (32, 64, 128):
        a = em.average_ed_estimate(d, 10_000, seed=0)
        b = em.average_ed_estimate(d, 10_000, seed=0)
        ok &= a == b and a["mean"] - a["ci99"] >= d / 160
        rows.append(f"d={d} mean={a['mean']:.3f} ci99={a['ci99']:.3f}")
    balls = [em.ball_count_check(d, r) for d in range(1, 9) for r in range(0, 4)]
    ok &= all(b["holds"] for b in balls)
    verdict(6, ok, "; ".join(rows) + f"; {len(balls)} ball counts within 2^r C(2d, r)")


def test_shift_noise_spectral_identity(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    count = 0
    for eps in (0.125, 0.25):
        for _ in range(200):
            d = int(rng.integers(2, 13))
            f = fc.SpectralFunction.from_values(rng.choice([-1.0, 1.0], size=1 << d), d)
            out = em.beckner_shift_identity(f, eps, int(rng.integers(1, d + 1)))
            worst = max(worst, out["residual"])
            count += 1
    verdict(7, worst <= 1e-9, f"max residual {worst:.3e} over {count} function/epsilon pairs")


def test_torus_components(verdict):
    dist = [tl.explicit_torus_embedding(tl.integer_lattice(n), samples=4096, seed=n)["distortion"]
            for n in (1, 2, 3, 4)]
    ok_embed = all(abs(x - math.pi / 2) <= 1e-3 for x in dist)
    rng = np.random.default_rng(8)
    korkin_ok = True
    for n in range(1, 6):
        for _ in range(4):
            K = tl.kz_basis(tl.LatticeBasis(np.eye(n) + 0.35 * rng.standard_normal((n, n))))
            korkin_ok &= tl.korkin_inequality_check(K, trials=1000, seed=n)["holds"]
    poincare_worst = 0.0
    poincare_ok = True
    for L in (tl.integer_lattice(2), tl.integer_lattice(3), tl.kz_basis(tl.d4_lattice())):
        for _ in range(10):
            out = tl.poincare_lattice_check(tl.random_trig_polynomial(L, 4, 2, rng))
            poincare_ok &= out["holds"]
            poincare_worst = max(poincare_worst, out["identity_residual"])
    scale_worst = 0.0
    for L in (tl.integer_lattice(3), tl.d4_lattice()):
        base = tl.theorem_lattice_bound(L, seed=0)["bound"]
        for t in (0.25, 3.0, 40.0):
            scale_worst = max(scale_worst, abs(tl.theorem_lattice_bound(L.scaled(t), seed=0)["bound"] / base - 1))
    ok = ok_embed and korkin_ok and poincare_ok and poincare_worst <= 1e-9 and scale_worst <= 1e-9
    verdict(8, ok, f"distortions {[round(x, 6) for x in dist]}, korkin ok={korkin_ok}, "
                   f"poincare residual {poincare_worst:.2e}, scale drift {scale_worst:.2e}")


def test_average_torus_distance(verdict):
    rows = []
    ok = True
    for name, L in [(f"Z{n}", tl.integer_lattice(n)) for n in (1, 2, 3, 4)] + [("D4", tl.d4_lattice())]:
        out = tl.average_torus_check(L, samples=10_000, seed=0)
        ok &= out["holds"]
        rows.append(f"{name} {out['mean']:.4f}-{out['ci99']:.4f}>={out['target']:.4f}")
    verdict(9, ok, "; ".join(rows))


def test_length_components(verdict):
    ok = True
    for d in range(1, 11):
        chain = ml.hypercube_chain(d, explicit_maps=d <= 6)
        ok &= ml.validate_chain(chain) and ml.length(chain, 2) == math.sqrt(d)
    for n in range(2, 7):
        chain = ml.permutation_chain(n, explicit_maps=n <= 5)
        ok &= ml.validate_chain(chain) and ml.length(chain, 2) <= 2 * math.sqrt(n)
    bounds = []
    for d in range(4, 11):
        v = ml.theorem_length_bound(ml.hypercube_chain(d, explicit_maps=False))["value"]
        bounds.append(v)
        ok &= 0.3 * math.sqrt(d) <= v <= math.sqrt(d)
    rng = np.random.default_rng(10)
    worst = 0.0
    chains = {d: ml.hypercube_chain(d) for d in range(1, 7)}
    for _ in range(200):
        d = int(rng.integers(1, 7))
        out = ml.martingale_p2_identity(chains[d], rng.standard_normal((1 << d, int(rng.integers(1, 4)))))
        worst = max(worst, out["residual"])
    ok &= worst <= 1e-10
    verdict(10, ok, f"length bounds {[round(b, 4) for b in bounds]}, martingale residual {worst:.2e}")


def test_appendix_components(verdict):
    rng = np.random.default_rng(11)
    junta_bad = 0
    funcs = [ns.dictator(8, 3, ns.PLUS_MINUS), ns.parity(10), ns.majority(9, ns.PLUS_MINUS), ns.tribes(3, 4)]
    funcs += [ns.random_boolean(int(rng.integers(2, 15)), rng, ns.PLUS_MINUS) for _ in range(60)]
    for f in funcs:
        for eps in (0.1, 0.25):
            for beta in (0.02, 0.1, 0.3):
                prof = ns.profile(f, k=1 / eps, beta=beta, epsilon=eps)
                junta_bad += len(prof.J_beta) > 1 / (eps * beta) + 1e-9
    rad_bad = 0
    for _ in range(500):
        d = int(rng.integers(1, 11))
        v = rng.standard_normal(1 << d)
        p = float(rng.uniform(1.0, 2.0))
        rad_bad += not ns.rademacher_level1_check(fc.SpectralFunction.from_values(v - v.mean(), d), p)["holds"]
    step_bad = 0
    for trial in range(100):
        d = int(rng.integers(3, 11))
        f = ns.random_boolean(d, rng, ns.ZERO_ONE, p=float(rng.uniform(0.1, 0.9)))
        size = int(rng.integers(1, d + 1))
        I = sorted(rng.choice(np.arange(1, d + 1), size=size, replace=False).tolist())
        out = ns.lemma_step_components(f, I, t=float(rng.uniform(0.05, 0.95)), p=float(rng.uniform(1.1, 2.0)),
                                       k=int(rng.integers(1, 5)), samples=2000, seed=trial)
        step_bad += not (out["hypotheses"]["beta"] and out["hypotheses"]["delta"] and out["holds"])
    mass_bad = 0
    for _ in range(500):
        d = int(rng.integers(2, 13))
        f = ns.random_boolean(d, rng, ns.PLUS_MINUS, p=float(rng.uniform(0.5, 1.0)))
        mass_bad += not ns.high_mass_step(f, float(rng.choice([0.1, 0.125, 0.25, 0.5])))["holds"]
    ok = junta_bad == rad_bad == step_bad == mass_bad == 0
    verdict(11, ok, f"junta violations {junta_bad}/{len(funcs) * 6}, rademacher {rad_bad}/500, "
                    f"step {step_bad}/100, high mass {mass_bad}/500")


def run_suite(threads):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(["suite", "--all", "--threads", str(threads), "--seed", "0"])
    return code, buf.getvalue()


def test_suite_determinism(verdict):
    start = time.perf_counter()
    code1, one = run_suite(1)
    code4, four = run_suite(4)
    elapsed = time.perf_counter() - start
    report = json.loads(one)
    ok = one == four and code1 == code4 == 0 and elapsed < 1800
    verdict(12, ok, f"{report['results']['count']} reports, identical={one == four}, "
                    f"failed={report['results']['failed']}, {elapsed:.1f}s for both runs")
