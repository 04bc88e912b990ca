"""Batch front end: ``nonembed <command> [flags]``.

Every command prints one report with the keys ``command``, ``statement``,
``params`` (seed and every other input), ``results`` and ``pass``; a failing
report also carries a ``witness``.  Exit status is 0 when every checked
inequality or identity holds, 1 when one fails and 2 on bad input.

JSON is canonical (sorted keys, 17 significant digits, rationals as
``"p/q"``).  CSV output of ``edit`` uses the fixed header
``d,epsilon,k,samples,mean,ci99,bound,pass``; every other command flattens its
results to ``key,value`` rows with dotted keys.

``--config PATH`` reads ``key=value`` lines (keys are flag names without the
leading dashes); flags given on the command line override them.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import cube_quotients as cq
from . import edit_metric as em
from . import fourier_cube as fc
from . import l1_certifier as l1
from . import metric_length as ml
from . import noise_sensitivity as ns
from . import sampling, serialize
from . import torus_lattice as tl
from . import transport as tr
from .errors import CapacityError, PreconditionError, UnboundedError
from .finite_metric import MAX_LP_POINTS, FiniteMetric, exact_c1_lp

LP_SLACK = 1e-9
EDIT_CSV = ("d", "epsilon", "k", "samples", "mean", "ci99", "bound", "pass")
HIDDEN = {"command", "config", "format", "threads", "func"}

STATEMENTS = {
    "fourier": "Walsh transform identities, cube Poincare and Enflo inequalities",
    "quotient": "code quotient c1 lower bound against the exact cut-cone LP",
    "code": "greedy code construction with its quotient c1 bound",
    "emd": "exact transportation cost between measures on a finite metric",
    "edit": "edit distance averages, ball counts and shifted noisy pairs",
    "certify": "c1 lower bounds from pair distributions and cut Poincare inequalities",
    "torus": "flat torus distortion bounds from dual lattice invariants",
    "length": "metric length of partition chains and the resulting smoothness bound",
    "sensitivity": "spectral profile and junta approximation of Boolean functions",
    "suite": "full verification battery",
}


# ---------------------------------------------------------------- helpers

def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _edges(s: str) -> list[tuple[int, int]]:
    out = []
    for part in s.split(","):
        if part.strip():
            i, j = part.split("-")
            out.append((int(i), int(j)))
    return out


def _lp_check(X: FiniteMetric, bounds: dict) -> tuple[dict, dict | None]:
    """Compare each named lower bound against the exact c1 when the LP fits."""
    if X.n > MAX_LP_POINTS:
        return {"lp": None, "lp_skipped": f"n = {X.n} exceeds {MAX_LP_POINTS}"}, None
    lp = exact_c1_lp(X)
    value = lp["value"]
    out = {"lp": value}
    for name, b in bounds.items():
        if b is not None and float(b) > float(value) + LP_SLACK:
            return out, {"bound": name, "value": b, "lp": value}
    return out, None


def _random_values(seed: int, stream: str, t: int, n: int) -> np.ndarray:
    return sampling.block_rng(seed, stream, t).standard_normal(n)


# ---------------------------------------------------------------- commands

def cmd_fourier(a):
    if not 1 <= a.d <= 14:
        raise ValueError("d must lie in 1..14")
    if a.values:
        tables = [np.asarray(_load_json(a.values), dtype=float)]
    else:
        tables = [_random_values(a.seed, "cli-fourier", t, 1 << a.d) for t in range(a.trials)]
    worst = {"round_trip": 0.0, "parseval": 0.0, "energy": 0.0}
    witness = None
    for t, v in enumerate(tables):
        f = fc.SpectralFunction.from_values(v, a.d)
        cons = fc.check_consistency(f)
        lhs, rhs = fc.derivative_energy(f), fc.spectral_energy(f)
        en = abs(lhs - rhs) / max(1.0, abs(rhs))
        worst["round_trip"] = max(worst["round_trip"], cons["round_trip"])
        worst["parseval"] = max(worst["parseval"], cons["parseval"])
        worst["energy"] = max(worst["energy"], en)
        poin, enf = fc.poincare_check(f), fc.enflo_gap(f)
        ok = cons["ok"] and en <= fc.IDENTITY_TOL and poin["holds"] and enf["holds"]
        if not ok and witness is None:
            witness = {"trial": t, "consistency": cons, "energy_residual": en,
                       "poincare": poin, "enflo": enf}
    res = {"instances": len(tables), "max_round_trip": worst["round_trip"],
           "max_parseval": worst["parseval"], "max_energy_residual": worst["energy"]}
    return res, witness


def _code_report(C: cq.LinearCode, lp: bool):
    res = {"code": C, "min_weight": C.min_weight, "dim": C.dim}
    geo = cq.no_geo_check(cq.dual_translation_action(C))
    res["quotient_distances"] = geo
    witness = None
    if not (geo["hypothesis_holds"] and geo["equality_holds"]):
        witness = {"quotient_distances": geo}
    bound = cq.theorem_code_bound(C)
    res["theorem_code_bound"] = bound
    if lp:
        lp_res, w = _lp_check(cq.coset_quotient(C), {"theorem_code_bound": bound})
        res.update(lp_res)
        witness = witness or w
    return res, witness


def cmd_quotient(a):
    if a.code:
        C = cq.LinearCode.from_dict(_load_json(a.code))
        res, witness = _code_report(C, a.bound)
        if not a.bound:
            res.pop("theorem_code_bound")
        return res, witness
    if a.shift:
        geo = cq.no_geo_check(cq.cyclic_action(a.shift))
        ok = geo["hypothesis_holds"] and geo["equality_holds"]
        return {"quotient_distances": geo}, None if ok else geo
    raise ValueError("quotient needs --code or --shift")


def cmd_code(a):
    out = cq.code_greedy(a.d, a.delta, a.dim)
    C = out["code"]
    res, witness = _code_report(C, lp=(1 << C.dim) <= MAX_LP_POINTS)
    res["certified"] = out["certified"]
    res["radius"] = out["radius"]
    return res, witness


def cmd_emd(a):
    if a.code:
        C = cq.LinearCode.from_dict(_load_json(a.code))
        out = tr.transport_embedding(C)
        res = {"cosets": len(out["measures"]), "subgroup": out["subgroup"],
               "isometric": out["isometric"]}
        return res, None if out["isometric"] else res
    if not a.metric:
        raise ValueError("emd needs --metric or --code")
    X = FiniteMetric.from_dict(_load_json(a.metric))
    if a.source and a.target:
        out = tr.emd_uniform_sets(X, _int_list(a.source), _int_list(a.target))
        return {"cost": out["cost"], "bijection": out["bijection"]}, None
    if a.sigma and a.tau:
        sigma = tr.DiscreteMeasure(X.n, tuple(a.sigma.split(",")))
        tau = tr.DiscreteMeasure(X.n, tuple(a.tau.split(",")))
        out = tr.emd(X, sigma, tau)
        return {"cost": out["cost"], "coupling": out["coupling"], "u": out["u"], "v": out["v"]}, None
    raise ValueError("emd with --metric needs --source/--target or --sigma/--tau")


def cmd_edit(a):
    if a.ball:
        out = em.ball_count_check(a.d, a.r)
        return out, None if out["holds"] else out
    if a.tau:
        out = em.tau_mean(a.d, a.epsilon, a.k, a.samples, a.seed)
        return out, None if out["pass"] else out
    if a.bound:
        out = em.edit_theorem_bound(a.d, a.epsilon)
        return out, None
    out = em.average_ed_estimate(a.d, a.samples, a.seed)
    return out, None if out["pass"] else out


def cmd_certify(a):
    X = FiniteMetric.from_dict(_load_json(a.metric))
    n = X.n
    if a.edges:
        edges = _edges(a.edges)
    else:
        off = X.dist[~np.eye(n, dtype=bool)]
        m = off.min()
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if X.dist[i, j] == m]
    pd = l1.PairDistribution(X, l1.uniform_sigma(n), l1.edge_tau(n, edges))
    cert = l1.distributions_bound(pd, a.delta)
    res = {"edges": edges, "distributions_bound": cert}
    bounds = {"distributions_bound": cert.bound}
    A = [[Fraction(int(i != j)) for j in range(n)] for i in range(n)]
    B = [[Fraction(0)] * n for _ in range(n)]
    for i, j in edges:
        B[i][j] = B[j][i] = Fraction(1)
    try:
        eng = l1.cut_poincare_engine(X, A, B)
        res["cut_poincare"] = eng
        bounds["cut_poincare"] = max(Fraction(1), eng["bound"])
    except UnboundedError as exc:
        res["cut_poincare"] = {"unbounded": str(exc)}
    lp_res, witness = _lp_check(X, bounds)
    res.update(lp_res)
    return res, witness


def _lattice(a) -> tl.LatticeBasis:
    if a.lattice:
        return tl.load_lattice(a.lattice)
    name = (a.builtin or "").lower()
    if name == "d4":
        return tl.d4_lattice()
    if name == "e8":
        return tl.e8_lattice()
    if name.startswith("z") and name[1:].isdigit():
        return tl.integer_lattice(int(name[1:]))
    raise ValueError("torus needs --lattice PATH or --builtin zN|d4|e8")


def cmd_torus(a):
    L = _lattice(a)
    res = {"n": L.n, "det": L.det, "shortest_vector_length": tl.shortest_vector(L)["N"]}
    res["theorem_lattice_bound"] = tl.theorem_lattice_bound(L, seed=a.seed)
    avg = tl.average_torus_check(L, samples=a.samples, seed=a.seed)
    res["average_distance"] = avg
    witness = None if avg["holds"] else {"average_distance": avg}
    if L.n <= tl.lattice.MAX_KZ_DIM:
        K = tl.kz_basis(L)
        kor = tl.korkin_inequality_check(K, trials=a.trials, seed=a.seed)
        emb = tl.explicit_torus_embedding(K, samples=a.embed_samples, seed=a.seed)
        res["korkin"] = kor
        res["embedding"] = {k: emb[k] for k in ("lipschitz", "inverse_lipschitz",
                                                "distortion", "bound", "holds")}
        if witness is None and not kor["holds"]:
            witness = {"korkin": kor}
        if witness is None and not emb["holds"]:
            witness = {"embedding": res["embedding"]}
    return res, witness


def cmd_length(a):
    if (a.cube is None) == (a.perm is None):
        raise ValueError("length needs exactly one of --cube D or --perm N")
    chain = ml.hypercube_chain(a.cube) if a.cube is not None else ml.permutation_chain(a.perm)
    ml.validate_chain(chain)
    ell = ml.length_of_steps(chain.a, 2)
    res = {"levels": chain.depth, "a": list(chain.a), "length": ell, "valid": True}
    spec = ml.lq_smoothness(a.q)
    res["smoothness"] = {"q": a.q, "p": spec.p, "S": spec.S}
    res["theorem_length_bound"] = ml.theorem_length_bound(chain, spec)
    residual, witness = 0.0, None
    for t in range(a.trials):
        f = _random_values(a.seed, "cli-length", t, chain.base.n)
        out = ml.martingale_p2_identity(chain, f)
        residual = max(residual, out["residual"])
        if not out["holds"] and witness is None:
            witness = {"trial": t, "martingale": out}
    res["martingale_max_residual"] = residual
    if a.cube is not None and abs(ell - math.sqrt(a.cube)) > 1e-12:
        witness = witness or {"length": ell, "expected": math.sqrt(a.cube)}
    return res, witness


def _boolean(a) -> fc.SpectralFunction:
    kind = a.function
    if kind == "dictator":
        return ns.dictator(a.d, 1, ns.PLUS_MINUS)
    if kind == "parity":
        return ns.parity(a.d, ns.PLUS_MINUS)
    if kind == "majority":
        return ns.majority(a.d, ns.PLUS_MINUS)
    if kind == "tribes":
        width = max(1, int(round(math.log2(max(a.d, 2)))))
        return ns.tribes(width, max(1, a.d // width), ns.PLUS_MINUS)
    if kind == "random":
        rng = sampling.block_rng(a.seed, "cli-sensitivity", 0)
        return ns.random_boolean(a.d, rng, ns.PLUS_MINUS)
    raise ValueError(f"unknown function {kind!r}")


def cmd_sensitivity(a):
    if not 1 <= a.d <= 14:
        raise ValueError("d must lie in 1..14")
    f = _boolean(a)
    k = 1.0 / a.epsilon
    prof = ns.profile(f, k, a.beta, a.epsilon)
    der = ns.derive_sensitive(f, a.epsilon, a.beta)
    der.pop("g")
    res = {"profile": prof, "junta": der}
    witness = None
    if not der["junta_holds"]:
        witness = {"junta_size": der["junta_size"], "junta_bound": der["junta_bound"]}
    elif not der["high_mass_step_holds"]:
        witness = {"high_mass": der["high_mass"], "delta": der["delta"]}
    return res, witness


COMMANDS = {
    "fourier": cmd_fourier,
    "quotient": cmd_quotient,
    "code": cmd_code,
    "emd": cmd_emd,
    "edit": cmd_edit,
    "certify": cmd_certify,
    "torus": cmd_torus,
    "length": cmd_length,
    "sensitivity": cmd_sensitivity,
}


def suite_plan(full: bool) -> list[list[str]]:
    """Argument lists run by ``suite``; ``--all`` adds the larger instances."""
    from importlib import resources

    fx = resources.files("nonembed") / "fixtures"
    plan = [
        ["fourier", "--d", "10", "--trials", "50"],
        ["quotient", "--code", str(fx / "rep4.json"), "--bound"],
        ["quotient", "--code", str(fx / "hamming74.json"), "--bound"],
        ["quotient", "--shift", "6"],
        ["code", "--d", "8", "--delta", "0.25", "--dim", "2"],
        ["emd", "--code", str(fx / "code6.json")],
        ["emd", "--metric", str(fx / "k23.json"), "--source", "0,1", "--target", "2,3"],
        ["edit", "--avg", "--d", "32", "--samples", "2000"],
        ["edit", "--ball", "--d", "6", "--r", "2"],
        ["edit", "--tau", "--d", "64", "--epsilon", "0.125", "--k", "8", "--samples", "2000"],
        ["certify", "--metric", str(fx / "k23.json")],
        ["torus", "--builtin", "z3", "--samples", "2000", "--trials", "200", "--embed-samples", "512"],
        ["torus", "--builtin", "d4", "--samples", "2000", "--trials", "200", "--embed-samples", "512"],
        ["length", "--cube", "6", "--trials", "20"],
        ["length", "--perm", "4", "--trials", "20"],
        ["sensitivity", "--function", "majority", "--d", "9", "--epsilon", "0.25", "--beta", "0.05"],
        ["sensitivity", "--function", "random", "--d", "10", "--epsilon", "0.25", "--beta", "0.05"],
    ]
    if full:
        plan += [
            ["fourier", "--d", "14", "--trials", "20"],
            ["quotient", "--shift", "8"],
            ["edit", "--avg", "--d", "64", "--samples", "10000"],
            ["edit", "--avg", "--d", "128", "--samples", "10000"],
            ["edit", "--ball", "--d", "8", "--r", "3"],
            ["certify", "--metric", str(fx / "c5.json")],
            ["torus", "--builtin", "z4", "--samples", "10000"],
            ["torus", "--builtin", "e8", "--samples", "2000"],
            ["length", "--cube", "10", "--trials", "50"],
            ["length", "--perm", "6", "--trials", "20"],
            ["sensitivity", "--function", "tribes", "--d", "12", "--epsilon", "0.25", "--beta", "0.05"],
        ]
    return plan


def cmd_suite(a):
    reports = []
    for argv in suite_plan(a.all):
        ns_ = parse_args(argv + ["--seed", str(a.seed)])
        reports.append(_report(ns_))
    failed = [r["command"] for r in reports if not r["pass"]]
    res = {"reports": reports, "count": len(reports), "failed": failed}
    return res, ({"failed": failed} if failed else None)


COMMANDS["suite"] = cmd_suite


# ---------------------------------------------------------------- parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=sampling.default_seed())
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonembed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    ps = {}
    for name in COMMANDS:
        ps[name] = sub.add_parser(name, help=STATEMENTS[name])
        _add_common(ps[name])

    p = ps["fourier"]
    p.add_argument("--d", "-d", type=int, default=10)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--values", help="JSON list of 2^d function values")

    p = ps["quotient"]
    p.add_argument("--code", help="JSON {d, gens}")
    p.add_argument("--bound", action="store_true")
    p.add_argument("--shift", type=int, help="cyclic shift action on F_2^D")

    p = ps["code"]
    p.add_argument("--d", "-d", type=int, required=False, default=8)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--dim", type=int, default=2)

    p = ps["emd"]
    p.add_argument("--metric", help="JSON {n, dist}")
    p.add_argument("--code", help="JSON {d, gens}; checks the coset measure embedding")
    p.add_argument("--source", help="comma separated point indices")
    p.add_argument("--target", help="comma separated point indices")
    p.add_argument("--sigma", help="comma separated rational weights")
    p.add_argument("--tau", help="comma separated rational weights")

    p = ps["edit"]
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--avg", action="store_true")
    mode.add_argument("--ball", action="store_true")
    mode.add_argument("--tau", action="store_true")
    mode.add_argument("--bound", action="store_true")
    p.add_argument("--d", "-d", type=int, default=64)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.125)
    p.add_argument("--k", type=int, default=8)

    p = ps["certify"]
    p.add_argument("--metric", required=True, help="JSON {n, dist}")
    p.add_argument("--edges", help="pairs like 0-1,1-2; default: pairs at minimum distance")
    p.add_argument("--delta", default="0")

    p = ps["torus"]
    p.add_argument("--lattice", help="JSON {n, basis}")
    p.add_argument("--builtin", help="zN, d4 or e8")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--embed-samples", type=int, default=4096)

    p = ps["length"]
    p.add_argument("--cube", type=int)
    p.add_argument("--perm", type=int)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=200)

    p = ps["sensitivity"]
    p.add_argument("--function", default="majority",
                   choices=("dictator", "parity", "majority", "tribes", "random"))
    p.add_argument("--d", "-d", type=int, default=9)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=0.05)

    p = ps["suite"]
    p.add_argument("--all", action="store_true")
    return parser, ps


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(action: argparse.Action, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        v = value.lower()
        if v not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {value!r}")
        return v in ("true", "1", "yes")
    return action.type(value) if action.type else value


def parse_args(argv) -> argparse.Namespace:
    parser, ps = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = ps[args.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in read_config(args.config).items():
            if key not in actions or key in ("config", "help"):
                raise ValueError(f"unknown config key {key!r}")
            defaults[key] = _coerce(actions[key], value)
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- reports

def _report(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in HIDDEN}
    results, witness = COMMANDS[args.command](args)
    rep = {"command": args.command, "statement": STATEMENTS[args.command],
           "params": params, "results": results, "pass": witness is None}
    if witness is not None:
        rep["witness"] = witness
    return rep


def _flatten(obj, prefix: str, rows: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k), rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(v, f"{prefix}.{i}", rows)
    else:
        rows.append((prefix, obj))


def render(rep: dict, fmt: str) -> str:
    text = serialize.dumps(rep)
    if fmt == "json":
        return text + "\n"
    plain = json.loads(text)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if plain["command"] == "edit":
        w.writerow(EDIT_CSV)
        r = plain["results"]
        if "pass" not in r:
            r = dict(r, d=plain["params"]["d"], samples=None, mean=None, ci99=None,
                     bound=r.get("value"), k=None)
            r["pass"] = plain["pass"]
        if "holds" in r:
            r = {"d": r["d"], "mean": r["max_count"], "bound": r["bound"], "pass": r["holds"]}
        w.writerow(["" if r.get(c) is None else r.get(c) for c in EDIT_CSV])
        return buf.getvalue()
    w.writerow(("key", "value"))
    rows: list = []
    _flatten({k: plain[k] for k in ("command", "pass", "params", "results", "witness") if k in plain},
             "", rows)
    w.writerows(rows)
    return buf.getvalue()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        sampling.set_threads(max(1, args.threads))
        rep = _report(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (CapacityError, PreconditionError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"nonembed: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, AssertionError) as exc:
        rep = {"command": argv[0] if argv else "", "pass": False,
               "witness": {"error": type(exc).__name__, "message": str(exc)}}
        sys.stdout.write(serialize.dumps(rep) + "\n")
        return 1
    sys.stdout.write(render(rep, args.format))
    return 0 if rep["pass"] else 1


__all__ = ["build_parser", "parse_args", "read_config", "render", "main", "suite_plan",
           "STATEMENTS", "EDIT_CSV"]
