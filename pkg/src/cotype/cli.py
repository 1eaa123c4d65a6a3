"""Command-line front end.

Subcommands: tally, density, verify, simulate, zeta. Primary output is a single
deterministic document on stdout (JSON with sorted keys, or CSV/plain text where
noted); a run manifest (parameters, seed, caps, version, wall time, sha256 of the
primary output) goes to stderr as one JSON line. Exit codes: 0 success, 1 bad
arguments or domain errors, 2 resource limit, 3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .errors import CotypeError, DomainError, ResourceLimitError
from .groups import (
    AbelianPGroupType,
    aut_order,
    partitions_of,
    rank_d_mass,
)
from .lattices import (
    DEFAULT_ENUM_CAP,
    tally_cotypes,
    tally_cotypes_at_index,
)
from .qcomb import (
    DEFAULT_PERMUTATION_CAP,
    all_descent_sets,
    descent_poly_determinant,
    descent_poly_inclusion_exclusion,
    descent_poly_permutations,
    qbinom_subset_identity_holds,
    qbinom_telescope_holds,
)
from .simulate import (
    OTHER_LABEL,
    SampleConfig,
    compare_to_theory,
    rank_label,
    run_matrix_model,
    run_sublattice_model,
    type_label,
)
from .zeta import (
    cocyclic_growth_constant,
    cokernel_rank_density_local,
    corank_density,
    corank_density_local,
    corank_zeta_residue,
    local_coefficient,
    local_factor,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESOURCE = 2
EXIT_VERIFY = 3


def _default_max_matrices() -> int:
    """Default enumeration cap; COTYPE_MAX_MATRICES overrides it."""
    raw = os.environ.get("COTYPE_MAX_MATRICES")
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"COTYPE_MAX_MATRICES must be an integer, got {raw!r}")


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems exit with code 1 (2 is the resource code)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# tally
# ---------------------------------------------------------------------------


def _cmd_tally(args) -> tuple[int, str]:
    tally = tally_cotypes(args.d, args.X, method=args.method,
                          max_matrices=args.max_matrices)
    doc = tally.to_json_dict()
    if args.out:
        if args.format == "csv":
            tally.write_csv(args.out)
        else:
            tally.write_json(args.out)
    summary = {
        "d": args.d,
        "X": args.X,
        "bound": "index < X",
        "N": tally.total,
        "N_by_corank": doc["n_by_corank"],
    }
    if not args.out and args.format == "json":
        summary["rows"] = doc["rows"]
    return EXIT_OK, _dump(summary)


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------


def _cmd_density(args) -> tuple[int, str]:
    d, m, cutoff = args.d, args.m, args.cutoff
    density = corank_density(d, m, cutoff)
    residue = corank_zeta_residue(d, m, cutoff)
    spot = {
        str(p): {
            "exact_rational": str(corank_density_local(d, m, p)),
            "value": float(corank_density_local(d, m, p)),
            "matches_matrix_model": corank_density_local(d, m, p)
            == cokernel_rank_density_local(d, p, m),
        }
        for p in (2, 3, 5)
    }
    doc = {
        "d": d,
        "m": m,
        "corank_density": density.to_json_dict(),
        "corank_zeta_residue": residue.to_json_dict(),
        "local_density_spot": spot,
    }
    if m == 1 and d >= 2:
        doc["cocyclic_constant"] = cocyclic_growth_constant(d, cutoff).to_json_dict()
    return EXIT_OK, _dump(doc)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass
class CaseResult:
    case: str
    ok: bool
    detail: str = ""


def _suite_qident(args) -> list[CaseResult]:
    out = []
    for n in range(args.n + 1):
        for e in range(args.e + 1):
            ok = qbinom_telescope_holds(n, e)
            out.append(CaseResult(f"telescope(n={n}, e={e})", ok,
                                  "" if ok else "sum != 1"))
    for d in range(1, args.d + 1):
        for i in range(1, d + 1):
            ok = qbinom_subset_identity_holds(d, i)
            out.append(CaseResult(f"subset-identity(d={d}, i={i})", ok,
                                  "" if ok else "sides differ"))
    return out


def _suite_descent(args) -> list[CaseResult]:
    out = []
    for d in range(1, args.d + 1):
        total_at_one = 0
        for lam in all_descent_sets(d):
            a = descent_poly_inclusion_exclusion(lam)
            b = descent_poly_permutations(lam, cap=max(args.d, DEFAULT_PERMUTATION_CAP))
            c = descent_poly_determinant(lam)
            name = f"w(d={d}, lambda={set(lam.elements) or '{}'})"
            if not (a == b == c):
                out.append(CaseResult(name, False,
                                      f"incl-excl={a}; permutations={b}; det={c}"))
                continue
            low_ok = a.is_zero() or a.low_exponent() >= len(lam.elements)
            neg_ok = all(cf >= 0 for cf in a.coeffs)
            if not (low_ok and neg_ok):
                out.append(CaseResult(name, False, f"shape violation: {a}"))
                continue
            out.append(CaseResult(name, True))
            total_at_one += a(1)
        fact = 1
        for i in range(2, d + 1):
            fact *= i
        out.append(CaseResult(f"sum over lambda of w(d={d})(1) == {d}!",
                              total_at_one == fact,
                              "" if total_at_one == fact else f"got {total_at_one}"))
    return out


def _suite_oracle(args) -> list[CaseResult]:
    out = []
    d, p = args.d, args.p
    for e in range(args.emax + 1):
        counts = tally_cotypes_at_index(d, p**e)
        for parts in partitions_of(e, max_parts=d):
            nu = tuple(parts) + (0,) * (d - len(parts))
            predicted = local_coefficient(d, p, nu)
            alpha = tuple(p**v for v in nu)
            actual = counts.get(alpha, 0)
            ok = predicted == actual
            out.append(CaseResult(
                f"F(d={d}, p={p}, nu={nu})", ok,
                "" if ok else f"formula={predicted}, enumeration={actual}"))
    return out


def _suite_autorder(args) -> list[CaseResult]:
    out = []
    for p in (2, 3):
        emax = 0
        while p ** (emax + 1) <= args.max_order:
            emax += 1
        for size in range(emax + 1):
            for parts in partitions_of(size):
                G = AbelianPGroupType.of(p, parts)
                closed = aut_order(G, "closed_form")
                tup = aut_order(G, "tuple_identity")
                brute = aut_order(G, "brute_force", max_order=args.max_order)
                ok = closed == tup == brute
                out.append(CaseResult(
                    f"|Aut| p={p} type={parts}", ok,
                    "" if ok else f"closed={closed}, tuple={tup}, brute={brute}"))
    return out


def _suite_zidentity(args) -> list[CaseResult]:
    out = []
    for d in range(1, args.d + 1):
        for m in range(1, d + 1):
            for p in (2, 3, 5):
                lhs = cokernel_rank_density_local(d, p, m)
                rhs = corank_density_local(d, m, p)
                ok = lhs == rhs
                out.append(CaseResult(
                    f"Z(d={d}, p={p}, m={m})", ok,
                    "" if ok else f"matrix-model={lhs} != corank-density={rhs}"))
    return out


VERIFY_SUITES = {
    "qident": _suite_qident,
    "descent": _suite_descent,
    "oracle": _suite_oracle,
    "autorder": _suite_autorder,
    "zidentity": _suite_zidentity,
}


def _cmd_verify(args) -> tuple[int, str]:
    results = VERIFY_SUITES[args.suite](args)
    failures = [r for r in results if not r.ok]
    for f in failures:
        sys.stderr.write(f"COUNTEREXAMPLE {f.case}: {f.detail}\n")
    doc = {
        "suite": args.suite,
        "cases": len(results),
        "failures": [{"case": f.case, "detail": f.detail} for f in failures],
        "ok": not failures,
    }
    return (EXIT_OK if not failures else EXIT_VERIFY), _dump(doc)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _rank_theory(d: int, p: int) -> dict[str, Fraction]:
    theory = {}
    prev = Fraction(0)
    for r in range(d + 1):
        cum = cokernel_rank_density_local(d, p, r)
        theory[rank_label(r)] = cum - prev
        prev = cum
    return theory


def _type_theory(d: int, p: int, exponent_cap: int) -> dict[str, Fraction]:
    theory = {}
    total = Fraction(0)
    for size in range(exponent_cap * d + 1):
        for parts in partitions_of(size, max_parts=d, max_part=exponent_cap):
            mass = rank_d_mass(AbelianPGroupType.of(p, parts), d)
            theory[type_label(parts)] = mass
            total += mass
    theory[OTHER_LABEL] = 1 - total
    return theory


def _cmd_simulate(args) -> tuple[int, str]:
    if args.model == "matrix":
        if args.k is None:
            raise DomainError("the matrix model needs -k")
        cfg = SampleConfig(d=args.d, trials=args.n, master_seed=args.seed,
                           p=args.p, entry_bound=args.k, exhaustive=args.exhaustive)
        result = run_matrix_model(cfg)
    else:
        if args.X is None:
            raise DomainError("the sublattice model needs -X")
        cfg = SampleConfig(d=args.d, trials=args.n, master_seed=args.seed,
                           p=args.p, index_bound=args.X)
        result = run_sublattice_model(cfg)

    rank_theory = _rank_theory(args.d, args.p)
    rank_cmp = compare_to_theory(result.rank_table, rank_theory, args.z_threshold)
    type_theory = _type_theory(args.d, args.p, args.type_cap)
    type_emp = result.type_table.bucketed(
        [lbl for lbl in type_theory if lbl != OTHER_LABEL]
    )
    type_cmp = compare_to_theory(type_emp, type_theory, args.z_threshold)

    doc = {
        "config": cfg.to_json_dict(),
        "model": args.model,
        "empirical": {
            "rank": result.rank_table.to_json_dict(),
            "type": result.type_table.to_json_dict(),
        },
        "theory": {
            "rank": {k: str(v) for k, v in sorted(rank_theory.items())},
            "type": {k: str(v) for k, v in sorted(type_theory.items())},
        },
        # primary comparison (p-rank frequencies vs the exact local densities)
        "tv_distance": rank_cmp.tv_distance,
        "per_label": rank_cmp.per_label,
        "z_threshold": rank_cmp.z_threshold,
        "type_comparison": type_cmp.to_json_dict(),
        "verdict": rank_cmp.verdict and type_cmp.verdict,
    }
    if args.out:
        result.type_table.write_csv(args.out)
    return EXIT_OK, _dump(doc)


# ---------------------------------------------------------------------------
# zeta
# ---------------------------------------------------------------------------


def _cmd_zeta(args) -> tuple[int, str]:
    if args.action == "print-local":
        return EXIT_OK, local_factor(args.d).canonical_str() + "\n"
    if args.nu is None:
        raise DomainError("coeff needs --nu")
    if args.p is None:
        raise DomainError("coeff needs -p")
    nu = tuple(int(x) for x in args.nu.split(","))
    value = local_coefficient(args.d, args.p, nu)
    return EXIT_OK, _dump(
        {"d": args.d, "p": args.p, "nu": list(nu), "coefficient": value}
    )


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="cotype", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_tally = sub.add_parser(
        "tally",
        help="exact cotype tally of all sublattices of index < X "
             "(strict bound: index < X, never <=)")
    p_tally.add_argument("-d", type=int, required=True)
    p_tally.add_argument("-X", type=int, required=True,
                         help="strict upper bound on the index (counts index < X)")
    p_tally.add_argument("--format", choices=("json", "csv"), default="json")
    p_tally.add_argument("--out", default=None, help="write full rows to this path")
    p_tally.add_argument("--method", choices=("auto", "divisor", "enumerate", "full"),
                         default="auto")
    p_tally.add_argument("--max-matrices", type=int, default=DEFAULT_ENUM_CAP)
    p_tally.set_defaults(handler=_cmd_tally)

    p_density = sub.add_parser("density", help="corank densities and residues")
    p_density.add_argument("-d", type=int, required=True)
    p_density.add_argument("-m", type=int, required=True)
    p_density.add_argument("--cutoff", type=int, default=10**6)
    p_density.set_defaults(handler=_cmd_density)

    p_verify = sub.add_parser("verify", help="run an exact identity suite")
    p_verify.add_argument("suite", choices=sorted(VERIFY_SUITES))
    p_verify.add_argument("--n", type=int, default=8)
    p_verify.add_argument("--e", type=int, default=4)
    p_verify.add_argument("--d", type=int, default=6)
    p_verify.add_argument("--p", type=int, default=2)
    p_verify.add_argument("--emax", type=int, default=4)
    p_verify.add_argument("--max-order", type=int, default=64)
    p_verify.set_defaults(handler=_cmd_verify)

    p_sim = sub.add_parser("simulate", help="Monte Carlo cokernel sampling")
    p_sim.add_argument("model", choices=("matrix", "sublattice"))
    p_sim.add_argument("-d", type=int, required=True)
    p_sim.add_argument("-k", type=int, default=None, help="entry bound (matrix model)")
    p_sim.add_argument("-X", type=int, default=None, help="index bound (sublattice model)")
    p_sim.add_argument("-p", type=int, required=True)
    p_sim.add_argument("-n", type=int, default=10000, help="number of trials")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--exhaustive", action="store_true",
                       help="visit every matrix instead of sampling")
    p_sim.add_argument("--z-threshold", type=float, default=4.0)
    p_sim.add_argument("--type-cap", type=int, default=2,
                       help="largest exponent kept as its own type label")
    p_sim.add_argument("--out", default=None, help="CSV path for raw type tallies")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_zeta = sub.add_parser("zeta", help="local factors and their coefficients")
    p_zeta.add_argument("-d", type=int, required=True)
    p_zeta.add_argument("action", choices=("print-local", "coeff"))
    p_zeta.add_argument("-p", type=int, default=None)
    p_zeta.add_argument("--nu", default=None, help="comma-separated exponents")
    p_zeta.set_defaults(handler=_cmd_zeta)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    seed = getattr(args, "seed", None)
    try:
        code, output = args.handler(args)
    except ResourceLimitError as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except (DomainError, CotypeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    sys.stdout.write(output)
    sys.stdout.flush()
    manifest = {
        "subcommand": args.command,
        "parameters": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("handler", "command") and not callable(v)
        },
        "seed": seed,
        "caps": {
            "max_matrices": getattr(args, "max_matrices", None),
            "permutation_cap": DEFAULT_PERMUTATION_CAP,
        },
        "version": __version__,
        "wall_time_s": round(time.time() - started, 6),
        "output_sha256": hashlib.sha256(output.encode()).hexdigest(),
    }
    sys.stderr.write(json.dumps(manifest, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
