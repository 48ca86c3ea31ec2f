"""Command line interface: ``siclab {search,verify,analyze,schmidt,group,census}``.

Exit status: 0 success, 1 usage or input error, 2 negative analytic result.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import analysis, clifford, schmidt, search, store
from .whgroup import make_context

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    env = os.environ.get("SIC_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"SIC_LAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _emit(args, obj: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(obj, sort_keys=True, default=_json_default))
    else:
        print(text)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _check_dimension(d: int, minimum: int = 1) -> None:
    if d < minimum:
        raise UsageError(f"dimension must be >= {minimum}, got {d}")


def _load(path: str) -> store.SolutionRecord:
    try:
        return store.read_fiducial(path)
    except store.FormatError as exc:
        raise UsageError(str(exc)) from None


def _keys_json(gens) -> list:
    return [[g.det_sign, [list(r) for r in g.F], list(g.p)] for g in gens]


# --- search -----------------------------------------------------------------------

def cmd_search(args) -> int:
    _check_dimension(args.d)
    ctx = make_context(args.d)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    sub = None
    if args.symmetry != "none":
        _check_dimension(args.d, 2)
        try:
            g = clifford.named_symmetry(ctx, args.symmetry)
            sub = search.restrict_to_symmetry(ctx, g, args.eig)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    config = search.SearchConfig(args.d, sub, args.restarts, args.max_iter, args.grad_tol,
                                 args.accept_tol, seed)
    threads = args.threads or _default_threads()
    outcomes = search.run_search(ctx, config, workers=threads)
    outdir = Path(args.output) if args.output else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    found = 0
    for out in outcomes:
        if not out.converged:
            continue
        rep = analysis.verify_sic(ctx, out.fiducial, args.tol)
        if not rep.passed:
            continue
        found += 1
        rec = store.SolutionRecord(args.d, out.fiducial, label=f"d{args.d}-t{out.trial_index}",
                                   cost_gap=out.cost_gap, seed=seed, trial=out.trial_index)
        if outdir:
            store.write_fiducial(rec, outdir / f"d{args.d}_s{seed}_t{out.trial_index}.txt")
            store.catalog_append(rec, outdir / "catalog.jsonl")
        _emit(args, rec.to_json(),
              f"trial {out.trial_index}: cost gap {out.cost_gap:.3e}, "
              f"overlap deviation {rep.max_overlap_deviation:.3e}, iterations {out.iterations}")
        if args.first:
            break
    print(f"{found} verified fiducial(s) from {len(outcomes)} restart(s)", file=sys.stderr)
    return EXIT_OK if found else EXIT_NEGATIVE


# --- verify -------------------------------------------------------------------------

def cmd_verify(args) -> int:
    rec = _load(args.file)
    ctx = make_context(rec.d)
    rep = analysis.verify_sic(ctx, rec.vector, args.tol)
    obj = {"d": rec.d, "passed": rep.passed, "tol": rep.tol,
           "max_overlap_deviation": rep.max_overlap_deviation, "cost_gap": rep.cost_gap,
           "design_defect_t1": rep.design_defect_t1, "design_defect_t2": rep.design_defect_t2,
           "inversion_error": rep.inversion_error}
    text = "\n".join([
        f"d = {rec.d}",
        f"max overlap deviation  {rep.max_overlap_deviation:.3e}",
        f"cost gap               {rep.cost_gap:.3e}",
        f"2-design defect        {rep.design_defect_t2:.3e}",
        f"state inversion error  {rep.inversion_error:.3e}",
        f"{'PASS' if rep.passed else 'FAIL'} at tol {args.tol:g}",
    ])
    _emit(args, obj, text)
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


# --- analyze -------------------------------------------------------------------------

def _parse_orders(s: str) -> list[int]:
    try:
        orders = [int(x) for x in s.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"--count expects comma-separated integers, got {s!r}") from None
    if not orders or any(o <= 0 for o in orders):
        raise UsageError("--count expects positive stabiliser orders")
    return orders


def cmd_analyze(args) -> int:
    if not args.files and not args.count:
        raise UsageError("analyze needs fiducial file(s) and/or --count")
    records = [_load(f) for f in args.files]
    status = EXIT_OK
    for path, rec in zip(args.files, records):
        ctx = make_context(rec.d)
        try:
            stab = analysis.stabilizer(ctx, rec.vector, args.strategy)
        except analysis.PreconditionError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = EXIT_NEGATIVE
            continue
        zc = analysis.zauner_class(ctx, rec.vector, stab)
        real = analysis.realness_check(ctx, rec.vector)
        real_orbit = None
        if rec.d <= 8:
            real_orbit = analysis.real_in_orbit(ctx, rec.vector) is not None
        fp = analysis.triple_fingerprint(ctx, rec.vector)
        obj = {"file": path, "d": rec.d, "stabilizer_order": stab.order, "strategy": stab.strategy,
               "stabilizer_generators": _keys_json(stab.generators),
               "preimage_order": stab.preimage_order, "zauner_stabilized": zc.stabilized,
               "zauner_class": zc.k, "real": real, "real_in_orbit": real_orbit,
               "fingerprint": fp.digest(), "orbit_size": analysis.orbit_size(ctx, stab)}
        gens = "; ".join(f"[{g.F}|{g.p}]{'*' if g.antiunitary else ''}" for g in stab.generators)
        text = "\n".join([
            f"{path}: d = {rec.d}",
            f"  stabiliser order {stab.order} ({stab.strategy}), generators {gens or '-'}",
            f"  Zauner class: {'Z_%d' % zc.k if zc.stabilized else 'not Z-stabilised'}",
            f"  real: {real}" + (f", real vector in orbit: {real_orbit}" if real_orbit is not None else ""),
            f"  fingerprint {fp.digest()}",
        ])
        _emit(args, obj, text)
    if len(records) == 2 and status == EXIT_OK:
        if records[0].d != records[1].d:
            raise UsageError("orbit comparison needs two fiducials of the same dimension")
        verdict = analysis.orbits_equivalent(make_context(records[0].d), records[0].vector,
                                             records[1].vector)
        _emit(args, {"orbits_equivalent": verdict}, f"orbits: {verdict}")
    if args.count:
        d = args.d or (records[0].d if records else None)
        if d is None:
            raise UsageError("--count needs -d or an input file")
        _check_dimension(d, 2)
        try:
            n = analysis.count_sics(d, _parse_orders(args.count))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        _emit(args, {"d": d, "sic_count": n}, f"number of SIC-POVMs in d = {d}: {n}")
    return status


# --- schmidt / group / census ----------------------------------------------------------

def cmd_schmidt(args) -> int:
    rec = _load(args.file)
    ctx = make_context(rec.d)
    if args.d1:
        if rec.d % args.d1:
            raise UsageError(f"{args.d1} does not divide d = {rec.d}")
        pairs = [(args.d1, rec.d // args.d1)]
    else:
        pairs = schmidt.coprime_factorizations(rec.d)
        if not pairs:
            raise UsageError(f"d = {rec.d} has no coprime bipartition")
    try:
        reports = [schmidt.schmidt_coefficients(ctx, rec.vector, a, b) for a, b in pairs]
    except analysis.PreconditionError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NEGATIVE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for r in reports:
        _emit(args, {"d1": r.d1, "d2": r.d2, "coefficients": r.coefficients, "sum_sq": r.sum_sq,
                     "identity_residual": r.identity_residual},
              f"{r.d1} x {r.d2}: lambda = {np.array2string(r.coefficients, precision=12)}, "
              f"sum lambda^2 = {r.sum_sq:.12f} (residual {r.identity_residual:.2e})")
    return EXIT_OK


def cmd_group(args) -> int:
    _check_dimension(args.d, 2)
    pc, pec = clifford.group_orders(args.d)
    dims = clifford.zauner_dims(args.d)
    syms = clifford.available_symmetries(args.d)
    obj = {"d": args.d, "PC": pc, "PEC": pec, "PEC_over_d2": pec // args.d ** 2,
           "zauner_dims": list(dims), "symmetries": syms}
    text = "\n".join([
        f"d = {args.d}",
        f"|PC(d)|  = {pc}",
        f"|PEC(d)| = {pec}   (|PEC|/d^2 = {pec // args.d ** 2})",
        f"Zauner eigenspace dimensions: {', '.join(map(str, dims))}",
        f"named symmetries: {', '.join(syms)}",
    ])
    _emit(args, obj, text)
    return EXIT_OK


def cmd_census(args) -> int:
    _check_dimension(args.d, 2)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    ctx = make_context(args.d)
    catalog = Path(args.output) if args.output else None

    def on_orbit(orb, stab):
        if catalog:
            fp = analysis.triple_fingerprint(ctx, orb.representative).digest()
            store.catalog_append(store.SolutionRecord(
                args.d, orb.representative, label=f"d{args.d}-orbit{orb.first_trial}",
                stabilizer_order=stab.order, stabilizer_generators=_keys_json(stab.generators),
                fingerprint=fp, seed=seed, trial=orb.first_trial), catalog)

    try:
        report = analysis.census(ctx, search.SearchConfig(args.d, seed=seed),
                                 max_trials=args.max_trials, workers=args.threads or _default_threads(),
                                 on_orbit=on_orbit)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    orbits = [{"first_trial": o.first_trial, "stabilizer_order": o.stabilizer_order, "hits": o.hits}
              for o in report.orbits]
    obj = {"d": args.d, "seed": seed, "orbits": orbits, "trials": report.trials,
           "converged": report.converged, "complete": report.complete}
    lines = [f"d = {args.d}: {len(report.orbits)} orbit(s) after {report.trials} trials "
             f"({report.converged} converged), {'complete' if report.complete else 'INCOMPLETE'}"]
    lines += [f"  orbit {i}: |S| = {o['stabilizer_order']}, first seen at trial {o['first_trial']}, "
              f"{o['hits']} hit(s)" for i, o in enumerate(orbits)]
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK if report.complete else EXIT_NEGATIVE


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="siclab", description="Search, verify and classify Weyl-Heisenberg SIC fiducials.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("search", help="find fiducial vectors")
    sp.add_argument("-d", type=int, required=True)
    sp.add_argument("--symmetry", choices=("none", "fz", "fa", "fb", "fc"), default="none")
    sp.add_argument("--eig", type=int, default=0, help="eigenvalue index of the symmetry")
    sp.add_argument("--restarts", type=int, default=None, help="default 20 d")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--max-iter", type=int, default=5000)
    sp.add_argument("--grad-tol", type=float, default=1e-9)
    sp.add_argument("--accept-tol", type=float, default=1e-12)
    sp.add_argument("--tol", type=float, default=1e-10, help="overlap deviation for verification")
    sp.add_argument("--first", action="store_true", help="stop reporting after the first solution")
    sp.add_argument("-o", "--output", help="directory for fiducial files and catalog.jsonl")
    sp.add_argument("--threads", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("verify", help="check a fiducial file")
    sp.add_argument("file")
    sp.add_argument("--tol", type=float, default=1e-9)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("analyze", help="stabiliser, Zauner class, realness, fingerprint")
    sp.add_argument("files", nargs="*")
    sp.add_argument("-d", type=int, default=None)
    sp.add_argument("--count", help="comma-separated stabiliser orders, one per orbit")
    sp.add_argument("--strategy", choices=("auto", "exhaustive", "targeted"), default="auto")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("schmidt", help="Schmidt coefficients across coprime bipartitions")
    sp.add_argument("file")
    sp.add_argument("--d1", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_schmidt)

    sp = sub.add_parser("group", help="Clifford group orders and Zauner eigenspace dimensions")
    sp.add_argument("-d", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_group)

    sp = sub.add_parser("census", help="collect orbits until the stopping rule fires (d <= 10)")
    sp.add_argument("-d", type=int, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--max-trials", type=int, default=20000)
    sp.add_argument("-o", "--output", help="catalog file for orbit representatives")
    sp.add_argument("--threads", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_census)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("restarts", "threads", "max_iter", "max_trials"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            print(f"siclab: error: --{name.replace('_', '-')} must be >= 1", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"siclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
