"""Command-line entry point: ``hocbates price|converge|stability|feller|hedge``.

Exit codes: 0 success, 2 invalid input, 3 numerical blow-up while pricing.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, build_run_config, load_config
from .greeks import delta_surface
from .harness import (
    FELLER_H, STABILITY_RATIOS, STANDARD_H, convergence_study, feller_study, hedge_experiment,
    stability_sweep, write_feller_csv,
)
from .solver import NumericalBlowUp, price_surface

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags override it")
    common.add_argument("--scheme", choices=("hoc", "fd2"))
    common.add_argument("--h-ref", dest="h_ref", type=float)
    common.add_argument("--ratio", type=float, nargs="+", help="parabolic mesh ratio k/h^2")
    common.add_argument("--transform", choices=("paper-literal", "consistent"))
    common.add_argument("--dirichlet", choices=("classic", "consistent"), help="left boundary data")
    common.add_argument("--tail", choices=("payoff", "consistent"), help="jump integrand left of the grid")
    common.add_argument("--out", help="CSV output path")
    common.add_argument("--workers", type=int, help="processes for independent runs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hocbates", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    price = sub.add_parser("price", parents=[common], help="price one surface")
    price.add_argument("--h", type=float)
    price.add_argument("--delta-out", help="also write Delta to this CSV")
    for name, hs, text in (("converge", STANDARD_H, "mesh-refinement study"),
                           ("stability", STANDARD_H, "parabolic-ratio sweep"),
                           ("feller", FELLER_H, "Feller-regime convergence"),
                           ("hedge", STANDARD_H, "Delta-hedge portfolio errors")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--h", type=float, nargs="+", default=list(hs))
        if name == "hedge":
            sp.add_argument("--bump", type=float, help="relative asset move, e.g. 0.005")
    return p


def _run_config(args):
    pairs = load_config(args.config) if args.config else {}
    overrides = {"scheme": args.scheme, "h_ref": args.h_ref, "transform": args.transform,
                 "dirichlet": args.dirichlet, "tail": args.tail, "workers": args.workers,
                 "bump": getattr(args, "bump", None)}
    if args.command == "price" and args.h is not None:
        overrides["h"] = args.h
    if args.ratio and args.command != "stability":
        if len(args.ratio) != 1:
            raise ConfigError("--ratio takes a single value here")
        overrides["ratio"] = args.ratio[0]
    if args.command != "price" and "h" not in pairs:
        overrides["h"] = min(args.h)  # the base grid must divide the extents at every h
    pairs.update({k: str(v) for k, v in overrides.items() if v is not None})
    return build_run_config(pairs)


def _emit(obj, path) -> None:
    if path:
        obj.to_csv(path)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        run = _run_config(args)
        cfg = run.solver
        if args.command == "price":
            surf = price_surface(cfg)
            _emit(surf, args.out)
            if args.delta_out:
                delta_surface(surf).to_csv(args.delta_out)
            g, p = surf.grid, surf.params
            print(f"{cfg.scheme} h={g.h} nodes={g.size} steps={g.n_steps} "
                  f"factorisations={surf.factorizations} time={surf.wall_time:.3f}s")
            y_atm = min(g.y, key=lambda y: abs(y - p.theta / p.vol_of_vol))
            print(f"V(S=K, sigma={p.vol_of_vol * y_atm:.6g}) = {surf.values()[g.y_index(y_atm), g.N]:.10g}")
        elif args.command == "converge":
            rep = convergence_study(cfg, args.h, run.h_ref, workers=run.workers)
            _emit(rep, args.out)
            for r in rep.rows:
                print(f"h={r.h:<6g} dof={r.dof:<7d} l2={r.l2_error:.4e} linf={r.linf_error:.4e} time={r.wall_time:.3f}s")
            print(f"slope l2={rep.l2_slope:.3f} linf={rep.linf_slope:.3f}")
        elif args.command == "stability":
            ratios = args.ratio or list(STABILITY_RATIOS)
            table = stability_sweep(cfg, ratios, args.h, run.h_ref, workers=run.workers)
            _emit(table, args.out)
            print("ratio " + " ".join(f"h={h:<10g}" for h in table.h_set))
            for a, q in enumerate(table.ratios):
                cells = ("blow-up   " if table.blew_up[a, b] else f"{table.l2[a, b]:.4e}" for b in range(len(table.h_set)))
                print(f"{q:<5g} " + "   ".join(cells))
        elif args.command == "feller":
            results = feller_study(cfg, args.h, run.h_ref, workers=run.workers)
            if args.out:
                write_feller_csv(results, args.out)
            for res in results:
                print(f"theta={res.theta} v={res.vol_of_vol} feller={res.feller} "
                      f"slope l2={res.report.l2_slope:.3f} linf={res.report.linf_slope:.3f}")
        elif args.command == "hedge":
            rep = hedge_experiment(cfg, args.h, run.bump, run.h_ref, workers=run.workers)
            _emit(rep, args.out)
            for name, rows in rep.schemes.items():
                for r in rows:
                    print(f"{name:<12} h={r.h:<6g} up={r.up_error_pct:.4e}% down={r.down_error_pct:.4e}%")
    except NumericalBlowUp as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
