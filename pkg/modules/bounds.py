from core.cache import best_known, cached_entries
from core.construct import bound_table
from core.errors import InvalidInputError
from core.schemas import COLUMNS
from core.session import GREEN, RESET


class Bounds:
    help = (
        "bounds: Table of analytic bounds on the minimum cover size, per n.\n"
        "Usage: bounds [--nmin A] [--nmax B] [--lambda L] [--out bounds.csv]\n"
        "Columns: n, lambda, pigeonhole_lower, thm2_upper, thm3_upper, best_known.\n"
        "best_known is the smallest verified certificate in the cache."
    )

    def add_arguments(self, parser):
        parser.add_argument("--nmin", type=int, default=1)
        parser.add_argument("--nmax", type=int, default=10)
        parser.add_argument("--lambda", dest="lam", type=int, default=1)
        parser.add_argument("--out", help="CSV output file")

    def best_known(self, n, lam):
        config = self.cli.config
        if not config.use_cache or n > config.max_n:
            return None
        if not cached_entries(config.cache_dir, n, lam):
            return None
        cert = best_known(self.cli.coverage_graph(n), lam, config.cache_dir)
        return cert.size if cert else None

    def run(self, args):
        if args.nmin < 1 or args.nmax < args.nmin:
            raise InvalidInputError(f"bad n range {args.nmin}..{args.nmax}")
        if args.lam < 1:
            raise InvalidInputError("--lambda must be >= 1")

        rows = []
        print(f"{GREEN}[bounds]{RESET} lambda={args.lam}")
        print(f"  {'n':>3} {'lower':>10} {'thm2 upper':>14} {'thm3 upper':>14} {'best':>6}")
        for n in range(args.nmin, args.nmax + 1):
            table = bound_table(n, args.lam)
            best = self.best_known(n, args.lam)
            rows.append([n, args.lam, table.pigeonhole_lower, table.thm2_upper,
                         table.thm3_upper, best])
            thm3 = "-" if table.thm3_upper is None else f"{table.thm3_upper:14.3f}"
            print(f"  {n:>3} {table.pigeonhole_lower:>10} {table.thm2_upper:14.3f} "
                  f"{thm3:>14} {'-' if best is None else best:>6}")

        self.cli.emit_csv("bounds", COLUMNS["bounds"], rows, args.out)
        return rows
