from core.cache import cache_key, cache_load, cache_store
from core.construct import (
    alteration_cover,
    exact_min_cover,
    external_min_cover,
    greedy_cover,
    lambda_cover,
    verify_cover,
)
from core.errors import InvalidInputError, VerificationError
from core.session import CYAN, GREEN, RED, RESET, YELLOW

# CLI method name -> certificate method name
METHODS = {
    "exact": "exact",
    "greedy": "greedy",
    "alteration": "alteration",
    "lambda": "lambda-sample",
    "external": "external",
}
SEEDED = ("alteration", "lambda")


class Solve:
    help = (
        "solve: Construct a lambda-cover of S_n by (n+1)-permutations and certify it.\n"
        "Usage: solve --n N [--lambda L] --method exact|greedy|alteration|lambda|external\n"
        "             [--seed S] [--budget SECONDS] [--draws Y] [--out FILE.json]\n"
        "Exact and external methods prove optimality within the budget; the others\n"
        "return verified feasible covers. Certificates are cached per\n"
        "(n, lambda, method, seed)."
    )

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True)
        parser.add_argument("--lambda", dest="lam", type=int, default=1)
        parser.add_argument("--method", choices=sorted(METHODS), default="exact")
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--budget", type=float, default=None, help="Seconds (exact, external)")
        parser.add_argument("--draws", type=int, default=None,
                            help="Initial random draws Y (alteration, lambda)")
        parser.add_argument("--out", help="Certificate JSON file")

    def run(self, args):
        self.solve(args.n, args.lam, args.method, args.seed, args.budget, args.draws, args.out)

    def solve(self, n, lam, method, seed=None, budget=None, draws=None, out=None):
        config = self.cli.config
        if method in SEEDED and seed is None:
            seed = 0
        if method not in SEEDED:
            seed = None
        if method == "alteration" and lam != 1:
            raise InvalidInputError("method 'alteration' builds single covers; use --method lambda")
        g = self.cli.coverage_graph(n)
        budget = config.budget_seconds if budget is None else budget

        key = cache_key(n, lam, METHODS[method], seed)
        cert = None
        if config.use_cache and draws is None:
            cert = cache_load(key, g, config.cache_dir)
            if cert is not None and method in ("exact", "external") and cert.status != "optimal":
                cert = None
            if cert is not None:
                print(f"{CYAN}Cache hit:{RESET} {key}")

        fresh = cert is None
        if fresh:
            print(f"Solving n={n} lambda={lam} with method '{method}'...\n")
            if method == "exact":
                cert = exact_min_cover(g, lam, time_budget=budget)
            elif method == "external":
                cert = external_min_cover(g, lam, time_budget=budget)
            elif method == "greedy":
                cert = greedy_cover(g, lam)
            elif method == "alteration":
                cert = alteration_cover(g, seed, Y=draws)
            else:
                cert = lambda_cover(g, lam, seed, Y=draws)

        result = None
        if cert.status != "infeasible-budget":
            result = verify_cover(g, cert.selected, lam)
        if fresh and config.use_cache and draws is None and result is not None and result.ok:
            path = cache_store(cert, config.cache_dir, key)
            self.cli.log(f"cached certificate {path}")

        print(f"{GREEN}[solve]{RESET} n={n} lambda={lam} method={cert.method}")
        print(f"  {YELLOW}status:{RESET}      {cert.status}")
        print(f"  {YELLOW}size:{RESET}        {cert.size}")
        print(f"  {YELLOW}lower bound:{RESET} {cert.lower_bound}")
        if cert.size <= 12:
            print(f"  {YELLOW}selected:{RESET}    {', '.join(cert.selected.labels())}")
        for note in cert.notes:
            print(f"  {YELLOW}note:{RESET}        {note}")

        self.cli.emit("certificate", cert.to_dict(), out)
        if result is not None and not result.ok:
            print(f"{RED}Verification failed:{RESET} {result.labelled(g)[:10]}")
            raise VerificationError(
                f"certificate leaves {len(result.deficient)} patterns under-covered"
            )
        if cert.status == "infeasible-budget":
            self.cli.warn(f"no cover found within {budget:g}s")
        return cert
