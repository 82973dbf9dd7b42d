from core.session import GREEN, RESET, YELLOW
from core.threshold import (
    EXACT_ENUMERATION_MAX_COVERS,
    SAMPLERS,
    exact_distribution,
    gap_experiment,
    gap_p_paper,
    p_for_mean,
    tv_distance,
)


class Gap:
    help = (
        "gap: Compare the law of the uncovered count X with Poisson(E[X]) at one p.\n"
        "Usage: gap --n N (--K REAL | --lambda-target REAL | --p REAL) --trials T --seed S\n"
        "           [--sampler binomial|bernoulli] [--out gap.json]\n"
        "--K uses the asymptotic window parametrisation, --lambda-target solves\n"
        "E[X] = target exactly. Reports TV distance, moments and the Stein-Chen bound."
    )

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True)
        where = parser.add_mutually_exclusive_group(required=True)
        where.add_argument("--K", type=float)
        where.add_argument("--lambda-target", type=float)
        where.add_argument("--p", type=float)
        parser.add_argument("--trials", type=int, default=20000)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--sampler", choices=SAMPLERS, default="binomial")
        parser.add_argument("--out", help="JSON output file")

    def run(self, args):
        config = self.cli.config
        g = self.cli.coverage_graph(args.n)
        if args.K is not None:
            p = gap_p_paper(args.n, args.K)
        elif args.lambda_target is not None:
            p = p_for_mean(args.n, args.lambda_target)
        else:
            p = args.p

        print(f"Running {args.trials} trials at p={p:.6f}...\n")
        report = gap_experiment(
            g, p, args.trials, args.seed,
            workers=config.workers, K=args.K, pair_max_n=config.pair_max_n,
            sampler=args.sampler,
        )
        payload = report.to_dict()
        if g.n_covers <= EXACT_ENUMERATION_MAX_COVERS:
            payload["tv_to_exact"] = tv_distance(report.empirical_pmf, exact_distribution(g, p))

        print(f"{GREEN}[gap]{RESET} n={report.n} p={report.p:.6f}")
        print(f"  {YELLOW}E[X] exact:{RESET}        {report.lambda_exact:.5f}")
        print(f"  {YELLOW}mean / var (MC):{RESET}   {report.empirical_mean:.5f} / "
              f"{report.empirical_variance:.5f}")
        if report.exact_variance is not None:
            print(f"  {YELLOW}V[X] exact:{RESET}        {report.exact_variance:.5f}")
        print(f"  {YELLOW}TV to Poisson:{RESET}     {report.tv_to_poisson:.5f} "
              f"(+/- {report.tv_standard_error:.5f})")
        if report.stein_chen_bound is not None:
            print(f"  {YELLOW}Stein-Chen bound:{RESET}  {report.stein_chen_bound:.5f} "
                  f"(sharp {report.stein_chen_sharp:.5f})")
        if "tv_to_exact" in payload:
            print(f"  {YELLOW}TV to exact law:{RESET}   {payload['tv_to_exact']:.5f}")
        print(f"  {YELLOW}P(cover):{RESET}          {report.cover_probability:.4f}")
        for w in report.warnings:
            self.cli.warn(w)

        self.cli.emit("gap", payload, args.out)
        return report
