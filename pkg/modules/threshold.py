import math

import numpy as np

from core.errors import InvalidInputError
from core.session import GREEN, RESET, YELLOW
from core.threshold import SweepReport, p_for_mean, threshold_sweep

# default sweep runs from exact mean 20 down to 0.05
MEAN_HIGH = 20.0
MEAN_LOW = 0.05


class Threshold:
    help = (
        "threshold: Monte Carlo cover probability of a Bernoulli(p) selection over a p grid.\n"
        "Usage: threshold --n N [--pmin A --pmax B] [--steps K] --trials T --seed S\n"
        "                 [--omega W] [--out sweep.csv]\n"
        "Without --pmin/--pmax the grid spans exact mean 20 down to 0.05.\n"
        "CSV columns: p, covers, trials, phat, ci_lo, ci_hi, lambda_exact."
    )

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True)
        parser.add_argument("--pmin", type=float, default=None)
        parser.add_argument("--pmax", type=float, default=None)
        parser.add_argument("--steps", type=int, default=21)
        parser.add_argument("--trials", type=int, default=1000)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--omega", type=float, default=None)
        parser.add_argument("--out", help="CSV output file")

    def grid(self, n, pmin, pmax, steps):
        if steps < 1:
            raise InvalidInputError("--steps must be >= 1")
        top = math.factorial(n)
        if pmin is None:
            pmin = p_for_mean(n, min(MEAN_HIGH, top))
        if pmax is None:
            pmax = p_for_mean(n, min(MEAN_LOW, top))
        if pmin > pmax:
            raise InvalidInputError(f"--pmin {pmin} is above --pmax {pmax}")
        return np.linspace(pmin, pmax, steps)

    def run(self, args):
        g = self.cli.coverage_graph(args.n)
        grid = self.grid(args.n, args.pmin, args.pmax, args.steps)
        print(f"Sweeping {len(grid)} values of p with {args.trials} trials each...\n")
        report = threshold_sweep(
            g, grid, args.trials, args.seed, workers=self.cli.config.workers, omega=args.omega
        )

        print(f"{GREEN}[threshold]{RESET} n={report.n}")
        print(f"  {'p':>10} {'phat':>8} {'95% CI':>19} {'E[X]':>10}")
        for row in report.rows:
            print(f"  {row.p:10.5f} {row.phat:8.4f} [{row.ci_lo:.4f}, {row.ci_hi:.4f}] "
                  f"{row.lambda_exact:10.4f}")
        for name, bounds in report.boundaries.items():
            print(f"  {YELLOW}{name}:{RESET} p_zero={bounds['p_zero']:.5f} "
                  f"p_one={bounds['p_one']:.5f}")

        self.cli.emit_csv("sweep", SweepReport.COLUMNS, report.csv_rows(), args.out)
        return report
