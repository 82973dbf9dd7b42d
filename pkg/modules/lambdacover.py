class Lambdacover:
    command = "lambda"
    help = (
        "lambda: Random lambda-cover (every pattern covered at least lambda times).\n"
        "Usage: lambda --n N --lambda L [--seed S] [--draws Y] [--out FILE.json]\n"
        "Shorthand for 'solve --method lambda'. Needs lambda >= 2, and n >= 3 unless\n"
        "--draws is given."
    )

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True)
        parser.add_argument("--lambda", dest="lam", type=int, required=True)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--draws", type=int, default=None)
        parser.add_argument("--out", help="Certificate JSON file")

    def run(self, args):
        solver = self.cli.modules["solve"]
        solver.solve(args.n, args.lam, "lambda", seed=args.seed, draws=args.draws, out=args.out)
