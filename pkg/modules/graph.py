from core.coverage import identity_checks, lemma5_audit, lemma5_sampled_audit
from core.errors import ResourceLimitError, VerificationError
from core.session import GREEN, RED, RESET, YELLOW


class Graph:
    help = (
        "graph: Build the pattern/cover incidence graph of S_n and S_{n+1}.\n"
        "Usage: graph --n N [--audit] [--sample-pairs K --seed S] [--dot FILE] [--out FILE.json]\n"
        "--audit runs the joint-coverage audit over every ordered pair of patterns\n"
        "(sampled pairs above the exhaustive limit) and exits 1 on any violation.\n"
        "--dot writes the incidence graph in DOT format for small n."
    )

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True)
        parser.add_argument("--audit", action="store_true")
        parser.add_argument("--sample-pairs", type=int, default=None)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--dot", help="DOT output file")
        parser.add_argument("--out", help="JSON output file")

    def run(self, args):
        config = self.cli.config
        g = self.cli.coverage_graph(args.n)
        checks = identity_checks(g)

        print(f"{GREEN}[graph]{RESET} {g!r}")
        print(f"  {YELLOW}every pattern has n^2+1 covers:{RESET}  {checks['uniform_cover_degree']}")
        print(f"  {YELLOW}succession identity:{RESET}             {checks['succession_identity']}")
        print(f"  {YELLOW}double counting:{RESET}                 {checks['double_count']}")
        print(f"  {YELLOW}adjacency duality:{RESET}               {checks['duality']}")

        if args.dot:
            if args.n > config.dot_max_n:
                raise ResourceLimitError(
                    f"DOT export limited to n <= {config.dot_max_n}", limit=config.dot_max_n
                )
            self.graph.update(g.to_networkx())
            self.cli.exportgraph(args.dot)

        broken = [k for k in ("uniform_cover_degree", "succession_identity", "double_count", "duality")
                  if not checks[k]]
        if not args.audit:
            payload = {
                "n": g.n,
                "n_patterns": g.n_patterns,
                "n_covers": g.n_covers,
                "identities": checks,
            }
            self.cli.emit("graph", payload, args.out)
            if broken:
                raise VerificationError(f"identity checks failed: {', '.join(broken)}")
            return

        if args.n <= config.audit_max_n:
            report = lemma5_audit(g, budget=config.audit_max_n)
        elif args.sample_pairs:
            report = lemma5_sampled_audit(g, args.sample_pairs, args.seed)
        else:
            raise ResourceLimitError(
                f"exhaustive audit limited to n <= {config.audit_max_n}; pass --sample-pairs",
                limit=config.audit_max_n,
            )

        label = f"sampled audit ({report.sample_size} pairs)" if report.sampled else "audit"
        print(f"\n{GREEN}[{label}]{RESET}")
        if not report.sampled:
            print(f"  {YELLOW}max |J|:{RESET}  {report.max_J} at {report.argmax_J} "
                  f"(n^3 = {g.n ** 3})")
        print(f"  {YELLOW}max |C|:{RESET}  {report.max_C}")
        print(f"  {YELLOW}pairs with |C| = 4:{RESET} {report.four_cover_pair_count}")
        for reading, holds in report.readings.items():
            print(f"  {YELLOW}adjacent swap ({reading}):{RESET} {holds}")

        payload = report.to_dict()
        payload["identities"] = checks
        violations = payload["violations"] + [f"identity check failed: {k}" for k in broken]
        payload["violations"] = violations
        self.cli.emit("audit", payload, args.out)
        if violations:
            for v in violations:
                print(f"{RED}Violation:{RESET} {v}")
            raise VerificationError(f"{len(violations)} audit violation(s)")
