"""Risk table for the two-clique simulation (r=30, cliques of 20 and 15 sharing 5)."""
import argparse
from dataclasses import dataclass, field

from flexcov.simulate.risk import SimConfig, run_risk


@dataclass
class Experiment:
    c1: int = 20
    c2: int = 15
    s: int = 5
    sample_sizes: tuple = (25, 50, 75, 100)
    replications: int = 500
    seed: int = 42
    workers: int = 1
    estimators: tuple = field(default=("mle", "mle_g", "reference", "hiw:3", "hiw:3:D",
                                       "iwpg-prop:0.25:D", "iwpg-prop:1:D", "eb1:D", "eb2:D"))

    def config(self):
        r = self.c1 + self.c2 - self.s
        cliques = [list(range(1, self.c1 + 1)), list(range(self.c1 - self.s + 1, r + 1))]
        return SimConfig(graph={"vertices": r, "cliques": cliques}, estimators=self.estimators,
                         sample_sizes=self.sample_sizes, replications=self.replications,
                         seed=self.seed)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replications", type=int, default=Experiment.replications)
    ap.add_argument("--seed", type=int, default=Experiment.seed)
    ap.add_argument("--workers", type=int, default=Experiment.workers)
    args = ap.parse_args()
    exp = Experiment(replications=args.replications, seed=args.seed, workers=args.workers)
    print(run_risk(exp.config(), exp.workers).to_text(), end="")


if __name__ == "__main__":
    main()
