"""Mean eigenvalues of the estimators against the truth and S (writes a CSV)."""
import argparse
from dataclasses import dataclass

from flexcov.simulate.risk import SimConfig, run_risk


@dataclass
class Experiment:
    n: int = 100
    replications: int = 200
    seed: int = 7
    estimators: tuple = ("mle_g", "reference", "hiw:3", "iwpg-prop:0.25:D")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="scree.csv")
    ap.add_argument("--n", type=int, default=Experiment.n)
    args = ap.parse_args()
    exp = Experiment(n=args.n)
    cfg = SimConfig(graph={"vertices": 30, "cliques": [list(range(1, 21)), list(range(16, 31))]},
                    estimators=exp.estimators, sample_sizes=(exp.n,),
                    replications=exp.replications, seed=exp.seed, scree=True)
    tab = run_risk(cfg)
    with open(args.out, "w") as fh:
        fh.write(tab.scree_csv())
    ev = tab.scree[exp.n]
    for name in ("truth", "sample") + exp.estimators:
        print(f"{name:<18} largest {ev[name][0]:8.3f}  smallest {ev[name][-1]:7.4f}")


if __name__ == "__main__":
    main()
