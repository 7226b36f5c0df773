"""How often the marginal likelihood recovers a band-3 precision as n grows."""
import argparse
from dataclasses import dataclass

import numpy as np

from flexcov.modelselect import select_banded
from flexcov.simulate.sampling import sample_data


@dataclass
class Experiment:
    r: int = 30
    lags: tuple = (0.35, 0.25, 0.15)
    kmax: int = 8
    sample_sizes: tuple = (100, 500, 2000)
    replications: int = 50
    prior: str = "hiw:3"

    def truth(self):
        om = np.eye(self.r)
        for d, v in enumerate(self.lags, start=1):
            om += v * (np.eye(self.r, k=d) + np.eye(self.r, k=-d))
        return np.linalg.inv(om)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replications", type=int, default=Experiment.replications)
    ap.add_argument("--prior", default=Experiment.prior)
    args = ap.parse_args()
    exp = Experiment(replications=args.replications, prior=args.prior)
    sig = exp.truth()
    true_k = len(exp.lags)
    print("n      mean_k  share_true_k")
    for n in exp.sample_sizes:
        ks = [select_banded(sample_data(sig, n, seed, stream=(n,)), exp.kmax, exp.prior).best
              for seed in range(exp.replications)]
        print(f"{n:<6} {np.mean(ks):6.2f}  {np.mean(np.equal(ks, true_k)):.2f}")


if __name__ == "__main__":
    main()
