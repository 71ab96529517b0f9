"""Side-by-side trace of the BLP contraction and the IPFP v-update on one sample."""
import argparse
from dataclasses import dataclass

import numpy as np

from otecon.choice import ChoiceSample, blp_contraction, invert_mixed_logit, simulate_market_shares


@dataclass(frozen=True)
class TraceConfig:
    n_draws: int = 200
    n_alternatives: int = 5
    sigma: float = 0.5
    seed: int = 0
    show: int = 8


def run(cfg: TraceConfig):
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    sample = ChoiceSample(rng.gumbel(size=(cfg.n_draws, cfg.n_alternatives)), cfg.sigma)
    q = rng.dirichlet(np.full(cfg.n_alternatives, 2.0))
    ipfp, blp = [], []
    V = invert_mixed_logit(q, sample, callback=lambda t, V: ipfp.append(V.copy()))
    blp_contraction(q, sample, callback=lambda t, V: blp.append(V.copy()))
    return q, V, sample, ipfp, blp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=TraceConfig.n_draws)
    ap.add_argument("--sigma", type=float, default=TraceConfig.sigma)
    ap.add_argument("--seed", type=int, default=TraceConfig.seed)
    args = ap.parse_args()
    q, V, sample, ipfp, blp = run(TraceConfig(n_draws=args.draws, sigma=args.sigma, seed=args.seed))
    k = min(len(ipfp), len(blp))
    for t in range(min(k, TraceConfig.show)):
        print(f"iter {t + 1:3d}  max |V_ipfp - V_blp| = {np.abs(ipfp[t] - blp[t]).max():.2e}")
    worst = max(np.abs(a - b).max() for a, b in zip(ipfp[:k], blp[:k]))
    print(f"{len(ipfp)} IPFP sweeps, {len(blp)} BLP iterations, worst iterate gap {worst:.2e}")
    print("V =", np.array2string(V, precision=6))
    print(f"share residual {np.abs(simulate_market_shares(V, sample) - q).max():.2e}")


if __name__ == "__main__":
    main()
