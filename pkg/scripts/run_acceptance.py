"""Run every acceptance criterion and print one PASS/FAIL line each."""
import argparse
import sys

from otecon.acceptance import AcceptanceConfig, run_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=AcceptanceConfig.seed)
    ap.add_argument("--marginal-tol", type=float, default=AcceptanceConfig.marginal_tol)
    args = ap.parse_args()
    results = run_all(AcceptanceConfig(seed=args.seed, marginal_tol=args.marginal_tol))
    failed = sum(not ok for _, _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
