"""Autler-Townes splittings and Delta m = 1 drive ratios for every configured species."""
import argparse

from sicsaw import experiments as ex
from sicsaw.config import RunConfig, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--power-mw", type=float, default=400.0)
    args = ap.parse_args()

    run = RunConfig(load_config(args.config))
    names = list(run.raw["species"])
    ref = run.experiment["species"]
    split = {n: ex.at_splitting(run, ex.spin_rates(run, args.power_mw, species=n)).splitting for n in names}
    for n in names:
        print(f"{n:>4}: splitting {split[n] / ex.MHZ:.3f} MHz, ratio to {ref} {split[n] / split[ref]:.3f}")
    dm1 = [n for n in names if "g_dm1_ghz" in run.raw["species"][n]]
    for n in dm1:
        if n != ref and ref in dm1:
            print(f"Delta m = 1 drive ratio {ref}:{n} = {ex.dm1_rate_ratio(run, ref, n):.3f}")


if __name__ == "__main__":
    main()
