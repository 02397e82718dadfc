"""Expressiveness gap, measured: conditional vs query-agnostic models.

Trains both encoders on the cyclic hypergraph grid and reports held-out
accuracy on the "is this the opposite node?" task. The conditional model
solves it; the query-agnostic baseline is provably stuck at chance.

Run (quick, ~30 s):  python3 demos/hypercycle_experiment.py
Run (full scale):    python3 demos/hypercycle_experiment.py --full
"""

import argparse

from hcnet.synth import run_expressiveness_experiment
from hcnet.train import TrainConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--full", action="store_true",
                    help="full grid, 7 layers, width 32, 100 epochs (minutes)")
    args = ap.parse_args()

    if args.full:
        cfg = TrainConfig(d=32, layers=7, epochs=100, lr=1e-3)
        ns, ks = (8, 12, 16, 20), (3, 4, 5, 6, 7)
    else:
        cfg = TrainConfig(d=16, layers=5, epochs=30, lr=1e-3)
        ns, ks = (8, 12), (3, 4, 5)

    for model in ("hcnet", "hrnet"):
        res = run_expressiveness_experiment(model, cfg, seed=0, ns=ns, ks=ks)
        label = "conditional" if model == "hcnet" else "query-agnostic"
        print(f"{model} ({label}):")
        print(f"  train accuracy    {res.train_accuracy:.3f}")
        print(f"  held-out accuracy {res.accuracy:.3f}")
        print(f"  final loss        {res.losses[-1]:.4f}")
    print("\nThe baseline cannot beat 0.5: rotation by two is an automorphism")
    print("of every graph in the family, so without query conditioning the")
    print("true and corrupted tails get identical representations.")


if __name__ == "__main__":
    main()
