"""Laboratory feasibility of number-measurement feedback.

Prints the ``atomlaser params`` report for a config file, then scans the
interaction strength to show where the optimal-feedback narrowing saturates
and how the spontaneous-emission loss grows with it.

    python3 scripts/feasibility.py scripts/example_params.json
"""

import argparse
import json

import numpy as np

from atomlaser.analytics import linewidth_branches_nofb, optimal_feedback, reduction_factor_limit
from atomlaser.cli import params_report
from atomlaser.model import ModelParams
from atomlaser.physical import ProbeLabParams, spontaneous_loss_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", help="JSON file with condensate, probe, chi or kappa, eta")
    ap.add_argument("--points", type=int, default=9)
    args = ap.parse_args()

    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    report = params_report(cfg)
    print(json.dumps(report, indent=2, sort_keys=True))

    mu = float(cfg["condensate"]["atom_number"])
    eta = float(cfg.get("eta", 1.0))
    probe = ProbeLabParams(**cfg["probe"])
    print(f"\nreduction-factor limit sqrt(8 mu / pi) = {reduction_factor_limit(mu):.0f}")
    print(f"{'chi':>10} {'nofb/kappa':>12} {'fb/kappa':>12} {'reduction':>10} {'loss':>8}")
    for chi in np.geomspace(1, 1e5, args.points):
        nofb = linewidth_branches_nofb(ModelParams(mu=mu, chi=chi, eta=eta)).selected
        fb = optimal_feedback(chi, eta).ell_min(1.0, mu)
        loss = spontaneous_loss_ratio(probe, chi, mu)
        print(f"{chi:10.3g} {nofb:12.4g} {fb:12.4g} {nofb / fb:10.1f} {loss:8.3f}")


if __name__ == "__main__":
    main()
