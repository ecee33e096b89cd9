"""SNR of the proposed method against the number of masks at a fixed noise level."""
import argparse

from tvpr.experiment import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--masks", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--lam", type=float, nargs="+", default=None,
                    help="TV weight per mask count (unnormalized units); defaults to the sigma20 and J3 presets")
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1])
    args = ap.parse_args()
    lams = args.lam or [1e4 if J == 2 else 7e3 for J in args.masks]
    print("seed_masks,J,lam,sigma,snr_init,snr_final")
    for seed in args.seeds:
        for J, lam in zip(args.masks, lams):
            cfg = ExperimentConfig.from_dict(dict(
                preset="paper-sigma20", J=J, lam=lam, er_target_masks=2, size=args.size, seed_masks=seed))
            s = run_experiment(cfg, write=False).summary
            print(f"{seed},{J},{lam:g},{s['sigma']:.6g},{s['snr_init']:.4f},{s['snr_final']:.4f}")


if __name__ == "__main__":
    main()
