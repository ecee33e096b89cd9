"""Noise level (unitary measurement scale) at which plain ER reaches a target SNR."""
import argparse

from tvpr.experiment import ExperimentConfig, calibrate_sigma, er_baseline_snr, load_truth
from tvpr.measurement import generate_masks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", type=float, nargs="+", default=[18.88, 12.60])
    ap.add_argument("--masks", type=int, default=2)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--image", default="phantom")
    ap.add_argument("--seed-masks", type=int, default=1)
    ap.add_argument("--seed-noise", type=int, default=2)
    ap.add_argument("--iters", type=int, default=60)
    args = ap.parse_args()
    f = load_truth(ExperimentConfig(image=args.image, size=args.size))
    op = generate_masks(args.seed_masks, args.masks, f.shape)
    print("target_db,sigma,er_snr_db")
    for target in args.targets:
        sigma = calibrate_sigma(op, f, target, args.seed_noise, args.iters)
        print(f"{target:g},{sigma:.6g},{er_baseline_snr(op, f, sigma, args.seed_noise, args.iters):.4f}")


if __name__ == "__main__":
    main()
