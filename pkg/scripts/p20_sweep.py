"""P_k(3) after k = 20 and 40 steps at gt = pi, for the ideal-contrast and full models."""
import argparse
import math

from phonon_accum import StepParams, iterate, thermal_cutoff, thermal_distribution

MODELS = {
    "ideal (contrast 1, no heating)": (1.0, 0.0),
    "contrast 1, eta 0.17": (1.0, 0.17),
    "contrast 0.97, no heating": (0.97, 0.0),
    "full (contrast 0.97, eta 0.17)": (0.97, 0.17),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-bar", type=float, default=1.19)
    ap.add_argument("--area-pi", type=float, default=1.0)
    args = ap.parse_args()

    d0 = thermal_distribution(args.n_bar, thermal_cutoff(args.n_bar, 1e-12))
    print(f"{'model':34s} P20(3)   P40(3)")
    for name, (kappa, eta) in MODELS.items():
        tr = iterate(d0, StepParams(args.area_pi * math.pi, kappa, eta), 40)
        print(f"{name:34s} {tr.states[20].probs[3]:.4f}   {tr.states[40].probs[3]:.4f}")


if __name__ == "__main__":
    main()
