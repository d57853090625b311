"""Heating strength needed to match the quoted full-model populations.

Scans eta_eff and reports P20(3) at gt = pi and 1.026 pi from thermal(1.19),
then solves for the eta_eff that gives P20(3) = 0.63 at gt = pi.
"""
import argparse
import math

from scipy.optimize import brentq

from phonon_accum import StepParams, iterate, thermal_cutoff, thermal_distribution


def p3(eta, area_pi=1.0, k=20, contrast=0.97, n_bar=1.19):
    d0 = thermal_distribution(n_bar, thermal_cutoff(n_bar, 1e-12))
    return iterate(d0, StepParams(area_pi * math.pi, contrast, eta), k).final.probs[3]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", type=float, default=0.63)
    args = ap.parse_args()

    print("eta_eff  eta^2    P20(3) pi  P20(3) 1.026pi  P40(3) pi")
    for eta in (0.0, 0.1, 0.17, 0.2, 0.25, 0.266, 0.28):
        print(f"{eta:7.3f}  {eta**2:.4f}   {p3(eta):.4f}     {p3(eta, 1.026):.4f}          {p3(eta, k=40):.4f}")
    eta = brentq(lambda e: p3(e) - args.target, 0.05, 0.3, xtol=1e-6)
    print(f"\nP20(3) = {args.target} at eta_eff = {eta:.4f} (eta^2 = {eta**2:.4f})")
    print(f"  then P20(3) at 1.026 pi = {p3(eta, 1.026):.4f}, P40(3) at pi = {p3(eta, k=40):.4f}")


if __name__ == "__main__":
    main()
