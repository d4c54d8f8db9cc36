"""Log-log slopes of the marginal prior densities near the origin and in the
tail, and of the prior mass in shrinking neighbourhoods of zero."""
import numpy as np

from r2d2shrink.density import loglog_slope, prior_mass_near_zero
from r2d2shrink.priors import DlParams, R2d2Params


def r2d2(a_pi, b):
    return R2d2Params(a=a_pi, b=b, a_pi=a_pi, label=f"R2-D2(a_pi={a_pi}, b={b})")


def mass_slope(prior, ns=10.0 ** np.arange(2, 9)):
    masses = [prior_mass_near_zero(prior, int(n)) for n in ns]
    return np.polyfit(np.log(ns), np.log(masses), 1)[0]


def main():
    tail = np.geomspace(50, 500, 25)
    origin = np.geomspace(1e-10, 1e-7, 25)
    print("tail slope (expected -(2b+1))")
    for b in (0.1, 0.5, 1.0):
        print(f"  b={b:<5} {loglog_slope(r2d2(0.25, b), tail):+.4f}  expected {-(2 * b + 1):+.4f}")
    print("origin slope (expected -(1-2a_pi) for R2-D2, -(1-a_D) for DL)")
    for a_pi in (0.1, 0.25, 0.4):
        print(f"  R2-D2 a_pi={a_pi:<5} {loglog_slope(r2d2(a_pi, 0.5), origin):+.4f}  expected {-(1 - 2 * a_pi):+.4f}")
    for a_d in (0.25, 0.5, 0.75):
        print(f"  DL a_D={a_d:<5} {loglog_slope(DlParams(a_d), np.geomspace(1e-8, 1e-4, 25)):+.4f}  expected {-(1 - a_d):+.4f}")
    print("mass within 1/sqrt(n) of zero, slope in log n (expected -a_pi, -a_D/2)")
    for a_pi in (0.1, 0.25, 0.4):
        print(f"  R2-D2 a_pi={a_pi:<5} {mass_slope(r2d2(a_pi, 0.5)):+.4f}")
    for a_d in (0.2, 0.5, 0.8):
        print(f"  DL a_D={a_d:<5} {mass_slope(DlParams(a_d)):+.4f}")


if __name__ == "__main__":
    main()
