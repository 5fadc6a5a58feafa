"""Polynomial decay survives heat flow unimproved.

The profile sin(x)/(1+x^2) decays like x^-2; evolving the 1-D heat equation
keeps sup x^2 |f| on each dyadic annulus bounded away from zero.
"""

import sys

from afgeo import heatdemo


def main():
    p = heatdemo.initial_profile()
    profiles = [p]
    for dt in (0.25, 0.25, 0.5):
        p = heatdemo.heat_evolve(p, dt)
        profiles.append(p)
    heatdemo.decay_table(profiles, sys.stdout)


if __name__ == "__main__":
    main()
