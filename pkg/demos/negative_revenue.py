#!/usr/bin/env python3
"""How much does it cost a seller to protect cursed bidders from themselves?

The efficient auction stays individually rational for fully cursed bidders
only if the seller compensates everyone who would otherwise overpay.  With
weighted-sum values (beta = 1/2) and uniform signals the required outflow
grows like n * sqrt(n): each of the n bidders receives roughly the positive
part of a mean-zero Gaussian with standard deviation ~ sqrt(n)/2.
"""

import math

import numpy as np

from cursed_auctions import Mechanism, SignalSpace, UniformIID, WeightedSum, make_context
from cursed_auctions.evaluate import estimate
from cursed_auctions.mechanisms import GVARule

print(f"{'n':>5} {'outflow':>10} {'asymptote':>10} {'ratio':>7}")
ns = [10, 25, 50, 100, 200]
measured = []
for n in ns:
    ctx = make_context(SignalSpace(n, UniformIID(1.0)), WeightedSum(0.5))
    mech = Mechanism(GVARule(), 1.0, "compensated")
    rep = estimate(mech, ctx, "transfers_out", 50_000, seed=2024)
    measured.append(rep.mean)
    # CLT asymptote for the total compensation n * (1/2) * E[max(0, N(0, (n-1)/12))]
    asym = (n / 2.0) * math.sqrt((n - 1) / (24.0 * math.pi))
    print(f"{n:>5} {rep.mean:>10.3f} {asym:>10.3f} {rep.mean / asym:>7.3f}")

slope = np.polyfit(np.log(ns), np.log(measured), 1)[0]
print(f"\nfitted growth exponent: {slope:.3f}  (n*sqrt(n) would be 1.5)")
print("revenue collected from the winner is only O(n), so the seller's net")
print("revenue is negative for large n -- the motivation for masking.")
