"""
Weights converging to the stratum masses
========================================

A four-state target with masses proportional to (1, 1, 1, 5), split into two
strata.  The stratum masses are (1/4, 3/4); the linearized update drives the
weights there while the sampler spends half its time in each stratum.
"""

import numpy as np

import wanglandau as wl

model = wl.builtin_model("discrete-skew")
theta_star = np.asarray(wl.compute_theta_star(model))
print("theta_star:", theta_star)

# gamma_n = 0.5 / n**0.6, the slow-decay regime
schedule = wl.ScheduleSpec(gamma_star=0.5, alpha=0.6)
proposal = wl.ProposalSpec.discrete(local_radius=1, global_prob=0.05)

state = wl.ChainState.start(model, seed_or_rng=2024)
state, res = wl.run_chain(state, model, proposal, schedule, "linearized", 10**6, thinning=1000)

# The Kullback-Leibler distance to theta_star along the run
V = np.sum(theta_star * np.log(theta_star / res.trace.theta), axis=1)
for n in [10**3, 10**4, 10**5, 10**6]:
    print(f"n = {n:>7d}  theta = {res.trace.theta[n // 1000 - 1]}  V = {V[n // 1000 - 1]:.2e}")

# Each stratum is visited about half of the time
print("occupancy:", res.occupancy)

# The stratified estimator reweights the draws back to the target:
# it recovers E_pi[X] = (0 + 1 + 2 + 15) / 8
est = wl.stratified_estimator(res.trace, lambda x: x)
print(f"stratified estimate of E[X]: {est:.4f} (exact 2.25)")
