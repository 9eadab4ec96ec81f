"""
Crossing barriers on a metastable torus
=======================================

The potential cos(4 pi x) at inverse temperature 4 has two deep wells that
hold 94% of the mass.  A plain Metropolis chain spends almost all its time
there; biasing with the adapted weights flattens the stratum occupancy while
the weights stay bounded away from zero.
"""

import numpy as np

import wanglandau as wl

model = wl.builtin_model("torus-doublewell", beta=4.0, d=6)
theta_star = np.asarray(wl.compute_theta_star(model))
print("stratum masses:", np.round(theta_star, 5))

proposal = wl.ProposalSpec.torus(local_halfwidth=0.1, global_prob=0.05)
schedule = wl.ScheduleSpec(0.5, 0.6)

# Frozen uniform weights: ordinary Metropolis on pi
xs = wl.mh_chain(np.random.default_rng(1), model, proposal, np.full(6, 1 / 6), 0.25, 200_000)
plain = np.bincount(wl.model.stratum_indices(model, xs), minlength=6) / xs.size
print("plain Metropolis occupancy:", np.round(plain, 3))

# Adaptive weights
state = wl.ChainState.start(model, 1, x0=0.25)
state, res = wl.run_chain(state, model, proposal, schedule, "linearized", 10**6,
                          thinning=100, min_theta_from=1000)
print("Wang-Landau occupancy:     ", np.round(res.occupancy, 3))
print("final weights:", np.round(state.theta, 5))
print("smallest weight after n = 1000:", round(res.min_theta, 5))
