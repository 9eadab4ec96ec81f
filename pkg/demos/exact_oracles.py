"""
Exact oracles on a finite space
===============================

On a finite state space every limit object is computable: the kernel at
theta_star, the Poisson solution of the field, the asymptotic covariance
U_star and the Doeblin constant rho.
"""

import numpy as np

import wanglandau as wl

model = wl.builtin_model("discrete-skew", K=12)
proposal = wl.ProposalSpec.discrete(1, 0.05)
sol = wl.compute_U_star(model, proposal)

print("theta_star:", sol.theta_star)
print("rho:", sol.rho)
print("U_star:\n", np.round(sol.U_star, 5))

# U_star lives on the tangent space of the simplex: its rows sum to zero
print("row sums:", sol.U_star.sum(axis=1))

# Limits of the scaled covariances for a few schedules
for sched in [wl.ScheduleSpec(0.5, 0.6), wl.ScheduleSpec(3.0, 1.0, cap=0.5),
              wl.ScheduleSpec(6.0, 1.0, cap=0.5)]:
    ac = wl.asymptotic_covariance(sched, model.d, sol.U_star)
    line = (f"gamma_star={sched.gamma_star}, alpha={sched.alpha}: sigma^2 = "
            f"{wl.clt_sigma2(sched, model.d)}, trace of gamma-scaled covariance = "
            f"{np.trace(ac.gamma_scaled):.3f}")
    # for alpha = 1 the sqrt(n) normalization also has a limit
    if ac.sqrt_n_scaled is not None:
        line += f", trace of sqrt(n) covariance = {np.trace(ac.sqrt_n_scaled):.3f}"
    print(line)

# Averaging reaches the optimal d^2 U_star without tuning gamma_star
print("trace d^2 U_star:", model.d ** 2 * np.trace(sol.U_star))
