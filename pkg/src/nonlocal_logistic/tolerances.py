"""Per-check tolerances used by the verification suite and the acceptance tests.

Bump ``VERSION`` whenever a value changes.
"""

VERSION = "1"

TOLERANCES = {
    # eigenvalue oracle, lambda_1 = N(N-2) = 3
    "eigen_rel": 0.01,
    "eigen_runtime_s": 5.0,
    # Newtonian potential of P = exp(-r): r^{N-2} u -> |P|_1 / (omega_N (N-2)) = 2
    "decay_const_rel": 0.01,
    "decay_window": (20.0, 200.0),
    # rank-one branch amplitude t(lambda) = (lambda - lambda_1) / m
    "branch_amp_rel": 0.02,
    "branch_runtime_s": 60.0,
    # nonexistence / existence sweep
    "trivial_sup": 1e-8,
    "subcritical_factors": (0.5, 0.9, 0.99),
    "supercritical_factors": (1.01, 1.5, 2.0),
    "n_seeds": 10,
    # testing with phi_1
    "identity_rel": 1e-6,
    # phi properties
    "homogeneity": 1e-13,
    "phi7_slope": 0.05,
    # decay laws
    "plateau_variation": 0.05,
    "decay_bound_rtol": 1e-12,
    # numerics hygiene
    "jacobian_fd_rel": 1e-5,
    "fd_step": 1e-6,
    "conv_ratio": (4.0, 0.5),
    "self_adjoint": 1e-9,
    "amp_exponent_rel": 0.05,
}

LEVELS = {
    "fast": {"R_max": 200.0, "M": 500, "stretch": 20.0},
    "full": {"R_max": 200.0, "M": 2000, "stretch": 20.0},
}
