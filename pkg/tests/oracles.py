"""Frozen oracle values.

Obtained by an independent route: exact matrix exponentials of each mode,
root-finding on the exit ray of each cone, and the ratio of radii.  None of
the closed-form or Jordan-form code paths was used to produce them.
"""

# rigid setup: M=1, b=0, k_p=4000, k_d=80, k_f=1, k_e=1e6, b_e=10
LAMBDA1_BF5 = 0.007686419061219228
LAMBDA2_BF5 = 1392.5885161982046
LAMBDA_BF5 = 114.5760209399754
LAMBDA1_BF9000 = 0.005264842612875231
LAMBDA2_BF9000 = 206.1822748221017
LAMBDA_BF9000 = 1.1783476490346632

# compliant wrist: M_t=0.05, k_t=5e4, b_f=5, perceived environment
LAMBDA_BT160 = 1.0358244658694442
LAMBDA_BT171 = 0.9359956093598618

# the b_f value at which Lambda crosses 1 for the rigid setup, by bisection on the oracle
BF_THRESHOLD = 9586.107  # +- 0.004

# smallest certifying wrist damping for the setup above, same route
BT_THRESHOLD = 163.80051  # +- 1e-4
