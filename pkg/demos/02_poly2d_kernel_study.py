"""Kernel sweep on the planar polynomial system.

The slow eigenfunction of poly2d is the quadratic u = x1 - x2^2, so any
polynomial kernel of degree >= 2 represents it exactly and the solver
recovers it to solver precision.  Smooth radial kernels approximate it;
their residual reports the gap honestly.
"""

import numpy as np

from flowkernels import CollocationProblem, make_kernel, make_system, solve
from flowkernels.dynamics import poly2d_reference_eigenfunctions
from flowkernels.grids import tensor_grid

system = make_system("poly2d")
X = tensor_grid([(-1, 1), (-1, 1)], 21)
ref = poly2d_reference_eigenfunctions()[-1.0]

candidates = [
    ("polynomial d=2", make_kernel("polynomial", degree=2, coef0=0.5)),
    ("polynomial d=3", make_kernel("polynomial", degree=3, coef0=0.5)),
    ("polynomial d=4", make_kernel("polynomial", degree=4, coef0=0.5)),
    ("gaussian g=1", make_kernel("gaussian", gamma=1.0)),
    ("exponential", make_kernel("exponential", gamma=1.0)),
    ("cauchy", make_kernel("cauchy", gamma=1.0)),
]

print(f"{'kernel':<16} {'residual':>12} {'rmse rescaled':>14}")
for name, kern in candidates:
    sol = solve(CollocationProblem.for_eigenvalue(system, -1.0, kern, X), reference=ref)
    print(f"{name:<16} {sol.residual_norm:>12.3e} {sol.rmse_rescaled:>14.3e}")

# the PDE residual orders the kernels the same way the (normally
# unknowable) reference error does -- that is what makes it usable as a
# model-selection signal
