# Approaching |H| = 1
#
# The cap barriers give the height bound artanh|H|, which blows up as |H| -> 1;
# at |H| >= 1 the construction is rejected outright. This sweep records what the
# solver does as H grows: Newton counts climb but the heights stay inside the barriers.
import numpy as np

from hypcmc import BoundaryTrace, ConstraintViolation, ExhaustionConfig, barrier_bounds, exhaustion_solve

zero = BoundaryTrace.constant(0.0)
cfg = ExhaustionConfig(k_max=4, curvature_oracle=False)
print("   H    barrier   sup u_kmax  newton per k")
for H in (0.5, 0.8, 0.9, 0.95, 0.99):
    u, rep = exhaustion_solve(zero, H, 0.0, 32, 64, cfg)
    iters = [s.report.newton_iterations for s in rep.steps]
    print(f"{H:.2f}   {barrier_bounds(zero, H)[1]:.4f}   {rep.steps[-1].sup_u:.4f}      {iters}")

try:
    exhaustion_solve(zero, 1.0, 0.0, 32, 64, cfg)
except ConstraintViolation as exc:
    print("H = 1:", exc)

print("barrier width at 0.95:", np.arctanh(0.95))
