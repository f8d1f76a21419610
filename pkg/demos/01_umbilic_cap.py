# Umbilic caps as Killing graphs
#
# A CMC-H cap bounded by a circle at infinity is a Euclidean sphere; seen along the
# flow lines from the origin it is the graph of u(alpha) over the unit hemisphere.
# Here we solve the Dirichlet problem for it on a geodesic ball and watch the error
# drop by about four each time the grid is refined.
import numpy as np

from hypcmc import CapSolution, DirichletProblem, SectionGrid, ball_alpha, continuation_solve

H = 0.5
print("closed-form apex height u(0) - u(pi/2):", CapSolution(H, 1.0).apex_height, "= artanh H =", np.arctanh(H))

# %% Dirichlet problem on B_5 with zero boundary data, three resolutions
prev = None
for n in (16, 32, 64):
    grid = SectionGrid(n, 2 * n, ball_alpha(5), theta=0.0)
    u, report = continuation_solve(DirichletProblem(grid, 0.0, H))
    exact = CapSolution.through_ring(H, grid.alpha[-1], 0.0)  # cap through the boundary ring
    err = np.max(np.abs(u.u - exact(grid.node_alpha))[grid.ball_mask(ball_alpha(2))])
    ratio = "" if prev is None else f"ratio {prev / err:.2f}"
    print(f"{n:3d} x {2 * n:3d}: newton {report.newton_iterations:2d}, error on B_2 {err:.3e} {ratio}")
    prev = err

# %% The rotation rate does not matter for a rotation-invariant graph
grid = SectionGrid(32, 64, ball_alpha(5), theta=1.0)
u1, _ = continuation_solve(DirichletProblem(grid, 0.0, H))
exact = CapSolution.through_ring(H, grid.alpha[-1], 0.0)
print("theta = 1, same error:", np.max(np.abs(u1.u - exact(grid.node_alpha))[grid.ball_mask(ball_alpha(2))]))
