"""Deterministic transients for the three preset scenarios.

The deterministic solver steps with exact affine propagators (matrix
exponential of the drift frozen at interval midpoints), so it is insensitive
to stiffness: the six-group scenarios mix a 2e-5 s generation time with
precursor time constants near 80 s, and the step can still be the record
interval.

Note on reference values: the literature tables these scenarios come from
list deterministic endpoints of 412.13 (one-group case), 200.005 (six groups,
rho=0.003) and 139.61 (six groups, rho=0.007).  Solving the stated equations
with the stated parameters gives 400.0, 179.95 and 135.00 instead, which a
stiff Radau integration confirms to twelve digits (see the test suite).  The
one-group case is started at its exact equilibrium, so its deterministic
trajectory cannot move at all; the event Monte Carlo means in the same tables
(400.03, 183.04, 135.66) agree with these exact solutions, not with the
published deterministic column.
"""

from stokin import deterministic_solve, load_scenario

for name in ("table1", "table2", "table3"):
    scn = load_scenario(name)
    p = scn.build_parameters()
    x0 = scn.build_initial(p)
    traj = deterministic_solve(p, x0, scn.grid("det"))
    print(f"== {name}: {scn.description}")
    print(f"   horizon {scn.horizon} s, step {scn.grid('det').dt} s")
    print(f"   n(0) = {traj.states[0, 0]:.6g}  ->  n(T) = {traj.final_state[0]:.6f}")
    print(f"   sum c(T) = {traj.final_state[1:].sum():.6e}")
    mid = len(traj.times) // 2
    print(f"   midpoint check: n({traj.times[mid]:g}) = {traj.states[mid, 0]:.4f}")
    print()
