"""A three-body history told without time, scale or orientation.

We take a committed zero-energy three-body fixture, convert its Newtonian
initial data into a point and a direction on the shape sphere, and integrate
the shape curve by arc length.  Then we check it against a direct Newtonian
integration projected onto the sphere, watch the energy constraint, and look
for the complexity minimum that splits the history into two arrows of time.

Run with ``python demos/01_equation_of_state.py``; figures land in ``demo_out/``.
"""
from pathlib import Path

import numpy as np

from pureshape.analysis import arrow_of_time, complexity, hausdorff
from pureshape.classical import integrate_curve, state_from_cartesian
from pureshape.fixtures import load_fixture
from pureshape.geometry import SphereChart
from pureshape.oracle import newtonian_oracle
from pureshape.plots import complexity_svg, sphere_svg

out = Path("demo_out")
out.mkdir(exist_ok=True)

# %% Initial data: positions and velocities in the centre-of-mass frame, E = 0.
fx = load_fixture("seed0")
state = state_from_cartesian(fx.positions, fx.velocities, fx.masses, fx.spec)
print(f"fixture {fx.name}: start at n = {np.round(state.q.coords, 4)}, kappa = {state.kappa:.4f}")

# %% The shape curve over the fixture window (10 units of shape arc length).
curve = integrate_curve(state, fx.span, fx.masses, fx.spec)
print(f"{len(curve)} accepted steps, worst constraint residual {np.max(np.abs(curve.residual)):.1e}")

# %% Newton's equations integrated directly and projected onto the sphere.
chart = SphereChart(fx.masses)
oracle = newtonian_oracle(fx.config, fx.velocities, fx.spec, arclength=fx.span)
gap = hausdorff(oracle.shapes(chart), curve.points, curve.tangents, curve.s, on_sphere=True)
print(f"largest distance from the Newtonian shapes to the curve: {gap:.1e}")

# %% Complexity along the curve has one minimum; it grows on both sides of it.
rep = arrow_of_time(complexity(curve))
print(f"complexity minimum at s = {rep.janus_s:.3f}, outward slopes {rep.slope_before:.3f} and {rep.slope_after:.3f}")

sphere_svg(curve.points, out / "seed0_shape_curve.svg", chart.collision_points(), title="seed0")
complexity_svg(curve.s, complexity(curve).values, out / "seed0_complexity.svg", rep.janus_s, title="seed0")
print(f"figures written to {out}/")
