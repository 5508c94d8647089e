"""Two-level states and projective measurement, the bottom layer.

Builds the four working states, prints their overlaps, and checks the
Born rule by measuring a superposition many times.
"""
import numpy as np

from b92sim.qstate import (
    P_DOWN,
    P_LEFT,
    P_UP,
    basis_states,
    commutator_norm,
    inner,
    measure,
    pass_probability,
)

up, down, right, left = basis_states()
print("state overlaps:")
print(f"  <up|down>    = {inner(up, down):.3f}   (orthogonal)")
print(f"  <up|right>   = {inner(up, right):.3f}   (non-orthogonal: 1/sqrt(2))")
print(f"  <down|left>  = {inner(down, left):.3f}")

print("\npass probabilities (sender state vs receiver measurement):")
for name, state in (("up", up), ("right", right)):
    row = [pass_probability(state, p) for p in (P_DOWN, P_LEFT)]
    print(f"  {name:>5}: P_down -> {row[0]:.2f}   P_left -> {row[1]:.2f}")

from b92sim.qstate import P_RIGHT  # noqa: E402

print("\nmeasurements do not commute, so no single test reads the bit:")
print(f"  ||[P_up, P_down]||  = {commutator_norm(P_UP, P_DOWN):.3f} (orthogonal pair commutes)")
print(f"  ||[P_up, P_right]|| = {commutator_norm(P_UP, P_RIGHT):.4f} (sqrt(2)/2)")

rng = np.random.default_rng(1)
n = 50_000
passes = 0
collapsed_example = None
for _ in range(n):
    passed, collapsed = measure(right, P_DOWN, rng)
    passes += passed
    if passed and collapsed_example is None:
        collapsed_example = collapsed
print(f"\nmeasuring P_down on |right> {n} times:")
print(f"  pass frequency {passes / n:.4f} (Born rule says 0.5)")
print(f"  state after a pass: {collapsed_example}  (collapsed onto |down>)")
