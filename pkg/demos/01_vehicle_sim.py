"""Drive the kinematic loader model by hand.

Shows the three longitudinal behaviours: constant-speed cruise, the
ideal brake (hard stop in ~1 m from cruise), and the tapered brake that
eases the pedal off for a smooth, longer stop.
"""

import math

from loader_rl import BrakeModel, Controls, TaperParams, VehicleParams, VehicleState, step_vehicle

params = VehicleParams()
dt = 1.0 / 50.0

print("== cruise, 1 second, heading 30 degrees ==")
state = VehicleState(x=0.0, y=0.0, heading=math.radians(30), speed=2.0, lift=0.5)
for _ in range(50):
    state = step_vehicle(state, Controls(brake=0, lift_up=1), dt, params)
print(f"position ({state.x:.3f}, {state.y:.3f}) m, speed {state.speed} m/s, lift {state.lift:.3f}")

print("\n== ideal brake from cruise ==")
state = VehicleState(x=0.0, y=0.0, heading=0.0, speed=2.0, lift=0.5)
while state.speed > 0.0:
    state = step_vehicle(state, Controls(brake=1, lift_up=0), dt, params)
print(f"stopped after {state.elapsed:.2f} s, {state.y:.3f} m  (continuous limit: v^2/2a = 1.0 m)")

print("\n== tapered brake from cruise ==")
state = VehicleState(x=0.0, y=0.0, heading=0.0, speed=2.0, lift=0.5)
print("   t     speed   pedal")
while state.speed > 0.0:
    state = step_vehicle(state, Controls(brake=1, lift_up=0), dt, params, BrakeModel.TAPERED)
    if round(state.elapsed * 50) % 25 == 0:
        print(f"  {state.elapsed:4.1f}  {state.speed:6.3f}  {state.brake_pedal:.3f}")
print(f"stopped after {state.elapsed:.2f} s, {state.y:.3f} m -- slower but smooth")

print("\n== pedal decay closed form ==")
taper = TaperParams(initial_pedal=0.6, taper_time_constant=1.0)
print(f"pedal after 1 s of holding: 0.6 * e^-1 = {0.6 * math.exp(-1.0):.4f}")
