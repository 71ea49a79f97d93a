"""Exact motion under the run-then-brake speed profile.

A vehicle runs at ``v0`` until ``t_brake`` and then decelerates at ``decel``
until it stops.  Positions are obtained from the closed-form integral of this
profile rather than by summing ``v * dt``, so the time step only affects when
events are detected, never how far a vehicle travels.
"""

from __future__ import annotations

import numpy as np

# Overlap tolerated before two bodies count as touching (m).
CONTACT_TOL = 1e-9


def speed_at(t, v0, t_brake, decel):
    """Instantaneous speed; ``t_brake`` may be ``inf`` (never brakes)."""
    t = np.asarray(t, dtype=float)
    tau = np.maximum(t - t_brake, 0.0)
    return np.maximum(v0 - tau * decel, 0.0)


def distance_travelled(t, v0, t_brake, decel):
    """Distance covered over ``[0, t]`` by a vehicle released at time 0."""
    t = np.asarray(t, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t_brake = np.asarray(t_brake, dtype=float)
    run = np.minimum(t, t_brake)
    finite = np.isfinite(t_brake)
    stop_time = np.divide(v0, decel)
    tau = np.where(finite, np.clip(t - np.where(finite, t_brake, 0.0), 0.0, stop_time), 0.0)
    return v0 * run + v0 * tau - 0.5 * decel * tau * tau


def stop_time(v0, t_brake, decel):
    """Time at which the vehicle comes to rest."""
    return np.asarray(t_brake, dtype=float) + np.divide(v0, decel)
