"""Adversarial platoon formation and stealthy speed manipulation.

Positions here are points on a line increasing in the travel direction; the
lead vehicle (index 0, vehicle 1 in 1-based notation) has the largest
position, and ``b`` is the distance between consecutive platoon members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InfeasibleError, ParameterError


@dataclass(frozen=True)
class PlatoonScenario:
    """Traffic stream feeding an adversarial platoon.

    Attributes:
        v: nominal speed (m/s).
        b: platoon headway (m).
        alpha: vehicle arrival rate (1/s).
        p_adv: probability an arriving vehicle is corrupted.
        rho: maximum speed manipulation as a fraction of ``v``.
        T: time horizon (s).
    """

    v: float
    b: float
    alpha: float
    p_adv: float
    rho: float
    T: float

    def __post_init__(self):
        for name in ("v", "b", "alpha", "T"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.p_adv <= 1.0:
            raise ParameterError(f"p_adv must be in [0, 1], got {self.p_adv}")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must be in [0, 1], got {self.rho}")


def max_platoon_span(s: PlatoonScenario) -> float:
    """Number of arriving vehicles a platoon can sweep up within ``T``."""
    return (2.0 * s.rho * s.v * s.T + s.b) / (s.v / s.alpha + s.b)


def expected_platoon_size(s: PlatoonScenario) -> float:
    return s.p_adv * max_platoon_span(s)


def binomial_pmf(k: int, n: int, p: float) -> float:
    if not 0 <= k <= n:
        raise ParameterError(f"k must be in [0, {n}], got {k}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
           + k * math.log(p) + (n - k) * math.log1p(-p))
    return math.exp(log)


def poisson_pmf(k: int, lam: float) -> float:
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def platoon_prob(s: PlatoonScenario, k: int) -> float:
    """Probability that exactly ``k`` corrupted vehicles are available."""
    n = math.floor(max_platoon_span(s))
    if k > n:
        raise ParameterError(f"k={k} exceeds floor(N)={n}")
    return binomial_pmf(k, n, s.p_adv)


def platoon_prob_poisson(s: PlatoonScenario, k: int) -> float:
    return poisson_pmf(k, max_platoon_span(s) * s.p_adv)


def probability_curve(s: PlatoonScenario, k_max: int | None = None):
    """Rows ``(k, binomial, poisson)`` for ``k = 0 .. k_max`` (default floor(N))."""
    n = math.floor(max_platoon_span(s))
    k_max = n if k_max is None else k_max
    return [(k, platoon_prob(s, k) if k <= n else 0.0, platoon_prob_poisson(s, k))
            for k in range(k_max + 1)]


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def binomial_poisson_tv(n: int, p: float) -> float:
    """Total-variation distance between Binomial(n, p) and Poisson(np).

    Poisson mass above ``n`` is counted in full.
    """
    lam = n * p
    b = np.array([binomial_pmf(k, n, p) for k in range(n + 1)])
    q = np.array([poisson_pmf(k, lam) for k in range(n + 1)])
    return total_variation(b, q) + 0.5 * max(0.0, 1.0 - q.sum())


def constant_gain(k: int, x0, b: float, T: float, rho: float | None = None,
                  v: float | None = None) -> float:
    """Constant speed gain that brings vehicle ``k`` (1-based) to its slot in ``T``.

    The slot is ``b*(k-1)`` behind vehicle 1.  With ``rho`` and ``v`` given,
    a gain beyond ``rho*v`` raises :class:`InfeasibleError`.
    """
    x0 = np.asarray(x0, dtype=float)
    if not 1 <= k <= x0.size:
        raise ParameterError(f"k must be in [1, {x0.size}], got {k}")
    if not T > 0:
        raise ParameterError(f"T must be > 0, got {T}")
    chi = (x0[0] - x0[k - 1] - b * (k - 1)) / T
    if rho is not None and v is not None and abs(chi) > rho * v:
        raise InfeasibleError(f"vehicle {k} needs |gain| {abs(chi):.4g} m/s > rho*v = {rho * v:.4g} m/s")
    return chi


@dataclass(frozen=True)
class StealthSchedule:
    """Smooth gain schedule over ``[0, T]`` with base ``wp = 1 - sigma/T``."""

    sigma: float
    T: float
    chi: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0 or not self.T > 0:
            raise ParameterError("sigma and T must be > 0")
        if not 0.0 < self.wp < 1.0:
            raise ParameterError(f"1 - sigma/T must be in (0, 1), got {self.wp}")

    @property
    def wp(self) -> float:
        return 1.0 - self.sigma / self.T

    def peak_factor(self) -> float:
        """Ratio of the peak gain (at ``T/2``) to the constant gain."""
        return 2.0 / (self.wp ** (self.T / 4.0) + 1.0)


def stealth_speed(t, chi: float, sched: StealthSchedule):
    """Speed gain at time(s) ``t``: rises around ``T/4`` and falls around ``3T/4``."""
    T = sched.T
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > T):
        raise ParameterError(f"t must lie in [0, {T}]")
    wp = sched.wp
    # The falling branch 2chi(1 - 1/(wp^(t-3T/4) + 1)) equals 2chi/(wp^(3T/4-t) + 1);
    # the second form makes the mirror symmetry about T/2 exact.
    expo = np.where(t_arr < T / 2.0, t_arr - T / 4.0, 3.0 * T / 4.0 - t_arr)
    out = 2.0 * chi / (np.power(wp, expo) + 1.0)
    return float(out) if out.ndim == 0 else out


def stealth_integral(sched: StealthSchedule, chi: float, panels: int = 100_000) -> float:
    """Composite midpoint quadrature of :func:`stealth_speed` over ``[0, T]``."""
    if panels < 1:
        raise ParameterError("panels must be >= 1")
    h = sched.T / panels
    mids = (np.arange(panels) + 0.5) * h
    return float(stealth_speed(mids, chi, sched).sum() * h)


def draw_platoon_positions(rng: np.random.Generator, n: int, v: float, alpha: float,
                           p_adv: float) -> np.ndarray:
    """Positions of ``n`` corrupted vehicles picked from an arrival stream.

    Arrivals are ``v/alpha`` apart; each is corrupted with probability
    ``p_adv``, so gaps between corrupted vehicles are geometric multiples of
    the arrival spacing.  The lead sits at 0.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 < p_adv <= 1.0:
        raise ParameterError(f"p_adv must be in (0, 1], got {p_adv}")
    gaps = rng.geometric(p_adv, size=n - 1) * (v / alpha)
    return -np.concatenate(([0.0], np.cumsum(gaps)))


@dataclass
class CoalescenceResult:
    """Trajectories of a coalescing platoon.

    ``gains``/``positions`` are sampled at ``times``; ``chi`` is the constant
    gain per vehicle and ``final_headways`` the spacing to the vehicle ahead
    at ``T`` (NaN for the lead).
    """

    times: np.ndarray
    positions: np.ndarray
    gains: np.ndarray
    chi: np.ndarray
    corrupted: np.ndarray
    v: float
    b: float
    final_positions: np.ndarray
    final_headways: np.ndarray
    peak_gain: float
    headways: np.ndarray = field(repr=False, default=None)

    @property
    def max_gain_ratio(self) -> float:
        return self.peak_gain / self.v


def simulate_coalescence(x0, v: float, b: float, T: float, sigma: float, dt: float = 0.1,
                         corrupted=None, rho: float | None = None, mode: str = "tail",
                         trace_every: int = 10) -> CoalescenceResult:
    """Integrate the platoon under the stealth schedule.

    Args:
        x0: initial positions, lead first and decreasing.
        corrupted: boolean mask of vehicles that follow the schedule; others
            keep speed ``v``.  The lead is always part of the platoon and
            corrupted vehicles take consecutive slots behind it.
        rho: speed-manipulation cap; a schedule peaking above ``rho*v``
            raises :class:`InfeasibleError`.
        mode: ``"tail"`` leaves the lead unchanged; ``"split"`` also slows
            the lead by half the last vehicle's gain, halving the peak.
        trace_every: keep every n-th step in the trace.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if n < 1 or np.any(np.diff(x0) >= 0):
        raise ParameterError("positions must be strictly decreasing from the lead")
    if not dt > 0 or trace_every < 1:
        raise ParameterError("dt must be > 0 and trace_every >= 1")
    if mode not in ("tail", "split"):
        raise ParameterError(f"unknown mode {mode!r}")
    corrupted = np.ones(n, dtype=bool) if corrupted is None else np.asarray(corrupted, dtype=bool).copy()
    corrupted[0] = True
    members = np.nonzero(corrupted)[0]
    sched = StealthSchedule(sigma, T)

    # Slot-relative gains come from the member-only formation.
    chi = np.zeros(n)
    xm = x0[members]
    for rank in range(2, members.size + 1):
        chi[members[rank - 1]] = constant_gain(rank, xm, b, T)
    if mode == "split" and members.size > 1:
        lead_gain = -0.5 * chi[members[-1]]
        chi[members] += lead_gain
    peak = float(np.max(np.abs(chi))) * sched.peak_factor()
    if rho is not None and peak > rho * v * (1.0 + 1e-12):
        raise InfeasibleError(f"peak gain {peak:.4g} m/s exceeds rho*v = {rho * v:.4g} m/s")

    steps = int(round(T / dt))
    if not math.isclose(steps * dt, T, rel_tol=1e-9):
        raise ParameterError("T must be a whole number of steps")
    mids = (np.arange(steps) + 0.5) * dt
    profile = stealth_speed(mids, 1.0, sched)  # unit-chi profile at step midpoints
    disp = np.concatenate(([0.0], np.cumsum(profile) * dt))
    idx = np.arange(0, steps + 1, trace_every)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    times = idx * dt
    positions = x0[None, :] + v * times[:, None] + disp[idx][:, None] * chi[None, :]
    gains = stealth_speed(times, 1.0, sched)[:, None] * chi[None, :]
    final = positions[-1]
    headways = np.full_like(positions, np.nan)
    headways[:, 1:] = positions[:, :-1] - positions[:, 1:]
    return CoalescenceResult(
        times=times,
        positions=positions,
        gains=gains,
        chi=chi,
        corrupted=corrupted,
        v=v,
        b=b,
        final_positions=final,
        final_headways=headways[-1],
        peak_gain=peak,
        headways=headways,
    )
