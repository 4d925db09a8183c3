"""Employer-level multiplicative noise infusion.

Noise factors come from a two-sided symmetric ramp centred at one: the
distortion ``d = |delta - 1|`` lies in ``[a, b]`` with density falling
linearly to zero at ``b``, and the side of unity is a fair coin. Each
employer keeps a single factor for every quarter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import keyed_uniform

PRODUCTION_STREAM = "sdl"
SIMULATION_STREAM = "sdl-sim"


class RampError(ValueError):
    pass


@dataclass(frozen=True)
class RampParams:
    """Distortion bounds: every factor moves the input by at least ``a`` and at most ``b``.

    ``a == b`` is accepted as the degenerate two-point limit.
    """

    a: float = 0.01
    b: float = 0.10

    def __post_init__(self):
        if not (0.0 < self.a <= self.b < 1.0):
            raise RampError(f"ramp parameters need 0 < a <= b < 1, got a={self.a}, b={self.b}")

    @property
    def variance(self) -> float:
        """Closed-form Var(delta); the distortion is ``a + (b-a)X`` with X ~ 2(1-x) on [0,1]."""
        a, w = self.a, self.b - self.a
        return a * a + 2.0 * a * w / 3.0 + w * w / 6.0


def ramp_density(delta, params: RampParams):
    """Density of the noise factor at ``delta``."""
    a, b = params.a, params.b
    d = np.abs(np.asarray(delta, dtype=float) - 1.0)
    if a == b:
        return np.where(np.isclose(d, a), np.inf, 0.0)
    inside = (d >= a) & (d <= b)
    return np.where(inside, (b - d) / (b - a) ** 2, 0.0)


def ramp_cdf(delta, params: RampParams):
    a, b = params.a, params.b
    x = np.asarray(delta, dtype=float)
    d = np.abs(x - 1.0)
    if a == b:
        tail = np.where(d >= a, 0.0, 0.5)
    else:
        tail = 0.5 * np.clip((b - d) / (b - a), 0.0, 1.0) ** 2
        tail = np.where(d < a, 0.5, tail)
    return np.where(x < 1.0, tail, 1.0 - tail)


def ramp_ppf(u, params: RampParams):
    """Inverse CDF: u < 1/2 maps below unity, u >= 1/2 above."""
    a, b = params.a, params.b
    u = np.asarray(u, dtype=float)
    lower = u < 0.5
    tail = np.where(lower, 2.0 * u, 2.0 * (1.0 - u))
    d = b - (b - a) * np.sqrt(np.clip(tail, 0.0, 1.0))
    return np.where(lower, 1.0 - d, 1.0 + d)


def draw_delta(employer_ids, params: RampParams, master_seed: int,
               stream: str = PRODUCTION_STREAM) -> np.ndarray:
    """Permanent production noise factor for each employer id.

    The draw is keyed on ``(master_seed, stream, employer_id)`` only, so the
    same employer gets the same factor in every quarter and every run.
    """
    ids = np.asarray(employer_ids, dtype=np.int64)
    return ramp_ppf(keyed_uniform(master_seed, stream, ids), params)


def simulate_sdl_draws(G: int, employer_ids, params: RampParams, seed: int,
                       stream: str = SIMULATION_STREAM) -> np.ndarray:
    """``G`` independent full noise assignments, shape ``(G, n_employers)``.

    Draws use a stream disjoint from production noise and are keyed on
    ``(employer_id, g)``.
    """
    if G < 2:
        raise ValueError("the simulation variance estimator needs G >= 2")
    ids = np.asarray(employer_ids, dtype=np.int64)
    g = np.arange(G, dtype=np.int64)[:, None]
    return ramp_ppf(keyed_uniform(seed, stream, ids[None, :], g), params)


@dataclass(frozen=True)
class NoiseAssignment:
    """Employer id -> noise factor, fixed for the whole window."""

    employer_ids: np.ndarray
    delta: np.ndarray

    def lookup(self, employer_ids) -> np.ndarray:
        order = np.argsort(self.employer_ids)
        pos = np.searchsorted(self.employer_ids[order], employer_ids)
        return self.delta[order][pos]
