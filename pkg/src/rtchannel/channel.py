"""Narrowband coefficient synthesis from a traced multipath list.

Order of operations is fixed: power pruning, then the near-LOS delay window,
then the coherent sum ``h = sum(alpha_i * exp(-2j pi f_c tau_i))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raytracer import C0, PropagationPath


class ChannelDomainError(ValueError):
    pass


class NoValidPathError(ValueError):
    """No path survived pruning and the LOS window; the sample is invalid."""


@dataclass(frozen=True)
class PruningConfig:
    delta_th_db: float = 30.0
    epsilon_tau_s: float = 57.76e-9

    def __post_init__(self):
        # delta_th = 0 is the inclusive boundary case (strongest paths only)
        if not (math.isfinite(self.delta_th_db) and self.delta_th_db >= 0):
            raise ValueError("delta_th_db must be finite and >= 0")
        if math.isnan(self.epsilon_tau_s) or self.epsilon_tau_s < 0:
            raise ValueError("epsilon_tau_s must be >= 0")


@dataclass(frozen=True)
class ComplexCoefficient:
    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def path_powers(paths: list[PropagationPath]) -> np.ndarray:
    if not paths:
        raise ChannelDomainError("no paths to take powers of")
    g = np.array([p.gain for p in paths], dtype=complex)
    return g.real ** 2 + g.imag ** 2


def prune_paths(paths: list[PropagationPath], cfg: PruningConfig = PruningConfig()) -> list[PropagationPath]:
    """Keep paths with ``P_i >= P_max * 10**(-delta_th/10)``, order preserved."""
    P = path_powers(paths)
    floor = P.max() * 10.0 ** (-cfg.delta_th_db / 10.0)
    return [p for p, pi in zip(paths, P) if pi >= floor]


def los_set(paths: list[PropagationPath], tx, rx, cfg: PruningConfig = PruningConfig()) -> list[PropagationPath]:
    """Paths whose delay lies within ``epsilon_tau`` of the straight-line delay."""
    d = math.dist(_xyz(tx), _xyz(rx))
    ref = d / C0
    return [p for p in paths if abs(p.delay - ref) <= cfg.epsilon_tau_s]


def narrowband_coefficient(paths: list[PropagationPath], f_c: float) -> ComplexCoefficient:
    if f_c <= 0:
        raise ChannelDomainError("carrier frequency must be positive")
    if not paths:
        raise NoValidPathError("no surviving path")
    h = 0j
    for p in paths:
        # reduce the cycle count before scaling by 2 pi to keep the phase exact
        cycles = math.fmod(f_c * p.delay, 1.0)
        h += p.gain * complex(math.cos(-2 * math.pi * cycles), math.sin(-2 * math.pi * cycles))
    return ComplexCoefficient(h.real, h.imag)


def synthesize(paths: list[PropagationPath], tx, rx, f_c: float,
               cfg: PruningConfig = PruningConfig()) -> ComplexCoefficient | None:
    """Prune, LOS-filter and sum; ``None`` marks a receiver with no valid path."""
    if not paths:
        return None
    kept = los_set(prune_paths(paths, cfg), tx, rx, cfg)
    if not kept:
        return None
    return narrowband_coefficient(kept, f_c)


def _xyz(p):
    return p.as_tuple() if hasattr(p, "as_tuple") else tuple(float(v) for v in p)
