"""Tunable budgets and constants, grouped into small dataclass configs.

The cover theorems only pin down asymptotic shapes, so every numeric
constant that the code compares or reports against lives here instead of
being baked into an algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_MAX_ORDER = 1 << 20


@dataclass(frozen=True)
class Budgets:
    """Hard caps on enumeration sizes; exceeding one raises BudgetExceeded."""

    span_elements: int = 20        # max basis length for span / dissociation work
    brute_force: int = 10**8       # max |G|**(r-1) for exact solution counting
    subset_exhaustive: int = 14    # max |A| for exhaustive subset search
    witness_tuples: int = 10**8    # max |A|**r for the distinct-solution search


@dataclass(frozen=True)
class CoverConstants:
    """Multipliers for the measured size budgets of the cover constructions."""

    chang: float = 8.0      # budget chang * delta**-2 * log(l2^2/l1^2)
    shkredov: float = 8.0   # budget shkredov * K * log|A|
    symset: float = 8.0     # budget symset * eta**-2 * log|A|
    span_size: float = 8.0  # budget span_size * K**eta * log|A| for the combined cover
    core_exponent: float = 1.0  # K**(core_exponent/log(1/(1-eps))) in the core bound


@dataclass(frozen=True)
class BsgConfig:
    """Knobs for the dense-piece extraction from high additive energy."""

    edge_fraction: float = 0.5      # popular difference: count >= edge_fraction*c*|S|
    refine_fraction: float = 0.125  # keep u with >= refine_fraction*c*c*|S| two-paths
    size_exponent: float = 3.0      # report |S'|/|S| against c**size_exponent
    doubling_exponent: float = 4.0  # report doubling of S' against c**-doubling_exponent


@dataclass(frozen=True)
class DriverKnobs:
    """Thresholds for the iteration trichotomy and its audit policy.

    The spectral threshold for a codimension-1 step is
    amplification_factor * eps * alpha with eps = alpha**(1/(r-2))/4, where
    amplification_factor = alpha**(-amplification/((r-2)*r)).  With
    amplification = 0 the factor is 1 and the high-codimension branch is
    unreachable; setting it positive exercises the full cover pipeline.
    """

    amplification: float = 0.0
    cover_eta: float = 0.5          # correlation-span parameter in the l2 branch
    audit_every: int = 1            # cross-check the transform count every k steps
    audit_max_order: int = 729      # only audit while the group is at most this big
    bsg: BsgConfig = field(default_factory=BsgConfig)
    covers: CoverConstants = field(default_factory=CoverConstants)
    budgets: Budgets = field(default_factory=Budgets)


@dataclass(frozen=True)
class DriverLimits:
    """Termination limits for the restriction loop.

    max_iters = None uses 4*ceil(alpha0**(-1/(r-2)) * (r-2)), which the
    density growth per step makes unreachable on honest instances.
    """

    max_iters: int | None = None
    min_order: int = 2
