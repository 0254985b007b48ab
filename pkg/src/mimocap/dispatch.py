"""Routing: classify the instance by channel rank and hand it to the
right solver.  This module's solve() is the library's public entry point.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import ChannelMatrix, PowerConstraints, SolveReport
from .basic import solve_basic
from .errors import RoutingError
from .fullrank import closed_form_conditions, solve_closed_form, solve_fullrank
from .optim import OptimSettings
from .singular import solve_singular
from .unitrank import solve_unitrank
from .waterfill import waterfill_tp


class SolveMode(str, Enum):
    auto = "auto"
    basic = "basic"
    fullrank = "fullrank"
    singular = "singular"
    unitrank = "unitrank"
    closedform = "closedform"
    waterfill = "waterfill"


def _auto_route(h: ChannelMatrix, c: PowerConstraints) -> SolveMode:
    if h.nu == 1:
        return SolveMode.unitrank
    if h.is_full_rank():
        if closed_form_conditions(h, c).eligible:
            return SolveMode.closedform
        return SolveMode.fullrank
    return SolveMode.singular


def solve(h: ChannelMatrix, c: PowerConstraints,
          mode: SolveMode | str = SolveMode.auto,
          s: OptimSettings | None = None) -> SolveReport:
    """Solve the joint-constraint capacity problem.

    mode=auto picks the reduced solver matching the channel rank (with the
    closed form when its conditions hold); explicit modes force one solver
    and raise RoutingError when its preconditions fail.
    """
    mode = SolveMode(mode)
    s = s or OptimSettings()
    if c.n_t != h.n_t:
        raise RoutingError(
            f"constraints are for {c.n_t} antennas, channel has {h.n_t}"
        )
    if mode is SolveMode.auto:
        mode = _auto_route(h, c)

    if mode is SolveMode.basic:
        return solve_basic(h, c, s)
    if mode is SolveMode.waterfill:
        return waterfill_tp(h, c.p_tot)
    if mode is SolveMode.unitrank:
        if h.nu != 1:
            raise RoutingError(
                f"unitrank solver requires rank 1, channel has rank {h.nu}"
            )
        return solve_unitrank(h, c)
    if mode is SolveMode.closedform:
        if not h.is_full_rank():
            raise RoutingError(
                f"closed form requires full rank; channel rank {h.nu} < {h.n_t}"
            )
        diag = closed_form_conditions(h, c)
        if not diag.eligible:
            raise RoutingError(
                "closed-form budget conditions violated "
                f"(lower margin {diag.lower_margin:.3e}, "
                f"upper margin {diag.upper_margin:.3e})"
            )
        return solve_closed_form(h, c)
    if mode is SolveMode.fullrank:
        if not h.is_full_rank():
            raise RoutingError(
                f"fullrank solver requires rank {h.n_t}, channel has rank {h.nu}"
            )
        return solve_fullrank(h, c, s)
    if mode is SolveMode.singular:
        if not (1 < h.nu < h.n_t):
            raise RoutingError(
                f"singular solver requires 1 < rank < n_t, channel has rank {h.nu}"
            )
        return solve_singular(h, c, s)
    raise RoutingError(f"unknown mode {mode}")


@dataclass
class CrossValidation:
    auto_report: SolveReport
    basic_report: SolveReport
    capacity_gap: float


def cross_validate(h: ChannelMatrix, c: PowerConstraints,
                   s: OptimSettings | None = None) -> CrossValidation:
    """Run the auto route and the direct oracle; report both and the gap."""
    auto_rep = solve(h, c, SolveMode.auto, s)
    basic_rep = solve_basic(h, c, s)
    return CrossValidation(
        auto_report=auto_rep,
        basic_report=basic_rep,
        capacity_gap=abs(auto_rep.capacity_nats - basic_rep.capacity_nats),
    )
