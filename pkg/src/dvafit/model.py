"""Forward model: stoichiometry/capacity transforms and predicted voltage.

All quantities live on the observable-window ("tilde") basis: electrode
capacities and discharged-state stoichiometries are estimates relative to
the stoichiometry range actually covered by the reference curves, not the
true crystallographic values.  Everything here is pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ReferencePotentialCurve, interpolate_potential, potential_slope
from .errors import InfeasibilityError


@dataclass(frozen=True)
class ElectrodeParams:
    """The four fitted quantities plus the measured full-cell capacity.

    ``q_full`` comes from the measured data (last capacity sample) and
    is never fitted.  Feasibility (charged-state stoichiometries inside
    [0, 1]) is a queryable property rather than a construction invariant
    because optimizers legitimately propose infeasible candidates.
    """

    qn_tilde: float  # negative electrode capacity, Ah (observable-window basis)
    qp_tilde: float  # positive electrode capacity, Ah
    x0_tilde: float  # negative stoichiometry, fully discharged
    y0_tilde: float  # positive stoichiometry, fully discharged
    q_full: float  # measured full-cell capacity, Ah

    def __post_init__(self):
        if not (self.qn_tilde > 0 and self.qp_tilde > 0 and self.q_full > 0):
            raise InfeasibilityError(
                f"capacities must be positive: qn={self.qn_tilde}, "
                f"qp={self.qp_tilde}, q_full={self.q_full}"
            )
        if not 0.0 <= self.x0_tilde < 1.0:
            raise InfeasibilityError(f"x0_tilde must be in [0, 1), got {self.x0_tilde}")
        if not 0.0 < self.y0_tilde <= 1.0:
            raise InfeasibilityError(f"y0_tilde must be in (0, 1], got {self.y0_tilde}")

    @property
    def x100_tilde(self) -> float:
        """Negative stoichiometry in the fully charged state."""
        return self.x0_tilde + self.q_full / self.qn_tilde

    @property
    def y100_tilde(self) -> float:
        """Positive stoichiometry in the fully charged state."""
        return self.y0_tilde - self.q_full / self.qp_tilde

    @property
    def is_feasible(self) -> bool:
        return self.x100_tilde <= 1.0 and self.y100_tilde >= 0.0

    @property
    def is_strictly_feasible(self) -> bool:
        return self.x100_tilde < 1.0 and self.y100_tilde > 0.0

    def require_feasible(self) -> "ElectrodeParams":
        if not self.is_feasible:
            raise InfeasibilityError(
                f"infeasible parameters: x100={self.x100_tilde:.6g}, "
                f"y100={self.y100_tilde:.6g} must lie in [0, 1]"
            )
        return self

    def scaled(self, k: float) -> "ElectrodeParams":
        """Common capacity scaling (unit changes, areal normalization)."""
        return ElectrodeParams(
            qn_tilde=self.qn_tilde * k,
            qp_tilde=self.qp_tilde * k,
            x0_tilde=self.x0_tilde,
            y0_tilde=self.y0_tilde,
            q_full=self.q_full * k,
        )


@dataclass(frozen=True)
class StoichPair:
    """Electrode stoichiometries at one shared-capacity point.

    ``q`` may be negative: capacity present in an electrode but below the
    full-cell minimum-voltage cutoff ("virtual capacity").
    """

    x_tilde: float
    y_tilde: float
    q: float


def _as_numeric(value):
    return value if np.isscalar(value) else np.asarray(value, dtype=float)


def x_of_q(p: ElectrodeParams, q):
    """Negative-electrode stoichiometry at capacity ``q`` (may be virtual)."""
    return p.x0_tilde + _as_numeric(q) / p.qn_tilde


def y_of_q(p: ElectrodeParams, q):
    """Positive-electrode stoichiometry at capacity ``q``."""
    return p.y0_tilde - _as_numeric(q) / p.qp_tilde


def q_of_x(p: ElectrodeParams, x_tilde):
    """Shared-basis capacity at negative stoichiometry; inverse of x_of_q."""
    return p.qn_tilde * (_as_numeric(x_tilde) - p.x0_tilde)


def q_of_y(p: ElectrodeParams, y_tilde):
    """Shared-basis capacity at positive stoichiometry; inverse of y_of_q."""
    return p.qp_tilde * (p.y0_tilde - _as_numeric(y_tilde))


def charged_stoichiometries(p: ElectrodeParams) -> StoichPair:
    """Stoichiometries in the fully charged state (q = q_full)."""
    p.require_feasible()
    return StoichPair(x_tilde=p.x100_tilde, y_tilde=p.y100_tilde, q=p.q_full)


def stoich_profiles(p: ElectrodeParams, q_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(x_tilde, y_tilde) over a capacity grid, without range checks."""
    q = np.asarray(q_grid, dtype=float)
    return p.x0_tilde + q / p.qn_tilde, p.y0_tilde - q / p.qp_tilde


def _checked_profiles(p, q_grid):
    q = np.asarray(q_grid, dtype=float)
    x, y = stoich_profiles(p, q)
    bad = (x < 0.0) | (x > 1.0) | (y < 0.0) | (y > 1.0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InfeasibilityError(
            f"stoichiometry out of [0, 1] at q={q[i]:.6g} Ah "
            f"(x={x[i]:.6g}, y={y[i]:.6g})",
            offending_q=float(q[i]),
        )
    return x, y


def predict_voltage(
    p: ElectrodeParams,
    q_grid,
    u_pos: ReferencePotentialCurve,
    u_neg: ReferencePotentialCurve,
) -> np.ndarray:
    """Predicted full-cell voltage U_pos(y(q)) - U_neg(x(q)) over ``q_grid``."""
    x, y = _checked_profiles(p, q_grid)
    return interpolate_potential(u_pos, y) - interpolate_potential(u_neg, x)


def predict_dvdq(
    p: ElectrodeParams,
    q_grid,
    u_pos: ReferencePotentialCurve,
    u_neg: ReferencePotentialCurve,
) -> np.ndarray:
    """Analytic dV/dq from the interpolant slopes (chain rule).

    dV/dq = -(1/qp) U_pos'(y(q)) - (1/qn) U_neg'(x(q)).  Computed from the
    interpolant derivatives rather than by differencing the predicted
    voltage, so the differential channel of the fit objective carries no
    grid-resolution noise.
    """
    x, y = _checked_profiles(p, q_grid)
    return (
        -potential_slope(u_pos, y) / p.qp_tilde
        - potential_slope(u_neg, x) / p.qn_tilde
    )
