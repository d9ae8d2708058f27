"""Manufacturing diagnostics derived from fitted electrode parameters.

Closed-form features on the observable-window basis: lithium consumed by
SEI formation, cyclable lithium inventory and its decomposition, the
negative-to-positive ratio family, excess negative capacity, corrections
toward true (window-independent) values, and two-state degradation
metrics.  Sign anomalies are reported, never clamped: a negative SEI
capacity is a fit-quality signal, not a bug to hide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, InputDataError
from .model import ElectrodeParams


@dataclass(frozen=True)
class ArealFeatures:
    """Capacity features normalized to electrode area, in mAh/cm^2."""

    q_full: float
    qp_tilde: float
    qn_tilde: float
    q_sei: float
    q_li: float
    qn_excess: float


@dataclass(frozen=True)
class FeatureSet:
    """Derived diagnostics for one cell.

    Capacities are in Ah; ``areal`` is filled once an areal basis is known
    (see :func:`dvafit.batch.normalize_areal`).  ``anomalies`` lists any
    physically suspect signs encountered while deriving the features.
    """

    q_sei: float
    q_li: float
    qn_excess: float
    npr_practical: float
    npr_conventional: float
    x100_tilde: float
    y100_tilde: float
    q_full: float
    anomalies: tuple[str, ...] = ()
    areal: ArealFeatures | None = None


@dataclass(frozen=True)
class DesignParams:
    """Electrode design inputs for theoretical-capacity calculations."""

    loading_mg_cm2: float  # areal loading of the coated electrode
    active_fraction: float  # mass fraction of active material
    n_faces: int  # number of active electrode faces in the stack
    area_per_face_cm2: float  # active area per face, excluding overhang
    q_theor_mah_g: float  # theoretical specific capacity of the material

    def __post_init__(self):
        if min(self.loading_mg_cm2, self.n_faces, self.area_per_face_cm2, self.q_theor_mah_g) <= 0:
            raise ConfigError("design parameters must be positive")
        if not 0.0 < self.active_fraction <= 1.0:
            raise ConfigError(f"active_fraction must be in (0, 1], got {self.active_fraction}")


@dataclass(frozen=True)
class CorrectionInputs:
    """True-stoichiometry window bounds covered by the reference curves."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (0.0 <= self.x_min < self.x_max <= 1.0):
            raise ConfigError(f"need 0 <= x_min < x_max <= 1, got ({self.x_min}, {self.x_max})")
        if not (0.0 <= self.y_min < self.y_max <= 1.0):
            raise ConfigError(f"need 0 <= y_min < y_max <= 1, got ({self.y_min}, {self.y_max})")


@dataclass(frozen=True)
class DegradationMetrics:
    """Fractional losses between a pristine and an aged fitted state."""

    lam_pe: float  # loss of positive-electrode active material
    lam_ne: float  # loss of negative-electrode active material
    lli: float  # loss of cyclable lithium inventory


class LithiumInventory(NamedTuple):
    """Cyclable lithium and where it sits relative to the voltage window."""

    total: float
    above_vmax: float  # positive-electrode lithium above the upper cutoff
    in_window: float  # cyclable within the full-cell window (= q_full)
    below_vmin: float  # negative-electrode lithium below the lower cutoff


class PracticalNpr(NamedTuple):
    npr: float
    qn_excess: float


class CorrectedParams(NamedTuple):
    """Window-corrected capacities and stoichiometry spans.

    Absolute stoichiometries are filled only when an anchoring assumption
    is supplied; the window relations alone are under-determined.
    """

    q_p: float
    q_n: float
    x0_minus_x100: float
    y0_minus_y100: float
    anchored: bool
    x0: float | None = None
    x100: float | None = None
    y0: float | None = None
    y100: float | None = None


def q_sei(theta: ElectrodeParams) -> float:
    """Capacity of lithium irreversibly consumed during formation, Ah.

    Measured as the unoccupied positive-electrode capacity once the
    negative electrode is fully delithiated:
    qp*(1 - y0) - qn*x0.  Zero when the positive electrode can be fully
    relithiated (y0 = 1) from a fully delithiatable negative (x0 = 0).
    """
    theta.require_feasible()
    return theta.qp_tilde * (1.0 - theta.y0_tilde) - theta.qn_tilde * theta.x0_tilde


def q_li(theta: ElectrodeParams) -> LithiumInventory:
    """Total cyclable lithium inventory and its three-way decomposition, Ah.

    total = x0*qn + y0*qp.  The components place the inventory above the
    upper cutoff (qp*y100), inside the operating window (q_full), and
    below the lower cutoff (qn*x0); they sum to the total exactly.
    """
    theta.require_feasible()
    above = theta.qp_tilde * theta.y100_tilde
    below = theta.qn_tilde * theta.x0_tilde
    return LithiumInventory(
        total=theta.x0_tilde * theta.qn_tilde + theta.y0_tilde * theta.qp_tilde,
        above_vmax=above,
        in_window=theta.q_full,
        below_vmin=below,
    )


def npr_practical(theta: ElectrodeParams) -> PracticalNpr:
    """Practical negative-to-positive ratio and the excess capacity behind it.

    qn_excess = qn*(1 - x0) - q_full is the negative capacity left above
    the fully charged state; npr = 1 + qn_excess / q_full, exactly 1 when
    the negative electrode saturates at top of charge.
    """
    theta.require_feasible()
    excess = theta.qn_tilde * (1.0 - theta.x0_tilde) - theta.q_full
    return PracticalNpr(npr=1.0 + excess / theta.q_full, qn_excess=excess)


def npr_conventional(theta: ElectrodeParams) -> float:
    """Ratio of fitted electrode capacities, qn/qp."""
    theta.require_feasible()
    return theta.qn_tilde / theta.qp_tilde


def npr_theoretical(pos: DesignParams, neg: DesignParams) -> float:
    """Design-basis NPR from active-material areal loadings.

    Uses active-mass-corrected loadings (loading * active_fraction) per
    unit area, so stack geometry cancels.
    """
    num = neg.loading_mg_cm2 * neg.active_fraction * neg.q_theor_mah_g
    den = pos.loading_mg_cm2 * pos.active_fraction * pos.q_theor_mah_g
    return num / den


class TheoreticalCapacity(NamedTuple):
    total_ah: float
    areal_mah_cm2: float


def theoretical_capacity(d: DesignParams) -> TheoreticalCapacity:
    """Design capacity of one electrode: total (Ah) and areal (mAh/cm^2)."""
    areal = d.loading_mg_cm2 * d.active_fraction * d.q_theor_mah_g / 1000.0
    total = areal * d.n_faces * d.area_per_face_cm2 / 1000.0
    return TheoreticalCapacity(total_ah=total, areal_mah_cm2=areal)


def observed_fraction(
    theta: ElectrodeParams,
    d_pos: DesignParams,
    d_neg: DesignParams,
    areal_basis_cm2: float | None = None,
) -> tuple[float, float]:
    """Fitted areal capacity as a fraction of theoretical, (positive, negative).

    ``theta`` capacities are taken as mAh/cm^2 already when
    ``areal_basis_cm2`` is None, otherwise converted from Ah using the
    given total active area.  Fractions far above unity indicate a unit
    or basis mix-up and are rejected.
    """
    if areal_basis_cm2 is not None:
        if areal_basis_cm2 <= 0:
            raise ConfigError("areal_basis_cm2 must be positive")
        qp = theta.qp_tilde * 1000.0 / areal_basis_cm2
        qn = theta.qn_tilde * 1000.0 / areal_basis_cm2
    else:
        qp, qn = theta.qp_tilde, theta.qn_tilde
    frac_pos = qp / theoretical_capacity(d_pos).areal_mah_cm2
    frac_neg = qn / theoretical_capacity(d_neg).areal_mah_cm2
    if max(frac_pos, frac_neg) > 2.0:
        raise InputDataError(
            f"observed/theoretical fraction {max(frac_pos, frac_neg):.3g} exceeds 2; "
            "fitted capacities and design parameters are probably on different unit bases"
        )
    return frac_pos, frac_neg


def correct_to_true(
    theta: ElectrodeParams,
    c: CorrectionInputs,
    anchor: bool = False,
) -> CorrectedParams:
    """Convert observable-window estimates toward true values.

    True capacities scale by the inverse stoichiometry span of the
    reference curves; stoichiometry spans scale forward.  With
    ``anchor=True`` the common assumption x100 = x100_tilde,
    y0 = y0_tilde pins absolute stoichiometries as well; the result is
    flagged so downstream consumers know an assumption was injected.
    """
    theta.require_feasible()
    span_x = c.x_max - c.x_min
    span_y = c.y_max - c.y_min
    q_n = theta.qn_tilde / span_x
    q_p = theta.qp_tilde / span_y
    x0_minus_x100 = (theta.x0_tilde - theta.x100_tilde) * span_x
    y0_minus_y100 = (theta.y0_tilde - theta.y100_tilde) * span_y
    if not anchor:
        return CorrectedParams(
            q_p=q_p,
            q_n=q_n,
            x0_minus_x100=x0_minus_x100,
            y0_minus_y100=y0_minus_y100,
            anchored=False,
        )
    x100 = theta.x100_tilde
    y0 = theta.y0_tilde
    return CorrectedParams(
        q_p=q_p,
        q_n=q_n,
        x0_minus_x100=x0_minus_x100,
        y0_minus_y100=y0_minus_y100,
        anchored=True,
        x0=x100 + x0_minus_x100,
        x100=x100,
        y0=y0,
        y100=y0 - y0_minus_y100,
    )


def degradation(pristine: ElectrodeParams, aged: ElectrodeParams) -> DegradationMetrics:
    """Fractional capacity losses between two fitted states.

    Both states must come from the same reference-curve family; the
    observable-window scaling then cancels in every ratio, so these
    metrics are unaffected by the window choice.
    """
    li0 = q_li(pristine).total
    li1 = q_li(aged).total
    if pristine.qn_tilde <= 0 or pristine.qp_tilde <= 0 or li0 <= 0:
        raise InputDataError("pristine capacities must be positive")
    return DegradationMetrics(
        lam_pe=1.0 - aged.qp_tilde / pristine.qp_tilde,
        lam_ne=1.0 - aged.qn_tilde / pristine.qn_tilde,
        lli=1.0 - li1 / li0,
    )


def derive_features(theta: ElectrodeParams) -> FeatureSet:
    """Assemble the full diagnostic feature set for one fitted cell."""
    theta.require_feasible()
    sei = q_sei(theta)
    inventory = q_li(theta)
    practical = npr_practical(theta)
    anomalies = []
    if sei < 0:
        anomalies.append("negative q_sei")
    if practical.qn_excess < 0:
        anomalies.append("negative qn_excess")
    return FeatureSet(
        q_sei=sei,
        q_li=inventory.total,
        qn_excess=practical.qn_excess,
        npr_practical=practical.npr,
        npr_conventional=npr_conventional(theta),
        x100_tilde=theta.x100_tilde,
        y100_tilde=theta.y100_tilde,
        q_full=theta.q_full,
        anomalies=tuple(anomalies),
    )
