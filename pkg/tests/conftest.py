"""Shared fixtures: curve families, worked parameter sets, strategies.

The linear curve family matters for exact-numerics tests: monotone cubic
interpolation reproduces linear data exactly and the Savitzky-Golay
derivative is exact on linear signals, so model-minus-measured residuals
at the true parameters vanish to round-off only for this family.  The analytic
family exercises realistic curvature and staging features instead.
"""

from __future__ import annotations

import pathlib

import numpy as np
import pytest
from hypothesis import strategies as st

from dvafit.curves import ReferencePotentialCurve
from dvafit.model import ElectrodeParams
from dvafit.synth import analytic_reference_curves

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def analytic_curves():
    return analytic_reference_curves()


@pytest.fixture(scope="session")
def linear_curves():
    # U_pos = 4.2 - 0.8 s, U_neg = 0.6 - 0.5 s; 21 nodes suffice since the
    # interpolant is exact on linear data.
    s = np.linspace(0.0, 1.0, 21)
    u_pos = ReferencePotentialCurve(
        electrode_role="positive",
        direction="delithiation",
        c_rate=0.01,
        stoich_grid=s,
        potential=4.2 - 0.8 * s,
        source_voltage_window=(3.4, 4.2),
        capacity_basis_mah=1000.0,
    )
    u_neg = ReferencePotentialCurve(
        electrode_role="negative",
        direction="lithiation",
        c_rate=0.01,
        stoich_grid=s,
        potential=0.6 - 0.5 * s,
        source_voltage_window=(0.1, 0.6),
        capacity_basis_mah=1000.0,
    )
    return u_pos, u_neg


@pytest.fixture(scope="session")
def flat_curves():
    # Constant potentials; the declared window must still be a proper
    # interval, so it brackets the constant.
    s = np.linspace(0.0, 1.0, 11)
    u_pos = ReferencePotentialCurve(
        electrode_role="positive",
        direction="delithiation",
        c_rate=0.01,
        stoich_grid=s,
        potential=np.full_like(s, 4.0),
        source_voltage_window=(3.9, 4.1),
        capacity_basis_mah=1000.0,
    )
    u_neg = ReferencePotentialCurve(
        electrode_role="negative",
        direction="lithiation",
        c_rate=0.01,
        stoich_grid=s,
        potential=np.full_like(s, 0.1),
        source_voltage_window=(0.0, 0.2),
        capacity_basis_mah=1000.0,
    )
    return u_pos, u_neg


@pytest.fixture()
def example_theta():
    # The worked-arithmetic parameter set used across feature tests.
    return ElectrodeParams(
        qn_tilde=2.70, qp_tilde=2.66, x0_tilde=0.02, y0_tilde=0.93, q_full=2.30
    )


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@st.composite
def feasible_thetas(draw):
    """Random strictly feasible electrode parameters.

    q_full is drawn as a fraction of the feasibility limit, capped below
    1 so charged-state stoichiometries keep float headroom inside [0, 1].
    """
    qn = draw(st.floats(0.5, 5.0))
    qp = draw(st.floats(0.5, 5.0))
    x0 = draw(st.floats(0.0, 0.3))
    y0 = draw(st.floats(0.7, 1.0))
    frac = draw(st.floats(0.05, 0.995))
    q_full = frac * min(qn * (1.0 - x0), qp * y0)
    return ElectrodeParams(
        qn_tilde=qn, qp_tilde=qp, x0_tilde=x0, y0_tilde=y0, q_full=q_full
    )


def random_theta(rng: np.random.Generator) -> ElectrodeParams:
    """rng-driven equivalent of the hypothesis strategy, for bulk sweeps."""
    qn = rng.uniform(0.5, 5.0)
    qp = rng.uniform(0.5, 5.0)
    x0 = rng.uniform(0.0, 0.3)
    y0 = rng.uniform(0.7, 1.0)
    frac = rng.uniform(0.05, 0.995)
    q_full = frac * min(qn * (1.0 - x0), qp * y0)
    return ElectrodeParams(
        qn_tilde=qn, qp_tilde=qp, x0_tilde=x0, y0_tilde=y0, q_full=q_full
    )
