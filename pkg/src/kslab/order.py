"""Global and local order parameters of a kinetic state, and their rates.

The amplitude R and average phase phi are the modulus and argument of the
phasor mean of the phase distribution; phi is only meaningful when R exceeds
TOL_R, and every phi-dependent quantity here refuses to extrapolate below
that threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

#: below this amplitude the average phase is treated as undefined
TOL_R = 1e-12


@dataclass(frozen=True)
class OrderParams:
    R: float
    phi: float          # in [0, 2*pi); 0.0 when undefined
    defined: bool       # True iff R > TOL_R

    def __iter__(self):
        yield self.R
        yield self.phi


def _from_phasor(z: complex) -> OrderParams:
    R = abs(z)
    if R > TOL_R:
        return OrderParams(float(R), float(np.angle(z) % TWO_PI), True)
    return OrderParams(float(R), 0.0, False)


def global_order(state) -> OrderParams:
    """Phasor mean of f over theta and omega (midpoint in theta, quadrature in omega)."""
    rho = state.weights @ state.values
    z = (rho @ state.grid.phasor_centers) * state.grid.dtheta
    return _from_phasor(z)


def local_order(state, k: int) -> OrderParams:
    """Order parameters of the conditional density on omega slice k."""
    mass = float(np.sum(state.values[k]) * state.grid.dtheta)
    if mass <= 0:
        raise ValueError(f"omega slice {k} has no mass")
    z = (state.values[k] @ state.grid.phasor_centers) * state.grid.dtheta / mass
    return _from_phasor(z)


def rdot_formula(state, op: OrderParams | None = None) -> float:
    """Closed-form dR/dt: -<sin(theta-phi) omega f> + K R <sin^2(theta-phi) rho>.

    For identical oscillators (omega = 0) this reduces to K R <sin^2 rho>,
    which is nonnegative.
    """
    op = global_order(state) if op is None else op
    if not op.defined:
        raise ValueError("average phase undefined (R below tolerance)")
    dth = state.grid.dtheta
    s = np.sin(state.grid.centers - op.phi)
    slice_sin = state.values @ s * dth            # per-omega integral of sin * f
    drift = -float(np.sum(state.weights * state.omega * slice_sin))
    rho = state.weights @ state.values
    return drift + state.K * op.R * float(rho @ (s * s)) * dth


def phidot_formula(state, op: OrderParams | None = None) -> float:
    """Closed-form dphi/dt: (1/R)<cos(theta-phi) omega f> - (K/2)<sin 2(theta-phi) rho>."""
    op = global_order(state) if op is None else op
    if not op.defined:
        raise ValueError("average phase undefined (R below tolerance)")
    dth = state.grid.dtheta
    d = state.grid.centers - op.phi
    slice_cos = state.values @ np.cos(d) * dth
    drift = float(np.sum(state.weights * state.omega * slice_cos)) / op.R
    rho = state.weights @ state.values
    return drift - 0.5 * state.K * float(rho @ np.sin(2.0 * d)) * dth


def phidot_bound(R: float, M: float, K: float) -> float:
    """A priori bound on |dphi/dt|: M/R + K(1 - R)."""
    if R <= 0:
        raise ValueError("bound requires R > 0")
    return M / R + K * (1.0 - R)


def kinetic_potential(state, op: OrderParams | None = None) -> float:
    """Interaction potential K/2 (1 - R^2); dissipates along the flow."""
    op = global_order(state) if op is None else op
    return 0.5 * state.K * (1.0 - op.R ** 2)
