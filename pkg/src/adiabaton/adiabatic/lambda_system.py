"""Lambda scheme: coupled/uncoupled basis, monitors and the stretched-time solution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from ..errors import ControlVanishes, ZeroTotalField
from .monitors import DEFAULT_THRESHOLD, MonitorRecord, make_record

EPS = 1e-12


@dataclass(frozen=True)
class LambdaFrame:
    """Adiabatic-basis quantities at one or many points (arrays broadcast).

    Attributes
    ----------
    omega_total : total Rabi frequency ``sqrt(|O0|^2 + |O1|^2)``
    psi_C, psi_U : coupled and uncoupled amplitudes of ``state``
    delta_eff : effective detuning of the uncoupled state
    omega_minus : non-adiabatic coupling between uncoupled and coupled states
    psi_C_est, psi_e_est : first-order estimates driven by ``psi_U``
    loss_rate : population loss rate ``2 Gamma |omega_minus|^2 / Omega^2``
    """

    omega_total: np.ndarray
    psi_C: np.ndarray
    psi_U: np.ndarray
    delta_eff: np.ndarray
    omega_minus: np.ndarray
    psi_C_est: np.ndarray
    psi_e_est: np.ndarray
    loss_rate: np.ndarray


def lambda_frame(fields, field_time_derivatives, state=None, delta: float = 0.0,
                 gamma: float = 1.0) -> LambdaFrame:
    """Transform to the coupled/uncoupled basis.

    Parameters
    ----------
    fields, field_time_derivatives : array_like, shape (..., 2)
        ``(Omega0, Omega1)`` and their time derivatives, supplied by the caller
        (analytic for model pulses, centered differences for solver slices).
    state : array_like, shape (..., 3), optional
        ``(psi0, psi1, psi_e)``.  Without it the atoms are taken to sit in the
        uncoupled state, ``psi_U = 1``.
    delta : float
        Two-photon detuning of level 1.
    """
    f = np.asarray(fields, dtype=complex)
    df = np.asarray(field_time_derivatives, dtype=complex)
    o0, o1 = f[..., 0], f[..., 1]
    d0, d1 = df[..., 0], df[..., 1]
    om2 = np.abs(o0) ** 2 + np.abs(o1) ** 2
    if np.any(om2 <= EPS ** 2):
        raise ZeroTotalField("total Rabi frequency vanishes")
    om = np.sqrt(om2)

    omega_minus = (1j * (o1 * d0 - o0 * d1) - delta * o0 * o1) / om2
    delta_eff = (-np.imag(o0 * np.conj(d0) + o1 * np.conj(d1)) + delta * np.abs(o0) ** 2) / om2

    if state is None:
        psi_U = np.ones_like(om, dtype=complex)
        psi_C = np.zeros_like(psi_U)
    else:
        s = np.asarray(state, dtype=complex)
        psi_C = (o0 * s[..., 0] + o1 * s[..., 1]) / om
        psi_U = (np.conj(o1) * s[..., 0] - np.conj(o0) * s[..., 1]) / om

    return LambdaFrame(
        omega_total=om,
        psi_C=psi_C,
        psi_U=psi_U,
        delta_eff=delta_eff,
        omega_minus=omega_minus,
        psi_C_est=-2j * gamma * omega_minus / om2 * psi_U,
        psi_e_est=2.0 * omega_minus / om * psi_U,
        loss_rate=2.0 * gamma * np.abs(omega_minus) ** 2 / om2,
    )


def lambda_adiabaticity(frame: LambdaFrame, gamma: float = 1.0, alpha: float = 1.0,
                        threshold: float = DEFAULT_THRESHOLD) -> MonitorRecord:
    """Dimensionless adiabaticity ratios of a Lambda frame.

    ``rate``: ``|Omega_-|/Omega``; ``splitting``: ``Gamma |Delta| / Omega^2``;
    ``coupled``: ``Gamma |Omega_-| / Omega^2``; ``lifetime``: ``coupled^2 * alpha``.
    """
    om = frame.omega_total
    om2 = om ** 2
    coupled = gamma * np.abs(frame.omega_minus) / om2
    return make_record({
        "rate": np.abs(frame.omega_minus) / om,
        "splitting": gamma * np.abs(frame.delta_eff) / om2,
        "coupled": coupled,
        "lifetime": coupled ** 2 * alpha,
    }, threshold)


def _pair(boundary):
    if isinstance(boundary, Mapping):
        return boundary["omega0"], boundary["omega1"]
    b0, b1 = boundary
    return b0, b1


@dataclass(frozen=True, eq=False)
class StretchedTime:
    """Monotone map ``zeta(tau) = (1/kappa) int Omega^2 dtau`` of the boundary fields.

    ``kappa = g/c``, so ``zeta`` is measured in absorption lengths and a
    characteristic of the adiabatic ratio equation is ``zeta - z = const``.
    The table spans ``[tau_lo, tau_hi]``; ``zeta(tau_lo) = 0``.
    """

    tau_table: np.ndarray
    zeta_table: np.ndarray
    boundary: tuple
    kappa: float

    @classmethod
    def build(cls, boundary, tau_lo: float, tau_hi: float, kappa: float = 1.0,
              step: Optional[float] = None) -> "StretchedTime":
        b0, b1 = _pair(boundary)
        if step is None:
            step = 1e-3
        n = int(np.ceil((tau_hi - tau_lo) / step)) + 1
        tau = np.linspace(tau_lo, tau_hi, n)
        om2 = np.abs(b0(tau)) ** 2 + np.abs(b1(tau)) ** 2
        if np.any(om2 <= EPS ** 2):
            raise ZeroTotalField("total Rabi frequency vanishes on the stretched-time table")
        zeta = cumulative_simpson(om2, x=tau, initial=0.0) / kappa
        if np.any(np.diff(zeta) <= 0):
            raise ZeroTotalField("stretched time is not strictly increasing")
        return cls(tau, zeta, (b0, b1), kappa)

    def __post_init__(self):
        object.__setattr__(self, "_forward", CubicSpline(self.tau_table, self.zeta_table))
        object.__setattr__(self, "_inverse", CubicSpline(self.zeta_table, self.tau_table))

    def zeta_of_tau(self, tau):
        return self._forward(np.asarray(tau, dtype=float))

    def tau_of_zeta(self, zeta):
        return self._inverse(np.asarray(zeta, dtype=float))

    def f(self, zeta):
        """Boundary ratio ``Omega0(0, t) / Omega1(0, t)`` with ``t = zeta^-1(zeta)``."""
        t = self.tau_of_zeta(zeta)
        b0, b1 = self.boundary
        o1 = np.asarray(b1(t), dtype=complex)
        if np.any(np.abs(o1) < EPS):
            raise ControlVanishes("control field vanishes; ratio undefined")
        return np.asarray(b0(t), dtype=complex) / o1


def lambda_analytic_solution(boundary, delta: float, z: float, tau_grid,
                             kappa: float = 1.0) -> np.ndarray:
    """Adiabatic Lambda fields at depth ``z`` (absorption lengths).

    The total Rabi frequency is carried unchanged in the retarded frame, and the
    ratio ``chi = Omega0/Omega1`` is transported along ``zeta - z = const``,
    picking up the phase ``exp(-i delta (tau - tau_src))``.

    Returns
    -------
    ndarray, shape (len(tau_grid), 2)
        Complex ``(Omega0, Omega1)``.
    """
    b0, b1 = _pair(boundary)
    tau = np.asarray(tau_grid, dtype=float)
    o0b = np.asarray(b0(tau), dtype=complex)
    o1b = np.asarray(b1(tau), dtype=complex)
    if z == 0:
        return np.stack([o0b, o1b], axis=-1)
    om = np.sqrt(np.abs(o0b) ** 2 + np.abs(o1b) ** 2)
    if np.any(om <= EPS):
        raise ZeroTotalField("total Rabi frequency vanishes on the requested grid")
    if np.any(np.abs(o1b) < EPS):
        raise ControlVanishes("control field vanishes on the requested grid")

    # Omega^2 >= min over the window, so a source time lies at most z*kappa/min(Omega^2) earlier
    probe = np.linspace(tau.min() - 1.0, tau.max(), 4001)
    om2_min = float(np.min(np.abs(b0(probe)) ** 2 + np.abs(b1(probe)) ** 2))
    if om2_min <= EPS:
        raise ZeroTotalField("total Rabi frequency vanishes before the requested grid")
    back = abs(z) * kappa / max(om2_min, EPS) + 1.0
    lo, hi = tau.min() - back, tau.max() + 1.0
    while True:
        st = StretchedTime.build((b0, b1), lo, hi, kappa, step=min(1e-3, (hi - lo) / 2e5))
        target = st.zeta_of_tau(tau) - z
        if np.all(target >= 0):
            break
        lo -= back
    tau_src = st.tau_of_zeta(target)
    o1s = np.asarray(b1(tau_src), dtype=complex)
    if np.any(np.abs(o1s) < EPS):
        raise ControlVanishes("control field vanishes at a source time")
    chi = np.asarray(b0(tau_src), dtype=complex) / o1s
    if delta:
        chi = chi * np.exp(-1j * delta * (tau - tau_src))
    phase = np.where(np.abs(o1b) > EPS, o1b / np.maximum(np.abs(o1b), EPS), 1.0)
    o1 = om / np.sqrt(1.0 + np.abs(chi) ** 2) * phase
    return np.stack([chi * o1, o1], axis=-1)
