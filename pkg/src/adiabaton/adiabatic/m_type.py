"""M-type scheme: ratio frame, velocity matrix and the equal-fields group velocity.

Field order is ``(omega10, omega11, omega20, omega22)``; ``chi_j = Omega_j0 / Omega_jj``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ControlVanishes
from .double_tripod import VelocityOperator
from .monitors import DEFAULT_THRESHOLD, MonitorRecord, make_record

EPS = 1e-12


@dataclass(frozen=True)
class MFrame:
    chi1: np.ndarray
    chi2: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    delta_eff: np.ndarray


def _ratios(fields, dfields=None):
    f = np.asarray(fields, dtype=complex)
    o10, o11, o20, o22 = (f[..., k] for k in range(4))
    if np.any(np.abs(o11) < EPS) or np.any(np.abs(o22) < EPS):
        raise ControlVanishes("control fields omega11 and omega22 must be nonzero")
    chi1, chi2 = o10 / o11, o20 / o22
    if dfields is None:
        return f, chi1, chi2
    df = np.asarray(dfields, dtype=complex)
    dchi1 = (df[..., 0] * o11 - o10 * df[..., 1]) / o11 ** 2
    dchi2 = (df[..., 2] * o22 - o20 * df[..., 3]) / o22 ** 2
    return f, chi1, chi2, dchi1, dchi2


def m_frame(fields, field_time_derivatives, deltas: Sequence[float] = (0.0, 0.0)) -> MFrame:
    """Adiabatic-basis quantities of the M scheme.

    ``V_j = (i d/dt - delta_j) chi_j / N0`` are the non-adiabatic couplings and
    ``W_j`` the excited-state amplitudes per unit ``psi_U`` in closed form.
    ``delta_eff`` is the phase rate of the uncoupled state.
    """
    d1, d2 = (float(d) for d in deltas)
    f, chi1, chi2, dchi1, dchi2 = _ratios(fields, field_time_derivatives)
    a1, a2 = np.abs(chi1) ** 2, np.abs(chi2) ** 2
    n0sq, n1sq, n2sq = 1.0 + a1 + a2, 1.0 + a1, 1.0 + a2
    n0 = np.sqrt(n0sq)
    v1 = (1j * dchi1 - d1 * chi1) / n0
    v2 = (1j * dchi2 - d2 * chi2) / n0
    w1 = (n2sq * v1 - chi1 * np.conj(chi2) * v2) / (np.conj(f[..., 1]) * n0sq)
    w2 = (n1sq * v2 - chi2 * np.conj(chi1) * v1) / (np.conj(f[..., 3]) * n0sq)

    # uncoupled vector u = (1, chi1*, chi2*)/N0; Delta = sum_k u_k^* i du_k/dt + detuning terms
    dn0 = np.real(np.conj(chi1) * dchi1 + np.conj(chi2) * dchi2) / n0
    u = (1.0 / n0, np.conj(chi1) / n0, np.conj(chi2) / n0)
    du = (-dn0 / n0sq,
          np.conj(dchi1) / n0 - np.conj(chi1) * dn0 / n0sq,
          np.conj(dchi2) / n0 - np.conj(chi2) * dn0 / n0sq)
    delta_eff = sum(np.conj(uk) * 1j * duk for uk, duk in zip(u, du))
    delta_eff = np.real(delta_eff) + (d1 * a1 + d2 * a2) / n0sq
    return MFrame(chi1, chi2, n0, np.sqrt(n1sq), np.sqrt(n2sq), v1, v2, w1, w2, delta_eff)


def m_w_linear_solve(fields, frame: MFrame) -> np.ndarray:
    """``(W1, W2)`` from the 2x2 system coupling the excited amplitudes to ``V_j``.

    Independent of the closed forms in :func:`m_frame`; used as a check.
    """
    f = np.asarray(fields, dtype=complex)
    a = np.empty(f.shape[:-1] + (2, 2), dtype=complex)
    a[..., 0, 0] = np.conj(f[..., 1]) * frame.n1 ** 2
    a[..., 0, 1] = np.conj(f[..., 2]) * frame.chi1
    a[..., 1, 0] = np.conj(f[..., 0]) * frame.chi2
    a[..., 1, 1] = np.conj(f[..., 3]) * frame.n2 ** 2
    rhs = np.stack([frame.v1, frame.v2], axis=-1)[..., None]
    return np.linalg.solve(a, rhs)[..., 0]


def m_adiabaticity(frame: MFrame, threshold: float = DEFAULT_THRESHOLD) -> MonitorRecord:
    """Excited-state admixture ``|W_j|`` (population in ``e_j`` is ``4|W_j|^2``)."""
    return make_record({"w1": frame.w1, "w2": frame.w2}, threshold)


def m_group_velocity(chi1_abs, omega1_total, g_over_c: float = 1.0):
    """Equal-fields adiabaton velocity ``(c/g) Omega1^2 N0^4 / N1^4``.

    ``N0^2 = 1 + 2|chi1|^2`` and ``N1^2 = 1 + |chi1|^2`` because both ratios coincide.
    """
    x = np.abs(np.asarray(chi1_abs, dtype=float)) ** 2
    return np.asarray(omega1_total, dtype=float) ** 2 / g_over_c * ((1.0 + 2.0 * x) / (1.0 + x)) ** 2


def m_velocity_matrix(fields, deltas: Sequence[float] = (0.0, 0.0),
                      g_over_c: float = 1.0) -> VelocityOperator:
    """Inverse group-velocity matrix acting on ``(chi1, chi2)`` at one field point.

    ``(g/c) diag(N1^4 / (Omega1^2 N0^4), N2^4 / (Omega2^2 N0^4)) (N0^2 I - chi chi^H)``.
    Hermitian only when ``N1^2/|Omega11|^2 = N2^2/|Omega22|^2``.
    """
    f, chi1, chi2 = _ratios(np.asarray(fields, dtype=complex).reshape(4))
    chi = np.array([chi1, chi2])
    n0sq = 1.0 + np.sum(np.abs(chi) ** 2)
    n1sq, n2sq = 1.0 + abs(chi1) ** 2, 1.0 + abs(chi2) ** 2
    om1sq = abs(f[0]) ** 2 + abs(f[1]) ** 2
    om2sq = abs(f[2]) ** 2 + abs(f[3]) ** 2
    scale = np.diag([n1sq ** 2 / (om1sq * n0sq ** 2), n2sq ** 2 / (om2sq * n0sq ** 2)])
    m = g_over_c * scale @ (n0sq * np.eye(2) - np.outer(chi, np.conj(chi)))
    return VelocityOperator(m=m, detunings=tuple(float(d) for d in deltas), g_over_c=g_over_c)


@dataclass(frozen=True, eq=False)
class Characteristics:
    """Characteristics of the equal-fields adiabatic ratio equation.

    ``tau[i, n]`` is the retarded time reached at depth ``z[i]`` by the
    characteristic leaving the boundary at ``tau0[n]``; ``chi`` is constant
    along it.  ``slope[i]`` is ``max |d chi / d tau|`` at depth ``z[i]`` and
    ``shock_z`` the first depth where neighbouring characteristics cross
    (``inf`` if none within the range).
    """

    z: np.ndarray
    tau0: np.ndarray
    tau: np.ndarray
    chi: np.ndarray
    slope: np.ndarray
    shock_z: float


def m_characteristics(probe, control, z_values, tau0, g_over_c: float = 1.0) -> Characteristics:
    """Integrate ``d tau / d z = (g/c) N1^4 / (Omega1(tau)^2 N0^4)`` for the equal-fields M scheme.

    ``probe`` and ``control`` are the boundary pulses of ``omega10 = omega20`` and
    ``omega11 = omega22``; ``Omega1(tau)`` is their total at the boundary, which
    the adiabatic equations carry unchanged along ``tau = const``.  Dispersion
    and absorption are absent, so a compressive profile ends in a shock.
    """
    from scipy.integrate import solve_ivp

    tau0 = np.asarray(tau0, dtype=float)
    z_values = np.asarray(z_values, dtype=float)
    o1 = np.asarray(control(tau0), dtype=complex)
    if np.any(np.abs(o1) < EPS):
        raise ControlVanishes("control field vanishes on the boundary")
    chi = np.asarray(probe(tau0), dtype=complex) / o1
    x = np.abs(chi) ** 2
    weight = g_over_c * ((1.0 + x) / (1.0 + 2.0 * x)) ** 2

    def rhs(_, tau):
        om2 = np.abs(probe(tau)) ** 2 + np.abs(control(tau)) ** 2
        return weight / om2

    sol = solve_ivp(rhs, (0.0, float(z_values.max())), tau0, t_eval=z_values, rtol=1e-10, atol=1e-12)
    tau = sol.y.T
    spread = np.diff(tau, axis=1)
    dchi = np.abs(np.diff(chi))
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(spread > 0, dchi[None, :] / spread, np.inf).max(axis=1)
    crossed = np.nonzero(np.any(spread <= 0, axis=1))[0]
    shock_z = float(z_values[crossed[0]]) if crossed.size else float("inf")
    return Characteristics(z_values, tau0, tau, chi, slope, shock_z)
