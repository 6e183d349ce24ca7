"""Double tripod: dark-state frame, inverse group-velocity matrix, normal modes.

Field order is ``(omega10, omega11, omega12, omega20, omega21, omega22)``;
row ``j`` of the coupling matrix is ``(Omega_j0, Omega_j1, Omega_j2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import DegenerateDarkState, DegenerateModes, NoRealRoot
from .monitors import DEFAULT_THRESHOLD, MonitorRecord, make_record

EPS = 1e-12


@dataclass(frozen=True, eq=False)
class VelocityOperator:
    """2x2 inverse group-velocity matrix (delay per absorption length).

    ``detunings`` are the two-photon detunings ``(delta1, delta2)`` entering
    the phase term of the matrix propagation equation.
    """

    m: np.ndarray
    detunings: Tuple[float, float] = (0.0, 0.0)
    g_over_c: float = 1.0

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.m))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.m, self.m.conj().T, rtol=0.0, atol=atol * np.abs(self.m).max()))

    @property
    def delta_matrix(self) -> np.ndarray:
        return np.diag(self.detunings).astype(complex)


@dataclass(frozen=True, eq=False)
class NormalMode:
    """Eigenpair ``m (1, xi)^T = (1/v_g) (1, xi)^T``.

    ``xi`` is ``inf`` for the mode living purely on the second component.
    ``strict`` marks the slower mode, whose adiabaticity condition is the
    tighter of the two.
    """

    v_g: float
    xi: complex
    eigvec: np.ndarray
    strict: bool = False

    @property
    def inverse_velocity(self) -> float:
        return 1.0 / self.v_g


@dataclass(frozen=True)
class DTFrame:
    omega1: np.ndarray
    omega2: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    n0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    delta_eff: np.ndarray
    cross: np.ndarray
    drive: np.ndarray  # (..., 2): sum_l A_l (i d/dt + delta_l) Omega_jl
    g_over_c: float = 1.0

    @property
    def a(self) -> np.ndarray:
        return np.stack([self.a0, self.a1, self.a2], axis=-1)


def _rows(fields):
    f = np.asarray(fields, dtype=complex)
    return f[..., 0:3], f[..., 3:6]


def _cofactors(r1, r2):
    return np.cross(r1, r2)


def _check_n0(n0, om1, om2):
    if np.any(n0 <= EPS * np.maximum(1.0, om1 * om2)):
        raise DegenerateDarkState("the two tripods are parallel; no unique uncoupled state")


def dt_frame(fields, field_time_derivatives, deltas: Sequence[float] = (0.0, 0.0),
             g_over_c: float = 1.0) -> DTFrame:
    """Uncoupled-state frame of the double tripod.

    ``A_l`` are the cofactors of the coupling rows over ``N0`` (so
    ``sum_l A_l Omega_jl = 0``); ``W = G^-1 X`` with ``G`` the Gram matrix of
    the rows and ``X_j = sum_l A_l (i d/dt + delta_l) Omega_jl``.
    """
    r1, r2 = _rows(fields)
    d1, d2 = _rows(field_time_derivatives)
    dl = np.array([0.0, float(deltas[0]), float(deltas[1])])
    om1 = np.sqrt(np.sum(np.abs(r1) ** 2, axis=-1))
    om2 = np.sqrt(np.sum(np.abs(r2) ** 2, axis=-1))
    cof = _cofactors(r1, r2)
    n0 = np.sqrt(np.sum(np.abs(cof) ** 2, axis=-1))
    _check_n0(n0, om1, om2)
    a = cof / n0[..., None]
    dcof = _cofactors(d1, r2) + _cofactors(r1, d2)
    dn0 = np.real(np.sum(np.conj(cof) * dcof, axis=-1)) / n0
    da = dcof / n0[..., None] - cof * (dn0 / n0 ** 2)[..., None]

    delta_eff = np.real(np.sum(a * (1j * np.conj(da) + dl * np.conj(a)), axis=-1))
    x1 = np.sum(a * (1j * d1 + dl * r1), axis=-1)
    x2 = np.sum(a * (1j * d2 + dl * r2), axis=-1)
    cross = np.sum(np.conj(r2) * r1, axis=-1)
    n0sq = n0 ** 2
    w1 = (om2 ** 2 * x1 - cross * x2) / n0sq
    w2 = (om1 ** 2 * x2 - np.conj(cross) * x1) / n0sq
    return DTFrame(
        omega1=om1, omega2=om2, a0=a[..., 0], a1=a[..., 1], a2=a[..., 2], n0=n0,
        v1=x1 / om1, v2=x2 / om2, w1=w1, w2=w2, delta_eff=delta_eff, cross=cross,
        drive=np.stack([x1, x2], axis=-1), g_over_c=g_over_c,
    )


def dt_w_linear_solve(fields, frame: DTFrame) -> np.ndarray:
    """``(W1, W2)`` from ``2 Omega_j V_j = sum_m psi_em sum_l Omega_jl Omega_ml^*`` solved numerically."""
    r1, r2 = _rows(fields)
    rows = np.stack([r1, r2], axis=-2)
    gram = np.einsum("...jl,...ml->...jm", rows, np.conj(rows))
    rhs = np.stack([frame.omega1 * frame.v1, frame.omega2 * frame.v2], axis=-1)[..., None]
    return np.linalg.solve(gram, rhs)[..., 0]


def dt_velocity_matrix(fields, deltas: Sequence[float] = (0.0, 0.0),
                       g_over_c: float = 1.0) -> VelocityOperator:
    """``(g/c)/N0^2 [[Omega2^2, -cross], [-cross^*, Omega1^2]]`` with ``cross = sum_l Omega_2l^* Omega_1l``.

    This is ``(g/c)`` times the inverse Gram matrix of the coupling rows.
    """
    r1, r2 = _rows(np.asarray(fields, dtype=complex).reshape(6))
    om1sq = float(np.sum(np.abs(r1) ** 2))
    om2sq = float(np.sum(np.abs(r2) ** 2))
    cross = complex(np.sum(np.conj(r2) * r1))
    n0sq = om1sq * om2sq - abs(cross) ** 2
    _check_n0(np.sqrt(max(n0sq, 0.0)), np.sqrt(om1sq), np.sqrt(om2sq))
    m = g_over_c / n0sq * np.array([[om2sq, -cross], [-np.conj(cross), om1sq]], dtype=complex)
    return VelocityOperator(m=m, detunings=(float(deltas[0]), float(deltas[1])), g_over_c=g_over_c)


def dt_normal_modes(m: VelocityOperator, rtol: float = 1e-9) -> Tuple[NormalMode, NormalMode]:
    """Eigenmodes of ``m`` sorted by group velocity, slowest first."""
    lam, vec = np.linalg.eig(m.m)
    if np.any(np.abs(lam.imag) > 1e-9 * np.abs(lam).max()):
        raise DegenerateModes(f"complex inverse velocities {lam}")
    lam = lam.real
    if abs(lam[0] - lam[1]) <= rtol * np.abs(lam).max():
        raise DegenerateModes(f"coincident inverse velocities {lam}; modes not unique")
    order = np.argsort(-lam)  # largest inverse velocity = slowest
    modes = []
    for rank, k in enumerate(order):
        v = vec[:, k]
        if abs(v[0]) < 1e-12 * np.abs(v).max():
            xi, eig = complex(np.inf), np.array([0.0, 1.0], dtype=complex)
        else:
            xi = complex(v[1] / v[0])
            if abs(xi.imag) < 1e-14:
                xi = complex(xi.real)
            eig = np.array([1.0, xi]) / np.sqrt(1.0 + abs(xi) ** 2)
        modes.append(NormalMode(v_g=float(1.0 / lam[k]), xi=xi, eigvec=eig, strict=rank == 0))
    return modes[0], modes[1]


def dt_adiabaticity(frame: DTFrame, m: Optional[VelocityOperator] = None,
                    threshold: float = DEFAULT_THRESHOLD) -> MonitorRecord:
    """Excited-state admixtures and their split over the two normal modes.

    ``w1, w2``: ``|W_j|``.  ``comp1, comp2``: components of ``(c/g) m X``
    using the supplied operator (or the local one when ``m`` is None).
    ``slow, fast``: ``|(c/g) m P_k X|`` with ``P_k`` the projector on mode ``k``.
    """
    x = frame.drive
    if m is None:
        om1sq, om2sq = frame.omega1 ** 2, frame.omega2 ** 2
        inv = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
        inv[..., 0, 0] = om2sq
        inv[..., 0, 1] = -frame.cross
        inv[..., 1, 0] = -np.conj(frame.cross)
        inv[..., 1, 1] = om1sq
        inv /= (frame.n0 ** 2)[..., None, None]
    else:
        inv = np.broadcast_to(m.m / m.g_over_c, x.shape[:-1] + (2, 2))
    comp = np.einsum("...ij,...j->...i", inv, x)
    mu, vec = np.linalg.eigh(0.5 * (inv + np.conj(np.swapaxes(inv, -1, -2))))
    coef = np.einsum("...ji,...j->...i", np.conj(vec), x)
    # eigh sorts ascending: index 1 carries the larger inverse velocity (slow mode)
    mode = np.abs(coef) * mu
    return make_record({
        "w1": frame.w1, "w2": frame.w2,
        "comp1": comp[..., 0], "comp2": comp[..., 1],
        "slow": mode[..., 1], "fast": mode[..., 0],
    }, threshold)


def _is_symmetric_background(bg) -> bool:
    scale = max(1.0, float(np.abs(bg).max()))
    return (abs(bg[5] - bg[1]) <= 1e-12 * scale and abs(bg[4] - bg[2]) <= 1e-12 * scale
            and abs(bg[0]) <= 1e-12 * scale and abs(bg[3]) <= 1e-12 * scale)


def _control_root(mode: NormalMode, bg, probe) -> np.ndarray:
    """Solve ``Omega12 - xi Omega11 = s`` with ``|P|^2 + Omega11^2 + Omega12^2 = T`` for Omega11."""
    xi = mode.xi.real
    u0, w0 = bg[1].real, bg[2].real
    s = w0 - xi * u0
    total = u0 ** 2 + w0 ** 2
    a = 1.0 + xi ** 2
    b = 2.0 * xi * s

    def roots(p2):
        disc = b * b - 4.0 * a * (s * s + p2 - total)
        return disc

    disc0 = roots(0.0)
    sign = 1.0 if abs((-b + np.sqrt(max(disc0, 0.0))) / (2 * a) - u0) <= abs(
        (-b - np.sqrt(max(disc0, 0.0))) / (2 * a) - u0) else -1.0
    disc = roots(np.abs(probe) ** 2)
    if np.any(disc < 0):
        raise NoRealRoot("probe too strong: total-field constraint has no real solution")
    return (-b + sign * np.sqrt(disc)) / (2 * a)


def dt_adiabaton_predict(background, probe_boundary, z: float, tau_grid,
                         g_over_c: float = 1.0) -> np.ndarray:
    """Adiabaton fields at depth ``z`` for a symmetric double-tripod background.

    Parameters
    ----------
    background : array_like, shape (6,)
        Constant fields with ``Omega22 = Omega11``, ``Omega21 = Omega12`` and no probes.
    probe_boundary : pair of pulses or mapping with ``omega10``/``omega20``
        Probe histories entering at ``z = 0``.
    z : float
        Depth in absorption lengths.
    tau_grid : array_like
        Retarded times.

    Returns
    -------
    ndarray, shape (len(tau_grid), 6)

    Notes
    -----
    The probe pair is split on the eigenvectors ``(1, xi_k)``; each part is
    delayed by ``z / v_k``.  For each mode the controls follow
    ``Omega12 - xi Omega11 = const`` and the conserved total Rabi frequency, on
    the root that reduces to the background at zero probe.  Contributions of
    the two modes are superposed on the background.
    """
    bg = np.asarray(background, dtype=complex).reshape(6)
    if not _is_symmetric_background(bg):
        raise ValueError("background must have Omega22 = Omega11, Omega21 = Omega12 and no probes")
    if np.any(np.abs(bg.imag) > 0):
        raise ValueError("background fields must be real")
    if isinstance(probe_boundary, Mapping):
        p1, p2 = probe_boundary["omega10"], probe_boundary["omega20"]
    else:
        p1, p2 = probe_boundary
    tau = np.asarray(tau_grid, dtype=float)
    modes = dt_normal_modes(dt_velocity_matrix(bg, g_over_c=g_over_c))
    basis = np.array([[1.0, 1.0], [modes[0].xi.real, modes[1].xi.real]])
    inv_basis = np.linalg.inv(basis)

    out = np.tile(bg, (tau.size, 1))
    for k, mode in enumerate(modes):
        t_src = tau - z / mode.v_g
        probe = np.stack([np.asarray(p1(t_src), dtype=complex), np.asarray(p2(t_src), dtype=complex)])
        amp = inv_basis[k, 0] * probe[0] + inv_basis[k, 1] * probe[1]
        if not np.any(amp):
            continue
        xi = mode.xi.real
        u = _control_root(mode, bg, amp)
        w = (bg[2].real - xi * bg[1].real) + xi * u
        delta = np.zeros((tau.size, 6), dtype=complex)
        delta[:, 0] = amp
        delta[:, 3] = xi * amp
        delta[:, 1] = delta[:, 5] = u - bg[1]
        delta[:, 2] = delta[:, 4] = w - bg[2]
        out += delta
    return out
