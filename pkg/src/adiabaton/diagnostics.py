"""Post-processing of solver output: conservation, shape, steepening, modes."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .adiabatic.double_tripod import dt_adiabaticity, dt_frame, dt_normal_modes, dt_velocity_matrix
from .adiabatic.lambda_system import lambda_adiabaticity, lambda_frame
from .adiabatic.m_type import m_adiabaticity, m_frame
from .errors import SchemeMismatch, WindowClipped
from .integrator import SpaceTimeSolution
from .scheme import Kind

Combination = Union[str, Mapping[str, complex]]

TOTAL_FIELDS = {
    Kind.LAMBDA: {"omega": ("omega0", "omega1")},
    Kind.MTYPE: {"omega_1": ("omega10", "omega11"), "omega_2": ("omega20", "omega22")},
    Kind.DOUBLE_TRIPOD: {"omega_1": ("omega10", "omega11", "omega12"),
                         "omega_2": ("omega20", "omega21", "omega22")},
}

RATIO_FIELDS = {
    Kind.LAMBDA: ("omega0", "omega1"),
    Kind.MTYPE: ("omega10", "omega11"),
    Kind.DOUBLE_TRIPOD: ("omega10", "omega11"),
}


@dataclass
class DiagnosticsReport:
    """Summary numbers of one run; optional entries stay ``None`` when not computed.

    Drifts are relative to the largest boundary value of the same quantity and
    measured along ``tau = const`` (characteristics of the conservation laws
    in the retarded frame).
    """

    norm_violation_max: float
    total_rabi_drift: Dict[str, float]
    cross_overlap_drift: Optional[float] = None
    n0_drift: Optional[float] = None
    shape_error: Optional[float] = None
    steepening_curve: Optional[Dict[str, list]] = None
    mode_projections: Optional[Dict[str, object]] = None
    adiabaticity_max: Optional[float] = None
    threshold: float = 0.1
    tolerance: float = 0.01

    @property
    def max_drift(self) -> float:
        vals = list(self.total_rabi_drift.values())
        vals += [v for v in (self.cross_overlap_drift, self.n0_drift) if v is not None]
        return max(vals)

    def classify(self) -> Dict[str, bool]:
        """Pass flags: conservation within ``tolerance``, monitors within ``threshold``."""
        flags = {"conservation": self.max_drift <= self.tolerance,
                 "norm": self.norm_violation_max <= 1e-8}
        if self.adiabaticity_max is not None:
            flags["adiabaticity"] = self.adiabaticity_max <= self.threshold
        if self.shape_error is not None:
            flags["shape"] = self.shape_error <= 0.05
        flags["adiabatonic"] = all(flags.values())
        return flags

    def to_dict(self) -> dict:
        out = asdict(self)
        out["classification"] = self.classify()
        return out


# -- conservation -------------------------------------------------------------

def _drift(values: np.ndarray) -> float:
    ref = values[0]
    scale = float(np.max(np.abs(ref)))
    if scale == 0:
        return float(np.max(np.abs(values - ref)))
    return float(np.max(np.abs(values - ref[None, :])) / scale)


def _window(sol: SpaceTimeSolution, tau_window):
    if tau_window is None:
        return slice(None)
    lo, hi = tau_window
    return (sol.tau >= lo) & (sol.tau <= hi)


def check_conservation(sol: SpaceTimeSolution, tau_window: Optional[Tuple[float, float]] = None
                       ) -> Dict[str, float]:
    """Relative drift of the conserved combinations over all stored depths.

    Keys are the total Rabi frequencies (``omega`` for Lambda, ``omega_1`` and
    ``omega_2`` otherwise) and, for the double tripod, ``cross`` (the overlap
    ``sum_l Omega_2l^* Omega_1l``) and ``n0``.
    """
    w = _window(sol, tau_window)
    f = sol.fields[:, w, :]
    out = {}
    for name, ids in TOTAL_FIELDS[sol.scheme.kind].items():
        idx = [sol.scheme.field_index(i) for i in ids]
        out[name] = _drift(np.sqrt(np.sum(np.abs(f[..., idx]) ** 2, axis=-1)))
    if sol.scheme.kind is Kind.DOUBLE_TRIPOD:
        r1, r2 = f[..., 0:3], f[..., 3:6]
        cross = np.sum(np.conj(r2) * r1, axis=-1)
        n0 = np.sqrt(np.sum(np.abs(np.cross(r1, r2)) ** 2, axis=-1))
        out["cross"] = _drift(cross)
        out["n0"] = _drift(n0)
    return out


def norm_violation(sol: SpaceTimeSolution) -> float:
    """Largest growth of the atomic norm above its initial value (decay only lowers it)."""
    norm = np.sum(np.abs(sol.atoms) ** 2, axis=-1)
    return float(max(0.0, np.max(norm - norm[:, :1])))


# -- profiles -----------------------------------------------------------------

def combination_profile(sol: SpaceTimeSolution, combination: Combination) -> np.ndarray:
    """``sum_k w_k Omega_k(z, tau)`` for every stored depth, shape ``(n_z, n_tau)``.

    The names ``chi1`` and ``chi2`` select the probe-to-control ratios
    ``omega10/omega11`` and ``omega20/omega22`` (``omega0/omega1`` for Lambda).
    """
    if isinstance(combination, str) and combination in ("chi1", "chi2"):
        return ratio_profile(sol, int(combination[-1]))
    if isinstance(combination, str):
        combination = {combination: 1.0}
    out = np.zeros(sol.fields.shape[:2], dtype=complex)
    for fid, weight in combination.items():
        try:
            k = sol.scheme.field_index(fid)
        except KeyError as exc:
            raise SchemeMismatch(str(exc)) from None
        out += weight * sol.fields[:, :, k]
    return out


def _interp(tau, values, t):
    return np.interp(t, tau, values.real) + 1j * np.interp(t, tau, values.imag)


def support_mask(profile: np.ndarray, fraction: float = 1e-3) -> np.ndarray:
    amp = np.abs(profile)
    return amp > fraction * amp.max()


def profile_errors(actual: np.ndarray, reference: np.ndarray, probe_columns: Sequence[int],
                   support_fraction: float = 1e-3) -> np.ndarray:
    """Per-field relative L2 error of ``actual`` against ``reference`` (shape ``(n_tau, n_f)``).

    The norm is restricted to the pulse support: samples where any reference
    probe exceeds ``support_fraction`` of its peak.  Fields whose reference
    vanishes there are scored by the absolute norm.
    """
    actual = np.asarray(actual)
    reference = np.asarray(reference)
    if actual.shape != reference.shape:
        raise SchemeMismatch(f"shape mismatch {actual.shape} vs {reference.shape}")
    mask = np.zeros(reference.shape[0], dtype=bool)
    for k in probe_columns:
        if np.any(reference[:, k]):
            mask |= support_mask(reference[:, k], support_fraction)
    if not mask.any():
        mask[:] = True
    diff = np.linalg.norm(actual[mask] - reference[mask], axis=0)
    norm = np.linalg.norm(reference[mask], axis=0)
    return np.where(norm > 0, diff / np.where(norm > 0, norm, 1.0), diff)


def shape_preservation(sol: SpaceTimeSolution, combination: Combination, v_g: float,
                       z_ref: float, z_probe: float, support_fraction: float = 1e-3) -> float:
    """Relative L2 distance between ``P(z_probe, tau)`` and ``P(z_ref, tau - delay)``.

    ``delay = (z_probe - z_ref) / v_g``.  The norm is taken over the grid; the
    shifted support (points above ``support_fraction`` of the reference peak)
    must stay inside it, otherwise :class:`WindowClipped` is raised.
    """
    prof = combination_profile(sol, combination)
    ref = prof[sol.index_at(z_ref)]
    probe = prof[sol.index_at(z_probe)]
    if z_ref == z_probe:
        return 0.0
    delay = (z_probe - z_ref) / v_g
    tau = sol.tau
    supp = tau[support_mask(ref, support_fraction)]
    if supp.size and (supp.min() + delay < tau[0] or supp.max() + delay > tau[-1]):
        raise WindowClipped(f"shifted support [{supp.min() + delay:g}, {supp.max() + delay:g}] "
                            f"leaves the grid [{tau[0]:g}, {tau[-1]:g}]")
    shifted = _interp(tau, ref, tau - delay)
    norm = np.linalg.norm(shifted)
    if norm == 0:
        return float(np.linalg.norm(probe))
    return float(np.linalg.norm(probe - shifted) / norm)


def peak_position(tau: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Peak time and height of ``|values|`` with parabolic sub-grid refinement."""
    amp = np.abs(values)
    i = int(np.argmax(amp))
    if 0 < i < amp.size - 1:
        y0, y1, y2 = amp[i - 1], amp[i], amp[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            off = 0.5 * (y0 - y2) / denom
            h = tau[i + 1] - tau[i]
            return float(tau[i] + off * h), float(y1 - 0.25 * (y0 - y2) * off)
    return float(tau[i]), float(amp[i])


def peak_track_velocity(sol: SpaceTimeSolution, combination: Combination,
                        z_values: Optional[Sequence[float]] = None,
                        subtract_background: bool = False,
                        tau_window: Optional[Tuple[float, float]] = None) -> Tuple[float, np.ndarray]:
    """Velocity from a straight-line fit of peak time against depth.

    ``subtract_background`` removes each depth's value at the first stored
    time, so a perturbation riding on a constant background can be tracked.

    Returns
    -------
    v : float
        Fitted velocity in absorption lengths per unit time (``inf`` for no delay).
    peaks : ndarray, shape (n, 2)
        ``(z, tau_peak)`` pairs used in the fit.
    """
    prof = combination_profile(sol, combination)
    if subtract_background:
        prof = prof - prof[:, :1]
    zs = sol.z if z_values is None else np.asarray(z_values, dtype=float)
    w = _window(sol, tau_window)
    tau = sol.tau[w]
    peaks = np.array([(z, peak_position(tau, prof[sol.index_at(z)][w])[0]) for z in zs])
    slope = np.polyfit(peaks[:, 0], peaks[:, 1], 1)[0]
    v = np.inf if abs(slope) < 1e-12 else 1.0 / slope
    return float(v), peaks


# -- steepening ---------------------------------------------------------------

def ratio_profile(sol: SpaceTimeSolution, j: int = 1) -> np.ndarray:
    kind = sol.scheme.kind
    if j == 1:
        pair = RATIO_FIELDS[kind]
    elif kind is Kind.MTYPE:
        pair = ("omega20", "omega22")
    elif kind is Kind.DOUBLE_TRIPOD:
        pair = ("omega20", "omega22")
    else:
        raise SchemeMismatch("the Lambda scheme has a single ratio")
    num, den = (sol.scheme.field_index(f) for f in pair)
    return sol.fields[:, :, num] / sol.fields[:, :, den]


def steepening_metric(sol: SpaceTimeSolution) -> Tuple[np.ndarray, np.ndarray]:
    """``max_tau |d chi / d tau|`` at each stored depth (centered differences, no smoothing).

    ``chi`` is the first probe over its own control (``omega0/omega1`` or ``omega10/omega11``).
    """
    chi = ratio_profile(sol)
    grad = np.gradient(chi, sol.d_tau, axis=1)
    return sol.z.copy(), np.max(np.abs(grad), axis=1)


def steepening_growth(curve: Tuple[np.ndarray, np.ndarray], z_a: float, z_b: float) -> float:
    z, values = curve
    ia = int(np.argmin(np.abs(z - z_a)))
    ib = int(np.argmin(np.abs(z - z_b)))
    return float(values[ib] / values[ia])


# -- double tripod modes -----------------------------------------------------

def background_modes(sol: SpaceTimeSolution):
    """Normal modes of the boundary fields at the first stored time."""
    if sol.scheme.kind is not Kind.DOUBLE_TRIPOD:
        raise SchemeMismatch("mode projection applies to the double tripod only")
    bg = sol.fields[0, 0, :].copy()
    bg[[0, 3]] = 0.0
    # mode shapes do not depend on the medium density, so g/c = Gamma is used for them
    return dt_normal_modes(dt_velocity_matrix(bg, sol.scheme.detunings[1:], sol.scheme.gamma))


def mode_projection(sol: SpaceTimeSolution, modes=None) -> Dict[str, object]:
    """Amplitudes of the probe pair ``(Omega10, Omega20)`` on the two normal modes.

    The pair is expanded as ``c_slow e_slow + c_fast e_fast`` with normalized
    eigenvectors ``e``; for each mode and depth the peak ``|c|`` and its time
    are reported.
    """
    if modes is None:
        modes = background_modes(sol)
    basis = np.stack([m.eigvec for m in modes], axis=1)
    probes = sol.fields[:, :, [0, 3]]
    coef = np.einsum("ij,znj->zni", np.linalg.inv(basis), probes)
    out = {"z": sol.z.tolist()}
    for k, name in enumerate(("slow", "fast")):
        peaks = [peak_position(sol.tau, coef[i, :, k]) for i in range(sol.z.size)]
        out[name] = {
            "v_g": modes[k].v_g,
            "xi": [modes[k].xi.real, modes[k].xi.imag],
            "peak_tau": [p[0] for p in peaks],
            "peak_amplitude": [p[1] for p in peaks],
        }
    out["coefficients"] = coef
    return out


def sign_relation_mismatch(sol: SpaceTimeSolution, z: float, xi: float,
                           tau_window: Tuple[float, float]) -> float:
    """``||Omega20 - xi Omega10|| / ||Omega10||`` inside ``tau_window`` at depth ``z``."""
    i = sol.index_at(z)
    w = _window(sol, tau_window)
    p1 = sol.fields[i, w, sol.scheme.field_index("omega10")]
    p2 = sol.fields[i, w, sol.scheme.field_index("omega20")]
    return float(np.linalg.norm(p2 - xi * p1) / np.linalg.norm(p1))


# -- run-wide monitors --------------------------------------------------------

def run_adiabaticity(sol: SpaceTimeSolution, threshold: float = 0.1, floor: float = 1e-9):
    """Monitor record over every stored slice, with centered-difference derivatives.

    Points where the frame is undefined (vanishing controls) are skipped.
    """
    f = sol.fields
    df = np.gradient(f, sol.d_tau, axis=1)
    sch = sol.scheme
    if sch.kind is Kind.LAMBDA:
        ok = np.sum(np.abs(f) ** 2, axis=-1) > floor
        return lambda_adiabaticity(lambda_frame(f[ok], df[ok], delta=sch.detunings[1], gamma=sch.gamma),
                                   sch.gamma, sch.alpha, threshold)
    if sch.kind is Kind.MTYPE:
        ok = (np.abs(f[..., 1]) > floor) & (np.abs(f[..., 3]) > floor)
        return m_adiabaticity(m_frame(f[ok], df[ok], sch.detunings[1:]), threshold)
    r1, r2 = f[..., 0:3], f[..., 3:6]
    ok = np.sum(np.abs(np.cross(r1, r2)) ** 2, axis=-1) > floor
    return dt_adiabaticity(dt_frame(f[ok], df[ok], sch.detunings[1:], sch.g_over_c), threshold=threshold)


def diagnose(sol: SpaceTimeSolution, threshold: float = 0.1, tolerance: float = 0.01,
             shape: Optional[dict] = None, tau_window: Optional[Tuple[float, float]] = None
             ) -> DiagnosticsReport:
    """Build the report; ``shape`` holds ``shape_preservation`` keyword arguments."""
    drift = check_conservation(sol, tau_window)
    totals = {k: v for k, v in drift.items() if k not in ("cross", "n0")}
    z, curve = steepening_metric(sol)
    report = DiagnosticsReport(
        norm_violation_max=norm_violation(sol),
        total_rabi_drift=totals,
        cross_overlap_drift=drift.get("cross"),
        n0_drift=drift.get("n0"),
        steepening_curve={"z": z.tolist(), "max_abs_dchi_dtau": curve.tolist()},
        adiabaticity_max=run_adiabaticity(sol, threshold).worst,
        threshold=threshold,
        tolerance=tolerance,
    )
    if shape is not None:
        report.shape_error = shape_preservation(sol, **shape)
    if sol.scheme.kind is Kind.DOUBLE_TRIPOD:
        proj = mode_projection(sol)
        proj.pop("coefficients")
        report.mode_projections = proj
    return report
