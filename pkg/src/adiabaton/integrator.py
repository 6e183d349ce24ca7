"""Space-time marching of the coupled atom-field equations.

Works in the retarded frame ``(z, tau = t - z/c)``.  There the field
equations lose their time derivative, ``dOmega/dz = (i/2)(g/c) psi_e psi_l*``,
so at a fixed ``tau`` the fields at every depth follow from the boundary
value plus a z-quadrature of the atomic source.  The atoms of all depths are
advanced together in ``tau`` with classical RK4 (method of lines); each RK
stage rebuilds the fields from the stage amplitudes with the trapezoidal
rule in z.  Accuracy is second order in ``d_z`` and fourth order in
``d_tau``.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import atomic_rhs, dark_state, ground_state
from .errors import GridTooCoarse, NonFiniteDetected, SchemeMismatch
from .scheme import Gaussian, Kind, PulseSpec, SchemeSpec, evaluate_fields

log = logging.getLogger(__name__)

PROBE_FIELDS = {
    Kind.LAMBDA: ("omega0",),
    Kind.MTYPE: ("omega10", "omega20"),
    Kind.DOUBLE_TRIPOD: ("omega10", "omega20"),
}


def _count(span: float, step: float, what: str) -> int:
    n = span / step
    if abs(n - round(n)) > 1e-6 * max(1.0, n):
        raise ValueError(f"{what} span {span} is not a multiple of the step {step}")
    return int(round(n))


@dataclass(frozen=True)
class GridSpec:
    tau_min: float = 0.0
    tau_max: float = 120.0
    d_tau: float = 0.01
    z_max: float = 70.0
    d_z: float = 0.01
    snapshot_stride_z: int = 100
    tau_stride: int = 1

    def __post_init__(self):
        if not (self.d_tau > 0 and self.d_z > 0):
            raise ValueError("d_tau and d_z must be positive")
        if not self.tau_max > self.tau_min:
            raise ValueError("tau_max must exceed tau_min")
        if not self.z_max > 0:
            raise ValueError("z_max must be positive")
        if self.snapshot_stride_z < 1 or self.tau_stride < 1:
            raise ValueError("strides must be >= 1")
        _count(self.tau_max - self.tau_min, self.d_tau, "tau")
        _count(self.z_max, self.d_z, "z")

    @property
    def n_tau(self) -> int:
        return _count(self.tau_max - self.tau_min, self.d_tau, "tau") + 1

    @property
    def n_z(self) -> int:
        return _count(self.z_max, self.d_z, "z") + 1

    @property
    def tau(self) -> np.ndarray:
        return self.tau_min + self.d_tau * np.arange(self.n_tau)

    @property
    def z(self) -> np.ndarray:
        return self.d_z * np.arange(self.n_z)

    def snapshot_indices(self) -> np.ndarray:
        idx = np.arange(0, self.n_z, self.snapshot_stride_z)
        if idx[-1] != self.n_z - 1:
            idx = np.append(idx, self.n_z - 1)
        return idx

    def tau_output_indices(self) -> np.ndarray:
        return np.arange(0, self.n_tau, self.tau_stride)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("tau_min", "tau_max", "d_tau", "z_max", "d_z", "snapshot_stride_z", "tau_stride")}


@dataclass(frozen=True, eq=False)
class SpaceTimeSolution:
    """Stored slices of a run.

    ``fields[i, n, k]`` is field ``k`` at depth ``z[i]`` and time ``tau[n]``;
    ``atoms[i, n, m]`` the amplitude of level ``m`` there.  ``z[0] == 0`` so the
    first slice is the boundary history.
    """

    scheme: SchemeSpec
    grid: GridSpec
    z: np.ndarray
    tau: np.ndarray
    fields: np.ndarray
    atoms: np.ndarray
    boundary: Tuple[PulseSpec, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("z", "tau", "fields", "atoms"):
            getattr(self, name).flags.writeable = False

    @property
    def snapshots(self) -> Iterator[Tuple[float, np.ndarray, np.ndarray]]:
        for i, z in enumerate(self.z):
            yield float(z), self.fields[i], self.atoms[i]

    @property
    def d_tau(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def index_at(self, z: float) -> int:
        i = int(np.argmin(np.abs(self.z - z)))
        if abs(self.z[i] - z) > 1e-9 * max(1.0, abs(z)):
            raise KeyError(f"no snapshot stored at z={z}; available {self.z[0]}..{self.z[-1]}")
        return i

    def field(self, field_id: str, z: Optional[float] = None) -> np.ndarray:
        k = self.scheme.field_index(field_id)
        if z is None:
            return self.fields[:, :, k]
        return self.fields[self.index_at(z), :, k]


def evaluate_boundary(pulse: PulseSpec, tau):
    """Value of a boundary pulse at ``tau`` (tabulated pulses clamp outside their range)."""
    return pulse(tau)


def _as_pulse_tuple(scheme: SchemeSpec, boundary) -> Tuple[PulseSpec, ...]:
    if isinstance(boundary, Mapping):
        missing = set(scheme.field_ids) - set(boundary)
        extra = set(boundary) - set(scheme.field_ids)
        if missing or extra:
            raise SchemeMismatch(f"boundary fields mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
        return tuple(boundary[f] for f in scheme.field_ids)
    pulses = tuple(boundary)
    if len(pulses) != scheme.n_fields:
        raise SchemeMismatch(f"expected {scheme.n_fields} boundary pulses, got {len(pulses)}")
    return pulses


def _coarseness_warnings(scheme, pulses, grid, threshold):
    tau = grid.tau
    values = evaluate_fields(pulses, tau)
    omega_max = float(np.sqrt(np.max(np.sum(np.abs(values) ** 2, axis=-1))))
    # RK4 keeps amplitude and phase errors small while the fastest atomic rate times d_tau stays < ~0.5
    rate = 0.5 * scheme.gamma + 0.5 * omega_max + max(abs(d) for d in scheme.detunings)
    if rate * grid.d_tau > 0.5:
        warnings.warn(f"d_tau={grid.d_tau} too coarse for atomic rate {rate:.3g}", GridTooCoarse, stacklevel=3)
    for pulse in pulses:
        if isinstance(pulse, Gaussian) and grid.d_tau > pulse.width / 10:
            warnings.warn(f"d_tau={grid.d_tau} under-resolves a pulse of width {pulse.width}",
                          GridTooCoarse, stacklevel=3)
    probes = PROBE_FIELDS[scheme.kind]
    controls = [k for k, f in enumerate(scheme.field_ids) if f not in probes]
    if np.all(np.abs(values[:, controls]) == 0) and np.any(values[:, [scheme.field_index(p) for p in probes]]):
        warnings.warn("all control fields vanish; transparency conditions fail", GridTooCoarse, stacklevel=3)
    try:
        from .adiabatic.monitors import boundary_monitor_max

        worst = boundary_monitor_max(scheme, pulses, tau)
    except Exception as exc:  # monitors undefined where controls vanish; not fatal for a run
        log.debug("boundary adiabaticity monitor skipped: %s", exc)
        worst = None
    if worst is not None and worst > threshold:
        warnings.warn(f"boundary adiabaticity monitor {worst:.3g} exceeds {threshold}", GridTooCoarse,
                      stacklevel=3)


def run(scheme: SchemeSpec, boundary: Union[Mapping[str, PulseSpec], Sequence[PulseSpec]],
        grid: GridSpec = GridSpec(), initial_state: str = "ground",
        monitor_threshold: float = 0.1) -> SpaceTimeSolution:
    """Propagate the boundary pulses through ``grid.z_max`` absorption lengths.

    Parameters
    ----------
    scheme : SchemeSpec
    boundary : mapping ``field_id -> pulse`` or sequence in scheme field order
        Field histories entering the medium at ``z = 0``.
    grid : GridSpec
    initial_state : {"ground", "dark"}
        Atoms at ``tau_min`` start in ``|0>`` or in the dark state of the
        boundary fields at ``tau_min`` (needed for backgrounds with a probe
        already present).
    monitor_threshold : float
        Adiabaticity level above which a :class:`GridTooCoarse` warning is issued.
    """
    pulses = _as_pulse_tuple(scheme, boundary)
    _coarseness_warnings(scheme, pulses, grid, monitor_threshold)

    n_z, n_tau = grid.n_z, grid.n_tau
    dz, dt = grid.d_z, grid.d_tau
    tau = grid.tau
    snap_idx = grid.snapshot_indices()
    out_idx = grid.tau_output_indices()
    out_pos = np.full(n_tau, -1)
    out_pos[out_idx] = np.arange(out_idx.size)

    ground_idx = np.array([c.ground for c in scheme.couplings])
    excited_idx = np.array([scheme.excited_level(c.excited) for c in scheme.couplings])
    pref = 0.5j * scheme.g_over_c

    def fields_at(t, psi):
        src = psi[:, excited_idx] * np.conj(psi[:, ground_idx])
        acc = np.cumsum(src, axis=0)
        acc -= 0.5 * (src[0] + src)
        acc *= pref * dz
        acc += evaluate_fields(pulses, t)
        return acc

    def rhs(t, psi):
        return atomic_rhs(scheme, fields_at(t, psi), psi)

    if initial_state == "ground":
        psi0 = ground_state(scheme)
    elif initial_state == "dark":
        psi0 = dark_state(scheme, evaluate_fields(pulses, tau[0]))
    else:
        raise ValueError(f"initial_state must be 'ground' or 'dark', got {initial_state!r}")
    psi = np.tile(psi0, (n_z, 1))

    fields_out = np.empty((snap_idx.size, out_idx.size, scheme.n_fields), dtype=complex)
    atoms_out = np.empty((snap_idx.size, out_idx.size, scheme.n_levels), dtype=complex)

    def store(n, psi):
        p = out_pos[n]
        if p >= 0:
            fields_out[:, p, :] = fields_at(tau[n], psi)[snap_idx]
            atoms_out[:, p, :] = psi[snap_idx]

    started = time.perf_counter()
    store(0, psi)
    half = 0.5 * dt
    for n in range(n_tau - 1):
        t = tau[n]
        k1 = rhs(t, psi)
        k2 = rhs(t + half, psi + half * k1)
        k3 = rhs(t + half, psi + half * k2)
        k4 = rhs(t + dt, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(psi.sum()):
            bad = np.nonzero(~np.all(np.isfinite(psi), axis=1))[0]
            z_bad = float(bad[0] * dz) if bad.size else float("nan")
            raise NonFiniteDetected(f"non-finite amplitudes at z={z_bad:g}, tau={tau[n + 1]:g}",
                                    z=z_bad, tau=float(tau[n + 1]))
        store(n + 1, psi)

    elapsed = time.perf_counter() - started
    log.info("run %s: %d x %d grid in %.1f s", scheme.kind.value, n_z, n_tau, elapsed)
    return SpaceTimeSolution(
        scheme=scheme, grid=grid, z=snap_idx * dz, tau=tau[out_idx],
        fields=fields_out, atoms=atoms_out, boundary=pulses,
        metadata={"initial_state": initial_state, "elapsed_s": elapsed},
    )
