"""Right-hand sides of the atom and field equations in the rotating frame.

Both evaluators broadcast over leading axes: ``fields`` has shape
``(..., n_fields)`` and ``state`` has shape ``(..., n_levels)``, so the same
code serves single-point tests and whole z-columns inside the integrator.
"""

from __future__ import annotations

import numpy as np

from .errors import SchemeMismatch
from .scheme import SchemeSpec


def _check(scheme: SchemeSpec, fields=None, state=None):
    if fields is not None and np.shape(fields)[-1:] != (scheme.n_fields,):
        raise SchemeMismatch(f"expected {scheme.n_fields} fields, got shape {np.shape(fields)}")
    if state is not None and np.shape(state)[-1:] != (scheme.n_levels,):
        raise SchemeMismatch(f"expected {scheme.n_levels} levels, got shape {np.shape(state)}")


def atomic_rhs(scheme: SchemeSpec, fields, state) -> np.ndarray:
    """d(psi)/d(tau) for amplitude equations ``i dpsi/dt = H psi``.

    Ground levels pick up ``-i delta_l psi_l + (i/2) sum_j conj(Omega_jl) psi_ej``,
    excited levels ``-(Gamma/2) psi_ej + (i/2) sum_l Omega_jl psi_l``.
    """
    _check(scheme, fields, state)
    fields = np.asarray(fields)
    state = np.asarray(state, dtype=complex)
    out = np.zeros(np.broadcast_shapes(fields.shape[:-1], state.shape[:-1]) + (scheme.n_levels,),
                   dtype=complex)
    for k, c in enumerate(scheme.couplings):
        e = scheme.excited_level(c.excited)
        omega = fields[..., k]
        out[..., c.ground] += 0.5j * np.conj(omega) * state[..., e]
        out[..., e] += 0.5j * omega * state[..., c.ground]
    for l, delta in enumerate(scheme.detunings):
        if delta:
            out[..., l] -= 1j * delta * state[..., l]
    ng = scheme.n_ground
    out[..., ng:] -= 0.5 * scheme.gamma * state[..., ng:]
    return out


def field_source(scheme: SchemeSpec, state, field_id=None) -> np.ndarray:
    """Retarded-frame source ``dOmega_jl/dz = (i/2)(g/c) psi_ej conj(psi_l)``.

    With ``field_id=None`` the sources of all fields are returned stacked on
    the last axis; otherwise only the requested field's source.
    """
    _check(scheme, state=state)
    state = np.asarray(state, dtype=complex)
    pref = 0.5j * scheme.g_over_c
    if field_id is not None:
        if isinstance(field_id, str):
            try:
                k = scheme.field_index(field_id)
            except KeyError as exc:
                raise SchemeMismatch(str(exc)) from None
        else:
            k = int(field_id)
            if not 0 <= k < scheme.n_fields:
                raise SchemeMismatch(f"field index {k} out of range")
        c = scheme.couplings[k]
        return pref * state[..., scheme.excited_level(c.excited)] * np.conj(state[..., c.ground])
    out = np.empty(state.shape[:-1] + (scheme.n_fields,), dtype=complex)
    for k, c in enumerate(scheme.couplings):
        out[..., k] = state[..., scheme.excited_level(c.excited)] * np.conj(state[..., c.ground])
    out *= pref
    return out


def hamiltonian(scheme: SchemeSpec, fields) -> np.ndarray:
    """Dense non-Hermitian Hamiltonian (decay included as ``-i Gamma/2``) at one point."""
    _check(scheme, fields)
    h = np.zeros((scheme.n_levels, scheme.n_levels), dtype=complex)
    for k, c in enumerate(scheme.couplings):
        e = scheme.excited_level(c.excited)
        h[e, c.ground] += -0.5 * fields[k]
        h[c.ground, e] += -0.5 * np.conj(fields[k])
    for l, delta in enumerate(scheme.detunings):
        h[l, l] += delta
    for j in range(1, scheme.n_excited + 1):
        e = scheme.excited_level(j)
        h[e, e] += -0.5j * scheme.gamma
    return h


def ground_state(scheme: SchemeSpec) -> np.ndarray:
    psi = np.zeros(scheme.n_levels, dtype=complex)
    psi[0] = 1.0
    return psi


def dark_state(scheme: SchemeSpec, fields, tol: float = 1e-10) -> np.ndarray:
    """Normalized ground-manifold vector annihilated by every coupling.

    Phase is fixed so the ``|0>`` component is real and non-negative (or the
    first non-zero component, if ``|0>`` is absent from the dark state).
    """
    _check(scheme, fields)
    coupling = np.zeros((scheme.n_excited, scheme.n_ground), dtype=complex)
    for k, c in enumerate(scheme.couplings):
        coupling[c.excited - 1, c.ground] = fields[k]
    _, s, vh = np.linalg.svd(coupling)
    # null space of an (n_exc x n_ground) matrix: rows of vh past the rank
    rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    if scheme.n_ground - rank != 1:
        raise SchemeMismatch(f"dark subspace has dimension {scheme.n_ground - rank}, expected 1")
    v = vh[-1].conj()
    pivot = v[np.argmax(np.abs(v) > tol)]
    v = v * (abs(pivot) / pivot)
    psi = np.zeros(scheme.n_levels, dtype=complex)
    psi[:scheme.n_ground] = v / np.linalg.norm(v)
    return psi
