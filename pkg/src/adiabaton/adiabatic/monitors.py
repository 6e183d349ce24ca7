"""Adiabaticity monitor records shared by the three schemes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

DEFAULT_THRESHOLD = 0.1


@dataclass(frozen=True)
class MonitorRecord:
    """Worst-case monitor values with pass flags against ``threshold``.

    ``values`` holds the maximum of each dimensionless ratio over the points
    supplied; ``series`` keeps the pointwise arrays for plotting or locating
    the breakdown.
    """

    values: Dict[str, float]
    threshold: float = DEFAULT_THRESHOLD
    series: Dict[str, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    @property
    def flags(self) -> Dict[str, bool]:
        return {k: bool(v <= self.threshold) for k, v in self.values.items()}

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    @property
    def worst(self) -> float:
        return max(self.values.values()) if self.values else 0.0

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "values": dict(self.values), "flags": self.flags,
                "passed": self.passed}


def make_record(series: Dict[str, np.ndarray], threshold: float) -> MonitorRecord:
    series = {k: np.abs(np.asarray(v, dtype=complex)).astype(float) for k, v in series.items()}
    values = {k: float(np.max(v)) if v.size else 0.0 for k, v in series.items()}
    return MonitorRecord(values=values, threshold=threshold, series=series)


def boundary_monitor_max(scheme, pulses: Sequence, tau) -> float:
    """Worst adiabaticity ratio of the boundary fields, using analytic derivatives.

    Points where the frame is undefined (no control field) are skipped.
    """
    from ..scheme import Kind, evaluate_derivatives, evaluate_fields

    tau = np.asarray(tau, dtype=float)
    fields = evaluate_fields(pulses, tau)
    dfields = evaluate_derivatives(pulses, tau)
    if scheme.kind is Kind.LAMBDA:
        from .lambda_system import lambda_adiabaticity, lambda_frame

        ok = np.sum(np.abs(fields) ** 2, axis=-1) > 1e-24
        frame = lambda_frame(fields[ok], dfields[ok], delta=scheme.detunings[1])
        return lambda_adiabaticity(frame, scheme.gamma, scheme.alpha).worst
    if scheme.kind is Kind.MTYPE:
        from .m_type import m_adiabaticity, m_frame

        ok = (np.abs(fields[:, 1]) > 1e-12) & (np.abs(fields[:, 3]) > 1e-12)
        frame = m_frame(fields[ok], dfields[ok], scheme.detunings[1:])
        return m_adiabaticity(frame).worst
    from .double_tripod import dt_adiabaticity, dt_frame

    frame = dt_frame(fields, dfields, scheme.detunings[1:], g_over_c=scheme.g_over_c)
    return dt_adiabaticity(frame).worst
