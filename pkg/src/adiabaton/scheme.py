"""Coupling schemes and boundary pulse shapes.

Unit convention used everywhere in the package: time in units of 1/Gamma
(``gamma`` fixes the number, normally 1), Rabi frequencies in units of
Gamma, and propagation distance in absorption lengths ``L_abs = L / alpha``.
With ``g = c Gamma alpha / L`` the propagation coefficient becomes
``g / c = Gamma`` per absorption length.

Level ordering inside state vectors is ``[g0, g1, ..(ground).., e1, e2, ..]``.
Field ordering follows :attr:`SchemeSpec.couplings`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import DuplicateCoupling, IncompleteScheme, NonPositiveParameter


class Kind(str, enum.Enum):
    LAMBDA = "lambda"
    MTYPE = "mtype"
    DOUBLE_TRIPOD = "double_tripod"


@dataclass(frozen=True)
class Coupling:
    """Field ``field_id`` drives the transition ``|ground> -> |e_excited>``."""

    field_id: str
    excited: int  # 1-based, as e_1, e_2
    ground: int  # 0-based, as |0>, |1>, |2>


_LEVEL_COUNTS = {
    Kind.LAMBDA: (2, 1),
    Kind.MTYPE: (3, 2),
    Kind.DOUBLE_TRIPOD: (3, 2),
}

_PATTERNS = {
    Kind.LAMBDA: ((1, 0), (1, 1)),
    Kind.MTYPE: ((1, 0), (1, 1), (2, 0), (2, 2)),
    Kind.DOUBLE_TRIPOD: ((1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)),
}


def default_field_id(kind: Kind, j: int, l: int) -> str:
    if kind is Kind.LAMBDA:
        return f"omega{l}"
    return f"omega{j}{l}"


@dataclass(frozen=True)
class SchemeSpec:
    kind: Kind
    couplings: Tuple[Coupling, ...]
    detunings: Tuple[float, ...]
    gamma: float = 1.0
    alpha: float = 1.0
    length: float = 1.0
    coupling: float = 1.0
    n_ground: int = field(init=False)
    n_excited: int = field(init=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "couplings", tuple(self.couplings))
        object.__setattr__(self, "detunings", tuple(float(d) for d in self.detunings))
        for name in ("gamma", "alpha", "length"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveParameter(f"{name} must be positive, got {value!r}")
        if not np.isfinite(self.coupling) or self.coupling < 0:
            raise NonPositiveParameter(f"coupling must be non-negative, got {self.coupling!r}")

        n_ground, n_excited = _LEVEL_COUNTS[kind]
        object.__setattr__(self, "n_ground", n_ground)
        object.__setattr__(self, "n_excited", n_excited)

        pairs = [(c.excited, c.ground) for c in self.couplings]
        ids = [c.field_id for c in self.couplings]
        if len(set(pairs)) != len(pairs) or len(set(ids)) != len(ids):
            raise DuplicateCoupling(f"duplicate coupling in {pairs}")
        for j, l in pairs:
            if not (1 <= j <= n_excited and 0 <= l < n_ground):
                raise IncompleteScheme(f"coupling ({j},{l}) outside the {kind.value} level set")
        expected = _PATTERNS[kind]
        if sorted(pairs) != sorted(expected):
            missing = sorted(set(expected) - set(pairs))
            extra = sorted(set(pairs) - set(expected))
            raise IncompleteScheme(
                f"{kind.value} needs couplings {list(expected)}; missing {missing}, unexpected {extra}"
            )
        if len(self.detunings) != n_ground:
            raise IncompleteScheme(f"expected {n_ground} detunings, got {len(self.detunings)}")
        if self.detunings[0] != 0.0:
            raise IncompleteScheme("detuning of ground level 0 must be 0")

    @property
    def n_levels(self) -> int:
        return self.n_ground + self.n_excited

    @property
    def n_fields(self) -> int:
        return len(self.couplings)

    @property
    def field_ids(self) -> Tuple[str, ...]:
        return tuple(c.field_id for c in self.couplings)

    @property
    def l_abs(self) -> float:
        """Resonant absorption length in the units of ``length``."""
        return self.length / self.alpha

    @property
    def g_over_c(self) -> float:
        """Propagation coefficient g/c per absorption length.

        Equals ``Gamma`` for the nominal medium; ``coupling`` scales the atom
        density (0 gives an empty medium).
        """
        return self.gamma * self.coupling

    def field_index(self, field_id: str) -> int:
        try:
            return self.field_ids.index(field_id)
        except ValueError:
            raise KeyError(f"{field_id!r} is not a field of this {self.kind.value} scheme") from None

    def index_of(self, j: int, l: int) -> int:
        for k, c in enumerate(self.couplings):
            if c.excited == j and c.ground == l:
                return k
        raise KeyError((j, l))

    def excited_level(self, j: int) -> int:
        """Position of ``|e_j>`` in the state vector."""
        return self.n_ground + j - 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "couplings": [[c.field_id, c.excited, c.ground] for c in self.couplings],
            "detunings": list(self.detunings),
            "gamma": self.gamma,
            "alpha": self.alpha,
            "length": self.length,
            "coupling": self.coupling,
        }


def _build(kind: Kind, detunings, gamma, alpha, length, coupling) -> SchemeSpec:
    couplings = tuple(Coupling(default_field_id(kind, j, l), j, l) for j, l in _PATTERNS[kind])
    return SchemeSpec(kind, couplings, tuple(detunings), gamma=gamma, alpha=alpha, length=length,
                      coupling=coupling)


def build_lambda(delta: float = 0.0, gamma: float = 1.0, alpha: float = 1.0,
                 length: float = 1.0, coupling: float = 1.0) -> SchemeSpec:
    """Three-level Lambda scheme: probe ``omega0`` on 0->e, control ``omega1`` on 1->e."""
    return _build(Kind.LAMBDA, (0.0, delta), gamma, alpha, length, coupling)


def build_m_type(delta1: float = 0.0, delta2: float = 0.0, gamma: float = 1.0,
                 alpha: float = 1.0, length: float = 1.0, coupling: float = 1.0) -> SchemeSpec:
    """Five-level M scheme with fields ``omega10, omega11, omega20, omega22``."""
    return _build(Kind.MTYPE, (0.0, delta1, delta2), gamma, alpha, length, coupling)


def build_double_tripod(delta1: float = 0.0, delta2: float = 0.0, gamma: float = 1.0,
                        alpha: float = 1.0, length: float = 1.0, coupling: float = 1.0) -> SchemeSpec:
    """Five-level double tripod; all six ``omega_jl`` with j in {1,2}, l in {0,1,2}."""
    return _build(Kind.DOUBLE_TRIPOD, (0.0, delta1, delta2), gamma, alpha, length, coupling)


def build_scheme(kind, **params) -> SchemeSpec:
    kind = Kind(kind)
    if kind is Kind.LAMBDA:
        return build_lambda(**params)
    if kind is Kind.MTYPE:
        return build_m_type(**params)
    return build_double_tripod(**params)


# -- boundary pulses --------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    """``offset + amplitude * exp(-(t - center)^2 / width^2)``."""

    amplitude: complex
    center: float
    width: float
    offset: complex = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise NonPositiveParameter(f"Gaussian width must be positive, got {self.width!r}")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.offset + self.amplitude * np.exp(-((tau - self.center) / self.width) ** 2)

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        x = (tau - self.center) / self.width
        return -2.0 * x / self.width * self.amplitude * np.exp(-x * x)


@dataclass(frozen=True)
class Constant:
    amplitude: complex

    def __call__(self, tau):
        return np.full(np.shape(tau), self.amplitude)

    def derivative(self, tau):
        return np.zeros(np.shape(tau))


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Samples on an increasing grid; linear interpolation, clamped outside."""

    tau: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values)
        if tau.ndim != 1 or tau.shape != values.shape or tau.size < 2:
            raise ValueError("tabulated pulse needs matching 1-D tau/values with >= 2 samples")
        if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(values))):
            raise ValueError("tabulated pulse samples must be finite")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("tabulated tau must be strictly increasing")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.iscomplexobj(self.values):
            return (np.interp(tau, self.tau, self.values.real)
                    + 1j * np.interp(tau, self.tau, self.values.imag))
        return np.interp(tau, self.tau, self.values)

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        slopes = np.diff(self.values) / np.diff(self.tau)
        idx = np.clip(np.searchsorted(self.tau, tau, side="right") - 1, 0, slopes.size - 1)
        out = slopes[idx]
        outside = (tau < self.tau[0]) | (tau > self.tau[-1])
        return np.where(outside, 0.0, out)


PulseSpec = Union[Gaussian, Constant, Tabulated]


def pulse_from_dict(spec: dict) -> PulseSpec:
    shape = spec.get("shape")
    if shape == "gaussian":
        return Gaussian(_as_number(spec["amplitude"]), float(spec["center"]), float(spec["width"]),
                        _as_number(spec.get("offset", 0.0)))
    if shape == "constant":
        return Constant(_as_number(spec["amplitude"]))
    if shape == "tabulated":
        values = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", np.zeros(len(spec["re"]))), dtype=float)
        if not np.any(values.imag):
            values = values.real
        return Tabulated(np.asarray(spec["tau"], dtype=float), values)
    raise ValueError(f"unknown pulse shape {shape!r}")


def pulse_to_dict(pulse: PulseSpec) -> dict:
    if isinstance(pulse, Gaussian):
        return {"shape": "gaussian", "amplitude": _number_out(pulse.amplitude), "center": pulse.center,
                "width": pulse.width, "offset": _number_out(pulse.offset)}
    if isinstance(pulse, Constant):
        return {"shape": "constant", "amplitude": _number_out(pulse.amplitude)}
    values = np.asarray(pulse.values)
    return {"shape": "tabulated", "tau": pulse.tau.tolist(), "re": values.real.tolist(),
            "im": np.imag(values).tolist()}


def _as_number(value):
    # complex amplitudes are written as [re, im] in configs
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(re, im)
    return float(value)


def _number_out(value):
    value = complex(value)
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


def evaluate_fields(pulses: Sequence[PulseSpec], tau) -> np.ndarray:
    """Stack ``pulses`` evaluated at ``tau`` into an array of shape ``tau.shape + (n,)``."""
    return np.stack([np.asarray(p(tau), dtype=complex) for p in pulses], axis=-1)


def evaluate_derivatives(pulses: Sequence[PulseSpec], tau) -> np.ndarray:
    return np.stack([np.asarray(p.derivative(tau), dtype=complex) for p in pulses], axis=-1)
