"""Run configuration, serialization and the ``adiabaton`` command line.

Configs are JSON objects validated against :data:`CONFIG_SCHEMA`.  A run
directory holds ``metadata.json`` (config echo plus SHA-256 of every data
file), ``snapshots/z_*.csv`` (rows are tau samples; columns ``tau`` then
``re``/``im`` per field), binary twins ``fields.npy``, ``atoms.npy``,
``z.npy``, ``tau.npy``, ``diagnostics.json`` and, when ``plots.ratio_tau``
is set, ``ratio_vs_z.csv``.  Failures write
``error.json`` and exit non-zero.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
import jsonschema
import numpy as np

from .adiabatic.double_tripod import dt_adiabaton_predict, dt_normal_modes, dt_velocity_matrix
from .adiabatic.lambda_system import lambda_analytic_solution
from .adiabatic.m_type import m_group_velocity, m_velocity_matrix
from .diagnostics import diagnose, profile_errors
from .errors import AdiabatonError, ConfigInvalid, GridMismatch, NonFiniteDetected
from .integrator import PROBE_FIELDS, GridSpec, SpaceTimeSolution, run
from .scheme import Kind, SchemeSpec, build_scheme, evaluate_fields, pulse_from_dict

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"

_number = {"oneOf": [{"type": "number"},
                     {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}

_pulse = {
    "oneOf": [
        {"type": "object", "additionalProperties": False,
         "required": ["shape", "amplitude", "center", "width"],
         "properties": {"shape": {"const": "gaussian"}, "amplitude": _number, "center": {"type": "number"},
                        "width": {"type": "number", "exclusiveMinimum": 0}, "offset": _number}},
        {"type": "object", "additionalProperties": False, "required": ["shape", "amplitude"],
         "properties": {"shape": {"const": "constant"}, "amplitude": _number}},
        {"type": "object", "additionalProperties": False, "required": ["shape", "tau", "re"],
         "properties": {"shape": {"const": "tabulated"},
                        "tau": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                        "re": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                        "im": {"type": "array", "items": {"type": "number"}}}},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "scheme", "boundary", "grid"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "scheme": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {
                "kind": {"enum": [k.value for k in Kind]},
                "delta": {"type": "number"}, "delta1": {"type": "number"}, "delta2": {"type": "number"},
                "gamma": {"type": "number"}, "alpha": {"type": "number"}, "length": {"type": "number"},
                "coupling": {"type": "number"},
            },
        },
        "boundary": {"type": "object", "additionalProperties": _pulse},
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tau_min": {"type": "number"}, "tau_max": {"type": "number"},
                "d_tau": {"type": "number"}, "z_max": {"type": "number"}, "d_z": {"type": "number"},
                "snapshot_stride_z": {"type": "integer", "minimum": 1},
                "tau_stride": {"type": "integer", "minimum": 1},
            },
        },
        "initial_state": {"enum": ["ground", "dark"]},
        "diagnostics": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "tau_window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "shape": {
                    "type": "object", "additionalProperties": False,
                    "required": ["combination", "v_g", "z_ref", "z_probe"],
                    "properties": {
                        "combination": {"oneOf": [{"type": "string"},
                                                  {"type": "object", "additionalProperties": {"type": "number"}}]},
                        "v_g": {"type": "number", "exclusiveMinimum": 0},
                        "z_ref": {"type": "number"}, "z_probe": {"type": "number"},
                    },
                },
            },
        },
        "oracle": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "chi1_abs": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "omega1_total": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "plots": {
            "type": "object", "additionalProperties": False,
            "properties": {"z": {"type": "array", "items": {"type": "number"}},
                           "ratio_tau": {"type": "number"}},
        },
        "seed": {"type": "integer"},
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with its parsed parts; ``raw`` is echoed into metadata."""

    raw: dict
    scheme: SchemeSpec
    boundary: dict
    grid: GridSpec
    initial_state: str = "ground"

    @property
    def diagnostics(self) -> dict:
        return self.raw.get("diagnostics", {})

    @property
    def oracle(self) -> dict:
        return self.raw.get("oracle", {})


def bundled_configs() -> List[str]:
    root = resources.files("adiabaton") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_config_text(path_or_name: str) -> str:
    """Text of a config file, or of a bundled config when given its bare name."""
    p = Path(path_or_name)
    if p.exists():
        return p.read_text(encoding="utf-8")
    ref = resources.files("adiabaton") / "configs" / f"{path_or_name}.json"
    if ref.is_file():
        return ref.read_text(encoding="utf-8")
    raise ConfigInvalid(f"no config file {path_or_name!r} and no bundled config of that name "
                        f"(bundled: {', '.join(bundled_configs())})")


def parse_config(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"config invalid at {where}: {exc.message}") from None
    params = dict(raw["scheme"])
    kind = params.pop("kind")
    try:
        scheme = build_scheme(kind, **params)
    except TypeError as exc:
        raise ConfigInvalid(f"scheme parameters do not fit {kind!r}: {exc}") from None
    except AdiabatonError as exc:
        raise ConfigInvalid(str(exc)) from None
    missing = set(scheme.field_ids) - set(raw["boundary"])
    extra = set(raw["boundary"]) - set(scheme.field_ids)
    if missing or extra:
        raise ConfigInvalid(f"boundary must define exactly {list(scheme.field_ids)}; "
                            f"missing {sorted(missing)}, unknown {sorted(extra)}")
    try:
        boundary = {fid: pulse_from_dict(raw["boundary"][fid]) for fid in scheme.field_ids}
        grid = GridSpec(**raw["grid"])
    except (ValueError, AdiabatonError) as exc:
        raise ConfigInvalid(str(exc)) from None
    stored = grid.z[grid.snapshot_indices()]
    wanted = list(raw.get("plots", {}).get("z", []))
    shape = raw.get("diagnostics", {}).get("shape")
    if shape:
        wanted += [shape["z_ref"], shape["z_probe"]]
    for z in wanted:
        if not np.any(np.abs(stored - z) <= 1e-9 * max(1.0, abs(z))):
            raise ConfigInvalid(f"z={z:g} is not a stored snapshot depth; stored: {stored.tolist()}")
    return RunConfig(raw=raw, scheme=scheme, boundary=boundary, grid=grid,
                     initial_state=raw.get("initial_state", "ground"))


def load_config(path_or_name: str) -> RunConfig:
    try:
        raw = json.loads(read_config_text(path_or_name))
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
    return parse_config(raw)


# -- writers ------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def snapshot_name(z: float) -> str:
    return f"z_{z:09.4f}.csv"


def write_slice_csv(path: Path, tau: np.ndarray, values: np.ndarray, field_ids: Sequence[str]):
    """One row per tau sample: ``tau, re_<id>, im_<id>, ...`` at 17 significant digits."""
    cols = [tau]
    header = ["tau"]
    for k, fid in enumerate(field_ids):
        cols += [values[:, k].real, values[:, k].imag]
        header += [f"re_{fid}", f"im_{fid}"]
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt=FLOAT_FMT, header=",".join(header),
               comments="")


def read_slice_csv(path: Path) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ids = [h[3:] for h in header[1::2]]
    values = data[:, 1::2] + 1j * data[:, 2::2]
    return data[:, 0], values, ids


def _write_table(out: Path, tau, z_values, slices, field_ids, extra_arrays: Dict[str, np.ndarray]):
    snap = out / "snapshots"
    snap.mkdir(parents=True, exist_ok=True)
    files = []
    for z, values in zip(z_values, slices):
        name = snapshot_name(float(z))
        write_slice_csv(snap / name, tau, values, field_ids)
        files.append(f"snapshots/{name}")
    for name, arr in extra_arrays.items():
        np.save(out / f"{name}.npy", arr, allow_pickle=False)
        files.append(f"{name}.npy")
    return files


def write_solution(sol: SpaceTimeSolution, out: Path, config: Optional[dict] = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = _write_table(out, sol.tau, sol.z, sol.fields, sol.scheme.field_ids,
                         {"fields": sol.fields, "atoms": sol.atoms, "z": sol.z, "tau": sol.tau})
    meta = {
        "kind": "simulation",
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "scheme": sol.scheme.to_dict(),
        "grid": sol.grid.to_dict(),
        "field_ids": list(sol.scheme.field_ids),
        "z": sol.z.tolist(),
        "initial_state": sol.metadata.get("initial_state"),
        "checksums": {f: _sha256(out / f) for f in files},
    }
    _json_dump(meta, out / "metadata.json")
    return meta


def write_error(out: Path, exc: BaseException):
    out.mkdir(parents=True, exist_ok=True)
    record = {"error": getattr(exc, "kind", type(exc).__name__), "message": str(exc)}
    if isinstance(exc, NonFiniteDetected):
        record.update(z=exc.z, tau=exc.tau)
    _json_dump(record, out / "error.json")


# -- SVG plots ----------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def svg_line_plot(series: Sequence[Tuple[str, np.ndarray, np.ndarray]], title: str,
                  xlabel: str, ylabel: str, width: int = 640, height: int = 400) -> str:
    """Self-contained SVG with one polyline per ``(label, x, y)``."""
    ml, mr, mt, mb = 60, 150, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([s[1] for s in series])
    ys = np.concatenate([s[2] for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if y1 <= y0:
        y1 = y0 + 1.0
    y1 += 0.05 * (y1 - y0)

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        parts.append(f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" y2="{mt + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<line x1="{ml - 4}" y1="{py(t):.1f}" x2="{ml}" y2="{py(t):.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 7}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>')
    for i, (label, x, y) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        step = max(1, len(x) // 2000)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::step], y[::step]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{pts}"/>')
        ly = mt + 14 + 16 * i
        parts.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}"/>')
        parts.append(f'<text x="{ml + pw + 35}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_plots(sol: SpaceTimeSolution, out: Path, z_values: Optional[Sequence[float]] = None):
    """``|Omega|`` against tau for each field at the first and last (or chosen) depths."""
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    if z_values is None:
        z_values = [float(sol.z[0]), float(sol.z[-1])]
    for k, fid in enumerate(sol.scheme.field_ids):
        series = [(f"z = {z:g}", sol.tau, np.abs(sol.fields[sol.index_at(z), :, k])) for z in z_values]
        svg = svg_line_plot(series, f"|{fid}|", "tau (1/Gamma)", "amplitude (Gamma)")
        (plots / f"{fid}.svg").write_text(svg, encoding="utf-8")


def write_ratio_vs_z(sol: SpaceTimeSolution, out: Path, tau: float, plot: bool = False) -> Path:
    """``chi1(z)`` (first probe over its control) at the stored sample nearest ``tau``."""
    from .diagnostics import ratio_profile

    n = int(np.argmin(np.abs(sol.tau - tau)))
    chi = ratio_profile(sol)[:, n]
    path = out / "ratio_vs_z.csv"
    np.savetxt(path, np.column_stack([sol.z, chi.real, chi.imag]), delimiter=",", fmt=FLOAT_FMT,
               header="z,re_chi1,im_chi1", comments="")
    if plot:
        plots = out / "plots"
        plots.mkdir(parents=True, exist_ok=True)
        svg = svg_line_plot([(f"tau = {sol.tau[n]:g}", sol.z, chi.real)], "chi1 against depth",
                            "z (absorption lengths)", "Re chi1")
        (plots / "ratio_vs_z.svg").write_text(svg, encoding="utf-8")
    return path


# -- oracles ------------------------------------------------------------------

ORACLES = ("lambda_analytic", "dt_modes", "dt_predict", "m_velocity")


def _background(cfg: RunConfig) -> np.ndarray:
    pulses = [cfg.boundary[f] for f in cfg.scheme.field_ids]
    return evaluate_fields(pulses, np.array(cfg.grid.tau_min))


def run_oracle(cfg: RunConfig, which: str, out: Path) -> dict:
    """Evaluate an adiabatic-limit oracle for ``cfg`` and write its table."""
    sch = cfg.scheme
    out.mkdir(parents=True, exist_ok=True)
    z_values = cfg.grid.z[cfg.grid.snapshot_indices()]
    tau = cfg.grid.tau[cfg.grid.tau_output_indices()]
    meta = {"kind": "oracle", "which": which, "schema_version": SCHEMA_VERSION, "config": cfg.raw,
            "scheme": sch.to_dict()}
    summary: dict = {}
    if which in ("lambda_analytic", "dt_predict"):
        if which == "lambda_analytic":
            _require(sch, Kind.LAMBDA, which)
            pair = (cfg.boundary["omega0"], cfg.boundary["omega1"])
            slices = [lambda_analytic_solution(pair, sch.detunings[1], float(z), tau, sch.g_over_c)
                      for z in z_values]
        else:
            _require(sch, Kind.DOUBLE_TRIPOD, which)
            bg = _background(cfg)
            bg[[0, 3]] = 0.0
            probes = (cfg.boundary["omega10"], cfg.boundary["omega20"])
            slices = [dt_adiabaton_predict(bg, probes, float(z), tau, sch.g_over_c) for z in z_values]
        fields = np.stack(slices)
        files = _write_table(out, tau, z_values, fields, sch.field_ids,
                             {"fields": fields, "z": z_values, "tau": tau})
        meta.update(field_ids=list(sch.field_ids), z=z_values.tolist(),
                    checksums={f: _sha256(out / f) for f in files})
    elif which == "dt_modes":
        _require(sch, Kind.DOUBLE_TRIPOD, which)
        bg = _background(cfg)
        bg[[0, 3]] = 0.0
        op = dt_velocity_matrix(bg, sch.detunings[1:], sch.g_over_c)
        modes = dt_normal_modes(op)
        summary = {
            "matrix": {"re": op.m.real.tolist(), "im": op.m.imag.tolist()},
            "inverse_velocities": [m.inverse_velocity for m in modes],
            "modes": [{"label": lab, "v_g": m.v_g, "xi": [m.xi.real, m.xi.imag],
                       "eigvec_re": m.eigvec.real.tolist(), "eigvec_im": m.eigvec.imag.tolist()}
                      for lab, m in zip(("slow", "fast"), modes)],
        }
        for lab, m in zip(("slow", "fast"), modes):
            click.echo(f"{lab}: v_g = {m.v_g:.6g}  1/v_g = {m.inverse_velocity:.6g}  xi = {m.xi.real:+.6g}")
    elif which == "m_velocity":
        _require(sch, Kind.MTYPE, which)
        bg = _background(cfg)
        op = m_velocity_matrix(bg, sch.detunings[1:], sch.g_over_c)
        omega1 = cfg.oracle.get("omega1_total", float(np.sqrt(abs(bg[0]) ** 2 + abs(bg[1]) ** 2)))
        chis = cfg.oracle.get("chi1_abs", [0.0, 0.5, 1.0])
        lam = m_group_velocity(0.0, omega1, sch.g_over_c)
        rows = [{"chi1_abs": c, "v_g": float(m_group_velocity(c, omega1, sch.g_over_c)),
                 "factor": float(m_group_velocity(c, omega1, sch.g_over_c) / lam)} for c in chis]
        summary = {"matrix": {"re": op.m.real.tolist(), "im": op.m.imag.tolist()},
                   "omega1_total": omega1, "group_velocity": rows}
        for r in rows:
            click.echo(f"|chi1| = {r['chi1_abs']:g}: v_g = {r['v_g']:.6g} ({r['factor']:.6g} x Lambda)")
    else:
        raise ConfigInvalid(f"unknown oracle {which!r}; choose from {ORACLES}")
    if summary:
        _json_dump(summary, out / f"{which}.json")
        meta["checksums"] = {f"{which}.json": _sha256(out / f"{which}.json")}
    _json_dump(meta, out / "metadata.json")
    return meta


def _require(scheme: SchemeSpec, kind: Kind, which: str):
    if scheme.kind is not kind:
        raise ConfigInvalid(f"oracle {which!r} needs a {kind.value} scheme, config has {scheme.kind.value}")


# -- diff ---------------------------------------------------------------------

def compare_dirs(run_dir: Path, oracle_dir: Path) -> List[dict]:
    """Per-depth relative L2 errors between a run and an oracle table on the same grid."""
    run_meta = json.loads((run_dir / "metadata.json").read_text(encoding="utf-8"))
    orc_meta = json.loads((oracle_dir / "metadata.json").read_text(encoding="utf-8"))
    if "z" not in orc_meta:
        raise GridMismatch(f"oracle {orc_meta.get('which')!r} has no field table to compare")
    kind = Kind(run_meta["scheme"]["kind"])
    probes = PROBE_FIELDS[kind]
    rows = []
    for z in orc_meta["z"]:
        name = snapshot_name(float(z))
        if not (run_dir / "snapshots" / name).exists():
            raise GridMismatch(f"run has no snapshot at z={z:g}")
        t_run, v_run, ids_run = read_slice_csv(run_dir / "snapshots" / name)
        t_orc, v_orc, ids_orc = read_slice_csv(oracle_dir / "snapshots" / name)
        if ids_run != ids_orc:
            raise GridMismatch(f"field sets differ: {ids_run} vs {ids_orc}")
        if t_run.shape != t_orc.shape or not np.allclose(t_run, t_orc, rtol=0, atol=1e-9):
            raise GridMismatch(f"tau grids differ at z={z:g}")
        errs = profile_errors(v_run, v_orc, [ids_orc.index(p) for p in probes])
        rows.append({"z": float(z), **{fid: float(e) for fid, e in zip(ids_orc, errs)},
                     "max": float(np.max(errs))})
    return rows


# -- commands -----------------------------------------------------------------

def _fail(out: Optional[Path], exc: BaseException, code: int):
    if out is not None:
        write_error(out, exc)
    click.echo(f"error: {getattr(exc, 'kind', type(exc).__name__)}: {exc}", err=True)
    sys.exit(code)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Adiabaton propagation simulator and adiabatic-limit oracles."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, help="Config file or bundled config name.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--emit-plots", is_flag=True, help="Write SVG envelope plots under plots/.")
def simulate(config_path, out_dir, emit_plots):
    """Integrate the atom-field equations and write snapshots plus diagnostics."""
    try:
        cfg = load_config(config_path)
    except AdiabatonError as exc:
        _fail(out_dir, exc, 2)
    try:
        diag_cfg = cfg.diagnostics
        sol = run(cfg.scheme, cfg.boundary, cfg.grid, cfg.initial_state,
                  monitor_threshold=diag_cfg.get("threshold", 0.1))
        write_solution(sol, out_dir, cfg.raw)
        if diag_cfg.get("enabled", True):
            report = diagnose(sol, threshold=diag_cfg.get("threshold", 0.1),
                              tolerance=diag_cfg.get("tolerance", 0.01), shape=diag_cfg.get("shape"),
                              tau_window=diag_cfg.get("tau_window"))
            _json_dump(report.to_dict(), out_dir / "diagnostics.json")
        plot_cfg = cfg.raw.get("plots", {})
        if emit_plots:
            write_plots(sol, out_dir, plot_cfg.get("z"))
        if "ratio_tau" in plot_cfg:
            write_ratio_vs_z(sol, out_dir, plot_cfg["ratio_tau"], plot=emit_plots)
    except AdiabatonError as exc:
        _fail(out_dir, exc, 3)
    click.echo(f"wrote {len(sol.z)} snapshots (z = {sol.z[0]:g} .. {sol.z[-1]:g}) to {out_dir}")


@main.command()
@click.option("--config", "config_path", required=True, help="Config file or bundled config name.")
@click.option("--which", type=click.Choice(ORACLES), required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
def oracle(config_path, which, out_dir):
    """Evaluate an analytic oracle on the config's boundary and grid."""
    try:
        cfg = load_config(config_path)
        run_oracle(cfg, which, out_dir)
    except ConfigInvalid as exc:
        _fail(out_dir, exc, 2)
    except AdiabatonError as exc:
        _fail(out_dir, exc, 3)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("oracle_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--tol", type=float, default=0.05, show_default=True,
              help="Largest accepted relative L2 error per field.")
def diff(run_dir, oracle_dir, tol):
    """Compare a run with an oracle table; exit 1 when any error exceeds TOL."""
    try:
        rows = compare_dirs(run_dir, oracle_dir)
    except AdiabatonError as exc:
        _fail(None, exc, 2)
    except (OSError, ValueError, KeyError) as exc:
        _fail(None, GridMismatch(str(exc)), 2)
    ids = [k for k in rows[0] if k not in ("z", "max")] if rows else []
    click.echo("z," + ",".join(ids) + ",max,status")
    worst = 0.0
    for r in rows:
        status = "ok" if r["max"] <= tol else "FAIL"
        worst = max(worst, r["max"])
        click.echo(f"{r['z']:g}," + ",".join(f"{r[i]:.6g}" for i in ids) + f",{r['max']:.6g},{status}")
    sys.exit(0 if worst <= tol else 1)


if __name__ == "__main__":
    main()
