"""Command-line front end: ``paramnet <command> <network.json> [options]``.

Exit codes: 0 success, 1 usage, 2 parse/validation, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .direction import isolation
from .dynamics import (
    IntegrationError,
    UnstableSystemError,
    adiabatic_eliminate,
    build_state_space,
    integrate_time_domain,
    steady_covariance,
)
from .frames import compile_effective, quadrature_transform
from .netmodel import NetworkError, NetworkSpec, parse_network
from .noise import added_noise, output_spectrum, squeezing_analysis
from .scattering import (
    BandwidthError,
    SingularityError,
    bandwidth,
    power_gain,
    scatter,
    stability_margin,
)

COMMANDS = ("compile", "scatter", "gain", "noise", "squeeze", "stability", "direction", "gbw", "rwa-compare", "eliminate")
EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="paramnet", description="Analyse linear networks of parametrically coupled modes.")
    p.add_argument("--version", action="version", version=f"paramnet {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", help="network JSON file")
    p.add_argument("--omega-min", type=float, help="lower end of the frequency grid, rad/s (default -5 kappa/2)")
    p.add_argument("--omega-max", type=float, help="upper end of the frequency grid, rad/s (default +5 kappa/2)")
    p.add_argument("--points", type=int, default=2001, help="grid points (>= 2)")
    p.add_argument("--sweep", nargs=2, metavar=("PATH", "VALUES"), help="dotted path into the document (or 'cooperativity') and a comma list")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout); manifest.json is written next to it")
    p.add_argument("--input-port", help="input selector, e.g. d1, d1.dag, d1.X")
    p.add_argument("--output-port", help="output selector")
    p.add_argument("--reverse", nargs=2, metavar=("IN", "OUT"), help="reverse path for 'direction' (default: swapped ports)")
    p.add_argument("--squeezed", help="squeezed output quadrature for 'squeeze' (default <idler>.X)")
    p.add_argument("--mode", help="mode to eliminate")
    p.add_argument("--t-end", type=float, help="integration time for rwa-compare (default 10/min kappa)")
    p.add_argument("--dt", type=float, help="time step for rwa-compare (default 1/(20 max frequency))")
    return p


# ---------------------------------------------------------------------------
# sweeps on the raw document


def _role(doc: dict, role: str) -> str | None:
    for m in doc.get("modes", []):
        if m.get("role") == role:
            return m["label"]
    return None


def _set_path(doc: dict, path: str, value: float) -> None:
    keys = path.split(".")
    node = doc
    for key in keys[:-1]:
        node = _step(node, key, path)
    last = keys[-1]
    if isinstance(node, list):
        idx = _index(node, last, path)
        old = node[idx]
        if not isinstance(old, (int, float)):
            raise NetworkError(f"sweep path {path!r} does not resolve to a numeric field")
        node[idx] = value
        return
    if not isinstance(node, dict) or last not in node or not _is_number(node[last]):
        if isinstance(node, dict) and last not in node and last in _OPTIONAL_NUMERIC:
            node[last] = value
            return
        raise NetworkError(f"sweep path {path!r} does not resolve to a numeric field")
    node[last] = value if not isinstance(node[last], list) else [value, 0.0]


_OPTIONAL_NUMERIC = {"kappa_int", "n_thermal_port", "n_thermal_int", "phi", "n_thermal"}


def _is_number(x) -> bool:
    if isinstance(x, bool):
        return False
    if isinstance(x, (int, float)):
        return True
    return isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)


def _index(node: list, key: str, path: str) -> int:
    if key.isdigit() and int(key) < len(node):
        return int(key)
    for i, item in enumerate(node):
        if isinstance(item, dict) and item.get("label") == key:
            return i
    raise NetworkError(f"sweep path {path!r}: cannot resolve {key!r}")


def _step(node, key: str, path: str):
    if isinstance(node, list):
        return node[_index(node, key, path)]
    if isinstance(node, dict) and key in node:
        return node[key]
    raise NetworkError(f"sweep path {path!r}: cannot resolve {key!r}")


def _amp(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _set_cooperativity(doc: dict, C: float) -> None:
    """Scale every coupling touching the auxiliary mode so that ``4 g^2/(kappa_aux kappa_sig) = C``.

    g is the signal-auxiliary coupling; couplings to other modes keep their ratio to it.
    """
    sig, aux = _role(doc, "signal"), _role(doc, "auxiliary")
    if sig is None or aux is None:
        raise NetworkError("sweep 'cooperativity' needs modes with role 'signal' and 'auxiliary'")
    modes = {m["label"]: m for m in doc["modes"]}
    k_aux = modes[aux]["kappa_port"] + modes[aux].get("kappa_int", 0.0)
    k_sig = modes[sig]["kappa_port"] + modes[sig].get("kappa_int", 0.0)
    items = [(c, "amplitude") for c in doc.get("static_couplings", [])] + [(d, "lambda") for d in doc.get("drives", [])]
    touching = [(o, key) for o, key in items if aux in o["modes"]]
    g_sig = [abs(_amp(o[key])) for o, key in touching if sig in o["modes"]]
    if not g_sig or g_sig[0] == 0:
        raise NetworkError("sweep 'cooperativity': no nonzero signal-auxiliary coupling")
    factor = math.sqrt(C * k_aux * k_sig / 4.0) / g_sig[0]
    for o, key in touching:
        v = o[key]
        o[key] = [v[0] * factor, v[1] * factor] if isinstance(v, list) else v * factor


def apply_sweep(doc: dict, path: str, value: float) -> dict:
    out = copy.deepcopy(doc)
    if path == "cooperativity":
        _set_cooperativity(out, value)
    else:
        _set_path(out, path, value)
    return out


def _parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"sweep values must be a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise UsageError("empty sweep value list")
    return vals


# ---------------------------------------------------------------------------
# defaults


def _signal_mode(spec: NetworkSpec):
    for m in spec.modes:
        if m.role_hint == "signal":
            return m
    for m in spec.modes:
        if m.kappa_port > 0:
            return m
    return spec.modes[0]


def _idler_mode(spec: NetworkSpec):
    for m in spec.modes:
        if m.role_hint == "idler":
            return m
    ports = [m for m in spec.modes if m.kappa_port > 0]
    return ports[1] if len(ports) > 1 else ports[0]


def _grid(args, spec: NetworkSpec, resolved: dict) -> np.ndarray:
    kappa = _signal_mode(spec).kappa or max((m.kappa for m in spec.modes), default=1.0) or 1.0
    lo = args.omega_min if args.omega_min is not None else -2.5 * kappa
    hi = args.omega_max if args.omega_max is not None else 2.5 * kappa
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    if hi <= lo:
        raise UsageError("--omega-max must exceed --omega-min")
    resolved.update(omega_min=lo, omega_max=hi, points=args.points)
    return np.linspace(lo, hi, args.points)


def _ports(args, spec: NetworkSpec, resolved: dict, default_out: str | None = None) -> tuple[str, str]:
    sig = _signal_mode(spec).label
    i = args.input_port or sig
    o = args.output_port or default_out or i
    resolved.update(input_port=i, output_port=o)
    return i, o


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return buf.getvalue()


def _columns_csv(omega: np.ndarray, columns: list[tuple[str, np.ndarray]]) -> str:
    header = ["omega_rad_s"] + [name for name, _ in columns]
    rows = ([w] + [c[k] for _, c in columns] for k, w in enumerate(omega))
    return _csv(header, rows)


def _columns_json(omega: np.ndarray, columns: list[tuple[str, np.ndarray]], summary: dict | None = None) -> str:
    doc = {"omega_rad_s": [float(w) for w in omega]}
    for name, col in columns:
        doc[name] = [float(v) for v in col]
    if summary:
        doc["summary"] = summary
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _db(g: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(g)


def _threads() -> int:
    raw = os.environ.get("PARAMNET_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"PARAMNET_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _map_ordered(fn, items: list) -> list:
    n = min(_threads(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# commands; each returns (payload text, summary dict)


def _model(spec: NetworkSpec):
    return build_state_space(compile_effective(spec))


def cmd_compile(args, spec, doc, resolved):
    system = compile_effective(spec)
    h = system.H
    if args.format == "csv":
        n2 = h.shape[0]
        rows = [[f"v{i}", f"v{j}", h[i, j].real, h[i, j].imag] for i in range(n2) for j in range(n2)]
        return _csv(["row", "col", "re_H", "im_H"], rows), {}
    out = {
        "basis": list(system.basis),
        "H_re": h.real.tolist(),
        "H_im": h.imag.tolist(),
        "H_quadrature": quadrature_transform(system).tolist(),
        "kept_terms": [t.to_dict() for t in system.kept_terms],
        "dropped_terms": [t.to_dict() for t in system.dropped_terms],
        "jumps": [{"rate": j.rate, "n_thermal": j.n_thermal, "coefficients": {k: [[u.real, u.imag], [v.real, v.imag]] for k, (u, v) in j.coefficients.items()}} for j in system.jumps],
        "diagnostics": [str(d) for d in system.diagnostics],
    }
    return json.dumps(out, indent=2, sort_keys=True) + "\n", {}


def cmd_scatter(args, spec, doc, resolved):
    grid = _grid(args, spec, resolved)
    model = _model(spec)
    res = scatter(model, grid)
    if args.input_port or args.output_port:
        i, o = _ports(args, spec, resolved)
        pairs = [(o, i)]
    else:
        ports = [c.label for c in model.channels if c.kind == "port"]
        pairs = [(o, i) for o in ports for i in ports]
        resolved["elements"] = [f"{o}<-{i}" for o, i in pairs]
    cols = []
    for o, i in pairs:
        s = res.element(model, o, i)
        cols.append((f"re_S_{o}_{i}", s.real))
        cols.append((f"im_S_{o}_{i}", s.imag))
    for o, i in pairs:
        cols.append((f"abs_S_{o}_{i}", np.abs(res.element(model, o, i))))
    return _emit(args, grid, cols)


def _emit(args, grid, cols, summary=None):
    if args.format == "json":
        return _columns_json(grid, cols, summary), summary or {}
    return _columns_csv(grid, cols), summary or {}


def _sweep_specs(args, doc, resolved):
    if not args.sweep:
        return [(None, parse_network(json.dumps(doc)))]
    path, text = args.sweep
    values = _parse_values(text)
    resolved["sweep"] = {"path": path, "values": values}
    return [(v, parse_network(json.dumps(apply_sweep(doc, path, v)))) for v in values]


def cmd_gain(args, spec, doc, resolved):
    grid = _grid(args, spec, resolved)
    i, o = _ports(args, spec, resolved)
    points = _sweep_specs(args, doc, resolved)

    def run(item):
        v, sp = item
        curve = power_gain(_model(sp), i, o, grid)
        try:
            bw = bandwidth(curve)
        except BandwidthError:
            bw = math.nan
        return v, curve, bw

    results = _map_ordered(run, points)
    cols, summary = [], {}
    for v, curve, bw in results:
        name = "gain_db" if v is None else f"gain_db[{args.sweep[0]}={v:g}]"
        cols.append((name, _db(curve.gain)))
        summary[name] = {"G0": curve.at(0.0), "bandwidth_rad_s": bw}
    return _emit(args, grid, cols, summary)


def cmd_noise(args, spec, doc, resolved):
    grid = _grid(args, spec, resolved)
    i, o = _ports(args, spec, resolved)
    model = _model(spec)
    spec_out = output_spectrum(model, o, grid)
    cols = [("spectrum_quanta", spec_out.value)]
    summary = {}
    if args.input_port:
        nadd = added_noise(model, i, o, grid)
        if len(nadd.omega) == len(grid):
            cols.append(("n_add_quanta", nadd.value))
        at0 = added_noise(model, i, o, [0.0])
        summary["n_add_at_0"] = float(at0.value[0]) if len(at0.omega) else math.nan
    return _emit(args, grid, cols, summary)


def cmd_squeeze(args, spec, doc, resolved):
    grid = _grid(args, spec, resolved)
    sig, idl = _signal_mode(spec), _idler_mode(spec)
    i = args.input_port or f"{sig.label}.X"
    o = args.output_port or f"{idl.label}.P"
    sq = args.squeezed or f"{idl.label}.X"
    resolved.update(input_port=i, output_port=o, squeezed=sq, bandwidth_definition="3db", kappa=sig.kappa)
    res = squeezing_analysis(_model(spec), grid, sig.kappa, squeezed=sq, amplified=(i, o))
    summary = {
        "variance_at_0": res.variance0,
        "squeezing_bandwidth_rad_s": res.bandwidth,
        "gain": res.gain,
        "dpa_bandwidth_rad_s": res.dpa_bandwidth,
        "ratio_to_dpa": res.ratio,
    }
    return _emit(args, grid, [("variance_quanta", res.curve[:, 1])], summary)


def cmd_stability(args, spec, doc, resolved):
    points = _sweep_specs(args, doc, resolved)
    rows = _map_ordered(lambda it: (it[0], stability_margin(_model(it[1]))), points)
    name = args.sweep[0] if args.sweep else "param"
    if args.format == "json":
        out = [{name: v, "stability_margin": m, "stable": m < 0} for v, m in rows]
        return json.dumps(out, indent=2, sort_keys=True) + "\n", {}
    return _csv([name, "stability_margin", "stable"], [["" if v is None else _fmt(v), m, str(int(m < 0))] for v, m in rows]), {}


def cmd_direction(args, spec, doc, resolved):
    grid = _grid(args, spec, resolved)
    default_out = _idler_mode(spec).label + ".dag"
    i, o = _ports(args, spec, resolved, default_out=default_out)
    rev = tuple(args.reverse) if args.reverse else None
    resolved["reverse"] = list(rev) if rev else [o, i]
    res = isolation(_model(spec), (i, o), grid, reverse_pair=rev)
    cols = [("gain_fwd_db", _db(res.forward)), ("gain_rev_db", 10 * np.log10(np.maximum(res.reverse, 1e-30))), ("isolation_db", res.isolation_db)]
    return _emit(args, grid, cols)


def cmd_gbw(args, spec, doc, resolved):
    if not args.sweep:
        raise UsageError("gbw needs --sweep PATH VALUES")
    grid = _grid(args, spec, resolved)
    i, o = _ports(args, spec, resolved)
    points = _sweep_specs(args, doc, resolved)

    def run(item):
        v, sp = item
        model = _model(sp)
        margin = stability_margin(model)
        if margin >= 0:
            return [v, math.nan, math.nan, math.nan, math.nan, "0"]
        curve = power_gain(model, i, o, grid)
        g0 = curve.at(0.0)
        try:
            bw = bandwidth(curve)
        except BandwidthError:
            bw = math.nan
        return [v, g0, 10 * math.log10(g0) if g0 > 0 else -math.inf, bw, math.sqrt(g0) * bw, "1"]

    rows = _map_ordered(run, points)
    header = [args.sweep[0], "G0", "G0_db", "bandwidth_rad_s", "gbw_rad_s", "stable"]
    if args.format == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2, sort_keys=True) + "\n", {}
    return _csv(header, rows), {}


def cmd_rwa_compare(args, spec, doc, resolved):
    if spec.frame != "lab":
        raise NetworkError("rwa-compare needs a lab-frame network with drives")
    rwa_model = _model(spec)
    v_rwa = steady_covariance(rwa_model)
    kmin = min((m.kappa for m in spec.modes if m.kappa > 0), default=1.0)
    top = max([abs(m.omega) for m in spec.modes] + [abs(d.omega_d) for d in spec.drives])
    t_end = args.t_end if args.t_end is not None else 10.0 / kmin
    dt = args.dt if args.dt is not None else 1.0 / (20.0 * top)
    resolved.update(t_end=t_end, dt=dt, initial_covariance="rwa_steady_state")
    tr = integrate_time_domain(spec, (0.0, t_end), dt, include_cr=True, initial_covariance=v_rwa)
    half = len(tr.t) // 2
    dev = float(np.max(np.abs(tr.covariances[half:] - v_rwa[None])))
    summary = {"max_deviation_from_rwa_steady_state": dev}
    if args.format == "json":
        out = {"t": tr.t.tolist(), "covariances": tr.covariances.tolist(), "summary": summary}
        return json.dumps(out, indent=2, sort_keys=True) + "\n", summary
    return tr.to_csv(), summary


def cmd_eliminate(args, spec, doc, resolved):
    system = compile_effective(spec)
    mode = args.mode
    if mode is None:
        aux = [m.label for m in spec.modes if m.role_hint == "auxiliary"]
        if not aux:
            raise UsageError("eliminate needs --mode (no mode has role 'auxiliary')")
        mode = aux[0]
    resolved["mode"] = mode
    res = adiabatic_eliminate(system, mode)
    out = {
        "mode": mode,
        "Lambda": res.Lambda,
        "Gamma": res.Gamma,
        "coupling": res.coupling,
        "jump": None
        if res.jump is None
        else {"rate": res.jump.rate, "n_thermal": res.jump.n_thermal, "coefficients": {k: [[u.real, u.imag], [v.real, v.imag]] for k, (u, v) in res.jump.coefficients.items()}},
        "reduced_basis": list(res.reduced.basis),
        "reduced_H_re": res.reduced.H.real.tolist(),
        "reduced_H_im": res.reduced.H.imag.tolist(),
        "diagnostics": [str(d) for d in res.diagnostics],
    }
    if args.format == "csv":
        return _csv(["quantity", "value"], [["Lambda", res.Lambda], ["Gamma", res.Gamma], ["coupling", res.coupling]]), {}
    return json.dumps(out, indent=2, sort_keys=True) + "\n", {}


HANDLERS = {
    "compile": cmd_compile,
    "scatter": cmd_scatter,
    "gain": cmd_gain,
    "noise": cmd_noise,
    "squeeze": cmd_squeeze,
    "stability": cmd_stability,
    "direction": cmd_direction,
    "gbw": cmd_gbw,
    "rwa-compare": cmd_rwa_compare,
    "eliminate": cmd_eliminate,
}


def _manifest(args, text: str, resolved: dict, summary: dict) -> dict:
    return {
        "tool": "paramnet",
        "version": __version__,
        "command": args.command,
        "input": str(args.input),
        "input_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "format": args.format,
        "resolved": resolved,
        "summary": _jsonable(summary),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        path = Path(args.input)
        if not path.is_file():
            raise UsageError(f"input file not found: {args.input}")
        text = path.read_text(encoding="utf-8")
        spec = parse_network(text)
        doc = json.loads(text)
        resolved: dict = {}
        payload, summary = HANDLERS[args.command](args, spec, doc, resolved)
    except UsageError as exc:
        print(f"paramnet: usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (NetworkError, KeyError) as exc:
        print(f"paramnet: invalid input: {exc}", file=stderr)
        return EXIT_PARSE
    except (UnstableSystemError, SingularityError, IntegrationError, BandwidthError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"paramnet: numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"paramnet: invalid input: {exc}", file=stderr)
        return EXIT_PARSE

    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(payload, encoding="utf-8", newline="\n")
        manifest = _manifest(args, text, resolved, summary)
        (out.parent / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        stdout.write(payload)
    for d in compile_diagnostics(spec):
        print(f"paramnet: {d}", file=stderr)
    return 0


def compile_diagnostics(spec: NetworkSpec) -> list:
    try:
        return list(compile_effective(spec).diagnostics)
    except NetworkError:
        return []


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
