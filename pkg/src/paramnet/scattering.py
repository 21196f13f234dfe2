"""Scattering matrices, gain curves, bandwidths and stability of linear networks.

Ports are addressed by selectors ``"<channel>[.dag|.X|.P]"`` where the
channel is a mode label (its waveguide port), ``int:<mode>`` (internal loss)
or ``jump:<k>`` (engineered reservoir).  ``.X``/``.P`` select quadratures,
``.dag`` the creation component; a bare label is the annihilation component.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import find_peaks

from .dynamics import StateSpaceModel, build_state_space, max_real_eigenvalue
from .netmodel import quadrature_unitary


class SingularityError(ArithmeticError):
    pass


class BandwidthError(ValueError):
    pass


@dataclass(frozen=True)
class Selector:
    channel: str
    component: str  # "a" | "dag" | "X" | "P"

    @property
    def basis(self) -> str:
        return "quadrature" if self.component in ("X", "P") else "doubled"

    def __str__(self) -> str:
        return self.channel if self.component == "a" else f"{self.channel}.{self.component}"


def parse_selector(text: str) -> Selector:
    head, dot, tail = text.rpartition(".")
    if dot and tail in ("dag", "X", "P"):
        return Selector(head, tail)
    return Selector(text, "a")


def selector_index(model: StateSpaceModel, sel: Selector | str) -> int:
    if isinstance(sel, str):
        sel = parse_selector(sel)
    idx = model.port_index
    if sel.channel not in idx:
        raise KeyError(f"unknown port {sel.channel!r}; available: {', '.join(idx)}")
    k, p = idx[sel.channel], len(idx)
    return {"a": k, "dag": p + k, "X": 2 * k, "P": 2 * k + 1}[sel.component]


def _check_same_basis(sels: Sequence[Selector]) -> str:
    bases = {s.basis for s in sels}
    if len(bases) != 1:
        raise ValueError("cannot mix quadrature and annihilation/creation selectors in one request")
    return bases.pop()


@dataclass
class ScatteringResult:
    omega_grid: np.ndarray
    S: np.ndarray  # (W, 2P, 2P) doubled basis; the quadrature image is complex for w != 0
    ports: tuple[str, ...]

    @property
    def quadrature_S(self) -> np.ndarray:
        u = quadrature_unitary(len(self.ports))
        return u[None] @ self.S @ u.conj().T[None]

    def element(self, model: StateSpaceModel, out_sel, in_sel) -> np.ndarray:
        o, i = parse_selector(out_sel) if isinstance(out_sel, str) else out_sel, parse_selector(in_sel) if isinstance(in_sel, str) else in_sel
        basis = _check_same_basis([o, i])
        m = self.quadrature_S if basis == "quadrature" else self.S
        return m[:, selector_index(model, o), selector_index(model, i)]


def _resolvent_check(model: StateSpaceModel, omega: np.ndarray) -> None:
    eig = np.linalg.eigvals(model.A)
    scale = max(1.0, float(np.max(np.abs(eig)))) if eig.size else 1.0
    for w in np.atleast_1d(omega):
        if np.min(np.abs(-1j * w - eig)) < 1e-12 * scale:
            raise SingularityError(f"pole on the real axis at omega = {w:.6g} (system at instability threshold)")


def scattering_matrix(model: StateSpaceModel, omega) -> np.ndarray:
    """``S(w) = C (-i w - A)^-1 B - I`` in the doubled channel basis.

    Scalar omega returns one 2P x 2P matrix, an array returns a stack.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    _resolvent_check(model, w)
    m = model.A.shape[0]
    p2 = model.C.shape[0]
    lhs = -1j * w[:, None, None] * np.eye(m)[None] - model.A[None]
    rhs = np.broadcast_to(model.B, (len(w),) + model.B.shape)
    s = model.C[None] @ np.linalg.solve(lhs, rhs) - np.eye(p2)[None]
    return s[0] if np.ndim(omega) == 0 else s


def scatter(model: StateSpaceModel, omega_grid) -> ScatteringResult:
    grid = np.asarray(omega_grid, dtype=float)
    return ScatteringResult(grid, scattering_matrix(model, grid), tuple(c.label for c in model.channels))


def element_function(model: StateSpaceModel, out_sel, in_sel) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``omega -> S_out,in(omega)`` in the basis implied by the selectors."""
    o = parse_selector(out_sel) if isinstance(out_sel, str) else out_sel
    i = parse_selector(in_sel) if isinstance(in_sel, str) else in_sel
    basis = _check_same_basis([o, i])
    oi, ii = selector_index(model, o), selector_index(model, i)
    u = quadrature_unitary(len(model.channels))

    def f(omega):
        s = scattering_matrix(model, np.atleast_1d(omega))
        if basis == "quadrature":
            val = np.einsum("j,wjk,k->w", u[oi], s, u[ii].conj())
        else:
            val = s[:, oi, ii]
        return val if np.ndim(omega) else val[0]

    return f


@dataclass
class GainCurve:
    omega: np.ndarray
    gain: np.ndarray
    in_port: str = ""
    out_port: str = ""
    evaluate: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @property
    def gain_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.gain)

    def at(self, omega: float) -> float:
        if self.evaluate is not None:
            return float(self.evaluate(np.array([omega]))[0])
        return float(np.interp(omega, self.omega, self.gain))

    def to_csv(self, db: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega_rad_s", "gain_db" if db else "gain"])
        vals = self.gain_db if db else self.gain
        for x, g in zip(self.omega, vals):
            w.writerow([repr(float(x)), repr(float(g))])
        return buf.getvalue()


def power_gain(model: StateSpaceModel, in_sel, out_sel, omega_grid) -> GainCurve:
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty frequency grid")
    f = element_function(model, out_sel, in_sel)

    def g(omega):
        return np.abs(f(np.atleast_1d(omega))) ** 2

    return GainCurve(grid, g(grid), str(in_sel), str(out_sel), g)


def rotated_power_gain(model: StateSpaceModel, channel: str, theta: float, omega_grid, in_channel: str | None = None) -> GainCurve:
    """Power gain of the quadrature ``cos(theta) X + sin(theta) P`` into itself.

    Needed for single-mode squeezers whose amplified axis is not X or P.
    """
    grid = np.asarray(omega_grid, dtype=float)
    src = channel if in_channel is None else in_channel
    c, s = math.cos(theta), math.sin(theta)
    fs = {(o, i): element_function(model, f"{channel}.{o}", f"{src}.{i}") for o in "XP" for i in "XP"}

    def g(omega):
        w = np.atleast_1d(omega)
        amp = c * c * fs["X", "X"](w) + c * s * (fs["X", "P"](w) + fs["P", "X"](w)) + s * s * fs["P", "P"](w)
        return np.abs(amp) ** 2

    label = f"{channel}.theta={theta:.6g}"
    return GainCurve(grid, g(grid), label, label, g)


def default_grid(kappa: float, points: int = 2001, span: float = 5.0) -> np.ndarray:
    """``omega' = 2 omega / kappa`` in [-span, span]."""
    return np.linspace(-span, span, points) * kappa / 2.0


def _refine_peak(curve: GainCurve, k: int) -> tuple[float, float]:
    w, g = curve.omega, curve.gain
    if curve.evaluate is None or k == 0 or k == len(w) - 1:
        return float(w[k]), float(g[k])
    res = minimize_scalar(lambda x: -curve.at(x), bounds=(w[k - 1], w[k + 1]), method="bounded", options={"xatol": 1e-12 * max(1.0, abs(w[-1] - w[0]))})
    if -res.fun > g[k]:
        return float(res.x), float(-res.fun)
    return float(w[k]), float(g[k])


def bandwidth(curve: GainCurve, rtol: float = 1e-6) -> float:
    """Full width at half maximum around the global peak of the curve."""
    w, g = curve.omega, curve.gain
    if len(w) < 2 or not np.all(np.isfinite(g)):
        raise BandwidthError("curve has no finite maximum")
    k = int(np.argmax(g))
    w_peak, g_peak = _refine_peak(curve, k)
    half = g_peak / 2.0
    span = float(w[-1] - w[0])

    def edge(direction: int) -> float:
        j = k
        while 0 <= j + direction < len(w) and g[j + direction] > half:
            j += direction
        if not 0 <= j + direction < len(w):
            raise BandwidthError("grid too narrow: half maximum never crossed")
        inner, outer = (w_peak if j == k else w[j]), w[j + direction]
        if curve.evaluate is None:
            gi, go = (g_peak if j == k else g[j]), g[j + direction]
            return float(inner + (half - gi) * (outer - inner) / (go - gi))
        return brentq(lambda x: curve.at(x) - half, inner, outer, xtol=rtol * 1e-3 * span, rtol=4 * np.finfo(float).eps)

    return float(edge(1) - edge(-1))


def stability_margin(model: StateSpaceModel) -> float:
    """Largest real part of the drift eigenvalues; negative means stable."""
    return max_real_eigenvalue(model)


@dataclass
class GBWRow:
    param: float
    G0: float
    bandwidth: float
    gbw: float
    stable: bool
    note: str = ""


def gbw_sweep(
    builder: Callable[[float], StateSpaceModel],
    values: Iterable[float],
    in_sel,
    out_sel,
    omega_grid: Callable[[float], np.ndarray] | np.ndarray,
) -> list[GBWRow]:
    """Gain at resonance, FWHM and sqrt(G0) x FWHM for each parameter value.

    Unstable or degenerate points produce a flagged row rather than an error.
    """
    rows = []
    for x in values:
        model = builder(x)
        margin = stability_margin(model)
        if margin >= 0:
            rows.append(GBWRow(float(x), math.nan, math.nan, math.nan, False, f"unstable (margin {margin:.3g})"))
            continue
        grid = omega_grid(x) if callable(omega_grid) else omega_grid
        curve = power_gain(model, in_sel, out_sel, grid)
        g0 = curve.at(0.0)
        try:
            bw = bandwidth(curve)
            note = ""
        except BandwidthError as exc:
            bw, note = math.nan, str(exc)
        rows.append(GBWRow(float(x), g0, bw, math.sqrt(g0) * bw, True, note))
    return rows


def gbw_csv(rows: Sequence[GBWRow], param_name: str = "param") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([param_name, "G0", "G0_db", "bandwidth_rad_s", "gbw_rad_s", "stable"])
    for r in rows:
        db = 10 * math.log10(r.G0) if r.G0 > 0 else float("-inf")
        w.writerow([repr(r.param), repr(r.G0), repr(db), repr(r.bandwidth), repr(r.gbw), int(r.stable)])
    return buf.getvalue()


def count_peaks(gain: np.ndarray, rel_prominence: float = 1e-9) -> int:
    """Number of interior local maxima, ignoring ripples below ``rel_prominence`` of the peak."""
    if gain.size < 3:
        return 0
    idx, _ = find_peaks(gain, prominence=rel_prominence * float(np.max(gain)))
    return len(idx)


def mode_splitting_threshold(
    builder: Callable[[float], StateSpaceModel],
    C: float,
    in_sel,
    out_sel,
    omega_grid: np.ndarray,
    eta_tol: float = 1e-6,
    scan_points: int = 200,
) -> tuple[float, float]:
    """Boundary between single-peaked and split gain curves as eta is lowered from 1.

    ``builder(eta)`` returns the model at fixed cooperativity C.  Returns the
    located eta* together with the closed form sqrt(1 - 1/C) for reporting.
    """
    if C <= 1:
        raise ValueError("no splitting regime for C <= 1")

    def peaks(eta):
        return count_peaks(power_gain(builder(eta), in_sel, out_sel, omega_grid).gain)

    etas = np.linspace(1.0, 0.0, scan_points + 1)[:-1]
    prev_eta, prev = etas[0], peaks(etas[0])
    hi = lo = None
    for eta in etas[1:]:
        n = peaks(eta)
        if prev == 1 and n >= 2:
            hi, lo = prev_eta, eta
            break
        prev_eta, prev = eta, n
    if hi is None:
        raise ValueError("gain curve never splits on the scanned eta range")
    while hi - lo > eta_tol:
        mid = 0.5 * (hi + lo)
        if peaks(mid) >= 2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (hi + lo), math.sqrt(1.0 - 1.0 / C)


@dataclass
class AmplifierReport:
    G0: float
    gain_curve: GainCurve
    bandwidth: float
    gbw: float
    reflection_curve: GainCurve
    reverse_gain_curve: GainCurve
    stability_margin: float


def amplifier_report(model: StateSpaceModel, in_sel, out_sel, omega_grid, reverse: tuple | None = None) -> AmplifierReport:
    """Gain, bandwidth, reflection and reverse gain of one amplification path.

    ``reverse`` is an ``(in, out)`` pair; by default the roles of the forward
    ports are swapped.
    """
    margin = stability_margin(model)
    curve = power_gain(model, in_sel, out_sel, omega_grid)
    g0 = curve.at(0.0)
    try:
        bw = bandwidth(curve)
    except BandwidthError:
        bw = math.nan
    refl = power_gain(model, in_sel, in_sel, omega_grid)
    rin, rout = reverse if reverse is not None else (out_sel, in_sel)
    rev = power_gain(model, rin, rout, omega_grid)
    return AmplifierReport(g0, curve, bw, math.sqrt(g0) * bw, refl, rev, margin)


def scattering_csv(result: ScatteringResult, model: StateSpaceModel, elements: Sequence[tuple[str, str]]) -> str:
    """CSV with ``omega_rad_s`` then ``re_S_<out>_<in>`` and ``im_S_<out>_<in>`` per element."""
    cols = [result.element(model, o, i) for o, i in elements]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["omega_rad_s"]
    for o, i in elements:
        header += [f"re_S_{o}_{i}", f"im_S_{o}_{i}"]
    w.writerow(header)
    for k, x in enumerate(result.omega_grid):
        row = [repr(float(x))]
        for c in cols:
            z = complex(c[k])
            row += [repr(z.real), repr(z.imag)]
        w.writerow(row)
    return buf.getvalue()


def model_of(system) -> StateSpaceModel:
    return system if isinstance(system, StateSpaceModel) else build_state_space(system)
