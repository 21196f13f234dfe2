"""Symmetrized noise spectra, added noise and squeezing of amplifier outputs.

Spectra are in quanta with vacuum = 1/2.  Each input channel (waveguide port,
internal loss, engineered reservoir) carries ``n + 1/2`` of symmetrized noise
in every component; output spectra follow from ``|S(w)|^2``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dynamics import StateSpaceModel, UnstableSystemError, build_state_space, max_real_eigenvalue
from .netmodel import quadrature_unitary
from .scattering import (
    BandwidthError,
    _check_same_basis,
    parse_selector,
    scattering_matrix,
    selector_index,
)


def _require_stable(model: StateSpaceModel) -> None:
    margin = max_real_eigenvalue(model)
    if margin >= 0:
        raise UnstableSystemError(margin)


def _row(model: StateSpaceModel, sel, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scattering row of one output component and the matching input noise levels."""
    s = parse_selector(sel) if isinstance(sel, str) else sel
    k = selector_index(model, s)
    mats = scattering_matrix(model, np.atleast_1d(omega))
    if s.basis == "quadrature":
        u = quadrature_unitary(len(model.channels))
        rows = np.einsum("j,wjk,kl->wl", u[k], mats, u.conj().T)
        levels = np.repeat(model.occupations + 0.5, 2)
    else:
        rows = mats[:, k, :]
        levels = np.r_[model.occupations, model.occupations] + 0.5
    return rows, levels


@dataclass
class Spectrum:
    omega: np.ndarray
    value: np.ndarray
    label: str = ""

    def to_csv(self, column: str = "spectrum_quanta") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega_rad_s", column])
        for x, v in zip(self.omega, self.value):
            w.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()


def output_spectrum(model: StateSpaceModel, out_sel, omega_grid) -> Spectrum:
    """Symmetrized output spectrum of one port component."""
    _require_stable(model)
    w = np.asarray(omega_grid, dtype=float)
    rows, levels = _row(model, out_sel, w)
    return Spectrum(w, np.sum(np.abs(rows) ** 2 * levels[None], axis=1), str(out_sel))


def intracavity_spectrum(model: StateSpaceModel, quadrature: int, omega) -> np.ndarray:
    """Symmetrized spectrum of intracavity quadrature ``q_k``; integrates to V_kk over dw/2pi."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    m = model.A_q.shape[0]
    chi = np.linalg.inv(-1j * w[:, None, None] * np.eye(m)[None] - model.A_q[None])
    row = chi[:, quadrature, :] @ model.B_q
    levels = np.repeat(model.occupations + 0.5, 2)
    return np.sum(np.abs(row) ** 2 * levels[None], axis=1)


def added_noise(model: StateSpaceModel, in_sel, out_sel, omega_grid) -> Spectrum:
    """Output noise from every input except the signal itself, referred to the input.

    ``n_add = sum_{j != signal} |S_oj|^2 (n_j + 1/2) / G``.  Grid points where
    the gain vanishes are dropped with a warning.
    """
    _require_stable(model)
    i, o = (parse_selector(x) if isinstance(x, str) else x for x in (in_sel, out_sel))
    _check_same_basis([i, o])
    w = np.asarray(omega_grid, dtype=float)
    rows, levels = _row(model, o, w)
    col = selector_index(model, i)
    gain = np.abs(rows[:, col]) ** 2
    mask = np.ones(rows.shape[1], dtype=bool)
    mask[col] = False
    noise = np.sum(np.abs(rows[:, mask]) ** 2 * levels[None, mask], axis=1)
    ok = gain > 1e-24 * max(1.0, float(np.max(gain)))  # |S| below 1e-12 is rounding
    if not np.all(ok):
        warnings.warn(f"{int(np.sum(~ok))} zero-gain frequencies omitted from added noise", RuntimeWarning, stacklevel=2)
    return Spectrum(w[ok], noise[ok] / gain[ok], f"{i}->{o}")


def _width_where(f, level: float, w0: float, scale: float, direction: int) -> float:
    """First w beyond w0 (in ``direction``) where f crosses ``level``."""
    step = scale * 1e-3
    a, b = w0, w0 + direction * step
    fa = f(a) - level
    while (f(b) - level) * fa > 0:
        step *= 1.5
        a, b = b, b + direction * step
        if abs(b - w0) > 1e6 * scale:
            raise BandwidthError("level never crossed")
    lo, hi = sorted((a, b))
    return brentq(lambda x: f(x) - level, lo, hi, xtol=1e-14 * scale, rtol=4 * np.finfo(float).eps)


def squeezing_bandwidth(variance, kappa: float, definition: str = "3db") -> float:
    """Width of the squeezing dip around w = 0 of a variance function ``V(w)``.

    ``"3db"``: full width where the variance has doubled from its minimum at
    w = 0 (squeezing reduced by 3 dB).  ``"fwhm"``: full width at half
    maximum of ``1/2 - V(w)``.
    """
    v0 = variance(0.0)
    if v0 >= 0.5:
        return 0.0
    if definition == "3db":
        level = 2.0 * v0
    elif definition == "fwhm":
        level = 0.5 - (0.5 - v0) / 2.0
    else:
        raise ValueError(f"unknown squeezing bandwidth definition {definition!r}")
    return _width_where(variance, level, 0.0, kappa, 1) - _width_where(variance, level, 0.0, kappa, -1)


def dpa_for_gain(G: float, kappa: float) -> float:
    """Single-mode pump strength lam giving amplified-quadrature gain G on resonance.

    Amplitude gain of the anti-squeezed quadrature is ``(k/2 + 2 lam)/(k/2 - 2 lam)``.
    """
    r = math.sqrt(G)
    return kappa / 4.0 * (r - 1.0) / (r + 1.0)


def rotated_quadrature_spectrum(model: StateSpaceModel, channel: str, theta: float, omega) -> np.ndarray:
    """Output spectrum of ``cos(theta) X + sin(theta) P`` of one channel."""
    _require_stable(model)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    rx, levels = _row(model, f"{channel}.X", w)
    rp, _ = _row(model, f"{channel}.P", w)
    row = math.cos(theta) * rx + math.sin(theta) * rp
    return np.sum(np.abs(row) ** 2 * levels[None], axis=1)


def variance_function(model: StateSpaceModel, out_sel):
    """Scalar ``w -> S_out(w)`` for root finding."""

    def f(w):
        return float(output_spectrum(model, out_sel, np.array([w])).value[0])

    return f


def dpa_squeezed_variance(lam: float, kappa: float):
    """Output variance function of the squeezed quadrature of a single-mode DPA, vacuum input.

    ``lam (a^dag^2 + a^2) = lam (X^2 - P^2)`` squeezes along ``(X +- P)/sqrt2``.
    """
    from .systems import degenerate_amplifier

    model = build_state_space(degenerate_amplifier(lam, kappa))
    theta = min((math.pi / 4, -math.pi / 4), key=lambda t: rotated_quadrature_spectrum(model, "a", t, 0.0)[0])

    def f(w):
        return float(rotated_quadrature_spectrum(model, "a", theta, w)[0])

    return f


@dataclass
class SqueezingResult:
    curve: np.ndarray  # (omega, variance) pairs
    omega: np.ndarray
    variance0: float
    bandwidth: float
    gain: float
    dpa_bandwidth: float
    ratio: float
    definition: str


def squeezing_analysis(model: StateSpaceModel, omega_grid, kappa: float, squeezed: str = "d2.X", amplified: tuple[str, str] = ("d1.X", "d2.P"), definition: str = "3db") -> SqueezingResult:
    """Squeezing spectrum of the quadrature orthogonal to the amplified one.

    The bandwidth is compared with a single-mode degenerate amplifier whose
    resonant quadrature gain equals this model's transmission gain.
    """
    _require_stable(model)
    w = np.asarray(omega_grid, dtype=float)
    spec = output_spectrum(model, squeezed, w)
    var = variance_function(model, squeezed)
    bw = squeezing_bandwidth(var, kappa, definition)
    rows, _ = _row(model, amplified[1], np.array([0.0]))
    gain = float(np.abs(rows[0, selector_index(model, amplified[0])]) ** 2)
    if gain > 1:
        dpa_var = dpa_squeezed_variance(dpa_for_gain(gain, kappa), kappa)
        dpa_bw = squeezing_bandwidth(dpa_var, kappa, definition)
    else:
        dpa_bw = math.nan
    ratio = bw / dpa_bw if dpa_bw and not math.isnan(dpa_bw) else math.nan
    return SqueezingResult(np.c_[w, spec.value], w, var(0.0), bw, gain, dpa_bw, ratio, definition)


@dataclass
class NoiseReport:
    spectrum: Spectrum
    n_add_curve: Spectrum | None
    squeezing: SqueezingResult | None = None

    @property
    def squeezing_bandwidth(self) -> float:
        return self.squeezing.bandwidth if self.squeezing else math.nan


def noise_report(model: StateSpaceModel, in_sel, out_sel, omega_grid) -> NoiseReport:
    spec = output_spectrum(model, out_sel, omega_grid)
    nadd = added_noise(model, in_sel, out_sel, omega_grid) if in_sel else None
    return NoiseReport(spec, nadd)

