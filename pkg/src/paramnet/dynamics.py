"""Langevin state-space models, Lindblad terms, steady states and time evolution.

Conventions (fixed once, used everywhere):

* doubled basis ``v = (a_1..a_N, a_1^dag..a_N^dag)``; quadratures
  ``X = (a + a^dag)/sqrt2``, ``P = -i(a - a^dag)/sqrt2``; vacuum variance 1/2.
* every damping channel (port, internal loss, engineered jump) is a row
  ``c`` with ``dv/dt = A v + B v_in`` and ``v_out = C v - v_in`` where
  ``B = Sigma_z C^dag Sigma_z`` and ``A = -i Sigma_z H - B C / 2``.
  An empty cavity then reflects with R(0) = +1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .frames import (
    EffectiveSystem,
    RotatingTerm,
    default_epsilon,
    rotating_frame_terms,
)
from .netmodel import (
    Diagnostic,
    JumpSpec,
    NetworkError,
    NetworkSpec,
    adjoint,
    bilinear_hamiltonian,
    linear_operator,
    quadrature_unitary,
    rotating_hamiltonian,
    sigma_z,
    swap_blocks,
    symplectic_form,
)


class UnstableSystemError(ArithmeticError):
    """Drift matrix is not Hurwitz."""

    def __init__(self, margin: float):
        super().__init__(f"unstable system: max Re eigenvalue of drift = {margin:.6g}")
        self.margin = margin


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Channel:
    label: str
    kind: str  # "port" | "internal" | "jump"
    mode: str | None
    occupation: float
    row: np.ndarray  # doubled coefficient vector c of the channel's annihilation component


@dataclass
class StateSpaceModel:
    basis: tuple[str, ...]
    A: np.ndarray
    A_q: np.ndarray
    B: np.ndarray
    C: np.ndarray
    B_q: np.ndarray
    C_q: np.ndarray
    D: np.ndarray
    channels: tuple[Channel, ...]
    system: EffectiveSystem | None = None

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def port_index(self) -> dict[str, int]:
        return {c.label: k for k, c in enumerate(self.channels)}

    @property
    def ports(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.channels if c.kind == "port")

    @property
    def occupations(self) -> np.ndarray:
        return np.array([c.occupation for c in self.channels])


def _channel_matrix(rows: Sequence[np.ndarray], n: int) -> np.ndarray:
    p = len(rows)
    c = np.zeros((2 * p, 2 * n), dtype=complex)
    for k, r in enumerate(rows):
        c[k] = r
        c[p + k] = adjoint(r)
    return c


def jump_channel_label(k: int) -> str:
    return f"jump:{k}"


def internal_channel_label(mode: str) -> str:
    return f"int:{mode}"


def system_channels(system: EffectiveSystem) -> list[Channel]:
    n = system.n
    out = []
    for i, m in enumerate(system.modes):
        if m.kappa_port > 0:
            row = np.zeros(2 * n, dtype=complex)
            row[i] = math.sqrt(m.kappa_port)
            out.append(Channel(m.label, "port", m.label, m.n_thermal_port, row))
    for i, m in enumerate(system.modes):
        if m.kappa_int > 0:
            row = np.zeros(2 * n, dtype=complex)
            row[i] = math.sqrt(m.kappa_int)
            out.append(Channel(internal_channel_label(m.label), "internal", m.label, m.n_thermal_int, row))
    for k, j in enumerate(system.jumps):
        if j.rate > 0:
            row = math.sqrt(j.rate) * linear_operator(j.coefficients, system.basis)
            out.append(Channel(jump_channel_label(k), "jump", None, j.n_thermal, row))
    return out


def build_state_space(system: EffectiveSystem) -> StateSpaceModel:
    n = system.n
    channels = system_channels(system)
    p = len(channels)
    c = _channel_matrix([ch.row for ch in channels], n)
    szn = sigma_z(n)
    b = szn @ c.conj().T @ sigma_z(p) if p else np.zeros((2 * n, 0), dtype=complex)
    a = -1j * szn @ system.H - 0.5 * b @ c
    un, up = quadrature_unitary(n), quadrature_unitary(p)
    a_q = _real(un @ a @ un.conj().T, "drift")
    b_q = _real(un @ b @ up.conj().T, "input") if p else np.zeros((2 * n, 0))
    c_q = _real(up @ c @ un.conj().T, "output") if p else np.zeros((0, 2 * n))
    noise = np.repeat([ch.occupation + 0.5 for ch in channels], 2)
    d = b_q @ np.diag(noise) @ b_q.T if p else np.zeros((2 * n, 2 * n))
    d = 0.5 * (d + d.T)
    return StateSpaceModel(system.basis, a, a_q, b, c, b_q, c_q, d, tuple(channels), system)


def _real(m: np.ndarray, what: str) -> np.ndarray:
    if m.size and np.max(np.abs(m.imag)) > 1e-10 * max(1.0, float(np.max(np.abs(m)))):
        raise AssertionError(f"{what} matrix is not real in the quadrature basis")
    return m.real.copy()


def to_quadrature(m: np.ndarray) -> np.ndarray:
    u = quadrature_unitary(m.shape[0] // 2)
    return u @ m @ u.conj().T


def to_doubled(m_q: np.ndarray) -> np.ndarray:
    u = quadrature_unitary(m_q.shape[0] // 2)
    return u.conj().T @ m_q @ u


# ---------------------------------------------------------------------------
# Lindblad terms, computed directly from operator algebra in quadrature space.


def _quadrature_coefficients(xi: np.ndarray) -> np.ndarray:
    """c with x = c . q, given x = xi . v."""
    return np.conj(quadrature_unitary(len(xi) // 2)) @ xi


def dissipator_piece(x: np.ndarray, y: np.ndarray, rate: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Moment increments of ``rate (x rho y^dag - 1/2 {y^dag x, rho})``.

    Returns (drift, diffusion) in the quadrature basis; both complex for
    x != y, real once a piece is added to its Hermitian partner.
    """
    n = len(x) // 2
    om = symplectic_form(n)
    c, d = _quadrature_coefficients(x), _quadrature_coefficients(y)
    oc, od = om @ c, om @ np.conj(d)
    drift = 0.5j * (np.outer(oc, np.conj(d)) - np.outer(od, c))
    diff = np.outer(od, oc)
    diff = 0.5 * (diff + diff.T)
    return rate * drift, rate * diff


def lindblad_contribution(jump: JumpSpec, basis: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Drift (doubled basis) and diffusion (quadrature basis) increments of ``rate L[z]``.

    A thermal reservoir with occupation n adds ``rate n (L[z] + L[z^dag])``.
    """
    z = linear_operator(jump.coefficients, basis)
    drift_q, diff = dissipator_piece(z, z, jump.rate)
    if jump.n_thermal:
        zd = adjoint(z)
        for x in (z, zd):
            dq, dd = dissipator_piece(x, x, jump.rate * jump.n_thermal)
            drift_q = drift_q + dq
            diff = diff + dd
    return to_doubled(drift_q.real), diff.real


# ---------------------------------------------------------------------------
# adiabatic elimination


@dataclass
class EliminationResult:
    Lambda: float
    Gamma: float
    reduced: EffectiveSystem
    jump: JumpSpec | None
    coupling: float
    diagnostics: list[Diagnostic] = field(default_factory=list)


def elimination_rates(delta: float, lam: float, kappa: float) -> tuple[float, float]:
    den = delta * delta + kappa * kappa / 4.0
    return delta * lam * lam / den, kappa * lam * lam / den


def adiabatic_eliminate(system: EffectiveSystem, mode: str) -> EliminationResult:
    """Remove a strongly damped auxiliary mode.

    The mode must couple to the rest only through ``c^dag L + L^dag c`` with L
    linear in the remaining modes.  Writing ``L = lam z`` (largest coefficient
    of z equal to one), the reduced system gains the jump ``Gamma L[z]`` and the
    coherent term ``-Lambda z^dag z``.  The sign of the coherent term follows
    from the Heisenberg equations for ``H = Delta c^dag c + ...``.
    """
    basis = list(system.basis)
    if mode not in basis:
        raise NetworkError(f"mode {mode!r} not found")
    c = basis.index(mode)
    n = len(basis)
    m = system.modes[c]
    if m.role_hint in ("signal", "idler"):
        raise NetworkError(f"mode {mode!r} is declared as a {m.role_hint} port; elimination is ambiguous")
    for j in system.jumps:
        if mode in j.coefficients and any(j.coefficients[mode]):
            raise NetworkError(f"mode {mode!r} appears in an engineered jump operator")
    h = system.H
    if abs(h[c, n + c]) > 1e-14 * max(1.0, np.max(np.abs(h))):
        raise NetworkError(f"mode {mode!r} carries a self-squeezing term; cannot eliminate")
    kappa = m.kappa
    if kappa <= 0:
        raise NetworkError(f"mode {mode!r} is undamped")
    delta = float(h[c, c].real)
    keep = [i for i in range(n) if i != c]
    u = h[c, keep]
    v = h[c, [n + i for i in keep]]
    lam = float(max(np.max(np.abs(u), initial=0.0), np.max(np.abs(v), initial=0.0)))

    idx = keep + [n + i for i in keep]
    h_red = h[np.ix_(idx, idx)]
    modes = tuple(system.modes[i] for i in keep)
    labels = [system.modes[i].label for i in keep]
    diags = []
    if lam > 0 and kappa < 10 * lam:
        diags.append(Diagnostic("warning", f"kappa of {mode!r} ({kappa:g}) < 10 x coupling ({lam:g}); elimination is rough"))
    if lam == 0:
        reduced = EffectiveSystem(modes, h_red, system.jumps)
        return EliminationResult(0.0, 0.0, reduced, None, 0.0, diags)

    Lambda, Gamma = elimination_rates(delta, lam, kappa)
    coeffs = {labels[k]: (complex(u[k] / lam), complex(v[k] / lam)) for k in range(len(keep)) if u[k] or v[k]}
    n_c = (m.kappa_port * m.n_thermal_port + m.kappa_int * m.n_thermal_int) / kappa
    jump = JumpSpec(coeffs, Gamma, n_c)
    z = linear_operator(coeffs, labels)
    h_red = h_red + bilinear_hamiltonian(adjoint(z), z, -Lambda / 2.0)
    reduced = EffectiveSystem(modes, h_red, tuple(system.jumps) + (jump,), diagnostics=diags)
    return EliminationResult(Lambda, Gamma, reduced, jump, lam, diags)


# ---------------------------------------------------------------------------
# stability and steady state


def max_real_eigenvalue(model: StateSpaceModel) -> float:
    if model.A_q.size == 0:
        return -math.inf
    return float(np.max(np.linalg.eigvals(model.A_q).real))


def lyapunov_solve(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve ``a V + V a^T + d = 0`` by a Kronecker-product linear solve."""
    m = a.shape[0]
    eye = np.eye(m)
    k = np.kron(a, eye) + np.kron(eye, a)
    v = np.linalg.solve(k, -d.reshape(-1)).reshape(m, m)
    return 0.5 * (v + v.T)


def steady_covariance(model: StateSpaceModel) -> np.ndarray:
    margin = max_real_eigenvalue(model)
    if margin >= 0:
        raise UnstableSystemError(margin)
    return lyapunov_solve(model.A_q, model.D)


# ---------------------------------------------------------------------------
# time domain


@dataclass
class Trajectory:
    basis: tuple[str, ...]
    t: np.ndarray
    means: np.ndarray  # (T, N) complex <a_k>
    covariances: np.ndarray  # (T, 2N, 2N) quadrature covariance

    def to_csv(self) -> str:
        n = len(self.basis)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["t"]
        for lab in self.basis:
            header += [f"re<{lab}>", f"im<{lab}>"]
        iu = np.triu_indices(2 * n)
        header += [f"V_{i + 1}{j + 1}" if 2 * n < 10 else f"V_{i + 1}_{j + 1}" for i, j in zip(*iu)]
        w.writerow(header)
        for k, t in enumerate(self.t):
            row = [repr(float(t))]
            for a in self.means[k]:
                row += [repr(float(a.real)), repr(float(a.imag))]
            row += [repr(float(x)) for x in self.covariances[k][iu]]
            w.writerow(row)
        return buf.getvalue()


class _Generator:
    """A(t) for an interaction-frame network with a fixed set of rotating terms."""

    def __init__(self, basis, terms: Sequence[RotatingTerm], static_h: np.ndarray, damping: np.ndarray, d: np.ndarray):
        n = len(basis)
        self.n = n
        self.sz = sigma_z(n)
        self.u = quadrature_unitary(n)
        sx = swap_blocks(n)
        self.parts = []
        for t in terms:
            x, y = t.operator(basis)
            w = np.outer(sx @ x, y)
            p = w + sx @ w.T @ sx  # coefficient of amp
            q = w.conj().T + sx @ w.conj() @ sx  # coefficient of conj(amp)
            self.parts.append((t.amplitude, t.detuning, p, q))
        self.static_h = static_h
        self.damping = damping
        self.d = d

    def drift(self, t: float) -> np.ndarray:
        h = self.static_h.copy()
        for amp, det, p, q in self.parts:
            c = amp * np.exp(-1j * det * t)
            h = h + c * p + np.conj(c) * q
        return -1j * self.sz @ h - self.damping

    def quadrature(self, a: np.ndarray) -> np.ndarray:
        return (self.u @ a @ self.u.conj().T).real


def _time_scale(spec: NetworkSpec) -> float:
    freqs = [abs(m.omega) for m in spec.modes] + [abs(d.omega_d) for d in spec.drives]
    return max(freqs, default=0.0)


def integrate_time_domain(
    spec: NetworkSpec,
    t_span: tuple[float, float],
    dt: float,
    include_cr: bool = True,
    initial_amplitudes: Mapping[str, complex] | None = None,
    initial_covariance: np.ndarray | None = None,
    epsilon_res: float | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step RK4 for first moments and covariance in the interaction frame.

    With ``include_cr`` the full modulation (every rotating term, resonant or
    not) drives the system; otherwise only the terms kept by the rotating-wave
    approximation.
    """
    t0, t1 = t_span
    if dt <= 0 or t1 <= t0:
        raise ValueError("need dt > 0 and t_span[1] > t_span[0]")
    top = _time_scale(spec)
    if top > 0 and dt > 1.0 / (20.0 * top):
        raise IntegrationError(f"step size {dt:g} does not resolve the fastest frequency {top:g} (need dt <= {1 / (20 * top):g})")

    basis = spec.labels
    n = len(basis)
    if spec.frame == "lab":
        terms = rotating_frame_terms(spec)
        if not include_cr:
            eps = default_epsilon(spec) if epsilon_res is None else epsilon_res
            terms = [t for t in terms if abs(t.detuning) <= eps]
        static_h = np.zeros((2 * n, 2 * n), dtype=complex)
    else:
        terms = []
        static_h = rotating_hamiltonian(spec)
    system = EffectiveSystem(spec.modes, np.zeros((2 * n, 2 * n)), spec.jumps)
    model = build_state_space(system)
    damping = 0.5 * model.B @ model.C
    gen = _Generator(basis, terms, static_h, damping, model.D)

    mean = np.zeros(2 * n, dtype=complex)
    for label, alpha in (initial_amplitudes or {}).items():
        i = basis.index(label)
        mean[i] = alpha
        mean[n + i] = np.conj(alpha)
    cov = 0.5 * np.eye(2 * n) if initial_covariance is None else np.array(initial_covariance, dtype=float)

    d = model.D

    def rhs(t, m, v):
        a = gen.drift(t)
        aq = gen.quadrature(a)
        return a @ m, aq @ v + v @ aq.T + d

    steps = int(round((t1 - t0) / dt))
    ts, ms, vs = [t0], [mean[:n].copy()], [cov.copy()]
    t = t0
    for k in range(1, steps + 1):
        k1m, k1v = rhs(t, mean, cov)
        k2m, k2v = rhs(t + dt / 2, mean + dt / 2 * k1m, cov + dt / 2 * k1v)
        k3m, k3v = rhs(t + dt / 2, mean + dt / 2 * k2m, cov + dt / 2 * k2v)
        k4m, k4v = rhs(t + dt, mean + dt * k3m, cov + dt * k3v)
        mean = mean + dt / 6 * (k1m + 2 * k2m + 2 * k3m + k4m)
        cov = cov + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t = t0 + k * dt
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise IntegrationError(f"non-finite state at t = {t:.6g}")
        if k % record_every == 0 or k == steps:
            ts.append(t)
            ms.append(mean[:n].copy())
            vs.append(0.5 * (cov + cov.T))
    return Trajectory(tuple(basis), np.array(ts), np.array(ms), np.array(vs))


def symplectic_propagator(model: StateSpaceModel, t: float) -> np.ndarray:
    from scipy.linalg import expm

    return expm(model.A_q * t)
