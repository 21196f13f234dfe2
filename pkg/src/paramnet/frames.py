"""Interaction-frame expansion of driven networks and rotating-wave reduction.

Every quadratic process is written as ``amplitude * O * exp(-i detuning t) + h.c.``
with ``O = a b^dag`` (hopping) or ``O = a b`` (squeezing).  Terms with
``|detuning| <= epsilon_res`` survive the rotating-wave approximation; the
rest are kept in ``dropped_terms`` so the time-domain integrator can put them
back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .netmodel import (
    Diagnostic,
    JumpSpec,
    Mode,
    NetworkError,
    NetworkSpec,
    ParametricDrive,
    annihilation,
    bilinear_hamiltonian,
    check_hamiltonian,
    creation,
    detuning_hamiltonian,
    quadrature_unitary,
    rotating_hamiltonian,
)

DEFAULT_RHO_MIN = 10.0
DEFAULT_EPS_FRACTION = 1e-9


class FrameConflictError(NetworkError):
    """Kept near-resonant terms demand incompatible mode rotation frequencies."""


@dataclass(frozen=True)
class RotatingTerm:
    kind: str  # "hopping" | "squeezing"
    modes: tuple[str, str]
    amplitude: complex
    detuning: float
    source: str = ""

    def operator(self, basis: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        basis = list(basis)
        n = len(basis)
        i, j = basis.index(self.modes[0]), basis.index(self.modes[1])
        if self.kind == "hopping":
            return annihilation(i, n), creation(j, n)
        return annihilation(i, n), annihilation(j, n)

    def hamiltonian(self, basis: Sequence[str], t: float = 0.0) -> np.ndarray:
        x, y = self.operator(basis)
        return bilinear_hamiltonian(x, y, self.amplitude * np.exp(-1j * self.detuning * t))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "modes": list(self.modes),
            "amplitude": [self.amplitude.real, self.amplitude.imag],
            "detuning": self.detuning,
            "source": self.source,
        }


@dataclass
class EffectiveSystem:
    """Time-independent quadratic generator in the doubled basis.

    ``H`` is 2N x 2N with ``H_op = 1/2 v^dag H v``.  Damping rates and bath
    occupations live on ``modes``; engineered dissipation on ``jumps``.
    """

    modes: tuple[Mode, ...]
    H: np.ndarray
    jumps: tuple[JumpSpec, ...] = ()
    kept_terms: tuple[RotatingTerm, ...] = ()
    dropped_terms: tuple[RotatingTerm, ...] = ()
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        check_hamiltonian(self.H)

    @property
    def basis(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def n(self) -> int:
        return len(self.modes)

    def index(self, label: str) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise NetworkError(f"unresolved mode label {label!r}") from None

    @property
    def kappas(self) -> np.ndarray:
        return np.array([m.kappa for m in self.modes])


def _drive_terms(d: ParametricDrive, omega: dict, k: int) -> list[RotatingTerm]:
    if d.lam == 0:
        return []
    a, b = d.modes
    dif = omega[a] - omega[b]
    tot = omega[a] + omega[b]
    up = d.lam * np.exp(1j * d.phi)
    down = d.lam * np.exp(-1j * d.phi)
    src = f"drives[{k}]"
    return [
        RotatingTerm("hopping", (a, b), up, dif - d.omega_d, src + ":+"),
        RotatingTerm("hopping", (a, b), down, dif + d.omega_d, src + ":-"),
        RotatingTerm("squeezing", (a, b), up, tot - d.omega_d, src + ":+"),
        RotatingTerm("squeezing", (a, b), down, tot + d.omega_d, src + ":-"),
    ]


def _static_terms(spec: NetworkSpec, omega: dict) -> list[RotatingTerm]:
    out = []
    for k, c in enumerate(spec.static_couplings):
        a, b = c.modes
        dif, tot = omega[a] - omega[b], omega[a] + omega[b]
        g = complex(c.amplitude)
        src = f"static_couplings[{k}]"
        if c.kind == "hopping":
            out.append(RotatingTerm("hopping", (a, b), g, dif, src))
        elif c.kind == "squeezing":
            out.append(RotatingTerm("squeezing", (a, b), g.conjugate(), tot, src))
        elif c.kind == "qnd_XX":
            out.append(RotatingTerm("hopping", (a, b), complex(g.real / 2), dif, src))
            out.append(RotatingTerm("squeezing", (a, b), complex(g.real / 2), tot, src))
        elif c.kind == "qnd_PP":
            out.append(RotatingTerm("hopping", (a, b), complex(g.real / 2), dif, src))
            out.append(RotatingTerm("squeezing", (a, b), complex(-g.real / 2), tot, src))
    return out


def rotating_frame_terms(spec: NetworkSpec) -> list[RotatingTerm]:
    """Expand drives (and lab-frame static couplings) in the frame of the free Hamiltonian.

    Each drive contributes four terms: both tones of the cosine times the
    difference- and sum-frequency processes.
    """
    if spec.frame != "lab":
        raise NetworkError("rotating_frame_terms requires a lab-frame network")
    omega = {m.label: m.omega for m in spec.modes}
    terms: list[RotatingTerm] = []
    for k, d in enumerate(spec.drives):
        for label in d.modes:
            if label not in omega:
                raise NetworkError(f"drives[{k}]: drive on unknown mode {label!r}")
        terms.extend(_drive_terms(d, omega, k))
    terms.extend(_static_terms(spec, omega))
    return terms


def default_epsilon(spec_or_modes) -> float:
    modes = spec_or_modes.modes if hasattr(spec_or_modes, "modes") else spec_or_modes
    top = max((abs(m.omega) for m in modes), default=0.0)
    return DEFAULT_EPS_FRACTION * top


def _frame_rotation(kept: list[RotatingTerm], basis: list[str]) -> np.ndarray:
    """Mode rotation rates theta removing residual detunings of kept terms."""
    n = len(basis)
    if not kept:
        return np.zeros(n)
    rows, rhs = [], []
    for t in kept:
        row = np.zeros(n)
        i, j = basis.index(t.modes[0]), basis.index(t.modes[1])
        row[i] += 1.0
        row[j] += -1.0 if t.kind == "hopping" else 1.0
        rows.append(row)
        rhs.append(-t.detuning)
    m, r = np.array(rows), np.array(rhs)
    theta, *_ = np.linalg.lstsq(m, r, rcond=None)
    resid = m @ theta - r
    scale = max(1.0, float(np.max(np.abs(r))))
    bad = [t for t, e in zip(kept, resid) if abs(e) > 1e-9 * scale]
    if bad:
        names = ", ".join(f"{t.kind}{t.modes}[{t.source}] detuning={t.detuning:g}" for t in bad)
        raise FrameConflictError(f"inconsistent frame: kept terms {names} demand contradictory mode rotations")
    return theta


def rwa_reduce(
    terms: Sequence[RotatingTerm],
    spec: NetworkSpec,
    epsilon_res: float | None = None,
    rho_min: float = DEFAULT_RHO_MIN,
) -> EffectiveSystem:
    """Keep near-resonant terms, fold their residual detunings into mode detunings."""
    if epsilon_res is None:
        epsilon_res = default_epsilon(spec)
    if epsilon_res < 0:
        raise ValueError("epsilon_res must be >= 0")
    if rho_min <= 1:
        raise ValueError("rho_min must exceed 1")
    basis = list(spec.labels)
    kept = [t for t in terms if abs(t.detuning) <= epsilon_res]
    dropped = [t for t in terms if abs(t.detuning) > epsilon_res]
    theta = _frame_rotation(kept, basis)
    h = detuning_hamiltonian(-theta)
    for t in kept:
        h = h + t.hamiltonian(basis)
    diags = []
    for t in dropped:
        if abs(t.amplitude) > 0 and abs(t.detuning) < rho_min * abs(t.amplitude):
            diags.append(
                Diagnostic(
                    "warning",
                    f"RWA questionable: dropped {t.kind}{t.modes} [{t.source}] has |detuning|={abs(t.detuning):g}"
                    f" < {rho_min:g} x |amplitude|={abs(t.amplitude):g}",
                )
            )
    return EffectiveSystem(spec.modes, h, spec.jumps, tuple(kept), tuple(dropped), diags)


def compile_effective(spec: NetworkSpec, epsilon_res: float | None = None, rho_min: float = DEFAULT_RHO_MIN) -> EffectiveSystem:
    """Compile a network into its time-independent effective system."""
    if spec.frame == "rotating":
        if spec.drives:
            raise NetworkError("parametric drives require frame 'lab'")
        return EffectiveSystem(spec.modes, rotating_hamiltonian(spec), spec.jumps)
    return rwa_reduce(rotating_frame_terms(spec), spec, epsilon_res, rho_min)


def stiff_pump_linearize(
    g3: float, pump_amplitude: float, pump_freq: float, pump_phase: float, modes: tuple[str, str] = ("a", "b")
) -> ParametricDrive:
    """Three-wave mixing with a classical pump as a parametric drive.

    ``g3 c (cos(w_p t + phi))`` matched to ``2 lam cos(w_d t + phi)`` gives lam = g3 c / 2.
    """
    if pump_amplitude < 0:
        raise ValueError("pump_amplitude must be >= 0")
    return ParametricDrive(modes, g3 * pump_amplitude / 2.0, pump_freq, pump_phase)


def quadrature_transform(system: EffectiveSystem | np.ndarray) -> np.ndarray:
    """Real symmetric H_q with ``H_op = 1/2 q^T H_q q`` for q = (X_1, P_1, ...)."""
    h = system.H if isinstance(system, EffectiveSystem) else np.asarray(system)
    u = quadrature_unitary(h.shape[0] // 2)
    hq = u @ h @ u.conj().T
    if np.max(np.abs(hq.imag)) > 1e-10 * max(1.0, np.max(np.abs(hq))):
        raise AssertionError("quadrature Hamiltonian is not real")
    return hq.real
