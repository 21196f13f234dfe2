"""Nonreciprocity by balancing coherent and dissipative couplings, and directional amplifiers.

Two subsystems sharing a coherent interaction ``lam/2 A B + h.c.`` and a
common reservoir ``Gamma L[A + eta e^{i phi} B^dag]`` decouple in one
direction when ``lam = eta Gamma`` and ``phi = -pi/2`` (A drives B) or
``phi = +pi/2`` (B drives A).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from .dynamics import StateSpaceModel, UnstableSystemError, build_state_space, max_real_eigenvalue
from .frames import EffectiveSystem, compile_effective
from .netmodel import (
    JumpSpec,
    Mode,
    NetworkSpec,
    StaticCoupling,
    adjoint,
    bilinear_hamiltonian,
    linear_operator,
)
from .scattering import element_function

ISOLATION_CAP_DB = 300.0
REVERSE_FLOOR = 1e-30

Coefficients = Mapping[str, tuple[complex, complex]]


@dataclass(frozen=True)
class BalanceSpec:
    """Coherent + dissipative pair of processes between systems A and B.

    ``A`` and ``B`` are linear operators given as ``{mode: (u, v)}`` maps; the
    defaults are the annihilation operators of modes ``a`` and ``b``.
    """

    eta: float
    phi: float
    Gamma: float
    lam: float
    A: Coefficients = field(default_factory=lambda: {"a": (1.0, 0.0)})
    B: Coefficients = field(default_factory=lambda: {"b": (1.0, 0.0)})
    modes: tuple[Mode, ...] = (Mode("a", 0.0, 1.0), Mode("b", 0.0, 1.0))
    tol: float = 1e-12

    @property
    def coherent(self) -> StaticCoupling | None:
        """The coherent process as a static coupling when A and B are single-mode annihilators."""
        if len(self.A) == 1 and len(self.B) == 1 and list(self.A.values())[0] == (1.0, 0.0) and list(self.B.values())[0] == (1.0, 0.0):
            return StaticCoupling("squeezing", (next(iter(self.A)), next(iter(self.B))), self.lam / 2.0)
        return None

    @property
    def jump_template(self) -> JumpSpec:
        basis = [m.label for m in self.modes]
        z = linear_operator(self.A, basis) + self.eta * np.exp(1j * self.phi) * adjoint(linear_operator(self.B, basis))
        n = len(basis)
        coeffs = {lab: (complex(z[i]), complex(z[n + i])) for i, lab in enumerate(basis) if z[i] or z[n + i]}
        return JumpSpec(coeffs, self.Gamma)

    @property
    def balanced(self) -> bool:
        scale = self.tol * max(abs(self.Gamma), 1.0)
        return abs(self.lam - self.eta * self.Gamma) <= scale and abs(abs(self.phi) - math.pi / 2) <= self.tol

    @property
    def direction(self) -> str:
        if not self.balanced:
            return "none"
        return "A->B" if self.phi < 0 else "B->A"


@dataclass
class BalancedSystem:
    system: EffectiveSystem
    direction: str
    a_modes: tuple[str, ...]
    b_modes: tuple[str, ...]


def build_balanced_system(balance: BalanceSpec) -> BalancedSystem:
    basis = [m.label for m in balance.modes]
    a = linear_operator(balance.A, basis)
    b = linear_operator(balance.B, basis)
    h = bilinear_hamiltonian(a, b, balance.lam / 2.0)
    system = EffectiveSystem(tuple(balance.modes), h, (balance.jump_template,))
    return BalancedSystem(system, balance.direction, tuple(balance.A), tuple(balance.B))


def _quadrature_indices(basis: Sequence[str], labels: Sequence[str]) -> list[int]:
    out = []
    for lab in labels:
        i = list(basis).index(lab)
        out += [2 * i, 2 * i + 1]
    return out


def coupling_blocks(a_q: np.ndarray, basis: Sequence[str], a_modes: Sequence[str], b_modes: Sequence[str]) -> tuple[float, float]:
    """Largest drift entries (A <- B, B <- A) between the two subsystems."""
    ia, ib = _quadrature_indices(basis, a_modes), _quadrature_indices(basis, b_modes)
    a_from_b = float(np.max(np.abs(a_q[np.ix_(ia, ib)])))
    b_from_a = float(np.max(np.abs(a_q[np.ix_(ib, ia)])))
    return a_from_b, b_from_a


def triangularity(a_q: np.ndarray, basis: Sequence[str], a_modes: Sequence[str], b_modes: Sequence[str], tol: float = 1e-12) -> str:
    """"A->B" if A evolves independently of B, "B->A" for the converse, else "none"."""
    a_from_b, b_from_a = coupling_blocks(a_q, basis, a_modes, b_modes)
    scale = tol * max(1.0, float(np.max(np.abs(a_q))))
    if a_from_b <= scale and b_from_a > scale:
        return "A->B"
    if b_from_a <= scale and a_from_b > scale:
        return "B->A"
    if a_from_b <= scale and b_from_a <= scale:
        return "decoupled"
    return "none"


def build_directional_bogoliubov_amp(G: float | None, Gamma: float, kappa_c: float, kappa: float) -> NetworkSpec:
    """QND gain process ``G X1 X2`` plus an auxiliary mode c realising the matching reservoir.

    ``H_SB = sqrt(Gamma kappa_c / 2) (X1 P_c + X2 X_c)``.  ``G=None`` applies the
    directionality condition ``G = Gamma``.
    """
    G = Gamma if G is None else G
    for name, v in (("G", G), ("Gamma", Gamma), ("kappa_c", kappa_c), ("kappa", kappa)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    s = math.sqrt(Gamma * kappa_c / 2.0)
    # X1 P_c = (i/2)(d1 c^dag - d1^dag c) + (i/2)(d1^dag c^dag - d1 c)
    return NetworkSpec(
        (
            Mode("d1", 0.0, kappa, role_hint="signal"),
            Mode("d2", 0.0, kappa, role_hint="idler"),
            Mode("c", 0.0, kappa_c, role_hint="auxiliary"),
        ),
        static_couplings=(
            StaticCoupling("qnd_XX", ("d1", "d2"), G),
            StaticCoupling("hopping", ("d1", "c"), 0.5j * s),
            StaticCoupling("squeezing", ("d1", "c"), 0.5j * s),
            StaticCoupling("qnd_XX", ("d2", "c"), s),
        ),
        frame="rotating",
    )


def build_two_reservoir_pp_amp(G: float, Gamma1: float, Gamma2: float, kappa: float) -> EffectiveSystem:
    """``G (d1^dag d2^dag + d1 d2)`` with jumps ``Gamma1 L[d1^dag - i d2]`` and ``Gamma2 L[d1 - i d2^dag]``."""
    for name, v in (("G", G), ("Gamma1", Gamma1), ("Gamma2", Gamma2), ("kappa", kappa)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    spec = NetworkSpec(
        (Mode("d1", 0.0, kappa, role_hint="signal"), Mode("d2", 0.0, kappa, role_hint="idler")),
        static_couplings=(StaticCoupling("squeezing", ("d1", "d2"), G),),
        jumps=(
            JumpSpec({"d1": (0.0, 1.0), "d2": (-1j, 0.0)}, Gamma1),
            JumpSpec({"d1": (1.0, 0.0), "d2": (0.0, -1j)}, Gamma2),
        ),
        frame="rotating",
    )
    return compile_effective(spec)


TWO_RESERVOIR_FORWARD = ("d1", "d2.dag")
TWO_RESERVOIR_REVERSE = ("d2.dag", "d1")


def _two_reservoir_reverse(G: float, Gamma1: float, Gamma2: float, kappa: float) -> complex:
    model = build_state_space(build_two_reservoir_pp_amp(G, Gamma1, Gamma2, kappa))
    i, o = TWO_RESERVOIR_REVERSE
    return complex(element_function(model, o, i)(0.0))


def locate_two_reservoir_balance(Gamma1: float, Gamma2: float, kappa: float, G_max: float | None = None) -> float:
    """Coherent strength G > 0 at which the reverse path d2 -> d1 closes on resonance.

    The resonant reverse amplitude keeps a fixed complex phase, so its
    projection on that phase is a real function of G; the balance is its first
    sign change above G = 0 (the uncoupled point G = 0 is trivially closed).
    """
    G_max = 4.0 * (Gamma1 + Gamma2 + kappa) if G_max is None else G_max
    grid = np.linspace(0.0, G_max, 401)[1:]
    raw = []
    for g in grid:
        try:
            raw.append(_two_reservoir_reverse(g, Gamma1, Gamma2, kappa))
        except ArithmeticError:
            raw.append(complex(math.nan))
    raw = np.array(raw)
    finite = np.isfinite(raw)
    if not np.any(finite) or np.max(np.abs(raw[finite])) == 0:
        raise ValueError("reverse path closed for every G; no balance to locate")
    ref = raw[finite][np.argmax(np.abs(raw[finite]))]
    ref = np.conj(ref) / abs(ref)

    def f(g):
        return (_two_reservoir_reverse(g, Gamma1, Gamma2, kappa) * ref).real

    floor = 1e-9 * float(np.max(np.abs(raw[finite])))

    def safe(g):
        try:
            return f(g)
        except ArithmeticError:
            return math.nan

    def scan(grid, vals, depth):
        for k in range(len(grid) - 1):
            a, b = vals[k], vals[k + 1]
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            if a == 0:
                return float(grid[k])
            near_pole = 0 < k < len(grid) - 2 and abs(a) > abs(vals[k - 1]) and abs(b) > abs(vals[k + 2])
            if a * b > 0 and not near_pole:
                continue
            if a * b < 0:
                try:
                    root = brentq(f, grid[k], grid[k + 1], xtol=1e-15, rtol=8.9e-16)
                    if abs(_two_reservoir_reverse(root, Gamma1, Gamma2, kappa)) <= floor:
                        return root
                except ArithmeticError:
                    pass
            if depth > 0:
                # a pole can hide a nearby root between two samples; look closer
                lo, hi = grid[max(k - 1, 0)], grid[min(k + 2, len(grid) - 1)]
                sub = np.linspace(lo, hi, 65)
                found = scan(sub, np.array([safe(g) for g in sub]), depth - 1)
                if found is not None:
                    return found
        return None

    root = scan(grid, (raw * ref).real, 3)
    if root is not None:
        return root
    raise ValueError("no balance point found on the scanned range")


@dataclass
class IsolationResult:
    omega: np.ndarray
    forward: np.ndarray
    reverse: np.ndarray
    isolation_db: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega_rad_s", "gain_fwd_db", "gain_rev_db", "isolation_db"])
        for x, f, r, iso in zip(self.omega, _db(self.forward), _db(self.reverse), self.isolation_db):
            w.writerow([repr(float(x)), repr(float(f)), repr(float(r)), repr(float(iso))])
        return buf.getvalue()


def _db(g: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(g, REVERSE_FLOOR))


def isolation(model: StateSpaceModel, port_pair: tuple[str, str], omega_grid, reverse_pair: tuple[str, str] | None = None) -> IsolationResult:
    """Forward and reverse power gains and their ratio in dB.

    ``port_pair = (in, out)``; the reverse path defaults to ``(out, in)``.
    Reverse gains below 1e-30 are reported as the 300 dB sentinel.
    """
    margin = max_real_eigenvalue(model)
    if margin >= 0:
        raise UnstableSystemError(margin)
    w = np.asarray(omega_grid, dtype=float)
    fin, fout = port_pair
    rin, rout = reverse_pair if reverse_pair is not None else (fout, fin)
    fwd = np.abs(element_function(model, fout, fin)(w)) ** 2
    rev = np.abs(element_function(model, rout, rin)(w)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        iso = 10.0 * np.log10(fwd / rev)
    iso = np.where(rev < REVERSE_FLOOR, ISOLATION_CAP_DB, np.minimum(iso, ISOLATION_CAP_DB))
    return IsolationResult(w, fwd, rev, iso)


def directional_phase_preserving_amp(C: float, kappa: float = 1.0, direction: str = "A->B") -> BalancedSystem:
    """Dissipative amplification ``C kappa L[d1 + d2^dag]`` plus its balanced coherent partner."""
    phi = -math.pi / 2 if direction == "A->B" else math.pi / 2
    gamma = C * kappa
    balance = BalanceSpec(
        eta=1.0,
        phi=phi,
        Gamma=gamma,
        lam=gamma,
        A={"d1": (1.0, 0.0)},
        B={"d2": (1.0, 0.0)},
        modes=(Mode("d1", 0.0, kappa, role_hint="signal"), Mode("d2", 0.0, kappa, role_hint="idler")),
    )
    return build_balanced_system(balance)


def directional_forward_form(omega, G0: float, gamma: float, kappa_c: float, kappa: float) -> np.ndarray:
    """``G0 (1 + w^2/gamma^2) / ((1 + 4w^2/kappa_c^2)(1 + 4w^2/kappa^2)^2)``."""
    w2 = np.asarray(omega, dtype=float) ** 2
    return G0 * (1 + w2 / gamma**2) / ((1 + 4 * w2 / kappa_c**2) * (1 + 4 * w2 / kappa**2) ** 2)


def directional_reverse_form(omega, forward: np.ndarray, kappa_c: float) -> np.ndarray:
    """Reverse gain as the forward gain times ``(w/kc)^2 / (1 + (w/kc)^2)``."""
    r = (np.asarray(omega, dtype=float) / kappa_c) ** 2
    return forward * r / (1 + r)


@dataclass
class GammaFit:
    gamma: float
    residual: float  # max relative deviation of the fitted form

    def ratio(self, kappa_c: float) -> float:
        return self.gamma / kappa_c


def fit_forward_gamma(Gamma: float, kappa_c: float, kappa: float, omega_grid=None) -> GammaFit:
    """Least-squares fit of the one free width in the forward-gain form of the directional amplifier."""
    w = np.linspace(-3 * kappa, 3 * kappa, 601) if omega_grid is None else np.asarray(omega_grid, dtype=float)
    model = build_state_space(compile_effective(build_directional_bogoliubov_amp(None, Gamma, kappa_c, kappa)))
    g = np.abs(element_function(model, "d2.P", "d1.X")(w)) ** 2
    g0 = 64 * Gamma**2 / kappa**2

    def resid(p):
        return directional_forward_form(w, g0, p[0], kappa_c, kappa) / g - 1

    res = least_squares(resid, [kappa_c], bounds=([1e-12 * kappa], [np.inf]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return GammaFit(float(res.x[0]), float(np.max(np.abs(resid(res.x)))))
