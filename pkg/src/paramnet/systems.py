"""Builders for the standard amplifier and converter networks.

All builders work in the rotating frame (mode ``omega`` is a detuning) and
return either a :class:`NetworkSpec` or a compiled :class:`EffectiveSystem`.
"""

from __future__ import annotations

import math

from .frames import EffectiveSystem, compile_effective
from .netmodel import JumpSpec, Mode, NetworkSpec, ParametricDrive, StaticCoupling


def _check_rates(**rates: float) -> None:
    for name, value in rates.items():
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")


def frequency_converter(lam: float, kappa: float, omega_a: float = 10.0, omega_b: float = 7.0, phi: float = 0.0) -> NetworkSpec:
    """Lab-frame pair driven at the frequency difference (beam-splitter process)."""
    _check_rates(lam=lam, kappa=kappa)
    return NetworkSpec(
        (Mode("a", omega_a, kappa), Mode("b", omega_b, kappa)),
        drives=(ParametricDrive(("a", "b"), lam, omega_a - omega_b, phi),),
    )


def parametric_amplifier(lam: float, kappa: float, omega_a: float = 10.0, omega_b: float = 7.0, phi: float = 0.0) -> NetworkSpec:
    """Lab-frame pair driven at the frequency sum (two-mode squeezing process)."""
    _check_rates(lam=lam, kappa=kappa)
    return NetworkSpec(
        (Mode("a", omega_a, kappa), Mode("b", omega_b, kappa)),
        drives=(ParametricDrive(("a", "b"), lam, omega_a + omega_b, phi),),
    )


def auxiliary_hopping(lam: float, kappa_c: float, delta: float = 0.0, kappa: float = 0.0) -> NetworkSpec:
    """Two modes a, b each hopping to a damped auxiliary c with strength lam."""
    _check_rates(lam=lam, kappa_c=kappa_c, kappa=kappa)
    return NetworkSpec(
        (Mode("a", 0.0, kappa), Mode("b", 0.0, kappa), Mode("c", delta, kappa_c, role_hint="auxiliary")),
        static_couplings=(
            StaticCoupling("hopping", ("a", "c"), lam),
            StaticCoupling("hopping", ("b", "c"), lam),
        ),
        frame="rotating",
    )


def degenerate_amplifier(lam: float, kappa: float) -> EffectiveSystem:
    """Single mode with ``lam (a^dag a^dag + a a)``; threshold at lam = kappa/4."""
    _check_rates(lam=lam, kappa=kappa)
    from .netmodel import bilinear_hamiltonian, creation

    mode = Mode("a", 0.0, kappa, role_hint="signal")
    return EffectiveSystem((mode,), bilinear_hamiltonian(creation(0, 1), creation(0, 1), lam))


def dissipative_amplifier(C: float, kappa: float = 1.0, kappa_c: float | None = None, eta: float = 1.0) -> NetworkSpec:
    """Signal d1 and idler d2 coupled through a damped auxiliary mode c.

    ``H = g c^dag (d1 + eta d2^dag) + h.c.`` with ``g^2 = C kappa kappa_c / 4``,
    so the engineered rate ``4 g^2 / kappa_c`` equals ``C kappa``.
    """
    kappa_c = kappa if kappa_c is None else kappa_c
    _check_rates(C=C, kappa=kappa, kappa_c=kappa_c, eta=eta)
    g = math.sqrt(C * kappa * kappa_c / 4.0)
    return NetworkSpec(
        (
            Mode("d1", 0.0, kappa, role_hint="signal"),
            Mode("d2", 0.0, kappa, role_hint="idler"),
            Mode("c", 0.0, kappa_c, role_hint="auxiliary"),
        ),
        static_couplings=(
            StaticCoupling("hopping", ("d1", "c"), g),
            StaticCoupling("squeezing", ("c", "d2"), g * eta),
        ),
        frame="rotating",
    )


def dissipative_amplifier_markov(C: float, kappa: float = 1.0, eta: float = 1.0) -> EffectiveSystem:
    """Markovian limit: jump ``C kappa L[d1 + eta d2^dag]`` attached directly."""
    _check_rates(C=C, kappa=kappa, eta=eta)
    modes = (Mode("d1", 0.0, kappa, role_hint="signal"), Mode("d2", 0.0, kappa, role_hint="idler"))
    jump = JumpSpec({"d1": (1.0, 0.0), "d2": (0.0, eta)}, C * kappa)
    spec = NetworkSpec(modes, jumps=(jump,), frame="rotating")
    return compile_effective(spec)


def gc_couplings(C1: float, C2: float, kappa: float) -> tuple[float, float]:
    """Tone amplitudes G1 (gain) and G2 (conversion) from ``C_n = 4 G_n^2 / kappa^2``."""
    _check_rates(C1=C1, C2=C2)
    return math.sqrt(C1) * kappa / 2.0, math.sqrt(C2) * kappa / 2.0


def gain_conversion_amplifier(C1: float, C2: float, kappa: float = 1.0) -> NetworkSpec:
    """``(G1 + G2) X1 X2 + (G2 - G1) P1 P2`` with both modes on waveguides at rate kappa."""
    g1, g2 = gc_couplings(C1, C2, kappa)
    return NetworkSpec(
        (Mode("d1", 0.0, kappa, role_hint="signal"), Mode("d2", 0.0, kappa, role_hint="idler")),
        static_couplings=(
            StaticCoupling("qnd_XX", ("d1", "d2"), g1 + g2),
            StaticCoupling("qnd_PP", ("d1", "d2"), g2 - g1),
        ),
        frame="rotating",
    )


def gc_from_delta(delta_c: float, C1: float, kappa: float = 1.0) -> NetworkSpec:
    """Gain/conversion amplifier at ``C1 - C2 = delta_c``."""
    return gain_conversion_amplifier(C1, C1 - delta_c, kappa)


def gc_gain(C1: float, C2: float) -> float:
    """On-resonance transmission gain ``G_+ = 4 (sqrt C1 + sqrt C2)^2 / (1 - dC)^2``."""
    return 4.0 * (math.sqrt(C1) + math.sqrt(C2)) ** 2 / (1.0 - (C1 - C2)) ** 2


def gc_for_gain(G: float, delta_c: float = -1.0) -> tuple[float, float]:
    """(C1, C2) at fixed ``delta_c`` reaching transmission gain G.

    With ``s = sqrt C1 + sqrt C2`` fixed by G and ``sqrt C1 - sqrt C2 = delta_c / s``.
    """
    s = math.sqrt(G) * (1.0 - delta_c) / 2.0
    r1 = 0.5 * (s + delta_c / s)
    r2 = 0.5 * (s - delta_c / s)
    if r1 < 0 or r2 < 0:
        raise ValueError(f"gain {G} unreachable at delta_c = {delta_c}")
    return r1 * r1, r2 * r2
