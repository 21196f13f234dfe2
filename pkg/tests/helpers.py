"""Shared fixtures data and random network generation for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from paramnet.dynamics import build_state_space, max_real_eigenvalue
from paramnet.frames import EffectiveSystem, compile_effective
from paramnet.netmodel import JumpSpec, Mode, NetworkSpec, StaticCoupling

NETWORK_DIR = Path(__file__).resolve().parents[1] / "networks"

KINDS = ("hopping", "squeezing", "qnd_XX", "qnd_PP")


def random_spec(rng: np.random.Generator, passive: bool = False) -> NetworkSpec:
    """Rotating-frame network with 2-4 damped modes and random quadratic couplings."""
    n = int(rng.integers(2, 5))
    labels = [f"m{i}" for i in range(n)]
    modes = tuple(
        Mode(lab, float(rng.uniform(-1, 1)), float(rng.uniform(0.2, 2.0)), float(rng.uniform(0, 0.5)) * (rng.random() < 0.3), float(rng.uniform(0, 2)) * (rng.random() < 0.3))
        for lab in labels
    )
    couplings = []
    for _ in range(int(rng.integers(1, 2 * n))):
        i, j = rng.choice(n, size=2, replace=False)
        kind = "hopping" if passive else KINDS[int(rng.integers(len(KINDS)))]
        amp = complex(rng.normal(), rng.normal()) * 0.4
        couplings.append(StaticCoupling(kind, (labels[i], labels[j]), amp if kind in ("hopping", "squeezing") else amp.real))
    jumps = ()
    if not passive and rng.random() < 0.5:
        coeffs = {labels[k]: (complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal()) * 0.5) for k in rng.choice(n, size=2, replace=False)}
        jumps = (JumpSpec(coeffs, float(rng.uniform(0.1, 1.0)), float(rng.uniform(0, 1)) * (rng.random() < 0.5)),)
    return NetworkSpec(modes, static_couplings=tuple(couplings), jumps=jumps, frame="rotating")


def random_stable_system(rng: np.random.Generator, margin: float = 1e-2) -> tuple[EffectiveSystem, bool]:
    """Draw networks until one is stable by at least ``margin``; every fourth draw is passive."""
    while True:
        passive = rng.random() < 0.25
        spec = random_spec(rng, passive)
        if passive:
            spec = NetworkSpec(tuple(Mode(m.label, m.omega, m.kappa_port) for m in spec.modes), spec.static_couplings, frame="rotating")
        system = compile_effective(spec)
        if max_real_eigenvalue(build_state_space(system)) < -margin:
            return system, passive
