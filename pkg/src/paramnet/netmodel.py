"""Network description: modes, baths, drives, couplings and jump operators.

Network files are UTF-8 JSON.  All rates and frequencies are held internally in
rad/s; a document with ``"unit": "Hz"`` is converted on load.

The helpers at the bottom assemble quadratic Hamiltonians in the doubled basis
``v = (a_1 .. a_N, a_1^dag .. a_N^dag)`` with the convention
``H_op = 1/2 v^dag H v`` (constants dropped).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

COUPLING_KINDS = ("hopping", "squeezing", "qnd_XX", "qnd_PP")
ROLES = ("signal", "idler", "auxiliary", "none")
FRAMES = ("lab", "rotating")
UNITS = {"rad/s": 1.0, "Hz": 2.0 * math.pi}


class NetworkError(ValueError):
    """Raised for malformed or inconsistent network descriptions."""


@dataclass(frozen=True)
class Mode:
    label: str
    omega: float
    kappa_port: float = 0.0
    kappa_int: float = 0.0
    n_thermal_port: float = 0.0
    n_thermal_int: float = 0.0
    role_hint: str = "none"

    @property
    def kappa(self) -> float:
        return self.kappa_port + self.kappa_int


@dataclass(frozen=True)
class ParametricDrive:
    """Modulation ``M(t) = 2 lam cos(omega_d t + phi)`` on ``(a + a^dag)(b + b^dag)``."""

    modes: tuple[str, str]
    lam: float
    omega_d: float
    phi: float = 0.0


@dataclass(frozen=True)
class StaticCoupling:
    """Time-independent quadratic coupling.

    hopping:   g a b^dag + g* a^dag b
    squeezing: g a^dag b^dag + g* a b
    qnd_XX:    Re(g) X_a X_b
    qnd_PP:    Re(g) P_a P_b
    """

    kind: str
    modes: tuple[str, str]
    amplitude: complex


@dataclass(frozen=True)
class JumpSpec:
    """Jump operator ``z = sum_i (u_i a_i + v_i a_i^dag)`` with rate ``rate``.

    ``n_thermal`` is the occupation of the reservoir feeding the jump; the
    dissipator is then ``rate[(n+1) L[z] + n L[z^dag]]``.
    """

    coefficients: Mapping[str, tuple[complex, complex]]
    rate: float
    n_thermal: float = 0.0


@dataclass(frozen=True)
class NetworkSpec:
    modes: tuple[Mode, ...]
    static_couplings: tuple[StaticCoupling, ...] = ()
    drives: tuple[ParametricDrive, ...] = ()
    jumps: tuple[JumpSpec, ...] = ()
    frame: str = "lab"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def mode(self, label: str) -> Mode:
        for m in self.modes:
            if m.label == label:
                return m
        raise NetworkError(f"unresolved mode label {label!r}")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise NetworkError(f"unresolved mode label {label!r}") from None


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.message}"


# ---------------------------------------------------------------------------
# parsing / serialization

_TOP_KEYS = {"unit", "frame", "modes", "static_couplings", "drives", "jumps"}
_MODE_KEYS = {"label", "omega", "kappa_port", "kappa_int", "n_thermal_port", "n_thermal_int", "role"}
_COUPLING_KEYS = {"kind", "modes", "amplitude"}
_DRIVE_KEYS = {"modes", "lambda", "omega_d", "phi"}
_JUMP_KEYS = {"rate", "coefficients", "n_thermal"}


def _check_keys(obj, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise NetworkError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise NetworkError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise NetworkError(f"{where}: missing field(s) {sorted(missing)}")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise NetworkError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise NetworkError(f"{where}: non-finite value")
    return float(x)


def _complex(x, where: str) -> complex:
    if not (isinstance(x, list) and len(x) == 2):
        raise NetworkError(f"{where}: complex values are [re, im] pairs")
    return complex(_number(x[0], where), _number(x[1], where))


def _rate(x, where: str, scale: float = 1.0) -> float:
    v = _number(x, where)
    if v < 0:
        raise NetworkError(f"{where}: negative rate {v}")
    return v * scale


def _pair(x, where: str) -> tuple[str, str]:
    if not (isinstance(x, list) and len(x) == 2 and all(isinstance(s, str) for s in x)):
        raise NetworkError(f"{where}: expected a pair of mode labels")
    return (x[0], x[1])


def parse_network(document: str) -> NetworkSpec:
    """Parse a JSON network document into a validated :class:`NetworkSpec`."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_keys(raw, _TOP_KEYS, {"modes"}, "document")

    unit = raw.get("unit", "rad/s")
    if unit not in UNITS:
        raise NetworkError(f"unit must be one of {sorted(UNITS)}, got {unit!r}")
    scale = UNITS[unit]
    frame = raw.get("frame", "lab")
    if frame not in FRAMES:
        raise NetworkError(f"frame must be one of {FRAMES}, got {frame!r}")

    modes = []
    for k, m in enumerate(raw["modes"]):
        where = f"modes[{k}]"
        _check_keys(m, _MODE_KEYS, {"label", "omega", "kappa_port"}, where)
        if not isinstance(m["label"], str) or not m["label"]:
            raise NetworkError(f"{where}: label must be a non-empty string")
        role = m.get("role", "none")
        if role not in ROLES:
            raise NetworkError(f"{where}: role must be one of {ROLES}")
        modes.append(
            Mode(
                label=m["label"],
                omega=_number(m["omega"], where + ".omega") * scale,
                kappa_port=_rate(m["kappa_port"], where + ".kappa_port", scale),
                kappa_int=_rate(m.get("kappa_int", 0.0), where + ".kappa_int", scale),
                n_thermal_port=_rate(m.get("n_thermal_port", 0.0), where + ".n_thermal_port"),
                n_thermal_int=_rate(m.get("n_thermal_int", 0.0), where + ".n_thermal_int"),
                role_hint=role,
            )
        )
    seen = set()
    for m in modes:
        if m.label in seen:
            raise NetworkError(f"duplicate mode label {m.label!r}")
        seen.add(m.label)

    couplings = []
    for k, c in enumerate(raw.get("static_couplings", [])):
        where = f"static_couplings[{k}]"
        _check_keys(c, _COUPLING_KEYS, _COUPLING_KEYS, where)
        if c["kind"] not in COUPLING_KINDS:
            raise NetworkError(f"{where}: kind must be one of {COUPLING_KINDS}")
        couplings.append(
            StaticCoupling(c["kind"], _pair(c["modes"], where), _complex(c["amplitude"], where) * scale)
        )

    drives = []
    for k, d in enumerate(raw.get("drives", [])):
        where = f"drives[{k}]"
        _check_keys(d, _DRIVE_KEYS, {"modes", "lambda", "omega_d"}, where)
        drives.append(
            ParametricDrive(
                modes=_pair(d["modes"], where),
                lam=_rate(d["lambda"], where + ".lambda", scale),
                omega_d=_number(d["omega_d"], where + ".omega_d") * scale,
                phi=_number(d.get("phi", 0.0), where + ".phi"),
            )
        )

    jumps = []
    for k, j in enumerate(raw.get("jumps", [])):
        where = f"jumps[{k}]"
        _check_keys(j, _JUMP_KEYS, {"rate", "coefficients"}, where)
        if not isinstance(j["coefficients"], dict):
            raise NetworkError(f"{where}.coefficients: expected an object")
        coeffs = {}
        for label, uv in j["coefficients"].items():
            _check_keys(uv, {"u", "v"}, set(), f"{where}.coefficients.{label}")
            coeffs[label] = (
                _complex(uv.get("u", [0, 0]), f"{where}.coefficients.{label}.u"),
                _complex(uv.get("v", [0, 0]), f"{where}.coefficients.{label}.v"),
            )
        jumps.append(
            JumpSpec(coeffs, _rate(j["rate"], where + ".rate", scale), _rate(j.get("n_thermal", 0.0), where + ".n_thermal"))
        )

    spec = NetworkSpec(tuple(modes), tuple(couplings), tuple(drives), tuple(jumps), frame)
    errors = [d for d in validate(spec) if d.level == "error"]
    if errors:
        raise NetworkError("; ".join(d.message for d in errors))
    return spec


def load_network(path) -> NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def _pair_out(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def network_to_dict(spec: NetworkSpec) -> dict:
    """Plain-JSON representation (unit rad/s); inverse of :func:`parse_network`."""
    modes = []
    for m in spec.modes:
        d = {"label": m.label, "omega": m.omega, "kappa_port": m.kappa_port, "kappa_int": m.kappa_int,
             "n_thermal_port": m.n_thermal_port, "n_thermal_int": m.n_thermal_int}
        if m.role_hint != "none":
            d["role"] = m.role_hint
        modes.append(d)
    return {
        "unit": "rad/s",
        "frame": spec.frame,
        "modes": modes,
        "static_couplings": [
            {"kind": c.kind, "modes": list(c.modes), "amplitude": _pair_out(c.amplitude)}
            for c in spec.static_couplings
        ],
        "drives": [
            {"modes": list(d.modes), "lambda": d.lam, "omega_d": d.omega_d, "phi": d.phi} for d in spec.drives
        ],
        "jumps": [
            {
                "rate": j.rate,
                "n_thermal": j.n_thermal,
                "coefficients": {
                    label: {"u": _pair_out(u), "v": _pair_out(v)} for label, (u, v) in j.coefficients.items()
                },
            }
            for j in spec.jumps
        ],
    }


def serialize_network(spec: NetworkSpec) -> str:
    return json.dumps(network_to_dict(spec), indent=2, sort_keys=True) + "\n"


def validate(spec: NetworkSpec) -> list[Diagnostic]:
    """Check type invariants; returns diagnostics instead of raising."""
    out: list[Diagnostic] = []
    labels = [m.label for m in spec.modes]
    dup = sorted({l for l in labels if labels.count(l) > 1})
    for l in dup:
        out.append(Diagnostic("error", f"duplicate mode label {l!r}"))
    known = set(labels)

    def resolve(pair: Iterable[str], where: str) -> None:
        for l in pair:
            if l not in known:
                out.append(Diagnostic("error", f"{where}: unresolved mode label {l!r}"))

    for m in spec.modes:
        for name in ("kappa_port", "kappa_int", "n_thermal_port", "n_thermal_int"):
            v = getattr(m, name)
            if not math.isfinite(v) or v < 0:
                out.append(Diagnostic("error", f"mode {m.label!r}: {name} must be finite and >= 0"))
        if m.role_hint not in ROLES:
            out.append(Diagnostic("error", f"mode {m.label!r}: unknown role {m.role_hint!r}"))
        if m.kappa_port + m.kappa_int == 0:
            out.append(Diagnostic("warning", f"mode {m.label!r}: undamped mode (kappa_port = kappa_int = 0)"))
    if spec.frame not in FRAMES:
        out.append(Diagnostic("error", f"unknown frame {spec.frame!r}"))
    for k, c in enumerate(spec.static_couplings):
        if c.kind not in COUPLING_KINDS:
            out.append(Diagnostic("error", f"static_couplings[{k}]: unknown kind {c.kind!r}"))
        resolve(c.modes, f"static_couplings[{k}]")
    for k, d in enumerate(spec.drives):
        resolve(d.modes, f"drives[{k}]")
        if d.lam < 0 or not math.isfinite(d.lam):
            out.append(Diagnostic("error", f"drives[{k}]: negative rate lambda"))
    if spec.drives and spec.frame == "rotating":
        out.append(Diagnostic("error", "parametric drives require frame 'lab'"))
    for k, j in enumerate(spec.jumps):
        resolve(j.coefficients, f"jumps[{k}]")
        if not math.isfinite(j.rate) or j.rate < 0:
            out.append(Diagnostic("error", f"jumps[{k}]: rate must be finite and >= 0"))
        if all(u == 0 and v == 0 for u, v in j.coefficients.values()):
            out.append(Diagnostic("error", f"jumps[{k}]: empty jump operator"))
    return out


def with_modes(spec: NetworkSpec, **changes: Mapping[str, dict]) -> NetworkSpec:
    """Return a copy with per-mode field overrides, e.g. ``with_modes(s, d2={"n_thermal_port": 1})``."""
    modes = tuple(replace(m, **changes[m.label]) if m.label in changes else m for m in spec.modes)
    return replace(spec, modes=modes)


# ---------------------------------------------------------------------------
# doubled-basis assembly helpers


def swap_blocks(n: int) -> np.ndarray:
    """Sigma_x: exchanges annihilation and creation blocks."""
    eye = np.eye(n)
    z = np.zeros((n, n))
    return np.block([[z, eye], [eye, z]])


def sigma_z(n: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(n), -np.ones(n)])


def symplectic_form(n: int) -> np.ndarray:
    """Omega for quadrature ordering (X_1, P_1, ..., X_N, P_N)."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def quadrature_unitary(n: int) -> np.ndarray:
    """U with q = U v, X = (a + a^dag)/sqrt2, P = -i(a - a^dag)/sqrt2."""
    u = np.zeros((2 * n, 2 * n), dtype=complex)
    s = 1.0 / math.sqrt(2.0)
    for k in range(n):
        u[2 * k, k] = s
        u[2 * k, n + k] = s
        u[2 * k + 1, k] = -1j * s
        u[2 * k + 1, n + k] = 1j * s
    return u


def linear_operator(coefficients: Mapping[str, tuple[complex, complex]], basis: Sequence[str]) -> np.ndarray:
    """Doubled coefficient vector xi with ``x = xi . v``."""
    n = len(basis)
    xi = np.zeros(2 * n, dtype=complex)
    for label, (u, v) in coefficients.items():
        try:
            i = list(basis).index(label)
        except ValueError:
            raise NetworkError(f"unresolved mode label {label!r}") from None
        xi[i] += u
        xi[n + i] += v
    return xi


def annihilation(i: int, n: int) -> np.ndarray:
    xi = np.zeros(2 * n, dtype=complex)
    xi[i] = 1.0
    return xi


def creation(i: int, n: int) -> np.ndarray:
    xi = np.zeros(2 * n, dtype=complex)
    xi[n + i] = 1.0
    return xi


def x_quadrature(i: int, n: int) -> np.ndarray:
    return (annihilation(i, n) + creation(i, n)) / math.sqrt(2.0)


def p_quadrature(i: int, n: int) -> np.ndarray:
    return -1j * (annihilation(i, n) - creation(i, n)) / math.sqrt(2.0)


def adjoint(xi: np.ndarray) -> np.ndarray:
    """Coefficient vector of ``x^dag`` given that of ``x``."""
    n = len(xi) // 2
    return np.r_[np.conj(xi[n:]), np.conj(xi[:n])]


def bilinear_hamiltonian(x: np.ndarray, y: np.ndarray, coef: complex) -> np.ndarray:
    """Doubled-basis matrix of ``coef * x y + h.c.`` for linear operators x, y."""
    n = len(x) // 2
    sx = swap_blocks(n)
    w = coef * np.outer(sx @ x, y)
    w = w + w.conj().T
    return w + sx @ w.T @ sx


def coupling_hamiltonian(c: StaticCoupling, basis: Sequence[str]) -> np.ndarray:
    basis = list(basis)
    n = len(basis)
    try:
        i, j = basis.index(c.modes[0]), basis.index(c.modes[1])
    except ValueError:
        raise NetworkError(f"unresolved mode label in coupling {c.modes}") from None
    g = complex(c.amplitude)
    if c.kind == "hopping":
        return bilinear_hamiltonian(annihilation(i, n), creation(j, n), g)
    if c.kind == "squeezing":
        return bilinear_hamiltonian(creation(i, n), creation(j, n), g)
    if c.kind == "qnd_XX":
        return bilinear_hamiltonian(x_quadrature(i, n), x_quadrature(j, n), g.real / 2)
    if c.kind == "qnd_PP":
        return bilinear_hamiltonian(p_quadrature(i, n), p_quadrature(j, n), g.real / 2)
    raise NetworkError(f"unknown coupling kind {c.kind!r}")


def detuning_hamiltonian(detunings: Sequence[float]) -> np.ndarray:
    d = np.asarray(detunings, dtype=float)
    return np.diag(np.r_[d, d]).astype(complex)


def check_hamiltonian(h: np.ndarray, atol: float = 1e-12) -> None:
    """Assert Hermiticity and particle-hole symmetry to machine precision."""
    n = h.shape[0] // 2
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > atol * scale:
        raise AssertionError("Hamiltonian matrix is not Hermitian")
    sx = swap_blocks(n)
    if np.max(np.abs(h - sx @ h.conj() @ sx)) > atol * scale:
        raise AssertionError("Hamiltonian matrix violates particle-hole symmetry")


def rotating_hamiltonian(spec: NetworkSpec) -> np.ndarray:
    """Hamiltonian of a rotating-frame spec: mode detunings plus static couplings."""
    h = detuning_hamiltonian([m.omega for m in spec.modes])
    for c in spec.static_couplings:
        h = h + coupling_hamiltonian(c, spec.labels)
    check_hamiltonian(h)
    return h
