import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paramnet.frames import compile_effective
from paramnet.netmodel import (
    JumpSpec,
    Mode,
    NetworkError,
    NetworkSpec,
    ParametricDrive,
    StaticCoupling,
    bilinear_hamiltonian,
    check_hamiltonian,
    coupling_hamiltonian,
    load_network,
    network_to_dict,
    parse_network,
    quadrature_unitary,
    serialize_network,
    swap_blocks,
    symplectic_form,
    validate,
    with_modes,
)

from helpers import NETWORK_DIR


def doc(**extra):
    base = {"modes": [{"label": "a", "omega": 1e9, "kappa_port": 1e6}]}
    base.update(extra)
    return json.dumps(base)


def test_minimal_document_defaults():
    spec = parse_network(doc())
    assert len(spec.modes) == 1 and spec.static_couplings == ()
    m = spec.modes[0]
    assert (m.kappa_int, m.n_thermal_port, m.n_thermal_int) == (0.0, 0.0, 0.0)
    assert spec.frame == "lab"


def test_hz_unit_scales_rates():
    spec = parse_network(doc(unit="Hz"))
    assert spec.modes[0].omega == pytest.approx(2 * math.pi * 1e9)
    assert spec.modes[0].kappa_port == pytest.approx(2 * math.pi * 1e6)


@pytest.mark.parametrize(
    "text, message",
    [
        ('{"modes": [', "line 1"),
        (doc(bogus=1), "unknown field"),
        (json.dumps({"modes": [{"label": "a", "omega": 0, "kappa_port": 1}, {"label": "a", "omega": 0, "kappa_port": 1}]}), "duplicate mode label"),
        (json.dumps({"modes": [{"label": "a", "omega": 0, "kappa_port": -1}]}), "negative rate"),
        (doc(static_couplings=[{"kind": "hopping", "modes": ["a", "q"], "amplitude": [1, 0]}]), "unresolved mode label"),
        (doc(jumps=[{"rate": 1, "coefficients": {"a": {"u": [0, 0], "v": [0, 0]}}}]), "empty jump operator"),
        (json.dumps({"modes": [{"label": "a", "omega": 0}]}), "missing field"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(NetworkError, match=message):
        parse_network(text)


def test_validate_diagnostics():
    fc = NetworkSpec((Mode("a", 5.0, 1.0), Mode("b", 3.0, 1.0)), drives=(ParametricDrive(("a", "b"), 0.1, 2.0),))
    assert validate(fc) == []
    undamped = NetworkSpec((Mode("a", 0.0, 0.0),))
    diags = validate(undamped)
    assert [d.level for d in diags] == ["warning"] and "undamped mode" in diags[0].message
    empty = NetworkSpec((Mode("a", 0.0, 1.0),), jumps=(JumpSpec({"a": (0, 0)}, 1.0),))
    assert any(d.level == "error" and "empty jump operator" in d.message for d in validate(empty))


def test_dissipative_fixture_reproduces_coupling_matrix():
    spec = load_network(NETWORK_DIR / "dissipative_amp.json")
    assert spec.labels == ("d1", "d2", "c")
    system = compile_effective(spec)
    g = math.sqrt(3.0) / 2
    n = 3
    # H = g c^dag (d1 + d2^dag) + h.c. in the doubled basis
    h = np.zeros((6, 6), dtype=complex)
    h[0, 2] = h[2, 0] = h[3, 5] = h[5, 3] = g  # hopping d1 <-> c
    h[2, n + 1] = h[n + 1, 2] = h[n + 2, 1] = h[1, n + 2] = g  # squeezing c, d2
    assert np.allclose(system.H, h, atol=1e-14)


finite = st.floats(-10, 10, allow_nan=False)
positive = st.floats(0, 10, allow_nan=False)
labels = st.lists(st.text("abcdxyz", min_size=1, max_size=3), min_size=1, max_size=4, unique=True)


@st.composite
def specs(draw):
    labs = draw(labels)
    modes = tuple(
        Mode(l, draw(finite), draw(positive), draw(positive), draw(positive), draw(positive), draw(st.sampled_from(["none", "signal", "idler", "auxiliary"])))
        for l in labs
    )
    pair = st.tuples(st.sampled_from(labs), st.sampled_from(labs))
    couplings = tuple(
        StaticCoupling(draw(st.sampled_from(["hopping", "squeezing", "qnd_XX", "qnd_PP"])), draw(pair), complex(draw(finite), draw(finite)))
        for _ in range(draw(st.integers(0, 3)))
    )
    drives = tuple(ParametricDrive(draw(pair), draw(positive), draw(finite), draw(finite)) for _ in range(draw(st.integers(0, 2))))
    jumps = tuple(
        JumpSpec({labs[0]: (complex(1.0, draw(finite)), complex(draw(finite), 0.0))}, draw(positive), draw(positive))
        for _ in range(draw(st.integers(0, 2)))
    )
    return NetworkSpec(modes, couplings, drives, jumps, "lab")


@settings(max_examples=100, deadline=None)
@given(specs())
def test_serialize_parse_round_trip(spec):
    again = parse_network(serialize_network(spec))
    assert network_to_dict(again) == network_to_dict(spec)


@settings(max_examples=60, deadline=None)
@given(specs())
def test_assembled_hamiltonians_hermitian_and_particle_hole(spec):
    basis = spec.labels
    for c in spec.static_couplings:
        h = coupling_hamiltonian(c, basis)
        check_hamiltonian(h)
        sx = swap_blocks(len(basis))
        assert np.allclose(h, h.conj().T, atol=1e-14)
        assert np.allclose(h, sx @ h.conj() @ sx, atol=1e-14)


def test_check_hamiltonian_rejects_bad_matrix():
    h = np.zeros((2, 2), dtype=complex)
    h[0, 1] = 1.0
    with pytest.raises(Exception):
        check_hamiltonian(h)


def test_quadrature_unitary_and_symplectic_form():
    n = 3
    u = quadrature_unitary(n)
    assert np.allclose(u @ u.conj().T, np.eye(2 * n))
    om = symplectic_form(n)
    assert np.allclose(om.T, -om) and np.allclose(om @ om, -np.eye(2 * n))


def test_bilinear_hamiltonian_adds_conjugate():
    from paramnet.netmodel import annihilation, creation

    h = bilinear_hamiltonian(annihilation(0, 2), creation(1, 2), 0.3 + 0.1j)
    assert np.allclose(h, h.conj().T)


def test_with_modes_overrides_single_field():
    spec = NetworkSpec((Mode("a", 0.0, 1.0), Mode("b", 0.0, 2.0)))
    out = with_modes(spec, b={"n_thermal_port": 2.0})
    assert out.modes[1].n_thermal_port == 2.0 and out.modes[0] == spec.modes[0]


def test_shipped_fixtures_parse_and_round_trip():
    files = sorted(NETWORK_DIR.glob("*.json"))
    assert len(files) >= 7
    for f in files:
        spec = load_network(f)
        assert parse_network(serialize_network(spec)) == spec
