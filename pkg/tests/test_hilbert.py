import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbattery.hilbert import (
    CompositeBasis,
    annihilation_op,
    collective_spin_ops,
    full_qubit_op,
    is_hermitian,
    symmetric_embedding,
    tensor,
)


def test_basis_dimensions():
    b = CompositeBasis(cavity_cutoff=4, sector="symmetric", n_qubits=3)
    assert b.sector_dim == 4
    assert b.total_dim == 5 * 4
    f = CompositeBasis(cavity_cutoff=2, sector="full", n_qubits=3)
    assert f.sector_dim == 8
    assert f.total_dim == 3 * 8


def test_basis_validation():
    with pytest.raises(ValueError):
        CompositeBasis(cavity_cutoff=-1, sector="symmetric", n_qubits=2)
    with pytest.raises(ValueError):
        CompositeBasis(cavity_cutoff=2, sector="symmetric", n_qubits=0)
    with pytest.raises(ValueError):
        CompositeBasis(cavity_cutoff=2, sector="full", n_qubits=9)
    # explicit override lifts the full-sector limit
    CompositeBasis(cavity_cutoff=2, sector="full", n_qubits=9, full_limit=10)


def test_annihilation_entries():
    a = annihilation_op(1)
    assert a[0, 1] == pytest.approx(1.0)
    assert np.count_nonzero(a) == 1

    a4 = annihilation_op(4)
    assert a4[3, 4] == pytest.approx(2.0)  # sqrt(4)
    vac = np.zeros(5)
    vac[0] = 1.0
    assert np.allclose(a4 @ vac, 0.0)


def test_annihilation_invalid_dim():
    with pytest.raises(ValueError):
        annihilation_op(0)


@pytest.mark.parametrize("n_max", [1, 3, 7])
def test_annihilation_commutator_truncation(n_max):
    a = annihilation_op(n_max)
    comm = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(n_max + 1, dtype=complex)
    expected[n_max, n_max] = -n_max  # truncation breaks only the corner entry
    assert np.max(np.abs(comm - expected)) < 1e-12


def test_collective_spin_examples():
    jz, jp, jm = collective_spin_ops(2)
    e0 = np.eye(3)[0]
    assert np.allclose(jp @ e0, math.sqrt(2) * np.eye(3)[1])
    assert jz[1, 1] == pytest.approx(0.0)  # k=1, N=2

    _, jp3, _ = collective_spin_ops(3)
    e1 = np.eye(4)[1]
    # sqrt((3-1)(1+1)) = 2, computed by direct arithmetic
    assert np.allclose(jp3 @ e1, 2.0 * np.eye(4)[2])


@given(st.integers(min_value=1, max_value=20))
@settings(max_examples=20, deadline=None)
def test_su2_commutators(n):
    jz, jp, jm = collective_spin_ops(n)
    assert np.max(np.abs(jz @ jp - jp @ jz - jp)) < 1e-12
    assert np.max(np.abs(jz @ jm - jm @ jz + jm)) < 1e-12
    assert np.max(np.abs(jp @ jm - jm @ jp - 2 * jz)) < 1e-12


def test_full_qubit_op_single_site():
    plus = full_qubit_op(1, 1, "plus")
    # <e|sigma+|g> = 1 with (g, e) = (index 0, index 1)
    assert plus[1, 0] == pytest.approx(1.0)
    assert np.count_nonzero(plus) == 1


def test_full_qubit_ops_disjoint_sites_commute():
    p1 = full_qubit_op(2, 1, "plus")
    p2 = full_qubit_op(2, 2, "plus")
    assert np.allclose(p1 @ p2, p2 @ p1)


def test_full_qubit_op_errors():
    with pytest.raises(ValueError):
        full_qubit_op(2, 0, "plus")
    with pytest.raises(ValueError):
        full_qubit_op(2, 3, "plus")
    with pytest.raises(ValueError):
        full_qubit_op(9, 1, "plus")
    with pytest.raises(ValueError):
        full_qubit_op(2, 1, "nope")
    full_qubit_op(9, 1, "plus", full_limit=9)


def test_embedding_columns():
    e2 = symmetric_embedding(2)
    # k=1 column is (|eg> + |ge>)/sqrt(2); bit of qubit 1 is the high bit
    expected = np.zeros(4)
    expected[0b10] = expected[0b01] = 1 / math.sqrt(2)
    assert np.allclose(e2[:, 1], expected)
    # k=0 column is |gg...g> = index 0
    assert e2[0, 0] == pytest.approx(1.0)

    e3 = symmetric_embedding(3)
    col = e3[:, 2]
    nz = np.flatnonzero(np.abs(col) > 1e-15)
    assert sorted(nz) == [0b011, 0b101, 0b110]  # binom(3,2)=3 by enumeration
    assert np.allclose(col[nz], 1 / math.sqrt(3))


@pytest.mark.parametrize("n", range(1, 7))
def test_embedding_isometry(n):
    e = symmetric_embedding(n)
    assert np.max(np.abs(e.conj().T @ e - np.eye(n + 1))) < 1e-12


@pytest.mark.parametrize("n", range(1, 7))
def test_embedding_transports_collective_raising(n):
    e = symmetric_embedding(n)
    s_plus = sum(full_qubit_op(n, i, "plus") for i in range(1, n + 1))
    _, jp, _ = collective_spin_ops(n)
    assert np.max(np.abs(e.conj().T @ s_plus @ e - jp)) < 1e-12


def test_embedding_transport_explicit_two_qubits():
    # explicit 4-dim computation, independent of symmetric_embedding()
    d0 = np.zeros(4, dtype=complex)
    d0[0b00] = 1.0
    d1 = np.zeros(4, dtype=complex)
    d1[0b01] = d1[0b10] = 1 / math.sqrt(2)
    d2 = np.zeros(4, dtype=complex)
    d2[0b11] = 1.0
    e = np.stack([d0, d1, d2], axis=1)
    s_plus = full_qubit_op(2, 1, "plus") + full_qubit_op(2, 2, "plus")
    _, jp, _ = collective_spin_ops(2)
    assert np.allclose(e.conj().T @ s_plus @ e, jp)


def test_tensor_basics():
    ident2 = np.eye(2, dtype=complex)
    assert np.allclose(tensor(ident2, ident2), np.eye(4))

    sz = np.diag([1.0, -1.0]).astype(complex)
    assert np.allclose(tensor(sz, ident2), np.diag([1, 1, -1, -1]))

    a = annihilation_op(2)
    jz, _, _ = collective_spin_ops(2)
    assert tensor(a, jz).shape == (9, 9)


def test_tensor_dim_guard():
    big = np.eye(600, dtype=complex)
    with pytest.raises(ValueError):
        tensor(big, big)


@given(st.integers(0, 10_000), st.booleans(), st.booleans())
@settings(max_examples=25, deadline=None)
def test_tensor_hermitian_iff_factors_hermitian(seed, herm_a, herm_b):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    if herm_a:
        a = a + a.conj().T
    if herm_b:
        b = b + b.conj().T
    if is_hermitian(a, 1e-9) and is_hermitian(b, 1e-9):
        assert is_hermitian(tensor(a, b), 1e-9)
    else:
        # generic non-hermitian factors give a non-hermitian product
        assert not is_hermitian(tensor(a, b), 1e-9)
