import math

import numpy as np
import pytest

from thermochain import (
    InvalidInputError,
    ModelKind,
    ModelSpec,
    NumericalFailureError,
    build_mpo,
    initial_system_state,
    krylov_apply_exp,
    load_checkpoint,
    mpo_expectation,
    mpo_to_dense,
    mps_to_dense,
    orthogonalize,
    overlap,
    product_mps,
    save_checkpoint,
    system_matrices,
)
from thermochain.chainmap import ChainCoefficients
from thermochain.tensor import (
    MpsState,
    boson_ops,
    extend_vacuum,
    left_gauge_error,
    read_container,
    right_gauge_error,
    write_container,
)


def random_mps(rng, dims, bonds):
    sites = []
    for i, d in enumerate(dims):
        sites.append(
            rng.standard_normal((bonds[i], d, bonds[i + 1]))
            + 1j * rng.standard_normal((bonds[i], d, bonds[i + 1]))
        )
    return MpsState(sites=sites, ortho_center=0)


def toy_chain():
    return ChainCoefficients(
        kappa=0.3, omega=np.array([0.5, 0.7, 0.2]), t=np.array([0.25, 0.4]), beta=1.0
    )


class TestBosonOps:
    def test_ladder_algebra(self):
        b, bd, num = boson_ops(5)
        assert np.allclose(bd, b.conj().T)
        assert np.allclose(num, bd @ b)
        comm = b @ bd - bd @ b
        # canonical commutator holds below the truncation edge
        assert np.allclose(np.diag(comm)[:-1], 1.0)

    def test_min_dim(self):
        with pytest.raises(InvalidInputError):
            boson_ops(1)


class TestMpo:
    def test_two_mode_dense_assembly(self, kron):
        # hand-built matrix for system + 2 modes at d = 2
        chain = ChainCoefficients(
            kappa=0.3, omega=np.array([0.5, 0.7]), t=np.array([0.25]), beta=1.0
        )
        model = ModelSpec(kind=ModelKind.IBM, omega_0=0.2)
        mpo = build_mpo(model, chain, 2, 2)
        assert mpo.bond_dim == 4
        b, bd, num = boson_ops(2)
        h_s, a_s = system_matrices(model)
        eye2, eyed = np.eye(2), np.eye(2)
        ref = kron(h_s, eyed, eyed)
        ref = ref + 0.3 * kron(a_s, b + bd, eyed)
        ref = ref + 0.5 * kron(eye2, num, eyed) + 0.7 * kron(eye2, eyed, num)
        ref = ref + 0.25 * (kron(eye2, bd, b) + kron(eye2, b, bd))
        assert np.max(np.abs(mpo_to_dense(mpo) - ref)) < 1e-13

    def test_three_mode_sbm(self, kron):
        chain = toy_chain()
        model = ModelSpec(kind=ModelKind.SBM, omega_0=0.2)
        d = 3
        mpo = build_mpo(model, chain, 3, d)
        b, bd, num = boson_ops(d)
        h_s, a_s = system_matrices(model)
        eye2, eyed = np.eye(2), np.eye(d)
        ref = kron(h_s, eyed, eyed, eyed) + 0.3 * kron(a_s, b + bd, eyed, eyed)
        for i, om in enumerate(chain.omega):
            ops = [eyed] * 3
            ops[i] = num
            ref = ref + om * kron(eye2, *ops)
        for i, t in enumerate(chain.t):
            up = [eyed] * 3
            dn = [eyed] * 3
            up[i], up[i + 1] = bd, b
            dn[i], dn[i + 1] = b, bd
            ref = ref + t * (kron(eye2, *up) + kron(eye2, *dn))
        assert np.max(np.abs(mpo_to_dense(mpo) - ref)) < 1e-13

    def test_decoupled_is_block_sum(self, kron):
        chain = ChainCoefficients(
            kappa=0.0, omega=np.array([0.5, 0.7]), t=np.array([0.25]), beta=1.0
        )
        mpo = build_mpo(ModelSpec(kind=ModelKind.IBM, omega_0=0.2), chain, 2, 2)
        dense = mpo_to_dense(mpo)
        b, bd, num = boson_ops(2)
        h_s, _ = system_matrices(ModelSpec(kind=ModelKind.IBM, omega_0=0.2))
        h_chain = (
            0.5 * kron(num, np.eye(2)) + 0.7 * kron(np.eye(2), num)
            + 0.25 * (kron(bd, b) + kron(b, bd))
        )
        ref = kron(h_s, np.eye(4)) + kron(np.eye(2), h_chain)
        assert np.max(np.abs(dense - ref)) < 1e-14

    def test_hermitian(self):
        for kind in ModelKind:
            mpo = build_mpo(ModelSpec(kind=kind), toy_chain(), 3, 3)
            dense = mpo_to_dense(mpo)
            assert np.max(np.abs(dense - dense.conj().T)) < 1e-13

    def test_requires_enough_coefficients(self):
        with pytest.raises(InvalidInputError):
            build_mpo(ModelSpec(kind=ModelKind.IBM), toy_chain(), 5, 3)


class TestMpsState:
    def test_product_state_dense(self, kron):
        ket = initial_system_state(ModelSpec(kind=ModelKind.IBM))
        psi = product_mps(ket, 3, 4, max_bond=7)
        vac = np.zeros(4)
        vac[0] = 1.0
        ref = kron(ket, vac, vac, vac)
        assert np.max(np.abs(mps_to_dense(psi) - ref)) < 1e-15
        assert psi.norm() == pytest.approx(1.0, abs=1e-13)
        for a in psi.sites[1:]:
            assert right_gauge_error(a) < 1e-14

    def test_orthogonalize_product_state_is_identity(self):
        ket = np.array([1.0, 0.0], dtype=complex)
        psi = product_mps(ket, 3, 3, max_bond=1)
        for center in range(psi.n_sites):
            moved = orthogonalize(psi, center)
            for a, b in zip(psi.sites, moved.sites):
                assert np.max(np.abs(a - b)) < 1e-15

    def test_orthogonalize_preserves_state(self, rng):
        psi = random_mps(rng, [2, 3, 3, 3], [1, 2, 4, 3, 1])
        v0 = mps_to_dense(psi)
        moved = orthogonalize(psi, 2)
        # centre normalized, norm recorded in norm_log, state vector unchanged
        assert moved.norm_log == pytest.approx(math.log(np.linalg.norm(v0)), rel=1e-12)
        assert np.max(np.abs(mps_to_dense(moved) - v0)) < 1e-12
        ov = overlap(psi, moved)
        assert abs(ov) == pytest.approx(np.linalg.norm(v0) ** 2, rel=1e-12)
        for i in range(2):
            assert left_gauge_error(moved.sites[i]) < 1e-12
        for i in (3,):
            assert right_gauge_error(moved.sites[i]) < 1e-12

    def test_orthogonalize_idempotent(self, rng):
        psi = random_mps(rng, [2, 3, 3], [1, 3, 2, 1])
        once = orthogonalize(psi, 1)
        twice = orthogonalize(once, 1)
        for a, b in zip(once.sites, twice.sites):
            assert np.max(np.abs(a - b)) < 1e-14

    def test_extend_vacuum_preserves_amplitudes(self, kron):
        ket = initial_system_state(ModelSpec(kind=ModelKind.SBM))
        psi = product_mps(ket, 2, 3, max_bond=6)
        big = extend_vacuum(psi, 4, max_bond=6)
        vac = np.zeros(3)
        vac[0] = 1.0
        ref = kron(mps_to_dense(psi), vac, vac)
        assert np.max(np.abs(mps_to_dense(big) - ref)) < 1e-14
        for a in big.sites[1:]:
            assert right_gauge_error(a) < 1e-12

    def test_extend_vacuum_after_evolution(self, rng):
        # pad evolved (non-trivial) tensors and check the state is intact
        from thermochain.tdvp import tdvp_step

        chain = ChainCoefficients(
            kappa=0.4, omega=np.array([0.5, 0.6, 0.4, 0.3]), t=np.array([0.3, 0.25, 0.2]),
            beta=1.0,
        )
        model = ModelSpec(kind=ModelKind.SBM, omega_0=0.2)
        psi = product_mps(initial_system_state(model), 2, 3, max_bond=4)
        mpo = build_mpo(model, chain, 2, 3)
        for _ in range(10):
            psi = tdvp_step(psi, mpo, 0.05)
        big = extend_vacuum(psi, 4, max_bond=4)
        small = mps_to_dense(psi).reshape(2, 3, 3)
        large = mps_to_dense(big).reshape(2, 3, 3, 3, 3)
        assert np.max(np.abs(large[..., 0, 0] - small)) < 1e-12
        assert np.max(np.abs(large[..., 1:, :])) < 1e-14
        for a in big.sites[1:]:
            assert right_gauge_error(a) < 1e-12

    def test_extend_vacuum_guards(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 3, 3, max_bond=4)
        with pytest.raises(InvalidInputError):
            extend_vacuum(psi, 2, max_bond=4)
        moved = orthogonalize(psi, 1)
        with pytest.raises(InvalidInputError):
            extend_vacuum(moved, 5, max_bond=4)


class TestKrylov:
    def test_zero_hamiltonian(self):
        v = np.arange(1.0, 5.0) + 0j
        out = krylov_apply_exp(np.zeros((4, 4)), v, 0.3)
        assert np.max(np.abs(out - v)) < 1e-14

    def test_diagonal(self, rng):
        energies = rng.uniform(-2, 2, size=50)
        v = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        dt = 0.1
        out = krylov_apply_exp(np.diag(energies), v, dt)
        ref = np.exp(-1j * energies * dt) * v
        assert np.max(np.abs(out - ref)) < 1e-12

    def test_random_hermitian_against_eigendecomposition(self, rng):
        a = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
        a = 0.5 * (a + a.conj().T)
        v = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        dt = 0.2
        evals, evecs = np.linalg.eigh(a)
        ref = evecs @ (np.exp(-1j * evals * dt) * (evecs.conj().T @ v))
        out = krylov_apply_exp(a, v, dt)
        assert np.linalg.norm(out - ref) < 1e-10

    def test_norm_preserved(self, rng):
        a = rng.standard_normal((40, 40))
        a = 0.5 * (a + a.T)
        v = rng.standard_normal(40) + 0j
        out = krylov_apply_exp(a, v, 0.7)
        assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(v), rel=1e-13)

    def test_imaginary_time(self, rng):
        a = np.diag([1.0, 2.0])
        out = krylov_apply_exp(a, np.array([1.0, 1.0 + 0j]), -0.5j)
        assert np.allclose(out, [math.exp(-0.5), math.exp(-1.0)])

    def test_nonconvergence_fails_loudly(self, rng):
        a = rng.standard_normal((400, 400))
        a = 500.0 * (a + a.T)
        v = rng.standard_normal(400) + 0j
        with pytest.raises(NumericalFailureError) as exc:
            krylov_apply_exp(a, v, 1.0, tol=1e-12, max_dim=10)
        assert exc.value.achieved > 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(InvalidInputError):
            krylov_apply_exp(np.eye(3), np.zeros(3), 0.1)


class TestContainers:
    def test_checkpoint_roundtrip(self, tmp_path, rng):
        psi = random_mps(rng, [2, 3, 3], [1, 2, 2, 1])
        psi.norm_log = 0.25
        path = tmp_path / "state.mps"
        save_checkpoint(path, psi, 4.5, extra={"step": 90})
        loaded, t, header = load_checkpoint(path)
        assert t == 4.5
        assert header["step"] == 90
        assert loaded.norm_log == 0.25
        assert loaded.ortho_center == psi.ortho_center
        for a, b in zip(psi.sites, loaded.sites):
            assert np.array_equal(a, b)

    def test_container_magic_checked(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(InvalidInputError):
            read_container(path)

    def test_generic_container(self, tmp_path, rng):
        arrays = [rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))]
        write_container(tmp_path / "c.bin", {"kind": "test"}, arrays)
        header, loaded = read_container(tmp_path / "c.bin")
        assert header["kind"] == "test"
        assert np.allclose(loaded[0], arrays[0])


def test_mpo_expectation_matches_dense(rng, kron):
    chain = toy_chain()
    model = ModelSpec(kind=ModelKind.SBM, omega_0=0.2)
    mpo = build_mpo(model, chain, 3, 3)
    psi = random_mps(rng, [2, 3, 3, 3], [1, 2, 3, 2, 1])
    v = mps_to_dense(psi)
    dense = mpo_to_dense(mpo)
    assert mpo_expectation(psi, mpo) == pytest.approx(v.conj() @ dense @ v, rel=1e-12)
