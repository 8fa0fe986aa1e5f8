import math

import numpy as np
import pytest

from thermochain import (
    InvalidInputError,
    ModelKind,
    ModelSpec,
    bath_spectrum,
    build_mpo,
    chain_correlation_matrix,
    chain_occupations,
    decay_time,
    initial_system_state,
    measure_local,
    peak_ratio,
    peak_ratio_slope,
    physical_occupation,
    product_mps,
    thermalize,
)
from thermochain import SpectralDensity, mps_to_dense, stieltjes_recurrence, transform_kernel
from thermochain.chainmap import ChainCoefficients
from thermochain.models import PAULI
from thermochain.observables import (
    BathSpectrum,
    load_correlation,
    save_correlation,
    site_expectations,
    vacuum_deviations,
)
from thermochain.tensor import MpsState, boson_ops
from thermochain.tdvp import tdvp_step


def bond1_mps(local_states):
    sites = []
    for vec in local_states:
        a = np.zeros((1, len(vec), 1), dtype=complex)
        a[0, :, 0] = vec
        sites.append(a)
    return MpsState(sites=sites, ortho_center=0)


def evolved_state(n_steps=60, d=4):
    chain = ChainCoefficients(
        kappa=0.35, omega=np.array([0.45, 0.6, 0.3]), t=np.array([0.3, 0.22]), beta=1.0
    )
    model = ModelSpec(kind=ModelKind.SBM, omega_0=0.2)
    psi = product_mps(initial_system_state(model), 3, d, max_bond=64)
    mpo = build_mpo(model, chain, 3, d)
    for _ in range(n_steps):
        psi = tdvp_step(psi, mpo, 0.05)
    return psi


class TestMeasureLocal:
    def test_vacuum_number_zero(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 3, 4, max_bond=4)
        _, _, num = boson_ops(4)
        for site in (1, 2, 3):
            assert measure_local(psi, num, site) == pytest.approx(0.0, abs=1e-14)

    def test_sigma_z_up(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 2, 3, max_bond=4)
        assert measure_local(psi, PAULI["z"], 0).real == pytest.approx(1.0)

    def test_identity_on_random_state(self, rng):
        psi = evolved_state()
        eye = np.eye(psi.sites[2].shape[1])
        assert measure_local(psi, eye, 2).real == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 2, 3, max_bond=4)
        with pytest.raises(InvalidInputError):
            measure_local(psi, np.eye(4), 1)
        with pytest.raises(InvalidInputError):
            measure_local(psi, np.eye(3), 9)

    def test_sweep_matches_single_site(self):
        psi = evolved_state()
        _, _, num = boson_ops(4)
        swept = site_expectations(psi, {i: num for i in (1, 2, 3)})
        for i in (1, 2, 3):
            assert swept[i] == pytest.approx(measure_local(psi, num, i), abs=1e-12)

    def test_vacuum_deviation_vanishes_on_vacuum(self):
        psi = product_mps(np.array([1, 1], dtype=complex) / math.sqrt(2), 4, 3, max_bond=4)
        assert np.max(vacuum_deviations(psi)) < 1e-14


class TestCorrelationMatrix:
    def test_vacuum_gives_zero(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 4, 3, max_bond=4)
        cmat = chain_correlation_matrix(psi)
        assert np.max(np.abs(cmat)) < 1e-14

    def test_single_excitation_rank_one(self):
        vac = [1.0, 0.0, 0.0]
        one = [0.0, 1.0, 0.0]
        psi = bond1_mps([[1.0, 0.0], vac, one, vac])
        cmat = chain_correlation_matrix(psi)
        expected = np.zeros((3, 3))
        expected[1, 1] = 1.0
        assert np.max(np.abs(cmat - expected)) < 1e-14

    def test_matches_dense_contraction(self, kron):
        psi = evolved_state()
        d = 4
        cmat = chain_correlation_matrix(psi)
        v = mps_to_dense(psi)
        b, bd, _ = boson_ops(d)
        eye2, eyed = np.eye(2), np.eye(d)
        nrm = (v.conj() @ v).real
        for i in range(3):
            for j in range(3):
                ops_i = [eyed] * 3
                ops_i[i] = bd
                ops_j = [eyed] * 3
                ops_j[j] = b
                op = kron(eye2, *ops_i) @ kron(eye2, *ops_j)
                ref = (v.conj() @ op @ v) / nrm
                assert cmat[i, j] == pytest.approx(ref, abs=1e-10)

    def test_hermitian_psd(self):
        cmat = chain_correlation_matrix(evolved_state())
        assert np.max(np.abs(cmat - cmat.conj().T)) < 1e-10
        assert np.linalg.eigvalsh(0.5 * (cmat + cmat.conj().T)).min() > -1e-10

    def test_diagonal_matches_occupations(self):
        psi = evolved_state()
        occ = chain_occupations(psi)
        cmat = chain_correlation_matrix(psi)
        assert np.allclose(np.diag(cmat).real, occ, atol=1e-10)

    def test_mode_range_validated(self):
        psi = product_mps(np.array([1, 0], dtype=complex), 3, 3, max_bond=4)
        with pytest.raises(InvalidInputError):
            chain_correlation_matrix(psi, sites=range(0, 5))


class TestBathSpectrum:
    @staticmethod
    def kernel(beta=2.0, n=30, nodes=600):
        Jb = thermalize(SpectralDensity.ohmic(0.1), beta)
        rc = stieltjes_recurrence(Jb, n, 2000)
        return transform_kernel(Jb, rc, nodes=nodes)

    def test_zero_matrix(self):
        kern = self.kernel()
        spec = bath_spectrum(np.zeros((30, 30), dtype=complex), kern)
        assert np.max(np.abs(spec.n_omega)) == 0.0

    def test_sum_rule(self, rng):
        kern = self.kernel()
        m = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
        cmat = m @ m.conj().T / 30
        spec = bath_spectrum(cmat, kern)
        assert spec.occupation_integral() == pytest.approx(np.trace(cmat).real, abs=1e-6)

    def test_size_mismatch(self):
        kern = self.kernel(n=5)
        with pytest.raises(InvalidInputError):
            bath_spectrum(np.zeros((9, 9)), kern)

    def test_csv_roundtrip(self, tmp_path, rng):
        kern = self.kernel(n=8, nodes=100)
        m = rng.standard_normal((8, 8))
        spec = physical_occupation(bath_spectrum(m @ m.T / 8, kern))
        spec.to_csv(tmp_path / "spec.csv")
        loaded = BathSpectrum.from_csv(tmp_path / "spec.csv")
        assert np.allclose(loaded.omegas, spec.omegas)
        assert np.allclose(loaded.n_omega, spec.n_omega)
        both = ~np.isnan(spec.n_thermal)
        assert np.allclose(loaded.n_thermal[both], spec.n_thermal[both])


class TestPhysicalOccupation:
    @staticmethod
    def symmetric_grid(n=101):
        half = np.linspace(0.01, 1.0, n)
        return np.concatenate([-half[::-1], half])

    def test_symmetric_spectrum_cancels(self):
        w = self.symmetric_grid()
        spec = BathSpectrum(omegas=w, n_omega=np.exp(-(w**2)))
        out = physical_occupation(spec)
        pos = w > 0
        assert np.max(np.abs(out.n_thermal[pos])) < 1e-14

    def test_zero_temperature_passthrough(self):
        w = self.symmetric_grid()
        n = np.where(w > 0, np.exp(-((w - 0.2) ** 2) / 0.01), 0.0)
        out = physical_occupation(BathSpectrum(omegas=w, n_omega=n))
        pos = w > 0
        assert np.allclose(out.n_thermal[pos], n[pos], atol=1e-14)

    def test_asymmetric_grid_rejected(self):
        spec = BathSpectrum(omegas=np.array([-0.5, 0.1, 0.7]), n_omega=np.zeros(3))
        with pytest.raises(InvalidInputError):
            physical_occupation(spec)


class TestPeakRatio:
    def test_one_sided_spectrum_has_no_negative_peak(self):
        w = np.linspace(-1, 1, 201)
        n = np.where(w > 0, np.exp(-((w - 0.17) ** 2) / 0.002), 0.0)
        pr = peak_ratio(BathSpectrum(omegas=w, n_omega=n))
        assert pr.omega_neg is None and pr.ratio is None
        assert pr.omega_pos == pytest.approx(0.17, abs=1e-3)

    def test_planted_peaks_recover_unit_slope(self):
        # heights chosen so (n_+ + 1)/n_- = e^2 at beta = 2
        w = np.linspace(-1, 1, 401)
        n_neg = 1.0
        n_pos = n_neg * math.exp(2.0) - 1.0
        n = n_pos * np.exp(-((w - 0.3) ** 2) / 0.005) + n_neg * np.exp(-((w + 0.3) ** 2) / 0.005)
        pr = peak_ratio(BathSpectrum(omegas=w, n_omega=n))
        assert pr.ratio == pytest.approx(math.exp(2.0), rel=1e-3)
        slope, _, _ = peak_ratio_slope([2.0], [pr.ratio], through_origin=True)
        assert slope == pytest.approx(1.0, abs=1e-3)

    def test_quadratic_refinement_beats_grid(self):
        w = np.linspace(-1, 1, 81)  # coarse: spacing 0.025
        n = np.exp(-((w - 0.171) ** 2) / 0.01)
        pr = peak_ratio(BathSpectrum(omegas=w, n_omega=n))
        assert abs(pr.omega_pos - 0.171) < 5e-4

    def test_slope_fit_with_intercept(self):
        betas = np.array([2.0, 4.0, 6.0, 10.0])
        ratios = np.exp(0.118 * betas)
        slope, intercept, r2 = peak_ratio_slope(betas, ratios)
        assert slope == pytest.approx(0.118, abs=1e-12)
        assert r2 > 0.999999


def test_decay_time_on_synthetic():
    t = np.linspace(0, 100, 2001)
    v = np.exp(-0.2 * t)
    dt = decay_time(t, v, tol=1e-4, window=5.0)
    # |dv/dt| = 0.2 exp(-0.2 t) < 1e-4 from t ~ 38
    assert dt == pytest.approx(38.0, abs=1.5)
    assert decay_time(t, np.sin(0.3 * t), tol=1e-4, window=5.0) is None


def test_correlation_container_roundtrip(tmp_path, rng):
    cmat = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    save_correlation(tmp_path / "c.bin", cmat, 12.5)
    loaded, t = load_correlation(tmp_path / "c.bin")
    assert t == 12.5
    assert np.allclose(loaded, cmat)
