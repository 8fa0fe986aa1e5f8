import math

import numpy as np
import pytest

from thermochain import (
    InvalidInputError,
    SpectralDensity,
    chain_coefficients,
    compute_chain,
    stieltjes_recurrence,
    thermalize,
    transform_kernel,
)
from thermochain.chainmap import (
    RecurrenceCoefficients,
    cached_chain,
    load_chain,
    measure_grid,
    save_chain,
)
from thermochain.spectral import adaptive_gauss


def measure_mass(Jb):
    lo, hi = Jb.measure_support
    total = adaptive_gauss(Jb, 0.0, hi)
    if lo < 0:
        total += adaptive_gauss(Jb, lo, 0.0)
    return float(np.real(total))


class TestStieltjes:
    def test_single_coefficient_is_moment_ratio(self, ohmic01):
        Jb = thermalize(ohmic01, 3.0)
        rc = stieltjes_recurrence(Jb, 1, 2000)
        mass = measure_mass(Jb)
        first = float(np.real(
            adaptive_gauss(lambda w: w * Jb(w), -1.0, 0.0)
            + adaptive_gauss(lambda w: w * Jb(w), 0.0, 1.0)
        ))
        assert rc.beta[0] == pytest.approx(mass, rel=1e-10)
        assert rc.alpha[0] == pytest.approx(first / mass, rel=1e-9)

    def test_kappa_zero_temperature(self, ohmic01):
        # analytic: integral of 2 * 0.1 * w over [0, 1] is 0.1
        rc = stieltjes_recurrence(thermalize(ohmic01, math.inf), 1, 2000)
        assert math.sqrt(rc.beta[0]) == pytest.approx(math.sqrt(0.1), abs=1e-12)

    def test_asymptotics_finite_beta(self, ohmic01):
        chain = compute_chain(thermalize(ohmic01, 2.0), 200)
        assert np.max(np.abs(chain.omega[150:])) < 1e-3
        assert np.max(np.abs(chain.t[150:] - 0.5)) < 1e-3

    def test_asymptotics_zero_temperature(self, ohmic01):
        chain = compute_chain(thermalize(ohmic01, math.inf), 200)
        assert np.max(np.abs(chain.omega[150:] - 0.5)) < 1e-3
        assert np.max(np.abs(chain.t[150:] - 0.25)) < 1e-3

    def test_node_doubling_stability(self, ohmic01):
        for beta in (2.0, math.inf):
            Jb = thermalize(ohmic01, beta)
            rc1 = stieltjes_recurrence(Jb, 100, 2000)
            rc2 = stieltjes_recurrence(Jb, 100, 4000)
            # on-site energies live on the omega_c = 1 scale; hoppings are
            # bounded away from zero, so plain relative error applies to beta_k
            assert np.max(np.abs(rc1.alpha - rc2.alpha)) < 1e-10
            assert np.max(np.abs(rc1.beta - rc2.beta) / rc2.beta) < 1e-10

    def test_jacobi_spectrum_inside_support(self, ohmic01):
        for beta, lo in ((1.0, -1.0), (math.inf, 0.0)):
            rc = stieltjes_recurrence(thermalize(ohmic01, beta), 80, 2000)
            eigs = np.linalg.eigvalsh(rc.jacobi_matrix())
            assert eigs.min() > lo - 1e-12
            assert eigs.max() < 1.0 + 1e-12

    def test_temperature_continuity(self, ohmic01):
        hot = compute_chain(thermalize(ohmic01, 1e6), 60)
        cold = compute_chain(thermalize(ohmic01, math.inf), 60)
        assert np.max(np.abs(hot.omega - cold.omega)) < 1e-6
        assert np.max(np.abs(hot.t - cold.t)) < 1e-6

    def test_preconditions(self, ohmic01):
        Jb = thermalize(ohmic01, 2.0)
        with pytest.raises(InvalidInputError):
            stieltjes_recurrence(Jb, 0, 2000)
        with pytest.raises(InvalidInputError):
            stieltjes_recurrence(Jb, 100, 300)

    def test_grid_avoids_zero(self, ohmic01):
        x, w = measure_grid(thermalize(ohmic01, 2.0), 500)
        assert np.all(x != 0.0)
        assert np.all(w >= 0.0)


class TestChainCoefficients:
    def test_relabel(self):
        rc = RecurrenceCoefficients(alpha=np.array([0.5]), beta=np.array([0.1]))
        chain = chain_coefficients(rc)
        assert chain.kappa == pytest.approx(math.sqrt(0.1))
        assert chain.omega.tolist() == [0.5]
        assert chain.t.size == 0

    def test_kappa_squared_is_total_mass(self, ohmic01):
        for beta in (0.5, 4.0, math.inf):
            Jb = thermalize(ohmic01, beta)
            chain = compute_chain(Jb, 40)
            assert chain.kappa**2 == pytest.approx(measure_mass(Jb), abs=1e-10)

    def test_hoppings_bounded_and_settle_to_half(self):
        # individual hoppings can exceed (b-a)/4 near the chain head (the
        # arcsine weight has t_1 = sqrt(1/2)); the guaranteed bounds are the
        # operator-norm bound t_n <= 1 and the t_n -> 1/2 tail, both
        # cross-checked against an independent 4x-node recomputation
        Jb = thermalize(SpectralDensity.ohmic(0.8), 1.0)
        chain = compute_chain(Jb, 300)
        fine = stieltjes_recurrence(Jb, 300, 4 * max(2000, 8 * 300))
        assert np.all(chain.t > 0)
        assert np.all(chain.t <= 1.0 + 1e-6)
        assert np.max(np.abs(chain.t[200:] - 0.5)) < 1e-3
        assert np.max(np.abs(chain.t - np.sqrt(fine.beta[1:]))) < 1e-9


class TestTransformKernel:
    def test_p0_is_inverse_kappa(self, ohmic01):
        Jb = thermalize(ohmic01, 2.0)
        rc = stieltjes_recurrence(Jb, 10, 2000)
        kern = transform_kernel(Jb, rc, nodes=500)
        jb_vals = Jb(kern.grid)
        mask = jb_vals > 1e-13
        ratio = kern.matrix[0, mask] / np.sqrt(jb_vals[mask])
        assert np.allclose(ratio, 1.0 / math.sqrt(rc.beta[0]), atol=1e-12)

    def test_discrete_orthonormality(self, ohmic01):
        Jb = thermalize(ohmic01, 2.0)
        rc = stieltjes_recurrence(Jb, 50, 2000)
        kern = transform_kernel(Jb, rc, nodes=2000)
        gram = (kern.matrix * kern.weights) @ kern.matrix.T
        assert np.max(np.abs(gram - np.eye(50))) < 1e-8

    def test_completeness_concentrates(self, ohmic01):
        # off-diagonal mass of the projector kernel decays as modes are added
        Jb = thermalize(ohmic01, 2.0)
        rc = stieltjes_recurrence(Jb, 200, 2000)
        ratios = []
        for n in (50, 200):
            kern = transform_kernel(Jb, rc, N=n, nodes=400)
            u = kern.matrix * np.sqrt(kern.weights)
            proj = u.T @ u
            far = np.abs(np.subtract.outer(kern.grid, kern.grid)) > 0.2
            off = np.mean(np.abs(proj[far]) ** 2)
            diag = np.mean(np.diag(proj) ** 2)
            ratios.append(off / diag)
        assert ratios[1] < 0.5 * ratios[0]

    def test_grid_outside_support_rejected(self, ohmic01):
        Jb = thermalize(ohmic01, 2.0)
        rc = stieltjes_recurrence(Jb, 5, 2000)
        with pytest.raises(InvalidInputError):
            transform_kernel(Jb, rc, grid=np.array([0.5, 1.5]))

    def test_kernel_needs_enough_modes(self, ohmic01):
        Jb = thermalize(ohmic01, 2.0)
        rc = stieltjes_recurrence(Jb, 5, 2000)
        with pytest.raises(InvalidInputError):
            transform_kernel(Jb, rc, N=9)


class TestCache:
    def test_save_load_roundtrip(self, tmp_path, ohmic01):
        chain = compute_chain(thermalize(ohmic01, 2.0), 25)
        path = tmp_path / "chain.csv"
        save_chain(chain, path, meta={"alpha": 0.1, "s": 1.0, "omega_c": 1.0,
                                      "nodes": 2000, "tolerance": 1e-10})
        loaded = load_chain(path)
        assert loaded.kappa == pytest.approx(chain.kappa, abs=1e-15)
        assert np.allclose(loaded.omega, chain.omega, atol=1e-15)
        assert np.allclose(loaded.t, chain.t, atol=1e-15)
        assert loaded.beta == chain.beta

    def test_cached_chain_hits(self, tmp_path, ohmic01):
        Jb = thermalize(ohmic01, math.inf)
        c1, p1, hit1 = cached_chain(Jb, 20, tmp_path)
        data1 = p1.read_bytes()
        c2, p2, hit2 = cached_chain(Jb, 20, tmp_path)
        assert (hit1, hit2) == (False, True)
        assert p1 == p2
        assert p2.read_bytes() == data1
        assert np.allclose(c1.omega, c2.omega)

    def test_sidecar_schema(self, tmp_path, ohmic01):
        import json

        Jb = thermalize(ohmic01, 2.0)
        _, path, _ = cached_chain(Jb, 12, tmp_path)
        meta = json.loads(path.with_suffix(".json").read_text())
        for key in ("alpha", "s", "omega_c", "beta", "kappa", "N", "nodes", "tolerance"):
            assert key in meta, key
