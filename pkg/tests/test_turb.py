import numpy as np
import pytest

from cubeflow.turb import (
    SpectrumSpec,
    bundled_cbc_table,
    csm_eddy_viscosity,
    energy_spectrum,
    generate_isotropic_field,
    sample_modes,
    spectrum_parseval_gap,
)


def tensor(rows):
    return np.asarray(rows, dtype=np.float64)


class TestEddyViscosity:
    def test_simple_shear_gives_zero(self):
        g = tensor([[0.0, 1.7, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        assert csm_eddy_viscosity(g[None], 0.1)[0] == pytest.approx(0.0, abs=1e-16)

    def test_solid_body_rotation_gives_zero(self):
        g = tensor([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        # rotation has unit coherence but no strain magnitude
        assert csm_eddy_viscosity(g[None], 0.1)[0] == 0.0

    def test_plane_strain_hand_value(self):
        """Hand evaluation: pure plane strain has coherence -1, coefficient
        1/20, magnitude sqrt(2) a."""
        a = 0.8
        delta = 0.3
        g = tensor([[a, 0.0, 0.0], [0.0, -a, 0.0], [0.0, 0.0, 0.0]])
        expected = (1.0 / 20.0) * delta**2 * a * np.sqrt(2.0)
        assert csm_eddy_viscosity(g[None], delta)[0] == pytest.approx(expected, rel=1e-14)

    def test_bounds_on_many_random_tensors(self):
        rng = np.random.default_rng(0)
        g = rng.normal(size=(200_000, 3, 3))
        s = 0.5 * (g + np.swapaxes(g, -1, -2))
        w = 0.5 * (g - np.swapaxes(g, -1, -2))
        ss = np.einsum("...ij,...ij->...", s, s)
        ww = np.einsum("...ij,...ij->...", w, w)
        e = 0.5 * (ww + ss)
        q = 0.5 * (ww - ss)
        f = np.where(e > 0, q / np.where(e > 0, e, 1.0), 0.0)
        assert np.all(np.abs(f) <= 1.0 + 1e-12)
        nut = csm_eddy_viscosity(g, 0.05)
        assert np.all(nut >= 0.0)

    def test_zero_gradient_gives_zero(self):
        assert csm_eddy_viscosity(np.zeros((1, 3, 3)), 1.0)[0] == 0.0

    def test_rotation_equivariance(self):
        from scipy.spatial.transform import Rotation

        rng = np.random.default_rng(3)
        for _ in range(50):
            g = rng.normal(size=(3, 3))
            r = Rotation.random(random_state=rng).as_matrix()
            g_rot = r @ g @ r.T
            a = csm_eddy_viscosity(g[None], 0.2)[0]
            b = csm_eddy_viscosity(g_rot[None], 0.2)[0]
            assert b == pytest.approx(a, rel=1e-12, abs=1e-15)


class TestModeSampling:
    def test_single_mode_orthogonality_and_divergence(self):
        spec = SpectrumSpec(np.array([1.0, 2.0]), np.array([1.0, 1.0]), n_modes=1, seed=4)
        modes = sample_modes(spec)
        assert abs(float(modes.khat[0] @ modes.sigma[0])) < 1e-14
        # analytic divergence: du_i/dx_i = -2 q k sin(phase) (khat . sigma) = 0
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(100, 3))
        h = 1e-6
        div = np.zeros(100)
        for a in range(3):
            dp = pts.copy()
            dm = pts.copy()
            dp[:, a] += h
            dm[:, a] -= h
            up = generate_isotropic_field(dp, spec, modes)
            um = generate_isotropic_field(dm, spec, modes)
            div += (up[:, a] - um[:, a]) / (2 * h)
        assert np.max(np.abs(div)) < 1e-6

    def test_amplitude_rule(self):
        # E = 4 over a band of width 0.25 with one mode: q = sqrt(E dk) = 1
        spec = SpectrumSpec(
            np.array([0.5, 1.0]), np.array([4.0, 4.0]), n_modes=1, k_min=0.5, k_max=0.75, seed=1
        )
        modes = sample_modes(spec)
        assert modes.q[0] == pytest.approx(1.0)

    def test_determinism(self):
        k, e = bundled_cbc_table()
        spec = SpectrumSpec(k, e, n_modes=64, seed=11)
        pts = np.random.default_rng(2).uniform(0, 0.5, size=(50, 3))
        u1 = generate_isotropic_field(pts, spec)
        u2 = generate_isotropic_field(pts, spec)
        assert np.array_equal(u1, u2)

    def test_orthogonality_every_mode(self):
        k, e = bundled_cbc_table()
        spec = SpectrumSpec(k, e, n_modes=512, seed=9)
        modes = sample_modes(spec)
        dots = np.abs(np.einsum("ij,ij->i", modes.khat, modes.sigma))
        assert np.max(dots) < 1e-14

    def test_empty_band_rejected(self):
        spec = SpectrumSpec(
            np.array([1.0, 2.0]), np.array([1.0, 1.0]), n_modes=4, k_min=10.0, k_max=20.0
        )
        with pytest.raises(ValueError, match="empty"):
            sample_modes(spec)


class TestEnergySpectrum:
    def test_single_fourier_mode_spike(self):
        n = 32
        box = 2.0 * np.pi
        x = (np.arange(n) + 0.5) * box / n
        u = np.zeros((3, n, n, n))
        u[0] = np.sin(2.0 * x)[:, None, None]  # k = 2 mode in x
        k, e = energy_spectrum(u, box)
        dk = k[1] - k[0]
        spike = int(np.argmax(e))
        assert k[spike] == pytest.approx(2.0)
        total = np.sum(e) * dk
        assert e[spike] * dk == pytest.approx(total, rel=1e-12)
        assert total == pytest.approx(0.25, rel=1e-12)  # mean of sin^2 / 2

    def test_white_noise_parseval(self):
        rng = np.random.default_rng(7)
        u = rng.normal(size=(3, 24, 24, 24))
        assert spectrum_parseval_gap(u, 1.0) < 0.01

    def test_sampled_field_matches_input_spectrum(self):
        """Moderate resolution version of the initializer check: shell spectrum
        of the sampled field within 20 percent of the table below Nyquist."""
        k_tab, e_tab = bundled_cbc_table()
        k_tab = k_tab * 100.0  # 1/cm -> 1/m
        e_tab = e_tab * 1e-6  # cm^3/s^2 -> m^3/s^2
        box = 9 * 2 * np.pi / 100.0
        n = 32
        dk = 2 * np.pi / box
        spec = SpectrumSpec(
            k_tab, e_tab, n_modes=2000, k_min=dk, k_max=(n // 2) * dk, seed=42
        )
        xs = (np.arange(n) + 0.5) * box / n
        pts = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
        u = generate_isotropic_field(pts, spec).T.reshape(3, n, n, n)
        k, e = energy_spectrum(u, box)
        # mid-band shells; the lowest shells carry too few modes at 32^3 for
        # 20 percent statistics (the acceptance run uses 64^3)
        lo, hi = 4, n // 2 - 2
        ref = np.interp(k[lo:hi], k_tab, e_tab)
        ratio = e[lo:hi] / ref
        assert np.all(ratio > 0.8) and np.all(ratio < 1.2)
