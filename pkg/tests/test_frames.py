import numpy as np
import pytest

from mmframes import calculus as ca
from mmframes import frames as fr


def test_standard_hierarchy_sampling_epsilons(hierarchies):
    for name in ("C_64", "T_8x8"):
        hier, eps = hierarchies[name]
        assert max(eps.values()) < 0.5
        assert set(eps) == {net.level for net in hier.levels}


def test_frame1_requires_lowpass_cutoff(spectra, hierarchies):
    hier, _ = hierarchies["C_64"]
    with pytest.raises(ValueError):
        fr.build_frame1(spectra["C_64"], hier, ca.make_cutoff("b", 2.0))


def test_frame_analysis_synthesis_shapes(frame_sets, spectra):
    frame, dual, _ = frame_sets["C_64"]
    f = spectra["C_64"].project_mean_zero(np.arange(64.0))
    c = frame.analyze(f)
    assert c.shape == (frame.hierarchy.size,)
    assert frame.synthesize(c).shape == (64,)


def test_two_sided_reconstruction(frame_sets, spectra):
    for name in ("C_64", "T_8x8"):
        frame, dual, _ = frame_sets[name]
        spec = spectra[name]
        rng = np.random.default_rng(7)
        for _ in range(20):
            f = spec.project_mean_zero(rng.standard_normal(spec.space.n))
            nf = spec.space.norm2(f)
            r1 = spec.space.norm2(fr.reconstruct(frame, dual, f) - f)
            r2 = spec.space.norm2(fr.reconstruct(dual, frame, f) - f)
            assert max(r1, r2) <= 1e-9 * nf


def test_dual_bands_exact(frame_sets, spectra):
    for name in ("C_64", "T_8x8"):
        _, dual, _ = frame_sets[name]
        leak = fr.check_band_containment(spectra[name], dual)
        assert leak <= 1e-10


def test_frame_bounds_probe_finite(frame_sets, spectra):
    frame, dual, _ = frame_sets["C_64"]
    probe = fr.frame_bounds_probe(frame, dual, spectra["C_64"])
    assert 0 < probe["lower"] <= probe["upper"] < np.inf
    assert probe["residual"] <= 1e-9


def test_frame_column_norms_track_ball_volumes(frame_sets, spectra):
    # the edge levels of the hierarchy carry zero columns (their bands
    # miss the finite spectrum), so compare norms on the interior only
    frame, _, _ = frame_sets["C_64"]
    spec = spectra["C_64"]
    hier = frame.hierarchy
    from mmframes.space import ball
    norms = np.linalg.norm(frame.columns, axis=0)
    live = norms > 1e-12
    assert live.any() and not live.all()
    for p in (1.0, 2.0):
        ratios = []
        for k in np.nonzero(live)[0]:
            j = int(hier.xi_level[k])
            xi = int(hier.xi_point[k])
            vol = ball(spec.space, xi, hier.b ** (-j))[1]
            ratios.append(spec.space.lp_norm(frame.columns[:, k], p)
                          / vol ** (1.0 / p - 0.5))
        ratios = np.array(ratios)
        assert 0 < ratios.min() <= ratios.max() < np.inf
        assert ratios.max() / ratios.min() < 50.0


def test_dual_report_contents(frame_sets):
    _, _, report = frame_sets["C_64"]
    assert report.neumann_tail <= 1e-10
    assert max(report.sampling_ratios) is not None


# ---------------------------------------------------------------------------
# band-limited surrogate symbol


def test_theta_reproduces_band_symbol(theta, Phi):
    u = np.linspace(0.05, 8.0, 500)
    psi = Phi(u) - Phi(2.0 * u)
    err = np.abs(theta(u) - psi)
    weight = u**theta.N / (1.0 + u) ** (2 * theta.N)
    assert (err / weight).max() <= theta.eps_target


def test_theta_jets_vanish(theta):
    assert abs(theta(0.0)) < 1e-12
    assert max(theta.jet_residuals) < 1e-12


def test_theta_derivative_matches_finite_difference(theta):
    u = np.linspace(0.5, 3.0, 101)
    h = 1e-5
    num = (theta(u + h) - theta(u - h)) / (2 * h)
    assert np.abs(theta.deriv(u, 1) - num).max() < 1e-5


def test_theta_transform_band_is_certified(theta):
    assert theta.nodes.max() <= theta.R
    assert theta.passed
    assert theta.eps_achieved <= theta.eps_target


def test_theta_rejects_bad_orders(Phi):
    Psi = lambda u: Phi(u) - Phi(np.asarray(u) * 2.0)
    with pytest.raises(ValueError):
        fr.build_band_limited_theta(Psi, N=1, K=2, eps=1e-3)


# ---------------------------------------------------------------------------
# compact frame and its dual


def test_compact_frame_supports_within_speed_bound(compact_pipeline,
                                                   spectra, theta):
    _, supports, _, _ = compact_pipeline
    spec = spectra["C_64"]
    ct = ca.fit_speed_constant(spec)
    for j, r in supports.items():
        bound = ct * theta.R * 2.0 ** (-j)
        assert r <= bound or bound >= spec.space.diameter


def test_compact_dual_reconstructs(compact_pipeline, spectra):
    compact, _, cdual, report = compact_pipeline
    assert report.perturbation_ad_norm < 0.5
    assert report.duality_residual <= 1e-6
    spec = spectra["C_64"]
    rng = np.random.default_rng(11)
    f = spec.project_mean_zero(rng.standard_normal(64))
    t = cdual.analyze(f)
    recon = compact.synthesize(t)
    assert spec.space.norm2(recon - f) <= 1e-6 * spec.space.norm2(f)


def test_default_frames_one_call():
    space, spec, hier, Phi, frame, dual, report = fr.default_frames("C_32")
    f = spec.project_mean_zero(np.sin(np.arange(32.0)))
    r = spec.space.norm2(fr.reconstruct(frame, dual, f) - f)
    assert r <= 1e-9 * spec.space.norm2(f)
