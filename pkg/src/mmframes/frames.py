"""Frame construction: primal multiscale frame, its dual via a per-level
Neumann correction operator, and a compactly supported variant built from a
band-limited surrogate symbol.
"""

from dataclasses import dataclass, field

import numpy as np

from mmframes.space import ModelSpace, NetHierarchy, build_hierarchy
from mmframes.calculus import (
    SpectralData,
    Cutoff,
    make_cutoff,
    level_window,
    _smooth_step,
    effective_support_radius,
    Kernel,
)


@dataclass(frozen=True)
class Frame:
    """Net-indexed family of functions with per-level spectral bands.

    columns[:, k] is the element attached to flat net index k.
    """

    hierarchy: NetHierarchy
    columns: np.ndarray
    kind: str  # primal | dual | compact | compact_dual
    bands: dict  # level -> (lo, hi) in sqrt(L) units (None for compact kinds)

    @property
    def size(self) -> int:
        return self.columns.shape[1]

    def analyze(self, f) -> np.ndarray:
        """Coefficients <f, psi_xi> in the mu-inner product."""
        mu = self.hierarchy.space.mu
        return self.columns.T @ (mu * np.asarray(f))

    def synthesize(self, coeffs) -> np.ndarray:
        return self.columns @ np.asarray(coeffs)


@dataclass(frozen=True)
class DualBuildReport:
    epsilon: float                 # worst sampling epsilon across levels
    gamma: float
    neumann_terms: int             # max series length over levels
    neumann_tail: float            # worst relative tail norm
    sampling_ratios: dict          # level -> (lower, upper) of the sampling form
    level_epsilons: dict           # level -> epsilon


def _band_symbol_values(spec: SpectralData, fn, j: int, b: float) -> np.ndarray:
    roots = np.sqrt(spec.eigenvalues)
    return np.asarray(fn(b ** (-j) * roots), dtype=float)


def build_frame1(spec: SpectralData, hierarchy: NetHierarchy, Phi: Cutoff) -> Frame:
    """Primal frame psi_xi = |A_xi|^{1/2} Psi_j(sqrt(L))(., xi), with
    Psi(u) = Phi(u) - Phi(b u)."""
    if Phi.kind != "a":
        raise ValueError("frame generator must be a low-pass (type a) cutoff")
    if abs(Phi.b - hierarchy.b) > 0:
        raise ValueError("hierarchy/cutoff base mismatch")
    b = hierarchy.b
    E = spec.eigenfunctions
    cols = []
    bands = {}
    for net in hierarchy.levels:
        j = net.level
        vals = _band_symbol_values(spec, Phi, j, b) - _band_symbol_values(spec, Phi, j - 1, b)
        P = (E * vals[None, :]) @ E.T
        block = P[:, net.centers] * np.sqrt(net.a_vol)[None, :]
        cols.append(block)
        bands[j] = (b ** (j - 1), b ** (j + 1))
    return Frame(hierarchy=hierarchy, columns=np.hstack(cols), kind="primal", bands=bands)


def check_sampling(spec: SpectralData, hierarchy: NetHierarchy, j: int):
    """Extremal constants of the sampling quadratic form on the spectral
    space {sqrt(lambda) <= b^{j+2}}: returns (lower, upper) with
    lower*||f||^2 <= sum |A_xi||f(xi)|^2 <= upper*||f||^2, or None when the
    spectral space is empty."""
    b = hierarchy.b
    net = hierarchy.net(j)
    sel = np.sqrt(spec.eigenvalues) <= b ** (j + 2)
    if not np.any(sel):
        return None
    Es = spec.eigenfunctions[np.ix_(net.centers, np.nonzero(sel)[0])]
    G = Es.T @ (net.a_vol[:, None] * Es)
    w = np.linalg.eigvalsh((G + G.T) / 2)
    return float(w[0]), float(w[-1])


def build_standard_hierarchy(spec: SpectralData, b: float = 2.0,
                             gamma: float = 0.5, mode: str = "homogeneous",
                             max_halvings: int = 8):
    """Hierarchy over the default spectral window with gamma auto-halved
    until every level passes the sampling check with epsilon < 1/2."""
    j_min, j_max = level_window(spec, b)
    for _ in range(max_halvings + 1):
        hier = build_hierarchy(spec.space, b, gamma, j_min, j_max, mode=mode)
        eps = {}
        ok = True
        for net in hier.levels:
            res = check_sampling(spec, hier, net.level)
            if res is None:
                continue
            lo, hi = res
            e = max(1.0 - lo, hi - 1.0)
            eps[net.level] = e
            if e >= 0.5:
                ok = False
        if ok:
            return hier, eps
        gamma /= 2.0
    raise RuntimeError("sampling epsilon < 1/2 unreachable; gamma exhausted")


def build_dual_frame(spec: SpectralData, hierarchy: NetHierarchy,
                     Phi: Cutoff, tail_tol: float = 1e-12):
    """Dual frame via the per-level correction operator.

    Per level j the band symbol G(u) = Phi(b^{-2}u) - Phi(b u) scaled to
    level j equals 1 on the primal band; with sampling weights
    w_eta = |A_eta|/(1+eps_j) the operator R = G^2 - V (V the sampled
    quadrature of G^2) has small norm, T = I + sum_k R^k inverts the
    sampling defect, and the dual elements are
    psi~_xi = |A_xi|^{1/2}/(1+eps_j) * T[G_j(., xi)].
    """
    b = hierarchy.b
    space = spec.space
    E = spec.eigenfunctions
    mu = space.mu
    cols = []
    bands = {}
    ratios, epsilons = {}, {}
    worst_terms, worst_tail = 0, 0.0

    def Gsym(u):
        return Phi(np.asarray(u) / b**2) - Phi(np.asarray(u) * b)

    for net in hierarchy.levels:
        j = net.level
        res = check_sampling(spec, hierarchy, j)
        if res is None:
            lo_hi = (1.0, 1.0)
            eps = 0.0
        else:
            lo_hi = res
            eps = max(1.0 - lo_hi[0], lo_hi[1] - 1.0)
        ratios[j] = lo_hi
        epsilons[j] = eps
        if eps >= 0.5:
            raise RuntimeError(f"sampling precondition failed at level {j}: eps={eps}")

        # scale so the plateau [1, b^2] covers the primal band [b^{j-1}, b^{j+1}]
        gvals = _band_symbol_values(spec, Gsym, j - 1, b)
        G = (E * gvals[None, :]) @ E.T
        G2 = (E * (gvals**2)[None, :]) @ E.T
        w = net.a_vol / (1.0 + eps)
        Gc = G[:, net.centers]
        V = (Gc * w[None, :]) @ Gc.T
        R = G2 - V

        # Neumann sum S = sum_{k>=1} R^k under kernel composition
        term = R.copy()
        S = np.zeros_like(R)
        first = np.linalg.norm(term)
        terms, tail = 0, 0.0
        stall = 0
        prev = first
        if first > 0:
            for k in range(1, 500):
                S += term
                terms = k
                term = term @ (mu[:, None] * R)
                cur = np.linalg.norm(term)
                tail = cur / first if first > 0 else 0.0
                if cur > 0.999 * prev:
                    stall += 1
                    if stall >= 5:
                        raise RuntimeError(
                            f"Neumann divergence at level {j}; gamma too coarse")
                else:
                    stall = 0
                prev = cur
                if tail < tail_tol:
                    break
            else:
                raise RuntimeError(f"Neumann series did not settle at level {j}")
        worst_terms = max(worst_terms, terms)
        worst_tail = max(worst_tail, tail)

        TG = Gc + S @ (mu[:, None] * Gc)
        block = TG * (np.sqrt(net.a_vol) / (1.0 + eps))[None, :]
        cols.append(block)
        bands[j] = (b ** (j - 2), b ** (j + 2))

    frame = Frame(hierarchy=hierarchy, columns=np.hstack(cols), kind="dual",
                  bands=bands)
    report = DualBuildReport(
        epsilon=max(epsilons.values()) if epsilons else 0.0,
        gamma=hierarchy.gamma, neumann_terms=worst_terms,
        neumann_tail=worst_tail, sampling_ratios=ratios,
        level_epsilons=epsilons)
    return frame, report


def check_band_containment(spec: SpectralData, frame: Frame, tol=1e-10) -> float:
    """Worst coefficient of any frame element on eigenfunctions outside its
    level band; construction should keep it at rounding level."""
    worst = 0.0
    roots = np.sqrt(spec.eigenvalues)
    coeffs = spec.eigenfunctions.T @ (spec.space.mu[:, None] * frame.columns)
    scale = np.abs(coeffs).max()
    for k in range(frame.size):
        j = frame.hierarchy.xi_level[k]
        lo, hi = frame.bands[j]
        outside = (roots < lo - 1e-12) | (roots > hi + 1e-12)
        if np.any(outside):
            worst = max(worst, float(np.abs(coeffs[outside, k]).max()))
    return worst / max(scale, 1e-300)


def check_frame_properties(spec: SpectralData, frame: Frame,
                           dual: Frame = None, p_list=(1.0, 2.0, np.inf)) -> dict:
    """Measured localization, band containment and norm comparability."""
    space = spec.space
    hier = frame.hierarchy
    b = hier.b
    out = {"kind": frame.kind}

    # (d) norm comparability against |B(xi, b^{-j})|^{1/p - 1/2}
    from mmframes.space import ball  # local import to avoid a cycle at top

    norm_bands = {}
    for p in p_list:
        ratios = []
        for k in range(frame.size):
            j = int(hier.xi_level[k])
            xi = int(hier.xi_point[k])
            vol = ball(space, xi, b ** (-j))[1]
            expo = (1.0 / p if not np.isinf(p) else 0.0) - 0.5
            ratios.append(space.lp_norm(frame.columns[:, k], p) / vol**expo)
        ratios = np.array(ratios)
        norm_bands[float(p)] = (float(ratios.min()), float(ratios.max()))
    out["norm_ratio_bands"] = norm_bands

    # (b) localization: fit |psi_xi(x)| ~ |B(xi,b^{-j})|^{-1/2} exp(-k (b^j rho)^beta)
    xs, ys = [], []
    for k in range(frame.size):
        j = int(hier.xi_level[k])
        xi = int(hier.xi_point[k])
        from mmframes.space import ball as _ball

        vol = _ball(space, xi, b ** (-j))[1]
        rel = np.abs(frame.columns[:, k]) * np.sqrt(vol)
        rho = space.dist[xi]
        mask = (rho > 0) & (rel > 1e-280) & (rel < 1.0)
        if np.any(mask):
            xs.append(np.log(b ** j * rho[mask]))
            ys.append(np.log(-np.log(rel[mask])))
    if xs:
        X = np.concatenate(xs)
        Y = np.concatenate(ys)
        beta, logk = np.polyfit(X, Y, 1)
        out["localization_fit"] = {"beta": float(beta), "kappa": float(np.exp(logk))}
    else:
        out["localization_fit"] = None

    # (c) spectral band containment
    if frame.kind in ("primal", "dual"):
        out["band_leak"] = check_band_containment(spec, frame)
    if dual is not None and dual.kind in ("primal", "dual"):
        out["dual_band_leak"] = check_band_containment(spec, dual)
    return out


def reconstruct(frame: Frame, dual: Frame, f) -> np.ndarray:
    """sum_xi <f, dual_xi> frame_xi."""
    return frame.synthesize(dual.analyze(f))


def frame_bounds_probe(frame: Frame, dual: Frame, spec: SpectralData,
                       n_samples: int = 20, seed: int = 0) -> dict:
    """Measured two-sided L2 frame bounds of the dual coefficient map on
    random mean-zero functions."""
    rng = np.random.default_rng(seed)
    space = spec.space
    lo, hi = np.inf, 0.0
    worst_resid = 0.0
    for _ in range(n_samples):
        f = spec.project_mean_zero(rng.standard_normal(space.n))
        nf = space.norm2(f)
        c = dual.analyze(f)
        quad = float(np.sum(np.abs(c) ** 2))
        lo = min(lo, quad / nf**2)
        hi = max(hi, quad / nf**2)
        r1 = space.norm2(reconstruct(frame, dual, f) - f) / nf
        r2 = space.norm2(reconstruct(dual, frame, f) - f) / nf
        worst_resid = max(worst_resid, r1, r2)
    return {"lower": lo, "upper": hi, "residual": worst_resid}


# ---------------------------------------------------------------------------
# band-limited surrogate symbol and compactly supported frame


@dataclass(frozen=True)
class ThetaSymbol:
    """Even symbol given by a cosine series over nodes in [0, R].

    Its transform is supported in [-R, R] by construction, and the jet
    correction forces derivatives at 0 to vanish through order jet_order-1,
    which keeps u^{-m} Theta band-limited for m <= jet_order.
    """

    R: float
    nodes: np.ndarray
    coeffs: np.ndarray
    jet_order: int
    eps_target: float
    eps_achieved: float
    passed: bool
    N: int
    K: int
    jet_residuals: tuple = ()

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(np.abs(u))
        out = np.cos(np.outer(u, self.nodes)) @ self.coeffs
        return float(out[0]) if scalar else out

    def deriv(self, u, nu: int):
        """Exact nu-th derivative via the cosine representation."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        phase = nu * np.pi / 2.0
        osc = np.cos(np.outer(u, self.nodes) + phase)
        return osc @ (self.coeffs * self.nodes**nu)


def _num_derivative(vals, du, nu):
    out = vals
    for _ in range(nu):
        out = np.gradient(out, du)
    return out


def build_band_limited_theta(Psi, N: int, K: int, eps: float,
                             b: float = 2.0, R0: float = 1024.0,
                             R_max: float = 4096.0,
                             Psi_derivs=None) -> ThetaSymbol:
    """Band-limited surrogate for the band symbol Psi.

    Truncates the cosine transform of Psi to [0, R] with a smooth window,
    adds a small band-limited jet correction so that derivatives at 0
    vanish through order N + K - 1, and grows R until
    |Psi^(nu) - Theta^(nu)| <= eps u^N/(1+u)^{2N} holds for nu <= K on a
    dense grid.  Returns the best attempt when the tolerance is
    unreachable below R_max (caller inspects .passed).
    """
    if not (N >= K >= 1):
        raise ValueError("need N >= K >= 1")
    jet = N + K
    u_hi = 4.0 * b
    psi_support = 1.25 * b  # band symbol vanishes beyond b
    R = R0
    best = None
    while R <= R_max:
        # integration grid for the forward transform: the integrand is a
        # smooth bump, so the trapezoid rule is spectrally accurate as long
        # as the oscillation is resolved
        du = min(0.25 / R, 2.5e-4)
        ug_f = np.arange(0.0, psi_support + du, du)
        psi_f = np.asarray(Psi(ug_f), dtype=float)
        dt = min(0.08, np.pi / (4.0 * u_hi))
        t = np.arange(0.0, R + dt, dt)
        hhat = np.empty_like(t)
        chunk = 512
        for i in range(0, len(t), chunk):
            blk = t[i:i + chunk]
            hhat[i:i + chunk] = 2.0 * (np.cos(np.outer(blk, ug_f)) @ (psi_f * du))
        win = _smooth_step((t - R / 2.0) / (R / 2.0))
        coeffs = hhat * win * dt / np.pi
        coeffs[0] *= 0.5
        coeffs[-1] *= 0.5

        # jet correction: even derivatives at 0 are (+-) sum c_k t_k^o, so
        # kill sum c_k t_k^o for even o < jet with a band-limited basis
        # (odd derivatives vanish by evenness); two extra even orders keep
        # the validated ratio from plateauing near u = 0
        orders = [2 * j for j in range((jet + 1) // 2 + 2)]
        bump = _smooth_step((np.abs(t - R / 2.0) - R / 8.0) / (R / 8.0))
        basis = np.array([(t / R) ** (2 * m) * bump for m in range(len(orders))])
        Mmat = np.array([[float(np.sum(bvec * (t / R) ** o)) for bvec in basis]
                         for o in orders])
        # refinement pass soaks up roundoff in the solve
        for _ in range(2):
            jets = np.array([float(np.sum(coeffs * (t / R) ** o)) for o in orders])
            coeffs = coeffs - np.linalg.solve(Mmat, jets) @ basis
        jet_resid = tuple(
            float(abs(np.sum(coeffs * (t / R) ** o))
                  / max(np.sum(np.abs(coeffs) * (t / R) ** o), 1e-300))
            for o in orders)

        theta = ThetaSymbol(R=R, nodes=t, coeffs=coeffs, jet_order=jet,
                            eps_target=eps, eps_achieved=np.inf, passed=False,
                            N=N, K=K, jet_residuals=jet_resid)
        # validation grid: near u = 0 the bound is covered analytically by
        # the vanishing jets (the error is O(u^{jet+4-nu}) there), so the
        # grid starts where the target envelope clears float64 noise
        ug = np.linspace(0.05, u_hi, 4000)
        dug = ug[1] - ug[0]
        psi_vals = np.asarray(Psi(ug), dtype=float)
        weight = ug**N / (1.0 + ug) ** (2 * N)
        worst = 0.0
        for nu in range(0, K + 1):
            if Psi_derivs is not None:
                ref = np.asarray(Psi_derivs[nu](ug), dtype=float)
            else:
                ref = psi_vals if nu == 0 else _num_derivative(psi_vals, dug, nu)
            diff = np.abs(theta.deriv(ug, nu) - ref)
            ratio = diff / weight
            worst = max(worst, float(ratio.max()))
        theta = ThetaSymbol(R=R, nodes=t, coeffs=coeffs, jet_order=jet,
                            eps_target=eps, eps_achieved=worst,
                            passed=worst <= eps, N=N, K=K,
                            jet_residuals=jet_resid)
        if best is None or worst < best.eps_achieved:
            best = theta
        if worst <= eps:
            return theta
        R *= 2.0
    return best


def build_compact_frame(spec: SpectralData, hierarchy: NetHierarchy,
                        theta: ThetaSymbol, threshold: float = 1e-9) -> tuple:
    """Compactly supported frame theta_xi = |A_xi|^{1/2} Theta(b^{-j}
    sqrt(L))(., xi); returns (Frame, per-level effective support radii)."""
    b = hierarchy.b
    E = spec.eigenfunctions
    cols = []
    supports = {}
    for net in hierarchy.levels:
        j = net.level
        vals = _band_symbol_values(spec, theta, j, b)
        P = (E * vals[None, :]) @ E.T
        supports[j] = effective_support_radius(
            Kernel(table=P, band=(0.0, 0.0)), spec.space, threshold)
        cols.append(P[:, net.centers] * np.sqrt(net.a_vol)[None, :])
    frame = Frame(hierarchy=hierarchy, columns=np.hstack(cols),
                  kind="compact", bands={n.level: None for n in hierarchy.levels})
    return frame, supports


@dataclass(frozen=True)
class CompactDualReport:
    perturbation_ad_norm: float
    neumann_terms: int
    duality_residual: float
    coeff_matrix: np.ndarray = field(repr=False, default=None)


def build_compact_dual(spec: SpectralData, frame1: Frame, dual: Frame,
                       compact: Frame, params, epsilon: float = 1.0,
                       delta_threshold: float = 0.5,
                       n_probe: int = 10, seed: int = 0):
    """Dual of the compact frame, computed wholly at coefficient level.

    With D_{xi,eta} = <psi_eta - theta_eta, psi~_xi> the transfer operator
    T f = sum <f, psi~_xi> theta_xi satisfies coeff((I-T)g) = D coeff(g),
    so T^{-1} comes from the Neumann inverse of A = I - D.  The dual
    coefficients are t = (A^{-1} B) s with B the primal/dual cross Gram and
    s the dual-frame coefficients of f.
    """
    from mmframes import addiag

    space = spec.space
    mu = space.mu
    hier = frame1.hierarchy
    Dm = dual.columns.T @ (mu[:, None] * (frame1.columns - compact.columns))
    pert = addiag.ad_norm(addiag.NetMatrix(hierarchy=hier, entries=Dm,
                                           params=params), epsilon)
    if pert.value >= delta_threshold:
        raise RuntimeError(
            f"compact-dual precondition failed: ||I - A||_eps = {pert.value:.3g}"
            " >= threshold; shrink eps in the band-limited symbol")
    A = addiag.NetMatrix(hierarchy=hier, entries=np.eye(hier.size) - Dm,
                         params=params)
    Ainv, inv_report = addiag.neumann_invert(A, epsilon, delta_threshold)
    B = dual.columns.T @ (mu[:, None] * frame1.columns)
    C = Ainv.entries @ B

    dual_cols = dual.columns @ C.T
    compact_dual = Frame(hierarchy=hier, columns=dual_cols, kind="compact_dual",
                         bands={n.level: None for n in hier.levels})

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probe):
        f = spec.project_mean_zero(rng.standard_normal(space.n))
        t = C @ dual.analyze(f)
        resid = space.norm2(compact.synthesize(t) - f) / space.norm2(f)
        worst = max(worst, resid)
    report = CompactDualReport(perturbation_ad_norm=pert.value,
                               neumann_terms=inv_report["terms"],
                               duality_residual=worst, coeff_matrix=C)
    return compact_dual, report


def default_frames(model_name: str, b: float = 2.0, gamma: float = 0.5,
                   mode: str = "homogeneous"):
    """One-call setup: model, spectrum, hierarchy, primal and dual frames."""
    from mmframes.space import build_model
    from mmframes.calculus import eigendecompose

    space = build_model(model_name)
    spec = eigendecompose(space)
    hier, eps = build_standard_hierarchy(spec, b=b, gamma=gamma, mode=mode)
    Phi = make_cutoff("a", b)
    frame = build_frame1(spec, hier, Phi)
    dual, report = build_dual_frame(spec, hier, Phi)
    return space, spec, hier, Phi, frame, dual, report
