"""Molecule and atom validators, Gram almost-diagonality, molecular
synthesis/analysis operators and the atomic decomposition.

A molecule family is a set of functions indexed by the hierarchy, one per
net center, obeying localized size, smoothness (powers of L) and
cancellation (L^{+-k} factorization) bounds.  Validators measure the
smallest constant making each bound hold, exhaustively over all centers
and points; atoms additionally carry a compact-support certificate.
"""

from dataclasses import dataclass, field

import numpy as np

from mmframes.space import NetHierarchy
from mmframes.calculus import SpectralData
from mmframes.seqspace import SpaceParams, seq_norm, function_norm


# ---------------------------------------------------------------------------
# order bookkeeping


@dataclass(frozen=True)
class MoleculeOrders:
    """Integer orders governing the molecule conditions.

    K drives the cancellation factorization, N the smoothness order; each
    is None when the corresponding condition is void at these parameters.
    M_threshold is the strict lower bound for the admissible decay rate.
    """

    flavor: str                  # classical | tilde
    J: float
    K: int
    N: int
    K_void: bool
    N_void: bool
    M_threshold: float
    smoothness_cap: float        # largest s for which cancellation applies
    boundary_agreement: bool = True

    def __post_init__(self):
        if self.K is not None and self.K < 0:
            raise ValueError("negative order K")
        if self.N is not None and self.N < 0:
            raise ValueError("negative order N")


def compute_orders(params: SpaceParams, flavor: str = "classical") -> MoleculeOrders:
    """Exact integer orders for the molecule conditions.

    classical: K = floor((J-s)/2)+1 for s <= J, N = floor(s/2)+1 for
    s >= 0, decay must exceed J.  tilde: the cancellation cap becomes
    J*d/dstar, K switches formula at s = 0, and decay must exceed J+|s|.
    """
    if flavor not in ("classical", "tilde"):
        raise ValueError("flavor must be classical or tilde")
    s, J, d = params.s, params.J, params.d
    boundary = True
    if flavor == "classical":
        cap = J
        K_void = s > cap
        K = int(np.floor((J - s) / 2.0)) + 1 if not K_void else None
        thresh = J
    else:
        cap = J * d / params.dstar if params.dstar > 0 else np.inf
        K_void = s > cap
        if K_void:
            K = None
        elif s < 0:
            K = int(np.floor((J - s) / 2.0)) + 1
        else:
            K = int(np.floor((J - s * params.dstar / d) / 2.0)) + 1
        # at s = 0 the two K branches must coincide
        k_neg_limit = int(np.floor((J - 0.0) / 2.0)) + 1
        k_pos_limit = int(np.floor((J - 0.0 * params.dstar / d) / 2.0)) + 1
        boundary = k_neg_limit == k_pos_limit
        thresh = J + abs(s)
    N_void = s < 0
    N = int(np.floor(s / 2.0)) + 1 if not N_void else None
    return MoleculeOrders(flavor=flavor, J=J, K=K, N=N, K_void=K_void,
                          N_void=N_void, M_threshold=thresh,
                          smoothness_cap=cap, boundary_agreement=boundary)


# ---------------------------------------------------------------------------
# validators


@dataclass(frozen=True)
class MoleculeCertificate:
    flavor: str            # synthesis | analysis
    space_flavor: str      # classical | tilde
    orders: MoleculeOrders
    M: float
    constants: dict
    passed: bool
    budget: float
    companion: np.ndarray = field(repr=False, default=None)
    factorization_residual: float = 0.0


def _as_columns(family, hier: NetHierarchy) -> np.ndarray:
    cols = np.asarray(family, dtype=float)
    if cols.shape != (hier.space.n, hier.size):
        raise ValueError("family must be an (n, hierarchy size) column table")
    return cols


def _envelope(hier: NetHierarchy, decay: float) -> np.ndarray:
    """(n, size) table of |B_xi|^{-1/2} (1 + rho(x,xi)/l(xi))^{-decay}."""
    rho = hier.space.dist[:, hier.xi_point]
    ell = hier.xi_ell[None, :]
    return hier.xi_bvol[None, :] ** -0.5 * (1.0 + rho / ell) ** (-decay)


def _L_power_columns(spec: SpectralData, cols: np.ndarray, m: int) -> np.ndarray:
    """L^m applied to every column; negative m inverts on the mean-zero
    part and requires each column to be mean-zero."""
    c = spec.eigenfunctions.T @ (spec.space.mu[:, None] * cols)
    lam = spec.eigenvalues
    nz = lam > 0
    if m < 0:
        null_mass = np.abs(c[~nz]).max() if np.any(~nz) else 0.0
        if null_mass > 1e-10 * max(1.0, np.abs(c).max()):
            raise ValueError(
                "negative power of L on a family with nullspace component")
    out = np.zeros_like(c)
    out[nz] = lam[nz, None] ** m * c[nz]
    return spec.eigenfunctions @ out


def _worst_constant(cols, env, mask=None) -> float:
    R = np.abs(cols) / env
    if mask is not None:
        R = R[:, mask]
        if R.size == 0:
            return 0.0
    return float(R.max())


def validate_molecule(family, hier: NetHierarchy, flavor: str,
                      space_flavor: str, params: SpaceParams,
                      spec: SpectralData, M: float, companions=None,
                      budget: float = 1.0,
                      inhomogeneous: bool = False) -> MoleculeCertificate:
    """Smallest constants making the molecule bounds hold for the family.

    flavor selects synthesis or analysis conditions; space_flavor selects
    the classical or tilde order rules.  Cancellation companions default
    to spectral negative powers of L applied to the family (requires
    mean-zero columns); pass companions explicitly for adversarial tests.
    In inhomogeneous mode the cancellation condition is skipped for
    centers at level 0.
    """
    if flavor not in ("synthesis", "analysis"):
        raise ValueError("flavor must be synthesis or analysis")
    orders = compute_orders(params, space_flavor)
    if not (M > orders.M_threshold):
        raise ValueError("decay rate must exceed the flavor threshold")
    cols = _as_columns(family, hier)
    s = params.s
    decay = M if flavor == "synthesis" else M + params.d
    env = _envelope(hier, decay)
    ell2 = hier.xi_ell[None, :] ** 2

    constants = {"size": _worst_constant(cols, env)}
    companion = None
    fact_resid = 0.0

    # which centers the cancellation condition applies to
    canc_mask = np.ones(hier.size, dtype=bool)
    if inhomogeneous:
        canc_mask = hier.xi_level != 0

    if flavor == "synthesis":
        # smoothness in L up to order N when s >= 0
        if not orders.N_void:
            worst = 0.0
            g = cols
            lo = 1 if space_flavor == "classical" else 0
            for nu in range(orders.N + 1):
                if nu >= lo:
                    worst = max(worst, _worst_constant(g * ell2**nu, env))
                if nu < orders.N:
                    g = _L_power_columns(spec, g, 1)
            constants["smoothness"] = worst
        # cancellation through L^K when s is below the cap
        canc_applies = (not orders.K_void) if space_flavor == "classical" \
            else (not orders.K_void and s >= 0)
        if canc_applies:
            K = orders.K
            if companions is None:
                companion = _L_power_columns(spec, cols, -K)
            else:
                companion = _as_columns(companions, hier)
            rebuilt = _L_power_columns(spec, companion, K)
            scale = max(1.0, np.abs(cols).max())
            fact_resid = float(np.abs(rebuilt - cols)[:, canc_mask].max()
                               / scale) if canc_mask.any() else 0.0
            worst = 0.0
            g = companion
            hi = K - 1 if space_flavor == "classical" else K
            for nu in range(hi + 1):
                worst = max(worst,
                            _worst_constant(g / ell2 ** (K - nu), env,
                                            canc_mask))
                if nu < hi:
                    g = _L_power_columns(spec, g, 1)
            constants["companion_size"] = worst
    else:
        # analysis: smoothness up to order K when s is below the cap
        if not orders.K_void:
            worst = 0.0
            g = cols
            for nu in range(orders.K + 1):
                worst = max(worst, _worst_constant(g * ell2**nu, env))
                if nu < orders.K:
                    g = _L_power_columns(spec, g, 1)
            constants["smoothness"] = worst
        # cancellation through L^N when s >= 0
        if not orders.N_void:
            N = orders.N
            if companions is None:
                companion = _L_power_columns(spec, cols, -N)
            else:
                companion = _as_columns(companions, hier)
            rebuilt = _L_power_columns(spec, companion, N)
            scale = max(1.0, np.abs(cols).max())
            fact_resid = float(np.abs(rebuilt - cols)[:, canc_mask].max()
                               / scale) if canc_mask.any() else 0.0
            worst = 0.0
            g = companion
            for nu in range(N + 1):
                worst = max(worst,
                            _worst_constant(g / ell2 ** (N - nu), env,
                                            canc_mask))
                if nu < N:
                    g = _L_power_columns(spec, g, 1)
            constants["companion_size"] = worst

    passed = all(c <= budget for c in constants.values()) and \
        fact_resid <= 1e-9
    return MoleculeCertificate(flavor=flavor, space_flavor=space_flavor,
                               orders=orders, M=M, constants=constants,
                               passed=passed, budget=budget,
                               companion=companion,
                               factorization_residual=fact_resid)


def scaling_for_budget(cert: MoleculeCertificate) -> float:
    """The largest c such that scaling the family by c passes the budget."""
    worst = max(cert.constants.values())
    return np.inf if worst == 0 else cert.budget / worst


# ---------------------------------------------------------------------------
# Gram matrices


def gram(synth_family, anal_family, hier: NetHierarchy,
         params: SpaceParams, deltas=None):
    """Cross Gram a_{xi,eta} = <m_eta, m~_xi>_mu with a decay certificate.

    Scans a delta grid and reports the smallest measured c with
    |a_{xi,eta}| <= c omega_{xi,eta}(delta), together with the delta
    attaining it.  Returns (NetMatrix, certificate dict).
    """
    from mmframes import addiag

    ms = _as_columns(synth_family, hier)
    ma = _as_columns(anal_family, hier)
    mu = hier.space.mu
    A = addiag.NetMatrix(hierarchy=hier, entries=ma.T @ (mu[:, None] * ms),
                         params=params)
    if deltas is None:
        deltas = (0.125, 0.25, 0.5, 1.0, 2.0)
    best = None
    scan = {}
    for delta in deltas:
        c = addiag.ad_norm(A, delta).value
        scan[delta] = c
        if best is None or c < best[1]:
            best = (delta, c)
    cert = {"delta": best[0], "c": best[1], "scan": scan,
            "passed": np.isfinite(best[1])}
    return A, cert


# ---------------------------------------------------------------------------
# synthesis / analysis operators


def molecular_synthesis(t, family, hier: NetHierarchy, params: SpaceParams,
                        spec: SpectralData, phi, b: float = 2.0,
                        window=None):
    """f = sum_xi t_xi m_xi with the measured norm ratio
    ||f||_F / ||t||_f."""
    cols = _as_columns(family, hier)
    t = np.asarray(t, dtype=float)
    if t.shape != (hier.size,):
        raise ValueError("coefficient sequence does not match the hierarchy")
    f = cols @ t
    tn = seq_norm(t, params, hier)
    fn = function_norm(f, params, spec, phi, b, window)
    ratio = 0.0 if tn == 0 else fn / tn
    return f, {"function_norm": fn, "seq_norm": tn, "ratio": ratio}


def molecular_analysis(f, anal_family, frame, dual, hier: NetHierarchy,
                       params: SpaceParams, spec: SpectralData, phi,
                       b: float = 2.0, window=None):
    """Coefficients <f, m~_xi> through the frame expansion
    sum_eta <m~_xi, psi_eta> <f, psi~_eta>, with the measured ratio
    ||coeffs||_f / ||f||_F.

    On a finite model the expansion collapses to the direct mu-inner
    product for mean-zero f; the residual between the two is reported.
    """
    cols = _as_columns(anal_family, hier)
    mu = hier.space.mu
    f = spec.project_mean_zero(np.asarray(f, dtype=float))
    A = cols.T @ (mu[:, None] * frame.columns)    # <m~_xi, psi_eta>
    s = dual.analyze(f)                           # <f, psi~_eta>
    coeffs = A @ s
    direct = cols.T @ (mu * f)
    scale = max(1.0, np.abs(direct).max())
    identity_residual = float(np.abs(coeffs - direct).max() / scale)
    fn = function_norm(f, params, spec, phi, b, window)
    cn = seq_norm(coeffs, params, hier)
    ratio = 0.0 if fn == 0 else cn / fn
    return coeffs, {"seq_norm": cn, "function_norm": fn, "ratio": ratio,
                    "identity_residual": identity_residual}


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class AtomCertificate:
    K: int
    K_tilde: int
    constants: dict
    support_constant: float
    support_radii: dict
    passed: bool
    budget: float
    companion: np.ndarray = field(repr=False, default=None)


def minimal_atom_orders(params: SpaceParams) -> tuple:
    """(K, K~) lower bounds for the atom factorization and smoothness."""
    K = max(int(np.floor((params.J - params.s) / 2.0)) + 1, 0)
    Kt = max(int(np.floor(params.s / 2.0)) + 2, 0)
    return K, Kt


def validate_atoms(family, hier: NetHierarchy, params: SpaceParams,
                   spec: SpectralData, K: int = None, K_tilde: int = None,
                   budget: float = 1.0, support_threshold: float = 1e-9,
                   companions=None) -> AtomCertificate:
    """Atom certificate: factorization through L^K, plain (undecayed) size
    bounds for powers of L, and the compact-support constant.

    The support constant is the smallest c with every effective support
    (relative threshold support_threshold) inside c B_xi.
    """
    K_min, Kt_min = minimal_atom_orders(params)
    K = K_min if K is None else K
    K_tilde = Kt_min if K_tilde is None else K_tilde
    if K < K_min or K_tilde < Kt_min:
        raise ValueError("orders below the admissible thresholds")
    cols = _as_columns(family, hier)
    ell2 = hier.xi_ell[None, :] ** 2
    base = hier.xi_bvol[None, :] ** -0.5

    constants = {}
    worst = 0.0
    g = cols
    for n in range(K_tilde + 1):
        worst = max(worst, _worst_constant(g * ell2**n, base))
        if n < K_tilde:
            g = _L_power_columns(spec, g, 1)
    constants["smoothness"] = worst

    if K > 0:
        if companions is None:
            companion = _L_power_columns(spec, cols, -K)
        else:
            companion = _as_columns(companions, hier)
    else:
        companion = cols.copy()
    rebuilt = _L_power_columns(spec, companion, K) if K > 0 else companion
    fact_resid = float(np.abs(rebuilt - cols).max()
                       / max(1.0, np.abs(cols).max()))

    worst = 0.0
    supp_c = 0.0
    radii = {}
    dist = hier.space.dist
    g = companion
    for nu in range(K + 1):
        worst = max(worst, _worst_constant(g / ell2 ** (K - nu), base))
        gmax = np.abs(g).max(axis=0)
        level_worst = {}
        for net in hier.levels:
            sl = hier.level_slice(net.level)
            rmax = 0.0
            for k, center in enumerate(net.centers):
                col = np.abs(g[:, sl][:, k])
                tol = support_threshold * max(gmax[sl][k], 1e-300)
                live = col > tol
                if live.any():
                    r = float(dist[live, center].max())
                    rmax = max(rmax, r)
                    supp_c = max(supp_c, r / net.delta)
            level_worst[net.level] = rmax
        radii[nu] = level_worst
        if nu < K:
            g = _L_power_columns(spec, g, 1)
    constants["companion_size"] = worst

    passed = all(c <= budget for c in constants.values()) and \
        fact_resid <= 1e-9
    return AtomCertificate(K=K, K_tilde=K_tilde, constants=constants,
                           support_constant=supp_c, support_radii=radii,
                           passed=passed, budget=budget, companion=companion)


def atomic_decompose(f, compact, compact_dual, hier: NetHierarchy,
                     params: SpaceParams, spec: SpectralData, phi,
                     b: float = 2.0, window=None, cstar: float = None,
                     atom_cert: AtomCertificate = None):
    """f = sum_xi t_xi a_xi with atoms a_xi = cstar theta_xi from the
    compact frame and t_xi = <f, theta~_xi> / cstar.

    Reports the reconstruction residual and both measured norm constants
    ||t||_f / ||f||_F and ||sum t a|| / ||t||.
    """
    fv = spec.project_mean_zero(np.asarray(f, dtype=float))
    space = spec.space
    raw = compact_dual.analyze(fv)
    recon = compact.synthesize(raw)
    nf = space.norm2(fv)
    residual = 0.0 if nf == 0 else float(space.norm2(recon - fv) / nf)
    if cstar is None:
        if atom_cert is not None:
            worst = max(atom_cert.constants.values())
            cstar = atom_cert.budget / worst if worst > 0 else 1.0
        else:
            cstar = 1.0
    t = raw / cstar
    atoms = compact.columns * cstar
    fn = function_norm(fv, params, spec, phi, b, window)
    tn = seq_norm(t, params, hier)
    report = {
        "residual": residual,
        "cstar": cstar,
        "analysis_constant": 0.0 if fn == 0 else tn / fn,
        "synthesis_constant": 0.0 if tn == 0 else
        function_norm(atoms @ t, params, spec, phi, b, window) / tn,
    }
    return t, atoms, report
