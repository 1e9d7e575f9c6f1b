"""Spectral functional calculus, cutoff symbols and localization checks.

Operators f(delta*sqrt(L)) are realized exactly through the eigenbasis of L
in the mu-weighted inner product.  Kernels follow the convention
(Kf)(x) = sum_y K(x,y) f(y) mu(y).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from mmframes.space import ModelSpace


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of L in the mu-inner product.

    eigenvalues ascending with eigenvalues[0] = 0; eigenfunctions stored as
    columns, mu-orthonormal.
    """

    space: ModelSpace
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # (n, n), columns e_i
    nullspace_dim: int

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_2(self) -> float:
        """Smallest nonzero eigenvalue."""
        nz = self.eigenvalues[self.eigenvalues > 1e-12 * max(1.0, self.lambda_max)]
        return float(nz[0])

    def coefficients(self, f) -> np.ndarray:
        """mu-inner products <f, e_i> for all i."""
        return self.eigenfunctions.T @ (self.space.mu * np.asarray(f))

    def synthesize(self, coeffs) -> np.ndarray:
        return self.eigenfunctions @ np.asarray(coeffs)

    def project_mean_zero(self, f) -> np.ndarray:
        """Remove the nullspace (constant) component."""
        c = self.coefficients(f)
        c[: self.nullspace_dim] = 0.0
        return self.synthesize(c)


def eigendecompose(space: ModelSpace) -> SpectralData:
    """Symmetric eigendecomposition of L in the mu-inner product.

    Symmetrizes with diag(sqrt(mu)): H = S L S^{-1} with S = diag(sqrt(mu))
    is plainly symmetric, and e_i = S^{-1} v_i are mu-orthonormal.
    """
    s = np.sqrt(space.mu)
    H = s[:, None] * space.L / s[None, :]
    H = (H + H.T) / 2.0
    w, V = eigh(H)
    w = np.where(np.abs(w) < 1e-12 * max(1.0, np.abs(w).max()), 0.0, w)
    if w[0] < 0:
        raise ValueError("negative eigenvalue: L not PSD")
    E = V / s[:, None]
    # fix signs deterministically: first nonzero component positive
    for i in range(E.shape[1]):
        col = E[:, i]
        nz = col[np.abs(col) > 1e-12 * np.abs(col).max()]
        if nz.size and nz[0] < 0:
            E[:, i] = -col
    nullspace_dim = int(np.sum(w == 0.0))
    data = SpectralData(space=space, eigenvalues=w, eigenfunctions=E,
                        nullspace_dim=nullspace_dim)
    # reconstruction guard
    R = E @ (w[:, None] * E.T) @ np.diag(space.mu)
    scale = max(1.0, np.abs(space.L).max())
    if np.abs(R - space.L).max() > 1e-9 * scale:
        raise ValueError("eigendecomposition reconstruction failed")
    return data


@dataclass(frozen=True)
class Kernel:
    """Two-point kernel acting by integration against mu."""

    table: np.ndarray
    band: tuple  # (lo, hi) in sqrt(L) units; smallest interval of live modes

    def apply(self, space: ModelSpace, f) -> np.ndarray:
        return self.table @ (space.mu * np.asarray(f))


def apply_symbol(spec: SpectralData, f, delta: float = 1.0) -> Kernel:
    """Kernel of f(delta*sqrt(L)): K = E diag(f(delta*sqrt(lam))) E^T."""
    lam = spec.eigenvalues
    vals = np.array([float(f(delta * np.sqrt(l))) for l in lam])
    E = spec.eigenfunctions
    K = (E * vals[None, :]) @ E.T
    live = np.abs(vals) > 1e-14 * max(1.0, np.abs(vals).max())
    if np.any(live):
        roots = np.sqrt(lam[live])
        band = (float(roots.min()), float(roots.max()))
    else:
        band = (0.0, 0.0)
    return Kernel(table=K, band=band)


def symbol_values(spec: SpectralData, f, delta: float = 1.0) -> np.ndarray:
    return np.array([float(f(delta * np.sqrt(l))) for l in spec.eigenvalues])


def apply_symbol_to(spec: SpectralData, f, g, delta: float = 1.0) -> np.ndarray:
    """f(delta*sqrt(L)) g without forming the kernel table."""
    vals = symbol_values(spec, f, delta)
    return spec.synthesize(vals * spec.coefficients(g))


def apply_L_power(spec: SpectralData, g, m: int, mod_nullspace=False) -> np.ndarray:
    """L^m g; negative m requires mod_nullspace and a mean-zero g."""
    c = spec.coefficients(g)
    lam = spec.eigenvalues
    out = np.zeros_like(c)
    nz = lam > 0
    if m < 0:
        if not mod_nullspace:
            raise ValueError("negative powers need mod_nullspace")
        null_mass = np.abs(c[~nz]).max() if np.any(~nz) else 0.0
        if null_mass > 1e-10 * max(1.0, np.abs(c).max()):
            raise ValueError("negative power on a function with nullspace component")
        out[nz] = lam[nz] ** m * c[nz]
    else:
        out[nz] = lam[nz] ** m * c[nz]
        out[~nz] = c[~nz] if m == 0 else 0.0
    return spec.synthesize(out)


# ---------------------------------------------------------------------------
# cutoff symbols


def _smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)

    def g(u):
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            return np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)

    a, bq = g(1.0 - t), g(t)
    return a / (a + bq)


@dataclass(frozen=True)
class Cutoff:
    kind: str  # "a" | "b" | "c"
    b: float
    _fn: object = field(repr=False, default=None)

    def __call__(self, u):
        return self._fn(np.abs(u))


def make_cutoff(kind: str, b: float = 2.0) -> Cutoff:
    """Closed-form smooth cutoffs.

    (a) low-pass: 1 on [0,1], smooth transition on (1,b), 0 beyond.
    (b) band-pass: phi(u) = Phi(u) - Phi(b*u), supported in [1/b, b].
    (c) band-pass with sum_j |phi(b^{-j} t)|^2 = 1 on (0, inf), obtained by
        normalizing the type (b) bump against its dyadic quadratic sum.
    """
    if b <= 1:
        raise ValueError("base must exceed 1")

    def low(u):
        u = np.abs(np.asarray(u, dtype=float))
        return _smooth_step((u - 1.0) / (b - 1.0))

    if kind == "a":
        return Cutoff(kind="a", b=b, _fn=low)

    def band(u):
        return low(u) - low(np.asarray(u, dtype=float) * b)

    if kind == "b":
        return Cutoff(kind="b", b=b, _fn=band)
    if kind == "c":

        def norm_band(u):
            u = np.atleast_1d(np.abs(np.asarray(u, dtype=float)))
            out = np.zeros_like(u)
            pos = u > 0
            if np.any(pos):
                up = u[pos]
                total = np.zeros_like(up)
                # only levels with b^{-j} u in (1/b, b) contribute
                jlo = np.floor(np.log(up.min()) / np.log(b)) - 2
                jhi = np.ceil(np.log(up.max()) / np.log(b)) + 2
                for j in np.arange(jlo, jhi + 1):
                    total += band(b ** (-j) * up) ** 2
                out[pos] = band(up) / np.sqrt(total)
            return out if out.shape != (1,) else float(out[0])

        return Cutoff(kind="c", b=b, _fn=norm_band)
    raise ValueError("kind must be 'a', 'b' or 'c'")


def lowpass_derivatives(b: float, max_order: int):
    """Analytic derivatives of the type (a) cutoff, via symbolic
    differentiation of the transition bump; returns callables for orders
    0..max_order."""
    import sympy

    u = sympy.symbols("u")
    t = (u - 1) / (b - 1)

    def g(x):
        return sympy.exp(-1 / x)

    expr = g(1 - t) / (g(1 - t) + g(t))
    lams = [np.vectorize(sympy.lambdify(u, sympy.diff(expr, u, k), "numpy"))
            for k in range(max_order + 1)]

    def make(k):
        fk = lams[k]

        def f(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            out = np.zeros_like(x)
            if k == 0:
                out[x <= 1.0] = 1.0
            inside = (x > 1.0 + 1e-9) & (x < b - 1e-9)
            if np.any(inside):
                with np.errstate(all="ignore"):
                    vals = np.asarray(fk(x[inside]), dtype=float)
                out[inside] = np.nan_to_num(vals, nan=0.0, posinf=0.0,
                                            neginf=0.0)
            return out

        return f

    return [make(k) for k in range(max_order + 1)]


def band_derivatives(b: float, max_order: int):
    """Analytic derivatives of the band symbol Phi(u) - Phi(b*u)."""
    low = lowpass_derivatives(b, max_order)

    def make(k):
        fk = low[k]

        def f(x):
            x = np.asarray(x, dtype=float)
            return fk(x) - b**k * fk(b * x)

        return f

    return [make(k) for k in range(max_order + 1)]


# ---------------------------------------------------------------------------
# level window and telescoping


def level_window(spec: SpectralData, b: float = 2.0) -> tuple:
    """Default window [j_min, j_max] covering the nonzero spectrum:
    j_max = ceil(log_b sqrt(lambda_max)) + 1, j_min = floor(log_b
    sqrt(lambda_2)) - 1."""
    logb = np.log(b)
    j_max = int(np.ceil(np.log(np.sqrt(spec.lambda_max)) / logb)) + 1
    j_min = int(np.floor(np.log(np.sqrt(spec.lambda_2)) / logb)) - 1
    return j_min, j_max


def telescope(spec: SpectralData, Phi: Cutoff, b: float, window, f) -> np.ndarray:
    """Windowed multiscale sum: sum_j Psi(b^{-j} sqrt(L)) f with
    Psi(u) = Phi(u) - Phi(b u); equals the mean-zero part of f when the
    window covers the nonzero spectrum."""
    j_min, j_max = window
    lam = np.sqrt(spec.eigenvalues)
    total = np.zeros(len(lam))
    for j in range(j_min, j_max + 1):
        total += Phi(b ** (-j) * lam) - Phi(b ** (-j + 1) * lam)
    return spec.synthesize(total * spec.coefficients(f))


# ---------------------------------------------------------------------------
# localization / finite-speed measurements


def measure_localization(kernel: Kernel, delta: float, N, space: ModelSpace) -> dict:
    """Effective localization constants A_N_eff = max over (x,y) of
    |K(x,y)| * sqrt(|B(x,delta)| |B(y,delta)|) * (1 + rho/delta)^N,
    for a ladder of decay orders N."""
    from mmframes.space import ball_volumes

    vols = ball_volumes(space, delta)
    vb = np.sqrt(vols[:, None] * vols[None, :])
    out = {}
    for order in np.atleast_1d(N):
        w = (1.0 + space.dist / delta) ** float(order)
        out[float(order)] = float(np.abs(kernel.table * vb * w).max())
    return out


def holder_profile(kernel: Kernel, delta: float, space: ModelSpace) -> float:
    """Worst ratio |K(x,y) - K(x,y')| / (rho(y,y')/delta) over pairs with
    rho(y,y') <= delta, normalized by the kernel sup."""
    K = np.abs(kernel.table)
    kmax = K.max()
    if kmax == 0:
        return 0.0
    worst = 0.0
    n = space.n
    for y in range(n):
        close = np.nonzero((space.dist[y] <= delta) & (space.dist[y] > 0))[0]
        for yp in close:
            diff = np.abs(kernel.table[:, y] - kernel.table[:, yp]).max()
            worst = max(worst, diff / (space.dist[y, yp] / delta) / kmax)
    return worst


def fit_speed_constant(spec: SpectralData, times=(0.5, 1.0, 2.0)) -> float:
    """Calibrate the propagation constant c_tilde from the heat kernel.

    Fits the Gaussian envelope |p_t(x,y)| <= C exp(-c_star rho^2 / t) as a
    lower envelope of t*(-log relative kernel)/rho^2 and returns
    c_tilde = 1 / (2 sqrt(c_star)).
    """
    space = spec.space
    cstars = []
    for t in times:
        K = apply_symbol(spec, lambda u: np.exp(-(u**2)), delta=np.sqrt(t)).table
        rel = np.abs(K) / np.abs(K).max()
        mask = (space.dist > 0) & (rel > 1e-280) & (rel < 1.0)
        if not np.any(mask):
            continue
        vals = t * (-np.log(rel[mask])) / space.dist[mask] ** 2
        cstars.append(float(vals.min()))
    if not cstars:
        return 1.0
    c_star = min(cstars)
    return 1.0 / (2.0 * np.sqrt(c_star))


def effective_support_radius(kernel: Kernel, space: ModelSpace,
                             threshold: float = 1e-9) -> float:
    """Largest rho(x,y) with |K(x,y)| > threshold * max|K|."""
    K = np.abs(kernel.table)
    kmax = K.max()
    if kmax == 0:
        return 0.0
    live = K > threshold * kmax
    return float(space.dist[live].max())


def check_finite_speed(spec: SpectralData, kernel: Kernel, R: float,
                       delta: float, c_tilde: float = None,
                       threshold: float = 1e-9) -> dict:
    """Support check for a certified band-limited symbol: the kernel of
    f(delta*sqrt(L)) should be 1e-9-supported within c_tilde * delta * R."""
    if R is None:
        raise ValueError("symbol lacks a certified band limit")
    if c_tilde is None:
        c_tilde = fit_speed_constant(spec)
    radius = effective_support_radius(kernel, spec.space, threshold)
    bound = c_tilde * delta * R
    return {
        "radius": radius,
        "bound": bound,
        "c_tilde": c_tilde,
        "passed": bool(radius <= bound or bound >= spec.space.diameter),
    }
