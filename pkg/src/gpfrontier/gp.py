"""Gaussian-process regression of the occupancy surface.

Two regression paths share one rational-quadratic kernel on (azimuth,
elevation) inputs, with the azimuth difference measured along the chord
2 sin(d/2) so the kernel is periodic and positive definite:

* :func:`full_gp_predict` is the dense O(n^3) posterior, used as a
  reference and for small problems.
* :func:`fit` trains a sparse variational model with m inducing inputs by
  maximizing the collapsed evidence lower bound

      F = log N(y | 0, Q_nn + sn2 I) - tr(K_nn - Q_nn) / (2 sn2),
      Q_nn = K_nm K_mm^-1 K_mn,

  over log hyperparameters and inducing positions with L-BFGS-B and
  analytic gradients. Everything is expressed through K_mn and m x m
  factorizations; no n x n matrix is ever formed.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.linalg import cholesky, solve_triangular

from .surface import OccupancySurface, SurfaceConfig, wrap_angle

log = logging.getLogger(__name__)

LOG2PI = math.log(2.0 * math.pi)

# Relative jitter ladder for Cholesky factorizations: fractions of the mean
# diagonal, escalated until the factorization succeeds.
JITTER_START = 1e-9
JITTER_MAX = 1e-4


class ModelFitError(RuntimeError):
    """Raised when training or a factorization cannot be completed."""


@dataclass(frozen=True)
class KernelParams:
    """Rational-quadratic kernel hyperparameters, all strictly positive.

    sigma2:    signal variance
    len_theta: azimuth lengthscale [rad], applied to the chordal distance
    len_alpha: elevation lengthscale [rad]
    alpha_rq:  scale-mixture exponent; larger approaches squared-exponential
    """

    sigma2: float = 1.0
    len_theta: float = 0.1
    len_alpha: float = 0.1
    alpha_rq: float = 1.0

    def __post_init__(self):
        for name in ("sigma2", "len_theta", "len_alpha", "alpha_rq"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


def rq_kernel(x, xp, params: KernelParams) -> float:
    """Kernel value for two (theta, alpha) inputs.

    The azimuth difference enters through the chord length 2 sin(d_theta / 2),
    which is periodic by construction and keeps the kernel positive definite
    for every hyperparameter setting (the geodesic distance does not).
    """
    cth = 2.0 * math.sin(0.5 * (x[0] - xp[0]))
    dal = x[1] - xp[1]
    s = (cth / params.len_theta) ** 2 + (dal / params.len_alpha) ** 2
    return params.sigma2 * (1.0 + s / (2.0 * params.alpha_rq)) ** (-params.alpha_rq)


def rq_kernel_matrix(X1, X2, params: KernelParams) -> np.ndarray:
    """Cross-covariance matrix for (p, 2) and (q, 2) input arrays."""
    return _kernel_cache(np.asarray(X1), np.asarray(X2), params)["K"]


def _kernel_cache(X1, X2, params: KernelParams, want_grad: bool = False) -> dict:
    """Kernel matrix plus, on request, the intermediates its derivatives use.

    The scaled squared distance is assembled as one rank-5 matrix product
    (chord^2 = 2 - 2 cos dtheta expanded over cos/sin features), which is an
    order of magnitude cheaper than broadcasting trigonometry over p x q.
    ``dzth`` is d(chord^2)/d(theta_1) / 2 = sin(theta_1 - theta_2), the factor
    the inducing-input gradients need.
    """
    th1, al1 = X1[:, 0], X1[:, 1]
    th2, al2 = X2[:, 0], X2[:, 1]
    c1, s1 = np.cos(th1), np.sin(th1)
    c2, s2 = np.cos(th2), np.sin(th2)
    wt = 2.0 / params.len_theta**2
    wa = 1.0 / params.len_alpha**2
    F1 = np.column_stack([c1, s1, al1 * al1, al1, np.ones_like(al1)])
    F2 = np.column_stack(
        [-wt * c2, -wt * s2, wa * np.ones_like(al2), -2.0 * wa * al2,
         wt + wa * al2 * al2]
    )
    s = F1 @ F2.T
    np.maximum(s, 0.0, out=s)
    logb = np.log1p(s / (2.0 * params.alpha_rq))
    K = params.sigma2 * np.exp(-params.alpha_rq * logb)
    out = {"K": K, "s": s, "logb": logb}
    if want_grad:
        sal = (al1[:, None] - al2[None, :]) ** 2 * wa
        out["sth"] = np.maximum(s - sal, 0.0)
        out["dzth"] = np.outer(s1, c2) - np.outer(c1, s2)
        out["dal"] = al1[:, None] - al2[None, :]
    return out


def _chol_jitter(M: np.ndarray, relative: bool = True):
    """Lower Cholesky factor of M, escalating diagonal jitter on failure.

    Returns (L, jitter_added). With ``relative=False`` the first attempt adds
    no jitter at all (used for matrices that already carry a noise diagonal).
    """
    m = M.shape[0]
    if m == 0:
        return np.empty((0, 0)), 0.0
    scale = float(np.trace(M)) / m
    ladder = [JITTER_START]
    while ladder[-1] < JITTER_MAX:
        ladder.append(ladder[-1] * 10.0)
    if not relative:
        ladder = [0.0] + ladder
    for frac in ladder:
        jit = frac * scale
        try:
            L = cholesky(M + jit * np.eye(m), lower=True, check_finite=False)
            return L, jit
        except np.linalg.LinAlgError:
            continue
    raise ModelFitError(
        f"Cholesky failed for {m}x{m} matrix even with jitter {JITTER_MAX * scale:.3e}"
    )


def full_gp_predict(surface: OccupancySurface, kernel: KernelParams, noise_var: float, query):
    """Dense GP posterior at (q, 2) query inputs.

    Returns (mean, var) where var is the predictive variance of a new
    observation, i.e. the latent variance plus noise_var.
    """
    if noise_var <= 0:
        raise ValueError("noise_var must be > 0")
    query = np.atleast_2d(np.asarray(query, dtype=float))
    if surface.n == 0:
        prior = np.full(query.shape[0], kernel.sigma2 + noise_var)
        return np.zeros(query.shape[0]), prior
    # Same stabilizing diagonal as the sparse path, so the two posteriors
    # agree to rounding when the inducing set equals the training set.
    Knn = rq_kernel_matrix(surface.inputs, surface.inputs, kernel)
    Knn += (JITTER_START * kernel.sigma2 + noise_var) * np.eye(surface.n)
    L, _ = _chol_jitter(Knn, relative=False)
    Kqn = rq_kernel_matrix(query, surface.inputs, kernel)
    alpha = solve_triangular(L, surface.targets, lower=True, check_finite=False)
    alpha = solve_triangular(L.T, alpha, lower=False, check_finite=False)
    mean = Kqn @ alpha
    W = solve_triangular(L, Kqn.T, lower=True, check_finite=False)
    var = kernel.sigma2 - np.einsum("ij,ij->j", W, W) + noise_var
    return mean, np.maximum(var, 0.0)


def exact_log_marginal(surface: OccupancySurface, kernel: KernelParams, noise_var: float) -> float:
    """Dense log marginal likelihood log N(y | 0, K_nn + sn2 I)."""
    if surface.n == 0:
        return 0.0
    Knn = rq_kernel_matrix(surface.inputs, surface.inputs, kernel)
    L, _ = _chol_jitter(Knn + noise_var * np.eye(surface.n), relative=False)
    a = solve_triangular(L, surface.targets, lower=True, check_finite=False)
    return float(
        -0.5 * surface.n * LOG2PI - np.sum(np.log(np.diag(L))) - 0.5 * a @ a
    )


@dataclass(frozen=True)
class FitConfig:
    """Training budget and shape of the sparse model.

    num_inducing:      target inducing count m; reduced to n when n < m
    max_iters:         L-BFGS-B iteration budget
    rel_tol:           relative ELBO improvement below which training stops
    optimize_inducing: also move inducing inputs, not just hyperparameters
    """

    num_inducing: int = 400
    max_iters: int = 30
    rel_tol: float = 1e-6
    optimize_inducing: bool = True

    def __post_init__(self):
        if self.num_inducing < 1:
            raise ValueError("num_inducing must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass(frozen=True)
class VsgpModel:
    """Trained sparse model with everything prediction needs.

    kernel, noise_var: optimized hyperparameters
    inducing:          (m, 2) inducing inputs inside the surface domain
    elbo_trace:        bound value at the initial point and after each
                       accepted optimizer step (non-decreasing)
    converged:         True when training stopped on tolerance rather than
                       on the iteration budget
    mean_w:            (m,) weights; posterior mean at x is k(x, Z) @ mean_w
    white_prior:       (m, m) right-multiplier whitening k(x, Z) against
                       K_mm, for the variance reduction term
    white_post:        (m, m) same, against the optimized posterior
    """

    kernel: KernelParams
    noise_var: float
    inducing: np.ndarray
    elbo_trace: np.ndarray
    converged: bool
    mean_w: np.ndarray = field(repr=False, default=None)
    white_prior: np.ndarray = field(repr=False, default=None)
    white_post: np.ndarray = field(repr=False, default=None)
    var_mat: np.ndarray = field(repr=False, default=None)

    @property
    def num_inducing(self) -> int:
        return self.inducing.shape[0]

    def predict(self, X):
        """Posterior mean and predictive variance (noise included) at (q, 2) inputs.

        Variance per query point is

            sigma2 - |k_x K_mm^-1/2|^2 + |k_x (posterior)^-1/2|^2 + noise_var

        which collapses to the prior when there are no inducing points. The
        two quadratic forms are folded into one matrix (``var_mat``) so the
        grid-sized product happens once.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.num_inducing == 0:
            prior = np.full(X.shape[0], self.kernel.sigma2 + self.noise_var)
            return np.zeros(X.shape[0]), prior
        Kxm = rq_kernel_matrix(X, self.inducing, self.kernel)
        mean = Kxm @ self.mean_w
        if self.var_mat is not None:
            reduce = np.einsum("ij,ij->i", Kxm @ self.var_mat, Kxm)
        else:
            U = Kxm @ self.white_prior
            W = Kxm @ self.white_post
            reduce = np.einsum("ij,ij->i", W, W) - np.einsum("ij,ij->i", U, U)
        var = self.kernel.sigma2 + reduce + self.noise_var
        return mean, np.maximum(var, 0.0)


def _elbo_core(y, Kmn, Kmm_jit, noise_var):
    """Shared factorization work for the bound and its gradients.

    Returns the bound value and the intermediates gradient assembly uses.
    """
    n = y.shape[0]
    sn2 = noise_var
    L, _ = _chol_jitter(Kmm_jit, relative=False)
    m = L.shape[0]
    Linv = solve_triangular(L, np.eye(m), lower=True, check_finite=False)
    V = Linv @ Kmn
    A = V @ V.T
    B = np.eye(m) + A / sn2
    LB = cholesky(B, lower=True, check_finite=False)
    LBinv = solve_triangular(LB, np.eye(m), lower=True, check_finite=False)
    Binv = LBinv.T @ LBinv
    Vy = V @ y
    cvec = LBinv @ Vy
    trA = float(np.trace(A))
    tr_gap = n * Kmm_jit[0, 0] - trA if m else 0.0  # tr(K_nn - Q_nn), k(x,x) = diag
    yy = float(y @ y)
    F = (
        -0.5 * n * LOG2PI
        - float(np.sum(np.log(np.diag(LB))))
        - 0.5 * n * math.log(sn2)
        - 0.5 * yy / sn2
        + 0.5 * float(cvec @ cvec) / sn2**2
        - tr_gap / (2.0 * sn2)
    )
    return F, dict(
        Linv=Linv, V=V, A=A, Binv=Binv, LBinv=LBinv, Vy=Vy,
        trA=trA, tr_gap=tr_gap, n=n,
    )


def elbo(surface: OccupancySurface, model: VsgpModel) -> float:
    """Collapsed bound of ``model`` on ``surface`` (0.0 for empty data)."""
    if surface.n == 0:
        return 0.0
    kp = model.kernel
    Kmn = rq_kernel_matrix(model.inducing, surface.inputs, kp)
    Kmm = rq_kernel_matrix(model.inducing, model.inducing, kp)
    Kmm_jit = Kmm + JITTER_START * kp.sigma2 * np.eye(model.num_inducing)
    F, _ = _elbo_core(surface.targets, Kmn, Kmm_jit, model.noise_var)
    if not np.isfinite(F):
        raise ModelFitError(
            f"non-finite bound: kernel={kp}, noise_var={model.noise_var}"
        )
    return F


def _pack(kp: KernelParams, sn2: float, Z: np.ndarray, with_z: bool) -> np.ndarray:
    head = np.log([kp.sigma2, sn2, kp.len_theta, kp.len_alpha, kp.alpha_rq])
    if not with_z:
        return head
    return np.concatenate([head, Z[:, 0], Z[:, 1]])


def _unpack(phi: np.ndarray, m: int, with_z: bool, Z_fixed: np.ndarray):
    kp = KernelParams(
        sigma2=math.exp(phi[0]),
        len_theta=math.exp(phi[2]),
        len_alpha=math.exp(phi[3]),
        alpha_rq=math.exp(phi[4]),
    )
    sn2 = math.exp(phi[1])
    if with_z:
        Z = np.column_stack([phi[5 : 5 + m], phi[5 + m :]])
    else:
        Z = Z_fixed
    return kp, sn2, Z


def _elbo_grad(X, y, Z, kp: KernelParams, sn2: float, want_z: bool):
    """Bound value and gradient wrt (log hypers, inducing coordinates).

    Gradient layout matches :func:`_pack`. The jitter added to K_mm scales
    with sigma2, so d(K_mm + jit I)/d log sigma2 is the jittered matrix
    itself and the jitter needs no special-casing in the chain rule.
    """
    m = Z.shape[0]
    cm = _kernel_cache(Z, X, kp, want_grad=True)
    cz = _kernel_cache(Z, Z, kp, want_grad=True)
    Kmm_jit = cz["K"] + JITTER_START * kp.sigma2 * np.eye(m)
    F, core = _elbo_core(y, cm["K"], Kmm_jit, sn2)
    Linv, V, A, Binv = core["Linv"], core["V"], core["A"], core["Binv"]
    n, trA = core["n"], core["trA"]

    # r = (Q_nn + sn2 I)^-1 y via Woodbury; all dense work stays m x m or m x n.
    BinvVy = Binv @ core["Vy"]
    r = (y - (V.T @ BinvVy) / sn2) / sn2
    Pr = Linv.T @ (V @ r)
    ABinv = A @ Binv
    G1t = (Linv.T @ ABinv) @ V / sn2**2 + np.outer(Pr, r)  # dF/dK_mn
    Gmm = -0.5 * (Linv.T @ (ABinv @ A) @ Linv) / sn2**2 - 0.5 * np.outer(Pr, Pr)

    def chain(G, cache, jittered_K=None):
        K = cache["K"]
        E = G * (K if jittered_K is None else jittered_K)
        H = G * K / (1.0 + cache["s"] / (2.0 * kp.alpha_rq))  # K / base
        e_s = float(np.sum(H * cache["s"]))
        e_sth = float(np.sum(H * cache["sth"]))
        g_sig = float(np.sum(E))
        g_lth = e_sth
        g_lal = e_s - e_sth
        g_a = float(np.sum(E * (-kp.alpha_rq * cache["logb"]))) + 0.5 * e_s
        gz_th = -np.sum(H * cache["dzth"], axis=1) / kp.len_theta**2
        gz_al = -np.sum(H * cache["dal"], axis=1) / kp.len_alpha**2
        return np.array([g_sig, g_lth, g_lal, g_a]), gz_th, gz_al

    h_mn, zth_mn, zal_mn = chain(G1t, cm)
    h_mm, zth_mm, zal_mm = chain(Gmm, cz, jittered_K=Kmm_jit)

    # Scalars contract the full double sum over K_mm entries; only the
    # per-row inducing gradients need the symmetry factor of two.
    g_hyp = h_mn + h_mm
    g_hyp[0] += -n * kp.sigma2 / (2.0 * sn2)  # diagonal of K_nn in the trace gap
    tr_BinvA = float(np.sum(Binv * A))
    trGinv = (n - tr_BinvA / sn2) / sn2
    dF_dsn2 = -0.5 * trGinv + 0.5 * float(r @ r) + core["tr_gap"] / (2.0 * sn2**2)
    grad = np.empty(5 + (2 * m if want_z else 0))
    grad[0] = g_hyp[0]
    grad[1] = sn2 * dF_dsn2
    grad[2:5] = g_hyp[1:]
    if want_z:
        grad[5 : 5 + m] = zth_mn + 2.0 * zth_mm
        grad[5 + m :] = zal_mn + 2.0 * zal_mm
    return F, grad


def _init_params(y: np.ndarray, config: SurfaceConfig) -> tuple[KernelParams, float]:
    # Starting with a generous noise floor keeps the trace penalty mild on
    # the first iterations, which reliably avoids the everything-is-noise
    # local optimum; the lengthscales start near typical obstacle widths.
    var_y = float(np.var(y)) if y.size else 1.0
    sig2 = max(var_y, 1e-6)
    return (
        KernelParams(
            sigma2=sig2,
            len_theta=max(0.15, 10.0 * config.res_theta),
            len_alpha=max(0.10, 2.0 * config.res_alpha),
            alpha_rq=1.0,
        ),
        max(0.1 * var_y, 1e-6),
    )


def fit(
    surface: OccupancySurface,
    config: FitConfig = FitConfig(),
    warm_start: tuple[KernelParams, float] | None = None,
) -> VsgpModel:
    """Train a sparse model on one occupancy surface.

    Inducing inputs start as an even subsample of the (sorted) training
    inputs; hyperparameters start from ``warm_start`` when given, which is
    how consecutive scans of the same environment reuse structure. The whole
    procedure is deterministic in (surface, config, warm_start).
    """
    t0 = time.perf_counter()
    scfg = surface.config
    if warm_start is not None:
        kp0, sn20 = warm_start
    else:
        kp0, sn20 = _init_params(surface.targets, scfg)

    if surface.n == 0:
        return VsgpModel(
            kernel=kp0,
            noise_var=sn20,
            inducing=np.empty((0, 2)),
            elbo_trace=np.array([0.0]),
            converged=True,
        )

    X, y = surface.inputs, surface.targets
    n = surface.n
    m = min(config.num_inducing, n)
    Z0 = X[(np.floor((np.arange(m) + 0.5) * n / m)).astype(int)].copy()

    with_z = config.optimize_inducing
    phi0 = _pack(kp0, sn20, Z0, with_z)
    # The noise floor scales with the data: letting noise_var collapse to an
    # absolute epsilon makes B so ill-conditioned that the bound evaluates to
    # garbage (huge spurious positives) and the optimizer chases it.
    sn2_floor = max(1e-6, 1e-5 * float(np.mean(y * y)))
    bounds = [
        (math.log(1e-8), math.log(1e4)),   # sigma2
        (math.log(sn2_floor), math.log(1e3)),  # noise_var
        # Azimuth lengthscales beyond ~17 deg let the model interpolate
        # confidently across unobserved gaps, flattening the variance
        # contrast the frontier stage depends on; the cap is a structural
        # prior on angular detail, not a numerical necessity.
        (math.log(1e-4), math.log(0.3)),   # len_theta
        (math.log(1e-4), math.log(1e2)),   # len_alpha
        (math.log(1e-3), math.log(1e3)),   # alpha_rq
    ]
    if with_z:
        bounds += [(-math.pi, math.pi)] * m
        bounds += [(scfg.alpha_min, scfg.alpha_max)] * m
    if config.max_iters > 0:
        # Pull the start point inside the box so the search begins feasible.
        # A frozen refit (max_iters=0) must evaluate exactly at the point it
        # was given, so the box does not apply there.
        phi0 = np.clip(phi0, [b[0] for b in bounds], [b[1] for b in bounds])

    trace: list[float] = []
    last_f = {"val": math.nan}

    def objective(phi):
        kp, sn2, Z = _unpack(phi, m, with_z, Z0)
        try:
            F, g = _elbo_grad(X, y, Z, kp, sn2, with_z)
        except ModelFitError:
            return 1e12, np.zeros_like(phi)
        # The bound can never exceed -n/2 log(2 pi sn2): log det B, the
        # quadratic form and the trace gap are all nonnegative. A computed
        # value above that is cancellation garbage from an ill-conditioned
        # corner of the search space, so back the line search off instead
        # of letting the optimizer chase it.
        cap = -0.5 * n * math.log(2.0 * math.pi * sn2)
        if not np.isfinite(F) or F > cap + 1e-6 or not np.all(np.isfinite(g)):
            return 1e12, np.zeros_like(phi)
        last_f["val"] = F
        return -F, -g

    def on_step(_phi):
        trace.append(last_f["val"])
        log.debug("fit_iter iter=%d elbo=%.6f", len(trace) - 1, trace[-1])

    if config.max_iters == 0:
        # L-BFGS-B still takes one step under maxiter=0, so bypass it; the
        # final factorization below both validates and caches this point.
        res = optimize.OptimizeResult(x=phi0, status=0)
    else:
        kp0_, sn20_, Z0_ = _unpack(phi0, m, with_z, Z0)
        try:
            f0, _ = _elbo_core(
                y, rq_kernel_matrix(Z0_, X, kp0_),
                rq_kernel_matrix(Z0_, Z0_, kp0_)
                + JITTER_START * kp0_.sigma2 * np.eye(m),
                sn20_,
            )
        except ModelFitError:
            f0 = math.nan
        if not np.isfinite(f0) or f0 > -0.5 * n * math.log(2.0 * math.pi * sn20_) + 1e-6:
            raise ModelFitError(f"bound not finite at the initial point (n={n}, m={m})")
        trace.append(f0)
        res = optimize.minimize(
            objective,
            phi0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            callback=on_step,
            options={"maxiter": config.max_iters, "ftol": config.rel_tol, "maxls": 20},
        )
    kp, sn2, Z = _unpack(res.x, m, with_z, Z0)
    converged = bool(res.status == 0)

    # One factorization at the accepted point both records the final bound
    # value and caches everything prediction needs.
    Kmn = rq_kernel_matrix(Z, X, kp)
    Kmm_jit = rq_kernel_matrix(Z, Z, kp) + JITTER_START * kp.sigma2 * np.eye(m)
    F_final, core = _elbo_core(y, Kmn, Kmm_jit, sn2)
    if not np.isfinite(F_final) or F_final > -0.5 * n * math.log(2.0 * math.pi * sn2) + 1e-6:
        raise ModelFitError(f"bound not finite at the fitted point (n={n}, m={m})")
    if not trace or F_final != trace[-1]:
        trace.append(F_final)
    Linv, V, Binv, LBinv = core["Linv"], core["V"], core["Binv"], core["LBinv"]
    mean_w = Linv.T @ (Binv @ core["Vy"]) / sn2

    white_prior = Linv.T
    white_post = Linv.T @ LBinv.T
    model = VsgpModel(
        kernel=kp,
        noise_var=sn2,
        inducing=Z,
        elbo_trace=np.asarray(trace),
        converged=converged,
        mean_w=mean_w,
        white_prior=white_prior,
        white_post=white_post,
        var_mat=white_post @ white_post.T - white_prior @ white_prior.T,
    )
    log.info(
        "fit n=%d m=%d iters=%d elbo=%.3f converged=%s wall_ms=%.1f",
        n, m, len(trace) - 1, trace[-1], converged,
        1e3 * (time.perf_counter() - t0),
    )
    return model


@dataclass(frozen=True)
class PredictionGrid:
    """Posterior evaluated on the full surface lattice.

    theta: (n_theta,) azimuth cell centers [rad], ascending
    alpha: (n_alpha,) elevation cell centers [rad], ascending
    mu:    (n_alpha, n_theta) posterior occupancy mean, clamped to [0, r_oc]
    var:   (n_alpha, n_theta) predictive variance (noise included), >= 0
    r_oc:  surface radius [m]
    """

    theta: np.ndarray
    alpha: np.ndarray
    mu: np.ndarray
    var: np.ndarray
    r_oc: float

    def interpolate_mu(self, theta: float, alpha: float) -> float:
        """Bilinear interpolation of mu; azimuth wraps, elevation clamps."""
        nt = self.theta.shape[0]
        step_t = 2.0 * math.pi / nt
        u = (float(wrap_angle(theta)) - self.theta[0]) / step_t
        j0 = math.floor(u)
        ft = u - j0
        j0 %= nt
        j1 = (j0 + 1) % nt
        na = self.alpha.shape[0]
        if na == 1:
            i0 = i1 = 0
            fa = 0.0
        else:
            step_a = self.alpha[1] - self.alpha[0]
            w = (alpha - self.alpha[0]) / step_a
            i0 = int(np.clip(math.floor(w), 0, na - 2))
            fa = float(np.clip(w - i0, 0.0, 1.0))
            i1 = i0 + 1
        top = self.mu[i0, j0] * (1 - ft) + self.mu[i0, j1] * ft
        bot = self.mu[i1, j0] * (1 - ft) + self.mu[i1, j1] * ft
        return float(top * (1 - fa) + bot * fa)


def predict_grid(model: VsgpModel, config: SurfaceConfig) -> PredictionGrid:
    """Evaluate the model across the full (elevation x azimuth) lattice."""
    th = config.theta_centers
    al = config.alpha_centers
    TH, AL = np.meshgrid(th, al)
    Xq = np.column_stack([TH.ravel(), AL.ravel()])
    mean, var = model.predict(Xq)
    shape = (config.n_alpha, config.n_theta)
    return PredictionGrid(
        theta=th,
        alpha=al,
        mu=np.clip(mean, 0.0, config.r_oc).reshape(shape),
        var=var.reshape(shape),
        r_oc=config.r_oc,
    )
