"""Random-intercept linear mixed-effects models fit by REML.

The model is y_ij = x_ij' beta + b_i + e_ij with b_i ~ N(0, tau00) and
e_ij ~ N(0, sigma2). Writing theta = tau00/sigma2, the marginal covariance is
sigma2 * (I + theta * Z Z') which is block diagonal with per-group blocks
I + theta * 1 1'. Both beta and sigma2 profile out of the REML criterion, so
fitting reduces to a 1-D minimization over log(theta) on [-12, 12] (coarse
grid plus golden-section refinement). The per-group Woodbury identity
(I + theta 11')^{-1} = I - theta/(1 + theta n_i) 11' keeps every criterion
evaluation at O(groups * p^2).

Inference on fixed effects is Wald-z (estimate +- 1.96 * SE, normal p-values),
recorded in the fit metadata since the reference tooling's Satterthwaite
degrees of freedom are intentionally not replicated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import DesignError, UsageError

_NORMAL = NormalDist()
_LOG_THETA_BOUNDS = (-12.0, 12.0)
_GRID_POINTS = 97
_WALD_Z_95 = 1.96


def icc(tau00: float, sigma2: float) -> float:
    """Intraclass correlation: the between-group share of total variance."""
    if tau00 < 0 or sigma2 < 0:
        raise DesignError(f"variance components must be >= 0, got {tau00}, {sigma2}")
    total = tau00 + sigma2
    if total == 0.0:
        raise DesignError("both variance components are zero; ICC undefined")
    return tau00 / total


@dataclass(frozen=True)
class LmeSpec:
    """Names of the outcome, fixed-effect predictors, and grouping column."""

    outcome: str
    predictors: tuple[str, ...] = ()
    group: str = "participant_id"

    def __post_init__(self):
        object.__setattr__(self, "predictors", tuple(self.predictors))


@dataclass(frozen=True)
class FixedEffect:
    name: str
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    z: float
    p_value: float


@dataclass(frozen=True)
class LmeFit:
    effects: tuple[FixedEffect, ...]
    sigma2: float
    tau00: float
    icc: float
    n_obs: int
    n_groups: int
    r2_marginal: float
    r2_conditional: float
    convergence: str  # "ok" | "boundary" | "fixed"
    log_theta: float
    reml_criterion: float
    inference: str = "wald-z"

    def effect(self, name: str) -> FixedEffect:
        for e in self.effects:
            if e.name == name:
                return e
        raise KeyError(name)


class _Profiler:
    """Precomputed sufficient statistics for fast criterion evaluations."""

    def __init__(self, y: np.ndarray, x: np.ndarray, groups: list):
        n, p = x.shape
        order: dict = {}
        for g in groups:
            order.setdefault(g, len(order))
        q = len(order)
        self.n, self.p, self.q = n, p, q
        self.x = x
        idx = np.array([order[g] for g in groups])
        self.n_i = np.bincount(idx, minlength=q).astype(float)
        self.S = np.zeros((q, p))
        self.u = np.zeros(q)
        np.add.at(self.S, idx, x)
        np.add.at(self.u, idx, y)
        self.G = x.T @ x
        self.t = x.T @ y
        self.q_tot = float(y @ y)

    def fixed_effect_variance(self, beta: np.ndarray) -> float:
        fitted = self.x @ beta
        if fitted.size < 2:
            return 0.0
        return float(np.var(fitted, ddof=1))

    def criterion(self, theta: float) -> tuple[float, dict]:
        c = theta / (1.0 + theta * self.n_i)
        a_mat = self.G - self.S.T @ (c[:, None] * self.S)
        b_vec = self.t - self.S.T @ (c * self.u)
        y_w_y = self.q_tot - float(c @ (self.u ** 2))
        sign, logdet_a = np.linalg.slogdet(a_mat)
        if sign <= 0:
            return math.inf, {}
        try:
            beta = np.linalg.solve(a_mat, b_vec)
        except np.linalg.LinAlgError:
            return math.inf, {}
        rss = y_w_y - float(beta @ b_vec)
        df = self.n - self.p
        if rss <= 0.0:
            rss = 1e-300
        sigma2 = rss / df
        logdet_v = float(np.sum(np.log1p(theta * self.n_i)))
        crit = df * (math.log(2.0 * math.pi) + 1.0) + df * math.log(sigma2) \
            + logdet_v + logdet_a
        return crit, {"beta": beta, "sigma2": sigma2, "a_mat": a_mat}


def _golden_refine(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if fc < best_f:
            best_x, best_f = c, fc
        if fd < best_f:
            best_x, best_f = d, fd
    return best_x, best_f


def fit_lme_arrays(y, x, groups, names: list[str],
                   fix_variance_ratio: float | None = None) -> LmeFit:
    """Fit from a prebuilt design matrix. ``x`` must contain any intercept
    column explicitly; ``names`` labels its columns."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.size:
        raise DesignError(f"incompatible shapes: y {y.shape}, X {x.shape}")
    n, p = x.shape
    if len(names) != p:
        raise DesignError(f"{p} design columns but {len(names)} names")
    if len(groups) != n:
        raise DesignError(f"{n} rows but {len(groups)} group labels")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise DesignError("non-finite values in model data")
    if n - p < 1:
        raise DesignError(f"too few observations: n={n}, p={p}")
    if np.linalg.matrix_rank(x) < p:
        raise DesignError("design matrix is rank deficient")
    uniq = list(dict.fromkeys(groups))
    if len(uniq) < 2:
        raise DesignError(f"need >= 2 groups, got {len(uniq)}")
    prof = _Profiler(y, x, list(groups))
    if not np.any(prof.n_i >= 2):
        raise DesignError("every group has a single observation; "
                          "random-intercept variance is unidentifiable")

    lo, hi = _LOG_THETA_BOUNDS
    if fix_variance_ratio is not None:
        if fix_variance_ratio < 0:
            raise DesignError(f"variance ratio must be >= 0, got {fix_variance_ratio}")
        theta = float(fix_variance_ratio)
        crit, parts = prof.criterion(theta)
        if not parts:
            raise DesignError("criterion not computable at the fixed variance ratio")
        log_theta = math.log(theta) if theta > 0 else -math.inf
        return _assemble(prof, theta, log_theta, crit, parts, names, "fixed")

    grid = np.linspace(lo, hi, _GRID_POINTS)
    vals = [prof.criterion(math.exp(lt))[0] for lt in grid]
    k = int(np.argmin(vals))
    cell_lo = grid[max(0, k - 1)]
    cell_hi = grid[min(_GRID_POINTS - 1, k + 1)]
    f = lambda lt: prof.criterion(math.exp(lt))[0]
    log_theta, crit = _golden_refine(f, cell_lo, cell_hi)
    if vals[k] < crit:
        log_theta, crit = grid[k], vals[k]
    theta = math.exp(log_theta)
    crit, parts = prof.criterion(theta)
    if not parts:
        raise DesignError("REML criterion not computable at the optimum")
    convergence = "boundary" if (log_theta <= lo + 1e-6 or log_theta >= hi - 1e-6) else "ok"
    return _assemble(prof, theta, log_theta, crit, parts, names, convergence)


def _assemble(prof: _Profiler, theta: float, log_theta: float, crit: float,
              parts: dict, names: list[str], convergence: str) -> LmeFit:
    beta = parts["beta"]
    sigma2 = parts["sigma2"]
    cov = sigma2 * np.linalg.inv(parts["a_mat"])
    se = np.sqrt(np.diag(cov))
    tau00 = theta * sigma2
    icc_value = icc(tau00, sigma2)
    effects = []
    for name, est, s in zip(names, beta, se):
        z = est / s if s > 0 else math.inf
        p = 2.0 * (1.0 - _NORMAL.cdf(abs(z)))
        effects.append(FixedEffect(name=name, estimate=float(est), se=float(s),
                                   ci_low=float(est - _WALD_Z_95 * s),
                                   ci_high=float(est + _WALD_Z_95 * s),
                                   z=float(z), p_value=float(p)))
    var_f = prof.fixed_effect_variance(beta)
    denom = var_f + tau00 + sigma2
    return LmeFit(effects=tuple(effects), sigma2=float(sigma2), tau00=float(tau00),
                  icc=float(icc_value), n_obs=prof.n, n_groups=prof.q,
                  r2_marginal=float(var_f / denom),
                  r2_conditional=float((var_f + tau00) / denom),
                  convergence=convergence, log_theta=float(log_theta),
                  reml_criterion=float(crit))


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, float) and math.isnan(v):
        return True
    return False


def fit_lme(spec: LmeSpec, rows: list[dict],
            fix_variance_ratio: float | None = None) -> LmeFit:
    """Fit from tabular rows (dicts); rows with a missing outcome, predictor,
    or group label are dropped (listwise deletion)."""
    needed = (spec.outcome, *spec.predictors)
    for col in (*needed, spec.group):
        if all(col not in r for r in rows):
            raise UsageError(f"column {col!r} absent from input rows")
    y, xs, groups = [], [], []
    for r in rows:
        vals = [r.get(c) for c in needed]
        g = r.get(spec.group)
        if _is_missing(g) or any(_is_missing(v) for v in vals):
            continue
        y.append(float(vals[0]))
        xs.append([1.0] + [float(v) for v in vals[1:]])
        groups.append(g)
    if not y:
        raise DesignError("no complete rows after listwise deletion")
    names = ["(Intercept)", *spec.predictors]
    return fit_lme_arrays(np.array(y), np.array(xs), groups, names,
                          fix_variance_ratio=fix_variance_ratio)
