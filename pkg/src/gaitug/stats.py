"""Statistical layer: Shapiro-Wilk normality, Spearman rank correlation, and
the video-vs-insole step-time agreement analysis.

Shapiro-Wilk follows Royston's AS R94 approximation (weights from Blom-style
normal scores with polynomial small-sample corrections; W-to-p mappings split
at n = 3, 4..11, and >= 12). Spearman is the Pearson correlation of mid-ranks
with a Student-t p-value computed through the regularized incomplete beta
function. Only the standard library's normal distribution is used for
Phi / Phi-inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DataError, DegenerateSignalError, DomainError, MatchingError

_NORMAL = NormalDist()

# Royston AS R94 polynomial tables (highest degree first).
_C1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_C3 = (-0.0006714, 0.025054, -0.39978, 0.544)
_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_C6 = (0.0030302, -0.082676, -0.4803)
_G = (0.459, -2.273)
_PI6 = 1.909859
_STQR = 1.047198
_SQRT_HALF = 0.70711


def _polyval(coeffs, x: float) -> float:
    out = 0.0
    for c in coeffs:
        out = out * x + c
    return out


@dataclass(frozen=True)
class ShapiroResult:
    w_statistic: float
    p_value: float
    n: int


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float
    n: int


def _shapiro_weights(n: int) -> np.ndarray:
    """Positive-magnitude weights for the lower half of the order statistics."""
    n2 = n // 2
    if n == 3:
        return np.array([_SQRT_HALF])
    an25 = n + 0.25
    m = np.array([_NORMAL.inv_cdf((i - 0.375) / an25) for i in range(1, n2 + 1)])
    summ2 = 2.0 * float(m @ m)
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a1 = _polyval(_C1, rsn) - m[0] / ssumm2
    a = np.empty(n2)
    if n > 5:
        a2 = _polyval(_C2, rsn) - m[1] / ssumm2
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                        / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
        a[0], a[1] = a1, a2
        a[2:] = m[2:] / -fac
    else:
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
        a[0] = a1
        a[1:] = m[1:] / -fac
    return a


def shapiro_wilk(sample) -> ShapiroResult:
    """W statistic and upper-tail p-value for departure from normality."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3 or n > 5000:
        raise DomainError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite value in sample")
    if x[-1] - x[0] < 1e-19:
        raise DegenerateSignalError("constant sample: W is undefined")
    half = _shapiro_weights(n)
    full = np.zeros(n)
    n2 = half.size
    full[:n2] = -half
    full[n - n2:] = half[::-1]
    num = float(full @ x) ** 2
    den = float(np.sum((x - x.mean()) ** 2))
    w = min(1.0, num / den)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w)) - _STQR)
        return ShapiroResult(w, min(1.0, max(0.0, p)), n)
    y = math.log(1.0 - w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _polyval(_G, float(n))
        if y >= gamma:
            return ShapiroResult(w, 0.0, n)
        y = -math.log(gamma - y)
        mu = _polyval(_C3, float(n))
        sd = math.exp(_polyval(_C4, float(n)))
    else:
        ln_n = math.log(n)
        mu = _polyval(_C5, ln_n)
        sd = math.exp(_polyval(_C6, ln_n))
    z = (y - mu) / sd
    return ShapiroResult(w, 1.0 - _NORMAL.cdf(z), n)


# ---------------------------------------------------------------------------
# Regularized incomplete beta (for the Student-t tail)

def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction, Numerical Recipes form.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 301):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _t_two_sided_p(t: float, df: float) -> float:
    # 2 * P(T_df > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


# ---------------------------------------------------------------------------
# Spearman

def rank_average(x) -> np.ndarray:
    """Mid-ranks: ties share the average of the ranks they span (1-based)."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> SpearmanResult:
    """Rank correlation with a Student-t p-value on n-2 degrees of freedom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"paired 1-D samples required, got {x.shape} and {y.shape}")
    n = x.size
    if n < 3:
        raise DomainError(f"Spearman needs n >= 3, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("non-finite value in sample")
    rx = rank_average(x)
    ry = rank_average(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSignalError("zero rank variance: correlation undefined")
    rho = float(dx @ dy) / math.sqrt(sx * sy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = _t_two_sided_p(abs(t), n - 2.0)
    return SpearmanResult(rho=rho, p_value=p, n=n)


# ---------------------------------------------------------------------------
# Video vs insole agreement

@dataclass(frozen=True)
class StepTimePair:
    """Per-trial mean step times from the two modalities, in seconds."""

    participant_id: str
    trial_index: int
    video_mean_st_s: float
    insole_mean_st_s: float


@dataclass(frozen=True)
class AgreementResult:
    spearman: SpearmanResult
    bias_s: float  # mean(video - insole)
    n_pairs: int
    n_participants: int
    excluded: list[tuple[str, str]]  # (participant_id, reason)
    diff_normality: ShapiroResult | None
    pairs: list[StepTimePair]  # retained pairs, participant then trial order


def compare_video_insole(pairs: list[StepTimePair],
                         min_trials: int = 3) -> AgreementResult:
    """Spearman agreement between video- and insole-derived mean step times.

    Only participants contributing at least ``min_trials`` complete pairs are
    included; the rest are listed in ``excluded``. Signed bias is the mean of
    video minus insole. Normality of the paired differences is reported when
    computable (None for constant differences).
    """
    by_participant: dict[str, list[StepTimePair]] = {}
    for p in pairs:
        by_participant.setdefault(p.participant_id, []).append(p)
    kept: list[StepTimePair] = []
    excluded: list[tuple[str, str]] = []
    for pid in sorted(by_participant):
        plist = by_participant[pid]
        if len(plist) < min_trials:
            excluded.append((pid, f"only {len(plist)} paired trial(s), need {min_trials}"))
        else:
            kept.extend(sorted(plist, key=lambda q: q.trial_index))
    if not kept:
        raise MatchingError("no participant has enough paired trials")
    if len(kept) < 3:
        raise DomainError(f"need >= 3 paired trials after filtering, got {len(kept)}")
    video = np.array([p.video_mean_st_s for p in kept])
    insole = np.array([p.insole_mean_st_s for p in kept])
    rho = spearman(video, insole)
    diffs = video - insole
    normality: ShapiroResult | None = None
    if 3 <= diffs.size <= 5000:
        try:
            normality = shapiro_wilk(diffs)
        except DegenerateSignalError:
            normality = None
    return AgreementResult(spearman=rho, bias_s=float(diffs.mean()),
                           n_pairs=len(kept),
                           n_participants=len(by_participant) - len(excluded),
                           excluded=excluded, diff_normality=normality,
                           pairs=kept)
