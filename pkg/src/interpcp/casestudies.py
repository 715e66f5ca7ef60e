"""Simulation generators for the three worked studies.

* two-stage adaptive trial with sample-size re-estimation and an
  inverse-normal combination test (features ``mu0, alpha, beta``,
  target ``n1 / 60``);
* Bayesian Go/No-Go expected-Go value (features ``tmin, tbase, q0`` or
  their posterior-probability counterparts);
* one-sided Fisher exact test decision labels (features ``q1, q2, n``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import statcore
from .data import Dataset

__all__ = [
    "TrialDesign",
    "GngDesign",
    "FisherDesign",
    "round_half_up",
    "stage_two_size",
    "trial_power",
    "gen_trial_dataset",
    "gng_go_indicator",
    "gng_expected_go",
    "gng_intermediate_features",
    "gng_dataset",
    "fisher_label",
    "fisher_dataset",
]


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(int)


# ---------------------------------------------------------------------------
# Adaptive two-stage trial
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialDesign:
    n1: int
    alpha: float
    mu0: float
    delta: float = 0.3
    sigma_t: float = 1.0
    sigma_p: float = 1.0
    mc_reps: int = 10_000
    test: str = "pooled"

    def __post_init__(self):
        if self.n1 < 2 or self.mc_reps < 1 or self.sigma_t <= 0 or self.sigma_p <= 0:
            raise ValueError("need n1 >= 2, mc_reps >= 1 and positive SDs")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.test not in ("pooled", "welch"):
            raise ValueError("test must be 'pooled' or 'welch'")


def stage_two_size(n1: int, delta1, delta: float):
    """Per-group stage-2 size: halve after a promising interim effect, else double."""
    promising = np.asarray(delta1) >= delta
    return np.where(promising, int(round_half_up(0.5 * n1)), 2 * n1)


def _stage_p_values(rng, n, mu0, sig_t, sig_p, test):
    """One-sided two-sample t-test p-values for ``len(n)`` simulated stages.

    Draws the sufficient statistics directly: each group mean is normal
    with variance sigma^2 / n, each within-group sum of squares is
    sigma^2 times a chi-square with n - 1 degrees of freedom.
    """
    n = np.asarray(n, dtype=float)
    mean_t = mu0 + sig_t * rng.standard_normal(n.shape) / np.sqrt(n)
    mean_p = sig_p * rng.standard_normal(n.shape) / np.sqrt(n)
    ss_t = sig_t ** 2 * rng.chisquare(n - 1.0)
    ss_p = sig_p ** 2 * rng.chisquare(n - 1.0)
    diff = mean_t - mean_p
    if test == "pooled":
        df = 2.0 * n - 2.0
        s2 = (ss_t + ss_p) / df
        t = diff / np.sqrt(s2 * 2.0 / n)
    else:
        vt = ss_t / (n - 1.0) / n
        vp = ss_p / (n - 1.0) / n
        t = diff / np.sqrt(vt + vp)
        df = (vt + vp) ** 2 / (vt ** 2 / (n - 1.0) + vp ** 2 / (n - 1.0))
    sf, cdf = statcore.student_t_tails(t, df)
    return np.asarray(sf), np.asarray(cdf), diff


def _probit_upper(sf, cdf):
    """Phi^{-1}(1 - p) from both tails of p, avoiding 1 - p cancellation."""
    tiny = np.finfo(float).tiny
    sf = np.clip(sf, tiny, 1.0)
    cdf = np.clip(cdf, tiny, 1.0)
    out = np.empty_like(sf)
    small = sf < 0.5
    if np.any(small):
        out[small] = -statcore.normal_quantile(np.minimum(sf[small], 0.5))
    if np.any(~small):
        out[~small] = statcore.normal_quantile(np.minimum(cdf[~small], 0.5))
    return out


def trial_power(design: TrialDesign, seed: int = 0) -> float:
    """Monte Carlo rejection rate of the adaptive two-stage design."""
    rng = np.random.default_rng(seed)
    R = design.mc_reps
    n1 = np.full(R, design.n1)
    sf1, cdf1, delta1 = _stage_p_values(rng, n1, design.mu0, design.sigma_t, design.sigma_p, design.test)
    n2 = stage_two_size(design.n1, delta1, design.delta)
    sf2, cdf2, _ = _stage_p_values(rng, n2, design.mu0, design.sigma_t, design.sigma_p, design.test)
    z = (_probit_upper(sf1, cdf1) + _probit_upper(sf2, cdf2)) / math.sqrt(2.0)
    crit = statcore.upper_normal_quantile(design.alpha)
    return float(np.mean(z >= crit))


DEFAULT_TRIAL_RANGES = {"mu0": (0.1, 0.6), "alpha": (0.01, 0.15), "n1": (10, 60), "n1_scale": 60}


def gen_trial_dataset(N: int, ranges: dict | None = None, mc_reps: int = 10_000, seed: int = 0,
                      delta: float = 0.3, test: str = "pooled") -> Dataset:
    """Sample designs, compute beta = 1 - power for each, target n1 / scale.

    ``beta`` is stored after clipping to ``[0.5 / mc_reps, 1 - 0.5 / mc_reps]``
    so that its upper normal quantile stays finite; the raw count of
    clipped rows is kept in ``meta``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    r = dict(DEFAULT_TRIAL_RANGES)
    r.update(ranges or {})
    ss = np.random.SeedSequence(seed)
    design_rng = np.random.default_rng(ss.spawn(1)[0])
    mu0 = design_rng.uniform(*r["mu0"], size=N)
    alpha = design_rng.uniform(*r["alpha"], size=N)
    n1 = design_rng.integers(r["n1"][0], r["n1"][1] + 1, size=N)
    row_seeds = np.random.SeedSequence([seed, 1]).generate_state(N, dtype=np.uint64)
    beta = np.empty(N)
    for i in range(N):
        d = TrialDesign(int(n1[i]), float(alpha[i]), float(mu0[i]), delta=delta, mc_reps=mc_reps, test=test)
        beta[i] = 1.0 - trial_power(d, seed=int(row_seeds[i]))
    lo = 0.5 / mc_reps
    clipped = int(np.sum((beta < lo) | (beta > 1 - lo)))
    beta = np.clip(beta, lo, 1.0 - lo)
    meta = {"generator": "trial", "mc_reps": mc_reps, "beta_clipped_rows": clipped,
            "row_seeds": [int(s) for s in row_seeds]}
    return Dataset(np.column_stack([mu0, alpha, beta]), n1 / r["n1_scale"], ("mu0", "alpha", "beta"), ("y",), meta)


# ---------------------------------------------------------------------------
# Go/No-Go
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GngDesign:
    t_min: float
    t_base: float
    q0: float
    n: int = 40
    q_a: float = 1.0
    q_b: float = 1.0
    tau_min: float = 0.8
    tau_base: float = 0.1

    def __post_init__(self):
        if self.t_min > self.t_base:
            raise ValueError("t_min must not exceed t_base")
        if self.n < 1 or self.q_a <= 0 or self.q_b <= 0:
            raise ValueError("need n >= 1 and a proper Beta prior")


def gng_go_indicator(design: GngDesign, n_r) -> np.ndarray:
    """Go decision for each possible responder count ``n_r``."""
    n_r = np.asarray(n_r, dtype=float)
    a = design.q_a + n_r
    b = design.q_b + design.n - n_r
    p_min = np.asarray(statcore.beta_tail(np.full(n_r.shape, design.t_min), a, b))
    p_base = np.asarray(statcore.beta_tail(np.full(n_r.shape, design.t_base), a, b))
    return (p_min > design.tau_min) & (p_base > design.tau_base)


def gng_expected_go(design: GngDesign) -> float:
    """Exact probability of a Go decision when the true response rate is ``q0``."""
    k = np.arange(design.n + 1)
    go = gng_go_indicator(design, k)
    return float(np.sum(np.where(go, statcore.binom_pmf(k, design.n, design.q0), 0.0)))


def gng_intermediate_features(design: GngDesign) -> tuple:
    """Posterior tail probabilities at the pseudo-count ``n * q0``."""
    a = design.q_a + design.n * design.q0
    b = design.q_b + design.n - design.n * design.q0
    return (statcore.beta_tail(design.t_min, a, b), statcore.beta_tail(design.t_base, a, b), design.q0)


DEFAULT_GNG_RANGES = {"t_min": (0.1, 0.3), "t_gap": (0.05, 0.2), "q0": (0.1, 0.6)}


def gng_dataset(N: int, ranges: dict | None = None, input_mode: str = "original", seed: int = 0,
                n: int = 40, q_a: float = 1.0, q_b: float = 1.0,
                tau_min: float = 0.8, tau_base: float = 0.1) -> Dataset:
    """Expected-Go targets for randomly drawn thresholds and response rates."""
    if input_mode not in ("original", "intermediate"):
        raise ValueError("input_mode must be 'original' or 'intermediate'")
    r = dict(DEFAULT_GNG_RANGES)
    r.update(ranges or {})
    rng = np.random.default_rng(seed)
    t_min = rng.uniform(*r["t_min"], size=N)
    t_base = t_min + rng.uniform(*r["t_gap"], size=N)
    q0 = rng.uniform(*r["q0"], size=N)
    y = np.empty(N)
    feats = np.empty((N, 3))
    for i in range(N):
        d = GngDesign(float(t_min[i]), float(t_base[i]), float(q0[i]), n, q_a, q_b, tau_min, tau_base)
        y[i] = gng_expected_go(d)
        feats[i] = gng_intermediate_features(d) if input_mode == "intermediate" else (t_min[i], t_base[i], q0[i])
    names = ("post_min", "post_base", "q0") if input_mode == "intermediate" else ("tmin", "tbase", "q0")
    return Dataset(feats, y, names, ("y",), {"generator": "gng", "input_mode": input_mode})


# ---------------------------------------------------------------------------
# Fisher exact test labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FisherDesign:
    n_min: int = 10
    n_max: int = 50
    alpha_level: float = 0.05

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("need 1 <= n_min <= n_max")


def fisher_label(q1: int, q2: int, n: int, alpha_level: float = 0.05) -> tuple:
    """One-hot label: (0, 1) when the one-sided p-value is below ``alpha_level``."""
    p = statcore.fisher_exact_one_sided_greater(q1, q2, n)
    return (0.0, 1.0) if p < alpha_level else (1.0, 0.0)


def fisher_dataset(N: int | str, design: FisherDesign = FisherDesign(), seed: int = 0) -> Dataset:
    """Rows ``(q1, q2, n)`` with Fisher-test decision labels.

    ``N="exhaustive"`` lists every table for every ``n`` in range;
    otherwise ``n`` is drawn uniformly from the range and ``q1, q2``
    uniformly from ``0..n``.
    """
    if N == "exhaustive":
        rows = [(q1, q2, n) for n in range(design.n_min, design.n_max + 1)
                for q1 in range(n + 1) for q2 in range(n + 1)]
        rows = np.array(rows, dtype=float)
    else:
        rng = np.random.default_rng(seed)
        n = rng.integers(design.n_min, design.n_max + 1, size=int(N))
        q1 = np.floor(rng.uniform(size=int(N)) * (n + 1))
        q2 = np.floor(rng.uniform(size=int(N)) * (n + 1))
        rows = np.column_stack([q1, q2, n]).astype(float)
    labels = np.array([fisher_label(int(a), int(b), int(c), design.alpha_level) for a, b, c in rows])
    return Dataset(rows, labels, ("q1", "q2", "n"), ("y0", "y1"), {"generator": "fisher"})
