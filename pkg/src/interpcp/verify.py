"""Self-checks against independent oracles, run by ``interpcp verify``.

Each check returns a :class:`CheckResult`; none of them needs more than
a few seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special, stats

from . import casestudies, mlpnet, statcore
from .exprdsl import library
from .exprdsl.candidates import enumerate_candidates, evaluate, gradient
from .modelselect import mallows_cp, mc_statistic

__all__ = ["CheckResult", "CHECKS", "run_all"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_cp_identity(n_tuples: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tuples):
        N = int(rng.integers(10, 5000))
        s2 = rng.uniform(0.01, 5.0)
        mse = rng.uniform(0.01, 10.0)
        p = int(rng.integers(1, 50))
        cp = mallows_cp(N * mse, s2, N, p)
        mc = N * mc_statistic(mse, s2, 2.0 / N, p)
        worst = max(worst, abs(cp - mc) / max(1.0, abs(cp)))
    return CheckResult("Cp = N * MC at lambda = 2/N", worst <= 1e-10, f"max scaled error {worst:.2e}")


def check_fisher_enumeration(n_max: int = 25) -> CheckResult:
    """Upper hypergeometric tail against exact rational enumeration."""
    worst, label_mismatch = 0.0, 0
    for n in range(1, n_max + 1):
        for q1 in range(n + 1):
            for q2 in range(n + 1):
                k = q1 + q2
                exact = Fraction(sum(math.comb(n, x) * math.comb(n, k - x) for x in range(q2, min(k, n) + 1)),
                                 math.comb(2 * n, k))
                p = statcore.fisher_exact_one_sided_greater(q1, q2, n)
                worst = max(worst, abs(p - float(exact)) / float(exact))
                label_mismatch += (p < 0.05) != (exact < Fraction(1, 20))
    ok = worst <= 1e-12 and label_mismatch == 0
    return CheckResult("Fisher one-sided p-values", ok, f"max rel error {worst:.2e}, label mismatches {label_mismatch}")


def check_special_functions(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 2000)
    a = rng.uniform(0.1, 200, 2000)
    b = rng.uniform(0.1, 200, 2000)
    e_beta = np.max(np.abs(statcore.regularized_incomplete_beta(x, a, b) - special.betainc(a, b, x)))
    t = rng.normal(0, 5, 2000)
    df = rng.uniform(1, 300, 2000)
    ref = stats.t.sf(t, df)
    e_t = np.max(np.abs(statcore.student_t_sf(t, df) - ref) / ref)
    p = rng.uniform(1e-12, 1 - 1e-12, 2000)
    e_q = np.max(np.abs(statcore.normal_quantile(p) - special.ndtri(p)))
    ok = e_beta < 1e-12 and e_t < 1e-10 and e_q < 1e-10
    return CheckResult("incomplete beta, t tail, normal quantile", ok,
                       f"beta {e_beta:.1e}, t rel {e_t:.1e}, quantile {e_q:.1e}")


def check_gng_exact(seed: int = 0) -> CheckResult:
    """Expected-Go against an independent scipy posterior and binomial sum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        tm = rng.uniform(0.1, 0.3)
        d = casestudies.GngDesign(tm, tm + rng.uniform(0.05, 0.2), rng.uniform(0.1, 0.6))
        k = np.arange(d.n + 1)
        post = stats.beta(d.q_a + k, d.q_b + d.n - k)
        go = (post.sf(d.t_min) > d.tau_min) & (post.sf(d.t_base) > d.tau_base)
        ref = float(np.sum(stats.binom.pmf(k, d.n, d.q0)[go]))
        worst = max(worst, abs(casestudies.gng_expected_go(d) - ref))
    return CheckResult("Go/No-Go expected Go", worst < 1e-12, f"max abs error {worst:.1e}")


def check_expression_gradients(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    fams = [("sim1.f1", "sim1.f2", (0.1, 0.6)), ("sim3.f1", "sim3.f2", (0.0, 1.0)),
            ("nhanes.f1", "nhanes.f2", (-1.0, 1.0))]
    for f1n, f2n, (lo, hi) in fams:
        link = "softmax_pair" if f1n.startswith("sim3") else "identity"
        for m in enumerate_candidates(library.family(f1n), library.family(f2n), output_link=link):
            x = rng.uniform(lo, hi, (8, m.second_layer[0].arity))
            if f1n.startswith("sim1"):
                x[:, 1:] = rng.uniform(0.05, 0.5, (8, 2))
            th = rng.uniform(-1, 1, m.param_count)
            up = rng.normal(size=(8, m.output_dim))
            g = gradient(m, x, up, th)
            fd = np.empty_like(th)
            for i in range(th.size):
                h = 1e-6 * max(1.0, abs(th[i]))
                tp, tm = th.copy(), th.copy()
                tp[i] += h
                tm[i] -= h
                fd[i] = (np.sum(evaluate(m, x, tp) * up) - np.sum(evaluate(m, x, tm) * up)) / (2 * h)
            worst = max(worst, np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(fd))))
    return CheckResult("expression-tree gradients", worst <= 1e-5, f"max rel error {worst:.1e}")


def check_mlp_gradients(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for head, widths in (("sigmoid", (3, 6, 5, 1)), ("softmax", (3, 7, 2))):
        spec = mlpnet.MlpSpec(widths, output_activation=head, seed=seed)
        st = mlpnet.init_state(spec, rng)
        for b in st.biases:
            b[:] = rng.normal(0, 0.1, b.shape)
        X = rng.normal(size=(12, 3))
        y = rng.uniform(size=12) if head == "sigmoid" else np.eye(2)[rng.integers(0, 2, 12)]
        masks = [(rng.random((12, h)) < 0.8) / 0.8 for h in widths[1:-1]]
        _, gw, gb = mlpnet.loss_and_grads(st, X, y, masks)
        for arrs, grads in ((st.weights, gw), (st.biases, gb)):
            for p, g in zip(arrs, grads):
                for idx in np.ndindex(p.shape):
                    old = p[idx]
                    p[idx] = old + 1e-6
                    lp = mlpnet.loss_and_grads(st, X, y, masks)[0]
                    p[idx] = old - 1e-6
                    lm = mlpnet.loss_and_grads(st, X, y, masks)[0]
                    p[idx] = old
                    fd = (lp - lm) / 2e-6
                    worst = max(worst, abs(g[idx] - fd) / max(1e-3, abs(fd)))
    return CheckResult("MLP backprop gradients", worst <= 1e-4, f"max rel error {worst:.1e}")


def check_param_counts() -> CheckResult:
    got = (mlpnet.MlpSpec((3, 60, 60, 1)).param_count, mlpnet.MlpSpec((3, 2, 1)).param_count,
           mlpnet.MlpSpec((3, 60, 60, 2)).param_count)
    m10 = enumerate_candidates(library.family("sim1.f1"), library.family("sim1.f2"))[9]
    ok = got == (3961, 11, 4022) and m10.param_count == 7
    return CheckResult("parameter counts", ok, f"MLPs {got}, model 10 {m10.param_count}")


def check_trial_null(reps: int = 100_000) -> CheckResult:
    """Rejection rate at zero effect sits within 3 MC standard errors of alpha."""
    parts, ok = [], True
    for i, a in enumerate((0.025, 0.05, 0.1)):
        rate = casestudies.trial_power(casestudies.TrialDesign(30, a, 0.0, mc_reps=reps), seed=i)
        se = math.sqrt(a * (1 - a) / reps)
        ok &= abs(rate - a) <= 3 * se
        parts.append(f"{a}: {rate:.5f}")
    return CheckResult("trial null calibration", ok, ", ".join(parts))


CHECKS = (check_cp_identity, check_fisher_enumeration, check_special_functions, check_gng_exact,
          check_expression_gradients, check_mlp_gradients, check_param_counts, check_trial_null)


def run_all(echo=print) -> list:
    results = []
    for chk in CHECKS:
        res = chk()
        results.append(res)
        if echo:
            echo(res.line())
    return results
