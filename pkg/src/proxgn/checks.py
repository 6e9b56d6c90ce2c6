"""Self-validation suite behind the ``validate`` CLI command.

Each check exercises one family of invariants (Penrose equations, prox
oracles, gamma inequalities, Jacobian consistency, reference stationarity)
against independent computations and returns a pass/fail record.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import problems, radius
from .linalg import as_matrix, as_vector, condition_data, operator_norm, pseudoinverse, verify_penrose
from .prox import Box, BoxIndicator, InnerConfig, normal_cone_gap, project_box, prox_metric, prox_via_pullback
from .solver import stationarity_residual


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def exact_box_prox(a, z, box: Box) -> np.ndarray:
    """Exact argmin over the box of ||A(v - z)||^2 by active-set enumeration.

    Exponential in the dimension; intended as an oracle for small n.
    """
    mat = as_matrix(a)
    h = mat.T @ mat
    point = as_vector(z, box.dimension)
    n = box.dimension
    hz = h @ point
    best = None
    best_val = math.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        v = np.zeros(n)
        free = []
        feasible_pattern = True
        for i, s in enumerate(pattern):
            if s < 0:
                if not np.isfinite(box.lower[i]):
                    feasible_pattern = False
                    break
                v[i] = box.lower[i]
            elif s > 0:
                if not np.isfinite(box.upper[i]):
                    feasible_pattern = False
                    break
                v[i] = box.upper[i]
            else:
                free.append(i)
        if not feasible_pattern:
            continue
        if free:
            f = np.array(free, dtype=int)
            fixed = np.array([i for i in range(n) if i not in free], dtype=int)
            rhs = hz[f]
            if fixed.size:
                rhs = rhs - h[np.ix_(f, fixed)] @ v[fixed]
            v[f] = np.linalg.solve(h[np.ix_(f, f)], rhs)
        if np.any(v < box.lower - 1e-9) or np.any(v > box.upper + 1e-9):
            continue
        d = v - point
        val = 0.5 * float(d @ h @ d)
        if val < best_val:
            best_val = val
            best = v
    return best


def _random_full_rank(rng, m, n, smin=0.7, smax=1.6):
    """Random m x n matrix with singular values in [smin, smax]."""
    q1, _ = np.linalg.qr(rng.standard_normal((m, m)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = rng.uniform(smin, smax, size=n)
    return q1[:, :n] @ (s[:, None] * q2)


def _random_box(rng, n):
    lo = rng.uniform(-1.5, -0.1, size=n)
    up = rng.uniform(0.1, 1.5, size=n)
    return Box(lo, up)


def check_penrose(rng) -> CheckResult:
    worst = 0.0
    for _ in range(40):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(1, m + 1))
        a = rng.standard_normal((m, n)) * rng.uniform(0.5, 3.0)
        res = pseudoinverse(a)
        if not verify_penrose(a, res.pinv, 1e-9):
            return CheckResult("penrose.equations", False, "Penrose residuals above 1e-9")
        worst = max(worst, operator_norm(res.pinv @ a - np.eye(n)))
    passed = worst <= 1e-9
    return CheckResult("penrose.equations", passed, f"worst left-inverse residual {worst:.2e}")


def check_pinv_perturbation(rng) -> CheckResult:
    worst = 0.0
    for _ in range(40):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(1, m + 1))
        a = rng.standard_normal((m, n))
        try:
            ra = pseudoinverse(a)
        except Exception:
            continue
        e = rng.standard_normal((m, n))
        scale = rng.uniform(0.05, 0.5) / max(operator_norm(e @ ra.pinv), 1e-300)
        e *= scale
        b = a + e
        rb = pseudoinverse(b)
        bound_norm = operator_norm(ra.pinv) / (1.0 - operator_norm(e @ ra.pinv))
        gap1 = operator_norm(rb.pinv) - bound_norm
        gap2 = (operator_norm(rb.pinv - ra.pinv)
                - math.sqrt(2.0) * operator_norm(ra.pinv) * operator_norm(rb.pinv) * operator_norm(e))
        worst = max(worst, gap1, gap2)
    passed = worst <= 1e-9
    return CheckResult("penrose.perturbation", passed, f"worst bound violation {worst:.2e}")


def check_operator_norm(rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        a = rng.standard_normal((m, n))
        gram = a.T @ a
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        for _ in range(2000):
            w = gram @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            v = w / nw
        brute = math.sqrt(float(v @ gram @ v))
        worst = max(worst, abs(operator_norm(a) - brute) / max(brute, 1e-300))
    passed = worst <= 1e-8
    return CheckResult("penrose.operator_norm", passed, f"worst relative gap {worst:.2e}")


def check_prox_oracle(rng) -> CheckResult:
    cfg = InnerConfig()
    worst = 0.0
    for _ in range(25):
        a = _random_full_rank(rng, 5, 3)
        box = _random_box(rng, 3)
        z = rng.uniform(-2.0, 2.0, size=3)
        got = prox_metric(BoxIndicator(box), a, z, cfg).point
        want = exact_box_prox(a, z, box)
        worst = max(worst, float(np.linalg.norm(got - want)))
    passed = worst <= 10.0 * cfg.tolerance
    return CheckResult("prox.oracle", passed, f"worst gap to exact prox {worst:.2e}")


def check_prox_pullback(rng) -> CheckResult:
    cfg = InnerConfig()
    worst = 0.0
    for _ in range(15):
        a = _random_full_rank(rng, 5, 3)
        box = _random_box(rng, 3)
        z = rng.uniform(-2.0, 2.0, size=3)
        pr = pseudoinverse(a)

        def composed(y, _a=a, _box=box):
            # identity-metric prox of (indicator o A^dag) on the lifted point
            v = exact_box_prox(_a, np.linalg.lstsq(_a, y, rcond=None)[0], _box)
            return _a @ v + (y - _a @ (np.linalg.lstsq(_a, y, rcond=None)[0]))

        got = prox_via_pullback(composed, a, pr.pinv, z)
        want = prox_metric(BoxIndicator(box), a, z, cfg).point
        worst = max(worst, float(np.linalg.norm(got - want)))
    passed = worst <= 10.0 * cfg.tolerance
    return CheckResult("prox.pullback", passed, f"worst pull-back gap {worst:.2e}")


def check_prox_lipschitz(rng) -> CheckResult:
    cfg = InnerConfig()
    worst = 0.0
    for _ in range(25):
        a = _random_full_rank(rng, 5, 3)
        box = _random_box(rng, 3)
        z1 = rng.uniform(-2.0, 2.0, size=3)
        z2 = rng.uniform(-2.0, 2.0, size=3)
        p1 = prox_metric(BoxIndicator(box), a, z1, cfg).point
        p2 = prox_metric(BoxIndicator(box), a, z2, cfg).point
        _, kappa = condition_data(a)
        gap = np.linalg.norm(p1 - p2) - kappa * np.linalg.norm(z1 - z2)
        worst = max(worst, float(gap))
    passed = worst <= 10.0 * cfg.tolerance
    return CheckResult("prox.lipschitz", passed, f"worst bound violation {worst:.2e}")


def check_prox_metric_variation(rng) -> CheckResult:
    cfg = InnerConfig()
    worst = 0.0
    for _ in range(25):
        a1 = _random_full_rank(rng, 5, 3)
        a2 = _random_full_rank(rng, 5, 3)
        box = _random_box(rng, 3)
        z = rng.uniform(-2.0, 2.0, size=3)
        h1 = a1.T @ a1
        h2 = a2.T @ a2
        p1 = prox_metric(BoxIndicator(box), a1, z, cfg).point
        p2 = prox_metric(BoxIndicator(box), a2, z, cfg).point
        inv_norm = operator_norm(np.linalg.inv(h1))
        bound = inv_norm * np.linalg.norm((h1 - h2) @ (z - p2))
        worst = max(worst, float(np.linalg.norm(p1 - p2) - bound))
    passed = worst <= 10.0 * cfg.tolerance
    return CheckResult("prox.metric_variation", passed, f"worst bound violation {worst:.2e}")


def check_prox_certificate(rng) -> CheckResult:
    cfg = InnerConfig()
    worst = 0.0
    for _ in range(25):
        a = _random_full_rank(rng, 5, 3)
        box = _random_box(rng, 3)
        z = rng.uniform(-2.0, 2.0, size=3)
        h = a.T @ a
        p = prox_metric(BoxIndicator(box), a, z, cfg).point
        gap = normal_cone_gap(h @ (z - p), box, p, atol=1e-12)
        slack = 10.0 * cfg.tolerance * operator_norm(h)
        worst = max(worst, float(np.linalg.norm(gap)) - slack)
        v_next = project_box(p - (h @ (p - z)) / operator_norm(h), box)
        worst = max(worst, float(np.linalg.norm(v_next - p)) - cfg.tolerance)
    passed = worst <= 0.0
    return CheckResult("prox.certificate", passed, f"worst slack excess {worst:.2e}")


def _gamma_family_ok(avg: radius.LipschitzAverage, grid) -> tuple[bool, str]:
    prev = None
    for r in grid:
        g0 = radius.gamma_lambda(avg, 0.0, r)
        g1 = radius.gamma_lambda(avg, 1.0, r)
        gc = radius.gamma_c(avg, r)
        lr = avg(r)
        if g0 > lr + 1e-9 * lr or 2.0 * g1 > lr + 1e-9 * lr:
            return False, f"(1+lambda)*gamma_lambda > L at r={r}"
        if 2.0 * gc > 2.0 * g0 + lr + 1e-9 * lr:
            return False, f"2*gamma_c > 2*gamma_0 + L at r={r}"
        if abs(gc - (2.0 * g0 - g1)) > 1e-10 * max(1.0, gc):
            return False, f"gamma_c != 2*gamma_0 - gamma_1 at r={r}"
        cur = (g0, g1, gc, r * g0, r * r * g1)
        if prev is not None:
            if any(c < p - 1e-10 * max(1.0, abs(p)) for c, p in zip(cur[:3], prev[:3])):
                return False, f"gamma decreasing before r={r}"
            if cur[3] <= prev[3] or (r > grid[0] and cur[4] <= prev[4]):
                return False, f"r*gamma_0 or r^2*gamma_1 not strictly increasing at r={r}"
        prev = cur
    return True, ""


def check_gamma(rng) -> CheckResult:
    families = {
        "constant": radius.LipschitzAverage.constant(2.5),
        "linear": radius.LipschitzAverage.from_callable(lambda u: 0.5 + u),
        "tabulated": radius.LipschitzAverage.tabulated(
            [0.0, 0.5, 1.0, 2.0, 4.0], [1.0, 1.2, 2.0, 2.5, 4.0]),
    }
    for label, avg in families.items():
        ok, why = _gamma_family_ok(avg, np.linspace(0.05, 3.5, 24))
        if not ok:
            return CheckResult("gamma.inequalities", False, f"{label}: {why}")
    return CheckResult("gamma.inequalities", True, "disgam/newdis/identity hold on all grids")


def check_radius_closed_form(rng) -> CheckResult:
    worst = 0.0
    for _ in range(25):
        beta = rng.uniform(0.2, 5.0)
        kappa = rng.uniform(1.0, 20.0)
        l_const = rng.uniform(0.05, 10.0)
        h_target = rng.uniform(0.0, 0.9)
        alpha = h_target / ((radius.SQRT2_PLUS_1 * kappa + 1.0) * beta ** 2 * l_const)
        c = radius.ProblemConstants(alpha=alpha, beta=beta, kappa=kappa)
        avg = radius.LipschitzAverage.constant(l_const)
        for mode in radius.LipschitzMode:
            gap = abs(radius.r_bar_numeric(c, avg, mode)
                      - radius.r_bar_closed_form(c, l_const, mode))
            worst = max(worst, gap)
    passed = worst <= 1e-8
    return CheckResult("radius.closed_form", passed, f"worst |numeric - closed| {worst:.2e}")


# Stationarity thresholds at the five-digit reference points.  Kowalik and
# osborne2 sit well below 1e-3; rosenbrock's curvature (~3e2) amplifies the
# coordinate rounding to ~2e-3, and the osborne1 reference stems from a
# data table variant that is not bundled (see the case notes), so its
# published point is ~4e-2 away from stationarity for the standard data.
REFERENCE_STATIONARITY_LIMITS = {
    "rosenbrock": 3e-3,
    "kowalik": 1e-3,
    "osborne1": 1e-1,
    "osborne2": 1e-3,
}


def check_jacobians(rng) -> CheckResult:
    for name in ("rosenbrock", "kowalik", "osborne1", "osborne2"):
        case = problems.get_case(name)
        box = case.box
        lo = np.where(np.isfinite(box.lower), box.lower, -10.0)
        up = np.where(np.isfinite(box.upper), box.upper, 10.0)
        for _ in range(20):
            x = lo + rng.random(box.dimension) * (up - lo)
            analytic = case.problem.jacobian(x)
            fd = problems.finite_diff_jacobian(case.problem, x, h=1e-6)
            rel = operator_norm(fd - analytic) / max(operator_norm(analytic), 1e-300)
            if rel > 1e-5:
                return CheckResult("jacobian.finite_difference", False,
                                   f"{name}: relative error {rel:.2e} at {x}")
    return CheckResult("jacobian.finite_difference", True, "analytic == central differences")


def check_references(rng) -> CheckResult:
    for name, limit in REFERENCE_STATIONARITY_LIMITS.items():
        case = problems.get_case(name)
        value = stationarity_residual(case.problem, BoxIndicator(case.box), case.reference_x)
        if value > limit:
            return CheckResult("reference.stationarity", False,
                               f"{name}: residual {value:.2e} > {limit:.0e}")
    return CheckResult("reference.stationarity", True, "all reference points near-stationary")


_CHECKS = (
    ("penrose.equations", check_penrose),
    ("penrose.perturbation", check_pinv_perturbation),
    ("penrose.operator_norm", check_operator_norm),
    ("prox.oracle", check_prox_oracle),
    ("prox.pullback", check_prox_pullback),
    ("prox.lipschitz", check_prox_lipschitz),
    ("prox.metric_variation", check_prox_metric_variation),
    ("prox.certificate", check_prox_certificate),
    ("gamma.inequalities", check_gamma),
    ("radius.closed_form", check_radius_closed_form),
    ("jacobian.finite_difference", check_jacobians),
    ("reference.stationarity", check_references),
)


def run_checks(name_filter: str | None = None, seed: int = 20250808) -> list[CheckResult]:
    """Run the validation suite, optionally restricted by substring filter."""
    results = []
    for name, fn in _CHECKS:
        if name_filter is not None and name_filter not in name:
            continue
        results.append(fn(np.random.default_rng(seed)))
    return results
