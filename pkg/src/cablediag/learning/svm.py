"""Soft-margin support vector machines trained by sequential two-variable
dual updates (SMO), for binary classification and epsilon-insensitive
regression, with linear and Gaussian kernels.

Deterministic throughout: working pairs are chosen by maximal violation
with index-order tie-breaks, so identical inputs give identical models.
Every trainer re-audits the KKT conditions from scratch (decision values
recomputed from the dual variables, not the optimizer's error cache)
before returning, and records the residual violation on the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return a @ b.T
    if kernel == "rbf":
        sq = (np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :]
              - 2.0 * (a @ b.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class SvcModel:
    kind = "svc"
    kernel: str
    gamma: float
    c: float
    support_x: np.ndarray
    dual_coef: np.ndarray    # alpha_i * y_i
    bias: float
    kkt_violation: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        k = kernel_matrix(np.asarray(x, float), self.support_x, self.kernel, self.gamma)
        return k @ self.dual_coef + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.decision(x) >= 0, 1.0, -1.0)


@dataclass(frozen=True)
class SvrModel:
    kind = "svr"
    kernel: str
    gamma: float
    c: float
    epsilon: float
    support_x: np.ndarray
    dual_coef: np.ndarray    # beta_i = alpha_i - alpha_i^*
    bias: float
    y_mean: float
    y_scale: float
    kkt_violation: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        k = kernel_matrix(np.asarray(x, float), self.support_x, self.kernel, self.gamma)
        return self.y_mean + self.y_scale * (k @ self.dual_coef + self.bias)


def _midpoint_bias(lo: np.ndarray, hi: np.ndarray) -> float:
    """Bias minimizing the worst per-point violation given zero-violation
    intervals [lo_i, hi_i]; the residual is max(0, (max lo - min hi)/2)."""
    l, h = np.max(lo), np.min(hi)
    if np.isfinite(l) and np.isfinite(h):
        return float(0.5 * (l + h))
    if np.isfinite(l):
        return float(l)
    if np.isfinite(h):
        return float(h)
    return 0.0


def svc_kkt_violation(x, y, alpha, bias, *, kernel, gamma, c) -> float:
    """Largest KKT violation of the classification dual, decision values
    recomputed from scratch."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    alpha = np.asarray(alpha, float)
    f = kernel_matrix(x, x, kernel, gamma) @ (alpha * y) + bias
    m = y * f
    at_zero = alpha <= 1e-9
    at_c = alpha >= c - 1e-9
    free = ~at_zero & ~at_c
    v = np.zeros(len(y))
    v[at_zero] = np.maximum(0.0, 1.0 - m[at_zero])
    v[at_c] = np.maximum(0.0, m[at_c] - 1.0)
    v[free] = np.abs(m[free] - 1.0)
    return float(v.max(initial=0.0))


def svr_kkt_violation(x, y_std, beta, bias, *, kernel, gamma, c, epsilon) -> float:
    """Largest epsilon-KKT violation of the regression dual (standardized
    target units), recomputed from the dual variables alone."""
    x = np.asarray(x, float)
    y_std = np.asarray(y_std, float)
    beta = np.asarray(beta, float)
    r = y_std - (kernel_matrix(x, x, kernel, gamma) @ beta + bias)
    at_top = beta >= c - 1e-9
    at_bot = beta <= -c + 1e-9
    pos = (beta > 1e-9) & ~at_top
    neg = (beta < -1e-9) & ~at_bot
    zero = np.abs(beta) <= 1e-9
    v = np.zeros(len(y_std))
    v[at_top] = np.maximum(0.0, epsilon - r[at_top])
    v[at_bot] = np.maximum(0.0, r[at_bot] + epsilon)
    v[pos] = np.abs(r[pos] - epsilon)
    v[neg] = np.abs(r[neg] + epsilon)
    v[zero] = np.maximum(0.0, np.abs(r[zero]) - epsilon)
    return float(v.max(initial=0.0))


def _resolve_gamma(gamma, x):
    return 1.0 / x.shape[1] if gamma is None else float(gamma)


def train_svc(x: np.ndarray, y: np.ndarray, c: float = 10.0,
              kernel: str = "rbf", gamma: float | None = None,
              tol: float = 1e-3, max_iter: int = 1_000_000) -> SvcModel:
    """Platt-style SMO on the hinge-loss dual; iterates (with fresh-cache
    restarts) until the from-scratch KKT audit passes at ``tol``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if set(np.unique(y)) - {1.0, -1.0}:
        raise ValueError("labels must be +-1")
    if len(set(y)) < 2:
        raise ValueError("training set needs both classes")
    n = len(y)
    gamma = _resolve_gamma(gamma, x)
    k = kernel_matrix(x, x, kernel, gamma)
    alpha = np.zeros(n)
    b = 0.0
    err = -y.astype(float)        # f(x_i) - y_i with f = 0 initially
    budget = [max_iter]

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, err
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = err[i1], err[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - c), min(c, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(c, c + a2 - a1)
        if hi - lo < 1e-12:
            return False
        k11, k12, k22 = k[i1, i1], k[i1, i2], k[i2, i2]
        eta = k11 + k22 - 2 * k12
        if eta > 1e-12:
            a2n = float(np.clip(a2 + y2 * (e1 - e2) / eta, lo, hi))
        else:
            # flat direction: evaluate the dual objective at both ends
            f1 = y1 * (e1 + b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (e2 + b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            psi_l = (l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11
                     + 0.5 * lo * lo * k22 + s * lo * l1 * k12)
            psi_h = (h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11
                     + 0.5 * hi * hi * k22 + s * hi * h1 * k12)
            if psi_l < psi_h - 1e-12:
                a2n = lo
            elif psi_h < psi_l - 1e-12:
                a2n = hi
            else:
                return False
        if abs(a2n - a2) < 1e-12 * (a2n + a2 + 1e-12):
            return False
        a1n = a1 + s * (a2 - a2n)
        d1, d2 = y1 * (a1n - a1), y2 * (a2n - a2)
        b1 = b - e1 - d1 * k11 - d2 * k12
        b2 = b - e2 - d1 * k12 - d2 * k22
        if 0 < a1n < c:
            bn = b1
        elif 0 < a2n < c:
            bn = b2
        else:
            bn = 0.5 * (b1 + b2)
        alpha[i1], alpha[i2] = a1n, a2n
        err += d1 * k[i1] + d2 * k[i2] + (bn - b)
        b = bn
        return True

    def examine(i2: int) -> bool:
        r2 = err[i2] * y[i2]
        if not ((r2 < -tol and alpha[i2] < c) or (r2 > tol and alpha[i2] > 0)):
            return False
        free = np.flatnonzero((alpha > 0) & (alpha < c))
        if len(free) > 1:
            i1 = int(free[int(np.argmax(np.abs(err[free] - err[i2])))])
            if take_step(i1, i2):
                return True
        for i1 in free:
            if take_step(int(i1), i2):
                return True
        for i1 in range(n):
            if take_step(i1, i2):
                return True
        return False

    def smo_rounds():
        examine_all = True
        while True:
            changed = 0
            idx = range(n) if examine_all else np.flatnonzero((alpha > 0) & (alpha < c))
            for i in idx:
                changed += examine(int(i))
                budget[0] -= 1
                if budget[0] <= 0:
                    raise RuntimeError("SVC training failed to converge")
            if examine_all:
                if changed == 0:
                    return
                examine_all = False
            elif changed == 0:
                examine_all = True

    violation = np.inf
    for _ in range(5):
        smo_rounds()
        # re-centre the bias from the exact decision values, then audit
        u = k @ (alpha * y)
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        margin_b = np.where(y > 0, 1.0 - u, -1.0 - u)
        lower = ((alpha <= 1e-9) & (y > 0)) | ((alpha >= c - 1e-9) & (y < 0))
        upper = ((alpha <= 1e-9) & (y < 0)) | ((alpha >= c - 1e-9) & (y > 0))
        free = (alpha > 1e-9) & (alpha < c - 1e-9)
        lo[lower | free] = margin_b[lower | free]
        hi[upper | free] = margin_b[upper | free]
        b = _midpoint_bias(lo, hi)
        err = u + b - y
        violation = svc_kkt_violation(x, y, alpha, b, kernel=kernel, gamma=gamma, c=c)
        if violation <= tol:
            break
    if violation > tol:
        raise RuntimeError(f"post-training KKT audit failed: {violation:.2e}")
    sv = alpha > 1e-12
    return SvcModel(kernel=kernel, gamma=gamma, c=c, support_x=x[sv].copy(),
                    dual_coef=(alpha * y)[sv].copy(), bias=b,
                    kkt_violation=violation)


def train_svr(x: np.ndarray, y: np.ndarray, c: float = 10.0,
              kernel: str = "linear", gamma: float | None = None,
              epsilon: float = 0.01, tol: float = 1e-3,
              max_iter: int = 2_000_000) -> SvrModel:
    """Epsilon-insensitive SVR via maximal-violating-pair SMO on the
    beta = alpha - alpha* dual.  Targets are standardized internally, so
    ``epsilon`` is in standard deviations of y."""
    x = np.asarray(x, float)
    y_raw = np.asarray(y, float)
    y_mean = float(y_raw.mean())
    y_scale = float(y_raw.std()) or 1.0
    yv = (y_raw - y_mean) / y_scale
    n = len(yv)
    gamma = _resolve_gamma(gamma, x)
    k = kernel_matrix(x, x, kernel, gamma)
    beta = np.zeros(n)
    f = np.zeros(n)              # K @ beta, biasless predictions

    def take_step(i: int, j: int) -> bool:
        d_lo = max(-c - beta[i], beta[j] - c)
        d_hi = min(c - beta[i], beta[j] + c)
        if d_hi - d_lo < 1e-14:
            return False
        eta = k[i, i] + k[j, j] - 2 * k[i, j]
        lin = (yv[i] - f[i]) - (yv[j] - f[j])

        def gain(d):
            return (-0.5 * eta * d * d + d * lin
                    - epsilon * (abs(beta[i] + d) - abs(beta[i]))
                    - epsilon * (abs(beta[j] - d) - abs(beta[j])))

        cands = {d_lo, d_hi}
        for kink in (-beta[i], beta[j]):
            if d_lo < kink < d_hi:
                cands.add(kink)
        if eta > 1e-14:
            for si in (-1.0, 1.0):
                for sj in (-1.0, 1.0):
                    d = (lin - epsilon * (si - sj)) / eta
                    if d_lo <= d <= d_hi:
                        cands.add(d)
        best_d, best_w = 0.0, 0.0
        for d in sorted(cands):
            w = gain(d)
            if w > best_w + 1e-15:
                best_d, best_w = d, w
        if best_w <= 1e-14:
            return False
        beta[i] += best_d
        beta[j] -= best_d
        f[:] += best_d * (k[:, i] - k[:, j])
        return True

    def kkt_gap() -> float:
        g = yv - f
        up = np.where(beta >= 0, g - epsilon, g + epsilon)
        dn = np.where(beta > 0, -g + epsilon, -g - epsilon)
        up[beta >= c] = -np.inf
        dn[beta <= -c] = -np.inf
        return float(np.max(up) + np.max(dn))

    def smo_sweep(budget: int) -> bool:
        """Pair steps with second-order partner choice; True once the
        stopping gap is reached.  A pair can be unmovable when a variable
        sits a hair inside the box, so failed steps fall back to the next
        best partner (and then the next lead index) before giving up."""
        diag = np.diag(k)
        for _ in range(budget):
            g = yv - f
            up = np.where(beta >= 0, g - epsilon, g + epsilon)
            dn = np.where(beta > 0, -g + epsilon, -g - epsilon)
            up[beta >= c] = -np.inf
            dn[beta <= -c] = -np.inf
            if np.max(up) + np.max(dn) <= tol:
                return True
            stepped = False
            up_work = up.copy()
            for _lead in range(3):
                i = int(np.argmax(up_work))
                if not np.isfinite(up_work[i]):
                    break
                gains = up[i] + dn
                gains[i] = -np.inf
                eta_i = np.maximum(diag[i] + diag - 2.0 * k[i], 1e-12)
                score = np.where(gains > 0, gains * gains / eta_i, -np.inf)
                for _partner in range(5):
                    j = int(np.argmax(score))
                    if not np.isfinite(score[j]):
                        break
                    if take_step(i, j):
                        stepped = True
                        break
                    score[j] = -np.inf
                if stepped:
                    break
                up_work[i] = -np.inf
            if not stepped:
                return False
        return False

    def newton_jump() -> bool:
        """Ridge-regularized Newton step over the current free set (sum of
        beta held fixed), followed by an exact line search.  Pair steps
        alone crawl when the kernel matrix is rank-deficient; this jump
        restores fast convergence, and the ridge keeps the step an ascent
        direction even when the free-set equalities are inconsistent."""
        at_top = beta >= c - 1e-9
        at_bot = beta <= -c + 1e-9
        zero = np.abs(beta) <= 1e-9
        free = np.flatnonzero(~at_top & ~at_bot & ~zero)
        m = len(free)
        if m == 0:
            return False
        kff = k[np.ix_(free, free)]
        grad = yv[free] - f[free] - epsilon * np.sign(beta[free])
        lam = 1e-8 * (np.trace(kff) / m + 1.0)
        bordered = np.zeros((m + 1, m + 1))
        bordered[:m, :m] = kff + lam * np.eye(m)
        bordered[:m, m] = 1.0
        bordered[m, :m] = 1.0
        try:
            sol = np.linalg.solve(bordered, np.append(grad, 0.0))
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(bordered, np.append(grad, 0.0), rcond=None)[0]
        delta = np.zeros_like(beta)
        delta[free] = sol[:m]
        if np.max(np.abs(delta)) < 1e-12:
            return False
        # exact line search on the piecewise-quadratic dual objective,
        # capped where the first free variable would leave the box
        kd = k @ delta
        quad = float(delta @ kd)
        lin = float(delta @ (yv - f))
        t_max = 1.0
        for i in free:
            if delta[i] > 0:
                t_max = min(t_max, (c - beta[i]) / delta[i])
            elif delta[i] < 0:
                t_max = min(t_max, (-c - beta[i]) / delta[i])
        if t_max <= 1e-12:
            return False
        kinks = sorted({float(-beta[i] / delta[i]) for i in free
                        if delta[i] != 0 and 0 < -beta[i] / delta[i] < t_max})

        def obj(t):
            return (-0.5 * quad * t * t + lin * t
                    - epsilon * float(np.sum(np.abs(beta[free] + t * delta[free])
                                             - np.abs(beta[free]))))

        cands = set(kinks) | {t_max}
        if quad > 1e-14:
            edges = [0.0, *kinks, t_max]
            for a, bnd in zip(edges[:-1], edges[1:]):
                mid = 0.5 * (a + bnd)
                sd = float(np.sign(beta[free] + mid * delta[free]) @ delta[free])
                t_star = (lin - epsilon * sd) / quad
                if a < t_star < bnd:
                    cands.add(float(t_star))
        best_t, best_w = 0.0, 0.0
        for t in sorted(cands):
            w = obj(t)
            if w > best_w + 1e-15:
                best_t, best_w = t, w
        if best_w <= 1e-14:
            return False
        beta[:] += best_t * delta
        f[:] += best_t * kd
        return True

    converged = False
    sweep_budget = 1000
    prev_gap = np.inf
    stalled = 0
    for _ in range(max(60, max_iter // sweep_budget)):
        if smo_sweep(sweep_budget):
            converged = True
            break
        jumped = newton_jump()
        gap = kkt_gap()
        if gap <= tol:
            converged = True
            break
        # early rounds often have an empty free set; give up only after
        # several rounds where neither pair steps nor the jump reduce the gap
        if not jumped and gap >= prev_gap - 1e-12:
            stalled += 1
            if stalled >= 5:
                break
        else:
            stalled = 0
        prev_gap = min(prev_gap, gap)
    if not converged and kkt_gap() > tol:
        raise RuntimeError("SVR training failed to converge")

    # bias from the zero-violation interval of every point's KKT condition
    g = yv - f
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    at_top = beta >= c - 1e-9
    at_bot = beta <= -c + 1e-9
    pos = (beta > 1e-9) & ~at_top
    neg = (beta < -1e-9) & ~at_bot
    zero = np.abs(beta) <= 1e-9
    hi[at_top] = g[at_top] - epsilon
    lo[at_bot] = g[at_bot] + epsilon
    lo[pos] = hi[pos] = g[pos] - epsilon
    lo[neg] = hi[neg] = g[neg] + epsilon
    lo[zero] = g[zero] - epsilon
    hi[zero] = g[zero] + epsilon
    b = _midpoint_bias(lo, hi)

    violation = svr_kkt_violation(x, yv, beta, b, kernel=kernel, gamma=gamma,
                                  c=c, epsilon=epsilon)
    if violation > tol:
        raise RuntimeError(f"post-training KKT audit failed: {violation:.2e}")
    sv = np.abs(beta) > 1e-12
    if not np.any(sv):
        sv = np.zeros(n, bool)
        sv[0] = True
    return SvrModel(kernel=kernel, gamma=gamma, c=c, epsilon=epsilon,
                    support_x=x[sv].copy(), dual_coef=beta[sv].copy(), bias=b,
                    y_mean=y_mean, y_scale=y_scale, kkt_violation=violation)
