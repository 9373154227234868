"""Shared test oracles: high-precision integration, convex reference solver,
brute-force metric recomputation."""

import itertools

import mpmath
import numpy as np


def _standard_tn_integrals(alpha, beta):
    """E[Z^0], E[Z], E[Z^2] integrals of the standard normal over (alpha, beta).

    Deep-tail intervals are integrated after the substitution z = alpha + t,
    factoring out exp(-alpha^2/2) so adaptive quadrature keeps *relative*
    accuracy even when the interval mass underflows double precision.
    """
    mp = mpmath
    if beta < 0:
        # Mirror onto the right tail; odd moment flips sign.
        i0, i1, i2 = _standard_tn_integrals(-beta, -alpha)
        return i0, -i1, i2
    norm = mp.sqrt(2 * mp.pi)
    if alpha > 3:
        width = beta - alpha
        scale = mp.exp(-alpha * alpha / 2) / norm

        def moment(k):
            f = lambda t: (alpha + t) ** k * mp.exp(-alpha * t - t * t / 2)
            return scale * mp.quad(f, [0, width])

        return moment(0), moment(1), moment(2)
    pdf = lambda z: mp.exp(-z * z / 2) / norm
    pieces = [alpha, beta] if beta <= 3 else [alpha, 3, beta]
    i0 = mp.quad(pdf, pieces)
    i1 = mp.quad(lambda z: z * pdf(z), pieces)
    i2 = mp.quad(lambda z: z * z * pdf(z), pieces)
    return i0, i1, i2


def tn_oracle(mu0, sigma0, a, b):
    """Truncated-normal moments by adaptive quadrature at 50 digits.

    Standardizes to Z = (X - mu0)/sigma0 and integrates E[Z], E[Z^2] over
    (alpha, beta) against the standard normal density.
    """
    mpmath.mp.dps = 50
    mu0, sigma0, a, b = float(mu0), float(sigma0), float(a), float(b)
    alpha = mpmath.mpf("-inf") if a == -np.inf else (mpmath.mpf(repr(a)) - mpmath.mpf(repr(mu0))) / mpmath.mpf(repr(sigma0))
    beta = mpmath.mpf("inf") if b == np.inf else (mpmath.mpf(repr(b)) - mpmath.mpf(repr(mu0))) / mpmath.mpf(repr(sigma0))
    mass, i1, i2 = _standard_tn_integrals(alpha, beta)
    ez = i1 / mass
    ez2 = i2 / mass
    mu0, sigma0 = mpmath.mpf(repr(mu0)), mpmath.mpf(repr(sigma0))
    m1 = mu0 + sigma0 * ez
    m2 = mu0**2 + 2 * mu0 * sigma0 * ez + sigma0**2 * ez2
    return float(m1), float(m2)


def tn_oracle_grid():
    """200 (mu0, sigma0, a, b) cases: two-sided, one-sided, and deep tails."""
    inf = np.inf
    intervals = [
        (0.0, 0.7), (-2.0, -0.5), (0.5, 2.5), (1.0, 1.2), (-0.3, 1.9),
        (0.01, 0.02), (-1.7, 0.4), (0.25, 4.0), (-5.0, -0.75), (2.2, 2.9),
        (6.0, 7.0), (-7.5, -6.2), (8.0, 10.0), (-12.0, -10.5), (6.5, 6.6),
        (-inf, -1.0), (-inf, 0.3), (-inf, 2.0), (-inf, -6.0),
        (1.5, inf), (-0.5, inf), (6.0, inf), (-8.0, inf),
        (-inf, -0.05), (0.9, inf),
    ]
    params = [
        (0.0, 1.0), (0.7, 0.4), (-1.2, 2.0), (2.5, 1.5),
        (0.3, 0.8), (-0.6, 1.3), (1.1, 0.25), (-2.4, 0.6),
    ]
    cases = [
        (mu0, sigma0, a, b)
        for (mu0, sigma0), (a, b) in itertools.product(params, intervals)
    ]
    return cases[:200]


def cvxpy_fgl(Rs, ns, lambda1, lambda2):
    """Reference solution of the fused multi-group log-det program.

    Maximizes sum_k (n_k/2)(logdet T_k - tr(T_k R_k)) - lambda1 * off-diag l1
    - lambda2 * all-pairs fusion; returns (thetas, objective).
    """
    import cvxpy as cp

    K = len(Rs)
    p = Rs[0].shape[0]
    thetas = [cp.Variable((p, p), symmetric=True) for _ in range(K)]
    obj = 0
    offdiag = np.ones((p, p)) - np.eye(p)
    for T, R, n in zip(thetas, Rs, ns):
        obj += 0.5 * n * (cp.log_det(T) - cp.trace(T @ R))
        obj -= lambda1 * cp.sum(cp.abs(cp.multiply(offdiag, T)))
    for i in range(K):
        for j in range(i + 1, K):
            obj -= lambda2 * cp.sum(cp.abs(thetas[i] - thetas[j]))
    problem = cp.Problem(cp.Maximize(obj))
    problem.solve(solver=cp.CLARABEL)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solver failed: {problem.status}")
    return [np.asarray(T.value) for T in thetas], float(problem.value)


def cvxpy_fused_prox(a, l1, l2):
    """Reference prox of l1*||z||_1 + l2 * sum_{k<k'} |z_k - z_k'|."""
    import cvxpy as cp

    a = np.asarray(a, dtype=float)
    K, m = a.shape
    z = cp.Variable((K, m))
    obj = 0.5 * cp.sum_squares(z - a) + cp.sum(
        cp.multiply(np.broadcast_to(l1, (m,))[np.newaxis, :], cp.abs(z))
    )
    for i in range(K):
        for j in range(i + 1, K):
            obj += l2 * cp.sum(cp.abs(z[i] - z[j]))
    problem = cp.Problem(cp.Minimize(obj))
    problem.solve(solver=cp.CLARABEL)
    return np.asarray(z.value), float(problem.value)


def brute_fpr_tpr(truth, est):
    """Edge-by-edge recount of the group-averaged FPR/TPR."""
    K = truth.n_groups
    p = truth.p
    fprs, tprs = [], []
    for k in range(K):
        fp = tp = n_edge = n_nonedge = 0
        for i in range(p):
            for j in range(i + 1, p):
                is_true = (i, j) in truth.edge_sets[k]
                is_est = abs(est.matrices[k][i, j]) > est.zero_threshold
                if is_true:
                    n_edge += 1
                    tp += is_est
                else:
                    n_nonedge += 1
                    fp += is_est
        fprs.append(fp / n_nonedge)
        tprs.append(tp / n_edge)
    return sum(fprs) / K, sum(tprs) / K


def random_correlation(rng, p):
    """A random well-conditioned correlation matrix."""
    A = rng.standard_normal((p, 2 * p))
    S = A @ A.T / (2 * p) + 0.1 * np.eye(p)
    d = 1.0 / np.sqrt(np.diag(S))
    R = S * np.outer(d, d)
    np.fill_diagonal(R, 1.0)
    return R
