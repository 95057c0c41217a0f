"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way (explicit
loops, textbook formulas, third-party reference functions) so that module
code and test expectations never share a code path.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

SQRT2 = float(np.sqrt(2.0))

HAAR_LOW = (1.0 / SQRT2, 1.0 / SQRT2)


def highpass_from_lowpass(h):
    """Quadrature mirror: g_k = (-1)^k h_{N-1-k}."""
    n = len(h)
    return tuple((-1.0) ** k * h[n - 1 - k] for k in range(n))


def discrete_wavelet(h, level: int) -> np.ndarray:
    """psi_j built straight from the two-term recursion, double loop."""
    g = highpass_from_lowpass(h)
    psi = np.array(g, dtype=np.float64)
    for _ in range(level - 1):
        n_next = 2 * len(psi) - 1 + (len(h) - 1)
        out = np.zeros(n_next)
        for n in range(n_next):
            acc = 0.0
            for k, pk in enumerate(psi):
                idx = n - 2 * k
                if 0 <= idx < len(h):
                    acc += h[idx] * pk
            out[n] = acc
        psi = out
    return psi


def scaling_function(h, level: int) -> np.ndarray:
    """phi_j from the same cascade with the low-pass seed."""
    phi = np.array(h, dtype=np.float64)
    for _ in range(level - 1):
        n_next = 2 * len(phi) - 1 + (len(h) - 1)
        out = np.zeros(n_next)
        for n in range(n_next):
            acc = 0.0
            for k, pk in enumerate(phi):
                idx = n - 2 * k
                if 0 <= idx < len(h):
                    acc += h[idx] * pk
            out[n] = acc
        phi = out
    return phi


def ndwt_details_bruteforce(x: np.ndarray, levels: int, h=HAAR_LOW) -> np.ndarray:
    """d_j[k] = sum_n psi_{j,n} x[(k+n) mod w], one scale at a time."""
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[-1]
    out = np.zeros((levels, w))
    for j in range(1, levels + 1):
        psi = discrete_wavelet(h, j)
        for k in range(w):
            out[j - 1, k] = sum(p * x[(k + n) % w] for n, p in enumerate(psi))
    return out


def ndwt_smooths_bruteforce(x: np.ndarray, levels: int, h=HAAR_LOW) -> np.ndarray:
    """c_j[k] = sum_n phi_{j,n} x[(k+n) mod w] for j = 1..levels."""
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[-1]
    out = np.zeros((levels, w))
    for j in range(1, levels + 1):
        phi = scaling_function(h, j)
        for k in range(w):
            out[j - 1, k] = sum(p * x[(k + n) % w] for n, p in enumerate(phi))
    return out


def autocorrelation_bruteforce(psi: np.ndarray) -> np.ndarray:
    """Psi(tau) = sum_k psi_k psi_{k+tau} over tau = -(N-1)..(N-1)."""
    n = len(psi)
    taus = range(-(n - 1), n)
    vals = []
    for tau in taus:
        acc = 0.0
        for k in range(n):
            if 0 <= k + tau < n:
                acc += psi[k] * psi[k + tau]
        vals.append(acc)
    return np.array(vals)


def inner_product_bruteforce(h, levels: int) -> np.ndarray:
    """A[j,l] = sum_tau Psi_j(tau) Psi_l(tau) with explicit alignment."""
    acfs = [autocorrelation_bruteforce(discrete_wavelet(h, j)) for j in range(1, levels + 1)]
    a = np.zeros((levels, levels))
    for j in range(levels):
        for l in range(levels):
            pj, pl = acfs[j], acfs[l]
            cj, cl = len(pj) // 2, len(pl) // 2
            lo = -min(cj, cl)
            hi = min(cj, cl)
            a[j, l] = sum(pj[cj + t] * pl[cl + t] for t in range(lo, hi + 1))
    return a


def boxcar_bruteforce(x: np.ndarray, half_width: int) -> np.ndarray:
    """Centred periodic mean along the last axis, explicit loop."""
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[-1]
    out = np.zeros_like(x)
    for k in range(w):
        acc = np.zeros(x.shape[:-1])
        for m in range(k - half_width, k + half_width + 1):
            acc = acc + x[..., m % w]
        out[..., k] = acc / (2 * half_width + 1)
    return out


def var_stationary_cov(phis, sigma) -> np.ndarray:
    """Lag-0 autocovariance of a stable VAR via the companion Lyapunov
    equation."""
    phis = [np.asarray(p, dtype=np.float64) for p in phis]
    sigma = np.asarray(sigma, dtype=np.float64)
    p = len(phis)
    d = sigma.shape[0]
    comp = np.zeros((p * d, p * d))
    comp[:d] = np.hstack(phis)
    if p > 1:
        comp[d:, : (p - 1) * d] = np.eye((p - 1) * d)
    q = np.zeros((p * d, p * d))
    q[:d, :d] = sigma
    big = solve_discrete_lyapunov(comp, q)
    return big[:d, :d]


def vma_stationary_cov(thetas, sigma) -> np.ndarray:
    """Lag-0 autocovariance of an MA process: sum_l Theta_l Sigma Theta_l'."""
    sigma = np.asarray(sigma, dtype=np.float64)
    total = sigma.copy()
    for th in thetas:
        th = np.asarray(th, dtype=np.float64)
        total = total + th @ sigma @ th.T
    return total


def gaussian_posterior_bruteforce(feat, means, covs, priors) -> np.ndarray:
    """Bayes rule with dense determinants/inverses, no log-space tricks."""
    feat = np.asarray(feat, dtype=np.float64)
    scores = []
    for mu, cov, pr in zip(means, covs, priors):
        diff = feat - mu
        quad = float(diff @ np.linalg.inv(cov) @ diff)
        dens = pr * np.linalg.det(cov) ** -0.5 * np.exp(-0.5 * quad)
        scores.append(dens)
    scores = np.array(scores)
    return scores / scores.sum()
