"""NumPy reference implementation of the hot kernels.

Used when the compiled extension is unavailable and as the ground truth
the compiled kernels are tested against.
"""

import numpy as np


def poisson_value(g, counts, t, hd, sigma):
    """Shifted Poisson negative log-likelihood from per-cell counts.

    Returns hd*sum(g) - (1/t)*sum(counts*log(g+sigma))
    - sigma*hd*sum(log(g+sigma)), or +inf when a counted cell has
    g+sigma == 0.  The sigma term vanishes for sigma == 0.
    """
    shifted = g + sigma
    value = hd * float(np.sum(g))
    pos = counts > 0
    if np.any(shifted[pos] == 0.0):
        return np.inf
    if np.any(pos):
        value -= float(np.sum(counts[pos] * np.log(shifted[pos]))) / t
    if sigma > 0.0:
        value -= sigma * hd * float(np.sum(np.log(shifted)))
    return value


def poisson_grad(g, dens, sigma, out):
    """Per-cell gradient weights 1 - (dens+sigma)/(g+sigma).

    dens is the empirical density counts/(t*hd).  The L2 gradient of the
    shifted likelihood at g is exactly this weight field.
    """
    np.divide(dens + sigma, g + sigma, out=out)
    np.subtract(1.0, out, out=out)
    return out


def kl_value(g, gdag, sigma, hd):
    """Shifted Kullback-Leibler divergence of g from gdag.

    Integrates (g+s) - (gdag+s) - (gdag+s)*log((g+s)/(gdag+s)) over the
    cells where gdag+sigma > 0; +inf when g+sigma vanishes on such a cell.
    """
    a = g + sigma
    b = gdag + sigma
    mask = b > 0.0
    a = a[mask]
    b = b[mask]
    if np.any(a == 0.0):
        return np.inf
    return hd * float(np.sum(a - b - b * (np.log(a) - np.log(b))))


def entropy_prox(v, step, lo, hi, out):
    """Proximal map of step * integral(u log u) with box clipping.

    Solves u - v + step*(log(u) + 1) = 0 per cell by Newton iteration in
    x = log(u) (globally convergent for this convex increasing residual),
    then clips to [lo, hi].
    """
    x = np.log(np.maximum(v, step))
    for _ in range(60):
        ex = np.exp(x)
        f = ex + step * x + (step - v)
        dx = f / (ex + step)
        x -= dx
        if np.max(np.abs(dx)) <= 1e-15 * (1.0 + np.max(np.abs(x))):
            break
    np.exp(x, out=out)
    np.clip(out, lo, hi, out=out)
    return out
