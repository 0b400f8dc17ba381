"""Brute-force reference computations, kept independent of the package code paths."""
import numpy as np


def gramian_loops(vectors, weights):
    n = len(vectors)
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(len(weights)):
                s += weights[k] * vectors[i][k] * vectors[j][k]
            G[i, j] = s
    return G


def mgs_greedy(vectors, weights, n_max, tol=1e-12):
    """Greedy by explicit modified Gram-Schmidt: pick the max-residual candidate each step."""
    w = np.asarray(weights, dtype=float)
    residuals = [np.array(v, dtype=float) for v in vectors]
    chosen = []
    first = None
    for _ in range(n_max):
        norms = [float(np.sum(w * r * r)) if i not in chosen else -np.inf
                 for i, r in enumerate(residuals)]
        j = int(np.argmax(norms))
        if first is None:
            first = norms[j]
        elif norms[j] < tol * first:
            break
        chosen.append(j)
        q = residuals[j] / np.sqrt(norms[j])
        for i in range(len(residuals)):
            if i not in chosen:
                residuals[i] = residuals[i] - np.sum(w * residuals[i] * q) * q
    return chosen


def inv3(A):
    """Explicit 3x3 inverse by cofactors."""
    a, b, c = A[0]
    d, e, f = A[1]
    g, h, i = A[2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    cof = np.array([
        [e * i - f * h, -(b * i - c * h), b * f - c * e],
        [-(d * i - f * g), a * i - c * g, -(a * f - c * d)],
        [d * h - e * g, -(a * h - b * g), a * e - b * d],
    ])
    return cof / det
