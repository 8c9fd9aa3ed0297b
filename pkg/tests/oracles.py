"""Independent reference computations used by the test-suite.

Deliberately naive: explicit loops, explicit differences, no shared code
with the package.
"""

import math
from fractions import Fraction


def naive_distances(X):
    n = len(X)
    return [
        [math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j]))) for j in range(n)]
        for i in range(n)
    ]


def naive_centered(D):
    n = len(D)
    row = [sum(D[i]) / n for i in range(n)]
    col = [sum(D[i][j] for i in range(n)) / n for j in range(n)]
    grand = sum(row) / n
    return [[D[i][j] - row[i] - col[j] + grand for j in range(n)] for i in range(n)]


def naive_dcov(X, Y):
    A = naive_centered(naive_distances(X))
    B = naive_centered(naive_distances(Y))
    n = len(X)
    s = math.fsum(A[i][j] * B[i][j] for i in range(n) for j in range(n)) / n**2
    return math.sqrt(max(s, 0.0))


def naive_dcor(X, Y):
    return naive_dcov(X, Y) / math.sqrt(naive_dcov(X, X) * naive_dcov(Y, Y))


def exact_dcov_sq_1d(xs):
    """dcov(X, X)**2 in exact rational arithmetic for integer 1-D samples."""
    n = len(xs)
    D = [[Fraction(abs(a - b)) for b in xs] for a in xs]
    row = [sum(r) / n for r in D]
    grand = sum(row) / n
    A = [[D[i][j] - row[i] - row[j] + grand for j in range(n)] for i in range(n)]
    return sum(A[i][j] ** 2 for i in range(n) for j in range(n)) / n**2


def pearson_direct(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def scanline_mask_count(vertices, size=64):
    """Count pixel centres inside a convex polygon by per-row edge intersections."""
    count = 0
    m = len(vertices)
    for r in range(size):
        y = r + 0.5
        xs = []
        for k in range(m):
            (x0, y0), (x1, y1) = vertices[k], vertices[(k + 1) % m]
            if y0 == y1:
                continue
            lo, hi = min(y0, y1), max(y0, y1)
            if lo <= y <= hi:
                xs.append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        if len(xs) < 2:
            continue
        left, right = min(xs), max(xs)
        for c in range(size):
            if left <= c + 0.5 <= right:
                count += 1
    return count


def gaussian_log_likelihood(y, y_hat, sigma2):
    n = len(y)
    ss = sum((a - b) ** 2 for a, b in zip(y, y_hat))
    return -n / 2 * math.log(2 * math.pi * sigma2) - ss / (2 * sigma2)
