"""Quadrature and differentiation on uniform grids."""

import numpy as np


def cumulative_simpson(y, h):
    """Running integral ``int_0^{t_i} y`` on a uniform grid with an odd number of points.

    Even nodes use composite Simpson from node 0. Odd nodes use composite
    Simpson from node 1, seeded with the cubic rule
    ``h/24 (9 y0 + 19 y1 - 5 y2 + y3)`` over the first step, which keeps
    even and odd nodes at matching order (no odd/even sawtooth that a
    later differentiation would amplify).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson needs an odd number of points >= 3, got {n}")
    out = np.zeros(n)
    y0, y1, y2 = y[0:-2:2], y[1:-1:2], y[2::2]
    out[2::2] = np.cumsum(h / 3.0 * (y0 + 4.0 * y1 + y2))
    if n == 3:
        out[1] = h / 12.0 * (5.0 * y[0] + 8.0 * y[1] - y[2])
        return out
    out[1] = h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
    z0, z1, z2 = y[1:-3:2], y[2:-2:2], y[3:-1:2]
    out[3::2] = out[1] + np.cumsum(h / 3.0 * (z0 + 4.0 * z1 + z2))
    return out


def integrating_factor_integral(f, G, h):
    """``exp(-G(t)) int_0^t f(s) exp(G(s)) ds`` on a uniform odd grid.

    Same node layout as :func:`cumulative_simpson`, but accumulated panel by
    panel with every exponent referenced to the panel's right end, so a
    large ``G`` never overflows.
    """
    f = np.asarray(f, dtype=float)
    G = np.asarray(G, dtype=float)
    n = f.size
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson needs an odd number of points >= 3, got {n}")
    out = np.zeros(n)
    _simpson_panels(out, f, G, h, start=0)
    if n == 3:
        out[1] = h / 12.0 * (5.0 * f[0] * np.exp(G[0] - G[1]) + 8.0 * f[1] - f[2] * np.exp(G[2] - G[1]))
        return out
    w = np.exp(G[:4] - G[1])
    out[1] = h / 24.0 * (9.0 * f[0] * w[0] + 19.0 * f[1] - 5.0 * f[2] * w[2] + f[3] * w[3])
    _simpson_panels(out, f, G, h, start=1)
    return out


def _simpson_panels(out, f, G, h, start):
    for k in range(start, f.size - 2, 2):
        g0, g1, g2 = G[k], G[k + 1], G[k + 2]
        out[k + 2] = np.exp(g0 - g2) * out[k] + h / 3.0 * (
            f[k] * np.exp(g0 - g2) + 4.0 * f[k + 1] * np.exp(g1 - g2) + f[k + 2]
        )


def derivative(y, h):
    """First derivative: fourth-order central stencil inside, second order at the edges.

    Nodes 1 and n-2 use the second-order central difference, nodes 0 and
    n-1 the second-order one-sided formula.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 3:
        raise ValueError("need at least 3 points")
    d = np.empty(n)
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    d[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    d[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    if n >= 5:
        d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    return d


def interior(n):
    """Slice of nodes served by the fourth-order stencil."""
    return slice(2, n - 2)
