"""Pure numpy time-marching kernels.

Reference implementation of the loops in ``_ckernels.pyx``; same signatures,
same status codes and the same floating-point operation order.

Status codes returned as ``(status, level, value)``:

    0  ok
    1  non-finite value produced at ``level``
    2  value below the negativity floor at ``level``
    3  reaction step guard ``dt * (rate + 2 * quad * running_max) > 0.5``
       violated before stepping from ``level``
"""

import numpy as np

NEGATIVITY_FLOOR = -1e-10


def flux_march(w0, h, rate, src, mu, dx, dt, quad, guard_rate, dirichlet, check_negative, out):
    """March ``w_t = -(F)_x + w (rate - quad w) + src`` forward in time.

    ``F = -mu w_x + h w`` with first-order upwind face values; boundary nodes
    own half cells and zero boundary flux (no-flux), or are pinned to zero
    (``dirichlet``).  ``out[0]`` receives ``w0``.
    """
    nt, nx = out.shape
    vol = np.full(nx, dx)
    vol[0] = vol[-1] = 0.5 * dx
    flux = np.zeros(nx + 1)
    out[0] = w0
    wmax = float(np.max(w0))
    for n in range(nt - 1):
        if dt * (guard_rate + 2.0 * quad * wmax) > 0.5:
            return 3, n, wmax
        w = out[n]
        hn = h[n]
        hf = 0.5 * (hn[:-1] + hn[1:])
        adv = np.where(hf >= 0.0, hf * w[:-1], hf * w[1:])
        flux[1:-1] = -mu * (w[1:] - w[:-1]) / dx + adv
        new = w - dt * (flux[1:] - flux[:-1]) / vol + dt * (w * (rate[n] - quad * w) + (src[n] if src is not None else 0.0))
        if dirichlet:
            new[0] = 0.0
            new[-1] = 0.0
        out[n + 1] = new
        if not np.all(np.isfinite(new)):
            bad = int(np.flatnonzero(~np.isfinite(new))[0])
            return 1, n + 1, float(new[bad])
        lo = float(np.min(new))
        if check_negative and lo < NEGATIVITY_FLOOR:
            return 2, n + 1, lo
        wmax = max(wmax, float(np.max(new)))
    return 0, nt - 1, wmax


def adjoint_march(h, c, mu, dx, dt, dirichlet, out):
    """March ``-p_t = mu p_xx + h p_x - c p + 1`` backward from ``p(T) = 0``.

    Non-divergence form; the advective difference is upwinded on ``b = -h``
    and no-flux boundaries use mirror ghosts.
    """
    nt, nx = out.shape
    out[nt - 1] = 0.0
    left = np.empty(nx)
    right = np.empty(nx)
    for k in range(nt - 1, 0, -1):
        q = out[k]
        left[1:] = q[:-1]
        left[0] = q[1]
        right[:-1] = q[1:]
        right[-1] = q[nx - 2]
        d2 = (left - 2.0 * q + right) / (dx * dx)
        b = -h[k]
        d1 = np.where(b > 0.0, (q - left) / dx, (right - q) / dx)
        new = q + dt * (mu * d2 - b * d1 - c[k] * q + 1.0)
        if dirichlet:
            new[0] = 0.0
            new[-1] = 0.0
        out[k - 1] = new
        if not np.all(np.isfinite(new)):
            bad = int(np.flatnonzero(~np.isfinite(new))[0])
            return 1, k - 1, float(new[bad])
    return 0, 0, 0.0
