"""Pure-numpy fixed-step RK4 for ``i dY/dt = L(t) Y - Y R(t)``."""

import numpy as np


def _rhs(L, R, Y):
    out = L @ Y
    if R is not None:
        out = out - Y @ R
    return -1j * out


def rk4_flow(L, R, y0, h):
    """Integrate over ``n`` steps of size ``h``.

    ``L`` (and ``R`` if given) hold ``2n+1`` samples at ``t0 + k*h/2``;
    ``y0`` has shape ``(d, m)``. Returns the ``(n+1, d, m)`` trajectory.
    """
    L = np.asarray(L, dtype=complex)
    if L.shape[0] % 2 != 1 or L.shape[0] < 3:
        raise ValueError("L must hold 2*n+1 samples at half-step spacing")
    if R is not None:
        R = np.asarray(R, dtype=complex)
    n = (L.shape[0] - 1) // 2
    Y = np.array(y0, dtype=complex)
    traj = np.empty((n + 1,) + Y.shape, dtype=complex)
    traj[0] = Y
    for s in range(n):
        i = 2 * s
        r0 = R[i] if R is not None else None
        r1 = R[i + 1] if R is not None else None
        r2 = R[i + 2] if R is not None else None
        k1 = _rhs(L[i], r0, Y)
        k2 = _rhs(L[i + 1], r1, Y + 0.5 * h * k1)
        k3 = _rhs(L[i + 1], r1, Y + 0.5 * h * k2)
        k4 = _rhs(L[i + 2], r2, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[s + 1] = Y
    return traj
