"""NumPy fallback for the compiled RK4 kernel (same signature and arithmetic)."""

import numpy as np


def _hamiltonian(h0, drives, daggers, nus, t):
    h = h0.copy()
    for v, vd, nu in zip(drives, daggers, nus):
        ph = np.exp(1j * nu * t)
        h += v * ph + vd * np.conj(ph)
    return h


def rk4_evolve(h0, drives, nus, y0, t0, dt, nsteps):
    """Advance ``y0`` (shape ``(n, m)`` or ``(n,)``) by ``nsteps`` RK4 steps of size ``dt``."""
    h0 = np.asarray(h0, dtype=complex)
    n = h0.shape[0]
    drives = np.asarray(drives, dtype=complex).reshape(-1, n, n)
    nus = np.asarray(nus, dtype=float).reshape(-1)
    if drives.shape[0] != nus.size:
        raise ValueError("one frequency per drive matrix is required")
    daggers = np.conj(np.transpose(drives, (0, 2, 1)))
    y_in = np.asarray(y0, dtype=complex)
    squeeze = y_in.ndim == 1
    y = np.array(y_in.reshape(n, -1), dtype=complex)
    half = 0.5 * dt
    for step in range(int(nsteps)):
        t = t0 + step * dt
        ha = -1j * _hamiltonian(h0, drives, daggers, nus, t)
        hb = -1j * _hamiltonian(h0, drives, daggers, nus, t + half)
        hc = -1j * _hamiltonian(h0, drives, daggers, nus, t + dt)
        k1 = ha @ y
        k2 = hb @ (y + half * k1)
        k3 = hb @ (y + half * k2)
        k4 = hc @ (y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y[:, 0].copy() if squeeze else y
