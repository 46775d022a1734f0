# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 for i dy/dt = H(t) y with a few-tone Hamiltonian.

H(t) = H0 + sum_p (V_p exp(i nu_p t) + V_p^dagger exp(-i nu_p t)).
Only the union of nonzero entries of H0 and the V_p is touched per stage.
"""
import numpy as np
from libc.math cimport cos, sin


cdef inline void _assemble(double t, Py_ssize_t nnz, Py_ssize_t ntone,
                           const double[::1] nus,
                           const double complex[::1] base,
                           const double complex[:, ::1] up,
                           const double complex[:, ::1] down,
                           double complex[::1] phase,
                           double complex[::1] hval) noexcept nogil:
    cdef Py_ssize_t e, p
    cdef double complex acc
    for p in range(ntone):
        phase[p] = cos(nus[p] * t) + 1j * sin(nus[p] * t)
    for e in range(nnz):
        acc = base[e]
        for p in range(ntone):
            acc = acc + up[p, e] * phase[p] + down[p, e] * phase[p].conjugate()
        hval[e] = acc


cdef inline void _apply(Py_ssize_t nnz, Py_ssize_t m,
                        const Py_ssize_t[::1] rows, const Py_ssize_t[::1] cols,
                        const double complex[::1] hval,
                        const double complex[:, ::1] y,
                        double complex[:, ::1] out) noexcept nogil:
    # out = -i H y
    cdef Py_ssize_t e, c, r, s
    cdef double complex h
    for r in range(out.shape[0]):
        for c in range(m):
            out[r, c] = 0
    for e in range(nnz):
        r = rows[e]
        s = cols[e]
        h = -1j * hval[e]
        for c in range(m):
            out[r, c] = out[r, c] + h * y[s, c]


def rk4_evolve(h0, drives, nus, y0, double t0, double dt, long nsteps):
    """Advance ``y0`` (shape ``(n, m)``) by ``nsteps`` RK4 steps of size ``dt``."""
    h0 = np.ascontiguousarray(h0, dtype=np.complex128)
    cdef Py_ssize_t n = h0.shape[0]
    drives = np.ascontiguousarray(drives, dtype=np.complex128).reshape(-1, n, n)
    nus_arr = np.ascontiguousarray(nus, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t ntone = nus_arr.shape[0]
    if drives.shape[0] != ntone:
        raise ValueError("one frequency per drive matrix is required")
    y_in = np.asarray(y0, dtype=np.complex128)
    squeeze = y_in.ndim == 1
    y_arr = np.array(y_in.reshape(n, -1), dtype=np.complex128, order="C")
    cdef Py_ssize_t m = y_arr.shape[1]

    daggers = np.conj(np.transpose(drives, (0, 2, 1)))
    mask = np.abs(h0) > 0
    for p in range(ntone):
        mask |= (np.abs(drives[p]) > 0) | (np.abs(daggers[p]) > 0)
    r_idx, c_idx = np.nonzero(mask)
    rows_arr = np.ascontiguousarray(r_idx, dtype=np.intp)
    cols_arr = np.ascontiguousarray(c_idx, dtype=np.intp)
    cdef Py_ssize_t nnz = rows_arr.shape[0]
    base_arr = np.ascontiguousarray(h0[r_idx, c_idx])
    up_arr = np.ascontiguousarray(drives[:, r_idx, c_idx]).reshape(ntone, nnz)
    down_arr = np.ascontiguousarray(daggers[:, r_idx, c_idx]).reshape(ntone, nnz)

    cdef const Py_ssize_t[::1] rows = rows_arr
    cdef const Py_ssize_t[::1] cols = cols_arr
    cdef const double complex[::1] base = base_arr
    cdef const double complex[:, ::1] up = up_arr
    cdef const double complex[:, ::1] down = down_arr
    cdef const double[::1] nu = nus_arr
    cdef double complex[::1] phase = np.zeros(max(ntone, 1), dtype=np.complex128)
    cdef double complex[::1] h_a = np.zeros(max(nnz, 1), dtype=np.complex128)
    cdef double complex[::1] h_b = np.zeros(max(nnz, 1), dtype=np.complex128)
    cdef double complex[::1] h_c = np.zeros(max(nnz, 1), dtype=np.complex128)
    cdef double complex[:, ::1] y = y_arr
    cdef double complex[:, ::1] k1 = np.zeros((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k2 = np.zeros((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k3 = np.zeros((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k4 = np.zeros((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = np.zeros((n, m), dtype=np.complex128)
    cdef Py_ssize_t step, i, j
    cdef double t, half = 0.5 * dt, sixth = dt / 6.0

    with nogil:
        for step in range(nsteps):
            t = t0 + step * dt
            _assemble(t, nnz, ntone, nu, base, up, down, phase, h_a)
            _assemble(t + half, nnz, ntone, nu, base, up, down, phase, h_b)
            _assemble(t + dt, nnz, ntone, nu, base, up, down, phase, h_c)
            _apply(nnz, m, rows, cols, h_a, y, k1)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = y[i, j] + half * k1[i, j]
            _apply(nnz, m, rows, cols, h_b, tmp, k2)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = y[i, j] + half * k2[i, j]
            _apply(nnz, m, rows, cols, h_b, tmp, k3)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = y[i, j] + dt * k3[i, j]
            _apply(nnz, m, rows, cols, h_c, tmp, k4)
            for i in range(n):
                for j in range(m):
                    y[i, j] = y[i, j] + sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])

    return y_arr[:, 0].copy() if squeeze else y_arr
