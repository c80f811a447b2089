# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 for ``i dY/dt = L(t) Y - Y R(t)``.

Same contract as :func:`corforge._core.rk4_flow_py.rk4_flow`.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef void _rhs(cplx[:, ::1] L, cplx[:, ::1] R, bint has_r,
               cplx[:, ::1] Y, cplx[:, ::1] out) noexcept nogil:
    # out = -i (L Y - Y R)
    cdef Py_ssize_t d = Y.shape[0], m = Y.shape[1]
    cdef Py_ssize_t a, b, k
    cdef cplx acc
    for a in range(d):
        for b in range(m):
            acc = 0
            for k in range(d):
                acc = acc + L[a, k] * Y[k, b]
            if has_r:
                for k in range(m):
                    acc = acc - Y[a, k] * R[k, b]
            out[a, b] = -1j * acc


cdef void _axpy(cplx[:, ::1] Y, cplx[:, ::1] K, double c, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t a, b
    for a in range(Y.shape[0]):
        for b in range(Y.shape[1]):
            out[a, b] = Y[a, b] + c * K[a, b]


def rk4_flow(L, R, y0, double h):
    cdef cnp.ndarray[cplx, ndim=3] Ls = np.ascontiguousarray(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=2] Y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    cdef bint has_r = R is not None
    cdef Py_ssize_t n_samples = Ls.shape[0]
    if n_samples % 2 != 1 or n_samples < 3:
        raise ValueError("L must hold 2*n+1 samples at half-step spacing")
    cdef Py_ssize_t n = (n_samples - 1) // 2
    cdef Py_ssize_t d = Y0.shape[0], m = Y0.shape[1]
    cdef cnp.ndarray[cplx, ndim=3] Rs
    if has_r:
        Rs = np.ascontiguousarray(R, dtype=np.complex128)
    else:
        Rs = np.zeros((n_samples, 1, 1), dtype=np.complex128)
    traj = np.empty((n + 1, d, m), dtype=np.complex128)
    cdef cplx[:, :, ::1] T = traj
    cdef cplx[:, :, ::1] Lv = Ls
    cdef cplx[:, :, ::1] Rv = Rs
    cdef cplx[:, ::1] Y = Y0.copy()
    cdef cplx[:, ::1] k1 = np.empty((d, m), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((d, m), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((d, m), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((d, m), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((d, m), dtype=np.complex128)
    cdef Py_ssize_t s, a, b, i0
    cdef double h2 = 0.5 * h, h6 = h / 6.0
    T[0, :, :] = Y
    with nogil:
        for s in range(n):
            i0 = 2 * s
            _rhs(Lv[i0], Rv[i0], has_r, Y, k1)
            _axpy(Y, k1, h2, tmp)
            _rhs(Lv[i0 + 1], Rv[i0 + 1], has_r, tmp, k2)
            _axpy(Y, k2, h2, tmp)
            _rhs(Lv[i0 + 1], Rv[i0 + 1], has_r, tmp, k3)
            _axpy(Y, k3, h, tmp)
            _rhs(Lv[i0 + 2], Rv[i0 + 2], has_r, tmp, k4)
            for a in range(d):
                for b in range(m):
                    Y[a, b] = Y[a, b] + h6 * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
                    T[s + 1, a, b] = Y[a, b]
    return traj
