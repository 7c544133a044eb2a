# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: qubit-register Lindblad RK4 and complex Jacobi eigensolver.

Both routines mirror the pure-Python versions in ``_pykernels`` exactly; the
selector in ``kernels`` decides which one is used.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, cos, sin, hypot

cnp.import_array()

ctypedef double complex cplx


cdef void _rhs(const cplx[:, ::1] rho,
               cplx[:, ::1] out,
               cplx[:, ::1] hr,
               const cplx[::1] hdata,
               const int[::1] hind,
               const int[::1] hptr,
               const double[:, ::1] decay,
               const double[::1] gamma_down,
               const long[::1] masks,
               Py_ssize_t d) noexcept nogil:
    # rho must be Hermitian: the commutator is -i(H rho) + h.c. and only the
    # upper triangle is computed before mirroring.
    cdef Py_ssize_t i, j, p, k, col, nq
    cdef cplx h, val
    cdef double g, ar, ai, br, bi
    cdef long m
    nq = gamma_down.shape[0]
    for i in range(d):
        for j in range(d):
            hr[i, j] = 0.0
        for p in range(hptr[i], hptr[i + 1]):
            col = hind[p]
            h = hdata[p]
            for j in range(d):
                hr[i, j] = hr[i, j] + h * rho[col, j]
    for i in range(d):
        for j in range(i, d):
            # -i a + i conj(b), a = hr[i, j], b = hr[j, i]
            ar = hr[i, j].real
            ai = hr[i, j].imag
            br = hr[j, i].real
            bi = hr[j, i].imag
            val = decay[i, j] * rho[i, j] + (ai + bi) + 1j * (br - ar)
            out[i, j] = val
            out[j, i] = val.conjugate()
    for k in range(nq):
        g = gamma_down[k]
        if g == 0.0:
            continue
        m = masks[k]
        for i in range(d):
            if i & m:
                continue
            for j in range(i, d):
                if j & m:
                    continue
                val = g * rho[i | m, j | m]
                out[i, j] = out[i, j] + val
                if j != i:
                    out[j, i] = out[j, i] + val.conjugate()


def lindblad_rk4(cnp.ndarray rho0, hdata, hind, hptr, decay, gamma_down, masks,
                 double dt, Py_ssize_t n_steps):
    """Advance Hermitian ``rho0`` by ``n_steps`` fixed RK4 steps of size ``dt``.

    Returns a new array; the input is not modified.
    """
    cdef cplx[:, ::1] rho = np.array(rho0, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t d = rho.shape[0]
    cdef cplx[::1] hd = np.ascontiguousarray(hdata, dtype=np.complex128)
    cdef int[::1] hi = np.ascontiguousarray(hind, dtype=np.intc)
    cdef int[::1] hp = np.ascontiguousarray(hptr, dtype=np.intc)
    cdef double[:, ::1] dec = np.ascontiguousarray(decay, dtype=np.float64)
    cdef double[::1] gd = np.ascontiguousarray(gamma_down, dtype=np.float64)
    cdef long[::1] mk = np.ascontiguousarray(masks, dtype=np.int_)
    cdef cplx[:, ::1] k1 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] hr = np.empty((d, d), dtype=np.complex128)
    cdef Py_ssize_t s, i, j
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    with nogil:
        for s in range(n_steps):
            _rhs(rho, k1, hr, hd, hi, hp, dec, gd, mk, d)
            for i in range(d):
                for j in range(d):
                    tmp[i, j] = rho[i, j] + h2 * k1[i, j]
            _rhs(tmp, k2, hr, hd, hi, hp, dec, gd, mk, d)
            for i in range(d):
                for j in range(d):
                    tmp[i, j] = rho[i, j] + h2 * k2[i, j]
            _rhs(tmp, k3, hr, hd, hi, hp, dec, gd, mk, d)
            for i in range(d):
                for j in range(d):
                    tmp[i, j] = rho[i, j] + dt * k3[i, j]
            _rhs(tmp, k4, hr, hd, hi, hp, dec, gd, mk, d)
            for i in range(d):
                for j in range(d):
                    rho[i, j] = rho[i, j] + h6 * (k1[i, j] + 2.0 * k2[i, j]
                                                  + 2.0 * k3[i, j] + k4[i, j])
    return np.asarray(rho)


cdef double _offdiag_norm(cplx[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                s += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    return sqrt(s)


def jacobi_eigh(a0, double tol, int max_sweeps):
    """Cyclic complex Jacobi. Returns ``(eigenvalues, eigenvectors, sweeps)`` unsorted.

    ``sweeps`` is -1 when the off-diagonal norm did not drop below ``tol``.
    """
    cdef cplx[:, ::1] a = np.array(a0, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    cdef cplx[:, ::1] v = np.eye(n, dtype=np.complex128)
    cdef Py_ssize_t p, q, r
    cdef int sweep, done = -1
    cdef double absb, alpha, tau, t, c, s, app, aqq
    cdef cplx ph, upp, upq, uqp, uqq, x, y
    with nogil:
        for sweep in range(max_sweeps + 1):
            if _offdiag_norm(a, n) <= tol:
                done = sweep
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    absb = hypot(a[p, q].real, a[p, q].imag)
                    if absb == 0.0:
                        continue
                    alpha = atan2(a[p, q].imag, a[p, q].real)
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2.0 * absb)
                    if tau >= 0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    ph = cos(alpha) - 1j * sin(alpha)   # e^{-i alpha}
                    # U restricted to (p, q): [[c, s], [-s e^{-ia}, c e^{-ia}]]
                    upp = c
                    upq = s
                    uqp = -s * ph
                    uqq = c * ph
                    # A <- A U (columns)
                    for r in range(n):
                        x = a[r, p]
                        y = a[r, q]
                        a[r, p] = x * upp + y * uqp
                        a[r, q] = x * upq + y * uqq
                    # A <- U^dagger A (rows)
                    for r in range(n):
                        x = a[p, r]
                        y = a[q, r]
                        a[p, r] = upp.conjugate() * x + uqp.conjugate() * y
                        a[q, r] = upq.conjugate() * x + uqq.conjugate() * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        x = v[r, p]
                        y = v[r, q]
                        v[r, p] = x * upp + y * uqp
                        v[r, q] = x * upq + y * uqq
    w = np.array([a[i, i].real for i in range(n)])
    return w, np.asarray(v), done
