"""Pure numpy implementations of the hot kernels.

Same signatures and numerics as the compiled ``_ckernels`` module; used when the
extension is not built or when ``TRIQNET_PURE_PYTHON`` is set.
"""
import numpy as np
from scipy import sparse


def _make_rhs(hdata, hind, hptr, decay, gamma_down, masks, d):
    h = sparse.csr_matrix((hdata, hind, hptr), shape=(d, d))
    jumps = []
    idx = np.arange(d)
    for g, m in zip(gamma_down, masks):
        if g == 0.0:
            continue
        lo = idx[(idx & m) == 0]
        jumps.append((g, lo, lo | m))

    def rhs(rho):
        # rho is Hermitian, so rho H = (H rho)^dagger
        hr = h @ rho
        out = decay * rho - 1j * (hr - hr.conj().T)
        for g, lo, hi in jumps:
            out[np.ix_(lo, lo)] += g * rho[np.ix_(hi, hi)]
        return out

    return rhs


def lindblad_rk4(rho0, hdata, hind, hptr, decay, gamma_down, masks, dt, n_steps):
    rho = np.array(rho0, dtype=np.complex128, copy=True)
    d = rho.shape[0]
    rhs = _make_rhs(np.asarray(hdata, dtype=np.complex128), np.asarray(hind),
                    np.asarray(hptr), np.asarray(decay, dtype=np.float64),
                    np.asarray(gamma_down, dtype=np.float64), np.asarray(masks), d)
    h2 = 0.5 * dt
    for _ in range(n_steps):
        k1 = rhs(rho)
        k2 = rhs(rho + h2 * k1)
        k3 = rhs(rho + h2 * k2)
        k4 = rhs(rho + dt * k3)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def _offdiag_norm(a):
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return np.sqrt(np.sum(off.real ** 2 + off.imag ** 2))


def jacobi_eigh(a0, tol, max_sweeps):
    a = np.array(a0, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    done = -1
    for sweep in range(max_sweeps + 1):
        if _offdiag_norm(a) <= tol:
            done = sweep
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                absb = abs(b)
                if absb == 0.0:
                    continue
                ph = np.conj(b) / absb
                tau = (a[q, q].real - a[p, p].real) / (2.0 * absb)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u = np.array([[c, s], [-s * ph, c * ph]])
                cols = a[:, [p, q]] @ u
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = u.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                vc = v[:, [p, q]] @ u
                v[:, p], v[:, q] = vc[:, 0], vc[:, 1]
    return np.diag(a).real.copy(), v, done
