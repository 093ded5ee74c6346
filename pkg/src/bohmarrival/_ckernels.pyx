# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Crank-Nicolson tridiagonal step and Bohmian ensemble integration.

Mirrors ``_pykernels`` exactly in algorithm; see that module for the reference
implementation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, fmax, fmin, pow, NAN

cnp.import_array()

cdef enum:
    COMPLETED = 0
    ABORTED = 1
    EXITED = 2


cdef class CrankNicolsonStepper:
    """Solves ``A psi' = B psi`` with tridiagonal A, B sharing a constant off-diagonal.

    ``A = tridiag(off, diag_a, off)`` and ``B = tridiag(-off, diag_b, -off)``.
    The Thomas factorization of A is computed once.
    """

    cdef double complex[::1] diag_b
    cdef double complex[::1] cprime
    cdef double complex[::1] inv_denom
    cdef double complex[::1] work
    cdef double complex off
    cdef Py_ssize_t n

    def __init__(self, diag_a, diag_b, double complex off):
        cdef double complex[::1] da = np.ascontiguousarray(diag_a, dtype=np.complex128)
        self.diag_b = np.ascontiguousarray(diag_b, dtype=np.complex128).copy()
        self.n = da.shape[0]
        self.off = off
        self.cprime = np.empty(self.n, dtype=np.complex128)
        self.inv_denom = np.empty(self.n, dtype=np.complex128)
        self.work = np.empty(self.n, dtype=np.complex128)
        cdef Py_ssize_t k
        cdef double complex den = da[0]
        self.inv_denom[0] = 1.0 / den
        self.cprime[0] = off / den
        for k in range(1, self.n):
            den = da[k] - off * self.cprime[k - 1]
            self.inv_denom[k] = 1.0 / den
            self.cprime[k] = off / den

    def __call__(self, psi):
        cdef const double complex[::1] p = np.ascontiguousarray(psi, dtype=np.complex128)
        out = np.empty(self.n, dtype=np.complex128)
        cdef double complex[::1] o = out
        with nogil:
            self._step(p, o)
        return out

    cdef void _step(self, const double complex[::1] p, double complex[::1] o) noexcept nogil:
        cdef Py_ssize_t k, n = self.n
        cdef double complex off = self.off
        cdef double complex r
        cdef double complex* y = &self.work[0]
        cdef const double complex* db = &self.diag_b[0]
        cdef const double complex* inv = &self.inv_denom[0]
        cdef const double complex* cp = &self.cprime[0]
        # forward sweep fused with the right-hand side B @ psi
        r = db[0] * p[0] - off * p[1]
        y[0] = r * inv[0]
        for k in range(1, n - 1):
            r = db[k] * p[k] - off * (p[k - 1] + p[k + 1])
            y[k] = (r - off * y[k - 1]) * inv[k]
        r = db[n - 1] * p[n - 1] - off * p[n - 2]
        y[n - 1] = (r - off * y[n - 2]) * inv[n - 1]
        o[n - 1] = y[n - 1]
        for k in range(n - 2, -1, -1):
            o[k] = y[k] - cp[k] * o[k + 1]


cdef struct Field:
    const double* rho
    const double* cur
    Py_ssize_t n_snap
    Py_ssize_t n_x
    double t0
    double dt
    double x_min
    double dx
    double rho_floor


cdef inline int velocity(const Field* f, double t, double x, double* v) noexcept nogil:
    cdef double s = (t - f.t0) / f.dt
    cdef double u = (x - f.x_min) / f.dx
    cdef Py_ssize_t m, k
    cdef double wt, wx, r0, r1, j0, j1, r, jj
    if u < 0.0 or u > <double>(f.n_x - 1):
        return EXITED
    m = <Py_ssize_t>floor(s)
    if m < 0:
        m = 0
    elif m > f.n_snap - 2:
        m = f.n_snap - 2
    wt = fmin(fmax(s - m, 0.0), 1.0)
    k = <Py_ssize_t>floor(u)
    if k > f.n_x - 2:
        k = f.n_x - 2
    wx = u - k
    cdef Py_ssize_t i0 = m * f.n_x + k
    cdef Py_ssize_t i1 = i0 + f.n_x
    r0 = (1.0 - wx) * f.rho[i0] + wx * f.rho[i0 + 1]
    r1 = (1.0 - wx) * f.rho[i1] + wx * f.rho[i1 + 1]
    j0 = (1.0 - wx) * f.cur[i0] + wx * f.cur[i0 + 1]
    j1 = (1.0 - wx) * f.cur[i1] + wx * f.cur[i1 + 1]
    r = (1.0 - wt) * r0 + wt * r1
    jj = (1.0 - wt) * j0 + wt * j1
    if r <= f.rho_floor:
        return ABORTED
    v[0] = jj / r
    return COMPLETED


# Dormand-Prince 5(4) tableau
cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
# fifth- minus fourth-order weights
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0


cdef int integrate_one(const Field* f, double x0, const double* t_out, Py_ssize_t n_out,
                       double rtol, double atol, double h0, Py_ssize_t max_steps,
                       double* path, long* nfev) noexcept nogil:
    cdef double t = t_out[0]
    cdef double x = x0
    cdef double h = h0
    cdef double k1, k2, k3, k4, k5, k6, k7, hh, xn, err, sc, errn, fac, target
    cdef int st
    cdef Py_ssize_t o, q, steps = 0
    cdef bint clipped
    for q in range(n_out):
        path[q] = NAN
    path[0] = x
    st = velocity(f, t, x, &k1)
    nfev[0] += 1
    if st != COMPLETED:
        return st
    for o in range(1, n_out):
        target = t_out[o]
        while t < target:
            steps += 1
            if steps > max_steps:
                return ABORTED
            clipped = h >= target - t
            hh = target - t if clipped else h
            st = velocity(f, t + C2 * hh, x + hh * A21 * k1, &k2)
            if st == COMPLETED:
                st = velocity(f, t + C3 * hh, x + hh * (A31 * k1 + A32 * k2), &k3)
            if st == COMPLETED:
                st = velocity(f, t + C4 * hh, x + hh * (A41 * k1 + A42 * k2 + A43 * k3), &k4)
            if st == COMPLETED:
                st = velocity(f, t + C5 * hh,
                              x + hh * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), &k5)
            if st == COMPLETED:
                st = velocity(f, t + hh,
                              x + hh * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), &k6)
            xn = x + hh * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            if st == COMPLETED:
                st = velocity(f, t + hh, xn, &k7)
            nfev[0] += 6
            if st != COMPLETED:
                return st
            err = hh * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sc = atol + rtol * fmax(fabs(x), fabs(xn))
            errn = fabs(err) / sc
            if errn <= 1.0:
                t = target if clipped else t + hh
                x = xn
                k1 = k7
                fac = 5.0 if errn == 0.0 else fmin(5.0, fmax(0.2, 0.9 * pow(errn, -0.2)))
                if clipped:
                    h = fmax(h, hh * fac)
                else:
                    h = hh * fac
            else:
                h = hh * fmax(0.2, 0.9 * pow(errn, -0.2))
                if h < 1e-14 * (1.0 + fabs(t)):
                    return ABORTED
        path[o] = x
    return COMPLETED


def integrate_ensemble(rho, cur, double t0, double snap_dt, double x_min, double dx,
                       x0s, t_out, double rtol=1e-6, double atol=1e-9,
                       double rho_floor=1e-12, double h0=1e-3, Py_ssize_t max_steps=1000000):
    """Integrate dx/dt = j/rho for every start in ``x0s``; see ``_pykernels.integrate_ensemble``."""
    cdef const double[:, ::1] r = np.ascontiguousarray(rho, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(cur, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(x0s, dtype=np.float64)
    cdef const double[::1] to = np.ascontiguousarray(t_out, dtype=np.float64)
    cdef Py_ssize_t n_traj = xs.shape[0], n_out = to.shape[0], i
    if r.shape[0] < 2 or r.shape[0] != c.shape[0] or r.shape[1] != c.shape[1]:
        raise ValueError("need at least two matching rho/current snapshots")
    paths = np.empty((n_traj, n_out), dtype=np.float64)
    status = np.zeros(n_traj, dtype=np.int8)
    cdef double[:, ::1] pv = paths
    cdef signed char[::1] sv = status
    cdef long nfev = 0
    cdef Field f
    f.rho = &r[0, 0]
    f.cur = &c[0, 0]
    f.n_snap = r.shape[0]
    f.n_x = r.shape[1]
    f.t0 = t0
    f.dt = snap_dt
    f.x_min = x_min
    f.dx = dx
    f.rho_floor = rho_floor
    with nogil:
        for i in range(n_traj):
            sv[i] = integrate_one(&f, xs[i], &to[0], n_out, rtol, atol, h0, max_steps,
                                  &pv[i, 0], &nfev)
    return paths, status, int(nfev)


def tableau():
    """Dormand-Prince coefficients as compiled, for comparison with the fallback."""
    return {
        "C": [0.0, C2, C3, C4, C5, 1.0],
        "A": [[], [A21], [A31, A32], [A41, A42, A43], [A51, A52, A53, A54],
              [A61, A62, A63, A64, A65]],
        "B": [B1, 0.0, B3, B4, B5, B6],
        "E": [E1, 0.0, E3, E4, E5, E6, E7],
    }
