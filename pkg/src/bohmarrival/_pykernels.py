"""Pure numpy/scipy implementations of the hot loops.

Used when the compiled extension is unavailable or when
``BOHMARRIVAL_PURE_PYTHON=1`` is set.  The ensemble integrator advances all
trajectories together, each with its own adaptive step size.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

COMPLETED, ABORTED, EXITED = 0, 1, 2

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def tableau():
    return {"C": _C.tolist(), "A": [list(r) for r in _A], "B": _B.tolist(), "E": _E.tolist()}


class CrankNicolsonStepper:
    """Solves ``A psi' = B psi`` with LAPACK's tridiagonal LU (factor once, solve per step)."""

    def __init__(self, diag_a, diag_b, off):
        diag_a = np.ascontiguousarray(diag_a, dtype=np.complex128)
        self.diag_b = np.ascontiguousarray(diag_b, dtype=np.complex128).copy()
        self.off = complex(off)
        n = diag_a.shape[0]
        sub = np.full(n - 1, self.off, dtype=np.complex128)
        dl, d, du, du2, ipiv, info = lapack.zgttrf(sub, diag_a, sub.copy())
        if info != 0:
            raise np.linalg.LinAlgError(f"zgttrf failed with info={info}")
        self._lu = (dl, d, du, du2, ipiv)

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        rhs = self.diag_b * psi
        rhs[:-1] -= self.off * psi[1:]
        rhs[1:] -= self.off * psi[:-1]
        out, info = lapack.zgttrs(*self._lu, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"zgttrs failed with info={info}")
        return out


def _velocity(rho, cur, t0, snap_dt, x_min, dx, rho_floor, t, x):
    """Vectorized bilinear j/rho; returns (v, status)."""
    n_snap, n_x = rho.shape
    u = (x - x_min) / dx
    outside = (u < 0.0) | (u > n_x - 1)
    s = (t - t0) / snap_dt
    m = np.clip(np.floor(s), 0, n_snap - 2).astype(np.intp)
    wt = np.clip(s - m, 0.0, 1.0)
    k = np.clip(np.floor(np.where(outside, 0.0, u)), 0, n_x - 2).astype(np.intp)
    wx = np.where(outside, 0.0, u - k)

    def interp(a):
        lo = (1.0 - wx) * a[m, k] + wx * a[m, k + 1]
        hi = (1.0 - wx) * a[m + 1, k] + wx * a[m + 1, k + 1]
        return (1.0 - wt) * lo + wt * hi

    r = interp(rho)
    jj = interp(cur)
    status = np.where(outside, EXITED, np.where(r <= rho_floor, ABORTED, COMPLETED))
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(status == COMPLETED, jj / np.where(r > 0, r, 1.0), 0.0)
    return v, status


def integrate_ensemble(
    rho,
    cur,
    t0,
    snap_dt,
    x_min,
    dx,
    x0s,
    t_out,
    rtol=1e-6,
    atol=1e-9,
    rho_floor=1e-12,
    h0=1e-3,
    max_steps=1_000_000,
):
    """Integrate dx/dt = j/rho from each start in ``x0s``.

    ``rho`` and ``cur`` are snapshot arrays of shape (n_snap, n_x) at times
    ``t0 + m*snap_dt`` on the grid ``x_min + k*dx``; both are interpolated
    linearly in t and x.  Paths are reported at ``t_out`` (steps land exactly
    on those times).  Returns ``(paths, status, nfev)``; entries after an abort
    or a grid exit are NaN.
    """
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    cur = np.ascontiguousarray(cur, dtype=np.float64)
    if rho.ndim != 2 or rho.shape[0] < 2 or rho.shape != cur.shape:
        raise ValueError("need at least two matching rho/current snapshots")
    x0s = np.ascontiguousarray(x0s, dtype=np.float64)
    t_out = np.ascontiguousarray(t_out, dtype=np.float64)
    n_traj, n_out = x0s.shape[0], t_out.shape[0]
    field = (rho, cur, t0, snap_dt, x_min, dx, rho_floor)

    paths = np.full((n_traj, n_out), np.nan)
    status = np.zeros(n_traj, dtype=np.int8)
    x = x0s.copy()
    t = np.full(n_traj, t_out[0])
    h = np.full(n_traj, float(h0))
    steps = np.zeros(n_traj, dtype=np.int64)
    paths[:, 0] = x
    k1, st = _velocity(*field, t, x)
    nfev = n_traj
    alive = st == COMPLETED
    status[~alive] = st[~alive]

    for o in range(1, n_out):
        target = t_out[o]
        while True:
            idx = np.flatnonzero(alive & (t < target))
            if idx.size == 0:
                break
            steps[idx] += 1
            over = steps[idx] > max_steps
            if over.any():
                status[idx[over]] = ABORTED
                alive[idx[over]] = False
                idx = idx[~over]
            ti, xi, hi = t[idx], x[idx], h[idx]
            clipped = hi >= target - ti
            hh = np.where(clipped, target - ti, hi)
            ks = [k1[idx]]
            st = np.zeros(idx.size, dtype=np.int8)
            for s in range(1, 6):
                incr = sum(a * kk for a, kk in zip(_A[s], ks))
                v, s_st = _velocity(*field, ti + _C[s] * hh, xi + hh * incr)
                st = np.where(st == COMPLETED, s_st, st)
                ks.append(v)
            xn = xi + hh * sum(b * kk for b, kk in zip(_B, ks))
            k7, s_st = _velocity(*field, ti + hh, xn)
            st = np.where(st == COMPLETED, s_st, st)
            ks.append(k7)
            nfev += 6 * idx.size

            bad = st != COMPLETED
            if bad.any():
                status[idx[bad]] = st[bad]
                alive[idx[bad]] = False

            err = hh * sum(e * kk for e, kk in zip(_E, ks))
            sc = atol + rtol * np.maximum(np.abs(xi), np.abs(xn))
            errn = np.abs(err) / sc
            with np.errstate(divide="ignore"):
                fac_ok = np.where(
                    errn == 0.0, 5.0, np.minimum(5.0, np.maximum(0.2, 0.9 * errn**-0.2))
                )
                fac_bad = np.maximum(0.2, 0.9 * errn**-0.2)
            acc = (errn <= 1.0) & ~bad
            rej = (errn > 1.0) & ~bad

            a_idx = idx[acc]
            t[a_idx] = np.where(clipped[acc], target, ti[acc] + hh[acc])
            x[a_idx] = xn[acc]
            k1[a_idx] = k7[acc]
            h[a_idx] = np.where(
                clipped[acc], np.maximum(hi[acc], hh[acc] * fac_ok[acc]), hh[acc] * fac_ok[acc]
            )

            r_idx = idx[rej]
            h_new = hh[rej] * fac_bad[rej]
            tiny = h_new < 1e-14 * (1.0 + np.abs(ti[rej]))
            h[r_idx] = h_new
            status[r_idx[tiny]] = ABORTED
            alive[r_idx[tiny]] = False
        paths[alive, o] = x[alive]
    return paths, status, int(nfev)
