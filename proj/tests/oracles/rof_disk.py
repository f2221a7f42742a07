"""Interior-point solution of the ROF step for the disk used in test_rof.cpp.

Prints the values frozen there. Needs numpy and cvxpy (Clarabel).
"""
import numpy as np
import cvxpy as cp


def disk(n=64, cx=32.0, cy=32.0, r=10.0, h=1.0):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    return h * ((((x - cx) / r) ** 2 + ((y - cy) / r) ** 2) <= 1.0)


def forward_diff_ops(w, h):
    n = w * h
    idx = np.arange(n).reshape(h, w)
    import scipy.sparse as sp
    rows, cols, vals = [], [], []
    for yy in range(h):
        for xx in range(w - 1):
            i = idx[yy, xx]
            rows += [i, i]; cols += [i, idx[yy, xx + 1]]; vals += [-1.0, 1.0]
    dx = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rows, cols, vals = [], [], []
    for yy in range(h - 1):
        for xx in range(w):
            i = idx[yy, xx]
            rows += [i, i]; cols += [i, idx[yy + 1, xx]]; vals += [-1.0, 1.0]
    dy = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return dx, dy


def solve(u, dt):
    h, w = u.shape
    dx, dy = forward_diff_ops(w, h)
    v = cp.Variable(w * h)
    g = cp.vstack([dx @ v, dy @ v])
    obj = 0.5 * cp.sum_squares(v - u.ravel()) + dt * cp.sum(cp.norm(g, 2, axis=0))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12,
               max_iter=500)
    return v.value.reshape(h, w), prob.value


if __name__ == "__main__":
    u = disk()
    v, obj = solve(u, 0.5)
    inside = u > 0
    print(f"objective      {obj:.12f}")
    print(f"v(32,32)       {v[32, 32]:.10f}")
    print(f"v(0,0)         {v[0, 0]:.10f}")
    print(f"v(42,32)       {v[32, 42]:.10f}")
    print(f"v(43,32)       {v[32, 43]:.10f}")
    print(f"v(39,39)       {v[39, 39]:.10f}")
    print(f"mean inside    {v[inside].mean():.10f}")
    print(f"mean outside   {v[~inside].mean():.10f}")
    print(f"sum            {v.sum():.10f}")
