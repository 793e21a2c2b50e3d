"""Independent dense-formula reference values frozen into the unit tests.

Run with: python3 tests/oracles/oracle.py
"""
import numpy as np


def rbf(a, b, k):
    var, l1, l2, lt = k
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d = ((a[:, None, 0] - b[None, :, 0]) / l1) ** 2
    d += ((a[:, None, 1] - b[None, :, 1]) / l2) ** 2
    d += ((a[:, None, 2] - b[None, :, 2]) / lt) ** 2
    return var * np.exp(-0.5 * d)


def joint(xl, xh, th):
    rho, kl, kd, tl, thh = th
    sll = rbf(xl, xl, kl) + tl * np.eye(len(xl))
    slh = rho * rbf(xl, xh, kl)
    shh = rho**2 * rbf(xh, xh, kl) + rbf(xh, xh, kd) + thh * np.eye(len(xh))
    return np.block([[sll, slh], [slh.T, shh]])


def nll(xl, xh, yl, yh, th):
    s = joint(xl, xh, th)
    y = np.concatenate([yl, yh])
    sign, logdet = np.linalg.slogdet(s)
    return 0.5 * logdet + 0.5 * y @ np.linalg.solve(s, y)


def show(name, v):
    with np.printoptions(precision=17, floatmode="unique"):
        print(name, repr(np.asarray(v).tolist()))


print("lengthscale(1, 0.8)", 1 / np.sqrt(-2 * np.log(0.8)))

pts = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.1], [1.0, 0.0, 0.2]])
show("gram3", rbf(pts, pts, (1.7, 0.8, 1.3, 0.25)))
cross_a = np.array([[0.0, 0.0, 0.0], [0.2, -0.4, 0.3]])
cross_b = np.array([[1.0, 1.0, 0.5], [0.0, 0.3, 0.1], [-0.5, 0.2, 0.9]])
show("cross23", rbf(cross_a, cross_b, (0.9, 0.6, 1.1, 0.4)))

TH = (0.6, (2.0, 1.4965, 1.4965, 0.107), (0.8, 3.122, 3.122, 0.107), 0.3, 0.3)
xl = np.array([[0.0, 0.0, 0.0]])
xh = np.array([[0.3, 0.2, 0.1]])
show("nll_2pt", nll(xl, xh, np.array([0.7]), np.array([-0.4]), TH))

rng = np.random.default_rng(20240611)
XL = np.round(rng.uniform(0, 2, size=(5, 3)), 3)
XH = np.round(rng.uniform(0, 2, size=(4, 3)), 3)
YL = np.round(rng.normal(size=5), 3)
YH = np.round(rng.normal(size=4), 3)
TH2 = (0.7, (1.5, 0.9, 1.2, 0.8), (0.5, 1.5, 0.7, 1.1), 0.2, 0.1)
show("XL", XL)
show("XH", XH)
show("YL", YL)
show("YH", YH)
show("nll_small", nll(XL, XH, YL, YH, TH2))
sll = rbf(XL, XL, TH2[1]) + TH2[3] * np.eye(5)
show("lf_marginal", 0.5 * np.linalg.slogdet(sll)[1] + 0.5 * YL @ np.linalg.solve(sll, YL))

# GLS estimate of rho in the conditional regression with B = K_HL Sigma_LL^{-1}
B = rbf(XH, XL, TH2[1]) @ np.linalg.inv(sll)
om = rbf(XH, XH, TH2[2]) + TH2[4] * np.eye(4)
x = B @ YL
show("gls_rho", (x @ np.linalg.solve(om, YH)) / (x @ np.linalg.solve(om, x)))

# HF prediction by dense conditioning on [y_L; y_H]
q = np.array([[0.5, 0.5, 0.5], [1.9, 0.1, 1.2]])
s = joint(XL, XH, TH2)
rho, kl, kd = TH2[0], TH2[1], TH2[2]
kq = np.hstack([rho * rbf(q, XL, kl), rho**2 * rbf(q, XH, kl) + rbf(q, XH, kd)])
kqq = rho**2 * rbf(q, q, kl) + rbf(q, q, kd)
y = np.concatenate([YL, YH])
show("pred_mean", kq @ np.linalg.solve(s, y))
show("pred_var", np.diag(kqq - kq @ np.linalg.solve(s, kq.T)))

# Attenuation factor for a small matrix design
Bm = np.array([[0.5, 0.2, 0.0], [0.1, 0.7, 0.3]])
Om = np.array([[1.0, 0.3], [0.3, 2.0]])
CL = np.array([[2.0, 0.5, 0.1], [0.5, 1.5, 0.4], [0.1, 0.4, 1.0]])
SU = np.diag([0.5, 1.0, 2.0])
M = Bm.T @ np.linalg.solve(Om, Bm)
show("kappa", np.trace(M @ CL) / np.trace(M @ (CL + SU)))

v = np.array([3.1, -0.2, 0.7, 1.9, -2.4, 0.05, 0.6])
show("mad", np.median(np.abs(v)) / 0.6745)
