"""Independent reference values for the frozen tests.

Roots are seeded from local minima of |g| on a dense grid (numpy) and
refined with mpmath at 30 digits. g is the meromorphic characteristic
function built straight from the subsystem transfer f, not the entire
forms used by the library.

    python3 tools/oracle.py
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def f_np(s, eta, eps=0.0):
    c = 1.0 + eps
    r = np.sqrt(c * c + 4 * eta * s)
    l1 = (c + r) / (2 * eta)
    l2 = (c - r) / (2 * eta)
    return (l1 - l2) / (l1 * np.exp(-l2) - l2 * np.exp(-l1))


def f_mp(s, eta, eps=0.0):
    c = 1 + mp.mpf(eps)
    r = mp.sqrt(c * c + 4 * eta * s)
    l1 = (c + r) / (2 * eta)
    l2 = (c - r) / (2 * eta)
    return (l1 - l2) / (l1 * mp.exp(-l2) - l2 * mp.exp(-l1))


def deadbeat(eta, eps=0.0):
    g_np = lambda s: f_np(s, eta, eps) ** 2 - f_np(s, eta, eps) * np.exp(-s) - 1
    g_mp = lambda s: f_mp(s, eta, eps) ** 2 - f_mp(s, eta, eps) * mp.exp(-s) - 1
    return g_np, g_mp


def simpler(eta):
    g_np = lambda s: 1 - f_np(s, eta) + np.exp(-s)
    g_mp = lambda s: 1 - f_mp(s, eta) + mp.exp(-s)
    return g_np, g_mp


def rightmost(g_np, g_mp, re=(-3.0, 1.0), im=(0.0, 200.0), h=0.02):
    xs = np.arange(re[0], re[1] + h, h)
    ys = np.arange(im[0], im[1] + h, h)
    best = None
    # strips keep memory bounded
    for k in range(0, len(ys), 2000):
        yy = ys[max(k - 1, 0): k + 2001]
        S = xs[None, :] + 1j * yy[:, None]
        with np.errstate(all="ignore"):
            A = np.abs(g_np(S))
        A[~np.isfinite(A)] = np.inf
        c = A[1:-1, 1:-1]
        mask = (
            (c < A[:-2, 1:-1]) & (c < A[2:, 1:-1]) & (c < A[1:-1, :-2]) & (c < A[1:-1, 2:])
        )
        for i, j in zip(*np.nonzero(mask)):
            s0 = S[i + 1, j + 1]
            try:
                z = mp.findroot(g_mp, mp.mpc(s0.real, s0.imag), tol=1e-25)
            except (ZeroDivisionError, ValueError):
                continue
            if abs(g_mp(z)) > 1e-15 or not (re[0] <= z.real <= re[1]) or abs(z.imag) > im[1]:
                continue
            key = (float(z.real), abs(float(z.imag)))
            if best is None or key[0] > best[0] + 1e-12 or (
                abs(key[0] - best[0]) <= 1e-12 and key[1] < best[1]
            ):
                best = key
    return best


def trinomial_sigma():
    # q^40 - q^42 - 1 with q = exp(-s/22)
    coeffs = [-1, 0, 1] + [0] * 39 + [-1]
    roots = mp.polyroots(coeffs, maxsteps=500, extraprec=200)
    qmin = min(roots, key=abs)
    return float(-22 * mp.log(abs(qmin))), float(abs(qmin))


if __name__ == "__main__":
    for eta in (0.02, 0.05, 0.1, 0.2):
        print("deadbeat", eta, rightmost(*deadbeat(eta)))
    for eps in (-0.05, -0.02, 0.02, 0.05):
        print("perturbed 0.1", eps, rightmost(*deadbeat(0.1, eps), im=(0.0, 40.0)))
    for eta in (0.02, 0.05, 0.1):
        print("simpler", eta, rightmost(*simpler(eta), re=(-1.5, 0.5), im=(0.0, 40.0)))
    print("trinomial", trinomial_sigma())
