"""Independent oracles for values frozen into the C++ tests.

Uses mpmath quadrature (not Gauss-Hermite) at 40 digits, plus numpy's
Gauss-Hermite nodes and a 10^7-sample Monte Carlo cross-check.
"""
import mpmath as mp
import numpy as np

mp.mp.dps = 40


def sigmoid(z):
    return 1 / (1 + mp.e ** (-z))


def expected_sigmoid(mean, var):
    s = mp.sqrt(var)
    f = lambda x: sigmoid(mean + s * x) * mp.e ** (-x * x / 2) / mp.sqrt(2 * mp.pi)
    return mp.quad(f, [-mp.inf, -5, 0, 5, mp.inf])


def gh(fn, mean, var, n=64):
    x, w = np.polynomial.hermite.hermgauss(n)
    return float(np.sum(w * fn(mean + np.sqrt(2 * var) * x)) / np.sqrt(np.pi))


def np_sigmoid(z):
    return 1 / (1 + np.exp(-z))


if __name__ == "__main__":
    e = expected_sigmoid(2, 1)
    print("E[sigmoid], N(2,1), exact   :", mp.nstr(e, 20))
    print("E[sigmoid], N(2,1), GH64    :", repr(gh(np_sigmoid, 2.0, 1.0)))
    rng = np.random.default_rng(12345)
    z = rng.standard_normal(10_000_000) + 2.0
    v = np_sigmoid(z)
    print("E[sigmoid], N(2,1), MC 1e7  :", v.mean(), "+/-", v.std() / np.sqrt(v.size))
    print("eps(2,1) = sigmoid(2) - E   :", mp.nstr(sigmoid(2) - e, 20))
    # Fig.2 curve: peak of |eps(f, 1)| on a 0.05 grid and in continuous f
    grid = [mp.mpf(i) / 20 for i in range(-160, 161)]
    eps = [sigmoid(f) - expected_sigmoid(f, 1) for f in grid]
    k = max(range(len(grid)), key=lambda i: abs(eps[i]) if grid[i] > 0 else -1)
    print("grid peak f*, |eps|        :", mp.nstr(grid[k], 6), mp.nstr(abs(eps[k]), 20))
    fstar = mp.findroot(lambda f: mp.diff(lambda g: sigmoid(g) - expected_sigmoid(g, 1), f), 1.0)
    print("continuous peak f*, |eps|  :", mp.nstr(fstar, 15),
          mp.nstr(abs(sigmoid(fstar) - expected_sigmoid(fstar, 1)), 20))
    print("|eps(8,1)|                 :", mp.nstr(abs(sigmoid(8) - expected_sigmoid(8, 1)), 10))
    # E[sigmoid'] under N(2,1), used by VON expected Hessian checks
    s1 = mp.quad(lambda x: sigmoid(2 + x) * (1 - sigmoid(2 + x)) * mp.e ** (-x * x / 2) / mp.sqrt(2 * mp.pi),
                 [-mp.inf, 0, mp.inf])
    print("E[sigmoid'], N(2,1)        :", mp.nstr(s1, 20))
