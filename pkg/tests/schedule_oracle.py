"""Independent exact re-derivation of the schedules with sympy rationals."""
import sympy as sp


def R(x):
    return sp.Rational(x) if not isinstance(x, sp.Basic) else x


def o2nc(d, sigma, L, gap, delta, eps, option):
    d, sigma, L, gap, delta, eps = map(R, (d, sigma, L, gap, delta, eps))
    if option == "I":
        G2 = d**2 * sigma**2 / (2 * delta**2) + 16 * sp.sqrt(2 * sp.pi) * d * L**2
    else:
        G2 = 6 * d**2 * sigma**2 / delta**2 + 385 * d**2 * L**2
    M = int(sp.ceiling(16 * G2 / eps**2))
    K = int(sp.ceiling(2 * (gap + delta * L) / (delta * eps)))
    T = M * K
    D = delta / M
    eta = D / (sp.sqrt(G2) * sp.sqrt(M))
    n = 2 * T if option == "I" else T + 1
    return {"M": M, "K": K, "T": T, "eta": float(eta), "G2": float(G2), "N": n}


def sgd(d, sigma, L, gap, delta, eps, c=1):
    d, sigma, L, gap, delta, eps, c = map(R, (d, sigma, L, gap, delta, eps, c))
    V = d**2 * sigma**2 / (2 * delta**2) + 16 * sp.sqrt(2 * sp.pi) * d * L**2
    beta = c * sp.sqrt(d) * L / delta
    B = int(sp.ceiling(2 * V / eps**2))
    T = int(sp.ceiling(4 * beta * (gap + delta * L) / eps**2))
    return {"B": B, "T": T, "eta": float(1 / beta), "V": float(V), "beta": float(beta), "N": 2 * B * T}
