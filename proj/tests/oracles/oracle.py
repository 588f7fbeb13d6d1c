"""Independent reference values for the C++ tests.

Uses scipy quadrature and mpmath only; nothing here shares code with the
library.  Run once, paste the printed constants into the tests.
"""
import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 40


def bs_weight(alphas):
    """density (w.r.t. dtheta/2pi) of the Bernstein-Szego measure, 1/|phi_n*|^2 scaled"""
    def w(t):
        z = np.exp(1j * t)
        phi, star = np.array([1.0 + 0j]), np.array([1.0 + 0j])
        for a in alphas:
            nphi = np.concatenate([[0], phi]) - np.conj(a) * np.concatenate([star, [0]])
            nstar = np.concatenate([star, [0]]) - a * np.concatenate([[0], phi])
            phi, star = nphi, nstar
        s = np.polyval(star[::-1], z)
        return np.prod([1 - abs(a) ** 2 for a in alphas]) / abs(s) ** 2
    return w


def sv_sides(alphas):
    w = bs_weight(alphas)
    lhs = -integrate.quad(lambda t: np.log(w(t)), 0, 2 * np.pi, limit=400, epsabs=1e-13)[0] / (2 * np.pi)
    rhs = -sum(np.log(1 - abs(a) ** 2) for a in alphas)
    return lhs, rhs


def log_energy(dens, lo, hi, V):
    def inner(t):
        return integrate.quad(lambda p: np.log(abs(2 * np.sin((t - p) / 2))) * dens(p), lo, hi,
                              points=[t], limit=400, epsabs=1e-13)[0]
    a = integrate.quad(lambda t: V(t) * dens(t), lo, hi, limit=400, epsabs=1e-13)[0]
    b = integrate.quad(lambda t: inner(t) * dens(t), lo, hi, limit=400, epsabs=1e-12)[0]
    return a - b


def verblunsky_from_moments(m, count):
    """Levinson recursion in mpmath; m[j] = int z^j dmu (m[0] = 1)."""
    phi = [mp.mpc(1)]
    norm = mp.mpf(1)
    out = []
    for k in range(count):
        s = sum(phi[i] * m[i + 1] for i in range(len(phi)))
        a = mp.conj(s / norm)
        out.append(a)
        star = [mp.conj(c) for c in reversed(phi)]
        phi = [mp.mpc(0)] + phi
        phi = [phi[i] - mp.conj(a) * (star[i] if i < len(star) else 0) for i in range(len(phi))]
        norm *= 1 - abs(a) ** 2
    return out


def main():
    print("SV BS(0.6):", sv_sides([0.6]))
    print("SV BS(0.5+0.3i, -0.7+0.1i, 0.2-0.75i):", sv_sides([0.5 + 0.3j, -0.7 + 0.1j, 0.2 - 0.75j]))

    d = 1.0
    td = 2 * np.arcsin(d / (1 + d))
    hp = lambda p: (1 + d) * np.sqrt(max(np.sin(p / 2) ** 2 - np.sin(td / 2) ** 2, 0)) / (2 * np.pi * np.sin(p / 2))
    print("energy HP d=1:", log_energy(hp, td, 2 * np.pi - td, lambda t: -2 * d * np.log(abs(1 - np.exp(1j * t)))))
    g = 2.0
    tg = np.pi / 2
    gw = lambda p: g / np.pi * np.cos(p / 2) * np.sqrt(max(np.sin(tg / 2) ** 2 - np.sin(p / 2) ** 2, 0))
    print("energy GW g=2:", log_energy(gw, -tg, tg, lambda t: -g * np.cos(t)))

    for g in (0.3, 0.7):
        m = [mp.mpf(1), mp.mpf(g) / 2] + [mp.mpf(0)] * 10
        print("GW alphas g=%g:" % g, [mp.nstr(mp.re(a), 17) for a in verblunsky_from_moments(m, 7)])

    # H_d(0) and -(1/np) log K for p = 2, k = 0, delta = n p d
    for d in (0.5, 1.0, 2.0):
        print("H_d(0) d=%g:" % d, mp.nstr((1 + 2 * d) * mp.log(1 + 2 * d) - 2 * (1 + d) * mp.log(1 + d), 17))
    p, d = 2, 1.0
    for n in (100, 400, 1600):
        delta = mp.mpf(n * p) * d
        lk = -p * p * mp.log(mp.pi)
        N = n * p
        for j in range(1, p + 1):
            # product of the Selberg-type normalisers of the matrix ball
            lk += 2 * mp.loggamma(N - j + 1 + delta) - mp.loggamma(N - p - j + 1) - mp.loggamma(N - j + 1 + 2 * delta)
        print("-(1/np) log K n=%d:" % n, mp.nstr(-lk / N, 12), " pH(0) =", mp.nstr(2 * (3 * mp.log(3) - 4 * mp.log(2)), 12))

    # inner outlier rate at theta_d/2, d = 1 (twice the displayed integral)
    d = 1.0
    td = 2 * np.arcsin(d / (1 + d))
    f = lambda p: (1 + d) * np.sqrt(np.sin(td / 2) ** 2 - np.sin(p / 2) ** 2) / (2 * np.sin(p / 2))
    print("F-(theta_d/2) d=1:", 2 * integrate.quad(f, td / 2, td, epsabs=1e-14)[0])


if __name__ == "__main__":
    main()
