"""High-precision reference values for the Bayesian mixture integrals.

Integrates directly over z ~ N(y, (T - t)) in one dimension with mpmath at 40 digits,
independently of the partitioned Gauss-Hermite scheme used by the library.
Run: python3 bayes_oracle.py  (prints C++ initializer rows)
"""
import mpmath as mp

mp.mp.dps = 40


def weights(thetas, probs, gamma, t, T, y):
    tau = mp.mpf(T) - t
    def F(z):
        return sum(p * mp.e ** (z * th - th * th * T / 2) for th, p in zip(thetas, probs))
    def integrate(fn):
        # z = y + sqrt(tau) x, x standard normal; split at the modes to help the quadrature
        def g(x):
            z = y + mp.sqrt(tau) * x
            return fn(z) * mp.npdf(x)
        pts = sorted(set([-mp.inf] + [gamma * th * mp.sqrt(tau) for th in thetas] + [0, mp.inf]))
        return mp.quad(g, pts)
    D = integrate(lambda z: F(z) ** gamma)
    ws = [integrate(lambda z, th=th, p=p: p * mp.e ** (z * th - th * th * T / 2) * F(z) ** (gamma - 1)) / D
          for th, p in zip(thetas, probs)]
    return D, ws


def main():
    rows = []
    cases = [
        # thetas, probs, alpha, t, T, y
        ((0.6, 0.2), (0.5, 0.5), 0.5, 0, 10, 0),
        ((0.6, 0.2), (0.5, 0.5), -1.0, 0, 10, 0),
        ((0.6, 0.2), (0.5, 0.5), -5.0, 0, 14, 0),
        ((0.6, 0.2), (0.3, 0.7), 0.5, 2, 30, 1.1),
        ((0.6, 0.2), (0.5, 0.5), 0.5, 0, 50, 0),
        ((0.6, 0.2), (0.5, 0.5), -1.0, 0, 50, 0),
        ((0.6, 0.2, -0.3), (0.2, 0.5, 0.3), 0.3, 1, 8, -0.4),
    ]
    for thetas, probs, alpha, t, T, y in cases:
        gamma = 1 / (1 - mp.mpf(alpha))
        D, ws = weights([mp.mpf(x) for x in thetas], [mp.mpf(x) for x in probs], gamma, mp.mpf(t), mp.mpf(T),
                        mp.mpf(y))
        rows.append((thetas, probs, alpha, t, T, y, mp.log(D), ws))
    for thetas, probs, alpha, t, T, y, logD, ws in rows:
        print("{{{%s}, {%s}, %r, %r, %r, %r, %s, {%s}}}," % (
            ", ".join(repr(float(x)) for x in thetas), ", ".join(repr(float(x)) for x in probs), alpha,
            float(t), float(T), float(y), mp.nstr(logD, 17), ", ".join(mp.nstr(w, 17) for w in ws)))


if __name__ == "__main__":
    main()
