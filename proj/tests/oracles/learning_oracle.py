"""Independent high-precision values for the learning and ambiguity tests.

Run with `python3 learning_oracle.py`; the printed numbers are frozen into
tests/test_learning.cpp and tests/test_ambiguity.cpp.
"""
import mpmath as mp

mp.mp.dps = 40


def log_learning_value(th_hi, th_lo, p, T):
    """E[F ln F], F = p L_T(th_hi, Z) + (1 - p) L_T(th_lo, Z), Z ~ N(0, T), single asset."""
    th_hi, th_lo, p, T = map(mp.mpf, (th_hi, th_lo, p, T))

    def F(z):
        return p * mp.exp(z * th_hi - th_hi**2 * T / 2) + (1 - p) * mp.exp(z * th_lo - th_lo**2 * T / 2)

    def integrand(z):
        f = F(z)
        return f * mp.log(f) * mp.exp(-z * z / (2 * T)) / mp.sqrt(2 * mp.pi * T)

    c = mp.sqrt(T)
    pts = [-40 * c, -10 * c, th_lo * T, th_hi * T, 10 * c + th_hi * T, 40 * c + th_hi * T]
    return mp.quad(integrand, sorted(pts))


def log_J(ytilde, th_hi, th_lo, p, alpha, lam, T):
    """log E[(q1 L_T(th_hi) + q2 L_T(th_lo))^gamma] with the ytilde parametrisation."""
    ytilde, th_hi, th_lo, p, alpha, lam, T = map(mp.mpf, (ytilde, th_hi, th_lo, p, alpha, lam, T))
    gamma = 1 / (1 - alpha)
    pe = lam / alpha
    inv_q = 1 - 1 / pe
    q1 = p ** (1 / pe) * ytilde**inv_q
    q2 = (1 - p) ** (1 / pe) * (1 - ytilde) ** inv_q

    def integrand(z):
        f = q1 * mp.exp(z * th_hi - th_hi**2 * T / 2) + q2 * mp.exp(z * th_lo - th_lo**2 * T / 2)
        return f**gamma * mp.exp(-z * z / (2 * T)) / mp.sqrt(2 * mp.pi * T)

    c = mp.sqrt(T)
    centre = gamma * th_hi * T
    pts = [-40 * c + gamma * th_lo * T, gamma * th_lo * T, centre, 40 * c + centre]
    return mp.log(mp.quad(integrand, sorted(pts)))


if __name__ == "__main__":
    for p in ("0.5", "0.2"):
        for T in (5, 10, 20, 40):
            print("learning", p, T, mp.nstr(log_learning_value("0.6", "0.2", p, T), 20))
    for args in [("0.3", "0.6", "0.2", "0.5", "-1", "-3", 10), ("0.7", "0.6", "0.2", "0.3", "0.5", "0.75", 10),
                 ("0.4", "0.6", "0.2", "0.5", "-3", "-1", 20), ("0.6", "0.6", "0.2", "0.5", "0.5", "-1", 10)]:
        print("logJ", args, mp.nstr(log_J(*args), 20))
