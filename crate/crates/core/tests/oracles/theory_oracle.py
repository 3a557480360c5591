"""Arbitrary-precision reference values for the closed-form constants.

Evaluates every formula literally with mpmath at 30 digits. The printed
values are frozen into ../theory_oracle.rs.
"""
from mpmath import mp, mpf, pi, quad, findroot, inf, sqrt

mp.dps = 30


def params(p):
    p = mpf(p)
    p1 = 3 * (p - 1) / (4 * p)
    alpha = (1 / (p - 1) - mpf(3) / (4 * p)) / 2
    l1 = (1 + 1 / p1) / 2
    l2 = l1 / (l1 - 1)
    return p, p1, alpha, l1, l2


def tau(r, m, p, c_f):
    p, p1, alpha, _, _ = params(p)
    c = c_f * max(1, mpf(2) ** (p - 2))
    base = (4 * pi) ** (-p1) * mpf(2) ** (p1 + p * alpha) / (1 - (p1 + p * alpha)) * c * (4 * mpf(r) + 4 * mpf(m))
    return base ** (-8 * p / (3 + p))


def r1(max_f, measure, t0, p):
    p, p1, *_ = params(p)
    return 2 * mpf(max_f) * sqrt(mpf(measure)) * mpf(t0) ** ((p + 3) / (4 * p)) / (3 * (p - 1) / (4 * p))


def r2(norm, t0, p):
    p, *_ = params(p)
    return 2 * mpf(t0) ** ((p + 3) / (4 * p)) / (3 * (p - 1) / (4 * p)) * mpf(norm)


def g_parts(horizon, m1, m2, p, c_f):
    p, p1, _, l1, l2 = params(p)
    c = c_f * max(1, mpf(2) ** (p - 2))
    scale = ((4 * pi) ** (-p1 * l1) * mpf(horizon) ** (1 - p1 * l1) / (1 - p1 * l1)) ** (-l2 / l1)
    h = lambda z: (c * (mpf(m1) + z ** ((p - 1) / l2)) * z ** (1 / l2) + mpf(m2)) ** (-l2)
    return scale, h


def g(r, horizon, m1, m2, p, c_f):
    scale, h = g_parts(horizon, m1, m2, p, c_f)
    return scale * quad(h, [0, mpf(r) / 4, mpf(r) / 2, mpf(r)])


def g_sup(horizon, m1, m2, p, c_f):
    scale, h = g_parts(horizon, m1, m2, p, c_f)
    return scale * quad(h, [0, 1, 10, 100, inf])


def g_inv(t, horizon, m1, m2, p, c_f):
    lo, hi = mpf(0), mpf(1)
    while g(hi, horizon, m1, m2, p, c_f) < t:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = (lo + hi) / 2
        if g(mid, horizon, m1, m2, p, c_f) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo < mpf(10) ** -40:
            break
    return (lo + hi) / 2


def m_star(t_star, m_level, measure, max_f, p, c_f, exponent):
    p_, p1, _, l1, l2 = params(p)
    m1 = mpf(m_level) ** (p_ - 1) * mpf(measure) ** ((p_ - 1) / (2 * p_))
    m2 = sqrt(mpf(measure)) * mpf(max_f)
    gi = g_inv(mpf(t_star), t_star, m1, m2, p, c_f)
    c = c_f * max(1, mpf(2) ** (p_ - 2))
    e = (p_ - 1) / l2 if exponent == "printed" else 1 / l2
    return (4 * mpf(t_star) / pi ** 3) ** (mpf(1) / 4) * (c * (gi ** ((p_ - 1) / l2) + m1) * gi ** e + m2)


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


if __name__ == "__main__":
    show("tau_p3_r1_m0", tau(1, 0, 3, 3))
    show("tau_p3_r05_m025", tau(mpf("0.5"), mpf("0.25"), 3, 3))
    show("tau_p4_r1_m1", tau(1, 1, 4, 4))
    show("tau_p25_r2_m3", tau(2, 3, mpf("2.5"), 1))
    show("r1_square", r1(1, 1, 1, 2))
    show("r1_cube", r1(8, mpf("0.5"), mpf("0.3"), 3))
    show("r2_unit", r2(1, 1, 2))
    show("r2_p3", r2(mpf("1.7"), mpf("0.2"), 3))
    show("g_p2_unit", g(1, 1, 1, 1, 2, 2))
    show("g_p3", g(2, mpf("0.5"), mpf("0.5"), 2, 3, 3))
    show("g_sup_p2_unit", g_sup(1, 1, 1, 2, 2))
    show("g_inv_p2_02", g_inv(mpf("0.2"), 1, 1, 1, 2, 2))
    show("m_star_p2", m_star(mpf("0.01"), 1, 1, 1, 2, 2, "printed"))
    show("m_star_p3_printed", m_star(mpf("0.01"), 1, 1, 1, 3, 3, "printed"))
    show("m_star_p3_restated", m_star(mpf("0.01"), 1, 1, 1, 3, 3, "restated"))
    # T_* for |u|^3 with M = 1 on a unit measure, T0 = 1
    r = r1(1, 1, 1, 3)
    show("t_star_cube", min(mpf(1), tau(r, 1, 3, 3)))
    # common time for two bands of measure 0.55 at M_underbar = 1.2
    ts = min(mpf(1), tau(r, 1, 3, 3))
    mu = mpf("1.2")
    taus = []
    for mj in [mpf("0.55"), mpf("0.55")]:
        taus.append(tau(r1(mu ** 3, mj, 1, 3), mu ** 2 * mj ** (mpf(2) / 6), 3, 3))
    show("t_star_common_cube", min([mpf(1), ts] + taus))
