"""High-precision reference values frozen into the C++ test suites.

Run with `python3 tests/oracles/golden_values.py`. Uses mpmath at 50 digits;
nothing here shares code with the C++ implementation.
"""
import mpmath as mp

mp.mp.dps = 50


def big_n(d, mu):
    d, mu = mp.mpf(d), mp.mpf(mu)
    return 2 * d * (1 + 1 / (2 * mu * (d - 1))) / (2 * mu - 1)


def gamma_ratio(d):
    return mp.gamma(mp.mpf(d) / 2) / mp.gamma(mp.mpf(d - 1) / 2)


def f_da(d, a, u):
    x = min(max(a * (u - 1), 0), 2)
    return (2 * a / mp.sqrt(mp.pi) * gamma_ratio(d)
            * x ** (mp.mpf(d - 1) / 2) * (2 - x) ** (mp.mpf(d - 3) / 2) / u)


def stationarity(d, n, rho):
    a = mp.mpf(n) / (2 * mp.re(rho) ** 2)
    return mp.quad(lambda u: f_da(d, a, u), [1, 1 + 1 / a, 1 + 2 / a])


def solve_rho(d, mu):
    n = big_n(d, mu)
    return mp.findroot(lambda r: stationarity(d, n, r) - 1 / mp.mpf(mu),
                       (mp.sqrt(d) * 0.9, mp.sqrt(d) * 1.1), solver="anderson")


def lemma_b_numeric(d, a):
    a = mp.mpf(a)
    dlog = lambda u: mp.diff(lambda v: mp.log(f_da(d, a, v)), u)
    return mp.findroot(dlog, (1 + mp.mpf("0.01") / a, 1 + mp.mpf("1.99") / a),
                       solver="anderson")


if __name__ == "__main__":
    print("pair_kernel (1,0),(-1,0) mu=1 N=6:", mp.nstr(1 - 6 * mp.log(mp.mpf(5) / 3), 20))
    for d in (3, 4, 300, 1000000):
        print(f"gamma_ratio({d}):", mp.nstr(gamma_ratio(d), 20))
    for d, mu in ((2, 1), (2, 2.5), (64, 1), (64, 1.5), (64, 4.5), (64, 16.5), (64, 64.5)):
        print(f"big_n({d},{mu}):", mp.nstr(big_n(d, mu), 20))
    print("stationarity d=8 N=4 rho=2:", mp.nstr(stationarity(8, 4, 2), 25))
    print("stationarity d=64 mu=1 rho=8:", mp.nstr(stationarity(64, big_n(64, 1), 8), 25))
    print("rho d=64 mu=1:", mp.nstr(solve_rho(64, 1), 25))
    print("rho d=12 mu=2.25:", mp.nstr(solve_rho(12, 2.25), 25))
    print("rho d=3 mu=2:", mp.nstr(solve_rho(3, 2), 25))
    print("lemma_b d=4 a=1:", mp.nstr((1 + mp.sqrt(13)) / 2, 20), mp.nstr(lemma_b_numeric(4, 1), 20))
    print("lemma_b d=5 a=0.5:", mp.nstr(lemma_b_numeric(5, 0.5), 20))
    print("sqrt(129.016):", mp.nstr(mp.sqrt(mp.mpf("129.016")), 20))
    print("pair r* d=3 mu=1:", mp.nstr(mp.sqrt(big_n(3, 1) * 3) / 2, 20))
