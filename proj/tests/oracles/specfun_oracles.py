"""Reference values for test_specfun.cpp (mpmath, 50 digits, direct series only)."""
import mpmath as mp

mp.mp.dps = 50


def f2reg_direct(a, b, c, z):
    z = mp.mpf(z)
    m0 = max(0, 1 - c)
    s = mp.mpf(0)
    m = m0
    while True:
        if (a <= 0 and m > -a) or (b <= 0 and m > -b):
            break
        t = mp.rf(a, m) * mp.rf(b, m) / (mp.factorial(c + m - 1) * mp.factorial(m)) * z**m
        s += t
        if m > m0 + 10 and abs(t) < mp.mpf(10) ** -45 * abs(s):
            break
        m += 1
    return s


cases = [(1, 1, 2, 0.75), (1, 1, 0, 0.5), (3, 3, 2, 0.9), (1, 1, 5, 0.95), (2, 3, 5, 0.99),
         (1, 6, 2, 0.8), (5, -3, -2, 0.7), (2, 4, -1, 0.9), (11, 11, 12, 0.999),
         (1, 1, 12, 0.9999), (4, 2, 3, 0.3)]
for c in cases:
    print("2F1reg", c, mp.nstr(f2reg_direct(*c), 20))

for z in [0.5, 0.9, 0.99]:
    print("3F2", z, mp.nstr(mp.hyp3f2(1, 1, 1, 1.5, 1.5, z), 20))

xs = [0.1, 1, 5] + [float(10 ** (-2 + 3 * i / 9)) for i in range(10)]
for x in xs:
    print("L0", repr(x), mp.nstr(mp.struvel(0, x), 20))

print("zeta3", mp.nstr(mp.zeta(3), 20), "catalan", mp.nstr(mp.catalan, 20))
print("lorentz", mp.nstr(28 * mp.zeta(3) / mp.pi - 8 * mp.catalan, 20))
print("l1(0.1)", mp.nstr(4 / mp.pi * 0.1 * mp.hyp3f2(1, 1, 1, 1.5, 1.5, mp.mpf('0.01')), 20))
