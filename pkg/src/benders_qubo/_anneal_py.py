"""Pure-Python twin of the compiled annealing kernel.

Produces bit-identical output to ``_anneal.anneal`` for the same inputs; it is
orders of magnitude slower and only meant for environments without a compiler.
"""

import math

_MASK = (1 << 64) - 1
EXP_CUTOFF = 40.0
INV_2_53 = 1.0 / 9007199254740992.0


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, v = _splitmix64(sm)
            s.append(v)
        self.s = s

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self):
        return (self.next() >> 11) * INV_2_53


def anneal(J, h, betas, num_reads, seed, out):
    N = len(h)
    J = [list(map(float, row)) for row in J]
    h = [float(v) for v in h]
    betas = [float(v) for v in betas]
    seed &= _MASK
    for r in range(num_reads):
        rng = Xoshiro256(seed ^ r)
        z = [rng.next() >> 63 for _ in range(N)]
        f = []
        for i in range(N):
            acc = 0.0
            row = J[i]
            for j in range(N):
                if z[j]:
                    acc = acc + row[j]
            f.append(acc)
        for beta in betas:
            for i in range(N):
                dE = h[i] + f[i]
                if z[i]:
                    dE = -dE
                if dE <= 0.0:
                    accept = True
                else:
                    x = beta * dE
                    if x < EXP_CUTOFF:
                        accept = rng.uniform() < math.exp(-x)
                    else:
                        accept = False
                if accept:
                    z[i] = 1 - z[i]
                    row = J[i]
                    if z[i]:
                        for j in range(N):
                            f[j] = f[j] + row[j]
                    else:
                        for j in range(N):
                            f[j] = f[j] - row[j]
        for i in range(N):
            out[r, i] = z[i]
