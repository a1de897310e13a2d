"""Pure-Python Monte Carlo kernels; same arithmetic as the compiled module."""

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z = (z + GOLDEN) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def counter_bits(seed, worker, step, site):
    h = mix64(seed & MASK)
    h = mix64(h ^ (worker & MASK))
    h = mix64(h ^ (step & MASK))
    return mix64(h ^ (site & MASK))


def counter_uniform(seed, worker, step, site):
    """Double in [0, 1) with 53 random bits."""
    return (counter_bits(seed, worker, step, site) >> 11) * (1.0 / 9007199254740992.0)


def run_ring(occ, steps, cdf, seed, worker, step0, bond, codes, current):
    """Advance ``occ`` in place by ``steps`` parallel updates on a ring.

    Fills ``codes[s]`` with the base-(N+1) encoding of the state after step s
    and ``current[s]`` with the number of particles that crossed ``bond``.
    """
    L = len(occ)
    base = sum(occ) + 1
    rows = [list(r) for r in cdf]
    state = [int(v) for v in occ]
    moved = [0] * L
    for s in range(steps):
        step = step0 + s
        for i in range(L):
            n = state[i]
            m = 0
            if n:
                u = counter_uniform(seed, worker, step, i)
                row = rows[n]
                while u >= row[m]:
                    m += 1
            moved[i] = m
        code = 0
        mult = 1
        last = moved[L - 1]
        for i in range(L):
            state[i] += last - moved[i]
            last = moved[i]
            code += state[i] * mult
            mult *= base
        codes[s] = code
        current[s] = moved[bond] if bond >= 0 else 0
    for i in range(L):
        occ[i] = state[i]
