"""Independent reference values frozen into the C++ tests.

Quantities come from first principles: direct integration with mpmath, or the
stationary law of the storage chain computed numerically on a dense grid.
Run: python3 tests/oracles/derive.py
"""
import mpmath as mp
import numpy as np

mp.mp.dps = 40


def laplace_pdf(x, b):
    return mp.e ** (-abs(x) / b) / (2 * b)


def laplace_cdf(x, b):
    return np.where(x < 0, 0.5 * np.exp(x / b), 1 - 0.5 * np.exp(-x / b))


def greedy_chain(smax, ec, ed, b, n=4000):
    """Stationary law of the greedy storage chain on n+1 grid cells."""
    grid = np.linspace(0.0, smax, n + 1)
    edges = np.concatenate(([-np.inf], (grid[:-1] + grid[1:]) / 2, [np.inf]))
    P = np.zeros((n + 1, n + 1))
    for i, s in enumerate(grid):
        def x_of(y):
            return np.where(y >= s, (y - s) / ec, (y - s) * ed)
        hi = np.where(edges[1:] >= smax, 1.0, laplace_cdf(x_of(np.clip(edges[1:], 0, smax)), b))
        lo = np.where(edges[:-1] <= 0, 0.0, laplace_cdf(x_of(np.clip(edges[:-1], 0, smax)), b))
        P[i] = hi - lo
    w, v = np.linalg.eig(P.T)
    k = np.argmin(np.abs(w - 1))
    pi = np.real(v[:, k])
    return grid, pi / pi.sum()


def greedy_generation(gmax, grid, pi, ed, b):
    """E[min((X^- - ed S)^+, gmax)] with S ~ pi independent of X."""
    total = mp.mpf(0)
    for s, p in zip(grid, pi):
        if p < 1e-18:
            continue
        a = ed * s
        f = lambda x: min(max(-x - a, 0), gmax) * laplace_pdf(x, b)
        total += p * mp.quad(f, [-mp.inf, -a - gmax, -a])
    return total


def main():
    b = 13.99
    gmax = 160.0
    print("jg_no_storage(160, 13.99) =",
          mp.nstr(mp.quad(lambda x: min(-x, gmax) * laplace_pdf(x, b), [-mp.inf, -gmax, 0]), 17))
    print("lolp_no_storage(160, 13.99) =",
          mp.nstr(mp.quad(lambda x: laplace_pdf(x, b), [-mp.inf, -gmax]), 17))

    grid, pi = greedy_chain(100.0, 0.9, 0.9, b)
    print("storage_atom_empty(0.9, 0.9, smax=100) ~", pi[0], "(grid)")

    ec = ed = float(mp.sqrt(0.6))
    grid, pi = greedy_chain(50.0, ec, ed, b, n=1000)
    print("jg(smax=50, alpha=0.6) ~", mp.nstr(greedy_generation(gmax, grid, pi, ed, b), 10), "(grid)")

    # Capacities by root finding on the high-precision cost curve.
    def jg(smax, alpha):
        e = mp.sqrt(alpha)
        lam = 1 / mp.mpf("13.99")
        theta = (1 / e - e) * lam / 2
        return ((1 - mp.e ** (-lam * 160)) / (2 * lam) * (1 - alpha)
                / (1 - alpha * mp.e ** (-theta * smax)))

    for a in ("0.6", "0.8"):
        alpha = mp.mpf(a)
        j0 = jg(0, alpha)
        jinf = (1 - mp.e ** (-160 / mp.mpf("13.99"))) * mp.mpf("13.99") / 2 * (1 - alpha)
        target = j0 - mp.mpf("0.8") * (j0 - jinf)
        print(f"smax_80pct(alpha={a}) =",
              mp.nstr(mp.findroot(lambda s: jg(s, alpha) - target, 50), 17))
    print("smax_for_jg_3.6(alpha=0.6) =",
          mp.nstr(mp.findroot(lambda s: jg(s, mp.mpf("0.6")) - mp.mpf("3.6"), 50), 17))


if __name__ == "__main__":
    main()
