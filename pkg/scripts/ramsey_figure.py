"""Enhancement-ratio scaling for the three noise families.

Prints r(n) = δω*_product / δω*_GHZ against n for noiseless, Markovian, and
quadratic-onset dephasing, with the fitted exponent of each family.  Saves
ramsey_scaling.png next to the cwd when matplotlib is importable.
"""

import numpy as np

from zenosim.ramsey import Markov, Noiseless, Zeno, scaling_scan

N_VALUES = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
T = 1000.0
C = 1.0


def main():
    curves = {}
    for label, noise, t_fixed in (
        ("noiseless", Noiseless(), 1.0),
        ("markov", Markov(C=C), None),
        ("zeno", Zeno(C=C), None),
    ):
        curve = scaling_scan(noise, N_VALUES, T, t_fixed)
        curves[label] = curve
        print(f"{label:10s} r = a*n^b with b = {curve.slope:+.6f} "
              f"(residual {curve.residual:.2e})")

    print("\n  n      noiseless      markov        zeno")
    for i, n in enumerate(N_VALUES):
        row = [curves[k].rows[i].ratio for k in ("noiseless", "markov", "zeno")]
        print(f"{n:5d}   {row[0]:10.4f}   {row[1]:10.6f}   {row[2]:9.4f}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("\nmatplotlib not installed; table only")
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    marks = {"noiseless": "o", "markov": "s", "zeno": "^"}
    for label, curve in curves.items():
        r = [row.ratio for row in curve.rows]
        ax.loglog(N_VALUES, r, marks[label] + "-", label=label)
    ax.loglog(N_VALUES, np.sqrt(N_VALUES), "k:", lw=1, label=r"$\sqrt{n}$")
    ax.loglog(N_VALUES, np.asarray(N_VALUES) ** 0.25, "k--", lw=1,
              label=r"$n^{1/4}$")
    ax.set_xlabel("n")
    ax.set_ylabel("enhancement ratio r")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig("ramsey_scaling.png", dpi=150)
    print("\nwrote ramsey_scaling.png")


if __name__ == "__main__":
    main()
