"""Figure rendering for the report-style CLI paths.

matplotlib is imported lazily and pinned to the Agg backend so the CLI
never needs a display. Each function writes one PNG next to the CSV or
JSON report it illustrates.
"""


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def estimate_figure(path, labels, values, errors):
    """Estimated moments with jackknife error bars, one bar per entry."""
    plt = _pyplot()
    n = len(labels)
    width = max(6.0, 0.35 * n)
    fig, ax = plt.subplots(figsize=(width, 4.5))
    x = range(n)
    finite = [e if e == e and e != float("inf") else 0.0 for e in errors]
    ax.errorbar(x, values, yerr=finite, fmt="o", ms=4, capsize=3, lw=1)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("estimated moment")
    ax.set_title("empirical two-point moments")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cell_figure(path, ell_max, series):
    """Per-degree spectra: diagonal entries left, cross entries right."""
    plt = _pyplot()
    ells = list(range(ell_max + 1))
    fig, (ax_d, ax_c) = plt.subplots(1, 2, figsize=(10, 4.5))
    for label, (values, errors) in series.items():
        a, b = label.split("-")
        ax = ax_d if a == b else ax_c
        finite = [e if e == e and e != float("inf") else 0.0 for e in errors]
        ax.errorbar(ells, values, yerr=finite, marker="o", ms=3,
                    capsize=2, lw=1, label=label)
    for ax, title in ((ax_d, "auto spectra"), (ax_c, "cross spectra")):
        ax.set_xlabel("degree")
        ax.set_ylabel("estimated spectrum")
        ax.set_title(title)
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def verify_figure(path, report):
    """One bar per criterion: measured value over its tolerance.

    Ratios below one pass. Zero-measure criteria draw as a thin sliver
    so every row stays visible.
    """
    plt = _pyplot()
    criteria = report["criteria"]
    names = ["%s %s" % (c["cid"], c["name"]) for c in criteria]
    ratios = []
    for c in criteria:
        tol = c["tolerance"]
        measured = c["measured"]
        ratios.append(measured / tol if tol > 0 else float(measured != 0.0))
    colors = ["#2a7f3f" if c["passed"] else "#b03030" for c in criteria]
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(criteria) + 1.5))
    y = range(len(criteria))
    ax.barh(y, [max(r, 1e-3) for r in ratios], color=colors)
    ax.axvline(1.0, color="k", lw=1, ls="--")
    ax.set_yticks(list(y))
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("measured / tolerance (dashed line = limit)")
    ax.set_title("acceptance criteria, budget %r" % report["budget"])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
