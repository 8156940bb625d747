"""Figure rendering for the report path; every figure is written to a file."""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_ledger(ledger, path):
    """Two panels: energy stores over time, dissipation rates over time."""
    t = np.asarray(ledger.times)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(t, ledger.kinetic, label="kinetic")
    ax0.plot(t, ledger.pressure_potential, label="pressure potential")
    ax0.plot(t, ledger.entropy, label="polymer entropy")
    ax0.plot(t, ledger.interaction, label="interaction")
    total = [ledger.energy(n) for n in range(len(t))]
    ax0.plot(t, total, "k--", lw=1.0, label="total")
    ax0.set_xlabel("t")
    ax0.set_ylabel("energy")
    ax0.legend(fontsize=7)

    ax1.plot(t, ledger.d_viscous, label="viscous deviatoric")
    ax1.plot(t, ledger.d_bulk, label="bulk")
    ax1.plot(t, ledger.d_fisher_x, label="x-Fisher")
    ax1.plot(t, ledger.d_fisher_q, label="q-Fisher")
    ax1.plot(t, ledger.d_density_grad, label="density gradient")
    ax1.set_xlabel("t")
    ax1.set_ylabel("dissipation rate")
    ax1.set_yscale("symlog", linthresh=1e-12)
    ax1.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace(trace, path):
    times, B, A = trace.arrays()
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    for j, (k, l) in enumerate(trace.modes):
        ax0.plot(times, B[:, j], lw=0.8, label=f"mode ({k},{l})")
        ax1.plot(times, A[:, j], lw=0.8, label=f"mode ({k},{l})")
    ax0.set_xlabel("t")
    ax0.set_ylabel("density coefficient b")
    ax1.set_xlabel("t")
    ax1.set_ylabel("momentum coefficient a")
    ax0.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_convergence(report, path):
    eps = []
    series = {key: [] for key in report.METRIC_KEYS}
    for e in report.epsilons:
        if report.runs[e].status != "ok":
            continue
        eps.append(e)
        for key in report.METRIC_KEYS:
            series[key].append(report.metrics.get((e, key), np.nan))
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    for key, vals in series.items():
        if eps and np.all(np.isfinite(vals)):
            ax.loglog(eps, vals, "o-", label=key)
    if eps:
        e = np.asarray(eps)
        anchor = series["sup_rho_l2"][0] if series["sup_rho_l2"] else 1.0
        ax.loglog(e, anchor * e / e[0], "k--", lw=0.8, label="order 1")
    ax.set_xlabel("Mach number")
    ax.set_ylabel("metric")
    ax.invert_xaxis()
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
