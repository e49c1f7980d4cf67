"""Figure rendering for report outputs.

CSV/TSV files are the contract; figures are best-effort companions. All
rendering goes through `render_safely`, which logs and moves on if the
plotting backend misbehaves, so headless runs never fail on a figure.
"""

import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

log = logging.getLogger(__name__)


def render_safely(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # pragma: no cover - depends on local matplotlib state
        log.warning("figure rendering skipped: %s", exc)
        return None


def plot_duration_bars(rows, out_path, title="Per-language audio duration"):
    """Descending per-language duration bars; `rows` are (lang, hours)."""
    langs = [r[0] for r in rows]
    hours = [float(r[1]) for r in rows]
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(langs)), 3))
    ax.bar(range(len(langs)), hours, color="#4878a8")
    ax.set_xticks(range(len(langs)))
    ax.set_xticklabels(langs, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("hours")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_grouped_bars(groups, series, values, out_path, ylabel, title):
    """Grouped bars: `groups` on the x axis, one bar per `series` member.

    `values[(group, series)]` -> height. Used for the variant comparison
    and the low-resource budget charts.
    """
    width = 0.8 / max(len(series), 1)
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(groups)), 3))
    for si, name in enumerate(series):
        xs = [gi + si * width for gi in range(len(groups))]
        ys = [values.get((g, name), float("nan")) for g in groups]
        ax.bar(xs, ys, width=width, label=str(name))
    ax.set_xticks([gi + 0.4 - width / 2 for gi in range(len(groups))])
    ax.set_xticklabels(groups, fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
