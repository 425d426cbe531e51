"""Figure construction from optimizer result files.

Each figure kind maps a fixed set of columns from the schema=1 files to one
static image. ``build`` returns the matplotlib Figure (tests inspect it);
``render`` writes it to disk. Styling is pinned so identical inputs yield
identical images; a ``deterministic`` render additionally strips the writer
metadata (software tag, dates) that would otherwise vary between runs.
"""

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import io  # noqa: E402

FIGURE_KINDS = ("traj3d", "traj2d", "altitude", "power", "speed", "rate",
                "convergence", "sweep", "tradeoff")

# file roles, recognized by basename
_INPUT_NAMES = {
    "trajectory.csv": "trajectory",
    "summary.json": "summary",
    "convergence.csv": "convergence",
    "rates.csv": "rates",
    "tradeoff.csv": "tradeoff",
}

_RC = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "aircrn-plots",
}


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    out: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}'; "
                             f"expected one of {', '.join(FIGURE_KINDS)}")


def classify_inputs(paths) -> dict:
    """{role: path} by basename; unknown basenames are an error."""
    roles = {}
    for path in paths:
        role = _INPUT_NAMES.get(os.path.basename(path))
        if role is None:
            raise ValueError(
                f"unrecognized input file '{path}'; expected one of "
                f"{', '.join(sorted(_INPUT_NAMES))}")
        if role in roles:
            raise ValueError(f"duplicate {role} input '{path}'")
        roles[role] = path
    return roles


def _need(roles: dict, role: str, kind: str) -> str:
    if role not in roles:
        raise ValueError(f"figure kind '{kind}' needs a {role} file "
                         f"({_basename_for(role)})")
    return roles[role]


def _basename_for(role: str) -> str:
    return next(k for k, v in _INPUT_NAMES.items() if v == role)


def _node_markers(ax, summary):
    meta = summary["metadata"]
    users = meta["users"]
    px, py = meta["primary"][0], meta["primary"][1]
    sx, sy = meta["start"][0], meta["start"][1]
    for r, (ux, uy) in enumerate(users):
        ax.plot([ux], [uy], marker="^", linestyle="none", color="tab:green",
                label=f"user {r + 1}")
    ax.plot([px], [py], marker="s", linestyle="none", color="tab:red",
            label="protected receiver")
    ax.plot([sx], [sy], marker="*", linestyle="none", markersize=10,
            color="tab:orange", label="start")


def _traj2d(roles):
    path = _need(roles, "trajectory", "traj2d")
    t = io.read_table(path)
    io.require(t, ["x_m", "y_m"], path)
    fig, ax = plt.subplots()
    ax.plot(t["x_m"], t["y_m"], "-", color="tab:blue", label="path")
    if "summary" in roles:
        _node_markers(ax, io.read_summary(roles["summary"]))
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("flight path, plan view")
    ax.axis("equal")
    ax.legend(loc="best")
    return fig


def _traj3d(roles):
    path = _need(roles, "trajectory", "traj3d")
    t = io.read_table(path)
    io.require(t, ["x_m", "y_m", "z_m"], path)
    fig = plt.figure()
    ax = fig.add_subplot(projection="3d")
    ax.plot(t["x_m"], t["y_m"], t["z_m"], "-", color="tab:blue",
            label="path")
    if "summary" in roles:
        meta = io.read_summary(roles["summary"])["metadata"]
        for r, (ux, uy) in enumerate(meta["users"]):
            ax.plot([ux], [uy], [0.0], marker="^", linestyle="none",
                    color="tab:green", label=f"user {r + 1}")
        ax.plot([meta["primary"][0]], [meta["primary"][1]], [0.0],
                marker="s", linestyle="none", color="tab:red",
                label="protected receiver")
        ax.plot([meta["start"][0]], [meta["start"][1]], [meta["start"][2]],
                marker="*", linestyle="none", markersize=10,
                color="tab:orange", label="start")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    ax.set_title("flight path")
    ax.legend(loc="upper left")
    return fig


def _per_slot(roles, kind, columns, draw):
    path = _need(roles, "trajectory", kind)
    t = io.read_table(path)
    io.require(t, ["n"] + columns, path)
    fig, ax = plt.subplots()
    draw(ax, t)
    ax.set_xlabel("slot")
    return fig


def _altitude(roles):
    def draw(ax, t):
        ax.plot(t["n"], t["z_m"], "-", color="tab:blue")
        ax.set_ylabel("altitude (m)")
        ax.set_title("altitude profile")
    return _per_slot(roles, "altitude", ["z_m"], draw)


def _power(roles):
    def draw(ax, t):
        ax.step(t["n"], t["tx_power_w"], where="mid", color="tab:blue")
        ax.set_ylabel("transmit power (W)")
        ax.set_title("transmit power per slot")
    return _per_slot(roles, "power", ["tx_power_w"], draw)


def _speed(roles):
    def draw(ax, t):
        ax.plot(t["n"], np.hypot(t["vx_mps"], t["vy_mps"]), "-",
                color="tab:blue", label="horizontal")
        ax.plot(t["n"], t["vz_mps"], "-", color="tab:orange",
                label="vertical")
        ax.set_ylabel("speed (m/s)")
        ax.set_title("speed per slot")
        ax.legend(loc="best")
    return _per_slot(roles, "speed", ["vx_mps", "vy_mps", "vz_mps"], draw)


def _rate(roles):
    def draw(ax, t):
        ax.plot(t["n"], t["rate_bps_hz"], "-", color="0.6", zorder=1)
        served = t["scheduled_user"].astype(int)
        for r in np.unique(served):
            mask = served == r
            ax.plot(t["n"][mask], t["rate_bps_hz"][mask], marker="o",
                    linestyle="none", markersize=3, label=f"user {r + 1}",
                    zorder=2)
        ax.set_ylabel("rate (bit/s/Hz)")
        ax.set_title("scheduled-user rate per slot")
        ax.legend(loc="best")
    return _per_slot(roles, "rate", ["rate_bps_hz", "scheduled_user"], draw)


def _convergence(roles):
    path = _need(roles, "convergence", "convergence")
    t = io.read_table(path)
    io.require(t, ["iteration", "objective_bps_hz"], path)
    fig, ax = plt.subplots()
    ax.plot(t["iteration"], t["objective_bps_hz"], marker="o",
            color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective (bit/s/Hz)")
    ax.set_title("convergence")
    return fig


def _sweep(roles):
    path = _need(roles, "rates", "sweep")
    t = io.read_table(path)
    io.require(t, ["param_value", "scheme", "avg_rate_bps_hz"], path)
    fig, ax = plt.subplots()
    schemes = sorted(set(t["scheme"]))
    for name in schemes:
        mask = t["scheme"] == name
        order = np.argsort(t["param_value"][mask])
        ax.plot(t["param_value"][mask][order],
                t["avg_rate_bps_hz"][mask][order], marker="o", label=name)
    ax.set_xlabel("parameter value")
    ax.set_ylabel("avg rate (bit/s/Hz)")
    ax.set_title("rate vs swept parameter")
    ax.legend(loc="best")
    return fig


def _tradeoff(roles):
    path = _need(roles, "tradeoff", "tradeoff")
    t = io.read_table(path)
    io.require(t, ["plan_altitude_m", "x_m", "plos", "rate_expected_bps_hz",
                   "rate_lower_bps_hz"], path)
    fig, (ax_p, ax_r) = plt.subplots(2, 1, sharex=True)
    for alt in np.unique(t["plan_altitude_m"]):
        mask = t["plan_altitude_m"] == alt
        label = f"{alt:g} m"
        ax_p.plot(t["x_m"][mask], t["plos"][mask], label=label)
        line, = ax_r.plot(t["x_m"][mask], t["rate_expected_bps_hz"][mask],
                          label=label)
        ax_r.plot(t["x_m"][mask], t["rate_lower_bps_hz"][mask],
                  linestyle="--", color=line.get_color())
    ax_p.set_ylabel("LoS probability")
    ax_p.legend(loc="best", title="altitude")
    ax_r.set_xlabel("x (m)")
    ax_r.set_ylabel("rate (bit/s/Hz)")
    ax_r.set_title("expected (solid) vs lower-bound (dashed) rate")
    fig.suptitle("visibility/rate trade-off across altitudes")
    return fig


_BUILDERS = {
    "traj3d": _traj3d,
    "traj2d": _traj2d,
    "altitude": _altitude,
    "power": _power,
    "speed": _speed,
    "rate": _rate,
    "convergence": _convergence,
    "sweep": _sweep,
    "tradeoff": _tradeoff,
}


def build(spec: FigureSpec):
    """Figure for the spec; caller owns (and should close) the figure."""
    roles = classify_inputs(spec.inputs)
    with plt.rc_context(_RC):
        return _BUILDERS[spec.kind](roles)


def render(spec: FigureSpec, deterministic: bool = False) -> str:
    ext = os.path.splitext(spec.out)[1].lower()
    if ext not in (".png", ".svg"):
        raise ValueError(f"output '{spec.out}' must end in .png or .svg")
    fig = build(spec)
    try:
        metadata = None
        if deterministic:
            # strip writer tags that vary between runs/installs
            if ext == ".png":
                metadata = {"Software": None}
            else:
                metadata = {"Date": None, "Creator": None}
        with plt.rc_context(_RC):
            fig.savefig(spec.out, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.out
