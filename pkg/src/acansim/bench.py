"""Parametric studies over the neuron simulator.

Energy surfaces over frequency/duty and width/duty grids, optimal
operating-frequency search, synapse-count scaling tables, process-corner
trends, and savings reports against the level-driven design.  Every
study is deterministic for a fixed seed and dispatches its independent
grid points concurrently when asked.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .baseline import BaselineConfig, run_baseline
from .engine import SimulationError
from .model import (
    CircuitConfig,
    Corner,
    Environment,
    predicted_optimal_frequency,
    sweep_lock_frequency,
    tune_inductor,
)
from .neuron import Code, input_sweeps, run_neuron

_LOAD_CASES = ("all-0", "all-1", "sweep")


@dataclass(frozen=True)
class SweepSpec:
    """Protocol knobs shared by the parametric studies."""

    cycles: int = 600       # simulated cycles per grid point
    skip: int = 200         # startup cycles dropped before windowing
    window: int = 20        # sliding-window length, cycles
    repeats: int = 8        # sweep repetitions per input order
    seed: int = 0           # scramble seed for input orders
    load_case: str = "all-0"

    def __post_init__(self) -> None:
        if self.cycles < 1:
            raise ValueError(f"spec.cycles: must be >= 1, got {self.cycles}")
        if self.skip < 0 or self.window < 1:
            raise ValueError("spec.skip/window: need skip >= 0 and window >= 1")
        if self.skip + self.window > self.cycles:
            raise ValueError(
                f"spec: skip + window must be <= cycles, got {self.skip}+{self.window} > {self.cycles}")
        if self.repeats < 1:
            raise ValueError(f"spec.repeats: must be >= 1, got {self.repeats}")
        if self.load_case not in _LOAD_CASES:
            raise ValueError(f"spec.load_case: must be one of {_LOAD_CASES}, got {self.load_case!r}")


def worst_window_mean(series: Sequence[float], skip: int, window: int) -> float:
    """Maximum sliding-window mean after dropping the first `skip` entries."""
    vals = [float(v) for v in series]
    if skip < 0 or window < 1:
        raise ValueError("worst_window_mean: need skip >= 0 and window >= 1")
    if len(vals) < skip + window:
        raise ValueError(
            f"worst_window_mean: series of {len(vals)} too short for skip={skip}, window={window}")
    tail = vals[skip:]
    best = -math.inf
    for i in range(len(tail) - window + 1):
        best = max(best, sum(tail[i:i + window]) / window)
    return best


def _const_codes(n: int, alpha: float, cycles: int) -> list[Code]:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha: must lie in [0, 1], got {alpha}")
    n_on = int(round(alpha * n))
    code = tuple(1 if i < n_on else 0 for i in range(n))
    return [code] * cycles


def _fill_codes(orders: list[list[Code]], cycles: int) -> list[Code]:
    flat = [c for order in orders for c in order]
    reps = -(-cycles // len(flat))
    return (flat * reps)[:cycles]


def _load_codes(cfg: CircuitConfig, spec: SweepSpec) -> list[Code]:
    n = cfg.tree.n
    if spec.load_case == "all-0":
        return _const_codes(n, 0.0, spec.cycles)
    if spec.load_case == "all-1":
        return _const_codes(n, 1.0, spec.cycles)
    return _fill_codes(input_sweeps(n, seed=spec.seed), spec.cycles)


def _energy_point(args) -> float:
    cfg, codes, skip, window = args
    run = run_neuron(cfg, codes)
    return worst_window_mean(run.ledger.s_e, skip, window)


def _width_point(args) -> float:
    cfg, orders, repeats = args
    worst = -math.inf
    for order in orders:
        run = run_neuron(cfg, list(order) * repeats)
        block = len(order)
        s_e = run.ledger.s_e
        means = s_e.reshape(repeats, block).mean(axis=1)
        worst = max(worst, float(means[-1]))
    return worst


def _corner_point(args):
    # score the last order block only: the first repeats carry the
    # lock-in transient, which is not part of the per-corner comparison
    cfg, codes, block = args
    run = run_neuron(cfg, codes)
    k0 = len(codes) - block
    return (
        float(run.ledger.s_e[k0:].mean()),
        float(run.ledger.n_e[k0:].mean()),
        run.output_bits[k0:],
        run.output_bits[k0:] == run.oracle_string[k0:],
    )


def _pmap(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


@dataclass
class Surface:
    """Energy per grid point over two swept parameters."""

    x_name: str                 # "f_Hz" or "W_um"
    y_name: str                 # "duty"
    x: tuple[float, ...]
    y: tuple[float, ...]
    energy: np.ndarray          # shape (len(x), len(y)), joules

    def __post_init__(self) -> None:
        if self.energy.shape != (len(self.x), len(self.y)):
            raise ValueError(
                f"surface: energy shape {self.energy.shape} does not match grid "
                f"({len(self.x)}, {len(self.y)})")

    @property
    def argmin(self) -> tuple[float, float, float]:
        """(x, y, energy) of the grid minimum."""
        ix, iy = np.unravel_index(int(np.argmin(self.energy)), self.energy.shape)
        return self.x[ix], self.y[iy], float(self.energy[ix, iy])

    def _x_csv(self, v: float) -> float:
        return v / 1e-6 if self.x_name == "W_um" else v

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.x_name},{self.y_name},energy_J\n")
            for i, xv in enumerate(self.x):
                for j, yv in enumerate(self.y):
                    fh.write(f"{repr(float(self._x_csv(xv)))},{repr(float(yv))},"
                             f"{repr(float(self.energy[i, j]))}\n")

    def as_dict(self) -> dict:
        ax, ay, ae = self.argmin
        return {
            "x_name": self.x_name,
            "y_name": self.y_name,
            "x": [float(v) for v in self.x],
            "y": [float(v) for v in self.y],
            "energy_J": [[float(v) for v in row] for row in self.energy],
            "argmin": {self.x_name: self._x_csv(ax), self.y_name: ay, "energy_J": ae},
        }


def sweep_freq_duty(
    cfg: CircuitConfig,
    f_grid: Sequence[float],
    d_grid: Sequence[float],
    load_case: str = "all-0",
    spec: SweepSpec | None = None,
    jobs: int = 1,
) -> Surface:
    """Worst-window tree energy over (drive frequency, duty).

    The inductor is tuned once so the unloaded resonance sits at the
    config's nominal frequency; the grid then sweeps the drive frequency
    across that fixed resonator.
    """
    if not f_grid or not d_grid:
        raise ValueError("sweep_freq_duty: grids must be non-empty")
    spec = replace(spec or SweepSpec(), load_case=load_case)
    base = tune_inductor(cfg)
    items = []
    for f in f_grid:
        for d in d_grid:
            pt = replace(base, pc=replace(base.pc, f_nominal=float(f), duty_d=float(d)))
            items.append((pt, _load_codes(pt, spec), spec.skip, spec.window))
    vals = _pmap(_energy_point, items, jobs)
    energy = np.array(vals).reshape(len(f_grid), len(d_grid))
    return Surface("f_Hz", "duty", tuple(float(v) for v in f_grid),
                   tuple(float(v) for v in d_grid), energy)


def sweep_width_duty(
    cfg: CircuitConfig,
    w_grid: Sequence[float],
    d_grid: Sequence[float],
    spec: SweepSpec | None = None,
    jobs: int = 1,
    f_factor: float = 0.977,
) -> Surface:
    """Worst sweep-average tree energy over (bypass width, duty).

    Runs the five input orders (one ascending, four scrambled) for
    `spec.repeats` passes each at a drive frequency slightly below the
    unloaded resonance, and keeps the worst converged sweep average.
    """
    if not w_grid or not d_grid:
        raise ValueError("sweep_width_duty: grids must be non-empty")
    spec = spec or SweepSpec()
    base = tune_inductor(cfg)
    base = replace(base, pc=replace(base.pc, f_nominal=base.pc.f_nominal * f_factor))
    orders = input_sweeps(base.tree.n, seed=spec.seed)
    items = []
    for w in w_grid:
        for d in d_grid:
            pt = replace(base, pc=replace(base.pc, w_n=float(w), duty_d=float(d)))
            items.append((pt, orders, spec.repeats))
    vals = _pmap(_width_point, items, jobs)
    energy = np.array(vals).reshape(len(w_grid), len(d_grid))
    return Surface("W_um", "duty", tuple(float(v) for v in w_grid),
                   tuple(float(v) for v in d_grid), energy)


class FrequencyOpt(NamedTuple):
    """Result of the operating-frequency search."""

    frequency: float
    energy: float
    unimodal: bool


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_frequency(
    cfg: CircuitConfig,
    alpha: float,
    spec: SweepSpec | None = None,
    tune: bool = True,
    rel_tol: float = 1e-3,
) -> FrequencyOpt:
    """Minimum of worst-window tree energy over drive frequency at fixed loading.

    Evaluates a 13-point coarse grid spanning +/-60% of the predicted
    optimum, then refines by golden section to `rel_tol` relative width.
    A landscape that is not unimodal on the coarse grid short-circuits to
    the grid minimum with the flag cleared.

    The top-up window keeps the absolute width it has in the base config:
    trial points rescale the duty fraction so t_ON stays put while the
    period stretches.  Searching with a fixed fraction instead would widen
    the window at low frequencies and overdrive the tank, burying the
    loading effect under top-up loss.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha: must be in [0, 1], got {alpha}")
    spec = spec or SweepSpec()
    if tune:
        cfg = tune_inductor(cfg)
    codes = _const_codes(cfg.tree.n, alpha, spec.cycles)
    t_on = cfg.pc.t_on

    def obj(f: float) -> float:
        duty = t_on * float(f)
        if not 0.0 < duty <= 0.5:
            return math.inf
        pt = replace(cfg, pc=replace(cfg.pc, f_nominal=float(f), duty_d=duty))
        try:
            run = run_neuron(pt, codes)
        except SimulationError:
            # guard-tripped point: hopeless operating frequency
            return math.inf
        return worst_window_mean(run.ledger.s_e, spec.skip, spec.window)

    f_pred = predicted_optimal_frequency(cfg, alpha)
    grid = [f_pred * s for s in np.linspace(0.4, 1.6, 13)]
    e_grid = [obj(f) for f in grid]
    finite = [e for e in e_grid if math.isfinite(e)]
    if not finite:
        raise SimulationError("optimize_frequency: every coarse grid point diverged")
    sentinel = 10.0 * max(finite)
    e_grid = [e if math.isfinite(e) else sentinel for e in e_grid]
    k = int(np.argmin(e_grid))

    # unimodality on the coarse grid: energy must fall, then rise
    diffs = np.diff(e_grid)
    deadband = 1e-9 * max(abs(v) for v in e_grid)
    signs = [0 if abs(d) <= deadband else (1 if d > 0 else -1) for d in diffs]
    signs = [s for s in signs if s != 0]
    descents = sum(1 for a, b in zip(signs, signs[1:]) if a > 0 and b < 0)
    if descents > 0 or k in (0, len(grid) - 1):
        return FrequencyOpt(grid[k], e_grid[k], False)

    a, b = grid[k - 1], grid[k + 1]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    e_c, e_d = obj(c), obj(d)
    best_f, best_e = (grid[k], e_grid[k])
    while (b - a) > rel_tol * 0.5 * (a + b):
        if e_c < e_d:
            b, d, e_d = d, c, e_c
            c = b - _INVPHI * (b - a)
            e_c = obj(c)
        else:
            a, c, e_c = c, d, e_d
            d = a + _INVPHI * (b - a)
            e_d = obj(d)
        for f, e in ((c, e_c), (d, e_d)):
            if e < best_e:
                best_f, best_e = f, e
    return FrequencyOpt(float(best_f), float(best_e), True)


def scaled_tree(cfg: CircuitConfig, n: int, c_e: float | None = None) -> CircuitConfig:
    """Config with `n` equal synapses (weight taken from the first one),
    the damping capacitor scaled to n times the synapse weight, and an
    optional equalising-capacitance override."""
    if n < 1:
        raise ValueError(f"n: must be >= 1, got {n}")
    c0 = cfg.tree.c_s[0]
    tree = replace(cfg.tree, c_s=(c0,) * n, c_d=n * c0)
    pc = cfg.pc if c_e is None else replace(cfg.pc, c_e=float(c_e))
    return replace(cfg, tree=tree, pc=pc)


@dataclass
class ScalingRow:
    c_e: float
    alpha: float
    f_opt: float
    s_e: float
    n_e: float
    unimodal: bool = True


@dataclass
class ScalingTable:
    """Optimal frequency and per-cycle energies across (C_E, loading)."""

    n: int
    rows: list[ScalingRow] = field(default_factory=list)

    def validate(self) -> None:
        """Loaded trees resonate lower: f_opt must not rise with alpha."""
        by_ce: dict[float, list[ScalingRow]] = {}
        for r in self.rows:
            by_ce.setdefault(r.c_e, []).append(r)
        for c_e, group in by_ce.items():
            group = sorted(group, key=lambda r: r.alpha)
            for lo, hi in zip(group, group[1:]):
                if hi.f_opt > lo.f_opt * (1.0 + 2e-3):
                    raise ValueError(
                        f"scaling table: f_opt rises with alpha at C_E={c_e}: "
                        f"{lo.f_opt} -> {hi.f_opt}")

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("C_E_pF,alpha,f_opt_Hz,S_E_pJ,N_E_pJ\n")
            for r in self.rows:
                fh.write(f"{repr(r.c_e * 1e12)},{repr(r.alpha)},{repr(r.f_opt)},"
                         f"{repr(r.s_e * 1e12)},{repr(r.n_e * 1e12)}\n")

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "rows": [{
                "C_E_pF": r.c_e * 1e12, "alpha": r.alpha, "f_opt_Hz": r.f_opt,
                "S_E_pJ": r.s_e * 1e12, "N_E_pJ": r.n_e * 1e12, "unimodal": r.unimodal,
            } for r in self.rows],
        }


def _scaling_row(args) -> ScalingRow:
    cfg, n, c_e, alpha, spec = args
    cfg_row = tune_inductor(scaled_tree(cfg, n, c_e))
    opt = optimize_frequency(cfg_row, alpha, spec=spec, tune=False)
    return ScalingRow(c_e=c_e, alpha=alpha, f_opt=opt.frequency,
                      s_e=opt.energy, n_e=cfg.dlcc.e_decision, unimodal=opt.unimodal)


def scaling_study(
    cfg: CircuitConfig,
    n: int,
    c_e_list: Sequence[float],
    alpha_list: Sequence[float],
    spec: SweepSpec | None = None,
    jobs: int = 1,
) -> ScalingTable:
    """Optimal frequency and energies for an n-synapse tree across C_E and loading."""
    if not c_e_list or not alpha_list:
        raise ValueError("scaling_study: grids must be non-empty")
    spec = spec or SweepSpec()
    items = [(cfg, n, float(c_e), float(alpha), spec)
             for c_e in c_e_list for alpha in alpha_list]
    rows = _pmap(_scaling_row, items, jobs)
    table = ScalingTable(n=n, rows=rows)
    table.validate()
    return table


@dataclass
class CornerRow:
    corner: str
    temperature_c: float
    e_tree: float
    e_soma: float
    outputs: str
    outputs_ok: bool


@dataclass
class CornerTable:
    """Tree and soma energies over the full corner/temperature grid."""

    rows: list[CornerRow] = field(default_factory=list)

    def spread_by_temperature(self) -> dict[float, float]:
        """(max - min)/mean of tree energy across corners, per temperature."""
        by_t: dict[float, list[float]] = {}
        for r in self.rows:
            by_t.setdefault(r.temperature_c, []).append(r.e_tree)
        return {t: (max(v) - min(v)) / float(np.mean(v)) for t, v in sorted(by_t.items())}

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("corner,temp_C,E_tree_J,E_soma_J,outputs_ok\n")
            for r in self.rows:
                fh.write(f"{r.corner},{repr(r.temperature_c)},{repr(r.e_tree)},"
                         f"{repr(r.e_soma)},{int(r.outputs_ok)}\n")

    def as_dict(self) -> dict:
        return {"rows": [{
            "corner": r.corner, "temp_C": r.temperature_c, "E_tree_J": r.e_tree,
            "E_soma_J": r.e_soma, "outputs": r.outputs, "outputs_ok": r.outputs_ok,
        } for r in self.rows]}


def corner_study(
    cfg: CircuitConfig,
    corners: Sequence[Corner] | None = None,
    temps: Sequence[float] = (0.0, 25.0, 50.0, 75.0, 100.0),
    spec: SweepSpec | None = None,
    jobs: int = 1,
    f_factor: float = 0.977,
) -> CornerTable:
    """Energy and functionality across process corners and temperatures,
    driven slightly below the unloaded resonance."""
    corners = list(corners) if corners is not None else list(Corner)
    if not corners or not temps:
        raise ValueError("corner_study: grids must be non-empty")
    spec = spec or SweepSpec()
    base = tune_inductor(cfg)
    f_op = base.pc.f_nominal * f_factor
    base = replace(base, pc=replace(
        base.pc, f_nominal=f_op, duty_d=base.pc.t_on * f_op))
    orders = input_sweeps(base.tree.n, seed=spec.seed)
    codes = list(orders[0]) * spec.repeats
    items = []
    grid = [(c, float(t)) for c in corners for t in temps]
    for c, t in grid:
        pt = replace(base, env=Environment(corner=c, temperature_c=t))
        items.append((pt, codes, len(orders[0])))
    vals = _pmap(_corner_point, items, jobs)
    rows = [CornerRow(corner=c.value, temperature_c=t, e_tree=v[0], e_soma=v[1],
                      outputs=v[2], outputs_ok=v[3])
            for (c, t), v in zip(grid, vals)]
    return CornerTable(rows=rows)


@dataclass
class SavingsReport:
    """Adiabatic versus level-driven energy at a matched operating point."""

    mode: str                       # "sweep" or "loading"
    f_hz: float
    duty: float
    adiabatic: dict[str, float]    # per-cycle means, joules
    baseline: dict[str, float]
    savings: float                  # 1 - adiabatic tree / baseline tree
    loading: list[dict] | None = None
    adiabatic_ratio: float | None = None
    baseline_ratio: float | None = None

    def as_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        d = {
            "mode": self.mode, "f_Hz": self.f_hz, "duty": self.duty,
            "adiabatic_J": {k: clean(v) for k, v in self.adiabatic.items()},
            "baseline_J": {k: clean(v) for k, v in self.baseline.items()},
            "savings": clean(self.savings),
        }
        if self.loading is not None:
            d["loading"] = [{k: clean(v) for k, v in row.items()} for row in self.loading]
            d["adiabatic_ratio"] = clean(self.adiabatic_ratio)
            d["baseline_ratio"] = clean(self.baseline_ratio)
        return d


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf if num > 0 else math.nan
    return num / den


def compare_designs(
    cfg: CircuitConfig,
    mode: str = "sweep",
    spec: SweepSpec | None = None,
    r_drv: float = 1e3,
    alphas: tuple[float, float] = (0.0, 1.0),
) -> SavingsReport:
    """Energy comparison of the two designs on matched trees.

    sweep mode: both designs run the identical five input orders and the
    report carries per-component per-cycle means.  The adiabatic side is
    retuned and driven at the stream's lock frequency with the top-up
    window width held; the level-driven side has no resonator and keeps
    the nominal clock.  loading mode: each loading level runs at its own
    optimal frequency on the adiabatic side and as an alternating
    present/clear pulse train on the level-driven side, for large trees
    where a full code sweep is meaningless.
    """
    spec = spec or SweepSpec()
    if mode == "sweep":
        orders = input_sweeps(cfg.tree.n, seed=spec.seed)
        codes = [c for order in orders for c in order]
        tuned = tune_inductor(cfg)
        f_op = sweep_lock_frequency(tuned, codes)
        run_cfg = replace(tuned, pc=replace(
            tuned.pc, f_nominal=f_op, duty_d=tuned.pc.t_on * f_op))
        run_a = run_neuron(run_cfg, codes)
        run_b = run_baseline(BaselineConfig.from_circuit(cfg, r_drv=r_drv), codes)
        la, lb = run_a.ledger, run_b.ledger
        adia = {
            "tree": float(la.s_e.mean()),
            "clock_generator": float(la.r_pc.mean()),
            "gates": float(la.r_tg.mean()),
            "reset": float(la.r_reset.mean()),
            "drive": float(la.drive.mean()),
            "soma": float(la.soma.mean()),
        }
        base = {
            "tree": float(lb.s_e.mean()),
            "drive_resistor": float(lb.r_tg.mean()),
            "reset": float(lb.r_reset.mean()),
            "drive": float(lb.drive.mean()),
            "soma": float(lb.soma.mean()),
        }
        return SavingsReport(
            mode="sweep", f_hz=run_cfg.pc.f_nominal, duty=run_cfg.pc.duty_d,
            adiabatic=adia, baseline=base,
            savings=1.0 - _ratio(adia["tree"], base["tree"]),
        )
    if mode != "loading":
        raise ValueError(f"mode: must be 'sweep' or 'loading', got {mode!r}")

    n = cfg.tree.n
    rows = []
    for alpha in alphas:
        opt = optimize_frequency(cfg, alpha, spec=spec)
        code = _const_codes(n, alpha, 1)[0]
        zero = tuple(0 for _ in range(n))
        b_cfg = BaselineConfig.from_circuit(cfg, r_drv=r_drv)
        run_b = run_baseline(b_cfg, [code, zero] * max(spec.repeats, 2))
        rows.append({
            "alpha": alpha,
            "f_opt_Hz": opt.frequency,
            "adiabatic_tree_J": opt.energy,
            "baseline_tree_J": float(run_b.ledger.s_e.mean()),
        })
    lo, hi = rows[0], rows[-1]
    adia = {"tree": hi["adiabatic_tree_J"]}
    base = {"tree": hi["baseline_tree_J"]}
    return SavingsReport(
        mode="loading", f_hz=hi["f_opt_Hz"], duty=cfg.pc.duty_d,
        adiabatic=adia, baseline=base,
        savings=1.0 - _ratio(adia["tree"], base["tree"]),
        loading=rows,
        adiabatic_ratio=_ratio(hi["adiabatic_tree_J"], lo["adiabatic_tree_J"]),
        baseline_ratio=_ratio(hi["baseline_tree_J"], lo["baseline_tree_J"]),
    )
