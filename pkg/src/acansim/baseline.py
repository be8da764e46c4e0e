"""Conventional (non-adiabatic) counterpart of the capacitive synapse tree.

Each synapse top plate is driven rail-to-rail by an inverter through a
drive resistance, so energy is spent only when an input bit changes
level.  The membrane node keeps the same divider, parasitics and reset
switch as the adiabatic design, which makes per-component comparisons
meaningful.

Runs reuse the shared per-cycle stats and ledger types; the drive-resistor
loss is booked in the tree-resistor slot and the clock-generator slot
stays zero (there is no power clock here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import CycleStats, EnergyLedger, propagate, _trapz
from .model import (
    CircuitConfig,
    DlccConfig,
    Environment,
    NeuronSpec,
    SynapseTreeConfig,
    reset_resistance,
)
from .neuron import Code, NeuronRun, dlcc_decide, dlcc_offset


@dataclass(frozen=True)
class BaselineConfig:
    """Inverter-driven synapse tree plus the shared decision stage."""

    tree: SynapseTreeConfig = field(default_factory=SynapseTreeConfig)
    dlcc: DlccConfig = field(default_factory=DlccConfig)
    env: Environment = field(default_factory=Environment)
    r_drv: float = 1e3        # inverter drive resistance, Ohm
    v_dd: float = 1.8         # inverter rail, V
    f_clock: float = 1e6      # input code rate, Hz
    steps_per_cycle: int = 4096

    def __post_init__(self) -> None:
        if self.r_drv <= 0:
            raise ValueError(f"baseline.r_drv: must be > 0, got {self.r_drv}")
        if self.v_dd <= 0:
            raise ValueError(f"baseline.v_dd: must be > 0, got {self.v_dd}")
        if self.f_clock <= 0:
            raise ValueError(f"baseline.f_clock: must be > 0, got {self.f_clock}")
        if self.steps_per_cycle < 256:
            raise ValueError("baseline.steps_per_cycle: must be >= 256")

    @classmethod
    def from_circuit(cls, cfg: CircuitConfig, r_drv: float = 1e3) -> "BaselineConfig":
        """Matched baseline: same tree, decision stage and code rate."""
        return cls(
            tree=cfg.tree, dlcc=cfg.dlcc, env=cfg.env,
            r_drv=r_drv, v_dd=cfg.dlcc.v_dd, f_clock=cfg.pc.f_nominal,
            steps_per_cycle=cfg.sim.steps_per_cycle,
        )


def baseline_transition_energy_analytic(
    tree: SynapseTreeConfig,
    code_from: Sequence[int],
    code_to: Sequence[int],
    v_dd: float,
) -> float:
    """Supply energy drawn through the rising drivers for one transition.

    Charge conservation on the floating membrane gives the membrane step
    exactly, hence the charge pulled from the rail by every 0->1 branch;
    the result is independent of the drive resistance.
    """
    a = [int(bool(x)) for x in code_from]
    b = [int(bool(x)) for x in code_to]
    if len(a) != tree.n or len(b) != tree.n:
        raise ValueError(f"codes must have {tree.n} bits")
    c_tot = sum(tree.c_s) + tree.c_d + tree.c_par
    dv_m = v_dd * sum(c * (y - x) for c, x, y in zip(tree.c_s, a, b)) / c_tot
    q = sum(c * (v_dd - dv_m) for c, x, y in zip(tree.c_s, a, b) if x == 0 and y == 1)
    return v_dd * q


def baseline_oracle_spec(cfg: BaselineConfig, v_os: float = 0.0) -> NeuronSpec:
    """Threshold-unit equivalent of the level-driven tree.

    Every plate is always driven, so the divider denominator is the whole
    tree and the firing rule is exactly linear in the code bits.
    """
    tree = cfg.tree
    dv = cfg.dlcc.v_th - v_os - tree.v_ref
    c_tot = sum(tree.c_s) + tree.c_d + tree.c_par
    return NeuronSpec(
        weights=tuple(c * cfg.v_dd for c in tree.c_s),
        theta=dv * c_tot,
    )


def _groups_for(tree: SynapseTreeConfig, prev_code: Code, code: Code) -> list[tuple[int, int, float, int]]:
    """Branches lumped by (previous level, new level, weight value)."""
    keys: dict[tuple[int, int, float], int] = {}
    for c, p, n in zip(tree.c_s, prev_code, code):
        k = (p, n, c)
        keys[k] = keys.get(k, 0) + 1
    return [(p, n, c, cnt) for (p, n, c), cnt in sorted(keys.items())]


def _maps(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(a.shape[0])
    lhs = eye - 0.5 * dt * a
    e = np.linalg.solve(lhs, eye + 0.5 * dt * a)
    f = np.linalg.solve(lhs, dt * b)
    return e, f


def run_baseline(cfg: BaselineConfig, codes: Sequence[Sequence[int]]) -> NeuronRun:
    """Level-driven transient: one code per cycle, switching only the bits
    that change between consecutive codes.  The membrane resets to V_REF
    on all-zero codes, as in the adiabatic design."""
    tree = cfg.tree
    codes = [tuple(int(bool(x)) for x in c) for c in codes]
    for c in codes:
        if len(c) != tree.n:
            raise ValueError(f"codes must have {tree.n} bits")
    n_cycles = len(codes)
    if n_cycles == 0:
        raise ValueError("run_baseline: need at least one code")

    t_cycle = 1.0 / cfg.f_clock
    spc = cfg.steps_per_cycle
    c_mb = tree.c_d + tree.c_par
    g_reset_val = 1.0 / reset_resistance(tree, cfg.env)
    e_toggle = 0.5 * tree.c_inv * cfg.v_dd ** 2

    prev_code: Code = tuple(0 for _ in range(tree.n))
    v_m = tree.v_ref

    led = {name: np.zeros(n_cycles) for name in
           ("source_dc", "source_ref", "r_tg", "r_reset", "drive", "reconfig")}
    stats: list[CycleStats] = []
    e_stored_first = math.nan

    def stored(groups, values, vm) -> float:
        e = 0.5 * c_mb * vm ** 2
        for (p, n, cval, cnt), vt in zip(groups, values):
            e += 0.5 * cnt * cval * (vt - vm) ** 2
        return e

    prev_groups: list[tuple[int, int, float, int]] = []
    prev_values: list[float] = []

    for k, code in enumerate(codes):
        groups = _groups_for(tree, prev_code, code)
        reset_on = not any(code)
        g_reset = g_reset_val if reset_on else 0.0

        # plates start the cycle at the rail they were driven to last cycle
        values = [p * cfg.v_dd for (p, n, cval, cnt) in groups]
        e_after = stored(groups, values, v_m)
        e_before = stored(prev_groups, prev_values, v_m) if k > 0 else e_after
        if k == 0:
            e_stored_first = e_after
        led["reconfig"][k] = e_after - e_before

        led["drive"][k] = e_toggle * sum(1 for p, n in zip(prev_code, code) if p != n)

        # phase system over [V_t per group..., V_m]
        n_g = len(groups)
        dim = n_g + 1
        a = np.zeros((dim, dim))
        b = np.zeros(dim)
        im = dim - 1
        a[im, im] = -g_reset / c_mb
        b[im] = g_reset * tree.v_ref / c_mb
        r_g = []
        u_g = []
        for j, (p, n, cval, cnt) in enumerate(groups):
            r = cfg.r_drv / cnt
            u = n * cfg.v_dd
            r_g.append(r)
            u_g.append(u)
            a[im, j] -= (1.0 / r) / c_mb
            b[im] += (u / r) / c_mb
        for j, (p, n, cval, cnt) in enumerate(groups):
            cg = cnt * cval
            a[j, :] = a[im, :]
            b[j] = b[im]
            a[j, j] -= 1.0 / (r_g[j] * cg)
            b[j] += u_g[j] / (r_g[j] * cg)

        x0 = np.array([*values, v_m])

        # two sub-grids: dense over the switching transient, coarse after.
        # The slowest settling mode comes straight from the system matrix,
        # so the dense window tracks the actual transient at any tree size.
        # With the reset open the membrane-charge mode sits at exactly zero
        # rate; it never settles and must not widen the dense window.
        rates = np.linalg.eigvals(a).real
        taus = [1.0 / -r for r in rates if r < 0.0 and -r * t_cycle >= 1.0]
        t_fine = 60.0 * max(taus) if taus else t_cycle
        if t_fine >= 0.5 * t_cycle:
            plan = [(t_cycle, spc)]
        else:
            n_fine = (3 * spc) // 4
            plan = [(t_fine, n_fine), (t_cycle - t_fine, spc - n_fine)]

        e_drv = 0.0
        e_reset = 0.0
        e_src_ref = 0.0
        v_m_sample = math.nan
        v_m_peak = -math.inf
        t_pos = 0.0
        x = x0
        for dur, n_steps in plan:
            dt = dur / n_steps
            e_map, f_map = _maps(a, b, dt)
            xs = propagate(e_map, f_map, x, n_steps)
            col_vm = xs[:, im]
            v_m_peak = max(v_m_peak, float(col_vm.max()))
            for j in range(n_g):
                dv = u_g[j] - xs[:, j]
                e_drv += (1.0 / r_g[j]) * _trapz(dv ** 2, dt)
            if g_reset > 0.0:
                dvm = col_vm - tree.v_ref
                e_reset += g_reset * _trapz(dvm ** 2, dt)
                e_src_ref += g_reset * tree.v_ref * _trapz(-dvm, dt)
            t_half = 0.5 * t_cycle
            if t_pos <= t_half <= t_pos + dur:
                idx = min(max(int(round((t_half - t_pos) / dt)), 0), n_steps)
                v_m_sample = float(xs[idx, im])
            t_pos += dur
            x = xs[-1]

        # exact supply charge from endpoint states: the rail only feeds
        # branches whose driver sits high this cycle
        e_supply = 0.0
        for j, (p, n, cval, cnt) in enumerate(groups):
            if n == 1:
                cg = cnt * cval
                q = cg * ((x[j] - x[im]) - (x0[j] - x0[im]))
                e_supply += cfg.v_dd * q

        led["source_dc"][k] = e_supply
        led["source_ref"][k] = e_src_ref
        led["r_tg"][k] = e_drv
        led["r_reset"][k] = e_reset

        v_m = float(x[im])
        prev_values = [float(v) for v in x[:im]]
        prev_groups = groups
        prev_code = code
        stats.append(CycleStats(
            cycle=k, v_pk=cfg.v_dd, v_x=0.0,
            v_m_peak=v_m_peak, v_m_sample=v_m_sample,
            e_source=e_supply, e_r_pc=0.0, e_r_lc=0.0, e_r_tg=e_drv,
            e_r_reset=e_reset, e_drive=led["drive"][k],
            e_reconfig=led["reconfig"][k],
        ))

    ledger = EnergyLedger(
        source_dc=led["source_dc"], source_ref=led["source_ref"],
        r_pc=np.zeros(n_cycles), r_lc=np.zeros(n_cycles),
        r_tg=led["r_tg"], r_reset=led["r_reset"],
        drive=led["drive"], reconfig=led["reconfig"],
        soma=np.full(n_cycles, cfg.dlcc.e_decision),
        e_stored_first=e_stored_first,
        e_stored_last=stored(prev_groups, prev_values, v_m),
    )

    v_os = dlcc_offset(cfg.dlcc.m_l, cfg.dlcc.m_r)
    decisions = [dlcc_decide(s.v_m_sample, cfg.dlcc) for s in stats]
    spec = baseline_oracle_spec(cfg, v_os=v_os)
    oracle = [spec.fires(c) for c in codes]

    return NeuronRun(
        codes=codes, decisions=decisions, oracle_bits=oracle,
        stats=stats, ledger=ledger, ledger_full=ledger,
        trace=None, v_pk_reference=cfg.v_dd,
    )
