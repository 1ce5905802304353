"""Direct and indirect qubit collision models.

Both engines evolve the optimal pair (|+>, |->) side by side against the
same thermal ancillas. The carried register holds the system (plus the
intermediate qubit in the indirect model) and the most recent ancilla;
every step appends a fresh ancilla, applies the collision sequence, and
traces out the ancilla that will never interact again.

Direct step, register (S, R_n, R_n+1):     U_J(0,1) then V_Omega(1,2), trace 1.
Indirect step, register (S, S', R_n, R_n+1): U_kappa(0,1), U_J(1,2), V_Omega(2,3), trace 2.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .core import (
    MAX_QUBITS,
    DensityMatrix,
    _amps,
    apply_two_qubit_amps,
    conjugate_amps,
    embed_two_qubit,
    ptrace_amps,
    reduce_amps,
    state_defects,
    tensor_amps,
)
from .errors import CapacityError, IntegrityError
from .gates import ThermalSpec, check_strength, optimal_pair, partial_swap_amps, thermal_state
from .measures import coherence, trace_distance


@dataclass(frozen=True)
class StopPolicy:
    """Run until D and |dD| stay below ``eps_settle`` for ``settle_window`` steps."""

    n_max: int = 3000
    eps_settle: float = 1e-7
    settle_window: int = 50

    def __post_init__(self):
        if not self.settle_window >= 1:
            raise ValueError("settle_window must be >= 1")
        if not self.n_max >= self.settle_window:
            raise ValueError("n_max must be >= settle_window")
        if not self.eps_settle > 0:
            raise ValueError("eps_settle must be > 0")


@dataclass(frozen=True)
class DirectConfig:
    J: float = 0.3
    Omega: float = 0.0
    thermal: ThermalSpec = ThermalSpec()
    stop: StopPolicy = StopPolicy()

    kind = "direct"

    def __post_init__(self):
        check_strength(self.J, "J")
        check_strength(self.Omega, "Omega")


@dataclass(frozen=True)
class IndirectConfig:
    kappa: float = 0.3
    J: float = 0.3
    Omega: float = 0.0
    thermal: ThermalSpec = ThermalSpec()
    stop: StopPolicy = StopPolicy()

    kind = "indirect"

    def __post_init__(self):
        check_strength(self.kappa, "kappa")
        check_strength(self.J, "J")
        check_strength(self.Omega, "Omega")


Config = Union[DirectConfig, IndirectConfig]


def with_param(cfg: Config, name: str, value: float) -> Config:
    """Copy of ``cfg`` with one of J, Omega, kappa, T or omega_ratio replaced."""
    if name in ("T", "omega_ratio"):
        return dataclasses.replace(cfg, thermal=dataclasses.replace(cfg.thermal, **{name: value}))
    if name == "kappa" and not isinstance(cfg, IndirectConfig):
        raise ValueError("kappa only exists in the indirect model")
    if name not in ("J", "Omega", "kappa"):
        raise ValueError(f"unknown parameter {name!r}")
    return dataclasses.replace(cfg, **{name: value})


@dataclass(frozen=True)
class StepRecord:
    n: int
    D: float
    dD: float
    C_S: float
    C_R: float
    pop_S: float


@dataclass(frozen=True)
class Trajectory:
    """Per-step records starting with the pre-collision record at n = 0.

    ``n_steps_run`` counts collisions, so ``len(records) == n_steps_run + 1``.
    """

    config: Config
    records: tuple[StepRecord, ...]
    converged: bool
    n_steps_run: int

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def D(self) -> np.ndarray:
        return self.column("D")


# ---------------------------------------------------------------------------
# engine internals


def _geometry(cfg: Config) -> tuple[int, int, int]:
    """(qubits in the working register, qubit to trace, new-ancilla qubit after tracing)."""
    if isinstance(cfg, IndirectConfig):
        return 4, 2, 2
    return 3, 1, 1


@lru_cache(maxsize=256)
def _step_unitary(kind: str, J: float, Omega: float, kappa: float) -> np.ndarray:
    sr = partial_swap_amps(J)
    rr = partial_swap_amps(Omega)
    if kind == "direct":
        w = embed_two_qubit(rr, 3, 1, 2).amps @ embed_two_qubit(sr, 3, 0, 1).amps
    else:
        ss = partial_swap_amps(kappa)
        w = (embed_two_qubit(rr, 4, 2, 3).amps
             @ embed_two_qubit(sr, 4, 1, 2).amps
             @ embed_two_qubit(ss, 4, 0, 1).amps)
    w.flags.writeable = False
    return w


def _unitary_for(cfg: Config) -> np.ndarray:
    return _step_unitary(cfg.kind, cfg.J, cfg.Omega, getattr(cfg, "kappa", 0.0))


def _collide(stack: np.ndarray, fresh: np.ndarray, w: np.ndarray, k: int, drop: int,
             n: int) -> np.ndarray:
    """One collision round on a stack of carried states; returns the new stack."""
    big = conjugate_amps(tensor_amps(stack, fresh), w)
    out = ptrace_amps(big, k, drop)
    problems = state_defects(out)
    if problems:
        raise IntegrityError("; ".join(problems), step=n)
    return out


def _system_states(stack: np.ndarray, k_carried: int) -> np.ndarray:
    return reduce_amps(stack, k_carried, [0])


def _observe(stack: np.ndarray, k_carried: int, r_qubit: int, n: int,
             prev_D: float) -> StepRecord:
    s = _system_states(stack, k_carried)
    r = reduce_amps(stack[0], k_carried, [r_qubit])
    D = trace_distance(s[0], s[1])
    return StepRecord(
        n=n,
        D=D,
        dD=D - prev_D,
        C_S=coherence(s[0]),
        C_R=coherence(r),
        pop_S=float(s[0][1, 1].real),
    )


def _initial_record(rho_s: np.ndarray, fresh: np.ndarray) -> StepRecord:
    plus, minus = (p.amps for p in optimal_pair())
    return StepRecord(n=0, D=trace_distance(plus, minus), dD=0.0, C_S=coherence(plus),
                      C_R=coherence(fresh), pop_S=float(rho_s[1, 1].real))


def _step(pair_state, fresh, cfg: Config, k: int, drop: int, r_qubit: int, n: int):
    a, b = (_amps(x) for x in pair_state)
    if a.shape != (2 ** (k - 1),) * 2 or b.shape != a.shape:
        raise ValueError(f"expected {2 ** (k - 1)}x{2 ** (k - 1)} pair states, got {a.shape}, {b.shape}")
    stack = np.stack([a, b])
    s_in = _system_states(stack, k - 1)
    prev_D = trace_distance(s_in[0], s_in[1])
    out = _collide(stack, _amps(fresh), _unitary_for(cfg), k, drop, n)
    rec = _observe(out, k - 1, r_qubit, n, prev_D)
    return DensityMatrix(out[0], check=False), DensityMatrix(out[1], check=False), rec


# ---------------------------------------------------------------------------
# public engines


def step_direct(pair_state, fresh, cfg: DirectConfig, n: int = 1):
    """Advance both (S, R_n) states by one collision round of the direct model.

    Returns the two (S, R_n+1) states and the record of step ``n``; ``dD`` is
    measured against the distance of the input pair.
    """
    return _step(pair_state, fresh, cfg, 3, 1, 1, n)


def step_indirect(pair_state, fresh, cfg: IndirectConfig, n: int = 1):
    """Advance both (S, S', R_n) states by one collision round of the indirect model."""
    return _step(pair_state, fresh, cfg, 4, 2, 2, n)


def initial_pair(cfg: Config) -> tuple[np.ndarray, np.ndarray]:
    """Carried-register states before the first collision: S (x S') x R_1."""
    fresh = thermal_state(cfg.thermal).amps
    out = []
    for s in optimal_pair():
        rho = s.amps
        if isinstance(cfg, IndirectConfig):
            rho = tensor_amps(rho, fresh)
        out.append(tensor_amps(rho, fresh))
    return out[0], out[1]


def run_model(cfg: Config) -> Trajectory:
    """Evolve the optimal pair until the trace distance settles or ``n_max`` is hit."""
    k, drop, r_qubit = _geometry(cfg)
    fresh = thermal_state(cfg.thermal).amps
    w = _unitary_for(cfg)
    stop = cfg.stop
    a, b = initial_pair(cfg)
    stack = np.stack([a, b])

    records = [_initial_record(reduce_amps(a, k - 1, [0]), fresh)]
    quiet = 0
    converged = False
    n = 0
    while n < stop.n_max:
        n += 1
        stack = _collide(stack, fresh, w, k, drop, n)
        rec = _observe(stack, k - 1, r_qubit, n, records[-1].D)
        records.append(rec)
        if rec.D < stop.eps_settle and abs(rec.dD) < stop.eps_settle:
            quiet += 1
            if quiet >= stop.settle_window:
                converged = True
                break
        else:
            quiet = 0
    return Trajectory(config=cfg, records=tuple(records), converged=converged, n_steps_run=n)


def full_chain_oracle(cfg: Config, n_collisions: int) -> Trajectory:
    """Brute-force reference: keep S (and S') plus every ancilla, never trace mid-run.

    Each ancilla is discarded by the iterative engine only after its last
    interaction, so observables computed here must agree with ``run_model``.
    """
    n_collisions = int(n_collisions)
    if not 1 <= n_collisions <= 8:
        raise ValueError("n_collisions must be between 1 and 8")
    indirect = isinstance(cfg, IndirectConfig)
    head = 2 if indirect else 1
    k = head + n_collisions + 1
    if k > MAX_QUBITS:
        raise CapacityError(f"{n_collisions} collisions need {k} qubits (cap {MAX_QUBITS})")

    fresh = thermal_state(cfg.thermal).amps
    sr = partial_swap_amps(cfg.J)
    rr = partial_swap_amps(cfg.Omega)
    ss = partial_swap_amps(cfg.kappa) if indirect else None

    joint = []
    for s in optimal_pair():
        rho = s.amps
        for _ in range(k - 1):
            rho = np.kron(rho, fresh)
        joint.append(rho)

    records = [_initial_record(optimal_pair()[0].amps, fresh)]
    for n in range(1, n_collisions + 1):
        r_n = head + n - 1
        for m in range(2):
            rho = joint[m]
            if indirect:
                rho = apply_two_qubit_amps(rho, ss, k, 0, 1)
                rho = apply_two_qubit_amps(rho, sr, k, 1, r_n)
            else:
                rho = apply_two_qubit_amps(rho, sr, k, 0, r_n)
            rho = apply_two_qubit_amps(rho, rr, k, r_n, r_n + 1)
            joint[m] = rho
        s1 = reduce_amps(joint[0], k, [0])
        s2 = reduce_amps(joint[1], k, [0])
        r = reduce_amps(joint[0], k, [r_n + 1])
        D = trace_distance(s1, s2)
        records.append(StepRecord(n=n, D=D, dD=D - records[-1].D, C_S=coherence(s1),
                                  C_R=coherence(r), pop_S=float(s1[1, 1].real)))
    return Trajectory(config=cfg, records=tuple(records), converged=False,
                      n_steps_run=n_collisions)
