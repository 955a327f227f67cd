"""Shot execution, position decoding, and the distance/Zeno experiment harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import DESIGNS, Circuit, WalkConfig, build_circuit
from .noise import NoiseModel, apply_readout_noise, noisy_apply
from .sim import GateOp, MeasurementRecord, StateVector

RANDOM_JUMP_CIRCUITS = 30
RANDOM_JUMP_SHOTS = 30

_X_OPS_CACHE: dict[int, GateOp] = {}


def derive_seed(*parts: int) -> int:
    """Stable, order-sensitive child seed from integer parts."""
    entropy = [int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


@dataclass(frozen=True)
class ZenoSchedule:
    """Mid-circuit measurement cadence: period 0 never fires, k fires every k steps."""

    period: int = 0

    def __post_init__(self):
        if self.period < 0:
            raise ValueError(f"period must be nonnegative, got {self.period}")


@dataclass
class ShotHistogram:
    """Counts of decoded positions. Totals may be fractional for derived histograms."""

    counts: dict[int, float]
    total_shots: float

    @classmethod
    def from_positions(cls, positions: np.ndarray) -> "ShotHistogram":
        values, counts = np.unique(np.asarray(positions, dtype=np.int64), return_counts=True)
        return cls({int(v): int(c) for v, c in zip(values, counts)}, int(len(positions)))

    def frequencies(self) -> dict[int, float]:
        return {p: c / self.total_shots for p, c in sorted(self.counts.items())}

    def mean(self) -> float:
        return sum(p * c for p, c in self.counts.items()) / self.total_shots

    def variance(self) -> float:
        m = self.mean()
        return sum((p - m) ** 2 * c for p, c in self.counts.items()) / self.total_shots

    def sample_std(self) -> float:
        n = self.total_shots
        if n <= 1:
            return 0.0
        return math.sqrt(self.variance() * n / (n - 1))

    def stderr(self) -> float:
        return self.sample_std() / math.sqrt(self.total_shots)


def decode(bits: str, counter: range) -> int:
    """Counter value of a qubit-0-first bitstring: sum of 2^k over set counter bits."""
    window = bits[counter.start : counter.stop]
    return int(window[::-1], 2)


def _decode_index(index: int, counter: range) -> int:
    return (index >> counter.start) & ((1 << len(counter)) - 1)


def _fire_offsets(circuit: Circuit, schedule: ZenoSchedule | None) -> list[int]:
    if schedule is None or schedule.period <= 0:
        return []
    return [
        mark
        for step, mark in enumerate(circuit.steps_marks, start=1)
        if step % schedule.period == 0
    ]


def _x_op(q: int) -> GateOp:
    op = _X_OPS_CACHE.get(q)
    if op is None:
        op = _X_OPS_CACHE[q] = GateOp.x(q)
    return op


def run_single_shot(
    circuit: Circuit,
    seed: int,
    noise: NoiseModel | None = None,
    schedule: ZenoSchedule | None = None,
) -> tuple[str, list[MeasurementRecord]]:
    """One full trajectory: returns the final bitstring and mid-circuit records."""
    rng = np.random.default_rng(seed)
    state = StateVector(circuit.n_qubits)
    records: list[MeasurementRecord] = []
    fires = _fire_offsets(circuit, schedule)
    fi = 0
    for j, op in enumerate(circuit.ops):
        while fi < len(fires) and fires[fi] == j:
            for q in circuit.counter:
                state.measure_qubit(q, rng)
            fi += 1
        kind = op.kind
        if kind == "MEASURE":
            outcome = state.measure_qubit(op.targets[0], rng)
            records.append(MeasurementRecord(op.classical_slot, op.targets[0], outcome))
        elif kind == "RESET":
            if noise is None:
                state.reset_qubit(op.targets[0], rng)
            elif state.measure_qubit(op.targets[0], rng) == 1:
                noisy_apply(state, _x_op(op.targets[0]), noise, rng)
        elif noise is None:
            state.apply_gate(op)
        else:
            noisy_apply(state, op, noise, rng)
    while fi < len(fires):
        for q in circuit.counter:
            state.measure_qubit(q, rng)
        fi += 1
    bits = state.measure_all(rng)
    if noise is not None:
        bits = apply_readout_noise(bits, noise, rng)
    return bits, records


def run_positions(
    circuit: Circuit,
    shots: int,
    noise: NoiseModel | None = None,
    schedule: ZenoSchedule | None = None,
    base_seed: int = 0,
) -> np.ndarray:
    """Decoded counter value per shot; shot i uses seed ``base_seed + i``.

    Deterministic circuits (no noise, no mid-circuit measurement or reset)
    are evolved once and sampled per shot from the final distribution, which
    is exactly what per-shot evolution would produce.
    """
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    fires = _fire_offsets(circuit, schedule)
    branching = bool(fires) or any(not op.is_unitary for op in circuit.ops)
    out = np.empty(shots, dtype=np.int64)
    if noise is None and not branching:
        state = StateVector(circuit.n_qubits)
        for op in circuit.ops:
            state.apply_gate(op)
        cdf = np.cumsum(state.probabilities())
        top = len(cdf) - 1
        total = cdf[-1]
        for i in range(shots):
            rng = np.random.default_rng(base_seed + i)
            idx = int(np.searchsorted(cdf, rng.random() * total, side="right"))
            out[i] = _decode_index(min(idx, top), circuit.counter)
        return out
    for i in range(shots):
        bits, _ = run_single_shot(circuit, base_seed + i, noise=noise, schedule=schedule)
        out[i] = decode(bits, circuit.counter)
    return out


def run_shots(
    circuit: Circuit,
    shots: int,
    noise: NoiseModel | None = None,
    schedule: ZenoSchedule | None = None,
    base_seed: int = 0,
) -> ShotHistogram:
    """Histogram of decoded counter values over ``shots`` trajectories."""
    return ShotHistogram.from_positions(
        run_positions(circuit, shots, noise=noise, schedule=schedule, base_seed=base_seed)
    )


def arc_expected(width: int, steps: int, base_angle: float) -> float:
    """Closed-form mean of the arc counter: sum of 2^k sin^2(steps * theta_k / 2)."""
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    return sum(
        2**k * math.sin(steps * (base_angle / 2**k) / 2.0) ** 2 for k in range(width)
    )


def two_way_distribution(up: ShotHistogram, down: ShotHistogram) -> ShotHistogram:
    """Signed-position distribution of (up position - down position).

    Exact discrete cross-correlation of the two frequency tables; no
    resampling. The result's total is the product of the input totals, so
    its frequencies are exactly the products of the input frequencies.
    """
    if not up.counts or not down.counts:
        raise ValueError("two-way distribution needs nonempty histograms")
    counts: dict[int, float] = {}
    for u, cu in up.counts.items():
        for d, cd in down.counts.items():
            key = u - d
            counts[key] = counts.get(key, 0) + cu * cd
    return ShotHistogram(counts, up.total_shots * down.total_shots)


@dataclass(frozen=True)
class DistanceCell:
    mean: float
    stderr: float
    shots: int


@dataclass
class DistanceTable:
    """Mean decoded distance per design and step count, rows indexed 0..max_steps."""

    designs: list[str]
    rows: list[tuple[int, dict[str, DistanceCell]]]

    def column(self, design: str) -> list[float]:
        return [cells[design].mean for _, cells in self.rows]

    def long_rows(self) -> list[tuple[int, str, float, float, int]]:
        return [
            (steps, design, cell.mean, cell.stderr, cell.shots)
            for steps, cells in self.rows
            for design, cell in ((d, cells[d]) for d in self.designs)
        ]


def _positions_for(
    design: str,
    design_index: int,
    steps: int,
    width: int,
    shots: int,
    noise: NoiseModel | None,
    base_angle: float,
    seed: int,
    noisy_cascading: bool,
    random_circuits: int,
    random_shots: int,
) -> np.ndarray:
    noise_eff = noise
    if design == "random_jump_cascading" and noise is not None and not noisy_cascading:
        noise_eff = None
    if design in ("random_jump", "random_jump_cascading"):
        chunks = []
        for c in range(random_circuits):
            cfg = WalkConfig(
                width,
                steps,
                design=design,
                base_angle=base_angle,
                seed=derive_seed(seed, design_index, steps, c, 0),
            )
            chunks.append(
                run_positions(
                    build_circuit(cfg),
                    random_shots,
                    noise=noise_eff,
                    base_seed=derive_seed(seed, design_index, steps, c, 1),
                )
            )
        return np.concatenate(chunks)
    cfg = WalkConfig(width, steps, design=design, base_angle=base_angle, seed=seed)
    return run_positions(
        build_circuit(cfg),
        shots,
        noise=noise_eff,
        base_seed=derive_seed(seed, design_index, steps),
    )


def distance_table(
    designs: list[str],
    max_steps: int,
    width: int,
    shots: int = 1000,
    noise: NoiseModel | None = None,
    base_angle: float = math.pi / 2,
    seed: int = 0,
    noisy_cascading: bool = False,
    random_circuits: int = RANDOM_JUMP_CIRCUITS,
    random_shots: int = RANDOM_JUMP_SHOTS,
) -> DistanceTable:
    """Mean decoded distance for each design at step counts 0..max_steps.

    Random-jump designs average ``random_circuits`` seeded circuits at
    ``random_shots`` shots each; other designs run ``shots`` shots of their
    single circuit. Cascading runs stay ideal under noise unless
    ``noisy_cascading`` is set (their resets then measure and noisily flip).
    """
    for design in designs:
        if design not in DESIGNS:
            raise ValueError(f"unknown design {design!r}; expected one of {DESIGNS}")
    if max_steps < 0:
        raise ValueError(f"max_steps must be nonnegative, got {max_steps}")
    rows = []
    for steps in range(max_steps + 1):
        cells = {}
        for di, design in enumerate(designs):
            pos = _positions_for(
                design, di, steps, width, shots, noise, base_angle, seed,
                noisy_cascading, random_circuits, random_shots,
            )
            n = len(pos)
            stderr = float(pos.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            cells[design] = DistanceCell(float(pos.mean()), stderr, n)
        rows.append((steps, cells))
    return DistanceTable(designs=list(designs), rows=rows)


def zeno_experiment(
    width: int,
    steps: int,
    base_angle: float,
    periods: list[int],
    shots: int = 2000,
    seed: int = 0,
) -> list[tuple[int, float]]:
    """Mean decoded arc-counter value under each mid-measurement period."""
    cfg = WalkConfig(width, steps, design="arc", base_angle=base_angle)
    circuit = build_circuit(cfg)
    out = []
    for idx, period in enumerate(periods):
        schedule = ZenoSchedule(int(period))
        hist = run_shots(
            circuit,
            shots,
            schedule=schedule,
            base_seed=derive_seed(seed, idx, schedule.period),
        )
        out.append((schedule.period, hist.mean()))
    return out


def single_qubit_zeno(theta: float, segments: int) -> float:
    """Probability a qubit rotated by 2*theta in measured segments never flips.

    Closed form: cos^2(theta/segments) ** segments.
    """
    if segments < 1:
        raise ValueError(f"segments must be positive, got {segments}")
    return (math.cos(theta / segments) ** 2) ** segments


def single_qubit_zeno_sampled(theta: float, segments: int, shots: int, seed: int = 0) -> float:
    """Monte Carlo cross-check of ``single_qubit_zeno`` via RX + measure sequences."""
    if segments < 1:
        raise ValueError(f"segments must be positive, got {segments}")
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    step = GateOp.rx(0, 2.0 * theta / segments)
    survived = 0
    for i in range(shots):
        rng = np.random.default_rng(seed + i)
        state = StateVector(1)
        for _ in range(segments):
            state.apply_gate(step)
            if state.measure_qubit(0, rng) == 1:
                break
        else:
            survived += 1
    return survived / shots


def walk_step_changes(
    design: str,
    width: int,
    max_steps: int,
    shots: int,
    base_angle: float = math.pi / 2,
    seed: int = 0,
) -> np.ndarray:
    """Per-shot position deltas between runs at consecutive step counts (ideal).

    Returns the concatenation over s of positions(s+1) - positions(s), with
    independent seeds per step count, for tail diagnostics on walk output.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be at least 1, got {max_steps}")
    per_step = []
    for s in range(max_steps + 1):
        cfg = WalkConfig(width, s, design=design, base_angle=base_angle, seed=derive_seed(seed, 0, s))
        per_step.append(
            run_positions(build_circuit(cfg), shots, base_seed=derive_seed(seed, 1, s))
        )
    deltas = [per_step[s + 1] - per_step[s] for s in range(max_steps)]
    return np.concatenate(deltas)


def histogram_json(hist: ShotHistogram) -> dict:
    """JSON-ready histogram: counts keyed by position in numeric order."""
    return {
        "total_shots": hist.total_shots,
        "counts": {str(p): hist.counts[p] for p in sorted(hist.counts)},
    }


def distance_long_csv(table: DistanceTable) -> str:
    """Long-form CSV: steps,design,mean,stderr,shots."""
    lines = ["steps,design,mean,stderr,shots"]
    for steps, design, mean, stderr, shots in table.long_rows():
        lines.append(f"{steps},{design},{mean!r},{stderr!r},{shots}")
    return "\n".join(lines) + "\n"
