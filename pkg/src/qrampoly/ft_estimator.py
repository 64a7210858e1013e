"""Logical-to-physical cost model: T counts, 15-to-1 distillation and surface-code footprint."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .circuit_ir import ResourceReport, ToffoliDecomp
from .qram_synth import stage_count

MAX_ROUNDS = 6
DISTILL_CONST = 35  # 15-to-1 output error ~ 35 p^3
LOGICAL_PER_UNIT = 16  # logical qubits of one 15-to-1 unit
FAN_IN = 15


class EstimateError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceParams:
    p_in: float = 1e-4
    p_g: float = 1e-5
    t_cycle: float = 200e-9
    threshold_const: float = 0.0125
    qubit_factor: float = 3.125
    cycles_per_d: int = 10
    distances: tuple[int, ...] | None = None  # explicit override, top round first

    def __post_init__(self):
        for name in ("p_in", "p_g", "t_cycle", "threshold_const", "qubit_factor", "cycles_per_d"):
            if not getattr(self, name) > 0:
                raise EstimateError(f"{name} must be positive")
        if self.distances is not None:
            object.__setattr__(self, "distances", tuple(int(d) for d in self.distances))
            if not self.distances or any(d < 1 for d in self.distances):
                raise EstimateError("distances must be positive")

    def is_default(self) -> bool:
        return replace(self, distances=None) == SurfaceParams()


PINNED_DISTANCES = (10, 5)


@dataclass(frozen=True)
class DistillationPlan:
    rounds: int
    distances: tuple[int, ...]  # top round (last, largest d) first
    rule: str = "pinned"

    def __post_init__(self):
        if self.rounds < 1 or len(self.distances) != self.rounds or any(d < 1 for d in self.distances):
            raise EstimateError("plan needs one positive distance per round")

    @property
    def logical_qubits(self) -> tuple[int, ...]:
        """Top-first: one unit on top, 15 units feeding each unit of the round above."""
        return tuple(LOGICAL_PER_UNIT * FAN_IN**i for i in range(self.rounds))


@dataclass(frozen=True)
class SurfaceReport:
    t_count: int
    t_depth: int
    p_out: float
    plan: DistillationPlan
    per_logical: tuple[float, ...]
    footprints: tuple[float, ...]
    sigmas: tuple[int, ...]
    sigma: int
    pipeline_ratio: float
    pipeline_factor: int
    magic_per_layer: int
    distillation_qubits: float
    clifford_count: int
    clifford_distance: int
    clifford_qubits: float
    logical_qubits: int
    total_qubits: float
    wall_time: float

    def to_dict(self) -> dict:
        d = {
            "t_count": self.t_count,
            "t_depth": self.t_depth,
            "p_out": self.p_out,
            "rounds": self.plan.rounds,
            "distances": list(self.plan.distances),
            "distance_rule": self.plan.rule,
        }
        for i, (lq, pl, fp, s) in enumerate(
            zip(self.plan.logical_qubits, self.per_logical, self.footprints, self.sigmas), 1
        ):
            d[f"logical_round_{i}"] = lq
            d[f"physical_per_logical_round_{i}"] = pl
            d[f"footprint_round_{i}"] = round(fp)
            d[f"sigma_round_{i}"] = s
        d.update(
            sigma=self.sigma,
            pipeline_ratio=self.pipeline_ratio,
            pipeline_factor=self.pipeline_factor,
            magic_per_layer=self.magic_per_layer,
            distillation_qubits=self.distillation_qubits,
            clifford_count=self.clifford_count,
            clifford_distance=self.clifford_distance,
            clifford_qubits=self.clifford_qubits,
            logical_qubits=self.logical_qubits,
            total_qubits=self.total_qubits,
            wall_time=self.wall_time,
        )
        return d


# ---------------------------------------------------------------- logical costs


def logical_costs(r: ResourceReport, d: ToffoliDecomp | None = None) -> tuple[int, int]:
    """(t_count, t_depth) of a report.

    Measured reports already carry both under their own policy; a different
    policy, or a formula report, is recharged from the pair structure:
    compute Toffolis cost ``t_cost`` each, uncompute members are free under
    the AND gadget, and each Toffoli stage costs ``t_depth_cost``.
    """
    d = d or ToffoliDecomp.and_gadget()
    if r.source == "measured" and r.decomp == d.policy.value and r.t_count is not None:
        return r.t_count, r.t_depth
    if r.toffoli_count is None or r.toffoli_pair_count is None or r.toffoli_depth is None:
        raise EstimateError("report lacks Toffoli count, pair count or depth")
    charged = r.toffoli_compute_count if d.free_uncompute else r.toffoli_count
    if d.free_uncompute:
        depth_stages = r.toffoli_compute_depth if r.toffoli_compute_depth is not None else r.toffoli_depth
    else:
        depth_stages = r.toffoli_depth
    return charged * d.t_cost, depth_stages * d.t_depth_cost


def qram_logical_costs(n: int, ell: int = 1, d: ToffoliDecomp | None = None) -> tuple[int, int]:
    """Closed form for the parallel read QRAM with parity readout, at any n.

    T-count charges 2^n - n - 1 compute Toffolis plus N*ell read Toffolis.
    T-depth counts ceil(log2 n) encode stages and the read stage; with
    charged uncompute every compute stage is paid twice.
    """
    d = d or ToffoliDecomp.and_gadget()
    N = 1 << n
    pairs = N - n - 1
    io = N * ell
    S = stage_count(n)
    if d.free_uncompute:
        return d.t_cost * (pairs + io), d.t_depth_cost * (S + 1)
    return d.t_cost * 2 * (pairs + io), d.t_depth_cost * 2 * (S + 1)


def required_pout(t_count: float) -> float:
    if t_count < 1:
        raise EstimateError("t_count must be >= 1")
    return 1.0 / t_count


# ---------------------------------------------------------------- distillation


def distill_rounds(p_in: float, p_out: float, cap: int = MAX_ROUNDS) -> int:
    """Smallest r >= 1 with 35^((3^r-1)/2) p_in^(3^r) < p_out (log-space to dodge underflow).

    At least one round is always planned, even when p_in already meets p_out.
    """
    if not 0 < p_out:
        raise EstimateError("p_out must be positive")
    target = math.log(p_out)
    for r in range(1, cap + 1):
        k = 3**r
        if (k - 1) / 2 * math.log(DISTILL_CONST) + k * math.log(p_in) < target:
            return r
    raise EstimateError(f"p_out={p_out:g} unreachable within {cap} rounds; raise the round cap")


def round_errors(p_in: float, rounds: int) -> list[float]:
    """Output error after each round, bottom first, by iterating 35 p^3."""
    errs, p = [], p_in
    for _ in range(rounds):
        p = DISTILL_CONST * p**3
        errs.append(p)
    return errs


def _distance_for(budget: float, p_g: float, threshold: float) -> int:
    for d in range(1, 200):
        if 192 * d * (p_g / threshold) ** ((d + 1) / 2) < budget:
            return d
    raise EstimateError(f"no distance below 200 meets budget {budget:g}")


def rule_distances(params: SurfaceParams, p_out: float, rounds: int) -> tuple[int, ...]:
    """Per-round distances, top first.

    The top round must keep its logical error under ``p_out``; each lower round
    only needs to be as good as the input error that, cubed by the round above,
    still lands under that round's budget.
    """
    budgets = [p_out]
    for _ in range(rounds - 1):
        budgets.append((budgets[-1] / DISTILL_CONST) ** (1 / 3))
    return tuple(_distance_for(b, params.p_g, params.threshold_const) for b in budgets)


def plan_distillation(params: SurfaceParams, p_out: float, *, use_rule: bool = False) -> DistillationPlan:
    rounds = distill_rounds(params.p_in, p_out)
    if params.distances is not None:
        if len(params.distances) != rounds:
            raise EstimateError(f"override gives {len(params.distances)} distances, plan needs {rounds}")
        return DistillationPlan(rounds, params.distances, "override")
    if not use_rule and params.is_default() and rounds == len(PINNED_DISTANCES):
        return DistillationPlan(rounds, PINNED_DISTANCES, "pinned")
    return DistillationPlan(rounds, rule_distances(params, p_out, rounds), "rule")


# ---------------------------------------------------------------- surface estimate


def clifford_distance(params: SurfaceParams, clifford_count: int) -> int:
    if clifford_count < 1:
        raise EstimateError("clifford_count must be >= 1")
    budget = 1 / clifford_count
    ratio = params.p_in / params.threshold_const
    for d in range(1, 500):
        if ratio ** ((d + 1) / 2) < budget:
            return d
    raise EstimateError("no Clifford distance below 500 meets the budget")


def surface_estimate(
    params: SurfaceParams,
    plan: DistillationPlan,
    t_count: int,
    t_depth: int,
    clifford_count: int,
    logical_qubits: int,
) -> SurfaceReport:
    if t_depth <= 0:
        raise EstimateError("t_depth must be positive")
    if t_count < 1 or logical_qubits < 1:
        raise EstimateError("t_count and logical_qubits must be positive")
    per_logical = tuple(params.qubit_factor * d * d for d in plan.distances)
    footprints = tuple(lq * pl for lq, pl in zip(plan.logical_qubits, per_logical))
    sigmas = tuple(params.cycles_per_d * d for d in plan.distances)
    sigma = sum(sigmas)
    bottom = footprints[-1]
    ratio = sigma * bottom / sum(s * f for s, f in zip(sigmas, footprints))
    factor = max(1, round(ratio))
    magic = math.ceil(t_count / t_depth)
    distill_q = magic / factor * bottom
    d_c = clifford_distance(params, clifford_count)
    cliff_q = 2 * logical_qubits * params.qubit_factor * d_c * d_c
    return SurfaceReport(
        t_count=t_count,
        t_depth=t_depth,
        p_out=required_pout(t_count),
        plan=plan,
        per_logical=per_logical,
        footprints=footprints,
        sigmas=sigmas,
        sigma=sigma,
        pipeline_ratio=ratio,
        pipeline_factor=factor,
        magic_per_layer=magic,
        distillation_qubits=distill_q,
        clifford_count=clifford_count,
        clifford_distance=d_c,
        clifford_qubits=cliff_q,
        logical_qubits=logical_qubits,
        total_qubits=distill_q + cliff_q,
        wall_time=t_depth * sigma * params.t_cycle,
    )


def walkthrough(n: int = 36, params: SurfaceParams | None = None, *, use_rule: bool = False) -> SurfaceReport:
    """Full estimate for the parallel read QRAM on n address bits, word size 1.

    Clifford count is bounded by 7N; the Clifford code protects 2^n logical
    qubits (doubled in the footprint for routing).
    """
    params = params or SurfaceParams()
    N = 1 << n
    t_count, t_depth = qram_logical_costs(n)
    plan = plan_distillation(params, required_pout(t_count), use_rule=use_rule)
    return surface_estimate(params, plan, t_count, t_depth, 7 * N, N)


# ---------------------------------------------------------------- comparisons


def rough_cost(logical_qubits: float, t_depth: float) -> float:
    if logical_qubits < 1 or t_depth < 1:
        raise EstimateError("rough cost needs logical_qubits >= 1 and t_depth >= 1")
    return math.log2(logical_qubits * t_depth)


@dataclass(frozen=True)
class Ratios:
    r_tdepth: float
    r_tcount: float
    r_qubits: float

    def to_dict(self) -> dict:
        return asdict(self)


def compare_ratios(n: int) -> Ratios:
    """Polynomial-encoding QRAM over bucket brigade: T-depth, T-count and qubit ratios."""
    if n < 2:
        raise EstimateError("n must be >= 2")
    N = 2**n
    return Ratios(math.log2(n) / n, (N - n - 1) / N, (2 * N) / (2 * N))


def rough_report(n: int) -> dict:
    N = 2**n
    poly_depth = 2 * (stage_count(n) + 1)
    ratios = compare_ratios(n)
    return {
        "n": n,
        "logical_qubits": 2 * N,
        "t_depth_poly": poly_depth,
        "rough_cost_poly": rough_cost(2 * N, poly_depth),
        "t_depth_bucket_brigade": n,
        "rough_cost_bucket_brigade": rough_cost(2 * N, n),
        **ratios.to_dict(),
    }
