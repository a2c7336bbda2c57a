"""Box-counting dimension estimation and Li-Yorke pair verification.

Box counts use the grid variant of the covering number: a point cloud
occupies the cell (floor(x_1/eps), ..., floor(x_k/eps)), and N_eps is
the number of distinct occupied cells.  Grid counts are dimension-
equivalent to minimal ball covers and computable in one pass.  The
fitted slope of log N_eps against -log eps over a saturation-guarded
window estimates the box (Minkowski) dimension.

Li-Yorke verification works on certified geometric bounds: orbits are
evaluated through the symbolic coding (never by floating-point
iteration), and each scheduled block contributes

* a proximity checkpoint at the orbit time that brings the matched block
  to the front of the future -- the certified distance upper bound there
  decays like (max ratio)^(block+1) times the ambient diameter;
* a separation checkpoint at the orbit time that brings the flipped
  digit to the front (one-sided) or just into the past (two-sided) --
  the certified lower bound there stays above the separation gap of the
  coding system in the separating coordinate, minus the coded radii.

``verify_liyorke`` turns these finite families into a verdict: geometric
decay of the proximity bounds (liminf-zero surrogate) plus a uniform
positive floor on the separation bounds (limsup-positive surrogate).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateFit,
    EmptyInput,
    TooFewCheckpoints,
    ValidationError,
)
from .symbolic import (
    ONE_SIDED,
    TWO_SIDED,
    GapSequence,
    SymbolSequence,
    block_schedule,
    construct_partner,
    extract_filler,
    random_sequence,
    schedule_roles,
)
from .systems import SystemSpec, code_orbit_point, derive_ifs

_COUNT_CHUNK = 1 << 17


# --------------------------------------------------------------------------
# box counting


@dataclass(frozen=True)
class BoxCountEstimate:
    """Occupied-cell counts over a grid-size ladder, plus the fitted slope."""

    epsilons: tuple[float, ...]
    counts: tuple[int, ...]
    sample_count: int
    slope: float | None = None
    stderr: float | None = None
    fit_range: tuple[int, ...] | None = None

    def to_json(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "counts": list(self.counts),
            "sample_count": self.sample_count,
            "slope": self.slope,
            "stderr": self.stderr,
            "fit_range": None if self.fit_range is None else list(self.fit_range),
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        """(-log eps, log N) pairs ready for external plotting."""
        return [(-math.log(e), math.log(n)) for e, n in zip(self.epsilons, self.counts)]


def dyadic_ladder(min_exp: int = 4, max_exp: int = 14) -> tuple[float, ...]:
    return tuple(2.0**-j for j in range(min_exp, max_exp + 1))


def ternary_ladder(min_exp: int, max_exp: int) -> tuple[float, ...]:
    return tuple(3.0**-j for j in range(min_exp, max_exp + 1))


def geometric_ladder(eps_max: float, eps_min: float, ratio: float = 2.0) -> tuple[float, ...]:
    if not (0 < eps_min <= eps_max) or ratio <= 1.0:
        raise ValidationError("ladder needs 0 < eps_min <= eps_max and ratio > 1")
    out = []
    e = eps_max
    while e >= eps_min * (1 - 1e-12):
        out.append(e)
        e /= ratio
    return tuple(out)


def _distinct_cells(points: np.ndarray, eps: float, threads: int) -> int:
    cells = np.floor(points / eps).astype(np.int64)
    if cells.shape[1] == 1:
        flat = cells[:, 0]
        if threads <= 1 or flat.size <= _COUNT_CHUNK:
            return int(np.unique(flat).size)
        parts = [
            np.unique(flat[i : i + _COUNT_CHUNK]) for i in range(0, flat.size, _COUNT_CHUNK)
        ]
        return int(np.unique(np.concatenate(parts)).size)
    packed = np.ascontiguousarray(cells)
    view = packed.view([("", packed.dtype)] * packed.shape[1]).ravel()
    if threads <= 1 or view.size <= _COUNT_CHUNK:
        return int(np.unique(view).size)
    chunks = [view[i : i + _COUNT_CHUNK] for i in range(0, view.size, _COUNT_CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(np.unique, chunks))
    return int(np.unique(np.concatenate(parts)).size)


def box_count(points, epsilons, threads: int = 1) -> BoxCountEstimate:
    """Occupied-grid-cell counts of a point cloud over a decreasing ladder."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.size == 0:
        raise EmptyInput("box_count needs at least one point")
    eps = tuple(float(e) for e in epsilons)
    if not eps or any(e <= 0 for e in eps):
        raise ValidationError("epsilon ladder must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValidationError("epsilon ladder must be strictly decreasing")
    counts = tuple(_distinct_cells(pts, e, threads) for e in eps)
    return BoxCountEstimate(eps, counts, sample_count=pts.shape[0])


def dimension_fit(
    estimate: BoxCountEstimate,
    min_count: int = 8,
    max_count_fraction: float = 0.125,
) -> BoxCountEstimate:
    """Least-squares slope of log N against -log eps over the usable window.

    Ladder points with N below ``min_count`` or above ``sample_count *
    max_count_fraction`` are saturated by finite-sample effects and
    dropped; fewer than four survivors raise ``DegenerateFit``.
    """
    cap = estimate.sample_count * max_count_fraction
    keep = tuple(
        i
        for i, n in enumerate(estimate.counts)
        if min_count <= n <= cap and 1 < n < estimate.sample_count
    )
    if len(keep) < 4:
        raise DegenerateFit(
            f"only {len(keep)} usable ladder points between count {min_count} and {cap:.0f}"
        )
    x = np.array([-math.log(estimate.epsilons[i]) for i in keep])
    y = np.array([math.log(estimate.counts[i]) for i in keep])
    xb = x - x.mean()
    sxx = float(xb @ xb)
    slope = float(xb @ (y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xb
    dof = len(keep) - 2
    stderr = float(math.sqrt(float(resid @ resid) / dof / sxx))
    return replace(estimate, slope=slope, stderr=stderr, fit_range=keep)


# --------------------------------------------------------------------------
# Li-Yorke profiles


@dataclass(frozen=True)
class Checkpoint:
    """One certified orbit-distance bound."""

    block: int
    time: int
    bound: float
    radius_slack: float

    def to_json(self) -> dict:
        return {
            "block": self.block,
            "time": self.time,
            "bound": self.bound,
            "radius_slack": self.radius_slack,
        }


@dataclass(frozen=True)
class LiYorkeProfile:
    """Certified proximity/separation bounds for one candidate pair."""

    proximity: tuple[Checkpoint, ...]
    separation: tuple[Checkpoint, ...]
    scale: float       # diameter of the ambient domain box
    sep_gap: float     # separation gap of the coding system's separating coordinate
    max_ratio: float   # largest contraction ratio over all coding directions
    side: str
    depth: int

    def to_json(self) -> dict:
        return {
            "proximity": [c.to_json() for c in self.proximity],
            "separation": [c.to_json() for c in self.separation],
            "scale": self.scale,
            "sep_gap": self.sep_gap,
            "max_ratio": self.max_ratio,
            "side": self.side,
            "depth": self.depth,
        }


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reason: str
    witness: Checkpoint | None = None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "reason": self.reason,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def _profile_parameters(spec: SystemSpec) -> tuple[float, float, float]:
    derived = derive_ifs(spec)
    exp = derived.expanding_inverse
    ratios = list(exp.ratios)
    if spec.side == ONE_SIDED:
        gap = exp.gap
    else:
        con = derived.contracting[0]
        ratios += list(con.ratios)
        gap = con.gap
    scale = spec.ambient_diam
    return scale, gap, max(ratios)


def liyorke_profile(
    spec: SystemSpec,
    base: SymbolSequence,
    gaps: GapSequence,
    partner: SymbolSequence,
    block_count: int,
    depth: int,
    strict: bool = True,
) -> LiYorkeProfile:
    """Certified orbit-distance bounds for (base, partner) at every block.

    With ``strict`` the partner's future must satisfy the match/flip
    pattern of the base (NotInSubset otherwise); negative controls pass
    strict=False to profile deliberately broken pairs.
    """
    if block_count < 1:
        raise ValidationError("block_count must be >= 1")
    sched = block_schedule(gaps, block_count)
    if strict:
        # membership constrains the futures only; pasts are free
        span = min(len(base.digits), len(partner.digits), sched.span)
        extract_filler(
            SymbolSequence(partner.m, partner.digits[:span]),
            SymbolSequence(base.m, base.digits[:span]),
            gaps,
        )
    scale, gap, max_ratio = _profile_parameters(spec)
    sep_offset = 0 if spec.side == ONE_SIDED else 1
    proximity = []
    separation = []
    for blk in sched.blocks:
        t_prox = blk.start - 1
        p_b = code_orbit_point(spec, base, t_prox, depth)
        p_p = code_orbit_point(spec, partner, t_prox, depth)
        slack = p_b.radius + p_p.radius
        dist = float(np.linalg.norm(p_b.center - p_p.center))
        proximity.append(Checkpoint(blk.index, t_prox, dist + slack, slack))
        t_sep = blk.start + blk.index + sep_offset
        s_b = code_orbit_point(spec, base, t_sep, depth)
        s_p = code_orbit_point(spec, partner, t_sep, depth)
        slack = s_b.radius + s_p.radius
        dist = float(np.linalg.norm(s_b.center - s_p.center))
        separation.append(Checkpoint(blk.index, t_sep, max(0.0, dist - slack), slack))
    return LiYorkeProfile(
        tuple(proximity), tuple(separation), scale, gap, max_ratio, spec.side, depth
    )


def verify_liyorke(
    profile: LiYorkeProfile,
    proximity_decay: float | None = None,
    separation_floor: float | None = None,
    skip_initial: int = 2,
) -> Verdict:
    """Decide the Li-Yorke surrogate criteria on a finite profile.

    Proximity passes when every checkpoint from ``skip_initial`` on obeys
    the envelope decay^(block+1) * scale + radius_slack; separation
    passes when every certified lower bound reaches the floor.  Defaults:
    decay = the profile's max ratio, floor = half the separation gap.
    The first ``skip_initial`` blocks are exempt ("eventually"): with a
    two-sided coding the recent-past agreement only outruns the envelope
    once the free blocks are longer than the matched blocks.
    """
    if len(profile.proximity) < 3 or len(profile.separation) < 3:
        raise TooFewCheckpoints("need at least 3 checkpoints of each kind")
    decay = profile.max_ratio if proximity_decay is None else float(proximity_decay)
    floor = profile.sep_gap / 2 if separation_floor is None else float(separation_floor)
    if not 0 < decay < 1:
        raise ValidationError("proximity_decay must lie in (0,1)")
    if not floor > 0:
        raise ValidationError("separation_floor must be positive")
    for cp in profile.proximity:
        if cp.block < skip_initial:
            continue
        envelope = decay ** (cp.block + 1) * profile.scale + cp.radius_slack + 1e-12
        if cp.bound > envelope:
            return Verdict(False, "proximity bound exceeds decay envelope", cp)
    for cp in profile.separation:
        if cp.bound < floor:
            return Verdict(False, "separation bound below floor", cp)
    return Verdict(True, "proximity decays and separation stays above floor")


# --------------------------------------------------------------------------
# pair builders for verification runs


def required_future_length(gaps: GapSequence, block_count: int, depth: int, side: str) -> int:
    sched = block_schedule(gaps, block_count)
    last = sched.blocks[-1]
    sep_offset = 0 if side == ONE_SIDED else 1
    return last.start + last.index + sep_offset + depth


def shadow_filler(base: SymbolSequence, gaps: GapSequence, length: int) -> SymbolSequence:
    """Filler that copies the base digits at the free positions, so the
    partner differs from the base only at the flipped positions."""
    free = schedule_roles(gaps, length)[2]
    return SymbolSequence(base.m, tuple(base.digits[i] for i in free))


def build_verification_pair(
    spec: SystemSpec,
    gaps: GapSequence,
    block_count: int,
    depth: int,
    seed: int,
    filler_mode: str = "base",
) -> tuple[SymbolSequence, SymbolSequence]:
    """Random base plus constructed partner sized for a full profile.

    filler_mode "base" copies the base digits into the free positions
    (the partner differs from the base exactly at the flipped digits);
    "random" draws the filler independently.  Two-sided partners reuse
    the base's past: the certified front-aligned proximity envelope needs
    the recent past to agree.
    """
    if filler_mode not in ("base", "random"):
        raise ValidationError("filler_mode must be 'base' or 'random'")
    length = required_future_length(gaps, block_count, depth, spec.side)
    rng = np.random.default_rng(seed)
    base = random_sequence(
        2, length, rng, side=spec.side, past_length=depth if spec.side == TWO_SIDED else 0
    )
    if filler_mode == "base":
        base_future = SymbolSequence(2, base.digits)
        filler = shadow_filler(base_future, gaps, length)
    else:
        filler = random_sequence(2, length, rng)
    partner_future = construct_partner(
        SymbolSequence(2, base.digits), gaps, filler, length
    )
    if spec.side == ONE_SIDED:
        return base, partner_future
    partner = SymbolSequence.two_sided(2, base.past, partner_future.digits)
    return base, partner


def break_pair_after_block(
    base: SymbolSequence,
    partner: SymbolSequence,
    gaps: GapSequence,
    last_kept_block: int,
) -> SymbolSequence:
    """Negative control: revert the flipped digits after ``last_kept_block``,
    so the pair becomes eventually equal and separation must fail."""
    digits = list(partner.digits)
    count = last_kept_block + 2
    sched = block_schedule(gaps, count)
    while sched.span < len(digits):
        count += 1
        sched = block_schedule(gaps, count)
    for blk in sched.blocks:
        if blk.index > last_kept_block and blk.mismatch_pos <= len(digits):
            digits[blk.mismatch_pos - 1] = base.digits[blk.mismatch_pos - 1]
    if partner.side == ONE_SIDED:
        return SymbolSequence(partner.m, tuple(digits))
    return SymbolSequence.two_sided(partner.m, partner.past, tuple(digits))
