"""Contracting similitude systems, coded points, and measure-driven samplers.

An ``IfsSystem`` is a finite list of contracting similitudes S_i(x) =
c_i * O_i x + t_i on a compact axis-aligned box K.  Orthogonal parts are
restricted to +/-1 diagonal matrices so that every image S_i(K) is again
an axis-aligned box and separation gaps can be computed exactly.

Symbol prefixes are projected to points by nesting first-digit-outermost:
the prefix (a_1, ..., a_n) codes the region S_{a_1} o ... o S_{a_n}(K),
reported as a ``CodedPoint`` whose ball (center of the image box,
radius = c_{a_1}...c_{a_n} * diam(K) / 2) certifiably contains the
projection of every extension of the prefix.

Samplers draw digit prefixes i.i.d. with probabilities (c_1^D, ..., c_m^D)
where D solves the Moran equation sum c_i^D = 1 -- the digit law whose
projection is the natural self-similar measure on the attractor.  All
randomness comes from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(stream, chunk_index))`` with a fixed
chunk size, so results are bit-identical for any thread count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    InsufficientPrefix,
    InvalidDigit,
    InvalidRatio,
    OverlapError,
    ParameterOutOfRange,
    ValidationError,
)
from .symbolic import GapSequence, SymbolSequence, schedule_roles

_CHUNK = 1 << 15  # fixed sampling chunk; part of the determinism contract
_MORAN_TOL = 1e-12


@dataclass(frozen=True)
class Similitude:
    """x -> ratio * flips * x + translation with flips a +/-1 diagonal."""

    ratio: float
    flips: tuple[int, ...]
    translation: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio < 1.0:
            raise InvalidRatio(f"contraction ratio must lie in (0,1), got {self.ratio}")
        object.__setattr__(self, "flips", tuple(int(f) for f in self.flips))
        object.__setattr__(self, "translation", tuple(float(t) for t in self.translation))
        if any(f not in (-1, 1) for f in self.flips):
            raise ParameterOutOfRange("orthogonal part must be a +/-1 diagonal")
        if len(self.flips) != len(self.translation):
            raise ValidationError("flips and translation dimensions differ")

    @classmethod
    def of(cls, ratio: float, translation, orth=None) -> "Similitude":
        """Build from a translation vector and an optional orthogonal part.

        ``orth`` may be a +/-1 vector (diagonal), a diagonal matrix, or
        None for the identity.
        """
        t = tuple(float(x) for x in np.atleast_1d(np.asarray(translation, dtype=float)))
        w = len(t)
        if orth is None:
            flips = (1,) * w
        else:
            arr = np.asarray(orth)
            if arr.ndim == 2:
                if not np.array_equal(arr, np.diag(np.diag(arr))):
                    raise ParameterOutOfRange(
                        "only diagonal +/-1 orthogonal parts are supported"
                    )
                arr = np.diag(arr)
            flips = tuple(int(f) for f in np.atleast_1d(arr))
        return cls(ratio, flips, t)

    @property
    def w(self) -> int:
        return len(self.translation)

    @cached_property
    def _flips_arr(self) -> np.ndarray:
        return np.asarray(self.flips, dtype=float)

    @cached_property
    def _t_arr(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.ratio * (self._flips_arr * x) + self._t_arr

    def image_box(self, box: np.ndarray) -> np.ndarray:
        """Exact image of an axis-aligned box, as a (w, 2) array."""
        a = self.ratio * self._flips_arr * box[:, 0] + self._t_arr
        b = self.ratio * self._flips_arr * box[:, 1] + self._t_arr
        return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)


def _box_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two axis-aligned boxes (0 if they meet)."""
    gap = np.maximum(0.0, np.maximum(b[:, 0] - a[:, 1], a[:, 0] - b[:, 1]))
    return float(np.linalg.norm(gap))


@dataclass(frozen=True, eq=False)
class IfsSystem:
    """Finite similitude system on a compact axis-aligned box.

    Validates containment S_i(K) in K at construction.  With
    ``separation_required`` (the default) the first-level images must be
    pairwise disjoint with strictly positive gap; pass False for systems
    whose pieces legitimately touch (e.g. an interval coded by halves).
    """

    maps: tuple[Similitude, ...]
    box: tuple[tuple[float, float], ...]
    separation_required: bool = True
    gap: float = field(init=False)

    def __post_init__(self) -> None:
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        if not maps:
            raise ValidationError("an IFS needs at least one map")
        w = len(box)
        for lo, hi in box:
            if not hi > lo:
                raise ValidationError("domain box must have positive width on every axis")
        for s in maps:
            if s.w != w:
                raise ValidationError("map dimension does not match the domain box")
        box_arr = self.box_arr
        tol = 1e-9 * float(np.max(box_arr[:, 1] - box_arr[:, 0]))
        images = [s.image_box(box_arr) for s in maps]
        for i, img in enumerate(images):
            if np.any(img[:, 0] < box_arr[:, 0] - tol) or np.any(img[:, 1] > box_arr[:, 1] + tol):
                raise ValidationError(f"image of map {i + 1} escapes the domain box")
        gap = math.inf if len(maps) == 1 else min(
            _box_distance(images[i], images[j])
            for i in range(len(maps))
            for j in range(i + 1, len(maps))
        )
        if self.separation_required and gap <= 0.0:
            raise OverlapError("first-level images intersect or touch; no positive gap")
        object.__setattr__(self, "gap", gap)

    @property
    def w(self) -> int:
        return len(self.box)

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(s.ratio for s in self.maps)

    @cached_property
    def box_arr(self) -> np.ndarray:
        return np.asarray(self.box, dtype=float)

    @cached_property
    def center(self) -> np.ndarray:
        return self.box_arr.mean(axis=1)

    @cached_property
    def diam(self) -> float:
        return float(np.linalg.norm(self.box_arr[:, 1] - self.box_arr[:, 0]))

    def to_json(self) -> dict:
        return {
            "w": self.w,
            "K": [list(ax) for ax in self.box],
            "maps": [
                {"ratio": s.ratio, "orth": list(s.flips), "t": list(s.translation)}
                for s in self.maps
            ],
        }

    @classmethod
    def from_json(cls, data: dict, separation_required: bool = True) -> "IfsSystem":
        maps = tuple(
            Similitude.of(float(m["ratio"]), m["t"], m.get("orth")) for m in data["maps"]
        )
        box = tuple((float(lo), float(hi)) for lo, hi in data["K"])
        return cls(maps, box, separation_required)


def load_ifs(path_or_data, separation_required: bool = True) -> IfsSystem:
    if isinstance(path_or_data, (str, os.PathLike)):
        with open(path_or_data) as fh:
            data = json.load(fh)
    else:
        data = path_or_data
    return IfsSystem.from_json(data, separation_required)


def verify_separation(ifs: IfsSystem) -> float:
    """Minimal distance between distinct first-level image boxes.

    Raises ``OverlapError`` when any two images meet (touching included):
    the separation arguments need a strictly positive gap.
    """
    if ifs.m == 1:
        raise ValidationError("separation needs at least two maps")
    if ifs.gap <= 0.0:
        raise OverlapError("first-level images intersect or touch; no positive gap")
    return ifs.gap


# --------------------------------------------------------------------------
# the Moran equation


@dataclass(frozen=True)
class MoranSolution:
    dimension: float
    residual: float


def moran_dimension(ratios: Sequence[float]) -> MoranSolution:
    """Solve sum_i c_i^D = 1 for D by bisection.

    D -> sum c_i^D is strictly decreasing, equals m at D = 0 and drops
    below 1 before log(m)/(-log(max c)) + 1, so the root is bracketed.
    """
    cs = [float(c) for c in ratios]
    if not cs:
        raise InvalidRatio("ratio list is empty")
    for c in cs:
        if not 0.0 < c < 1.0:
            raise InvalidRatio(f"ratio {c} outside (0,1)")
    if len(cs) == 1:
        return MoranSolution(0.0, 0.0)

    def g(d: float) -> float:
        return math.fsum(c**d for c in cs) - 1.0

    lo = 0.0
    hi = math.log(len(cs)) / -math.log(max(cs)) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, hi):
            break
    d = 0.5 * (lo + hi)
    residual = abs(g(d))
    if residual > _MORAN_TOL:
        raise ConvergenceError(f"Moran bisection stalled at residual {residual:.3g}")
    return MoranSolution(d, residual)


def bernoulli_weights(ratios: Sequence[float]) -> np.ndarray:
    """Digit probabilities (c_1^D, ..., c_m^D), renormalised against float drift."""
    d = moran_dimension(ratios).dimension
    ws = np.asarray(ratios, dtype=float) ** d
    return ws / ws.sum()


# --------------------------------------------------------------------------
# coded points


@dataclass(frozen=True, eq=False)
class CodedPoint:
    """Center/radius ball certifiably containing the projection of every
    sequence extending ``prefix``."""

    center: np.ndarray
    radius: float
    prefix: tuple

    def __iter__(self):
        return iter(self.center)


def _check_prefix(ifs: IfsSystem, prefix: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in prefix)
    if not out:
        raise ValidationError("prefix must contain at least one digit")
    for d in out:
        if not 1 <= d <= ifs.m:
            raise InvalidDigit(f"digit {d} outside 1..{ifs.m}")
    return out


def code_point(ifs: IfsSystem, prefix: Sequence[int]) -> CodedPoint:
    """Project a digit prefix: apply S_{a_1} o ... o S_{a_n} to the domain center.

    The radius c_{a_1}...c_{a_n} * diam(K)/2 bounds the distance from the
    center to the projection of any infinite extension (half-diameter
    convention: diam means the Euclidean diagonal of K).
    """
    digits = _check_prefix(ifs, prefix)
    x = ifs.center.copy()
    scale = 1.0
    for d in reversed(digits):
        s = ifs.maps[d - 1]
        x = s.apply(x)
        scale *= s.ratio
    return CodedPoint(x, scale * ifs.diam / 2.0, digits)


def _code_batch(ifs: IfsSystem, digits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``code_point`` over rows of a (n, depth) digit array."""
    n, depth = digits.shape
    ratios = np.asarray(ifs.ratios)
    flips = np.stack([s._flips_arr for s in ifs.maps])
    trans = np.stack([s._t_arr for s in ifs.maps])
    x = np.broadcast_to(ifs.center, (n, ifs.w)).copy()
    for k in range(depth - 1, -1, -1):
        idx = digits[:, k].astype(np.intp) - 1
        x = ratios[idx, None] * (flips[idx] * x) + trans[idx]
    radii = np.prod(ratios[digits.astype(np.intp) - 1], axis=1) * (ifs.diam / 2.0)
    return x, radii


# --------------------------------------------------------------------------
# samplers


class PointSample:
    """Array-backed sequence of CodedPoints from one sampling run."""

    def __init__(self, ifs: IfsSystem, centers: np.ndarray, radii: np.ndarray,
                 digits: np.ndarray | None):
        self.ifs = ifs
        self.centers = centers
        self.radii = radii
        self.digits = digits

    def __len__(self) -> int:
        return self.centers.shape[0]

    def __getitem__(self, i: int) -> CodedPoint:
        prefix = () if self.digits is None else tuple(int(d) for d in self.digits[i])
        return CodedPoint(self.centers[i], float(self.radii[i]), prefix)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


class PairSample:
    """Joint sample of (attractor point, partner point) pairs in R^{2w}."""

    def __init__(self, ifs: IfsSystem, points: np.ndarray,
                 base_digits: np.ndarray, partner_digits: np.ndarray):
        self.ifs = ifs
        self.points = points
        self.base_digits = base_digits
        self.partner_digits = partner_digits

    def __len__(self) -> int:
        return self.points.shape[0]


def _chunk_rng(seed: int, stream: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, chunk_index))
    return np.random.Generator(np.random.PCG64(ss))


def _digit_dtype(m: int):
    return np.int8 if m < 128 else np.int16


def _draw_digits(rng: np.random.Generator, cum: np.ndarray, shape) -> np.ndarray:
    u = rng.random(shape)
    return (np.searchsorted(cum, u, side="right") + 1).astype(_digit_dtype(cum.size))


def _validate_sampling(count: int, depth: int, seed: int) -> None:
    if count < 1:
        raise ValidationError("count must be >= 1")
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError("seed must be a non-negative integer")


def _run_chunks(count: int, worker, threads: int) -> None:
    """Invoke worker(chunk_index, start, n) over fixed-size chunks.

    The chunk layout (and hence every drawn number) depends only on the
    seed, never on the thread count.
    """
    tasks = []
    start = 0
    idx = 0
    while start < count:
        n = min(_CHUNK, count - start)
        tasks.append((idx, start, n))
        idx += 1
        start += n
    if threads <= 1 or len(tasks) == 1:
        for t in tasks:
            worker(*t)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda t: worker(*t), tasks))


def sample_attractor(
    ifs: IfsSystem, count: int, depth: int, seed: int, threads: int = 1, stream: int = 0
) -> PointSample:
    """Draw ``count`` coded points with i.i.d. digits distributed (c_i^D)."""
    _validate_sampling(count, depth, seed)
    cum = np.cumsum(bernoulli_weights(ifs.ratios))
    digits = np.empty((count, depth), dtype=_digit_dtype(ifs.m))
    centers = np.empty((count, ifs.w), dtype=float)
    radii = np.empty(count, dtype=float)

    def worker(chunk_index: int, start: int, n: int) -> None:
        rng = _chunk_rng(seed, stream, chunk_index)
        d = _draw_digits(rng, cum, (n, depth))
        c, r = _code_batch(ifs, d)
        digits[start : start + n] = d
        centers[start : start + n] = c
        radii[start : start + n] = r

    _run_chunks(count, worker, threads)
    return PointSample(ifs, centers, radii, digits)


def _restricted_template(
    ifs: IfsSystem, base: SymbolSequence, gaps: GapSequence, depth: int
) -> tuple[np.ndarray, np.ndarray]:
    if base.side != "one":
        raise ValidationError("restricted sampling takes a one-sided base")
    if base.m != ifs.m:
        raise ValidationError("base alphabet must match the number of IFS maps")
    match, flip, free = schedule_roles(gaps, depth)
    needed = max(match + flip, default=-1) + 1
    if len(base.digits) < needed:
        raise InsufficientPrefix(
            f"base prefix of length {len(base.digits)} does not cover position {needed}"
        )
    template = np.zeros(depth, dtype=_digit_dtype(ifs.m))
    for i in match:
        template[i] = base.digits[i]
    for i in flip:
        template[i] = base.digits[i] % ifs.m + 1
    return template, np.asarray(free, dtype=np.intp)


def sample_restricted(
    ifs: IfsSystem,
    base: SymbolSequence,
    gaps: GapSequence,
    count: int,
    depth: int,
    seed: int,
    threads: int = 1,
    stream: int = 0,
) -> PointSample:
    """Sample the projection of the partner set of ``base``.

    Fillers are drawn from the (c_i^D) digit law and routed through the
    partner construction, so every returned prefix satisfies the
    match/flip pattern of ``base`` and the cloud samples the push-forward
    of the natural measure onto the restricted set.
    """
    _validate_sampling(count, depth, seed)
    template, free_idx = _restricted_template(ifs, base, gaps, depth)
    cum = np.cumsum(bernoulli_weights(ifs.ratios))
    digits = np.empty((count, depth), dtype=_digit_dtype(ifs.m))
    centers = np.empty((count, ifs.w), dtype=float)
    radii = np.empty(count, dtype=float)

    def worker(chunk_index: int, start: int, n: int) -> None:
        rng = _chunk_rng(seed, stream, chunk_index)
        d = np.tile(template, (n, 1))
        if free_idx.size:
            d[:, free_idx] = _draw_digits(rng, cum, (n, free_idx.size))
        c, r = _code_batch(ifs, d)
        digits[start : start + n] = d
        centers[start : start + n] = c
        radii[start : start + n] = r

    _run_chunks(count, worker, threads)
    return PointSample(ifs, centers, radii, digits)


def sample_pair_set(
    ifs: IfsSystem,
    gaps: GapSequence,
    count: int,
    depth: int,
    seed: int,
    threads: int = 1,
    stream: int = 0,
) -> PairSample:
    """Sample (x, y) with x an attractor point and y a partner-set point of x.

    Each draw takes a fresh base prefix and a fresh filler, both from the
    (c_i^D) digit law; the result is a point of R^{2w} whose first w
    coordinates are distributed like ``sample_attractor`` output.
    """
    _validate_sampling(count, depth, seed)
    match, flip, free = schedule_roles(gaps, depth)
    match_idx = np.asarray(match, dtype=np.intp)
    flip_idx = np.asarray(flip, dtype=np.intp)
    free_idx = np.asarray(free, dtype=np.intp)
    cum = np.cumsum(bernoulli_weights(ifs.ratios))
    m = ifs.m
    points = np.empty((count, 2 * ifs.w), dtype=float)
    base_digits = np.empty((count, depth), dtype=_digit_dtype(ifs.m))
    partner_digits = np.empty((count, depth), dtype=_digit_dtype(ifs.m))

    def worker(chunk_index: int, start: int, n: int) -> None:
        rng = _chunk_rng(seed, stream, chunk_index)
        s = _draw_digits(rng, cum, (n, depth))
        t = np.empty_like(s)
        if match_idx.size:
            t[:, match_idx] = s[:, match_idx]
        if flip_idx.size:
            t[:, flip_idx] = (s[:, flip_idx] % m + 1).astype(t.dtype)
        if free_idx.size:
            t[:, free_idx] = _draw_digits(rng, cum, (n, free_idx.size))
        cs, _ = _code_batch(ifs, s)
        ct, _ = _code_batch(ifs, t)
        points[start : start + n, : ifs.w] = cs
        points[start : start + n, ifs.w :] = ct
        base_digits[start : start + n] = s
        partner_digits[start : start + n] = t

    _run_chunks(count, worker, threads)
    return PairSample(ifs, points, base_digits, partner_digits)
