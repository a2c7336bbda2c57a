"""One- and two-sided full shifts and scheduled near-copy partner sequences.

Sequences over the alphabet {1, ..., m} are stored as finite prefixes of
infinite symbol strings; operations that would need digits beyond the
stored prefix raise ``InsufficientPrefix`` instead of fabricating them.
The module provides the shift map, a certified enclosure of the sequence
metric

    dist(s, t) = sum_k m**(-|k|) * |s_k - t_k|,

and the block machinery that builds, for a base sequence s and a gap
sequence N = (N_1, N_2, ...), partner sequences t that

* copy s on blocks of growing length (block i copies i+1 digits),
* flip the digit right after each block (s -> s + 1 wrapped into 1..m),
* are arbitrary on the N_{i+1} "free" positions between blocks.

``construct_partner`` fills the free positions from a filler sequence and
``extract_filler`` inverts it, so together they realise a bijection
between the full shift and the set of partners of s.

Index conventions, relied on by the geometric layers:

* one-sided sequences are indexed s_1, s_2, ...; ``shift`` drops digits
  from the front;
* two-sided sequences store a past (most recent first: s_-1, s_-2, ...)
  and a future (s_1, s_2, ...); index 0 is unused;
* block i (i = 0, 1, ...) starts at u_i with u_0 = 1 and the tiling
  recursion u_{i+1} = u_i + (i+1) + 1 + N_{i+1}: i+1 matches, one flip,
  then N_{i+1} free digits.  (The off-by-one variant u_i + N_i + i + 1
  fails to tile the index line once the flipped digit and the free digits
  are both counted, so the tiling form is used throughout.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientPrefix,
    InvalidDigit,
    NotInSubset,
    ValidationError,
)

ONE_SIDED = "one"
TWO_SIDED = "two"


def wrap_increment(digit: int, m: int) -> int:
    """Digit + 1 with m wrapping back to 1 (digits are 1-based)."""
    return digit % m + 1


def _check_digits(digits: Iterable[int], m: int, what: str) -> tuple[int, ...]:
    out = tuple(int(d) for d in digits)
    for d in out:
        if not 1 <= d <= m:
            raise InvalidDigit(f"{what} digit {d} outside alphabet 1..{m}")
    return out


@dataclass(frozen=True)
class SymbolSequence:
    """Finite prefix of an infinite symbol string over {1, ..., m}.

    One-sided sequences store ``digits`` = (s_1, ..., s_K).  Two-sided
    sequences additionally store ``past`` = (s_-1, s_-2, ...), most
    recent digit first.
    """

    m: int
    digits: tuple[int, ...]
    side: str = ONE_SIDED
    past: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 2:
            raise ValidationError(f"alphabet size must be an integer >= 2, got {self.m}")
        if self.side not in (ONE_SIDED, TWO_SIDED):
            raise ValidationError(f"side must be '{ONE_SIDED}' or '{TWO_SIDED}'")
        object.__setattr__(self, "digits", _check_digits(self.digits, self.m, "future"))
        object.__setattr__(self, "past", _check_digits(self.past, self.m, "past"))
        if self.side == ONE_SIDED and self.past:
            raise ValidationError("one-sided sequences cannot carry past digits")

    @classmethod
    def _trusted(
        cls, m: int, digits: tuple[int, ...], side: str, past: tuple[int, ...]
    ) -> "SymbolSequence":
        # internal fast path for slices of already-validated sequences
        seq = object.__new__(cls)
        object.__setattr__(seq, "m", m)
        object.__setattr__(seq, "digits", digits)
        object.__setattr__(seq, "side", side)
        object.__setattr__(seq, "past", past)
        return seq

    @classmethod
    def one_sided(cls, m: int, digits: Iterable[int]) -> "SymbolSequence":
        return cls(m, tuple(digits))

    @classmethod
    def two_sided(cls, m: int, past: Iterable[int], future: Iterable[int]) -> "SymbolSequence":
        return cls(m, tuple(future), TWO_SIDED, tuple(past))

    @property
    def future(self) -> tuple[int, ...]:
        return self.digits

    def __len__(self) -> int:
        return len(self.digits)

    def shift(self, n: int) -> "SymbolSequence":
        return shift(self, n)

    def truncated(self, future_len: int, past_len: int | None = None) -> "SymbolSequence":
        """Keep only the first ``future_len`` future (and ``past_len`` past) digits."""
        if self.side == ONE_SIDED:
            return SymbolSequence._trusted(self.m, self.digits[:future_len], ONE_SIDED, ())
        keep_past = len(self.past) if past_len is None else past_len
        return SymbolSequence._trusted(
            self.m, self.digits[:future_len], TWO_SIDED, self.past[:keep_past]
        )

    def to_json(self) -> dict:
        if self.side == ONE_SIDED:
            return {"m": self.m, "side": ONE_SIDED, "digits": list(self.digits)}
        return {
            "m": self.m,
            "side": TWO_SIDED,
            "past": list(self.past),
            "future": list(self.digits),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymbolSequence":
        side = data.get("side", ONE_SIDED)
        if side == ONE_SIDED:
            return cls(int(data["m"]), tuple(data["digits"]))
        return cls.two_sided(int(data["m"]), tuple(data["past"]), tuple(data["future"]))


def random_sequence(
    m: int,
    length: int,
    rng: np.random.Generator,
    side: str = ONE_SIDED,
    past_length: int = 0,
) -> SymbolSequence:
    """Draw a sequence with independent uniform digits from a seeded generator."""
    future = tuple(int(d) for d in rng.integers(1, m + 1, size=length))
    if side == ONE_SIDED:
        return SymbolSequence(m, future)
    past = tuple(int(d) for d in rng.integers(1, m + 1, size=past_length))
    return SymbolSequence.two_sided(m, past, future)


def shift(seq: SymbolSequence, n: int) -> SymbolSequence:
    """Apply the shift map n times: drop n leading digits (one-sided) or
    move n digits from the future into the past (two-sided)."""
    if n < 0:
        raise ValidationError("shift amount must be non-negative")
    if n == 0:
        return seq
    if len(seq.digits) < n:
        raise InsufficientPrefix(
            f"shift by {n} needs {n} future digits, only {len(seq.digits)} stored"
        )
    if seq.side == ONE_SIDED:
        return SymbolSequence._trusted(seq.m, seq.digits[n:], ONE_SIDED, ())
    moved = tuple(reversed(seq.digits[:n]))
    return SymbolSequence._trusted(seq.m, seq.digits[n:], TWO_SIDED, moved + seq.past)


# --------------------------------------------------------------------------
# certified sequence metric


@dataclass(frozen=True)
class SequenceDistance:
    """Certified enclosure [lo, hi] of dist(s, t).

    ``lo_exact`` is the exact rational partial sum over the stored
    indices; ``lo``/``hi`` are outward-rounded floats, ``hi`` including
    the analytic tail bound for the unstored indices.
    """

    lo: float
    hi: float
    lo_exact: Fraction
    tail: float


def _float_below(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return max(f, 0.0)


def _float_above(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) < x:
        f = math.nextafter(f, math.inf)
    return f


def _horner_sum(a: Sequence[int], b: Sequence[int], m: int) -> tuple[int, int]:
    """Exact integer numerator of sum_{k=1}^{K} m^{-k}|a_k - b_k| over m^K."""
    k = min(len(a), len(b))
    num = 0
    for i in range(k):
        num = num * m + abs(a[i] - b[i])
    return num, k


def sequence_dist(s: SymbolSequence, t: SymbolSequence, tail_bound: float) -> SequenceDistance:
    """Certified enclosure of the sequence metric.

    The partial sum over stored indices is computed exactly in rational
    arithmetic; the contribution of unstored indices is bounded by
    (m-1) * sum_{|k| > K} m^{-|k|} = m^{-K} per side.  Raises
    ``InsufficientPrefix`` when that tail exceeds ``tail_bound``.
    """
    if s.m != t.m:
        raise ValidationError("sequences must share the alphabet size")
    if s.side != t.side:
        raise ValidationError("sequences must share the side")
    if tail_bound <= 0:
        raise ValidationError("tail_bound must be positive")
    m = s.m
    num_f, k_f = _horner_sum(s.digits, t.digits, m)
    exact = Fraction(num_f, m**k_f) if k_f else Fraction(0)
    tail = Fraction(1, m**k_f)
    if s.side == TWO_SIDED:
        num_p, k_p = _horner_sum(s.past, t.past, m)
        if k_p:
            exact += Fraction(num_p, m**k_p)
        tail += Fraction(1, m**k_p)
    if tail > Fraction(tail_bound):
        raise InsufficientPrefix(
            f"stored prefixes leave a metric tail of {float(tail):.3g} > tail_bound {tail_bound:.3g}"
        )
    lo = _float_below(exact)
    hi = _float_above(exact + tail)
    return SequenceDistance(lo=lo, hi=hi, lo_exact=exact, tail=_float_above(tail))


# --------------------------------------------------------------------------
# gap sequences and block schedules


_GAP_RULES = ("list", "constant", "linear", "quadratic", "affine")


@dataclass(frozen=True)
class GapSequence:
    """Rule producing the free-digit counts N_1, N_2, ...

    Supported rules: explicit finite list, constant c, linear (N_n = n),
    quadratic (N_n = n^2), and the affine-in-n^2 form N_n = a*n^2 + b.
    """

    rule: str
    values: tuple[int, ...] = ()
    c: int = 0
    a: int = 0
    b: int = 0

    def __post_init__(self) -> None:
        if self.rule not in _GAP_RULES:
            raise ValidationError(f"unknown gap rule {self.rule!r}")
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        for v in self.values:
            if v < 0:
                raise ValidationError("gap values must be non-negative")
        if self.c < 0 or self.a < 0 or self.b < 0:
            raise ValidationError("gap parameters must be non-negative")

    @classmethod
    def from_list(cls, values: Iterable[int]) -> "GapSequence":
        return cls("list", values=tuple(values))

    @classmethod
    def constant(cls, c: int) -> "GapSequence":
        return cls("constant", c=int(c))

    @classmethod
    def zero(cls) -> "GapSequence":
        return cls("constant", c=0)

    @classmethod
    def linear(cls) -> "GapSequence":
        return cls("linear")

    @classmethod
    def quadratic(cls) -> "GapSequence":
        return cls("quadratic")

    @classmethod
    def affine(cls, a: int, b: int) -> "GapSequence":
        return cls("affine", a=int(a), b=int(b))

    def value(self, n: int) -> int:
        """N_n for n >= 1."""
        if n < 1:
            raise ValidationError("gap index starts at 1")
        if self.rule == "list":
            if n > len(self.values):
                raise InsufficientPrefix(
                    f"explicit gap list has {len(self.values)} entries, needed N_{n}"
                )
            return self.values[n - 1]
        if self.rule == "constant":
            return self.c
        if self.rule == "linear":
            return n
        if self.rule == "quadratic":
            return n * n
        return self.a * n * n + self.b

    def to_json(self) -> dict:
        if self.rule == "list":
            return {"rule": "list", "values": list(self.values)}
        if self.rule == "constant":
            return {"rule": "constant", "c": self.c}
        if self.rule == "affine":
            return {"rule": "affine", "a": self.a, "b": self.b}
        return {"rule": self.rule}

    @classmethod
    def from_json(cls, data: dict) -> "GapSequence":
        rule = data["rule"]
        if rule == "zero":
            return cls.zero()
        if rule == "list":
            return cls.from_list(data["values"])
        if rule == "constant":
            return cls.constant(data["c"])
        if rule == "affine":
            return cls.affine(data["a"], data["b"])
        if rule in ("linear", "quadratic"):
            return cls(rule)
        raise ValidationError(f"unknown gap rule {rule!r}")


@dataclass(frozen=True)
class ScheduleBlock:
    """Layout of one match/flip/free block on the index line (1-based)."""

    index: int
    start: int            # u_i
    match_len: int        # i + 1
    mismatch_pos: int     # u_i + i + 1
    free_count: int       # N_{i+1}

    @property
    def match_positions(self) -> range:
        return range(self.start, self.start + self.match_len)

    @property
    def free_positions(self) -> range:
        return range(self.mismatch_pos + 1, self.mismatch_pos + 1 + self.free_count)

    @property
    def end(self) -> int:
        return self.mismatch_pos + self.free_count

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "start": self.start,
            "match_len": self.match_len,
            "mismatch_pos": self.mismatch_pos,
            "free_count": self.free_count,
        }


@dataclass(frozen=True)
class PairSchedule:
    """Consecutive blocks tiling the index line with no gaps or overlaps."""

    blocks: tuple[ScheduleBlock, ...]

    @property
    def span(self) -> int:
        """Largest index covered by the stored blocks."""
        return self.blocks[-1].end

    @property
    def starts(self) -> tuple[int, ...]:
        return tuple(b.start for b in self.blocks)

    def to_json(self) -> dict:
        return {"blocks": [b.to_json() for b in self.blocks], "span": self.span}


def block_schedule(gaps: GapSequence, block_count: int) -> PairSchedule:
    """Blocks 0..block_count-1 under u_0 = 1, u_{i+1} = u_i + (i+1) + 1 + N_{i+1}."""
    if block_count < 1:
        raise ValidationError("block_count must be >= 1")
    blocks = []
    u = 1
    for i in range(block_count):
        free = gaps.value(i + 1)
        blocks.append(
            ScheduleBlock(
                index=i,
                start=u,
                match_len=i + 1,
                mismatch_pos=u + i + 1,
                free_count=free,
            )
        )
        u = u + (i + 1) + 1 + free
    return PairSchedule(tuple(blocks))


def schedule_covering(gaps: GapSequence, length: int) -> PairSchedule:
    """Smallest schedule whose blocks cover positions 1..length."""
    if length < 1:
        raise ValidationError("length must be >= 1")
    count = 1
    sched = block_schedule(gaps, count)
    while sched.span < length:
        count += 1
        sched = block_schedule(gaps, count)
    return sched


def schedule_roles(gaps: GapSequence, length: int) -> tuple[list[int], list[int], list[int]]:
    """Classify positions 1..length into 0-based (match, flip, free) index lists."""
    sched = schedule_covering(gaps, length)
    match: list[int] = []
    flip: list[int] = []
    free: list[int] = []
    for blk in sched.blocks:
        for p in blk.match_positions:
            if p <= length:
                match.append(p - 1)
        if blk.mismatch_pos <= length:
            flip.append(blk.mismatch_pos - 1)
        for p in blk.free_positions:
            if p <= length:
                free.append(p - 1)
    return match, flip, free


def free_position_count(gaps: GapSequence, length: int) -> int:
    return len(schedule_roles(gaps, length)[2])


# --------------------------------------------------------------------------
# partner construction (the free-digit bijection) and its inverse


def construct_partner(
    base: SymbolSequence,
    gaps: GapSequence,
    filler: SymbolSequence,
    length: int,
) -> SymbolSequence:
    """Build the partner prefix t_1..t_length of ``base``.

    Matched positions copy the base digit, each block's final position
    flips it (+1 wrapped into 1..m), and free positions are taken from
    ``filler`` in order.  Distinct fillers yield distinct partners.
    """
    if base.side != ONE_SIDED or filler.side != ONE_SIDED:
        raise ValidationError("partner construction operates on one-sided sequences")
    if base.m != filler.m:
        raise ValidationError("base and filler must share the alphabet size")
    m = base.m
    match, flip, free = schedule_roles(gaps, length)
    needed_base = max(match + flip, default=-1) + 1
    if len(base.digits) < needed_base:
        raise InsufficientPrefix(
            f"base prefix of length {len(base.digits)} does not cover position {needed_base}"
        )
    if len(filler.digits) < len(free):
        raise InsufficientPrefix(
            f"filler prefix of length {len(filler.digits)} shorter than {len(free)} free positions"
        )
    out = [0] * length
    for i in match:
        out[i] = base.digits[i]
    for i in flip:
        out[i] = wrap_increment(base.digits[i], m)
    for j, i in enumerate(free):
        out[i] = filler.digits[j]
    return SymbolSequence(m, tuple(out))


def extract_filler(
    partner: SymbolSequence,
    base: SymbolSequence,
    gaps: GapSequence,
) -> SymbolSequence:
    """Recover the free digits of ``partner``; inverse of ``construct_partner``.

    Verifies the match/flip pattern over the stored prefix of ``partner``
    and raises ``NotInSubset`` at the first violation, so this doubles as
    the membership test for the partner set of ``base``.
    """
    if partner.side != ONE_SIDED or base.side != ONE_SIDED:
        raise ValidationError("filler extraction operates on one-sided sequences")
    if partner.m != base.m:
        raise ValidationError("partner and base must share the alphabet size")
    m = base.m
    span = len(partner.digits)
    if span < 1:
        raise ValidationError("partner prefix is empty")
    match, flip, free = schedule_roles(gaps, span)
    needed_base = max(match + flip, default=-1) + 1
    if len(base.digits) < needed_base:
        raise InsufficientPrefix(
            f"base prefix of length {len(base.digits)} does not cover position {needed_base}"
        )
    for i in match:
        if partner.digits[i] != base.digits[i]:
            raise NotInSubset(
                f"position {i + 1}: expected matched digit {base.digits[i]}, got {partner.digits[i]}"
            )
    for i in flip:
        want = wrap_increment(base.digits[i], m)
        if partner.digits[i] != want:
            raise NotInSubset(
                f"position {i + 1}: expected flipped digit {want}, got {partner.digits[i]}"
            )
    return SymbolSequence(m, tuple(partner.digits[i] for i in free))


def is_partner(partner: SymbolSequence, base: SymbolSequence, gaps: GapSequence) -> bool:
    """Membership test for the partner set over the stored prefix."""
    try:
        extract_filler(partner, base, gaps)
    except NotInSubset:
        return False
    return True


# --------------------------------------------------------------------------
# the gap condition M^2 / sum_{n<=M} N_n -> 0


@dataclass(frozen=True)
class GapConditionReport:
    """Empirical ratios M^2 / sum N_n plus the analytic verdict for the rule."""

    ratios: tuple[float, ...]
    verdict: str  # "pass" | "fail" | "inconclusive"
    detail: str


def check_gap_condition(gaps: GapSequence, M_max: int) -> GapConditionReport:
    """Decide whether M^2 / sum_{n=1}^{M} N_n tends to zero.

    The verdict is analytic where the rule allows it: quadratic growth in
    n passes, linear/constant rules fail (limits 2 and infinity), the
    all-zero rule fails with a division-by-zero note, and explicit finite
    lists are inconclusive (only the empirical trend is reported).
    """
    if M_max < 10:
        raise ValidationError("M_max must be at least 10")
    cap = M_max
    if gaps.rule == "list":
        cap = min(M_max, len(gaps.values))
    ratios = []
    total = 0
    for n in range(1, cap + 1):
        total += gaps.value(n)
        ratios.append(math.inf if total == 0 else n * n / total)

    if gaps.rule == "quadratic" or (gaps.rule == "affine" and gaps.a > 0):
        verdict, detail = "pass", "sum grows cubically in M; ratio limit 0"
    elif gaps.rule == "linear":
        verdict, detail = "fail", "ratio 2M/(M+1) has limit 2 > 0"
    elif gaps.rule == "constant" or (gaps.rule == "affine" and gaps.a == 0):
        c = gaps.c if gaps.rule == "constant" else gaps.b
        if c == 0:
            verdict, detail = "fail", "all gaps zero: division by zero, ratio undefined"
        else:
            verdict, detail = "fail", f"ratio M/{c} diverges"
    else:
        verdict, detail = "inconclusive", "explicit finite list: empirical trend only"
    return GapConditionReport(tuple(ratios), verdict, detail)


# --------------------------------------------------------------------------
# cylinder sets


@dataclass(frozen=True)
class CylinderSet:
    """All one-sided sequences sharing a fixed finite prefix."""

    m: int
    prefix: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", _check_digits(self.prefix, self.m, "cylinder"))

    def __len__(self) -> int:
        return len(self.prefix)

    def contains(self, seq: SymbolSequence) -> bool:
        if seq.m != self.m:
            raise ValidationError("alphabet size mismatch")
        k = len(self.prefix)
        if len(seq.digits) < k:
            raise InsufficientPrefix(
                f"membership in a length-{k} cylinder needs {k} stored digits"
            )
        return seq.digits[:k] == self.prefix
