"""Exact finite-depth arithmetic of Cantor-like interval sets.

An :class:`IntervalSet` is a sorted union of disjoint closed intervals.
When every endpoint is rational the set is carried *exactly*: endpoints
are int64 numerators over one common denominator, so sums, translations,
reflections, and covering verdicts involve integer comparisons only.
Sets with irrational data fall back to floats with a relative merge
tolerance of 1e-12.

Middle-portion removal: one step with removal ratio ``r`` replaces each
interval by its two outer parts of relative length ``s = (1 - r) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ArgumentError, CapabilityError

__all__ = [
    "MAX_DEPTH",
    "CantorSpec",
    "IntervalSet",
    "CoverReport",
    "build_cantor",
    "sum_sets",
    "covers",
    "intersects",
    "wrap_mod",
]

MAX_DEPTH = 24
_INT_LIMIT = 1 << 61  # headroom so a sum of two endpoints stays in int64
_FLOAT_TOL = 1e-12

Number = Union[int, float, Fraction]


def _to_fraction(x: Number) -> Fraction | None:
    """Exact Fraction for int/Fraction/float (binary-exact), None if not finite."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return Fraction(x)
    return None


@dataclass(frozen=True)
class CantorSpec:
    """Base interval plus per-step middle-removal ratios."""

    base: tuple[Number, Number]
    ratios: tuple[Number, ...]

    def __post_init__(self):
        lo, hi = self.base
        if not (float(lo) < float(hi)):
            raise ArgumentError(f"base interval is empty: {self.base!r}")
        for r in self.ratios:
            if not (0.0 < float(r) < 1.0):
                raise ArgumentError(f"removal ratio must lie in (0, 1): {r!r}")
        if len(self.ratios) > MAX_DEPTH:
            raise CapabilityError(
                f"depth {len(self.ratios)} exceeds the supported maximum {MAX_DEPTH}"
            )

    @property
    def depth(self) -> int:
        return len(self.ratios)

    @property
    def side_ratios(self) -> tuple[Number, ...]:
        """Relative length of each surviving side per step: (1 - ratio) / 2."""
        out = []
        for r in self.ratios:
            fr = _to_fraction(r)
            out.append((1 - fr) / 2 if fr is not None else (1.0 - float(r)) / 2.0)
        return tuple(out)

    @staticmethod
    def uniform(base: tuple[Number, Number], ratio: Number, depth: int) -> "CantorSpec":
        if depth < 0:
            raise ArgumentError("depth must be >= 0")
        return CantorSpec(tuple(base), (ratio,) * depth)


class IntervalSet:
    """Sorted disjoint closed intervals, exact (integer lattice) or float."""

    __slots__ = ("lo", "hi", "den", "depth")

    def __init__(self, lo: np.ndarray, hi: np.ndarray, den: int | None, depth: int | None = None):
        # internal constructor: inputs must already be sorted, merged, disjoint
        self.lo = lo
        self.hi = hi
        self.den = den
        self.depth = depth

    # -- construction --------------------------------------------------

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[Number, Number]], *, depth: int | None = None) -> "IntervalSet":
        pairs = list(pairs)
        fracs: list[tuple[Fraction, Fraction]] | None = []
        for a, b in pairs:
            fa, fb = _to_fraction(a), _to_fraction(b)
            if fa is None or fb is None:
                fracs = None
                break
            if fb < fa:
                raise ArgumentError(f"interval with hi < lo: ({a!r}, {b!r})")
            fracs.append((fa, fb))
        if fracs is not None:
            den = 1
            for fa, fb in fracs:
                den = den * fa.denominator // math.gcd(den, fa.denominator)
                den = den * fb.denominator // math.gcd(den, fb.denominator)
            scale_ok = all(
                abs(int(fa * den)) < _INT_LIMIT and abs(int(fb * den)) < _INT_LIMIT
                for fa, fb in fracs
            )
            if scale_ok:
                lo = np.array([int(fa * den) for fa, _ in fracs], dtype=np.int64)
                hi = np.array([int(fb * den) for _, fb in fracs], dtype=np.int64)
                lo, hi = _merge_int(lo, hi)
                return IntervalSet(lo, hi, den, depth)
        lo = np.array([float(a) for a, _ in pairs])
        hi = np.array([float(b) for _, b in pairs])
        if np.any(hi < lo):
            raise ArgumentError("interval with hi < lo")
        lo, hi = _merge_float(lo, hi)
        return IntervalSet(lo, hi, None, depth)

    # -- views -----------------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.den is not None

    def __len__(self) -> int:
        return int(self.lo.size)

    def as_floats(self) -> list[tuple[float, float]]:
        if self.exact:
            d = float(self.den)
            return [(a / d, b / d) for a, b in zip(self.lo.tolist(), self.hi.tolist())]
        return list(zip(self.lo.tolist(), self.hi.tolist()))

    def as_fractions(self) -> list[tuple[Fraction, Fraction]]:
        if not self.exact:
            raise CapabilityError("float-mode set has no exact endpoints")
        return [
            (Fraction(int(a), self.den), Fraction(int(b), self.den))
            for a, b in zip(self.lo.tolist(), self.hi.tolist())
        ]

    def total_length(self) -> float:
        s = int(np.sum(self.hi - self.lo)) if self.exact else float(np.sum(self.hi - self.lo))
        return s / self.den if self.exact else s

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        a, b = _common_lattice(self, other)
        return (
            a.lo.size == b.lo.size
            and bool(np.all(a.lo == b.lo))
            and bool(np.all(a.hi == b.hi))
        )

    def __hash__(self):  # pragma: no cover - sets are not meant for dict keys
        return id(self)

    def __repr__(self):  # pragma: no cover - cosmetic
        mode = f"1/{self.den}" if self.exact else "float"
        return f"<IntervalSet {len(self)} intervals, lattice {mode}>"

    # -- exact transforms ------------------------------------------------

    def translate(self, c: Number) -> "IntervalSet":
        fc = _to_fraction(c)
        if self.exact and fc is not None:
            if self.den % fc.denominator == 0:
                shift = int(fc * self.den)
                return IntervalSet(self.lo + shift, self.hi + shift, self.den, self.depth)
            return IntervalSet.from_pairs(
                [(a + fc, b + fc) for a, b in self.as_fractions()], depth=self.depth
            )
        lo, hi = np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)
        if self.exact:
            lo, hi = lo / self.den, hi / self.den
        return IntervalSet(lo + float(c), hi + float(c), None, self.depth)

    def negate(self) -> "IntervalSet":
        """The reflection ``{-x : x in A}`` (exact)."""
        return IntervalSet(-self.hi[::-1].copy(), -self.lo[::-1].copy(), self.den, self.depth)

    def reflect(self, center: Number) -> "IntervalSet":
        """Reflection through a point: ``2 * center - A`` (exact when possible)."""
        fc = _to_fraction(center)
        if self.exact and fc is not None:
            two_c = 2 * fc
            if two_c.denominator == 1 or self.den % two_c.denominator == 0:
                shift = int(two_c * self.den)
                return IntervalSet(
                    (shift - self.hi)[::-1].copy(),
                    (shift - self.lo)[::-1].copy(),
                    self.den,
                    self.depth,
                )
        return self.negate().translate(2 * float(center) if fc is None else 2 * fc)

    def to_json(self) -> dict:
        return {
            "mode": "exact" if self.exact else "float",
            "denominator": self.den,
            "depth": self.depth,
            "intervals": [[a, b] for a, b in self.as_floats()],
        }


# -- merging kernels ----------------------------------------------------


def _merge_int(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if lo.size == 0:
        return lo, hi
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    run_hi = np.maximum.accumulate(hi)
    # a new component starts where lo exceeds the running max of hi
    starts = np.empty(lo.size, dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > run_hi[:-1]
    idx = np.flatnonzero(starts)
    out_lo = lo[idx]
    out_hi = np.maximum.reduceat(run_hi, idx)
    return out_lo, out_hi


def _merge_float(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if lo.size == 0:
        return lo, hi
    scale = max(1.0, float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
    tol = _FLOAT_TOL * scale
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    run_hi = np.maximum.accumulate(hi)
    starts = np.empty(lo.size, dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > run_hi[:-1] + tol
    idx = np.flatnonzero(starts)
    return lo[idx], np.maximum.reduceat(run_hi, idx)


def _max_abs(arr: np.ndarray) -> int:
    return int(np.max(np.abs(arr))) if arr.size else 0


def _common_lattice(a: IntervalSet, b: IntervalSet) -> tuple[IntervalSet, IntervalSet]:
    """Rescale two sets onto one lattice (or both to floats)."""
    if a.exact and b.exact:
        den = a.den * b.den // math.gcd(a.den, b.den)
        fa, fb = den // a.den, den // b.den
        if (
            max(_max_abs(a.lo), _max_abs(a.hi)) * fa < _INT_LIMIT
            and max(_max_abs(b.lo), _max_abs(b.hi)) * fb < _INT_LIMIT
        ):
            return (
                IntervalSet(a.lo * fa, a.hi * fa, den, a.depth),
                IntervalSet(b.lo * fb, b.hi * fb, den, b.depth),
            )
    fa = a.as_floats()
    fb = b.as_floats()
    return (
        IntervalSet(np.array([p for p, _ in fa]), np.array([q for _, q in fa]), None, a.depth),
        IntervalSet(np.array([p for p, _ in fb]), np.array([q for _, q in fb]), None, b.depth),
    )


# -- operations ----------------------------------------------------------


def build_cantor(spec: CantorSpec) -> IntervalSet:
    """Exact recursive middle-portion removal; 2**depth intervals."""
    if spec.depth > MAX_DEPTH:
        raise CapabilityError(f"depth {spec.depth} exceeds {MAX_DEPTH}")
    base = IntervalSet.from_pairs([spec.base], depth=0)
    current = base
    for step, s in enumerate(spec.side_ratios):
        fs = _to_fraction(s)
        if current.exact and fs is not None:
            den = current.den * fs.denominator
            if int(np.max(np.abs(current.hi))) * fs.denominator >= _INT_LIMIT:
                raise CapabilityError("lattice overflow; reduce depth or simplify ratios")
            lo = current.lo * fs.denominator
            hi = current.hi * fs.denominator
            w_num = (hi - lo) * fs.numerator // fs.denominator  # exact: widths divisible
            # guard: exactness of the division above
            if np.any((hi - lo) * fs.numerator % fs.denominator != 0):
                # fall back to a finer lattice where the division is exact
                den = den * fs.denominator
                lo = lo * fs.denominator
                hi = hi * fs.denominator
                w_num = (hi - lo) * fs.numerator // fs.denominator
            new_lo = np.concatenate([lo, hi - w_num])
            new_hi = np.concatenate([lo + w_num, hi])
            new_lo, new_hi = _merge_int(new_lo, new_hi)
            current = IntervalSet(new_lo, new_hi, den, step + 1)
        else:
            flo = np.asarray(current.lo, dtype=float)
            fhi = np.asarray(current.hi, dtype=float)
            if current.exact:
                flo, fhi = flo / current.den, fhi / current.den
            w = (fhi - flo) * float(s)
            new_lo = np.concatenate([flo, fhi - w])
            new_hi = np.concatenate([flo + w, fhi])
            new_lo, new_hi = _merge_float(new_lo, new_hi)
            current = IntervalSet(new_lo, new_hi, None, step + 1)
    return current


def sum_sets(a: IntervalSet, b: IntervalSet, *, chunk_pairs: int = 1 << 22) -> IntervalSet:
    """Exact Minkowski sum: union of ``[lo_a + lo_b, hi_a + hi_b]``."""
    a, b = _common_lattice(a, b)
    if a.lo.size == 0 or b.lo.size == 0:
        return IntervalSet(a.lo[:0], a.hi[:0], a.den)
    merge = _merge_int if a.exact else _merge_float
    rows_per_chunk = max(1, chunk_pairs // max(1, b.lo.size))
    acc_lo = acc_hi = None
    for start in range(0, a.lo.size, rows_per_chunk):
        sl = slice(start, start + rows_per_chunk)
        lo = (a.lo[sl][:, None] + b.lo[None, :]).ravel()
        hi = (a.hi[sl][:, None] + b.hi[None, :]).ravel()
        if acc_lo is None:
            acc_lo, acc_hi = merge(lo, hi)
        else:
            acc_lo, acc_hi = merge(np.concatenate([acc_lo, lo]), np.concatenate([acc_hi, hi]))
    return IntervalSet(acc_lo, acc_hi, a.den)


@dataclass(frozen=True)
class CoverReport:
    covered: bool
    gaps: tuple[tuple[float, float], ...]


def covers(a: IntervalSet, target: tuple[Number, Number]) -> CoverReport:
    """Exact containment check of a closed target interval, with gap list."""
    t = IntervalSet.from_pairs([target])
    aa, tt = _common_lattice(a, t)
    tlo, thi = tt.lo[0], tt.hi[0]
    tol = 0 if aa.exact else _FLOAT_TOL * max(1.0, abs(float(tlo)), abs(float(thi)))
    gaps: list[tuple[float, float]] = []
    cursor = tlo
    den = aa.den if aa.exact else 1
    for lo, hi in zip(aa.lo.tolist(), aa.hi.tolist()):
        if hi < cursor or lo > thi:
            if lo > thi:
                break
            continue
        if lo > cursor + tol:
            gaps.append((cursor / den, min(lo, thi) / den))
        cursor = max(cursor, hi)
        if cursor >= thi:
            break
    if cursor < thi - tol:
        gaps.append((cursor / den, thi / den))
    return CoverReport(covered=not gaps, gaps=tuple(gaps))


def intersects(a: IntervalSet, b: IntervalSet) -> bool:
    """True iff the two closed unions share at least one point (exact)."""
    aa, bb = _common_lattice(a, b)
    if aa.lo.size == 0 or bb.lo.size == 0:
        return False
    # for each interval of a, the candidate b-intervals start at searchsorted
    idx = np.searchsorted(bb.lo, aa.hi, side="right") - 1
    ok = idx >= 0
    if not np.any(ok):
        return False
    cand_hi = bb.hi[np.clip(idx, 0, None)]
    return bool(np.any(ok & (cand_hi >= aa.lo)))


def wrap_mod(a: IntervalSet, period: Number) -> IntervalSet:
    """Reduce a union of intervals into the fundamental domain [0, period]."""
    fp = _to_fraction(period)
    if a.exact and fp is not None:
        den = a.den * fp.denominator // math.gcd(a.den, fp.denominator)
        f = den // a.den
        if max(_max_abs(a.lo), _max_abs(a.hi)) * f < _INT_LIMIT:
            alo, ahi = a.lo * f, a.hi * f
            p = int(fp * den)
            if np.any(ahi - alo >= p):
                return IntervalSet.from_pairs([(0, fp)], depth=a.depth)
            qlo = np.floor_divide(alo, p)
            lo = alo - qlo * p
            hi = ahi - qlo * p
            plain = hi <= p
            wrap = ~plain
            n_wrap = int(np.sum(wrap))
            # an interval shorter than the period wraps across the edge at most once
            new_lo = np.concatenate(
                [lo[plain], lo[wrap], np.zeros(n_wrap, dtype=np.int64)]
            )
            new_hi = np.concatenate(
                [hi[plain], np.full(n_wrap, p, dtype=np.int64), hi[wrap] - p]
            )
            new_lo, new_hi = _merge_int(new_lo, new_hi)
            return IntervalSet(new_lo, new_hi, den, a.depth)
    flo = np.asarray(a.lo, dtype=float)
    fhi = np.asarray(a.hi, dtype=float)
    if a.exact:
        flo, fhi = flo / a.den, fhi / a.den
    p = float(period)
    if np.any(fhi - flo >= p):
        return IntervalSet.from_pairs([(0.0, p)], depth=a.depth)
    q = np.floor(flo / p)
    lo = flo - q * p
    hi = fhi - q * p
    pairs = []
    for L, H in zip(lo, hi):
        if H <= p:
            pairs.append((L, H))
        else:
            pairs.append((L, p))
            pairs.append((0.0, H - p))
    out = IntervalSet.from_pairs(pairs, depth=a.depth)
    return out
