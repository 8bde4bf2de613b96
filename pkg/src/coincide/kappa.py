"""Lower and upper brackets for the projective multiplicity function kappa(d).

The nontrivial lower bound comes from the coincidence theorem for maps
``RP^(2^l - 2 - m) -> R^(2^l - 2)``: a coincident q-tuple exists whenever
``q`` is a power of two and ``q * (m + 1) < 2^l - 1``.  Together with the
floor ``kappa(d) >= 2`` for ``d >= 2`` (RP^d and S^d are not homeomorphic)
and the upper bound ``kappa(d) <= 4 d`` this gives the brackets tabulated
here.  Everything is exact integer arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

FLOOR_WITNESS = "non-homeomorphism floor"


@dataclass(frozen=True)
class TheoremWitness:
    l: int
    m: int
    q: int

    @property
    def d(self) -> int:
        return 2**self.l - 2 - self.m

    def holds(self) -> bool:
        """Re-evaluate the theorem hypothesis for this triple."""
        q = self.q
        return (
            self.m >= 0
            and q >= 1
            and q & (q - 1) == 0
            and q * (self.m + 1) < 2**self.l - 1
        )

    def to_dict(self) -> dict:
        return {"l": self.l, "m": self.m, "q": self.q}


Witness = Union[TheoremWitness, str]


@dataclass(frozen=True)
class KappaBound:
    d: int
    lower: int
    witness: Witness
    upper: int
    theorem: int

    def to_dict(self) -> dict:
        w = self.witness.to_dict() if isinstance(self.witness, TheoremWitness) else self.witness
        return {
            "d": self.d,
            "theorem_bound": self.theorem,
            "combined_lower": self.lower,
            "upper": self.upper,
            "witness": w,
        }


def _check_d(d) -> None:
    if isinstance(d, bool) or not isinstance(d, int):
        raise TypeError(f"dimension must be an int, got {type(d).__name__}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")


def _largest_power_of_two_at_most(n: int) -> int:
    return 1 << (n.bit_length() - 1)


def _l_range(d: int) -> range:
    # The domain dimension 2^l - 2 - m equals d with m >= 0, so l starts at
    # ceil(log2(d + 2)).  A q >= 2 needs 2(m + 1) < 2^l - 1 with
    # m + 1 = 2^l - 1 - d, i.e. 2^l < 2d + 1; past that only q = 1 survives,
    # so the scan stops at the largest l with 2^l <= 2d.
    l_lo = (d + 1).bit_length()
    l_hi = max(l_lo, (2 * d).bit_length() - 1)
    return range(l_lo, l_hi + 1)


def theorem_witness(d: int) -> TheoremWitness:
    """Best (l, m, q) for dimension ``d``; ties keep the smallest l."""
    _check_d(d)
    best = None
    for l in _l_range(d):
        m = 2**l - 2 - d
        # q (m + 1) < 2^l - 1  <=>  q <= (2^l - 2) // (m + 1)
        q = _largest_power_of_two_at_most((2**l - 2) // (m + 1))
        if best is None or q > best.q:
            best = TheoremWitness(l, m, q)
    return best


def theorem_bound(d: int) -> int:
    """Largest q the coincidence theorem guarantees in dimension ``d`` (1 if none)."""
    return theorem_witness(d).q


def combined_lower_bound(d: int) -> KappaBound:
    w = theorem_witness(d)
    floor = 2 if d >= 2 else 1
    if w.q >= floor:
        return KappaBound(d=d, lower=w.q, witness=w, upper=4 * d, theorem=w.q)
    return KappaBound(d=d, lower=floor, witness=FLOOR_WITNESS, upper=4 * d, theorem=w.q)


def bound_table(d_min: int, d_max: int) -> list[KappaBound]:
    _check_d(d_min)
    _check_d(d_max)
    if d_min > d_max:
        raise ValueError(f"empty range: d_min={d_min} > d_max={d_max}")
    return [combined_lower_bound(d) for d in range(d_min, d_max + 1)]
