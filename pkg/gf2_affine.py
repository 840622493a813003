"""
Boolean min-tuples and GF(2) linear algebra.

Bit vectors are packed into Python ints, bit i holding coordinate i, so
row operations are single XORs regardless of width.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from solver_errors import NotNearAffineError

logger = logging.getLogger(__name__)


def ones_mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True)
class BitTuple:
    width: int
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.width:
            raise ValueError(f"mask {self.mask:b} does not fit width {self.width}")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> 'BitTuple':
        mask = 0
        for i, bit in enumerate(bits):
            if bit not in (0, 1):
                raise ValueError(f"bit {bit!r} is not 0 or 1")
            mask |= bit << i
        return cls(len(bits), mask)

    @classmethod
    def ones(cls, width: int) -> 'BitTuple':
        return cls(width, ones_mask(width))

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.width))

    def __xor__(self, other: 'BitTuple') -> 'BitTuple':
        return BitTuple(self.width, self.mask ^ other.mask)

    def flipped(self) -> 'BitTuple':
        return BitTuple(self.width, self.mask ^ ones_mask(self.width))

    def is_ones(self) -> bool:
        return self.mask == ones_mask(self.width)

    def __str__(self):
        return ''.join(str(b) for b in self.bits)


@dataclass(frozen=True)
class BoolRelation:
    """Canonical set of bit tuples of one width."""

    width: int
    members: FrozenSet[BitTuple] = frozenset()

    def __post_init__(self):
        members = frozenset(self.members)
        for t in members:
            if t.width != self.width:
                raise ValueError(f"tuple {t} does not have width {self.width}")
        object.__setattr__(self, 'members', members)

    @classmethod
    def from_bits(cls, width: int, rows: Iterable[Sequence[int]]) -> 'BoolRelation':
        return cls(width, frozenset(BitTuple.from_bits(r) for r in rows))

    @classmethod
    def from_strings(cls, width: int, rows: Iterable[str]) -> 'BoolRelation':
        return cls.from_bits(width, [[int(ch) for ch in row] for row in rows])

    def sorted_members(self) -> List[BitTuple]:
        return sorted(self.members, key=lambda t: t.bits)

    def without_ones(self) -> 'BoolRelation':
        return BoolRelation(self.width, frozenset(t for t in self.members if not t.is_ones()))

    def is_all_but_ones(self) -> bool:
        """True when the relation holds every tuple except 1...1."""
        return len(self.without_ones().members) == (1 << self.width) - 1

    def __contains__(self, t: BitTuple) -> bool:
        return t in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __str__(self):
        return '{' + ','.join(str(t) for t in self.sorted_members()) + '}'


@dataclass(frozen=True)
class GF2System:
    """
    Linear system over GF(2): rows[i] . c = rhs[i] (rhs all zero when None).
    Rows are packed ints of the given width.
    """

    width: int
    rows: Tuple[int, ...] = ()
    rhs: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'rows', tuple(self.rows))
        for row in self.rows:
            if row < 0 or row >> self.width:
                raise ValueError(f"row {row:b} does not fit width {self.width}")
        if self.rhs is not None:
            object.__setattr__(self, 'rhs', tuple(self.rhs))
            if len(self.rhs) != len(self.rows):
                raise ValueError("rhs length must equal the row count")

    @classmethod
    def from_bit_rows(cls, width: int, rows: Iterable[Sequence[int]],
                      rhs: Optional[Sequence[int]] = None) -> 'GF2System':
        return cls(width, tuple(BitTuple.from_bits(r).mask for r in rows),
                   tuple(rhs) if rhs is not None else None)

    def row_bits(self) -> List[Tuple[int, ...]]:
        return [BitTuple(self.width, row).bits for row in self.rows]

    def is_satisfied_by(self, vector: BitTuple) -> bool:
        targets = self.rhs or (0,) * len(self.rows)
        return all(bin(row & vector.mask).count('1') % 2 == b for row, b in zip(self.rows, targets))


@dataclass(frozen=True)
class GF2Solution:
    particular: BitTuple
    kernel: Tuple[BitTuple, ...]


@dataclass(frozen=True)
class NearAffineCheck:
    near_affine: bool
    counterexample: Optional[Tuple[BitTuple, BitTuple, BitTuple]] = None


def min_tuple(values: Sequence) -> BitTuple:
    """0 exactly at the positions holding the minimum value."""
    if not values:
        raise ValueError("min-tuple of an empty tuple is undefined")
    low = min(values)
    return BitTuple.from_bits([0 if v == low else 1 for v in values])


def near_affine_operation(s: BitTuple, t: BitTuple) -> BitTuple:
    """a(x, y) = x xor y xor 1."""
    return (s ^ t).flipped()


def is_near_affine(relation: BoolRelation) -> NearAffineCheck:
    """T is near-affine iff T + {1...1} is closed under a(x, y) = x ^ y ^ 1."""
    ones = BitTuple.ones(relation.width)
    extended = relation.sorted_members()
    if ones not in relation.members:
        extended.append(ones)
    closed = set(extended)
    for s in extended:
        for t in extended:
            image = near_affine_operation(s, t)
            if image not in closed:
                return NearAffineCheck(False, (s, t, image))
    return NearAffineCheck(True)


def _reduce_basis(vectors: Iterable[int]) -> List[int]:
    """Row-reduced basis of the span, ordered by pivot (lowest bit first)."""
    basis = []
    for v in vectors:
        for b in basis:
            if v & (b & -b):
                v ^= b
        if v:
            low = v & -v
            basis = [b ^ v if b & low else b for b in basis]
            basis.append(v)
    return sorted(basis, key=lambda b: b & -b)


def span(basis: Sequence[int]) -> List[int]:
    vectors = [0]
    for b in basis:
        vectors += [v ^ b for v in vectors]
    return vectors


def linear_part(relation: BoolRelation) -> List[int]:
    """Reduced basis of span{t ^ 1...1 : t in T}."""
    ones = ones_mask(relation.width)
    return _reduce_basis(t.mask ^ ones for t in relation.sorted_members())


def near_affine_closure(relation: BoolRelation) -> BoolRelation:
    """Smallest near-affine superset (1...1 excluded)."""
    ones = ones_mask(relation.width)
    members = frozenset(BitTuple(relation.width, v ^ ones) for v in span(linear_part(relation)))
    return BoolRelation(relation.width, members).without_ones()


def parity_check(relation: BoolRelation) -> GF2System:
    """
    Homogeneous system H with H.c = 0 iff c ^ 1...1 is in T + {1...1}.

    Raises:
        NotNearAffineError: if T is not near-affine
    """
    check = is_near_affine(relation)
    if not check.near_affine:
        s, t, image = check.counterexample
        raise NotNearAffineError(f"relation {relation} is not near-affine: a({s},{t}) = {image}")
    basis = linear_part(relation)
    solution = solve_gf2(GF2System(relation.width, tuple(basis)))
    return GF2System(relation.width, tuple(v.mask for v in solution.kernel))


def solve_gf2(system: GF2System, forced: Optional[Mapping[int, int]] = None) -> Optional[GF2Solution]:
    """
    Gaussian elimination with the lowest column pivoted first.

    Args:
        system: Rows and optional right-hand side
        forced: Coordinate -> bit assignments added as extra equations

    Returns:
        GF2Solution with a particular solution (free coordinates 0) and a
        basis of the homogeneous kernel, or None when infeasible
    """
    width = system.width
    rhs_bit = 1 << width
    targets = system.rhs or (0,) * len(system.rows)
    rows = [row | (rhs_bit if b else 0) for row, b in zip(system.rows, targets)]
    for coord, bit in sorted((forced or {}).items()):
        if not 0 <= coord < width:
            raise ValueError(f"forced coordinate {coord} out of range for width {width}")
        rows.append((1 << coord) | (rhs_bit if bit else 0))

    pivots = []  # (column, row)
    for col in range(width):
        pivot_index = next((i for i, r in enumerate(rows) if (r >> col) & 1), None)
        if pivot_index is None:
            continue
        pivot = rows.pop(pivot_index)
        rows = [r ^ pivot if (r >> col) & 1 else r for r in rows]
        pivots = [(c, r ^ pivot if (r >> col) & 1 else r) for c, r in pivots]
        pivots.append((col, pivot))

    if any(r == rhs_bit for r in rows):
        logger.debug("GF(2) system is infeasible")
        return None

    particular = 0
    for col, row in pivots:
        if row & rhs_bit:
            particular |= 1 << col
    pivot_cols = {col for col, _ in pivots}
    kernel = []
    for free in range(width):
        if free in pivot_cols:
            continue
        vector = 1 << free
        for col, row in pivots:
            if (row >> free) & 1:
                vector |= 1 << col
        kernel.append(BitTuple(width, vector))
    return GF2Solution(BitTuple(width, particular), tuple(kernel))
