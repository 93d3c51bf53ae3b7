"""Finite forcing posets: conditions, the extension order, generic filters.

An instance fixes the ambient finite context: a poset of sites, a fiber
count, a slot bound, and two cutoffs (condition domain size, support
size).  Cells are (site, fiber, slot) triples.  A condition is a finite
partial bit assignment on cells; the empty condition is the maximum of
the order, and p extends q when p's assignment is a super-map of q's.
With the default domain cutoff (the full cell count) the atoms of the
order are the total assignments, and generic filters are exactly their
up-closures.

A staged instance replaces the site poset by an increasing list of stage
sizes; fiber and slot bounds vary per stage and condition domains obey a
per-stage cumulative bound instead of a single cutoff.

Everything here is immutable after construction and all operations are
pure functions, so sweeps can be partitioned across workers freely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Optional, Union

from .errors import InvalidInstance, MismatchedInstance

Site = Union[str, int]
Pair = tuple  # (site, fiber)
Cell = tuple  # (site, fiber, slot)


def _transitive_reflexive_closure(elements, pairs):
    rel = {(x, x) for x in elements}
    rel.update(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(rel):
            for (c, d) in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return rel


@dataclass(frozen=True)
class Poset:
    """A finite poset given by its elements and the full order relation.

    The relation must contain every reflexive pair and be antisymmetric
    and transitive; use :meth:`from_pairs` to build from a bare set of
    comparabilities (it closes the relation first, so cycles surface as
    antisymmetry violations).
    """

    elements: tuple
    relation: frozenset

    def __post_init__(self):
        elems = tuple(sorted(set(self.elements)))
        if len(elems) != len(tuple(self.elements)):
            raise InvalidInstance("poset elements must be distinct")
        if not elems:
            raise InvalidInstance("poset needs at least one element")
        object.__setattr__(self, "elements", elems)
        rel = frozenset((x, y) for x, y in self.relation)
        object.__setattr__(self, "relation", rel)
        known = set(elems)
        for x, y in rel:
            if x not in known or y not in known:
                raise InvalidInstance(f"relation pair {(x, y)!r} uses unknown elements")
        for x in elems:
            if (x, x) not in rel:
                raise InvalidInstance(f"order must be reflexive: missing {(x, x)!r}")
        for x, y in rel:
            if x != y and (y, x) in rel:
                raise InvalidInstance(f"order must be antisymmetric: {x!r} and {y!r} form a cycle")
        for x, y in rel:
            for a, b in rel:
                if a == y and (x, b) not in rel:
                    raise InvalidInstance(f"order must be transitive: missing {(x, b)!r}")

    @classmethod
    def from_pairs(cls, elements, pairs=()):
        elements = tuple(elements)
        return cls(elements, frozenset(_transitive_reflexive_closure(elements, pairs)))

    @classmethod
    def antichain(cls, elements):
        return cls.from_pairs(elements)

    @classmethod
    def chain(cls, elements):
        elements = tuple(elements)
        return cls.from_pairs(elements, zip(elements, elements[1:]))

    def leq(self, x, y) -> bool:
        return (x, y) in self.relation

    def downset(self, z) -> frozenset:
        return frozenset(x for x in self.elements if self.leq(x, z))

    def __repr__(self):
        strict = sorted((x, y) for x, y in self.relation if x != y)
        return f"Poset({list(self.elements)!r}, {strict!r})"


@dataclass(frozen=True)
class Instance:
    """The ambient context for a flat forcing poset.

    fibers bounds the fiber index at every site, slots the slot index of
    every row.  support_cutoff bounds support sets, domain_cutoff bounds
    condition domains (None means the full cell count, i.e. conditions
    may be total).

    The validator rejects any instance on which some admissible support
    would pointwise-stabilize only the identity: a support of size c can
    spoil transpositions at floor(c/(fibers-1)) sites at worst, so we
    need support_cutoff < sites * (fibers - 1).
    """

    poset: Poset
    fibers: int
    slots: int
    support_cutoff: int
    domain_cutoff: Optional[int] = None

    def __post_init__(self):
        if self.fibers < 1 or self.slots < 1:
            raise InvalidInstance("fiber and slot bounds must be positive")
        if self.support_cutoff < 1:
            raise InvalidInstance("support cutoff must be positive")
        n_cells = len(self.poset.elements) * self.fibers * self.slots
        if self.domain_cutoff is None:
            object.__setattr__(self, "domain_cutoff", n_cells)
        if self.domain_cutoff < 1:
            raise InvalidInstance("domain cutoff must be positive")
        room = len(self.poset.elements) * (self.fibers - 1)
        if self.fibers < 2 or self.support_cutoff >= room:
            raise InvalidInstance(
                "trivial-group exclusion: a support of size "
                f"{self.support_cutoff} can spoil every fiber transposition "
                f"(need fibers >= 2 and support cutoff < sites*(fibers-1) = {room})")

    @property
    def sites(self) -> tuple:
        return self.poset.elements

    def fiber_count(self, site) -> int:
        return self.fibers

    def slot_count(self, site) -> int:
        return self.slots

    @cached_property
    def cells(self) -> tuple:
        return tuple((z, a, g)
                     for z in self.sites
                     for a in range(self.fibers)
                     for g in range(self.slots))

    @cached_property
    def pairs(self) -> tuple:
        return tuple((z, a) for z in self.sites for a in range(self.fibers))

    @cached_property
    def cell_index(self) -> dict:
        return {cell: i for i, cell in enumerate(self.cells)}

    def cell_ok(self, cell) -> bool:
        if len(cell) != 3:
            return False
        site, fiber, slot = cell
        return (site in self.cell_sites
                and 0 <= fiber < self.fibers
                and 0 <= slot < self.slots)

    @cached_property
    def cell_sites(self) -> frozenset:
        return frozenset(self.sites)

    def condition_violation(self, items) -> Optional[str]:
        if len(items) > self.domain_cutoff:
            return (f"condition has {len(items)} cells, "
                    f"domain cutoff is {self.domain_cutoff}")
        return None

    def describe(self) -> dict:
        return {
            "kind": "flat",
            "elements": list(self.sites),
            "leq": sorted([list(p) for p in self.poset.relation if p[0] != p[1]]),
            "fibers": self.fibers,
            "slots": self.slots,
            "support_cutoff": self.support_cutoff,
            "domain_cutoff": self.domain_cutoff,
        }


@dataclass(frozen=True)
class StagedInstance:
    """A product of stage posets with per-stage cumulative domain bounds.

    Stage i has stage_sizes[i] fibers and as many slots.  A condition
    must keep, for every stage j, fewer than stage_sizes[j] cells at
    stages <= j.  Each stage needs support_cutoff + 2 fibers of headroom
    so no admissible support can spoil all of a stage's transpositions.
    """

    stage_sizes: tuple
    support_cutoff: int

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.stage_sizes)
        object.__setattr__(self, "stage_sizes", sizes)
        if not sizes:
            raise InvalidInstance("need at least one stage")
        if self.support_cutoff < 1:
            raise InvalidInstance("support cutoff must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidInstance("stage sizes must be strictly increasing")
        if sizes[0] < self.support_cutoff + 2:
            raise InvalidInstance(
                f"stage size {sizes[0]} leaves no transposition headroom "
                f"(need every stage >= support_cutoff + 2 = {self.support_cutoff + 2})")

    @property
    def sites(self) -> tuple:
        return tuple(range(len(self.stage_sizes)))

    def fiber_count(self, site) -> int:
        return self.stage_sizes[site]

    def slot_count(self, site) -> int:
        return self.stage_sizes[site]

    @cached_property
    def cells(self) -> tuple:
        return tuple((i, a, g)
                     for i in self.sites
                     for a in range(self.stage_sizes[i])
                     for g in range(self.stage_sizes[i]))

    @cached_property
    def pairs(self) -> tuple:
        return tuple((i, a) for i in self.sites for a in range(self.stage_sizes[i]))

    @cached_property
    def cell_index(self) -> dict:
        return {cell: i for i, cell in enumerate(self.cells)}

    @cached_property
    def cell_sites(self) -> frozenset:
        return frozenset(self.sites)

    def cell_ok(self, cell) -> bool:
        if len(cell) != 3:
            return False
        site, fiber, slot = cell
        if site not in self.cell_sites:
            return False
        size = self.stage_sizes[site]
        return 0 <= fiber < size and 0 <= slot < size

    @property
    def domain_cutoff(self) -> int:
        # largest domain any condition can have: all stages saturated
        return self.stage_sizes[-1] - 1

    def condition_violation(self, items) -> Optional[str]:
        counts = [0] * len(self.stage_sizes)
        for (site, _, _), _ in items:
            counts[site] += 1
        running = 0
        for j, size in enumerate(self.stage_sizes):
            running += counts[j]
            if running >= size:
                return (f"condition keeps {running} cells at stages <= {j}, "
                        f"bound is {size - 1}")
        return None

    def describe(self) -> dict:
        return {
            "kind": "staged",
            "stage_sizes": list(self.stage_sizes),
            "support_cutoff": self.support_cutoff,
        }


AnyInstance = Union[Instance, StagedInstance]


def _same_instance(a, b):
    if a is not b and a != b:
        raise MismatchedInstance(f"{a!r} vs {b!r}")


class Condition:
    """A finite partial bit assignment on the instance's cells.

    Stored canonically as a cell-sorted tuple of (cell, bit) pairs;
    equality is structural.  The empty condition is the maximum.
    """

    __slots__ = ("inst", "items", "_map", "_hash")

    def __init__(self, inst, assignment=()):
        if isinstance(assignment, Mapping):
            assignment = assignment.items()
        seen = {}
        for cell, bit in assignment:
            cell = tuple(cell)
            if not inst.cell_ok(cell):
                raise InvalidInstance(f"cell {cell!r} outside instance bounds")
            if bit not in (0, 1):
                raise InvalidInstance(f"bit for cell {cell!r} must be 0 or 1")
            if seen.setdefault(cell, bit) != bit:
                raise InvalidInstance(f"conflicting bits for cell {cell!r}")
        items = tuple(sorted(seen.items()))
        violation = inst.condition_violation(items)
        if violation is not None:
            raise InvalidInstance(violation)
        self.inst = inst
        self.items = items
        self._map = seen
        self._hash = hash((inst, items))

    @classmethod
    def top(cls, inst):
        return cls(inst)

    def value(self, cell):
        return self._map.get(tuple(cell))

    def domain(self) -> tuple:
        return tuple(cell for cell, _ in self.items)

    def touched_fibers(self, site) -> frozenset:
        return frozenset(f for (s, f, _), _ in self.items if s == site)

    def extend_with(self, extra) -> "Condition":
        if isinstance(extra, Mapping):
            extra = extra.items()
        return Condition(self.inst, list(self.items) + [(tuple(c), b) for c, b in extra])

    def __len__(self):
        return len(self.items)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Condition):
            return NotImplemented
        return (self._hash == other._hash and self.items == other.items
                and (self.inst is other.inst or self.inst == other.inst))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.items:
            return "Condition(top)"
        body = ", ".join(f"{cell}:{bit}" for cell, bit in self.items)
        return f"Condition({body})"


@dataclass(frozen=True)
class Compat:
    """Outcome of a compatibility test.

    ok means the two conditions agree on their common domain.  witness
    is their union when it is representable; when the union would break
    the domain cutoff the conditions are still compatible but the
    witness is omitted and cutoff_exceeded is set.
    """

    ok: bool
    witness: Optional[Condition] = None
    cutoff_exceeded: bool = False
    conflict: Optional[Cell] = None

    def __bool__(self):
        return self.ok


def extends(p: Condition, q: Condition) -> bool:
    """True iff p carries at least all of q's assignment (p is stronger)."""
    _same_instance(p.inst, q.inst)
    if len(q.items) > len(p.items):
        return False
    get = p._map.get
    return all(get(cell) == bit for cell, bit in q.items)


def compatible(p: Condition, q: Condition) -> Compat:
    """Test agreement on the common domain and produce the merge witness."""
    _same_instance(p.inst, q.inst)
    small, large = (p, q) if len(p) <= len(q) else (q, p)
    get = large._map.get
    for cell, bit in small.items:
        other = get(cell)
        if other is not None and other != bit:
            return Compat(False, conflict=cell)
    merged = dict(large._map)
    merged.update(small._map)
    if p.inst.condition_violation(tuple(merged.items())) is not None:
        return Compat(True, witness=None, cutoff_exceeded=True)
    return Compat(True, witness=Condition(p.inst, merged))


class GenericFilter:
    """The up-closure of a total assignment.

    A condition belongs to the filter iff its assignment agrees with the
    total one everywhere on its domain.
    """

    __slots__ = ("inst", "bits", "_hash")

    def __init__(self, inst, bits):
        bits = tuple(bits)
        if len(bits) != len(inst.cells) or any(b not in (0, 1) for b in bits):
            raise InvalidInstance("need one bit per cell of the instance")
        self.inst = inst
        self.bits = bits
        self._hash = hash((inst, bits))

    @classmethod
    def from_assignment(cls, inst, mapping):
        return cls(inst, tuple(mapping[cell] for cell in inst.cells))

    def bit(self, cell) -> int:
        return self.bits[self.inst.cell_index[tuple(cell)]]

    def contains(self, cond: Condition) -> bool:
        _same_instance(self.inst, cond.inst)
        index = self.inst.cell_index
        bits = self.bits
        return all(bits[index[cell]] == bit for cell, bit in cond.items)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, GenericFilter):
            return NotImplemented
        return self.bits == other.bits and (self.inst is other.inst or self.inst == other.inst)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"GenericFilter({''.join(map(str, self.bits))})"


def generic_filters(inst, below: Optional[Condition] = None) -> Iterator[GenericFilter]:
    """All generic filters containing `below`, i.e. all total assignments
    agreeing with it, in lexicographic order of the free cells."""
    if below is None:
        below = Condition.top(inst)
    _same_instance(inst, below.inst)
    fixed = below._map
    free = [cell for cell in inst.cells if cell not in fixed]
    index = inst.cell_index
    base = [0] * len(inst.cells)
    for cell, bit in fixed.items():
        base[index[cell]] = bit
    for combo in itertools.product((0, 1), repeat=len(free)):
        bits = list(base)
        for cell, bit in zip(free, combo):
            bits[index[cell]] = bit
        yield GenericFilter(inst, bits)


def iter_conditions(inst, max_dom: Optional[int] = None) -> Iterator[Condition]:
    """All conditions with domain size at most max_dom (default: the
    instance cutoff), ordered by size, then cells, then bits."""
    limit = inst.domain_cutoff if max_dom is None else min(max_dom, inst.domain_cutoff)
    cells = inst.cells
    for k in range(limit + 1):
        for combo in itertools.combinations(cells, k):
            for bits in itertools.product((0, 1), repeat=k):
                items = tuple(zip(combo, bits))
                if inst.condition_violation(items) is None:
                    yield Condition(inst, items)
