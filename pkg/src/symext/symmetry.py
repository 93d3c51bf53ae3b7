"""Fiber permutations, their lifted action, supports, and subgroup machinery.

The group consists of the permutations of (site, fiber) pairs that
preserve the site coordinate and move only finitely many pairs (on a
staged instance, fewer pairs per stage than the stage size).  The
pointwise stabilizer of a support set E is generated, inside this group,
by the transpositions of two same-site fibers that both avoid E; that
generator list is what every symmetry test runs on, which suffices
because the lifted action is a group homomorphism.

Subgroups are never materialized.  Membership of a group in the support
filter is always certified by a support set E with |E| <= support
cutoff, and conjugation is decided by mapping generator sets through the
permutation (exact for these stabilizers, which move a fiber iff it is
free).  Tests cross-check against brute-force closures at small scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .core import Condition, StagedInstance, _same_instance
from .errors import InvalidInstance
from .names import Name, make_name, name_cells, set_name


class FiberPermutation:
    """A finitely-supported, site-preserving permutation of (site, fiber)
    pairs, stored as its moved-pair mapping."""

    __slots__ = ("inst", "moved", "_map", "_hash")

    def __init__(self, inst, mapping):
        if isinstance(mapping, Mapping):
            mapping = mapping.items()
        moved = {}
        pair_set = set(inst.pairs)
        for src, dst in mapping:
            src, dst = tuple(src), tuple(dst)
            if src not in pair_set or dst not in pair_set:
                raise InvalidInstance(f"pair {src!r} -> {dst!r} outside instance bounds")
            if src == dst:
                continue
            if src[0] != dst[0]:
                raise InvalidInstance(f"permutation must preserve sites: {src!r} -> {dst!r}")
            if moved.setdefault(src, dst) != dst:
                raise InvalidInstance(f"pair {src!r} mapped twice")
        if set(moved.values()) != set(moved):
            raise InvalidInstance("moved pairs must permute among themselves")
        if isinstance(inst, StagedInstance):
            for stage in inst.sites:
                count = sum(1 for (s, _) in moved if s == stage)
                if count >= inst.stage_sizes[stage]:
                    raise InvalidInstance(
                        f"permutation moves {count} fibers at stage {stage}, "
                        f"bound is {inst.stage_sizes[stage] - 1}")
        self.inst = inst
        self.moved = tuple(sorted(moved.items()))
        self._map = moved
        self._hash = hash((inst, self.moved))

    @classmethod
    def identity(cls, inst):
        return cls(inst, ())

    @classmethod
    def transposition(cls, inst, site, a, b):
        return cls(inst, {(site, a): (site, b), (site, b): (site, a)})

    @classmethod
    def from_cycles(cls, inst, cycles):
        mapping = {}
        for cycle in cycles:
            cycle = [tuple(p) for p in cycle]
            for src, dst in zip(cycle, cycle[1:] + cycle[:1]):
                mapping[src] = dst
        return cls(inst, mapping)

    def __call__(self, pair):
        return self._map.get(tuple(pair), tuple(pair))

    def apply_cell(self, cell):
        site, fiber, slot = cell
        nsite, nfiber = self((site, fiber))
        return (nsite, nfiber, slot)

    def compose(self, other: "FiberPermutation") -> "FiberPermutation":
        """self after other: (self * other)(x) = self(other(x))."""
        _same_instance(self.inst, other.inst)
        support = set(self._map) | set(other._map)
        return FiberPermutation(self.inst, {p: self(other(p)) for p in support})

    __mul__ = compose

    def inverse(self) -> "FiberPermutation":
        return FiberPermutation(self.inst, {dst: src for src, dst in self.moved})

    @property
    def is_identity(self) -> bool:
        return not self.moved

    def cycles(self) -> list:
        out = []
        seen = set()
        for src, _ in self.moved:
            if src in seen:
                continue
            cycle = [src]
            seen.add(src)
            nxt = self(src)
            while nxt != src:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            out.append(cycle)
        return out

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FiberPermutation):
            return NotImplemented
        return self.moved == other.moved and (self.inst is other.inst or self.inst == other.inst)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if self.is_identity:
            return "FiberPermutation(id)"
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())
        return f"FiberPermutation({body})"


def act_condition(pi: FiberPermutation, p: Condition) -> Condition:
    """Relabel each cell's (site, fiber) by pi, keeping slot and bit."""
    _same_instance(pi.inst, p.inst)
    return Condition(p.inst, {pi.apply_cell(cell): bit for cell, bit in p.items})


_ACT_MEMO: dict = {}


def act_name(pi: FiberPermutation, x: Name) -> Name:
    """The lifted action on names: relabel every condition, recursively."""
    if x.inst is None:
        return x
    _same_instance(pi.inst, x.inst)
    if pi.is_identity:
        return x
    key = (pi, x)
    cached = _ACT_MEMO.get(key)
    if cached is not None:
        return cached
    result = make_name((act_condition(pi, cond), act_name(pi, sub))
                       for cond, sub in x.entries)
    _ACT_MEMO[key] = result
    return result


def check_support(inst, support) -> frozenset:
    """Validate a support set against the instance bounds and cutoff."""
    support = frozenset(tuple(p) for p in support)
    pair_set = set(inst.pairs)
    for p in support:
        if p not in pair_set:
            raise InvalidInstance(f"support pair {p!r} outside instance bounds")
    if len(support) > inst.support_cutoff:
        raise InvalidInstance(
            f"support has {len(support)} pairs, cutoff is {inst.support_cutoff}")
    return support


def act_support(pi: FiberPermutation, support) -> frozenset:
    return frozenset(pi(p) for p in support)


def in_fix(pi: FiberPermutation, support) -> bool:
    """True iff pi fixes every pair of the support pointwise."""
    support = {tuple(p) for p in support}
    return all(src not in support for src, _ in pi.moved)


def fix_generators(inst, support, max_site=None) -> list:
    """Transpositions of two same-site fibers both avoiding the support;
    these generate the pointwise stabilizer within the group.  max_site
    restricts to sites up to it (stage subgroups on staged instances)."""
    support = check_support(inst, support)
    gens = []
    for site in inst.sites:
        if max_site is not None and site > max_site:
            continue
        free = [f for f in range(inst.fiber_count(site)) if (site, f) not in support]
        for a, b in itertools.combinations(free, 2):
            gens.append(FiberPermutation.transposition(inst, site, a, b))
    return gens


def is_symmetric_under(inst, x: Name, support) -> bool:
    """True iff every stabilizer generator of the support fixes x literally."""
    if x.inst is not None:
        _same_instance(inst, x.inst)
    return all(act_name(g, x) is x for g in fix_generators(inst, support))


_SUPPORT_MEMO: dict = {}


def infer_min_support(inst, x: Name) -> Optional[frozenset]:
    """The least support of x, or None if nothing within the cutoff works.

    Ties are broken by size, then by preferring witnesses drawn from the
    pairs the name itself mentions, then lexicographically.  (At small
    fiber counts a support can protect a row by blocking every other
    fiber of its site; the canonical witness is still the row's own
    pair, and this ordering selects it.)
    """
    key = (inst, x)
    if key in _SUPPORT_MEMO:
        return _SUPPORT_MEMO[key]
    own = {(cell[0], cell[1]) for cell in name_cells(x)}
    result = None
    pairs = inst.pairs
    for size in range(inst.support_cutoff + 1):
        combos = sorted(itertools.combinations(pairs, size),
                        key=lambda c: (sum(1 for p in c if p not in own), c))
        for combo in combos:
            if is_symmetric_under(inst, x, combo):
                result = frozenset(combo)
                break
        if result is not None:
            break
    _SUPPORT_MEMO[key] = result
    return result


_HS_MEMO: dict = {}


def is_hs(inst, x: Name) -> bool:
    """Hereditarily symmetric: x has a support within the cutoff, and so
    does every hereditary subname."""
    key = (inst, x)
    if key in _HS_MEMO:
        return _HS_MEMO[key]
    ok = infer_min_support(inst, x) is not None and all(
        is_hs(inst, sub) for _, sub in x.entries)
    _HS_MEMO[key] = ok
    return ok


def generator_closure(gens: Iterable[FiberPermutation], max_len: int) -> list:
    """All products of at most max_len generators (including the identity),
    deduplicated, in a deterministic order.

    On staged instances a product can overflow the per-stage moved bound
    (two transpositions compose to a 3-cycle); such products are not
    group elements and are skipped, the same way condition merges past
    the domain cutoff stay unrepresentable.
    """
    gens = list(gens)
    if not gens:
        return []
    ident = FiberPermutation.identity(gens[0].inst)
    words = {ident}
    frontier = [ident]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for g in gens:
                try:
                    wg = w * g
                except InvalidInstance:
                    continue
                if wg not in words:
                    words.add(wg)
                    nxt.append(wg)
        frontier = nxt
    return sorted(words, key=lambda p: (len(p.moved), p.moved))


def generated_group(gens: Iterable[FiberPermutation], max_size: int = 100000) -> set:
    """Brute-force closure under composition; small scales only."""
    gens = list(gens)
    if not gens:
        return set()
    ident = FiberPermutation.identity(gens[0].inst)
    group = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for w in frontier:
            for g in gens:
                try:
                    wg = w * g
                except InvalidInstance:
                    continue
                if wg not in group:
                    group.add(wg)
                    nxt.append(wg)
                    if len(group) > max_size:
                        raise InvalidInstance("generated group exceeds size bound")
        frontier = nxt
    return group


def conjugate(pi: FiberPermutation, g: FiberPermutation) -> FiberPermutation:
    """pi g pi^-1, built in one step: it maps pi(src) to pi(dst) for every
    moved pair of g.  (Composing pairwise can pass through an oversized
    intermediate on staged instances; the conjugate itself always has
    g's per-stage moved counts.)"""
    _same_instance(pi.inst, g.inst)
    return FiberPermutation(g.inst, {pi(src): pi(dst) for src, dst in g.moved})


@dataclass(frozen=True)
class ConjugationReport:
    """Verdict of the conjugation law for one (permutation, support) pair."""

    ok: bool
    support: frozenset
    support_image: frozenset
    witness: Optional[FiberPermutation] = None

    def __bool__(self):
        return self.ok


def conjugation_check(inst, pi: FiberPermutation, support) -> ConjugationReport:
    """Verify that conjugating the stabilizer of E by pi gives exactly the
    stabilizer of pi(E).

    Both groups are full products of symmetric groups on the free fibers,
    so mutual containment reduces to: every conjugated generator fixes
    pi(E) pointwise, and every generator of fix(pi(E)) conjugates back
    into fix(E).
    """
    support = check_support(inst, support)
    _same_instance(inst, pi.inst)
    image = act_support(pi, support)
    inv = pi.inverse()
    witness = None
    for g in fix_generators(inst, support):
        conj = conjugate(pi, g)
        if not in_fix(conj, image):
            witness = conj
            break
    if witness is None:
        for h in fix_generators(inst, image):
            back = conjugate(inv, h)
            if not in_fix(back, support):
                witness = h
                break
    return ConjugationReport(witness is None, support, image, witness)


@dataclass(frozen=True, eq=False)
class AssembleReport:
    """Outcome of bundling a sequence of names into one set-name.

    member_supports holds each member's least support (None if absent).
    certified is the completeness route: every member has a support and
    the union of those supports fits under the cutoff, which is a sound
    but not necessary criterion.  hs is the exact verdict.
    """

    name: Name
    hs: bool
    member_supports: tuple
    union_support: Optional[frozenset]
    certified: bool

    def __bool__(self):
        return self.hs


def assemble_sequence(inst, names: Iterable[Name]) -> AssembleReport:
    """Bundle names into the set-name pairing each with the maximum, and
    report whether the result is hereditarily symmetric."""
    names = list(names)
    assembled = set_name(inst, names)
    supports = tuple(infer_min_support(inst, t) for t in names)
    if all(s is not None for s in supports):
        union = frozenset().union(*supports) if supports else frozenset()
        certified = len(union) <= inst.support_cutoff
    else:
        union = None
        certified = False
    return AssembleReport(
        name=assembled,
        hs=is_hs(inst, assembled),
        member_supports=supports,
        union_support=union,
        certified=certified,
    )
