"""The name calculus: hereditary names, canonical constructors, interpretation.

A name is a finite set of (condition, name) pairs.  Names are interned:
structurally equal names are one object, so name equality is `is` and
the group action can detect literal fixation cheaply.  Interpretation by
a generic filter lands in HF, the type of hereditarily finite sets,
which is interned the same way and therefore extensional by identity.

The interning registries are plain dicts used as pure caches (same input
gives the same handle).  Under CPython's GIL lookup-or-insert is safe
enough for the concurrent reads our sweeps do; a build that wants true
parallel construction should confine interning to one worker per
process, which multiprocessing gives us for free.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .core import Condition, GenericFilter, _same_instance
from .errors import MismatchedInstance


class HF:
    """A hereditarily finite set; extensional, canonically ordered, interned."""

    __slots__ = ("elems", "key")

    def __contains__(self, other):
        return any(e is other for e in self.elems)

    def __iter__(self):
        return iter(self.elems)

    def __len__(self):
        return len(self.elems)

    def __repr__(self):
        if not self.elems:
            return "{}"
        return "{" + ", ".join(repr(e) for e in self.elems) + "}"

    def to_obj(self):
        return [e.to_obj() for e in self.elems]


_HF_REGISTRY: dict = {}


def hf(elems: Iterable[HF] = ()) -> HF:
    """The HF set with the given elements (normalized extensionally)."""
    uniq = []
    seen = set()
    for e in elems:
        if not isinstance(e, HF):
            raise TypeError(f"HF elements must be HF, got {e!r}")
        if id(e) not in seen:
            seen.add(id(e))
            uniq.append(e)
    uniq.sort(key=lambda e: e.key)
    tup = tuple(uniq)
    cached = _HF_REGISTRY.get(tup)
    if cached is not None:
        return cached
    obj = object.__new__(HF)
    obj.elems = tup
    obj.key = tuple(e.key for e in tup)
    _HF_REGISTRY[tup] = obj
    return obj


EMPTY_HF = hf()

_ORDINALS = [EMPTY_HF]


def ordinal(n: int) -> HF:
    """The von Neumann ordinal n."""
    if n < 0:
        raise ValueError("ordinals are non-negative")
    while len(_ORDINALS) <= n:
        _ORDINALS.append(hf(_ORDINALS))
    return _ORDINALS[n]


def kuratowski(x: HF, y: HF) -> HF:
    return hf([hf([x]), hf([x, y])])


class Name:
    """A hereditary forcing name: a canonical set of (condition, name) pairs.

    rank is 1 + the largest subname rank (0 for the empty name); key is a
    structural sort key; inst is the owning instance, or None for the
    empty name, which is shared by every instance.
    """

    __slots__ = ("entries", "rank", "key", "inst")

    def __repr__(self):
        return f"Name(rank={self.rank}, entries={len(self.entries)})"

    def to_obj(self):
        return [[[list(cell) + [bit] for cell, bit in cond.items], sub.to_obj()]
                for cond, sub in self.entries]


_NAME_REGISTRY: dict = {}


def make_name(entries: Iterable[tuple]) -> Name:
    """The name with the given (condition, name) entries, deduplicated and
    canonically ordered."""
    inst = None
    canon = {}
    for cond, sub in entries:
        if not isinstance(cond, Condition) or not isinstance(sub, Name):
            raise TypeError("entries must be (Condition, Name) pairs")
        if inst is None:
            inst = cond.inst
        elif cond.inst is not inst and cond.inst != inst:
            raise MismatchedInstance("entry conditions span two instances")
        if sub.inst is not None and sub.inst is not inst and sub.inst != inst:
            raise MismatchedInstance("subname belongs to a different instance")
        canon[(cond, sub)] = None
    ordered = tuple(sorted(canon, key=lambda e: (e[0].items, e[1].key)))
    cached = _NAME_REGISTRY.get(ordered)
    if cached is not None:
        return cached
    obj = object.__new__(Name)
    obj.entries = ordered
    obj.rank = 0 if not ordered else 1 + max(s.rank for _, s in ordered)
    obj.key = (obj.rank, tuple((c.items, s.key) for c, s in ordered))
    obj.inst = inst
    _NAME_REGISTRY[ordered] = obj
    return obj


EMPTY_NAME = make_name(())

_CHECK_MEMO: dict = {}


def check_name(inst, x: HF) -> Name:
    """The canonical name whose interpretation is x under every filter."""
    key = (inst, x)
    cached = _CHECK_MEMO.get(key)
    if cached is not None:
        return cached
    top = Condition.top(inst)
    result = make_name((top, check_name(inst, e)) for e in x)
    _CHECK_MEMO[key] = result
    return result


def set_name(inst, names: Iterable[Name]) -> Name:
    """The name pairing each given name with the maximum condition; it
    interprets to the set of the members' interpretations."""
    top = Condition.top(inst)
    entries = []
    for nm in names:
        if nm.inst is not None and nm.inst is not inst and nm.inst != inst:
            raise MismatchedInstance("member name belongs to a different instance")
        entries.append((top, nm))
    return make_name(entries)


def pair_name(inst, x: Name, y: Name) -> Name:
    """The canonical name for the Kuratowski ordered pair of x and y."""
    return set_name(inst, [set_name(inst, [x]), set_name(inst, [x, y])])


_INTERPRET_MEMO: dict = {}


def interpret(x: Name, filt: GenericFilter) -> HF:
    """Evaluate x by the filter: the set of interpretations of subnames
    whose condition lies in the filter, extensionally normalized."""
    if x.inst is not None:
        _same_instance(x.inst, filt.inst)
    key = (x, filt)
    cached = _INTERPRET_MEMO.get(key)
    if cached is not None:
        return cached
    value = hf(interpret(sub, filt)
               for cond, sub in x.entries if filt.contains(cond))
    _INTERPRET_MEMO[key] = value
    return value


def name_closure(x: Name) -> Iterator[Name]:
    """x together with every hereditary subname, each once."""
    seen = set()
    stack = [x]
    while stack:
        nm = stack.pop()
        if id(nm) in seen:
            continue
        seen.add(id(nm))
        yield nm
        for _, sub in nm.entries:
            stack.append(sub)


def name_conditions(x: Name) -> set:
    """Every condition occurring hereditarily in x."""
    return {cond for nm in name_closure(x) for cond, _ in nm.entries}


def name_cells(x: Name) -> frozenset:
    """Every cell mentioned by a condition hereditarily in x."""
    return frozenset(cell
                     for cond in name_conditions(x)
                     for cell, _ in cond.items)
