"""Builders for the concrete constructions the engine checks.

The canonical name family of an instance:

* row names: for a pair (z, a), the name reading off which slots of row
  (z, a) carry bit 1.  Entries pair each slot ordinal with the single-cell
  condition setting that slot to 1, so relabeling the pair relabels the
  name and the interpretation is exactly {g : assignment((z,a),g) = 1}.
* site names: the set-name of all row names of one site.
* region names: the set-name of all row names over a subset of sites.
  Regions are compared by entry-set inclusion, the checkable finite
  shadow of the mapping direction between their interpretations (the
  larger region covers the smaller one); only explicitly given site
  subsets get region names.
* graph name: the set-name of pairs (site ordinal, site name), the
  internal graph of the site-to-site-name map.
* least names: for a pair, the name interpreting to the least slot of
  the row carrying 1, as a von Neumann ordinal, or to the slot bound as
  a sentinel when the row is all zero.

On staged instances row and site names are built per stage from
stage-local cells only, and the suffix chain bundles the rows of all
stages above a starting point, giving strictly shrinking entry sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .core import Condition, Instance, Poset, StagedInstance
from .errors import InvalidInstance
from .names import (Name, check_name, make_name, name_cells, ordinal,
                    pair_name, set_name)
from .symmetry import act_name, fix_generators, is_hs


def downset_embedding(poset: Poset) -> dict:
    """Each element mapped to its down-set; an order embedding into the
    subsets of the carrier."""
    return {z: poset.downset(z) for z in poset.elements}


def random_poset(rng, max_elements: int = 8, labels: str = "abcdefgh") -> Poset:
    """A random poset: a random DAG on a random slice of the labels,
    closed reflexively and transitively."""
    k = rng.randint(1, max_elements)
    elems = list(labels[:k])
    pairs = set()
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < 0.35:
                pairs.add((elems[i], elems[j]))
    return Poset.from_pairs(elems, pairs)


def row_name(inst, site, fiber) -> Name:
    return make_name(
        (Condition(inst, {(site, fiber, g): 1}), check_name(inst, ordinal(g)))
        for g in range(inst.slot_count(site)))


def site_name(inst, site) -> Name:
    return set_name(inst, [row_name(inst, site, a)
                           for a in range(inst.fiber_count(site))])


def region_name(inst, sites) -> Name:
    sites = sorted(sites)
    return set_name(inst, [row_name(inst, z, a)
                           for z in sites
                           for a in range(inst.fiber_count(z))])


def site_ordinal_name(inst, site) -> Name:
    # sites are encoded by their index in the sorted site tuple
    return check_name(inst, ordinal(inst.sites.index(site)))


def graph_name(inst) -> Name:
    return set_name(inst, [pair_name(inst, site_ordinal_name(inst, z), site_name(inst, z))
                           for z in inst.sites])


def least_value_name(inst, site, fiber) -> Name:
    """Interprets to the least slot of the row carrying 1 (as an ordinal),
    or to the slot bound when the row is all zero: slot j belongs iff the
    row is zero on every slot up to j."""
    entries = []
    for j in range(inst.slot_count(site)):
        cond = Condition(inst, {(site, fiber, d): 0 for d in range(j + 1)})
        entries.append((cond, check_name(inst, ordinal(j))))
    return make_name(entries)


@dataclass(frozen=True, eq=False)
class NameFamily:
    """The canonical names of a flat instance, keyed for reports."""

    inst: Instance
    rows: dict      # (site, fiber) -> Name
    sites: dict     # site -> Name
    regions: dict   # frozenset of sites -> Name
    graph: Name
    least: dict     # (site, fiber) -> Name

    def members(self):
        for pair, nm in sorted(self.rows.items()):
            yield f"row:{pair[0]}:{pair[1]}", nm
        for site, nm in sorted(self.sites.items()):
            yield f"site:{site}", nm
        for region, nm in sorted(self.regions.items(), key=lambda kv: sorted(kv[0])):
            yield "region:" + "+".join(map(str, sorted(region))), nm
        yield "graph", self.graph
        for pair, nm in sorted(self.least.items()):
            yield f"least:{pair[0]}:{pair[1]}", nm

    def label(self, name: Name) -> Optional[str]:
        for lbl, nm in self.members():
            if nm is name:
                return lbl
        return None


_FAMILIES: dict = {}


def canonical_family(inst: Instance) -> NameFamily:
    fam = _FAMILIES.get(inst)
    if fam is not None:
        return fam
    if len(inst.sites) > 10:
        raise InvalidInstance("canonical family builds all region names; "
                              "instances are capped at 10 sites")
    rows = {(z, a): row_name(inst, z, a) for z in inst.sites
            for a in range(inst.fiber_count(z))}
    sites = {z: site_name(inst, z) for z in inst.sites}
    regions = {}
    for k in range(len(inst.sites) + 1):
        for combo in itertools.combinations(inst.sites, k):
            regions[frozenset(combo)] = region_name(inst, combo)
    least = {(z, a): least_value_name(inst, z, a) for z in inst.sites
             for a in range(inst.fiber_count(z))}
    fam = NameFamily(inst, rows, sites, regions, graph_name(inst), least)
    _FAMILIES[inst] = fam
    return fam


def build_instance(poset: Poset, fibers: int, slots: int, support_cutoff: int,
                   domain_cutoff: Optional[int] = None):
    """Validate the bounds, build the instance and its canonical family,
    and verify every family member is hereditarily symmetric."""
    inst = Instance(poset, fibers, slots, support_cutoff, domain_cutoff)
    family = canonical_family(inst)
    for label, nm in family.members():
        if not is_hs(inst, nm):
            raise InvalidInstance(f"canonical name {label} is not hereditarily symmetric")
    return inst, family


@dataclass(frozen=True, eq=False)
class StagedNameFamily:
    staged: StagedInstance
    rows: dict    # (stage, fiber) -> Name
    sites: dict   # stage -> Name
    graph: Name

    def members(self):
        for pair, nm in sorted(self.rows.items()):
            yield f"row:{pair[0]}:{pair[1]}", nm
        for stage, nm in sorted(self.sites.items()):
            yield f"site:{stage}", nm
        yield "graph", self.graph

    def label(self, name: Name) -> Optional[str]:
        for lbl, nm in self.members():
            if nm is name:
                return lbl
        return None


_STAGED_FAMILIES: dict = {}


def canonical_staged_family(staged: StagedInstance) -> StagedNameFamily:
    fam = _STAGED_FAMILIES.get(staged)
    if fam is not None:
        return fam
    rows = {(i, a): row_name(staged, i, a) for i in staged.sites
            for a in range(staged.fiber_count(i))}
    sites = {i: site_name(staged, i) for i in staged.sites}
    fam = StagedNameFamily(staged, rows, sites, graph_name(staged))
    _STAGED_FAMILIES[staged] = fam
    return fam


def build_staged_instance(stage_sizes, support_cutoff: int):
    """Validate and build the staged instance with its per-stage family;
    row names of stage i use stage-i cells only, hence live in the
    stage-i condition poset."""
    staged = StagedInstance(tuple(stage_sizes), support_cutoff)
    family = canonical_staged_family(staged)
    for label, nm in family.members():
        if not is_hs(staged, nm):
            raise InvalidInstance(f"canonical name {label} is not hereditarily symmetric")
    return staged, family


def stage_restrict(cond: Condition, stage: int) -> Condition:
    """Drop every cell above the stage; the result lives in the stage's
    condition poset."""
    return Condition(cond.inst, [(cell, bit) for cell, bit in cond.items
                                 if cell[0] <= stage])


def name_stage(x: Name) -> Optional[int]:
    """The least stage whose condition poset contains every condition in
    the name's closure; None when the name has no cells at all."""
    cells = name_cells(x)
    if not cells:
        return None
    return max(cell[0] for cell in cells)


def in_stage(x: Name, stage: int) -> bool:
    top = name_stage(x)
    return top is None or top <= stage


def stage_group_generators(staged: StagedInstance, stage: int) -> list:
    """Generators of the subgroup moving only pairs at stages up to the
    given one; monotone in the stage."""
    return fix_generators(staged, (), max_site=stage)


_HS_STAGE_MEMO: dict = {}


def in_hs_stage(staged: StagedInstance, x: Name, stage: int) -> bool:
    """Membership in the stage's hereditarily symmetric class: conditions
    stay at stages up to it, a support of stage-bounded pairs within the
    cutoff exists, and subnames satisfy the same recursively."""
    key = (staged, x, stage)
    if key in _HS_STAGE_MEMO:
        return _HS_STAGE_MEMO[key]
    ok = in_stage(x, stage)
    if ok:
        pairs = [p for p in staged.pairs if p[0] <= stage]
        found = False
        for size in range(staged.support_cutoff + 1):
            for combo in itertools.combinations(pairs, size):
                if all(act_name(g, x) is x
                       for g in fix_generators(staged, combo, max_site=stage)):
                    found = True
                    break
            if found:
                break
        ok = found and all(in_hs_stage(staged, sub, stage) for _, sub in x.entries)
    _HS_STAGE_MEMO[key] = ok
    return ok


def chain_family(staged: StagedInstance) -> list:
    """The suffix chain: for each starting stage, the set-name bundling
    every row name at that stage or above.  Entry sets shrink strictly
    along the chain, and interpretations shrink under every filter."""
    family = canonical_staged_family(staged)
    out = []
    for start in staged.sites:
        members = [family.rows[(i, a)] for i in staged.sites if i >= start
                   for a in range(staged.fiber_count(i))]
        out.append(set_name(staged, members))
    return out
