"""Executable proof kernels.

Each kernel runs the finite combinatorial step at the heart of one
contradiction argument and reports every sub-check with its witnesses.
Kernels never assert anything about infinite cardinalities; the scope
string in every report says so.  All witness choices use least-index
tie-breaking, so identical inputs give identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Condition, compatible, iter_conditions, _same_instance
from .errors import FiberExhausted, StageViolation
from .forcing import Eq, forces
from .instances import canonical_family, in_stage, least_value_name
from .names import Name, check_name, name_cells, ordinal
from .symmetry import (FiberPermutation, act_condition, act_name,
                       check_support, in_fix)

SCOPE = ("verifies the finite combinatorial step only (stabilizer membership, "
         "name fixation, condition compatibility); no conclusion about "
         "infinite cardinalities is asserted")


@dataclass(frozen=True, eq=False)
class KernelReport:
    kernel: str
    inputs: dict
    chosen: dict
    checks: dict
    witness: dict
    verdict: bool
    scope: str = SCOPE

    def __bool__(self):
        return self.verdict

    def to_obj(self) -> dict:
        return {
            "kernel": self.kernel,
            "inputs": self.inputs,
            "chosen": self.chosen,
            "checks": self.checks,
            "witness": self.witness,
            "verdict": "pass" if self.verdict else "fail",
            "scope": self.scope,
        }


def _cond_obj(cond: Condition) -> list:
    return [list(cell) + [bit] for cell, bit in cond.items]


def swap_partner(inst, q: Condition, support, site, fiber) -> int:
    """The least fiber b != fiber at the site with (site, b) outside the
    support and no cell of row (site, b) in q's domain."""
    _same_instance(inst, q.inst)
    support = check_support(inst, support)
    if (site, fiber) in support:
        raise ValueError(f"target pair {(site, fiber)!r} must avoid the support")
    occupied = q.touched_fibers(site)
    for b in range(inst.fiber_count(site)):
        if b != fiber and (site, b) not in support and b not in occupied:
            return b
    raise FiberExhausted(
        f"no spare fiber at site {site!r}: every other fiber is in the "
        "support or touched by the condition")


def swap_kernel(inst, q: Condition, support, site, fiber, names=None) -> KernelReport:
    """The fiber-swap step: pick a partner fiber, build the transposition,
    and check that it (i) fixes the support pointwise, (ii) fixes every
    supplied support-anchored name literally, and (iii) carries q to a
    condition compatible with q, producing the merge witness.

    names is a list of (label, Name) pairs; by default the canonical row
    names of the support pairs plus every site name.
    """
    support = check_support(inst, support)
    partner = swap_partner(inst, q, support, site, fiber)
    pi = FiberPermutation.transposition(inst, site, fiber, partner)
    if names is None:
        family = canonical_family(inst)
        names = [(f"row:{z}:{a}", family.rows[(z, a)]) for (z, a) in sorted(support)]
        names += [(f"site:{z}", family.sites[z]) for z in inst.sites]
    fixed = {label: act_name(pi, nm) is nm for label, nm in names}
    in_stab = in_fix(pi, support)
    moved_q = act_condition(pi, q)
    comp = compatible(q, moved_q)
    checks = {
        "permutation_in_stabilizer": in_stab,
        "names_fixed": all(fixed.values()),
        "conditions_compatible": comp.ok,
    }
    witness = {
        "cycles": [[list(p) for p in c] for c in pi.cycles()],
        "names_fixed": fixed,
        "relabeled_condition": _cond_obj(moved_q),
        "merged": _cond_obj(comp.witness) if comp.witness is not None else None,
        "cutoff_exceeded": comp.cutoff_exceeded,
    }
    return KernelReport(
        kernel="swap",
        inputs={"condition": _cond_obj(q), "support": sorted(map(list, support)),
                "site": site, "fiber": fiber},
        chosen={"partner": partner},
        checks=checks,
        witness=witness,
        verdict=all(checks.values()),
    )


def wisc_kernel(staged, base_stage: int, y: Name, swap_stage: int,
                q: Condition, support) -> KernelReport:
    """The stage-local swap step: the name y must live at the base stage;
    a transposition of two fibers at a strictly later stage is built (the
    first fiber least outside the support, the second additionally with a
    row untouched by q) and checked to fix y, fix the support pointwise,
    and carry q to a compatible condition.

    Locality is recorded twice: literally (the lifted action returns y)
    and structurally (the moved pairs avoid every pair mentioned in y's
    closure); the two must agree here, and the verdict uses the literal
    form.
    """
    _same_instance(staged, q.inst)
    support = check_support(staged, support)
    if not in_stage(y, base_stage):
        raise StageViolation(
            f"name uses cells above stage {base_stage}")
    if swap_stage <= base_stage or swap_stage not in staged.cell_sites:
        raise ValueError("swap stage must lie strictly above the base stage")
    first = None
    for d in range(staged.fiber_count(swap_stage)):
        if (swap_stage, d) not in support:
            first = d
            break
    if first is None:
        raise FiberExhausted(f"every fiber of stage {swap_stage} is in the support")
    occupied = q.touched_fibers(swap_stage)
    second = None
    for t in range(staged.fiber_count(swap_stage)):
        if t != first and (swap_stage, t) not in support and t not in occupied:
            second = t
            break
    if second is None:
        raise FiberExhausted(
            f"no spare fiber at stage {swap_stage}: every other fiber is in "
            "the support or touched by the condition")
    pi = FiberPermutation.transposition(staged, swap_stage, first, second)
    name_fixed = act_name(pi, y) is y
    moved = {src for src, _ in pi.moved}
    disjoint = not (moved & {(c[0], c[1]) for c in name_cells(y)})
    moved_q = act_condition(pi, q)
    comp = compatible(q, moved_q)
    checks = {
        "name_fixed": name_fixed,
        "moved_avoids_name_cells": disjoint,
        # disjointness must imply literal fixation; a violation is a bug
        # in the lifted action, not a property of the inputs
        "locality_forms_agree": name_fixed or not disjoint,
        "permutation_in_stabilizer": in_fix(pi, support),
        "conditions_compatible": comp.ok,
    }
    verdict = name_fixed and checks["permutation_in_stabilizer"] and comp.ok
    witness = {
        "cycles": [[list(p) for p in c] for c in pi.cycles()],
        "relabeled_condition": _cond_obj(moved_q),
        "merged": _cond_obj(comp.witness) if comp.witness is not None else None,
        "cutoff_exceeded": comp.cutoff_exceeded,
    }
    return KernelReport(
        kernel="wisc",
        inputs={"base_stage": base_stage, "swap_stage": swap_stage,
                "name_rank": y.rank, "condition": _cond_obj(q),
                "support": sorted(map(list, support))},
        chosen={"first_fiber": first, "second_fiber": second},
        checks=checks,
        witness=witness,
        verdict=verdict,
    )


@dataclass(frozen=True, eq=False)
class MinOntoReport:
    """Density sweep for the least-value map of one site.

    For every condition with spare room and every slot value, a witness
    extension forcing the least name to equal that value must exist; it
    is built explicitly on a fresh fiber and verified against the
    semantic oracle.  failures lists the (condition, slot) pairs with no
    fresh fiber (the saturation boundary); defects lists constructed
    witnesses the oracle rejected, which would be engine bugs.
    """

    site: object
    max_dom: int
    checked: int
    witnessed: int
    failures: tuple
    defects: tuple
    scope: str = SCOPE

    @property
    def verdict(self) -> bool:
        return not self.defects

    def __bool__(self):
        return self.verdict

    def to_obj(self) -> dict:
        return {
            "kernel": "min-onto",
            "site": self.site,
            "max_dom": self.max_dom,
            "checked": self.checked,
            "witnessed": self.witnessed,
            "failures": [{"condition": items, "slot": g} for items, g in self.failures],
            "defects": list(self.defects),
            "verdict": "pass" if self.verdict else "fail",
            "scope": self.scope,
        }


def min_onto_check(inst, site, max_dom: Optional[int] = None) -> MinOntoReport:
    """Sweep all conditions with domain at most domain_cutoff - slots (or
    max_dom if smaller) and all slot values; for each, extend on a fresh
    fiber so the row's least 1 lands on the value, and confirm the
    extension forces the least name to equal the value's ordinal."""
    v = inst.slot_count(site)
    room = inst.domain_cutoff - v
    limit = room if max_dom is None else min(max_dom, room)
    checked = witnessed = 0
    failures = []
    defects = []
    for p in iter_conditions(inst, limit):
        occupied = p.touched_fibers(site)
        fresh = None
        for a in range(inst.fiber_count(site)):
            if a not in occupied:
                fresh = a
                break
        for gamma in range(v):
            checked += 1
            if fresh is None:
                failures.append((_cond_obj(p), gamma))
                continue
            row = {(site, fresh, d): 0 for d in range(gamma)}
            row[(site, fresh, gamma)] = 1
            q = p.extend_with(row)
            phi = Eq(least_value_name(inst, site, fresh),
                     check_name(inst, ordinal(gamma)))
            if forces(q, phi, "semantic"):
                witnessed += 1
            else:
                defects.append({"condition": _cond_obj(p), "slot": gamma,
                                "witness": _cond_obj(q)})
    return MinOntoReport(site=site, max_dom=limit, checked=checked,
                         witnessed=witnessed, failures=tuple(failures),
                         defects=tuple(defects))
