"""Batch front end: parse instance spec files, run named check suites,
emit one JSON report line per check unit.

Spec files are JSON.  A flat instance:

    {"poset": {"elements": ["a", "b"], "leq": []},
     "n": 2, "v": 2, "c": 1, "d": 8}

A staged instance:

    {"stages": [3, 4], "c": 1}

Optional keys: "max_dom", "max_support", "seed", "posets" (sampled
posets for the embedding suite), "formulas" (prefix-syntax strings
replacing the default pool), "suites" (default selection for --suite
all).  Unknown keys are rejected.

Each check unit emits one JSON object per line with the fields suite,
instance (a content hash), params, verdict, witness (failures only) and
elapsed; the exit status is 0 exactly when every verdict passes.  Reruns
of the same spec are byte-identical apart from the elapsed fields.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .core import GenericFilter, Poset, iter_conditions
from .errors import EngineError, ParseError
from .forcing import (Eq, Mem, Not, And, forces, parse_formula,
                      symmetry_lemma_check)
from .instances import (build_instance, build_staged_instance, chain_family,
                        downset_embedding, in_stage, random_poset)
from .kernels import swap_kernel, wisc_kernel
from .names import check_name, interpret, ordinal, pair_name, set_name
from .symmetry import (assemble_sequence, conjugation_check, fix_generators,
                       generator_closure, infer_min_support, is_hs)

_FLAT_KEYS = {"poset", "n", "v", "c", "d",
              "max_dom", "max_support", "seed", "posets", "formulas", "suites"}
_STAGED_KEYS = {"stages", "c",
                "max_dom", "max_support", "seed", "posets", "formulas", "suites"}
_POSET_KEYS = {"elements", "leq"}

FLAT_SUITES = ("embedding", "hs", "normality", "forcing-oracle",
               "symmetry-lemma", "swap")
STAGED_SUITES = ("hs", "normality", "wisc", "chains")
ALL_SUITES = ("symmetry-lemma", "forcing-oracle", "swap", "hs", "normality",
              "wisc", "embedding", "chains")


@dataclass(frozen=True)
class InstanceSpec:
    kind: str            # "flat" | "staged"
    text: str            # canonical JSON of the raw spec
    raw: dict

    @property
    def options(self) -> dict:
        return {k: self.raw.get(k) for k in
                ("max_dom", "max_support", "seed", "posets", "formulas", "suites")}


def parse_instance_spec(text: str) -> InstanceSpec:
    """Parse and validate a spec; building the instance runs the full
    validator, so invalid bounds are rejected here."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ParseError("spec must be a JSON object")
    if "stages" in raw:
        kind, allowed = "staged", _STAGED_KEYS
    elif "poset" in raw:
        kind, allowed = "flat", _FLAT_KEYS
    else:
        raise ParseError("spec needs either a 'poset' or a 'stages' key")
    unknown = set(raw) - allowed
    if unknown:
        raise ParseError(f"unknown spec fields: {sorted(unknown)}")
    if kind == "flat":
        poset = raw["poset"]
        if not isinstance(poset, dict) or set(poset) - _POSET_KEYS:
            raise ParseError("poset must be an object with 'elements' and 'leq'")
        for key in ("n", "v", "c"):
            if not isinstance(raw.get(key), int):
                raise ParseError(f"spec field {key!r} must be an integer")
        if "d" in raw and not isinstance(raw["d"], int):
            raise ParseError("spec field 'd' must be an integer")
    else:
        if (not isinstance(raw["stages"], list)
                or not all(isinstance(s, int) for s in raw["stages"])):
            raise ParseError("'stages' must be a list of integers")
        if not isinstance(raw.get("c"), int):
            raise ParseError("spec field 'c' must be an integer")
    spec = InstanceSpec(kind, json.dumps(raw, sort_keys=True), raw)
    _build_objects(spec)  # run the instance validator now
    return spec


def _build_objects(spec: InstanceSpec):
    if spec.kind == "flat":
        raw = spec.raw
        poset = Poset.from_pairs(raw["poset"].get("elements", ()),
                                 [tuple(p) for p in raw["poset"].get("leq", ())])
        inst, family = build_instance(poset, raw["n"], raw["v"], raw["c"],
                                      raw.get("d"))
        return inst, family
    staged, family = build_staged_instance(spec.raw["stages"], spec.raw["c"])
    return staged, family


# ------------------------------------------------------------------
# name terms for the formula syntax

def _resolve_name(ctx, node):
    inst = ctx["inst"]
    family = ctx["family"]
    if isinstance(node, tuple):
        if not node:
            raise ParseError("empty name term")
        head = node[0]
        if head == "pair" and len(node) == 3:
            return pair_name(inst, _resolve_name(ctx, node[1]),
                             _resolve_name(ctx, node[2]))
        if head == "set":
            return set_name(inst, [_resolve_name(ctx, t) for t in node[1:]])
        raise ParseError(f"unknown name constructor {head!r}")
    parts = str(node).split(":")
    site_of = (int if ctx["kind"] == "staged" else str)
    try:
        if parts[0] == "ord" and len(parts) == 2:
            return check_name(inst, ordinal(int(parts[1])))
        if parts[0] == "row" and len(parts) == 3:
            return family.rows[(site_of(parts[1]), int(parts[2]))]
        if parts[0] == "site" and len(parts) == 2:
            return family.sites[site_of(parts[1])]
        if parts[0] == "region" and len(parts) == 2 and ctx["kind"] == "flat":
            sites = frozenset(s for s in parts[1].split("+") if s)
            return family.regions[sites]
        if parts[0] == "least" and len(parts) == 3 and ctx["kind"] == "flat":
            return family.least[(site_of(parts[1]), int(parts[2]))]
        if parts[0] == "graph" and len(parts) == 1:
            return family.graph
    except KeyError:
        raise ParseError(f"name term {node!r} is outside the instance") from None
    raise ParseError(f"unknown name term {node!r}")


def default_formula_pool(ctx) -> list:
    """A deterministic pool of labeled formulas: atomic equalities and
    memberships over the canonical and ordinal names, one negation layer
    and one conjunction layer."""
    inst = ctx["inst"]
    family = ctx["family"]
    rows = [(f"row:{z}:{a}", nm) for (z, a), nm in sorted(family.rows.items())][:4]
    sites = [(f"site:{z}", nm) for z, nm in sorted(family.sites.items())][:2]
    ords = [(f"ord:{k}", check_name(inst, ordinal(k))) for k in range(3)]
    atoms = []

    def eq(a, b):
        atoms.append((f"(eq {a[0]} {b[0]})", Eq(a[1], b[1])))

    def mem(a, b):
        atoms.append((f"(mem {a[0]} {b[0]})", Mem(a[1], b[1])))

    r = rows
    eq(r[0], r[1 % len(r)])
    eq(r[0], r[-1])
    if len(sites) >= 2:
        eq(sites[0], sites[1])
    eq(r[0], ords[0])
    eq(ords[0], ords[1])
    eq(ords[1], ords[1])
    mem(ords[0], r[0])
    mem(ords[1], r[0])
    mem(ords[0], r[-1])
    mem(r[0], sites[0])
    mem(r[0], sites[-1])
    mem(r[-1], sites[0])
    mem(ords[0], ords[1])
    mem(ords[0], ords[2])
    mem(ords[1], ords[2])
    pool = list(atoms)
    for label, phi in atoms[:3]:
        pool.append((f"(not {label})", Not(phi)))
    for (la, fa), (lb, fb) in zip(atoms[0::2], atoms[1::2]):
        if len(pool) >= len(atoms) + 6:
            break
        pool.append((f"(and {la} {lb})", And(fa, fb)))
    return pool


# ------------------------------------------------------------------
# per-process context

_CTX_CACHE: dict = {}


def _context(spec_text: str, overrides_text: str) -> dict:
    key = (spec_text, overrides_text)
    ctx = _CTX_CACHE.get(key)
    if ctx is not None:
        return ctx
    raw = json.loads(spec_text)
    overrides = json.loads(overrides_text)
    spec = InstanceSpec("staged" if "stages" in raw else "flat", spec_text, raw)
    inst, family = _build_objects(spec)

    def opt(name, default):
        if overrides.get(name) is not None:
            return overrides[name]
        if raw.get(name) is not None:
            return raw[name]
        return default

    ctx = {
        "kind": spec.kind,
        "spec": spec,
        "inst": inst,
        "family": family,
        "max_dom": opt("max_dom", 2),
        "max_support": opt("max_support", inst.support_cutoff),
        "seed": opt("seed", 0),
        "posets": opt("posets", 0),
        "hash": hashlib.sha256(
            json.dumps(inst.describe(), sort_keys=True).encode()).hexdigest()[:12],
    }
    formulas = opt("formulas", None)
    if spec.kind == "flat":
        if formulas:
            ctx["pool"] = [(text, parse_formula(text, lambda n: _resolve_name(ctx, n)))
                           for text in formulas]
        else:
            ctx["pool"] = default_formula_pool(ctx)
        ctx["conditions"] = list(iter_conditions(inst, ctx["max_dom"]))
        ctx["perms"] = generator_closure(fix_generators(inst, ()), 3)
    else:
        ctx["conditions"] = list(iter_conditions(inst, ctx["max_dom"]))
        ctx["perms"] = generator_closure(fix_generators(inst, ()), 3)
    ctx["supports"] = _supports(inst, ctx["max_support"])
    _CTX_CACHE[key] = ctx
    return ctx


def _supports(inst, max_support):
    out = []
    bound = min(max_support, inst.support_cutoff)
    for k in range(bound + 1):
        out.extend(frozenset(c) for c in itertools.combinations(inst.pairs, k))
    return out


def _cond_obj(cond):
    return [list(cell) + [bit] for cell, bit in cond.items]


def _support_obj(support):
    return sorted(map(list, support))


# ------------------------------------------------------------------
# suites: gen(ctx) -> list of small params; run(ctx, param) -> (params_dict, ok, witness)

def _gen_embedding(ctx):
    if ctx["kind"] != "flat":
        return None
    poset = ctx["inst"].poset
    units = [("pair", z1, z2) for z1 in poset.elements for z2 in poset.elements]
    units += [("sample", i) for i in range(ctx["posets"])]
    return units


def _run_embedding(ctx, unit):
    if unit[0] == "pair":
        _, z1, z2 = unit
        poset = ctx["inst"].poset
        down = downset_embedding(poset)
        ok = poset.leq(z1, z2) == (down[z1] <= down[z2])
        return {"pair": [z1, z2]}, ok, None
    _, i = unit
    rng = random.Random(f"{ctx['seed']}:{i}")
    poset = random_poset(rng)
    down = downset_embedding(poset)
    bad = [(z1, z2) for z1 in poset.elements for z2 in poset.elements
           if poset.leq(z1, z2) != (down[z1] <= down[z2])]
    params = {"sample": i, "seed": ctx["seed"], "elements": len(poset.elements)}
    return params, not bad, ({"failing_pairs": bad} if bad else None)


def _gen_oracle(ctx):
    if ctx["kind"] != "flat":
        return None
    return [(ci, fi) for ci in range(len(ctx["conditions"]))
            for fi in range(len(ctx["pool"]))]


def _run_oracle(ctx, unit):
    ci, fi = unit
    p = ctx["conditions"][ci]
    label, phi = ctx["pool"][fi]
    rec = forces(p, phi, "recursive")
    sem = forces(p, phi, "semantic")
    params = {"condition": _cond_obj(p), "formula": label}
    ok = rec == sem
    return params, ok, (None if ok else {"recursive": rec, "semantic": sem})


def _gen_symmetry(ctx):
    if ctx["kind"] != "flat":
        return None
    return [(pi, ci, fi) for pi in range(len(ctx["perms"]))
            for ci in range(len(ctx["conditions"]))
            for fi in range(len(ctx["pool"]))]


def _run_symmetry(ctx, unit):
    pii, ci, fi = unit
    perm = ctx["perms"][pii]
    p = ctx["conditions"][ci]
    label, phi = ctx["pool"][fi]
    report = symmetry_lemma_check(perm, p, phi)
    params = {"permutation": [[list(x) for x in c] for c in perm.cycles()],
              "condition": _cond_obj(p), "formula": label}
    return params, report.equal, report.witness


def _swap_admissible(ctx):
    inst = ctx["inst"]
    units = []
    for qi, q in enumerate(ctx["conditions"]):
        occupied = {z: q.touched_fibers(z) for z in inst.sites}
        for si, support in enumerate(ctx["supports"]):
            for z in inst.sites:
                for a in range(inst.fiber_count(z)):
                    if (z, a) in support:
                        continue
                    if any(b != a and (z, b) not in support
                           and b not in occupied[z]
                           for b in range(inst.fiber_count(z))):
                        units.append((qi, si, z, a))
    return units


def _gen_swap(ctx):
    if ctx["kind"] != "flat":
        return None
    return _swap_admissible(ctx)


def _run_swap(ctx, unit):
    qi, si, z, a = unit
    q = ctx["conditions"][qi]
    support = ctx["supports"][si]
    report = swap_kernel(ctx["inst"], q, support, z, a)
    params = {"condition": _cond_obj(q), "support": _support_obj(support),
              "site": z, "fiber": a, "partner": report.chosen["partner"]}
    return params, report.verdict, (None if report.verdict else report.to_obj())


def _gen_hs(ctx):
    return [label for label, _ in ctx["family"].members()]


def _run_hs(ctx, label):
    inst = ctx["inst"]
    nm = dict(ctx["family"].members())[label]
    found = infer_min_support(inst, nm)
    hereditarily = is_hs(inst, nm)
    kind = label.split(":")[0]
    if kind in ("row", "least"):
        parts = label.split(":")
        site = int(parts[1]) if ctx["kind"] == "staged" else parts[1]
        expected = frozenset({(site, int(parts[2]))})
        ok = found == expected and hereditarily
    elif kind == "site":
        ok = found == frozenset() and hereditarily
    else:
        ok = found is not None and hereditarily
    params = {"name": label,
              "support": _support_obj(found) if found is not None else None}
    return params, ok, None


def _gen_normality(ctx):
    units = [("conj", pi, si) for pi in range(len(ctx["perms"]))
             for si in range(len(ctx["supports"]))]
    members = [label for label, _ in ctx["family"].members()
               if label.split(":")[0] in ("row", "site")]
    for k in (1, 2):
        for combo in itertools.combinations(range(len(members)), k):
            units.append(("assemble",) + combo)
    ctx["_members"] = members
    return units


def _run_normality(ctx, unit):
    inst = ctx["inst"]
    if unit[0] == "conj":
        _, pii, si = unit
        perm = ctx["perms"][pii]
        support = ctx["supports"][si]
        report = conjugation_check(inst, perm, support)
        params = {"permutation": [[list(x) for x in c] for c in perm.cycles()],
                  "support": _support_obj(support),
                  "image": _support_obj(report.support_image)}
        return params, report.ok, (None if report.ok else {"witness": repr(report.witness)})
    members = ctx.get("_members")
    if members is None:
        members = [label for label, _ in ctx["family"].members()
                   if label.split(":")[0] in ("row", "site")]
        ctx["_members"] = members
    labels = [members[i] for i in unit[1:]]
    table = dict(ctx["family"].members())
    report = assemble_sequence(inst, [table[l] for l in labels])
    ok = report.hs or not report.certified
    params = {"members": labels, "hereditarily_symmetric": report.hs,
              "certified": report.certified}
    return params, ok, None


def _staged_name_pool(ctx, base_stage):
    inst = ctx["inst"]
    family = ctx["family"]
    pool = [(f"ord:{k}", check_name(inst, ordinal(k))) for k in range(2)]
    pool += [(label, nm) for label, nm in family.members()
             if label != "graph" and in_stage(nm, base_stage)]
    return pool


def _gen_wisc(ctx):
    if ctx["kind"] != "staged":
        return None
    inst = ctx["inst"]
    units = []
    for base in inst.sites:
        for swap in inst.sites:
            if swap <= base:
                continue
            pool = _staged_name_pool(ctx, base)
            for yi in range(len(pool)):
                for qi, q in enumerate(ctx["conditions"]):
                    occupied = q.touched_fibers(swap)
                    for si, support in enumerate(ctx["supports"]):
                        free = [d for d in range(inst.fiber_count(swap))
                                if (swap, d) not in support]
                        if not free:
                            continue
                        first = free[0]
                        if any(d != first and d not in occupied for d in free):
                            units.append((base, swap, yi, qi, si))
    return units


def _run_wisc(ctx, unit):
    base, swap, yi, qi, si = unit
    pool = _staged_name_pool(ctx, base)
    label, y = pool[yi]
    q = ctx["conditions"][qi]
    support = ctx["supports"][si]
    report = wisc_kernel(ctx["inst"], base, y, swap, q, support)
    params = {"base_stage": base, "swap_stage": swap, "name": label,
              "condition": _cond_obj(q), "support": _support_obj(support)}
    return params, report.verdict, (None if report.verdict else report.to_obj())


def _gen_chains(ctx):
    if ctx["kind"] != "staged":
        return None
    k = len(ctx["inst"].stage_sizes)
    units = [("entries", b) for b in range(k - 1)]
    units += [("interp", i) for i in range(16)]
    return units


def _run_chains(ctx, unit):
    staged = ctx["inst"]
    chain = chain_family(staged)
    if unit[0] == "entries":
        b = unit[1]
        inner, outer = set(chain[b + 1].entries), set(chain[b].entries)
        ok = inner < outer
        return {"link": [b + 1, b]}, ok, None
    i = unit[1]
    rng = random.Random(f"{ctx['seed']}:chain:{i}")
    bits = [rng.randint(0, 1) for _ in staged.cells]
    filt = GenericFilter(staged, bits)
    ok = True
    for b in range(len(chain) - 1):
        small = interpret(chain[b + 1], filt)
        large = interpret(chain[b], filt)
        if not all(e in large for e in small):
            ok = False
            break
    return {"sample": i, "seed": ctx["seed"]}, ok, (None if ok else {"bits": bits})


SUITES = {
    "embedding": (_gen_embedding, _run_embedding),
    "forcing-oracle": (_gen_oracle, _run_oracle),
    "symmetry-lemma": (_gen_symmetry, _run_symmetry),
    "swap": (_gen_swap, _run_swap),
    "hs": (_gen_hs, _run_hs),
    "normality": (_gen_normality, _run_normality),
    "wisc": (_gen_wisc, _run_wisc),
    "chains": (_gen_chains, _run_chains),
}


def _run_slice(spec_text, overrides_text, suite, lo, hi):
    ctx = _context(spec_text, overrides_text)
    gen, run = SUITES[suite]
    units = gen(ctx)
    lines = []
    for unit in units[lo:hi]:
        start = time.monotonic()
        params, ok, witness = run(ctx, unit)
        elapsed = time.monotonic() - start
        line = {"suite": suite, "instance": ctx["hash"], "params": params,
                "verdict": "pass" if ok else "fail"}
        if witness is not None:
            line["witness"] = witness
        line["elapsed"] = round(elapsed, 6)
        lines.append(line)
    return lines


def run_checks(spec: InstanceSpec, suite: str = "all", jobs: int = 1,
               overrides: Optional[dict] = None, out=None) -> int:
    """Run a suite (or every applicable one) and stream JSON lines; the
    return value is the process exit status."""
    out = out or sys.stdout
    overrides_text = json.dumps(overrides or {}, sort_keys=True)
    if suite == "all":
        wanted = spec.raw.get("suites")
        if overrides and overrides.get("suites"):
            wanted = overrides["suites"]
        suites = tuple(wanted) if wanted else (
            FLAT_SUITES if spec.kind == "flat" else STAGED_SUITES)
    else:
        suites = (suite,)
    failed = False
    for name in suites:
        if name not in SUITES:
            print(json.dumps({"suite": name, "instance": "-", "params": {},
                              "verdict": "fail",
                              "witness": {"error": f"unknown suite {name!r}"},
                              "elapsed": 0.0}), file=out)
            failed = True
            continue
        ctx = _context(spec.text, overrides_text)
        units = SUITES[name][0](ctx)
        if units is None:
            print(json.dumps({"suite": name, "instance": ctx["hash"], "params": {},
                              "verdict": "fail",
                              "witness": {"error": f"suite {name!r} does not apply "
                                          f"to a {spec.kind} instance"},
                              "elapsed": 0.0}), file=out)
            failed = True
            continue
        total = len(units)
        if jobs > 1 and total > 1:
            step = -(-total // jobs)
            chunks = [(spec.text, overrides_text, name, lo, min(lo + step, total))
                      for lo in range(0, total, step)]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_run_slice_star, chunks)
                for lines in results:
                    for line in lines:
                        if line["verdict"] != "pass":
                            failed = True
                        print(json.dumps(line), file=out)
        else:
            for line in _run_slice(spec.text, overrides_text, name, 0, total):
                if line["verdict"] != "pass":
                    failed = True
                print(json.dumps(line), file=out)
    return 1 if failed else 0


def _run_slice_star(args):
    return _run_slice(*args)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="symext",
        description="run check suites against an instance spec file")
    parser.add_argument("--spec", required=True, help="path to a JSON spec file")
    parser.add_argument("--suite", default="all",
                        help="suite name or 'all' (%s)" % ", ".join(ALL_SUITES))
    parser.add_argument("--max-dom", type=int, default=None,
                        help="condition domain bound for enumerating suites")
    parser.add_argument("--max-support", type=int, default=None,
                        help="support size bound for enumerating suites")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes; output order stays deterministic")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for sampled suites (logged in each line)")
    args = parser.parse_args(argv)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = parse_instance_spec(fh.read())
    except (OSError, EngineError) as exc:
        print(f"symext: {exc}", file=sys.stderr)
        return 2
    overrides = {k: v for k, v in (("max_dom", args.max_dom),
                                   ("max_support", args.max_support),
                                   ("seed", args.seed)) if v is not None}
    try:
        return run_checks(spec, args.suite, jobs=args.jobs, overrides=overrides)
    except EngineError as exc:
        print(f"symext: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
