import itertools

import pytest

from symext import (And, Condition, Eq, FiberPermutation, GenericFilter,
                    InvalidInstance, Mem, Not, ParseError, act_condition,
                    act_formula, check_name, eval_formula, extends, forces,
                    format_formula, generic_filters, generator_closure,
                    fix_generators, iter_conditions, ordinal, parse_formula,
                    symmetry_lemma_check)
from symext.forcing import _space
from symext.names import EMPTY_NAME

from _oracles import naive_eval, naive_forces, total_assignments


def small_pool(inst, family):
    o = [check_name(inst, ordinal(k)) for k in range(3)]
    rows = sorted(family.rows)
    r = [family.rows[k] for k in rows]
    s = [family.sites[z] for z in sorted(family.sites)]
    atoms = [
        Eq(r[0], r[1]), Eq(r[0], o[0]), Eq(o[0], o[1]), Eq(o[1], o[1]),
        Mem(o[0], r[0]), Mem(o[1], r[0]), Mem(r[0], s[0]), Mem(o[0], o[1]),
        Mem(o[0], o[2]),
    ]
    if len(s) > 1:
        atoms += [Eq(s[0], s[1]), Mem(r[0], s[-1]), Mem(r[-1], s[0])]
    return atoms + [Not(atoms[0]), Not(atoms[4]),
                    And(atoms[0], atoms[4]), And(atoms[2], atoms[7])]


class TestExamples:
    def test_top_forces_reflexive_equality(self, reference):
        inst, _ = reference
        x = check_name(inst, ordinal(2))
        top = Condition.top(inst)
        assert forces(top, Eq(x, x), "semantic")
        assert forces(top, Eq(x, x), "recursive")

    def test_single_cell_forces_membership(self, reference):
        # frozen via the brute-force oracle first
        inst, family = reference
        p = Condition(inst, {("a", 0, 0): 1})
        phi = Mem(check_name(inst, ordinal(0)), family.rows[("a", 0)])
        assert naive_forces(inst, p, phi) is True
        assert forces(p, phi, "semantic")
        assert forces(p, phi, "recursive")

    def test_equivariance_of_the_example(self, reference):
        inst, family = reference
        p = Condition(inst, {("a", 0, 0): 1})
        pi = FiberPermutation.transposition(inst, "a", 0, 1)
        lhs = forces(p, Mem(check_name(inst, ordinal(0)), family.rows[("a", 0)]))
        rhs = forces(act_condition(pi, p),
                     Mem(check_name(inst, ordinal(0)), family.rows[("a", 1)]))
        assert lhs == rhs is True

    def test_unforced_and_refuted(self, reference):
        inst, family = reference
        top = Condition.top(inst)
        phi = Mem(check_name(inst, ordinal(0)), family.rows[("a", 0)])
        assert not forces(top, phi, "semantic")
        assert not forces(top, phi, "recursive")
        assert not forces(top, Not(phi), "semantic")
        assert not forces(top, Not(phi), "recursive")
        p0 = Condition(inst, {("a", 0, 0): 0})
        assert forces(p0, Not(phi), "semantic")
        assert forces(p0, Not(phi), "recursive")


class TestModeAgreement:
    def test_exhaustive_tiny(self, tiny):
        inst, family = tiny
        pool = small_pool(inst, family)
        for p in iter_conditions(inst):
            for phi in pool:
                assert forces(p, phi, "recursive") == forces(p, phi, "semantic")

    def test_semantic_matches_naive_oracle_tiny(self, tiny):
        inst, family = tiny
        pool = small_pool(inst, family)
        for p in iter_conditions(inst, 2):
            for phi in pool:
                assert forces(p, phi, "semantic") == naive_forces(inst, p, phi)

    def test_spot_reference(self, reference):
        inst, family = reference
        pool = small_pool(inst, family)
        for p in iter_conditions(inst, 1):
            for phi in pool:
                assert forces(p, phi, "recursive") == forces(p, phi, "semantic")


class TestProperties:
    def test_persistence(self, tiny):
        inst, family = tiny
        pool = small_pool(inst, family)
        conds = list(iter_conditions(inst))
        for phi in pool:
            for p, q in itertools.product(conds, repeat=2):
                if extends(q, p) and forces(p, phi, "recursive"):
                    assert forces(q, phi, "recursive")

    def test_truth_lemma_literal(self, tiny):
        # phi holds under a filter iff some condition in the filter forces it
        inst, family = tiny
        pool = small_pool(inst, family)
        conds = list(iter_conditions(inst))
        for assign in total_assignments(inst.cells):
            filt = GenericFilter.from_assignment(inst, assign)
            members = [p for p in conds if filt.contains(p)]
            for phi in pool:
                holds = eval_formula(phi, filt)
                assert holds == any(forces(p, phi, "recursive") for p in members)

    def test_eval_matches_naive(self, tiny):
        inst, family = tiny
        pool = small_pool(inst, family)
        for assign in total_assignments(inst.cells):
            filt = GenericFilter.from_assignment(inst, assign)
            for phi in pool:
                assert eval_formula(phi, filt) == naive_eval(phi, assign)

    def test_decided_by_atoms(self, tiny):
        # a total condition forces phi or not-phi
        inst, family = tiny
        pool = small_pool(inst, family)
        total = Condition(inst, {c: 0 for c in inst.cells})
        for phi in pool:
            assert forces(total, phi, "recursive") != forces(total, Not(phi), "recursive")


class TestSymmetryLemma:
    def test_identity_always_equal(self, tiny):
        inst, family = tiny
        ident = FiberPermutation.identity(inst)
        for phi in small_pool(inst, family)[:6]:
            report = symmetry_lemma_check(ident, Condition.top(inst), phi)
            assert report.equal

    def test_swap_on_row_equality(self, reference):
        inst, family = reference
        pi = FiberPermutation.transposition(inst, "a", 0, 1)
        phi = Eq(family.rows[("a", 0)], family.rows[("a", 1)])
        report = symmetry_lemma_check(pi, Condition.top(inst), phi)
        assert report.equal

    def test_exhaustive_tiny(self, tiny):
        inst, family = tiny
        pool = small_pool(inst, family)
        perms = generator_closure(fix_generators(inst, ()), 3)
        for pi in perms:
            for p in iter_conditions(inst, 2):
                for phi in pool:
                    assert symmetry_lemma_check(pi, p, phi).equal


class TestSyntax:
    def resolver(self, inst, family):
        def resolve(node):
            if isinstance(node, tuple):
                raise ParseError("no constructors in this test")
            kind, *rest = str(node).split(":")
            if kind == "ord":
                return check_name(inst, ordinal(int(rest[0])))
            if kind == "row":
                return family.rows[(rest[0], int(rest[1]))]
            raise ParseError(f"unknown {node!r}")
        return resolve

    def test_round_trip(self, reference):
        inst, family = reference
        resolve = self.resolver(inst, family)
        text = "(and (mem ord:0 row:a:0) (not (eq row:a:0 row:a:1)))"
        phi = parse_formula(text, resolve)
        labels = {family.rows[("a", 0)]: "row:a:0",
                  family.rows[("a", 1)]: "row:a:1",
                  check_name(inst, ordinal(0)): "ord:0"}
        assert format_formula(phi, lambda nm: labels[nm]) == text

    def test_parse_errors(self, reference):
        inst, family = reference
        resolve = self.resolver(inst, family)
        for bad in ("(mem ord:0", "(foo a b)", "(eq ord:0)", "ord:0", "(not)"):
            with pytest.raises(ParseError):
                parse_formula(bad, resolve)


class TestSpaceGuards:
    def test_large_instance_rejected_for_recursive_mode(self, staged_pair):
        staged, _ = staged_pair
        with pytest.raises(InvalidInstance):
            _space(staged)

    def test_act_formula_structure(self, reference):
        inst, family = reference
        pi = FiberPermutation.transposition(inst, "b", 0, 1)
        phi = And(Mem(family.rows[("b", 0)], family.sites["b"]),
                  Not(Eq(family.rows[("b", 0)], family.rows[("b", 1)])))
        moved = act_formula(pi, phi)
        assert moved.left.left is family.rows[("b", 1)]
        assert moved.right.body.right is family.rows[("b", 0)]
