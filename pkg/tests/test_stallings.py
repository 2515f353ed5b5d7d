import random

import pytest

from ghnclab.ghnc import compare_with_oracle
from ghnclab.stallings import (
    INFINITE,
    SubgroupFileError,
    StallingsGraph,
    basis,
    conjugate,
    fold,
    format_subgroup_file,
    from_generators,
    index_in_ambient,
    intersection,
    is_isomorphic,
    membership,
    parse_subgroup_file,
    pullback,
    rank,
    reduced_rank,
)
from ghnclab.words import AlphabetError, Word, parse_word
from oracles import all_reduced, generated_words, naive_inverse, naive_reduce

a, A, b, B = 1, -1, 2, -2
x, X, y, Y = 1, -1, 2, -2
EXAMPLE = [(x, x), (y,), (x, y, X)]  # <x^2, y, x y x^-1> in F3


def w(text):
    return parse_word(text).letters


class TestFromGenerators:
    def test_cyclic(self):
        g = from_generators([(a,)], 2)
        assert g.num_vertices == 1 and g.edges == [(0, 0, 1)] and rank(g) == 1

    def test_rose(self):
        g = from_generators([(a,), (b,)], 2)
        assert g.num_vertices == 1 and rank(g) == 2

    def test_example_subgroup(self):
        g = from_generators(EXAMPLE, 3)
        assert (g.num_vertices, g.num_edges, rank(g)) == (2, 4, 3)
        assert rank(g) == g.num_edges - g.num_vertices + 1

    def test_generators_are_members(self):
        rng = random.Random(5)
        for _ in range(50):
            gens = [tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 6))) for _ in range(3)]
            gens = [naive_reduce(g) for g in gens]
            g = from_generators(gens, 2)
            assert all(membership(g, s) for s in gens)

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetError):
            from_generators([(3,)], 2)

    def test_order_independent(self):
        g1 = from_generators(EXAMPLE, 3)
        g2 = from_generators(list(reversed(EXAMPLE)), 3)
        assert g1 == g2 and is_isomorphic(g1, g2)

    def test_trivial(self):
        g = from_generators([], 2)
        assert g.num_vertices == 1 and rank(g) == 0 and reduced_rank(g) == 0
        assert g == StallingsGraph.trivial(2)


class TestFold:
    def test_merges_leaves(self):
        g = fold(3, [(0, 1, a), (0, 2, a)], 2)
        assert g.num_vertices == 2 and g.num_edges == 1

    def test_idempotent(self):
        g = from_generators(EXAMPLE, 3)
        again = fold(g.num_vertices, g.edges, 3)
        assert again == g

    def test_wedge_of_paths(self):
        # ab and aB as petals sharing the base
        edges = [(0, 1, a), (1, 0, b), (0, 2, a), (2, 0, -b)]
        g = fold(3, edges, 2)
        assert rank(g) == 2
        assert g == from_generators([(a, b), (a, B)], 2)


class TestMembership:
    def test_simple(self):
        g = from_generators([(a, a), (b,)], 2)
        assert membership(g, (a, a)) and not membership(g, (a,))

    def test_example_words(self):
        g = from_generators(EXAMPLE, 3)
        assert membership(g, (x, y, X))
        # x y x = (x y x^-1) x^2 lies in the subgroup
        assert membership(g, (x, y, x))
        assert naive_reduce((x, y, X) + (x, x)) == (x, y, x)
        assert not membership(g, (x,)) and not membership(g, (x, y))

    def test_against_product_enumeration(self):
        gens = [(a, a), (b,), (a, b, A)]
        g = from_generators(gens, 2)
        ball = generated_words(gens, 5)
        for word in all_reduced(2, 5):
            assert membership(g, word) == (word in ball)

    def test_alphabet(self):
        with pytest.raises(AlphabetError):
            membership(from_generators([(a,)], 2), (3,))


class TestRankIndex:
    def test_rank_examples(self):
        assert rank(StallingsGraph.trivial(2)) == 0
        assert rank(from_generators([(i,) for i in range(1, 5)], 4)) == 4

    def test_reduced_rank(self):
        assert reduced_rank(from_generators([(a,)], 2)) == 0
        assert reduced_rank(from_generators([(a,), (b,)], 2)) == 1

    def test_index(self):
        assert index_in_ambient(from_generators([(a,), (b,)], 2)) == 1
        assert index_in_ambient(from_generators([(a, a), (b,), (a, b, A)], 2)) == 2
        assert index_in_ambient(from_generators([(a,)], 2)) == INFINITE


class TestBasis:
    def test_rose(self):
        assert basis(from_generators([(b,), (a,)], 2)) == [Word((a,)), Word((b,))]

    def test_square(self):
        assert basis(from_generators([(a, a)], 2)) == [Word((a, a))]

    def test_roundtrip(self):
        g = from_generators(EXAMPLE, 3)
        bs = basis(g)
        assert len(bs) == 3 and from_generators(bs, 3) == g


class TestConjugate:
    def test_cyclic(self):
        g = conjugate(from_generators([(a,)], 2), (b,))
        assert g == from_generators([(B, a, b)], 2)

    def test_identity(self):
        g = from_generators(EXAMPLE, 3)
        assert conjugate(g, ()) is g

    def test_commensurating(self):
        g = from_generators([(a, a), (b,)], 2)
        h = conjugate(g, (a,))
        assert h != g
        expected = [(a, a), (A, b, a)]
        for word in all_reduced(2, 6):
            assert membership(h, word) == membership(from_generators(expected, 2), word)
            # t^-1 H t contains word iff H contains t word t^-1
            assert membership(h, word) == membership(g, naive_reduce((a,) + word + (A,)))


class TestPullback:
    def test_same_cyclic(self):
        g = from_generators([(a,)], 2)
        comps = pullback(g, g)
        assert len(comps) == 1
        c = comps[0]
        assert c.is_base and c.representative == Word() and c.intersection == g and c.reduced_rank == 0

    def test_ambient(self):
        f2 = from_generators([(a,), (b,)], 2)
        comps = pullback(f2, f2)
        assert len(comps) == 1 and comps[0].reduced_rank == 1

    def test_powers_of_a_with_b(self):
        gU = from_generators([(a, a), (b,)], 2)
        gV = from_generators([(a, a, a), (b,)], 2)
        comps = [c for c in pullback(gU, gV) if not c.degenerate]
        # Both are free products <a^k> * <b>; reduced normal forms force the
        # a-exponents of a common element to be multiples of 6.
        assert comps[0].intersection == from_generators([(a,) * 6, (b,)], 2)
        assert [c.reduced_rank for c in comps] == [1]
        assert compare_with_oracle(gU, gV, 8).agrees

    def test_conjugation_convention(self):
        gU = from_generators([(a,), (b, a, B)], 2)
        gV = from_generators([(a,)], 2)
        for c in pullback(gU, gV):
            t = c.representative.letters
            expected = intersection(gU, conjugate(gV, naive_inverse(t)))
            assert c.intersection == expected
            for s in basis(c.intersection):
                assert membership(gU, s)
                assert membership(gV, naive_reduce(naive_inverse(t) + s.letters + t))

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetError):
            pullback(from_generators([(a,)], 2), from_generators([(a,)], 3))


class TestIntersection:
    def test_disjoint_cyclic(self):
        assert rank(intersection(from_generators([(a,)], 2), from_generators([(b,)], 2))) == 0

    def test_idempotent(self):
        g = from_generators(EXAMPLE, 3)
        assert intersection(g, g) == g

    def test_squares_vs_ab(self):
        gU = from_generators([(a, a), (b, b)], 2)
        gV = from_generators([(a, b)], 2)
        g = intersection(gU, gV)
        for word in all_reduced(2, 8):
            assert membership(g, word) == (membership(gU, word) and membership(gV, word))
        assert rank(g) == 0


class TestFiles:
    def test_parse_and_format(self):
        text = "# comment\nalphabet: 3\naa   # x^2\nb\nabA\n"
        alphabet, gens = parse_subgroup_file(text)
        assert alphabet.rank == 3 and [g.letters for g in gens] == EXAMPLE
        assert parse_subgroup_file(format_subgroup_file(alphabet, gens)) == (alphabet, gens)

    def test_errors_have_position(self):
        with pytest.raises(SubgroupFileError) as info:
            parse_subgroup_file("alphabet: 2\nab\n  aBc\n")
        assert (info.value.line, info.value.column) == (3, 5)
        with pytest.raises(SubgroupFileError) as info:
            parse_subgroup_file("aa\n")
        assert info.value.line == 1
        with pytest.raises(SubgroupFileError):
            parse_subgroup_file("alphabet: two\n")

    def test_dot(self):
        dot = from_generators(EXAMPLE, 3).to_dot()
        assert dot.startswith("digraph") and "doublecircle" in dot and 'label="b"' in dot
