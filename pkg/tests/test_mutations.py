import random

import pytest

from lib.errors import DomainError
from lib.mutations import (
    MutationSystem,
    apply_signs,
    braid_orbit_search,
    mutate_left,
    mutate_right,
    sign_match,
)

P1_GRAM = ((1, 2), (0, 1))
P2_GRAM = ((1, 3, 6), (0, 1, 3), (0, 0, 1))


def test_right_mutation_on_p1(p1):
    system = MutationSystem.from_classes([p1.lattice.named("O"), p1.lattice.named("O(1)")])
    assert system.gram == P1_GRAM
    out = mutate_right(system, 0)
    assert out.gram == ((1, -2), (0, 1))
    assert out.labels == ("O(1)", "O - 2·O(1)")


def test_left_undoes_right(p2):
    system = MutationSystem.from_classes([p2.lattice.basis(i) for i in range(3)])
    for i in range(2):
        back = mutate_left(mutate_right(system, i), i)
        assert back.gram == system.gram
        assert back.classes == system.classes


def test_random_mutations_keep_the_gram_exceptional():
    rng = random.Random(7)
    system = MutationSystem.from_gram(P2_GRAM)
    for _ in range(100):
        i = rng.randrange(2)
        system = mutate_right(system, i) if rng.random() < 0.5 else mutate_left(system, i)
        assert system.unimodular
        assert system.unitriangular


def test_gram_only_systems_carry_no_classes():
    out = mutate_right(MutationSystem.from_gram(P1_GRAM), 0)
    assert out.classes is None
    assert out.labels is None


def test_mutation_position_is_checked():
    with pytest.raises(DomainError):
        mutate_right(MutationSystem.from_gram(P1_GRAM), 1)
    with pytest.raises(DomainError):
        mutate_left(MutationSystem.from_gram(P1_GRAM), -1)


def test_non_square_gram_rejected():
    with pytest.raises(DomainError):
        MutationSystem.from_gram([[1, 2]])


class TestSigns:
    def test_sign_match(self):
        assert sign_match(((1, -2), (0, 1)), P1_GRAM) == (1, -1)
        assert sign_match(P1_GRAM, P1_GRAM) == (1, 1)
        assert sign_match(((1, 3), (0, 1)), P1_GRAM) is None

    def test_apply_signs(self):
        assert apply_signs(P2_GRAM, (1, -1, 1)) == ((1, -3, 6), (0, 1, -3), (0, 0, 1))


class TestOrbitSearch:
    def test_signs_alone(self):
        match = braid_orbit_search([[1, -2], [0, 1]], P1_GRAM)
        assert match.found
        assert match.word == ()
        assert match.signs == (1, -1)

    def test_finds_a_shortest_word(self):
        start = mutate_right(MutationSystem.from_gram(P2_GRAM), 0).gram
        assert start == ((1, -3, 3), (0, 1, -3), (0, 0, 1))
        match = braid_orbit_search(start, P2_GRAM, depth=3)
        assert match.found
        assert len(match.word) == 1
        system = MutationSystem.from_gram(start)
        for tag, i in match.word:
            system = mutate_right(system, i) if tag == "R" else mutate_left(system, i)
        assert apply_signs(system.gram, match.signs) == P2_GRAM

    def test_reports_failure_within_depth(self):
        match = braid_orbit_search(P1_GRAM, ((1, 3), (0, 1)), depth=2)
        assert not match.found
        assert match.explored > 1

    def test_rank_mismatch(self):
        with pytest.raises(DomainError):
            braid_orbit_search(P1_GRAM, P2_GRAM)
