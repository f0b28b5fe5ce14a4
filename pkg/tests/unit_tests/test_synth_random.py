import pytest

from shuttlehit.synth.random import MASK_64, Xorshift64Star, splitmix64


def test_same_seed_same_sequence():
    a, b = Xorshift64Star(42), Xorshift64Star(42)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_differ():
    a, b = Xorshift64Star(1), Xorshift64Star(2)
    assert [a.next_u64() for _ in range(10)] != [b.next_u64() for _ in range(10)]


def test_seed_zero_is_usable():
    rng = Xorshift64Star(0)
    values = {rng.next_u64() for _ in range(50)}
    assert len(values) == 50
    assert all(0 <= v <= MASK_64 for v in values)


def test_splitmix_is_a_64_bit_mix():
    assert splitmix64(0) != 0
    assert splitmix64(1) != splitmix64(2)
    assert 0 <= splitmix64(MASK_64) <= MASK_64


def test_random_range():
    rng = Xorshift64Star(3)
    values = [rng.random() for _ in range(5000)]
    assert all(0 <= v < 1 for v in values)
    assert 0.45 < sum(values) / len(values) < 0.55


def test_uniform():
    rng = Xorshift64Star(4)
    assert all(-2 <= rng.uniform(-2, 3) < 3 for _ in range(1000))


def test_randint_covers_inclusive_range():
    rng = Xorshift64Star(5)
    seen = {rng.randint(3, 7) for _ in range(1000)}
    assert seen == {3, 4, 5, 6, 7}
    assert rng.randint(9, 9) == 9
    with pytest.raises(ValueError):
        rng.randint(2, 1)


def test_choice():
    rng = Xorshift64Star(6)
    assert {rng.choice("AB") for _ in range(100)} == {"A", "B"}
    with pytest.raises(ValueError):
        rng.choice([])
