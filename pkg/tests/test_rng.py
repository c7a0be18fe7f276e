"""Frozen vectors and stream laws for the portable RNG stack.

The hex expectations below were computed from the published reference
algorithms (PCG32 XSH-RR 64/32 demo seeding, FNV-1a 64, SplitMix64) and
are pinned so any refactor that silently changes a stream fails loudly.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from climashift.errors import ContractError
from climashift.rng import DEFAULT_STREAM, Pcg32, derive_seed, fnv1a64_str, splitmix64

U64 = st.integers(min_value=0, max_value=(1 << 64) - 1)


class TestFrozenVectors:
    def test_pcg32_demo_sequence(self):
        r = Pcg32(42, 54)
        got = [r.next_u32() for _ in range(6)]
        assert got == [0xA15C02B7, 0x7B47F409, 0xBA1D3330,
                       0x83D2F293, 0xBFA4784B, 0xCBED606E]

    def test_fnv1a64_reference_strings(self):
        assert fnv1a64_str("") == 0xCBF29CE484222325
        assert fnv1a64_str("a") == 0xAF63DC4C8601EC8C
        assert fnv1a64_str("foobar") == 0x85944171F73967E8

    def test_splitmix64_zero_seed(self):
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert splitmix64(splitmix64(0)) != splitmix64(0)

    def test_derive_seed_pinned(self):
        # regression pin: every stream in the package hangs off this chain
        assert derive_seed(42, "a", "b") == 0xA9B07253B4AEC603


class TestDeriveSeed:
    def test_label_order_matters(self):
        assert derive_seed(7, "a", "b") != derive_seed(7, "b", "a")

    def test_distinct_labels_distinct_seeds(self):
        seeds = {derive_seed(0, f"label:{i}") for i in range(1000)}
        assert len(seeds) == 1000

    @given(U64, st.text(max_size=20))
    @settings(max_examples=50)
    def test_range_and_determinism(self, root, label):
        a = derive_seed(root, label)
        assert 0 <= a < (1 << 64)
        assert a == derive_seed(root, label)


class TestPcg32Streams:
    def test_default_stream_constant(self):
        assert Pcg32(5).next_u32() == Pcg32(5, DEFAULT_STREAM).next_u32()

    def test_fill_matches_scalar_across_blocks(self):
        # 10000 crosses the fallback's 4096-wide block boundary twice
        a = Pcg32(123, 9)
        b = Pcg32(123, 9)
        bulk = a.fill_u32(10000)
        singles = np.array([b.next_u32() for b_ in range(10000)], dtype=np.uint32)
        assert (bulk == singles).all()
        assert a.next_u32() == b.next_u32()

    def test_uniform_law(self):
        r = Pcg32(2024)
        u32 = Pcg32(2024).fill_u32(256)
        u = r.uniforms(256)
        assert np.allclose(u, (u32 + 0.5) * 2.0 ** -32, rtol=0, atol=0)
        assert (u > 0).all() and (u < 1).all()

    def test_normals_odd_is_prefix_of_even(self):
        even = Pcg32(77).normals(10)
        odd = Pcg32(77).normals(9)
        assert (odd == even[:9]).all()

    def test_normals_moments(self):
        z = Pcg32(31337).normals(200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_bounded_range(self):
        r = Pcg32(5)
        draws = [r.bounded(17) for _ in range(2000)]
        assert min(draws) >= 0 and max(draws) < 17
        assert len(set(draws)) == 17

    def test_shuffle_is_permutation_and_deterministic(self):
        x = np.arange(50)
        y = x.copy()
        Pcg32(1).shuffle(x)
        Pcg32(1).shuffle(y)
        assert (x == y).all()
        assert sorted(x.tolist()) == list(range(50))

    def test_sample_subset_without_replacement(self):
        pop = list(range(100))
        got = Pcg32(9).sample(pop, 10)
        assert len(got) == 10
        assert len(set(got)) == 10
        assert set(got) <= set(pop)
        assert got == Pcg32(9).sample(pop, 10)

    def test_sample_whole_population(self):
        pop = ["a", "b", "c"]
        got = Pcg32(3).sample(pop, 3)
        assert sorted(got) == pop

    def test_sample_too_many_raises(self):
        with pytest.raises(ContractError):
            Pcg32(0).sample([1, 2], 3)
