import math

import numpy as np
import pytest

from bbm92kit import (
    Basis,
    Bit,
    ModePartition,
    PolarizedFockState,
    basis_state,
    inner_product,
    multimode_inner_product,
)

SQ2 = math.sqrt(2.0)


def ladder_oracle(n: int, sign: int) -> np.ndarray:
    """Independent construction of the diagonal states via creation operators.

    Applies (a_H^dag + sign * a_V^dag)^n to the vacuum in the two-mode
    occupation basis and normalizes by sqrt(2^n n!); returns amplitudes
    indexed by the H-photon count.
    """
    amps = {(0, 0): 1.0}
    for _ in range(n):
        new: dict[tuple[int, int], float] = {}
        for (h, v), a in amps.items():
            new[(h + 1, v)] = new.get((h + 1, v), 0.0) + a * math.sqrt(h + 1)
            new[(h, v + 1)] = new.get((h, v + 1), 0.0) + sign * a * math.sqrt(v + 1)
        amps = new
    scale = math.sqrt(2.0**n * math.factorial(n))
    out = np.zeros(n + 1)
    for (h, v), a in amps.items():
        assert h + v == n
        out[h] = a / scale
    return out


def compositions(n: int):
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first, *rest)


class TestBasisState:
    def test_single_photon_z(self):
        assert np.allclose(basis_state(1, Basis.Z, Bit.ZERO).amplitudes, [0, 1])
        assert np.allclose(basis_state(1, Basis.Z, Bit.ONE).amplitudes, [1, 0])

    def test_single_photon_x(self):
        assert np.allclose(basis_state(1, Basis.X, Bit.ZERO).amplitudes, [1 / SQ2, 1 / SQ2])
        assert np.allclose(basis_state(1, Basis.X, Bit.ONE).amplitudes, [-1 / SQ2, 1 / SQ2])

    def test_two_photon_x(self):
        # expansion of the two-photon diagonal state
        assert np.allclose(
            basis_state(2, Basis.X, Bit.ZERO).amplitudes, [0.5, 1 / SQ2, 0.5], atol=1e-15
        )

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("b", [Bit.ZERO, Bit.ONE])
    def test_x_states_match_ladder_oracle(self, n, b):
        sign = 1 if b is Bit.ZERO else -1
        assert np.allclose(
            basis_state(n, Basis.X, b).amplitudes, ladder_oracle(n, sign), atol=1e-14
        )

    @pytest.mark.parametrize("n", range(1, 9))
    def test_normalized(self, n):
        for w in Basis:
            for b in Bit:
                assert np.linalg.norm(basis_state(n, w, b).amplitudes) == pytest.approx(
                    1.0, abs=1e-13
                )

    def test_rejects_zero_photons(self):
        with pytest.raises(ValueError):
            basis_state(0, Basis.Z, Bit.ZERO)

    def test_rejects_above_cap(self):
        with pytest.raises(ValueError):
            basis_state(33, Basis.X, Bit.ZERO)


class TestInnerProduct:
    def test_known_overlap_values(self):
        assert inner_product(
            basis_state(1, Basis.X, Bit.ZERO), basis_state(1, Basis.Z, Bit.ZERO)
        ) == pytest.approx(2**-0.5, abs=1e-12)
        assert inner_product(
            basis_state(2, Basis.X, Bit.ONE), basis_state(2, Basis.Z, Bit.ONE)
        ) == pytest.approx(0.5, abs=1e-12)
        assert inner_product(
            basis_state(3, Basis.X, Bit.ONE), basis_state(3, Basis.Z, Bit.ONE)
        ) == pytest.approx(-(2**-1.5), abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_overlap_law(self, n):
        for b in Bit:
            for b2 in Bit:
                got = inner_product(basis_state(n, Basis.X, b), basis_state(n, Basis.Z, b2))
                want = (-1.0) ** (int(b) * int(b2) * n) * 2.0 ** (-n / 2.0)
                assert got == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("w", [Basis.Z, Basis.X])
    def test_same_basis_orthogonality(self, n, w):
        assert inner_product(
            basis_state(n, w, Bit.ZERO), basis_state(n, w, Bit.ONE)
        ) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_mismatched_photon_numbers(self):
        with pytest.raises(ValueError):
            inner_product(basis_state(1, Basis.Z, Bit.ZERO), basis_state(2, Basis.Z, Bit.ZERO))


class TestMultimode:
    def test_two_single_photon_modes(self):
        got = multimode_inner_product(
            ModePartition((1, 1)), Basis.X, Bit.ZERO, Basis.Z, Bit.ZERO
        )
        assert got == pytest.approx(0.5, abs=1e-12)

    def test_two_one_split_of_three(self):
        got = multimode_inner_product(
            ModePartition((2, 1)), Basis.X, Bit.ONE, Basis.Z, Bit.ONE
        )
        assert got == pytest.approx(-(2**-1.5), abs=1e-12)

    def test_degenerate_partition(self):
        for w1, b1, w2, b2 in [
            (Basis.X, Bit.ZERO, Basis.Z, Bit.ONE),
            (Basis.Z, Bit.ONE, Basis.Z, Bit.ONE),
            (Basis.X, Bit.ONE, Basis.X, Bit.ZERO),
        ]:
            got = multimode_inner_product(ModePartition((3,)), w1, b1, w2, b2)
            want = inner_product(basis_state(3, w1, b1), basis_state(3, w2, b2))
            assert got == pytest.approx(want, abs=1e-15)

    @pytest.mark.parametrize("n", range(2, 7))
    def test_all_partitions_match_single_mode(self, n):
        for parts in compositions(n):
            for b in Bit:
                for b2 in Bit:
                    got = multimode_inner_product(
                        ModePartition(parts, n=n), Basis.X, b, Basis.Z, b2
                    )
                    want = (-1.0) ** (int(b) * int(b2) * n) * 2.0 ** (-n / 2.0)
                    assert got == pytest.approx(want, abs=1e-12)

    def test_rejects_empty_partition(self):
        with pytest.raises(ValueError):
            ModePartition(())

    def test_rejects_nonpositive_parts(self):
        with pytest.raises(ValueError):
            ModePartition((2, 0, 1))

    def test_rejects_wrong_total(self):
        with pytest.raises(ValueError):
            ModePartition((2, 1), n=4)


class TestPolarizedFockState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PolarizedFockState(1, np.array([0.5, 0.5]))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            PolarizedFockState(2, np.array([1.0, 0.0]))

    def test_amplitudes_read_only(self):
        state = basis_state(2, Basis.X, Bit.ZERO)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 1.0
