import os
import sys
import unittest

import torch

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from open_systems import channels
from open_systems.errors import (CompletenessError, CompletePositivityError, DimensionError,
                                 HermiticityError, IsometryError, TraceError)
from open_systems.linalg import DTYPE, identity, is_unitary, max_norm
from open_systems.random_ops import generate_channel, generate_density_matrix, generate_kraus_set
from open_systems.states import (SIGMA_X, SIGMA_Y, SIGMA_Z, bell_state, ket,
                                 maximally_mixed, product_state, project)
from standard_metrics import dilation_state_error


class TestKraus(unittest.TestCase):
    def setUp(self):
        self.rng = torch.Generator().manual_seed(2)

    def test_identity_choi_is_rank_one(self):
        choi = channels.identity_channel(2).choi
        v = identity(2).reshape(-1)
        self.assertLess(max_norm(choi - torch.outer(v, v)), 1e-14)
        self.assertAlmostEqual(torch.trace(choi).real.item(), 2.0)

    def test_choi_follows_output_first_convention(self):
        channel = channels.amplitude_damping(0.3)
        for j in range(2):
            for k in range(2):
                E = torch.zeros(2, 2, dtype=DTYPE)
                E[j, k] = 1
                image = channel.apply_operator(E)
                for m in range(2):
                    for n in range(2):
                        self.assertAlmostEqual(
                            (channel.choi[m * 2 + j, n * 2 + k] - image[m, n]).abs().item(), 0.0, places=14
                        )

    def test_pauli_kraus_gives_fully_depolarizing_choi(self):
        ops = torch.stack([identity(2), SIGMA_X, SIGMA_Y, SIGMA_Z]) / 2
        channel = channels.choi_from_kraus(ops)
        self.assertLess(max_norm(channel.choi - identity(4) / 2), 1e-14)
        self.assertLess(max_norm(channel.choi - channels.depolarizing(1.0).choi), 1e-14)

    def test_incomplete_kraus_set(self):
        with self.assertRaises(CompletenessError):
            channels.KrausSet(torch.stack([identity(2), SIGMA_X]))

    def test_too_many_kraus_operators(self):
        with self.assertRaises(DimensionError):
            channels.KrausSet(torch.stack([identity(2) / 5**0.5] * 5))

    def test_identity_channel_has_single_kraus(self):
        kraus = channels.kraus_from_choi(channels.identity_channel(3))
        self.assertEqual(len(kraus), 1)
        self.assertLess(max_norm(kraus.operators[0] - identity(3)), 1e-12)

    def test_amplitude_damping_kraus_singular_values(self):
        kraus = channels.kraus_from_choi(channels.amplitude_damping(0.3))
        self.assertEqual(len(kraus), 2)
        singular = [torch.linalg.svdvals(K).tolist() for K in kraus]
        expected = [[1.0, 0.7**0.5], [0.3**0.5, 0.0]]
        for got, want in zip(singular, expected):
            for a, b in zip(got, want):
                self.assertAlmostEqual(a, b, places=12)

    def test_kraus_phase_gauge(self):
        for K in channels.kraus_from_choi(generate_channel(3, generator=self.rng)):
            flat = K.reshape(-1)
            pivot = flat[flat.abs().argmax()]
            self.assertAlmostEqual(pivot.imag.item(), 0.0, places=12)
            self.assertGreater(pivot.real.item(), 0)

    def test_round_trip(self):
        for d in (2, 3):
            for _ in range(10):
                channel = channels.choi_from_kraus(generate_kraus_set(d, generator=self.rng))
                kraus = channels.kraus_from_choi(channel)
                self.assertLessEqual(len(kraus), d * d)
                self.assertLess(max_norm(channels.choi_matrix_from_operators(kraus.operators) - channel.choi), 1e-10)
                self.assertLess(channels.completeness_residual(kraus.operators), 1e-9)

    def test_compose_with_identity(self):
        channel = generate_channel(2, generator=self.rng)
        composed = channels.compose(channel, channels.identity_channel(2))
        self.assertLess(max_norm(composed.choi - channel.choi), 1e-10)


class TestCPTP(unittest.TestCase):
    def test_identity_is_cptp(self):
        report = channels.is_cptp(channels.identity_channel(2).choi, 2)
        self.assertTrue(report.cp and report.tp)

    def test_transpose_is_not_cp(self):
        report = channels.is_cptp(channels.transpose_choi(2), 2)
        self.assertFalse(report.cp)
        self.assertTrue(report.tp)
        self.assertAlmostEqual(report.min_choi_eig, -1.0, places=12)
        with self.assertRaises(CompletePositivityError):
            channels.QuantumChannel(2, channels.transpose_choi(2))

    def test_scaled_identity_is_not_tp(self):
        report = channels.is_cptp(2 * channels.identity_channel(2).choi, 2)
        self.assertTrue(report.cp)
        self.assertFalse(report.tp)
        with self.assertRaises(TraceError):
            channels.QuantumChannel(2, 2 * channels.identity_channel(2).choi)

    def test_non_hermitian_candidate(self):
        C = torch.zeros(4, 4, dtype=DTYPE)
        C[0, 1] = 1
        with self.assertRaises(HermiticityError):
            channels.is_cptp(C, 2)

    def test_apply(self):
        rho = generate_density_matrix(2, generator=torch.Generator().manual_seed(3))
        self.assertLess(max_norm(channels.apply(channels.identity_channel(2), rho).matrix - rho.matrix), 1e-14)
        decayed = channels.amplitude_damping(1.0)(rho)
        self.assertLess(max_norm(decayed.matrix - project(ket(2, 0)).matrix), 1e-14)
        with self.assertRaises(DimensionError):
            channels.apply(channels.identity_channel(3), rho)

    def test_apply_within_trace_slack(self):
        # accepted: trace-preservation residual 5e-10 is below CP_TOL
        channel = channels.QuantumChannel(2, (1 + 5e-10) * channels.identity_channel(2).choi)
        out = channels.apply(channel, maximally_mixed(2))
        self.assertAlmostEqual(torch.trace(out.matrix).real.item(), 1.0, places=14)
        self.assertLess(max_norm(out.matrix - identity(2) / 2), 1e-9)


class TestDilation(unittest.TestCase):
    def setUp(self):
        self.rng = torch.Generator().manual_seed(4)

    def test_extend_isometry(self):
        U = channels.extend_isometry(torch.tensor([[1.0], [0.0]], dtype=DTYPE))
        self.assertLess(max_norm(U - identity(2)), 1e-14)
        U = channels.extend_isometry([torch.tensor([1.0, 1.0], dtype=DTYPE) / 2**0.5])
        self.assertTrue(is_unitary(U))
        self.assertAlmostEqual(abs(torch.vdot(U[:, 1], torch.tensor([1.0, -1.0], dtype=DTYPE)).item()), 2**0.5, places=12)
        with self.assertRaises(IsometryError):
            channels.extend_isometry(torch.tensor([[1.0], [1.0]], dtype=DTYPE))

    def test_extend_isometry_keeps_full_unitary(self):
        V = torch.tensor([[0, 1], [1, 0]], dtype=DTYPE)
        self.assertTrue(torch.equal(channels.extend_isometry(V), V))

    def test_identity_dilation(self):
        dilation = channels.dilate(channels.identity_channel(2))
        self.assertEqual(dilation.dim_r, 1)
        self.assertLess(max_norm(dilation.U - identity(2)), 1e-12)

    def test_unitary_channel_dilation(self):
        H = torch.tensor([[0, 1], [1, 0]], dtype=DTYPE)
        dilation = channels.dilate(channels.unitary_channel(H))
        self.assertEqual(dilation.dim_r, 1)
        self.assertLess(max_norm(dilation.U - H), 1e-12)

    def test_amplitude_damping_dilation(self):
        channel = channels.amplitude_damping(0.3)
        dilation = channels.dilate(channel)
        self.assertEqual(dilation.dim_r, 2)
        states = [generate_density_matrix(2, generator=self.rng) for _ in range(20)]
        self.assertLess(dilation_state_error(dilation, channel, states), 1e-9)
        self.assertLess(dilation.residual(channel), 1e-9)

    def test_dilation_within_completeness_slack(self):
        channel = channels.QuantumChannel(2, (1 + 5e-10) * channels.identity_channel(2).choi)
        dilation = channels.dilate(channel)
        self.assertTrue(is_unitary(dilation.U))
        self.assertLess(dilation.residual(channel), 1e-8)
        rho = generate_density_matrix(2, generator=self.rng)
        self.assertLess(max_norm(dilation.reduce(rho).matrix - rho.matrix), 1e-9)

    def test_orthonormalize_columns(self):
        V = torch.tensor([[1.0, 1e-9], [0.0, 1.0 + 1e-9], [0.0, 0.0]], dtype=DTYPE)
        Q = channels.orthonormalize_columns(V)
        self.assertLess(max_norm(Q.mH @ Q - identity(2)), 1e-14)
        self.assertLess(max_norm(Q - V), 1e-8)
        with self.assertRaises(IsometryError):
            channels.orthonormalize_columns(torch.tensor([[1.0, 1.0], [0.0, 0.0]], dtype=DTYPE))

    def test_random_dilations(self):
        for d in (2, 3):
            channel = generate_channel(d, generator=self.rng)
            dilation = channels.dilate(channel)
            self.assertLessEqual(dilation.dim_r, d * d)
            self.assertTrue(is_unitary(dilation.U))
            states = [generate_density_matrix(d, generator=self.rng) for _ in range(10)]
            self.assertLess(dilation_state_error(dilation, channel, states), 1e-9)


class TestPPT(unittest.TestCase):
    def test_bell_state(self):
        rho = project(bell_state())
        eigenvalues = torch.linalg.eigvalsh(channels.partial_transpose(rho, 2, 2))
        self.assertLess(max_norm(eigenvalues - torch.tensor([-0.5, 0.5, 0.5, 0.5], dtype=torch.float64)), 1e-12)
        self.assertAlmostEqual(channels.ppt_min_eig(rho, 2, 2), -0.5, places=10)

    def test_product_states_are_ppt(self):
        rng = torch.Generator().manual_seed(5)
        for _ in range(10):
            rho = product_state(generate_density_matrix(2, generator=rng), generate_density_matrix(3, generator=rng))
            self.assertGreaterEqual(channels.ppt_min_eig(rho, 2, 3), -1e-12)

    def test_maximally_mixed(self):
        self.assertAlmostEqual(channels.ppt_min_eig(maximally_mixed(4), 2, 2), 0.25, places=14)

    def test_partial_transpose_is_an_involution(self):
        rho = generate_density_matrix(6, generator=torch.Generator().manual_seed(6))
        twice = channels.partial_transpose(channels.partial_transpose(rho, 2, 3), 2, 3)
        self.assertLess(max_norm(twice - rho.matrix), 1e-15)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            channels.partial_transpose(maximally_mixed(4), 2, 3)


if __name__ == "__main__":
    unittest.main()
