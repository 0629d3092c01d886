import os
import sys
import unittest

import torch

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from open_systems import channels, gksl
from open_systems.errors import (DomainError, HermiticityError, NormalizationError,
                                 NotCompletelyPositiveGenerator, NotTracePreserving)
from open_systems.linalg import DTYPE, identity, matrix_unit, max_norm
from open_systems.random_ops import generate_density_matrix, generate_gksl_generator
from open_systems.states import LOWERING, SIGMA_X, SIGMA_Y, SIGMA_Z, ket, project
from generate_examples import amplitude_damping_generator


class TestSuperoperators(unittest.TestCase):
    def test_sandwich_matches_vec(self):
        rng = torch.Generator().manual_seed(7)
        A, B, X = (torch.randn(3, 3, dtype=DTYPE, generator=rng) for _ in range(3))
        self.assertLess(max_norm(gksl.sandwich(A, B) @ gksl.vec(X) - gksl.vec(A @ X @ B)), 1e-12)
        self.assertTrue(torch.equal(gksl.unvec(gksl.vec(X), 3), X))

    def test_from_map_agrees_on_matrix_units(self):
        S = gksl.Superoperator.from_map(lambda X: SIGMA_X @ X @ SIGMA_Z, 2)
        for j in range(2):
            for k in range(2):
                E = matrix_unit(2, j, k)
                self.assertLess(max_norm(S(E) - SIGMA_X @ E @ SIGMA_Z), 1e-12)

    def test_choi_round_trip(self):
        channel = channels.amplitude_damping(0.4)
        S = gksl.superop_from_choi(channel.choi, 2)
        self.assertTrue(torch.equal(gksl.superop_to_choi(S), channel.choi))
        rho = project(ket(2, 1)).matrix
        self.assertLess(max_norm(S(rho) - channel.apply_operator(rho)), 1e-14)


class TestGenerator(unittest.TestCase):
    def test_zero_generator(self):
        S = gksl.superop_from_generator(gksl.GKSLGenerator(2, torch.zeros(2, 2)))
        self.assertEqual(max_norm(S.matrix), 0.0)

    def test_amplitude_damping_action(self):
        G = amplitude_damping_generator(0.5)
        G = gksl.GKSLGenerator(2, torch.zeros(2, 2), G.jumps)
        excited = project(ket(2, 1)).matrix
        ground = project(ket(2, 0)).matrix
        self.assertLess(max_norm(gksl.superop_from_generator(G)(excited) - 0.5 * (ground - excited)), 1e-14)

    def test_hamiltonian_action(self):
        S = gksl.superop_from_generator(gksl.GKSLGenerator(2, SIGMA_Z))
        self.assertLess(max_norm(S(SIGMA_X) - 2 * SIGMA_Y), 1e-14)

    def test_validation(self):
        with self.assertRaises(HermiticityError):
            gksl.GKSLGenerator(2, LOWERING)
        with self.assertRaises(DomainError):
            gksl.GKSLGenerator(2, SIGMA_Z, ((LOWERING, -1.0),))

    def test_gell_mann_basis(self):
        for d in (2, 3, 4):
            basis = gksl.gell_mann_basis(d)
            self.assertEqual(basis.F.shape, (d * d, d, d))
            self.assertLess(max_norm(basis.F[-1] - identity(d) / d**0.5), 1e-15)

    def test_bad_basis(self):
        F = gksl.gell_mann_basis(2).F.clone()
        F[0] = 2 * F[0]
        with self.assertRaises(NormalizationError):
            gksl.OperatorBasis(2, F)


class TestEvolution(unittest.TestCase):
    def setUp(self):
        self.rng = torch.Generator().manual_seed(8)

    def test_evolve_at_zero(self):
        G = generate_gksl_generator(3, generator=self.rng)
        rho = generate_density_matrix(3, generator=self.rng)
        self.assertLess(max_norm(gksl.evolve(G, rho, 0.0).matrix - rho.matrix), 1e-12)
        with self.assertRaises(DomainError):
            gksl.evolve(G, rho, -1.0)

    def test_amplitude_damping_relaxes(self):
        G = amplitude_damping_generator(0.5)
        rho = gksl.evolve(G, project(ket(2, 1)), 80.0)
        self.assertLess(max_norm(rho.matrix - project(ket(2, 0)).matrix), 1e-8)

    def test_trace_and_hermiticity_preserved(self):
        G = generate_gksl_generator(2, generator=self.rng)
        rho0 = generate_density_matrix(2, generator=self.rng)
        for t in torch.linspace(0, 10 / G.max_rate(), 20).tolist():
            S = gksl.propagator(G, t)
            X = S(rho0.matrix)
            self.assertAlmostEqual(torch.trace(X).real.item(), 1.0, places=9)
            self.assertLess(max_norm(X - X.mH), 1e-9)

    def test_propagator_is_cptp(self):
        G = generate_gksl_generator(3, generator=self.rng)
        for t in (0.01, 0.5, 2.0):
            report = channels.is_cptp(gksl.superop_to_choi(gksl.propagator(G, t)), 3)
            self.assertGreaterEqual(report.min_choi_eig, -1e-8)
            self.assertTrue(report.tp)

    def test_semigroup_law(self):
        G = generate_gksl_generator(2, generator=self.rng)
        self.assertLess(gksl.semigroup_check(G, 0.0, 0.0), 1e-15)
        self.assertLess(gksl.semigroup_check(G, 0.3, 0.7), 1e-9)
        self.assertLess(gksl.semigroup_check(amplitude_damping_generator(0.5), 1.0, 2.0), 1e-9)


class TestDecomposition(unittest.TestCase):
    def setUp(self):
        self.rng = torch.Generator().manual_seed(9)

    def test_zero_superoperator(self):
        decomposition = gksl.gksl_decompose(gksl.Superoperator(2, torch.zeros(4, 4)))
        self.assertLess(max_norm(decomposition.generator.H), 1e-14)
        self.assertLess(max(decomposition.generator.gammas), 1e-14)

    def test_amplitude_damping_round_trip(self):
        G = amplitude_damping_generator(0.5)
        L = gksl.superop_from_generator(G)
        decomposition = gksl.gksl_decompose(L)
        self.assertLess(decomposition.residual, 1e-9)
        self.assertEqual(len(decomposition.generator.jumps), 3)
        self.assertAlmostEqual(decomposition.generator.max_rate(), 0.5, places=10)
        self.assertAlmostEqual(torch.trace(decomposition.generator.H).abs().item(), 0.0, places=12)
        self.assertLess(max_norm(decomposition.generator.H - SIGMA_Z), 1e-10)

    def test_random_round_trip(self):
        for d in (2, 3):
            for _ in range(5):
                L = gksl.superop_from_generator(generate_gksl_generator(d, generator=self.rng))
                self.assertLess(gksl.gksl_decompose(L).residual, 1e-9)

    def test_finite_difference_is_completely_positive(self):
        G = generate_gksl_generator(2, generator=self.rng)
        L = gksl.finite_difference_generator(gksl.propagator_channel(G, 1e-3), 1e-3)
        decomposition = gksl.gksl_decompose(L)
        self.assertGreaterEqual(decomposition.a_min_eig, -1e-8)
        self.assertAlmostEqual(decomposition.a_min_eig, torch.linalg.eigvalsh(decomposition.a_matrix).min().item(), places=12)
        self.assertLess(max_norm(L.matrix - gksl.superop_from_generator(G).matrix), 1e-2 * max(1.0, max_norm(L.matrix)) ** 2)

    def test_transpose_generator_is_rejected(self):
        L = gksl.Superoperator.from_map(lambda X: X.mT - X, 2)
        with self.assertRaises(NotCompletelyPositiveGenerator) as ctx:
            gksl.gksl_decompose(L)
        self.assertLessEqual(ctx.exception.min_eigenvalue, -0.5)

    def test_trace_violation(self):
        L = gksl.Superoperator(2, identity(4))
        with self.assertRaises(NotTracePreserving):
            gksl.gksl_decompose(L)

    def test_json_round_trip(self):
        G = amplitude_damping_generator(0.5)
        parsed = gksl.generator_from_json(gksl.generator_to_json(G))
        self.assertLess(max_norm(gksl.superop_from_generator(parsed).matrix - gksl.superop_from_generator(G).matrix), 1e-15)


if __name__ == "__main__":
    unittest.main()
