import cmath
import math
import os
import sys
import unittest

import torch

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from open_systems.errors import DimensionError, FormatError, HermiticityError
from open_systems.linalg import (DTYPE, canonicalize_phases, eigh, expm, expm_hermitian, identity,
                                 is_unitary, kron, matrix_from_json, matrix_to_json, max_norm,
                                 partial_trace)
from open_systems.random_ops import generate_hermitian, generate_unitary
from open_systems.states import SIGMA_X, SIGMA_Z, bell_state, project


class TestLinalg(unittest.TestCase):
    def setUp(self):
        self.rng = torch.Generator().manual_seed(0)

    def test_partial_trace_of_product(self):
        A = generate_hermitian(2, generator=self.rng)
        B = generate_hermitian(3, generator=self.rng)
        AB = kron(A, B)
        self.assertLess(max_norm(partial_trace(AB, 2, 3, keep="A") - A * torch.trace(B)), 1e-12)
        self.assertLess(max_norm(partial_trace(AB, 2, 3, keep="B") - torch.trace(A) * B), 1e-12)

    def test_kron_examples(self):
        self.assertTrue(torch.equal(kron(identity(2), identity(2)), identity(4)))
        expected = torch.diag(torch.tensor([1, 1, -1, -1], dtype=DTYPE))
        self.assertTrue(torch.equal(kron(SIGMA_Z, identity(2)), expected))

    def test_kron_mixed_product(self):
        A, C = (torch.randn(2, 3, dtype=DTYPE, generator=self.rng) for _ in range(2))
        C = C.mT
        B, D = torch.randn(3, 2, dtype=DTYPE, generator=self.rng), torch.randn(2, 4, dtype=DTYPE, generator=self.rng)
        self.assertLess(max_norm(kron(A, B) @ kron(C, D) - kron(A @ C, B @ D)), 1e-12)

    def test_partial_trace_of_bell_projector(self):
        rho = project(bell_state()).matrix
        self.assertLess(max_norm(partial_trace(rho, 2, 2, keep="A") - identity(2) / 2), 1e-14)
        self.assertLess(max_norm(partial_trace(rho, 2, 2, keep="B") - identity(2) / 2), 1e-14)

    def test_partial_trace_rejects_bad_shape(self):
        with self.assertRaises(DimensionError):
            partial_trace(identity(5), 2, 3)

    def test_eigh_ascending_and_reconstructs(self):
        H = generate_hermitian(4, generator=self.rng)
        spectrum = eigh(H)
        self.assertTrue(torch.all(spectrum.eigenvalues.diff() >= 0))
        self.assertLess(max_norm(spectrum.reconstruct() - H), 1e-12)

    def test_eigh_rejects_non_hermitian(self):
        with self.assertRaises(HermiticityError):
            eigh(torch.tensor([[0, 1], [0, 0]], dtype=DTYPE))

    def test_eigenvector_phases_are_canonical(self):
        spectrum = eigh(SIGMA_X)
        V = spectrum.eigenvectors
        for k in range(2):
            pivot = V[V[:, k].abs().argmax(), k]
            self.assertAlmostEqual(pivot.imag.item(), 0.0, places=14)
            self.assertGreater(pivot.real.item(), 0)

    def test_canonicalize_phases_picks_first_tie(self):
        V = torch.tensor([[1j, 1], [1j, -1]], dtype=DTYPE) / 2**0.5
        fixed = canonicalize_phases(V)
        self.assertAlmostEqual(fixed[0, 0].real.item(), 2**-0.5, places=14)
        self.assertAlmostEqual(fixed[0, 1].real.item(), 2**-0.5, places=14)

    def test_expm_paths_agree_with_matrix_exp(self):
        H = generate_hermitian(3, generator=self.rng)
        self.assertLess(max_norm(expm(H) - torch.linalg.matrix_exp(H)), 1e-12)
        self.assertLess(max_norm(expm(1j * H) - torch.linalg.matrix_exp(1j * H)), 1e-12)
        M = torch.tensor([[0, 1], [0, 0]], dtype=DTYPE)
        self.assertLess(max_norm(expm(M) - (identity(2) + M)), 1e-14)

    def test_pauli_spectra(self):
        self.assertTrue(torch.allclose(eigh(SIGMA_Z).eigenvalues, torch.tensor([-1.0, 1.0], dtype=torch.float64)))
        spectrum = eigh(SIGMA_X)
        self.assertTrue(torch.allclose(spectrum.eigenvalues, torch.tensor([-1.0, 1.0], dtype=torch.float64)))
        expected = torch.tensor([[1, 1], [-1, 1]], dtype=DTYPE) / 2**0.5
        self.assertLess(max_norm(spectrum.eigenvectors - expected), 1e-14)

    def test_expm_diagonal(self):
        self.assertLess(max_norm(expm(torch.zeros(3, 3, dtype=DTYPE)) - identity(3)), 1e-15)
        U = expm(1j * math.pi * SIGMA_Z / 2)
        self.assertLess(max_norm(U - torch.diag(torch.tensor([1j, -1j], dtype=DTYPE))), 1e-14)

    def test_expm_matches_taylor_series(self):
        M = torch.randn(4, 4, dtype=DTYPE, generator=self.rng)
        M = M / torch.linalg.matrix_norm(M, ord=2)
        series, term = identity(4), identity(4)
        for k in range(1, 30):
            term = term @ M / k
            series = series + term
        self.assertLess(max_norm(expm(M) - series), 1e-10)

    def test_expm_derivative_at_zero(self):
        M = torch.randn(3, 3, dtype=DTYPE, generator=self.rng)
        h = 1e-5
        central = (expm(h * M) - expm(-h * M)) / (2 * h)
        self.assertLess(max_norm(central - M), 1e-8)

    def test_expm_of_hermitian_is_positive_definite(self):
        H = generate_hermitian(3, generator=self.rng)
        E = expm(H)
        spectrum = eigh(H)
        via_spectrum = spectrum.eigenvectors @ torch.diag(spectrum.eigenvalues.exp().to(DTYPE)) @ spectrum.eigenvectors.mH
        self.assertLess(max_norm(E - E.mH), 1e-12)
        self.assertGreater(torch.linalg.eigvalsh(E).min().item(), 0)
        self.assertLess(max_norm(E - via_spectrum), 1e-10)
        U = expm(-0.7j * H)
        self.assertLess(max_norm(U @ expm(0.7j * H) - identity(3)), 1e-12)

    def test_expm_hermitian_is_unitary(self):
        U = expm_hermitian(SIGMA_Z, 0.3)
        self.assertTrue(is_unitary(U))
        expected = torch.diag(torch.tensor([cmath.exp(-0.3j), cmath.exp(0.3j)], dtype=DTYPE))
        self.assertLess(max_norm(U - expected), 1e-14)

    def test_haar_unitary(self):
        self.assertTrue(is_unitary(generate_unitary(5, generator=self.rng)))

    def test_matrix_literal(self):
        M = torch.tensor([[1 + 2j, 0], [3, -1j]], dtype=DTYPE)
        obj = matrix_to_json(M)
        self.assertEqual((obj["rows"], obj["cols"]), (2, 2))
        self.assertEqual(obj["entries"][0], [1.0, 2.0])
        self.assertTrue(torch.equal(matrix_from_json(obj), M))

    def test_matrix_literal_errors(self):
        with self.assertRaises(DimensionError):
            matrix_from_json({"rows": 2, "cols": 2, "entries": [[1, 0]]})
        with self.assertRaises(FormatError):
            matrix_from_json({"rows": 1, "entries": [[1, 0]]})


if __name__ == "__main__":
    unittest.main()
