import cmath
import math
import os
import sys
import unittest

import torch

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from open_systems.errors import AmplitudeZeroFlag, GridError
from open_systems.integrate import check_uniform_grid, rk4_solve, volterra_heun
from open_systems.linalg import DTYPE


class TestGrid(unittest.TestCase):
    def test_uniform(self):
        self.assertAlmostEqual(check_uniform_grid(torch.linspace(0, 1, 11, dtype=torch.float64)), 0.1, places=15)

    def test_rejections(self):
        with self.assertRaises(GridError):
            check_uniform_grid([0.0])
        with self.assertRaises(GridError):
            check_uniform_grid([1.0, 0.5, 0.0])
        with self.assertRaises(GridError):
            check_uniform_grid([0.0, 1.0, 3.0])
        with self.assertRaises(GridError):
            check_uniform_grid([1.0, 2.0], start_at_zero=True)


class TestRK4(unittest.TestCase):
    def test_exponential_decay_is_fourth_order(self):
        errors = []
        for steps in (20, 40):
            grid = torch.linspace(0, 2, steps + 1, dtype=torch.float64)
            solution = rk4_solve(lambda t, y: -y, torch.tensor(1.0, dtype=torch.float64), grid)
            errors.append(abs(solution.values[-1].item() - math.exp(-2)))
        self.assertGreater(errors[0] / errors[1], 14)

    def test_time_dependent_rhs_uses_stage_times(self):
        # y' = cos t, y(0) = 0
        grid = torch.linspace(0, 3, 301, dtype=torch.float64)
        solution = rk4_solve(lambda t, y: torch.tensor(math.cos(t), dtype=torch.float64), torch.tensor(0.0, dtype=torch.float64), grid)
        self.assertLess((solution.values - torch.sin(grid)).abs().max().item(), 1e-10)
        self.assertIsNone(solution.flag)

    def test_flag_stops_integration(self):
        def rhs(t, y):
            if t > 0.52:
                raise AmplitudeZeroFlag(t, 0.0)
            return y

        grid = torch.linspace(0, 1, 11, dtype=torch.float64)
        solution = rk4_solve(rhs, torch.tensor(1.0, dtype=torch.float64), grid)
        self.assertIsInstance(solution.flag, AmplitudeZeroFlag)
        self.assertEqual(solution.values.shape[0], 6)
        self.assertEqual(solution.times.shape[0], 6)


class TestVolterraHeun(unittest.TestCase):
    def test_constant_kernel_is_harmonic(self):
        # y' = -int_0^t y  <=>  y'' = -y with y'(0) = 0
        n, h = 2001, 1e-3
        solution = volterra_heun(torch.ones(n, dtype=DTYPE), 1.0, h)
        t = torch.arange(n, dtype=torch.float64) * h
        self.assertLess((solution.values - torch.cos(t)).abs().max().item(), 1e-5)
        self.assertLess((solution.derivatives + torch.sin(t)).abs().max().item(), 1e-5)

    def test_exponential_kernel(self):
        # k(tau) = a e^{-b tau} has c(t) = e^{-bt/2}[cosh(rt/2) + (b/r) sinh(rt/2)], r = sqrt(b^2 - 4a)
        a, b, n, h = 0.4, 2.0, 3001, 1e-3
        t = torch.arange(n, dtype=torch.float64) * h
        kernel = a * torch.exp(-b * t).to(DTYPE)
        r = math.sqrt(b * b - 4 * a)
        exact = [cmath.exp(-b * s / 2) * (cmath.cosh(r * s / 2) + (b / r) * cmath.sinh(r * s / 2)) for s in t.tolist()]
        solution = volterra_heun(kernel, 1.0, h)
        self.assertLess((solution.values - torch.tensor(exact, dtype=DTYPE)).abs().max().item(), 1e-5)


if __name__ == "__main__":
    unittest.main()
