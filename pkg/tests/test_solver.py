import math

import numpy as np
import pytest

from hawkes_multiscale import (
    CoverageError,
    ExponentialKernel,
    HawkesModel,
    NumericalError,
    ParameterError,
    assemble_adapted_system,
    build_multiscale_grid,
    build_quadrature_grid,
    estimate_mu,
    exponential_claw,
    expected_intensities,
    solve_kernels,
    solve_kernels_gauss_logcv,
)
from hawkes_multiscale.claw import claw_from_function
from hawkes_multiscale.solver import (
    KernelEstimate,
    _factor_and_solve,
    cumulative_trapezoid,
    estimate_from_dict,
    estimate_to_dict,
    kernel_plot_tables,
)


class TestQuadratureGrid:
    def test_benchmark_parameters(self):
        g = build_quadrature_grid(1e-3, 2000.0, 200)
        assert g.delta == pytest.approx(0.077, abs=1e-3)
        assert round(1 / g.delta) == 13
        assert g.points.size == 201
        assert g.points[0] == 0.0
        assert g.points[-1] == 2000.0
        assert np.all(np.diff(g.points) > 0)

    def test_book_scale_parameters(self):
        g = build_quadrature_grid(1e-4, 140.0, 100)
        assert g.delta == pytest.approx(0.15, abs=2e-3)

    def test_unit_log_ratio(self):
        t_min = 0.5
        g = build_quadrature_grid(t_min, t_min * math.e, 40)
        assert g.delta == pytest.approx(2 / 40, rel=1e-12)
        assert g.points.size == 41
        assert np.sum(g.points <= t_min) == 21  # 20 uniform intervals + origin

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            build_quadrature_grid(1.0, 0.5, 100)
        with pytest.raises(ParameterError):
            build_quadrature_grid(0.1, 10.0, 5)


def exp_oracle_claw(alpha=0.5, beta=1.0, lam=2.0, h_delta=0.05, h_max=40.0):
    grid = build_multiscale_grid(1e-3, h_max, h_delta)
    g = exponential_claw(alpha, beta)
    return claw_from_function(grid, lam=np.array([lam]), funcs=[[g]], horizon=1e9)


class TestAdaptedScheme:
    def test_zero_law_gives_identity_and_zero_kernels(self):
        grid = build_multiscale_grid(0.01, 10.0, 0.1)
        zero = claw_from_function(
            grid, lam=np.array([1.0]), funcs=[[lambda t: np.zeros_like(t)]], horizon=1e9
        )
        qg = build_quadrature_grid(0.01, 5.0, 40)
        w, b = assemble_adapted_system(zero, qg)
        assert np.array_equal(w, np.eye(qg.points.size))
        est = solve_kernels(zero, qg)
        assert np.all(est.phi == 0.0)
        assert np.all(est.norm_matrix == 0.0)

    def test_exponential_oracle_recovery(self):
        claw = exp_oracle_claw()
        qg = build_quadrature_grid(1e-3, 20.0, 200)
        est = solve_kernels(claw, qg)
        t = est.nodes
        truth = 0.5 * 1.0 * np.exp(-t)
        sel = (t >= 1e-3) & (t <= 5.0)
        rel = np.abs(est.phi[0, 0][sel] - truth[sel]) / truth[sel]
        assert rel.max() <= 0.02
        assert est.norm_matrix[0, 0] == pytest.approx(0.5, abs=0.002)

    def test_error_decreases_with_node_count(self):
        claw = exp_oracle_claw()
        sups = []
        for k in (50, 100, 200):
            qg = build_quadrature_grid(1e-3, 20.0, k)
            est = solve_kernels(claw, qg)
            t = est.nodes
            truth = 0.5 * np.exp(-t)
            sel = (t >= 1e-3) & (t <= 5.0)
            sups.append((np.abs(est.phi[0, 0][sel] - truth[sel]) / truth[sel]).max())
        assert sups[0] > sups[1] > sups[2]

    def test_decoupled_two_dim(self):
        grid = build_multiscale_grid(1e-3, 40.0, 0.05)
        g1 = exponential_claw(0.5, 1.0)
        g2 = exponential_claw(0.3, 2.0)
        zero = lambda t: np.zeros_like(t)
        claw = claw_from_function(
            grid,
            lam=np.array([2.0, 1.4285714285714286]),
            funcs=[[g1, zero], [zero, g2]],
            horizon=1e9,
        )
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 120))
        t = est.nodes
        sel = (t >= 1e-2) & (t <= 3.0)
        for (i, alpha, beta) in ((0, 0.5, 1.0), (1, 0.3, 2.0)):
            truth = alpha * beta * np.exp(-beta * t[sel])
            rel = np.abs(est.phi[i, i][sel] - truth) / truth
            assert rel.max() < 0.04
        assert np.abs(est.phi[0, 1]).max() < 1e-10
        assert np.abs(est.phi[1, 0]).max() < 1e-10

    def test_residual_and_condition_reported(self):
        claw = exp_oracle_claw()
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 80))
        assert est.diagnostics["relative_residual"] <= 1e-8
        assert est.diagnostics["condition_estimate"] >= 1.0

    def test_column_independence(self):
        import scipy.linalg

        grid = build_multiscale_grid(1e-3, 40.0, 0.05)
        g1 = exponential_claw(0.5, 1.0)
        g2 = exponential_claw(0.3, 2.0)
        mild = lambda t: 0.1 * np.exp(-np.abs(t))
        claw = claw_from_function(
            grid, lam=np.array([2.0, 1.5]), funcs=[[g1, mild], [mild, g2]], horizon=1e9
        )
        qg = build_quadrature_grid(1e-3, 20.0, 60)
        est = solve_kernels(claw, qg)
        w, b = assemble_adapted_system(claw, qg)
        lu = scipy.linalg.lu_factor(w)
        p = qg.points.size
        for j in range(2):
            single = scipy.linalg.lu_solve(lu, b[:, j])
            for l in range(2):
                assert np.array_equal(est.phi[l, j], single[l * p:(l + 1) * p])

    def test_strict_coverage(self):
        claw = exp_oracle_claw(h_max=5.0)
        qg = build_quadrature_grid(1e-3, 50.0, 40)
        with pytest.raises(CoverageError):
            assemble_adapted_system(claw, qg, strict_coverage=True)
        solve_kernels(claw, qg)  # zero-tail extension is the default contract

    def test_singular_system_raises(self):
        with pytest.raises(NumericalError):
            _factor_and_solve(np.zeros((4, 4)), np.ones((4, 1)))


class TestGaussBaseline:
    def test_fast_decay_agreement_between_schemes(self):
        claw = exp_oracle_claw(alpha=0.5, beta=5.0, h_max=20.0)
        adapted = solve_kernels(claw, build_quadrature_grid(1e-3, 10.0, 200))
        gauss = solve_kernels_gauss_logcv(claw, 200, 1e-3, 10.0)
        na = adapted.norm_matrix[0, 0]
        ng = gauss.norm_matrix[0, 0]
        assert abs(na - ng) / na < 0.03
        assert gauss.scheme == "gauss-logcv"

    def test_zero_law(self):
        grid = build_multiscale_grid(0.01, 10.0, 0.1)
        zero = claw_from_function(
            grid, lam=np.array([1.0]), funcs=[[lambda t: np.zeros_like(t)]], horizon=1e9
        )
        est = solve_kernels_gauss_logcv(zero, 40, 0.01, 5.0)
        assert np.all(est.phi == 0.0)


class TestMuEstimation:
    def make_estimate(self, norm, lam):
        nodes = np.array([0.0, 1.0])
        d = len(lam)
        phi = np.zeros((d, d, 2))
        for i in range(d):
            for j in range(d):
                phi[i, j] = norm[i][j]  # constant on [0,1]: trapezoid = value
        return KernelEstimate(
            scheme="adapted",
            nodes=nodes,
            phi=phi,
            norm_matrix=np.asarray(norm, dtype=float),
            lam=np.asarray(lam, dtype=float),
            mu=np.zeros(d),
            labels=tuple(f"c{k}" for k in range(d)),
        )

    def test_one_dim_inverse_of_rate_formula(self):
        est = self.make_estimate([[0.98]], [2.5])
        assert estimate_mu(est)[0] == pytest.approx(0.05, rel=1e-12)

    def test_zero_norms(self):
        est = self.make_estimate([[0.0, 0.0], [0.0, 0.0]], [1.5, 2.5])
        assert np.allclose(estimate_mu(est), [1.5, 2.5])

    def test_book_scale_magnitudes(self):
        lam = 2.37e-2 / 0.027
        est = self.make_estimate([[1 - 0.027]], [lam])
        assert estimate_mu(est)[0] == pytest.approx(2.37e-2, rel=1e-12)

    def test_negative_entries_warn(self):
        est = self.make_estimate([[1.2]], [2.0])
        with pytest.warns(UserWarning, match="negative"):
            estimate_mu(est)


class TestEstimateObject:
    def test_serialization_round_trip(self):
        claw = exp_oracle_claw()
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 50))
        doc = estimate_to_dict(est)
        back = estimate_from_dict(doc)
        assert np.array_equal(back.phi, est.phi)
        assert np.array_equal(back.norm_matrix, est.norm_matrix)
        assert estimate_to_dict(back) == doc

    def test_solver_mu_matches_rate_identity(self):
        claw = exp_oracle_claw(alpha=0.5, beta=1.0, lam=2.0)
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 200))
        # lam = 2.0 and norm ~ 0.5 imply mu ~ 1.0
        assert est.mu[0] == pytest.approx(1.0, abs=0.005)

    def test_one_dim_exogeneity_closure(self):
        # in one dimension R = mu / lam = 1 - ||phi|| identically
        claw = exp_oracle_claw(alpha=0.5, beta=1.0, lam=2.0)
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 100))
        ratio = est.mu[0] / est.lam[0]
        assert ratio + est.norm_matrix[0, 0] == pytest.approx(1.0, rel=1e-12)

    def test_plot_tables(self):
        claw = exp_oracle_claw()
        est = solve_kernels(claw, build_quadrature_grid(1e-3, 20.0, 40))
        tabs = kernel_plot_tables(est)
        (key, tab), = tabs.items()
        assert tab["log10_t"].size == est.nodes.size - 1
        assert tab["cumulative"][-1] == est.norm_matrix[0, 0]

    def test_cumulative_trapezoid_matches_numpy(self):
        nodes = np.array([0.0, 0.5, 2.0, 3.0])
        vals = np.array([[1.0, 2.0, 0.5, 0.0]])
        got = cumulative_trapezoid(vals, nodes)
        assert got[0, -1] == pytest.approx(np.trapezoid(vals[0], nodes), rel=1e-15)


class TestRoundTripWithSimulation:
    def test_exponential_model_end_to_end(self):
        from hawkes_multiscale import estimate_claw, simulate_branching

        alpha, beta = 0.5, 1.0
        model = HawkesModel(mu=(1.0,), kernels=((ExponentialKernel(alpha, beta),),))
        stream = simulate_branching(model, 1e5, seed=17)
        claw = estimate_claw(stream, build_multiscale_grid(5e-3, 40.0, 0.05))
        est = solve_kernels(claw, build_quadrature_grid(5e-3, 20.0, 150))
        assert est.norm_matrix[0, 0] == pytest.approx(alpha, abs=0.03)
        lam_true = expected_intensities(model)[0]
        assert est.lam[0] == pytest.approx(lam_true, rel=0.05)
        assert est.mu[0] == pytest.approx(1.0, abs=0.08)
        t = est.nodes
        sel = (t >= 0.05) & (t <= 3.0)
        truth = alpha * beta * np.exp(-beta * t[sel])
        assert np.median(np.abs(est.phi[0, 0][sel] - truth) / truth) < 0.1
