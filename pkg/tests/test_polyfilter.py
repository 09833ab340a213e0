import math

import numpy as np
import pytest

from sogclab import (
    Graph,
    NumericError,
    PolyFilter,
    aggregate_once,
    apply_cascade,
    apply_filter,
    block_diag_T,
    compose,
    eigendecompose,
    erdos_renyi,
    factor_quadratics,
    gin_stack_polynomial,
    lss_dimension,
    normalize_adjacency,
    spectrum_capacity,
    vanilla_stack_polynomial,
)


class TestPolyFilterCanonicalForm:
    def test_trailing_zeros_trimmed(self):
        assert PolyFilter((1.0, 2.0, 0.0, 0.0)).coeffs == (1.0, 2.0)

    def test_zero_polynomial(self):
        assert PolyFilter((0.0, 0.0)).coeffs == (0.0,)
        assert PolyFilter(()).coeffs == (0.0,)

    def test_degree(self):
        assert PolyFilter((1.0, 0.0, 3.0)).degree == 2

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PolyFilter((1.0, math.inf))

    def test_evaluation(self):
        p = PolyFilter((1.0, 0.0, -1.0))
        np.testing.assert_allclose(p(np.array([1.0, -1.0, 0.0])), [0.0, 0.0, 1.0])


class TestApplyFilter:
    def test_identity_filter(self, p3):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(apply_filter(PolyFilter((1.0,)), p3, x), x)

    def test_pure_shift_equals_aggregate(self, k2):
        x = np.array([1.0, 0.0])
        np.testing.assert_allclose(
            apply_filter(PolyFilter((0.0, 1.0)), k2, x), [0.0, 1.0]
        )

    def test_annihilates_unit_eigenvalue_on_p3(self, p3):
        basis = eigendecompose(normalize_adjacency(p3))
        v = basis.eigenvectors[:, 2]  # eigenvalue +1; filter 1 - x^2 kills it
        out = apply_filter(PolyFilter((1.0, 0.0, -1.0)), p3, v)
        np.testing.assert_allclose(out, np.zeros(3), atol=1e-12)

    def test_matches_dense_evaluation(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(3, 65))
            g = erdos_renyi(n, float(rng.uniform(0.1, 0.5)),
                            int(rng.integers(2**32)))
            a = normalize_adjacency(g)
            coeffs = rng.standard_normal(6)
            x = rng.standard_normal(n)
            dense = sum(c * np.linalg.matrix_power(a, k) @ x
                        for k, c in enumerate(coeffs))
            out = apply_filter(PolyFilter(tuple(coeffs)), g, x)
            np.testing.assert_allclose(out, dense, atol=1e-9)

    def test_commutes_with_aggregation(self):
        # shift invariance: p(A) (A x) == A (p(A) x)
        rng = np.random.default_rng(4)
        for _ in range(10):
            g = erdos_renyi(20, 0.3, int(rng.integers(2**32)))
            f = PolyFilter(tuple(rng.standard_normal(5)))
            x = rng.standard_normal(20)
            lhs = apply_filter(f, g, aggregate_once(g, x))
            rhs = aggregate_once(g, apply_filter(f, g, x))
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestCompose:
    def test_difference_of_squares(self):
        out = compose(PolyFilter((1.0, 1.0)), PolyFilter((-1.0, 1.0)))
        assert out.coeffs == (-1.0, 0.0, 1.0)

    def test_multiplicative_identity(self):
        p = PolyFilter((2.0, -3.0, 0.5))
        assert compose(p, PolyFilter((1.0,))).coeffs == p.coeffs

    def test_composition_matches_sequential_application(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            g = erdos_renyi(int(rng.integers(4, 25)),
                            float(rng.uniform(0.2, 0.6)),
                            int(rng.integers(2**32)))
            p = PolyFilter(tuple(rng.standard_normal(4)))
            q = PolyFilter(tuple(rng.standard_normal(3)))
            x = rng.standard_normal(g.num_nodes)
            lhs = apply_filter(compose(p, q), g, x)
            rhs = apply_filter(p, g, apply_filter(q, g, x))
            np.testing.assert_allclose(lhs, rhs, atol=1e-8)


class TestFactorQuadratics:
    def test_irreducible_quadratic_passes_through(self):
        cascade = factor_quadratics(PolyFilter((1.0, 0.0, 1.0)))
        assert len(cascade.factors) == 1
        np.testing.assert_allclose(cascade.factors[0].coeffs, (1.0, 0.0, 1.0),
                                   atol=1e-12)
        assert cascade.leading_scale == 1.0

    def test_cubic_root_of_unity(self):
        cascade = factor_quadratics(PolyFilter((-1.0, 0.0, 0.0, 1.0)))
        degrees = sorted(f.degree for f in cascade.factors)
        assert degrees == [1, 2]
        linear = next(f for f in cascade.factors if f.degree == 1)
        quad = next(f for f in cascade.factors if f.degree == 2)
        np.testing.assert_allclose(linear.coeffs, (-1.0, 1.0), atol=1e-10)
        np.testing.assert_allclose(quad.coeffs, (1.0, 1.0, 1.0), atol=1e-10)

    def test_random_degree_nine(self):
        rng = np.random.default_rng(6)
        p = PolyFilter(tuple(rng.standard_normal(10)))
        cascade = factor_quadratics(p)
        assert len(cascade.factors) == 5
        assert sum(f.degree == 1 for f in cascade.factors) <= 1
        expanded = np.asarray(cascade.expanded().coeffs)
        rel = np.abs(expanded - np.asarray(p.coeffs)).max() / np.abs(p.coeffs).max()
        assert rel <= 1e-6

    def test_roundtrip_property(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            deg = int(rng.integers(1, 16))
            p = PolyFilter(tuple(rng.standard_normal(deg + 1)))
            cascade = factor_quadratics(p)
            assert len(cascade.factors) == math.ceil(p.degree / 2)
            assert sum(f.degree == 1 for f in cascade.factors) <= 1
            assert all(f.degree <= 2 for f in cascade.factors)
            expanded = np.asarray(cascade.expanded().coeffs)
            rel = (np.abs(expanded - np.asarray(p.coeffs)).max()
                   / np.abs(p.coeffs).max())
            assert rel <= 1e-6

    def test_cascade_application_equals_direct(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            deg = int(rng.integers(2, 12))
            p = PolyFilter(tuple(rng.standard_normal(deg + 1)))
            cascade = factor_quadratics(p)
            g = erdos_renyi(int(rng.integers(5, 41)),
                            float(rng.uniform(0.15, 0.5)),
                            int(rng.integers(2**32)))
            x = rng.standard_normal(g.num_nodes)
            direct = apply_filter(p, g, x)
            via_cascade = apply_cascade(cascade, g, x)
            rel = np.abs(via_cascade - direct).max() / np.abs(direct).max()
            assert rel <= 1e-6

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            factor_quadratics(PolyFilter((3.0,)))
        with pytest.raises(ValueError):
            factor_quadratics(PolyFilter((0.0,)))

    def test_degree_cap(self):
        with pytest.raises(ValueError, match="cap"):
            factor_quadratics(PolyFilter(tuple(np.ones(66))))

    def test_high_multiplicity_reports_numeric_error(self):
        # (x + 1)^24 stalls the simultaneous root iteration
        coeffs = tuple(float(math.comb(24, k)) for k in range(25))
        with pytest.raises(NumericError):
            factor_quadratics(PolyFilter(coeffs))


class TestLssDimension:
    def test_p3_order_one(self, p3):
        assert lss_dimension([p3], 1) == 2

    def test_p3_rank_capped_by_distinct_eigenvalues(self, p3):
        assert lss_dimension([p3], 5) == 3

    def test_k3_constants(self, k3):
        assert lss_dimension([k3], 0) == 1

    def test_matches_dimension_law(self):
        # sparse sets keep the distinct-eigenvalue count small enough for the
        # rank certificate at rank_tol = 1e-9 (the matrix is genuinely within
        # 1e-9 of rank-deficient once ~25+ pooled eigenvalues accumulate)
        rng = np.random.default_rng(9)
        for _ in range(10):
            graphs = []
            for _ in range(int(rng.integers(1, 5))):
                n = int(rng.integers(5, 31))
                c = float(rng.uniform(0.3, 0.9))
                graphs.append(erdos_renyi(n, c / n, int(rng.integers(2**32))))
            gamma = spectrum_capacity(graphs)
            for K in range(0, gamma + 4):
                assert lss_dimension(graphs, K) == min(K + 1, gamma)

    def test_rejects_negative_order(self, p3):
        with pytest.raises(ValueError):
            lss_dimension([p3], -1)


class TestStackPolynomials:
    def test_vanilla_two_layers(self):
        assert vanilla_stack_polynomial((1.0, 1.0)).coeffs == (1.0, 2.0, 1.0)

    def test_vanilla_scaling(self):
        assert vanilla_stack_polynomial((2.0, 3.0)).coeffs == (6.0, 12.0, 6.0)

    def test_vanilla_equals_iterated_compose(self):
        rng = np.random.default_rng(10)
        thetas = rng.standard_normal(5)
        stacked = vanilla_stack_polynomial(tuple(thetas))
        composed = PolyFilter((1.0,))
        for t in thetas:
            composed = compose(composed, PolyFilter((t, t)))
        np.testing.assert_allclose(stacked.coeffs, composed.coeffs, rtol=1e-12)

    def test_vanilla_is_binomial_ray(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            L = int(rng.integers(1, 11))
            thetas = rng.standard_normal(L)
            coeffs = np.asarray(vanilla_stack_polynomial(tuple(thetas)).coeffs)
            binom = np.asarray([math.comb(L, k) for k in range(L + 1)], dtype=float)
            cos = abs(coeffs @ binom) / (np.linalg.norm(coeffs) * np.linalg.norm(binom))
            assert abs(cos - 1.0) <= 1e-12

    def test_gin_split_product(self):
        assert gin_stack_polynomial(((1.0, 1.0), (-1.0, 1.0))).coeffs == (-1.0, 0.0, 1.0)

    def test_gin_pure_shift_power(self):
        assert gin_stack_polynomial(((0.0, 1.0),) * 4).coeffs == (0.0,) * 4 + (1.0,)

    def test_gin_factors_recover_real_roots(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            L = int(rng.integers(2, 9))
            pairs = tuple((float(a), float(b))
                          for a, b in rng.standard_normal((L, 2)))
            p = gin_stack_polynomial(pairs)
            if p.degree < 1:
                continue
            cascade = factor_quadratics(p)
            for f in cascade.factors:
                if f.degree == 2:
                    c0, c1, _ = f.coeffs
                    disc = c1 * c1 - 4.0 * c0
                    # conjugate-pair quadratics would need disc < 0
                    assert disc >= -1e-6 * max(1.0, abs(c0), abs(c1))

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            vanilla_stack_polynomial(())
        with pytest.raises(ValueError):
            gin_stack_polynomial(())


class TestBlockDiagonal:
    def test_single_graph_is_its_adjacency(self, p3):
        np.testing.assert_array_equal(block_diag_T([p3]),
                                      normalize_adjacency(p3))

    def test_two_k2_blocks(self, k2):
        t = block_diag_T([k2, k2])
        assert t.shape == (4, 4)
        lam = np.sort(np.linalg.eigvalsh(t))
        np.testing.assert_allclose(lam, [-1.0, -1.0, 1.0, 1.0], atol=1e-12)

    def test_blockwise_filter_action(self):
        rng = np.random.default_rng(13)
        graphs = [erdos_renyi(int(rng.integers(4, 12)),
                              float(rng.uniform(0.2, 0.6)),
                              int(rng.integers(2**32)))
                  for _ in range(3)]
        t = block_diag_T(graphs)
        p = PolyFilter(tuple(rng.standard_normal(5)))
        pt = sum(c * np.linalg.matrix_power(t, k) for k, c in enumerate(p.coeffs))
        offsets = np.cumsum([0] + [g.num_nodes for g in graphs])
        for j, g in enumerate(graphs):
            x = rng.standard_normal(g.num_nodes)
            xi = np.zeros(t.shape[0])
            xi[offsets[j]:offsets[j + 1]] = x
            embedded = pt @ xi
            local = apply_filter(p, g, x)
            np.testing.assert_allclose(embedded[offsets[j]:offsets[j + 1]],
                                       local, atol=1e-9)
            mask = np.ones(t.shape[0], dtype=bool)
            mask[offsets[j]:offsets[j + 1]] = False
            np.testing.assert_allclose(embedded[mask], 0.0, atol=1e-12)

    def test_size_cap(self):
        with pytest.raises(ValueError, match="cap"):
            block_diag_T([Graph(200, ()), Graph(200, ()), Graph(200, ())])
