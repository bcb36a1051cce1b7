"""Weighted torus actions on real projective space: maps, flows, limits."""

import math

import numpy as np
import pytest

from gml import (
    ProjPoint,
    WeightedModel,
    certified_fraction,
    composed_limit,
    deterministic_generic_direction,
    direction_certificate,
    fixed_components,
    fixed_set_subalgebra,
    flow,
    flow_limit,
    fundamental_field,
    generic_direction,
    gradient_map,
    model_chain_threshold,
    moment_polytope,
    moment_polytope_check,
    orbit_hull_check,
    perturbed_limit,
    random_weighted_model,
    stabilizer_algebra,
    unstable_component,
)
from gml.errors import (
    BetaOutsideSubalgebra,
    DependentBasis,
    ExhaustedRetries,
    NonPositiveEpsilon,
)
from gml.model import model_chain_threshold_witness
from gml.rng import substream

from _oracles import lex_argmax_support


S2 = 1 / math.sqrt(2)


def P(*coords) -> ProjPoint:
    return ProjPoint(list(coords))


# ------------------------------------------------------------------ ProjPoint


def test_projpoint_normalizes_and_canonicalizes_sign():
    p = P(-3, 0, -4)
    assert np.allclose(p.coords, [0.6, 0, 0.8])
    assert p.support == (0, 2)


def test_projpoint_drops_negligible_coordinates():
    p = ProjPoint([1.0, 1e-15, 0.0])
    assert p.support == (0,)
    assert np.allclose(p.coords, [1, 0, 0])


def test_projpoint_rejects_zero_vector():
    with pytest.raises(Exception):
        ProjPoint([0.0, 0.0])


def test_projpoint_same_as_requires_equal_support():
    assert P(1, 1, 0).same_as(P(1, 1, 0))
    assert not P(1, 1, 0).same_as(P(1, 1, 1e-6))
    assert not P(1, 1, 0).same_as(P(1, 1 + 1e-6, 0))
    assert P(1, 1, 0).same_as(P(1, 1 + 1e-14, 0))


def test_model_requires_independent_subalgebra_rows():
    with pytest.raises(Exception):
        WeightedModel(name="bad", weights=[[0, 0], [1, 1]],
                      subalgebra=[[1, 1], [2, 2]])


# --------------------------------------------------------------- gradient map


def test_gradient_map_fixed_point_gives_weight(square_model):
    assert np.allclose(gradient_map(square_model, P(0, 0, 0, 1)), [1, 1])


def test_gradient_map_uniform_point(square_model):
    x = P(0.5, 0.5, 0.5, 0.5)
    assert np.allclose(gradient_map(square_model, x), [0.5, 0.5])


def test_gradient_map_two_point_support(square_model):
    assert np.allclose(gradient_map(square_model, P(S2, 0, 0, S2)), [0.5, 0.5])


def test_gradient_image_lies_in_moment_polytope(model_pool):
    for model in model_pool[:20]:
        poly = moment_polytope(model)
        rng = substream(301, model.num_coords * 131 + model.torus_dim)
        for _ in range(10):
            x = ProjPoint(rng.standard_normal(model.num_coords))
            assert poly.contains(gradient_map(model, x), tol=1e-9)


# ---------------------------------------------------------- fundamental field


def test_field_vanishes_at_coordinate_point(square_model):
    v = fundamental_field(square_model, [1, 0], P(1, 0, 0, 0))
    assert np.allclose(v, 0.0)


def test_field_hand_value(square_model):
    v = fundamental_field(square_model, [1, 0], P(0.5, 0.5, 0.5, 0.5))
    assert np.allclose(v, [-0.25, 0.25, -0.25, 0.25])


def test_field_zero_direction(square_model):
    v = fundamental_field(square_model, [0, 0], P(0.5, 0.5, 0.5, 0.5))
    assert np.allclose(v, 0.0)


def test_field_orthogonal_to_base_point(model_pool):
    for model in model_pool[:15]:
        rng = substream(302, model.num_coords)
        x = ProjPoint(rng.standard_normal(model.num_coords))
        c = rng.standard_normal(model.subalgebra_dim)
        beta = c @ model.ortho_basis
        v = fundamental_field(model, beta, x)
        assert abs(float(v @ x.coords)) < 1e-12


def test_field_rejects_directions_outside_subalgebra():
    model = WeightedModel(name="line", weights=[[0, 0], [1, 0], [0, 1]],
                          subalgebra=[[1, 0]])
    with pytest.raises(BetaOutsideSubalgebra):
        fundamental_field(model, [0, 1], P(1, 1, 1))


# ----------------------------------------------------------------------- flow


def test_flow_time_zero_is_identity(square_model):
    x = P(0.3, 0.5, 0.7, 0.4)
    assert flow(square_model, [1, 0], 0.0, x).same_as(x)


def test_flow_hand_value_at_log_two(square_model):
    y = flow(square_model, [1, 0], math.log(2), P(0.5, 0.5, 0.5, 0.5))
    assert np.allclose(y.coords, np.array([1, 2, 1, 2]) / math.sqrt(10), atol=1e-14)


def test_flow_large_time_approaches_limit(square_model):
    y = flow(square_model, [1, 0], 100.0, P(0.5, 0.5, 0.5, 0.5))
    assert np.allclose(y.coords, [0, S2, 0, S2], atol=1e-12)


def test_flow_survives_overflow_range(square_model):
    y = flow(square_model, [1, 0], 5000.0, P(0.5, 0.5, 0.5, 0.5))
    assert y.same_as(P(0, 1, 0, 1))


def test_flow_group_law(model_pool):
    for model in model_pool[:12]:
        rng = substream(303, model.num_coords * 7 + model.torus_dim)
        x = ProjPoint(rng.standard_normal(model.num_coords))
        c = rng.standard_normal(model.subalgebra_dim)
        beta = c @ model.ortho_basis
        s, t = rng.uniform(-3, 3, size=2)
        once = flow(model, beta, s + t, x)
        twice = flow(model, beta, s, flow(model, beta, t, x))
        assert once.same_as(twice, tol=1e-10)


# ----------------------------------------------------------------- flow limit


def test_flow_limit_hand_value(square_model):
    lim = flow_limit(square_model, [1, 0], P(0.5, 0.5, 0.5, 0.5))
    assert lim.support == (1, 3)
    assert np.allclose(lim.coords, [0, S2, 0, S2])


def test_flow_limit_fixed_point_is_identity(square_model):
    x = P(0, 1, 0, 1)  # level-1 component of beta=(1,0)
    assert flow_limit(square_model, [1, 0], x).same_as(x)


def test_flow_limit_second_stage(square_model):
    lim = flow_limit(square_model, [0, 1], P(0, 1, 0, 1))
    assert lim.same_as(P(0, 0, 0, 1))


def test_flow_limit_idempotent(model_pool):
    for model in model_pool[:15]:
        rng = substream(304, model.num_coords)
        x = ProjPoint(rng.standard_normal(model.num_coords))
        c = rng.standard_normal(model.subalgebra_dim)
        beta = c @ model.ortho_basis
        lim = flow_limit(model, beta, x)
        assert flow_limit(model, beta, lim).same_as(lim)


def test_flow_limit_scaling_equivariance(square_model):
    x = P(0.4, 0.3, 0.6, 0.2)
    for c in (0.25, 1.0, 7.0):
        a = flow_limit(square_model, [1, 0], x)
        b = flow_limit(square_model, [c, 0], x)
        assert a.same_as(b)
    parts_a = [c.indices for c in fixed_components(square_model, [1, 0])]
    parts_b = [c.indices for c in fixed_components(square_model, [3, 0])]
    assert parts_a == parts_b
    ua = unstable_component(square_model, [1, 0], x)
    ub = unstable_component(square_model, [5, 0], x)
    assert ua.indices == ub.indices


def test_flow_limit_ties_keep_whole_argmax_class(square_model):
    lim = flow_limit(square_model, [1, 1], P(0, 1, 1, 0))
    assert lim.support == (1, 2)
    assert np.allclose(lim.coords, [0, S2, S2, 0])


# ------------------------------------------------------------- composed limit


def test_composed_limit_two_steps(square_model):
    lim = composed_limit(square_model, None, P(0.5, 0.5, 0.5, 0.5))
    assert lim.same_as(P(0, 0, 0, 1))


def test_composed_limit_reversed_basis(square_model):
    lim = composed_limit(square_model, [[0, 1], [1, 0]], P(0.5, 0.5, 0.5, 0.5))
    assert lim.same_as(P(0, 0, 0, 1))


def test_composed_limit_fixes_joint_fixed_points(square_model):
    x = P(0, 0, 1, 0)
    assert composed_limit(square_model, None, x).same_as(x)


def test_composed_limit_rejects_dependent_directions(square_model):
    with pytest.raises(DependentBasis):
        composed_limit(square_model, [[1, 0], [2, 0]], P(1, 1, 1, 1))


def test_composed_limit_matches_lex_argmax_oracle(model_pool):
    for model in model_pool[:25]:
        rng = substream(305, model.num_coords * 13 + model.torus_dim)
        alphas = model.subalgebra
        for _ in range(8):
            x = ProjPoint(rng.standard_normal(model.num_coords))
            lim = composed_limit(model, None, x)
            want = lex_argmax_support(model.weights, alphas, x.support)
            assert lim.support == want


# ------------------------------------------------------------ perturbed limit


def test_perturbed_limit_below_threshold_matches_composition(square_model):
    x = P(0.5, 0.5, 0.5, 0.5)
    lim = perturbed_limit(square_model, None, [0.5], x)
    assert lim.same_as(composed_limit(square_model, None, x))
    assert lim.same_as(P(0, 0, 0, 1))


def test_perturbed_limit_tie_at_threshold(square_model):
    x = P(0, 1, 1, 0)
    lim = perturbed_limit(square_model, None, [1.0], x)
    assert lim.support == (1, 2)
    assert not lim.same_as(composed_limit(square_model, None, x))
    assert composed_limit(square_model, None, x).same_as(P(0, 1, 0, 0))


def test_perturbed_limit_fixes_joint_fixed_points(square_model):
    x = P(1, 0, 0, 0)
    assert perturbed_limit(square_model, None, [0.123], x).same_as(x)


def test_perturbed_limit_rejects_nonpositive_steps(square_model):
    x = P(1, 1, 1, 1)
    with pytest.raises(NonPositiveEpsilon):
        perturbed_limit(square_model, None, [0.0], x)
    with pytest.raises(NonPositiveEpsilon):
        perturbed_limit(square_model, None, [-0.2], x)


def test_composition_identity_on_random_models(model_pool):
    for model in model_pool:
        delta = model_chain_threshold(model)
        assert delta > 0.0
        cap = min(delta, 1.0) * (1 - 1e-9)
        rng = substream(306, model.num_coords * 31 + len(model.name))
        for _ in range(20):
            x = ProjPoint(rng.standard_normal(model.num_coords))
            eps = rng.uniform(0, cap, size=model.subalgebra_dim - 1)
            eps = np.maximum(eps, 1e-12)
            a = perturbed_limit(model, None, eps, x) if eps.size else composed_limit(model, None, x)
            b = composed_limit(model, None, x)
            assert a.support == b.support
            assert a.same_as(b, tol=1e-12)


# -------------------------------------------------------- model-level threshold


def test_model_chain_threshold_square_is_one(square_model):
    assert model_chain_threshold(square_model) == pytest.approx(1.0, abs=1e-12)
    delta, pairs = model_chain_threshold_witness(square_model)
    assert delta == pytest.approx(1.0, abs=1e-12)
    assert (1, 2) in pairs


def test_model_chain_threshold_certified_by_partition_grid(square_model):
    # below the threshold the perturbed direction induces the joint partition;
    # at the threshold indices 1 and 2 merge
    for eps in np.linspace(0.05, 0.95, 10):
        beta = np.array([1.0, 0.0]) + eps * np.array([0.0, 1.0])
        assert direction_certificate(square_model, beta)
    assert not direction_certificate(square_model, [1.0, 1.0])


def test_model_chain_threshold_equal_weights_unconstrained():
    model = WeightedModel(name="pair", weights=[[1, 0], [1, 0]],
                          subalgebra=[[1, 0], [0, 1]])
    assert model_chain_threshold(model) == math.inf


def test_model_chain_threshold_single_direction_basis():
    model = WeightedModel(name="line", weights=[[0, 0], [1, 0], [0, 1]],
                          subalgebra=[[1, 0]])
    assert model_chain_threshold(model) == math.inf


# ------------------------------------------------------------ fixed components


def test_fixed_components_generic_direction(square_model):
    comps = fixed_components(square_model, [1, 0])
    assert [(c.indices, c.level) for c in comps] == [((1, 3), 1.0), ((0, 2), 0.0)]
    assert [c.dim for c in comps] == [1, 1]


def test_fixed_components_zero_direction_fixes_everything(square_model):
    comps = fixed_components(square_model, [0, 0])
    assert [(c.indices, c.level) for c in comps] == [((0, 1, 2, 3), 0.0)]


def test_fixed_components_distinct_levels(square_model):
    comps = fixed_components(square_model, [1, 0.5])
    assert [c.level for c in comps] == [1.5, 1.0, 0.5, 0.0]
    assert all(len(c.indices) == 1 for c in comps)


def test_joint_fixed_set_square(square_model):
    comps = fixed_set_subalgebra(square_model)
    assert [c.indices for c in comps] == [(3,), (1,), (2,), (0,)]
    assert [tuple(c.level) for c in comps] == [(1, 1), (1, 0), (0, 1), (0, 0)]


def test_joint_fixed_set_repeated_weight(segment_model):
    comps = fixed_set_subalgebra(segment_model)
    assert [c.indices for c in comps] == [(0, 1), (2,)]
    assert comps[0].dim == 1


def test_joint_fixed_set_restricted_subalgebra():
    model = WeightedModel(name="restricted",
                          weights=[[0, 0], [1, 0], [0, 1], [1, 1]],
                          subalgebra=[[1, 0]])
    comps = fixed_set_subalgebra(model)
    assert [c.indices for c in comps] == [(1, 3), (0, 2)]
    beta_comps = fixed_components(model, [1, 0])
    assert [c.indices for c in beta_comps] == [c.indices for c in comps]


def test_joint_fixed_set_refines_every_direction(model_pool):
    for model in model_pool[:20]:
        joint = [set(c.indices) for c in fixed_set_subalgebra(model)]
        for alpha in model.subalgebra:
            for comp in fixed_components(model, alpha):
                cover = [j for j in joint if j & set(comp.indices)]
                assert set().union(*cover) == set(comp.indices)
                assert all(j <= set(comp.indices) for j in cover)


# ------------------------------------------------------------------ stabilizer


def test_stabilizer_trivial_for_full_support(square_model):
    st = stabilizer_algebra(square_model, P(0.5, 0.5, 0.5, 0.5))
    assert st.dim == 0


def test_stabilizer_full_for_coordinate_point(square_model):
    st = stabilizer_algebra(square_model, P(1, 0, 0, 0))
    assert st.dim == 2


def test_stabilizer_line_for_antidiagonal_pair(square_model):
    st = stabilizer_algebra(square_model, P(S2, 0, 0, S2))
    assert st.dim == 1
    direction = st.basis[:, 0]
    assert np.allclose(np.abs(direction), [S2, S2])
    assert abs(direction @ np.array([1, 1])) < 1e-12


def test_stabilizer_fixes_exactly_its_flows(square_model):
    x = P(S2, 0, 0, S2)
    inside = np.array([1.0, -1.0])  # annihilates the support's weight difference
    outside = np.array([1.0, 0.0])
    assert flow(square_model, inside, 2.0, x).same_as(x)
    assert not flow(square_model, outside, 2.0, x).same_as(x)


# ------------------------------------------------------------ generic directions


def test_deterministic_direction_square(square_model):
    beta, certified = deterministic_generic_direction(square_model)
    assert certified
    assert np.allclose(beta, [1.0, 0.5])
    levels = square_model.levels(beta)
    assert sorted(levels) == [0.0, 0.5, 1.0, 1.5]


def test_non_generic_direction_detected(square_model):
    assert not direction_certificate(square_model, [1, 1])
    assert direction_certificate(square_model, [1, 0.5])


def test_random_direction_certified(square_model, segment_model):
    for model in (square_model, segment_model):
        beta, certified = generic_direction(model, seed=7)
        assert certified
        parts = [c.indices for c in fixed_components(model, beta)]
        joint = [c.indices for c in fixed_set_subalgebra(model)]
        assert sorted(parts) == sorted(joint)


def test_segment_model_certified_partition(segment_model):
    beta, certified = generic_direction(segment_model, seed=3)
    assert certified
    parts = sorted(c.indices for c in fixed_components(segment_model, beta))
    assert parts == [(0, 1), (2,)]


def test_certified_fraction_is_one_on_canonical_models(square_model, segment_model):
    assert certified_fraction(square_model, 10_000, seed=11) == 1.0
    assert certified_fraction(segment_model, 10_000, seed=11) == 1.0


# ---------------------------------------------------------- unstable components


def test_unstable_component_uniform_point(square_model):
    comp = unstable_component(square_model, [1, 0], P(0.5, 0.5, 0.5, 0.5))
    assert comp.indices == (1, 3)


def test_unstable_component_of_fixed_point_is_its_component(square_model):
    comp = unstable_component(square_model, [1, 0], P(0, 1, 0, 1))
    assert comp.indices == (1, 3)
    assert comp.level == 1.0


def test_unstable_component_low_level(square_model):
    comp = unstable_component(square_model, [1, 0], P(S2, 0, S2, 0))
    assert comp.indices == (0, 2)
    assert comp.level == 0.0


def test_unstable_components_partition_points(model_pool):
    for model in model_pool[:10]:
        rng = substream(307, model.num_coords)
        c = rng.standard_normal(model.subalgebra_dim)
        beta = c @ model.ortho_basis
        comps = fixed_components(model, beta)
        for _ in range(10):
            x = ProjPoint(rng.standard_normal(model.num_coords))
            owner = unstable_component(model, beta, x)
            assert sum(owner.indices == c.indices for c in comps) == 1


# ------------------------------------------------------------------- convexity


def test_moment_polytope_square(square_model):
    poly, holds = moment_polytope_check(square_model, 64, seed=3)
    assert holds
    assert poly.vertices.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_moment_polytope_segment(segment_model):
    poly, holds = moment_polytope_check(segment_model, 64, seed=3)
    assert holds
    assert poly.vertices.tolist() == [[0, 0], [1, 0]]


def test_moment_polytope_single_weight():
    model = WeightedModel(name="point", weights=[[2, 2], [2, 2]],
                          subalgebra=[[1, 0], [0, 1]])
    poly, holds = moment_polytope_check(model, 16, seed=3)
    assert holds
    assert poly.vertices.tolist() == [[2, 2]]


def test_orbit_hull_full_support(square_model):
    assert orbit_hull_check(square_model, P(0.5, 0.5, 0.5, 0.5), 16, seed=5)


def test_orbit_hull_fixed_orbit(square_model):
    assert orbit_hull_check(square_model, P(0, 0, 1, 0), 16, seed=5)


def test_orbit_hull_segment_orbit(square_model):
    assert orbit_hull_check(square_model, P(S2, S2, 0, 0), 16, seed=5)


# ------------------------------------------------------------- random models


def test_random_models_have_positive_threshold(model_pool):
    for model in model_pool:
        assert model_chain_threshold(model) > 0.0
        assert model.num_coords <= 10
        assert model.torus_dim <= 4
        assert np.allclose(model.weights, np.round(model.weights))
