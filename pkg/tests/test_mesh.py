import numpy as np
import pytest

from softbody import dynamics, mesh
from softbody.errors import InvalidArgument, SelfLink, UnknownParticle
from softbody.model import Layer, WorldParams, WorldState


def polyhedron_volume_oracle(vertices, triangles):
    """Brute-force signed tetrahedron sum, independent of the kernels."""
    total = 0.0
    for a, b, c in triangles:
        pa, pb, pc = vertices[a], vertices[b], vertices[c]
        cross = (
            pa[1] * pb[2] - pa[2] * pb[1],
            pa[2] * pb[0] - pa[0] * pb[2],
            pa[0] * pb[1] - pa[1] * pb[0],
        )
        total += cross[0] * pc[0] + cross[1] * pc[1] + cross[2] * pc[2]
    return total / 6.0


def polygon_area_oracle(vertices, edges):
    return 0.5 * sum(
        vertices[a][0] * vertices[b][1] - vertices[b][0] * vertices[a][1] for a, b in edges
    )


class TestBuildChain:
    def test_three_particle_chain(self):
        chain = mesh.build_chain(3, 2.0, 3.0, 10.0, 0.1)
        assert chain.n_particles == 3
        np.testing.assert_array_equal(chain.positions[:, 0], [-1.0, 0.0, 1.0])
        np.testing.assert_array_equal(chain.positions[:, 1:], 0.0)
        assert len(chain.springs) == 2
        assert all(s.rest_length == 1.0 for s in chain.springs)
        np.testing.assert_array_equal(chain.masses, 1.0)
        assert chain.faces == [] and chain.pressure == {}

    def test_minimal_chain(self):
        chain = mesh.build_chain(2, 1.0, 1.0, 1.0, 0.0)
        assert chain.n_particles == 2
        assert len(chain.springs) == 1
        assert chain.springs[0].rest_length == 1.0

    @pytest.mark.parametrize(
        "args",
        [
            (1, 1.0, 1.0, 1.0, 0.0),
            (3, 0.0, 1.0, 1.0, 0.0),
            (3, 1.0, -2.0, 1.0, 0.0),
            (3, 1.0, 1.0, -1.0, 0.0),
        ],
    )
    def test_rejects_bad_arguments(self, args):
        with pytest.raises(InvalidArgument):
            mesh.build_chain(*args)


class TestBuildTwoLayerDisc:
    def test_topology_counts(self):
        disc = mesh.build_two_layer_disc(8, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        assert disc.n_particles == 16
        assert len(disc.springs) == 40  # 8 outer + 8 inner + 8 radial + 16 cross
        outer = [f for f in disc.faces if f.layer is Layer.OUTER]
        inner = [f for f in disc.faces if f.layer is Layer.INNER]
        assert len(outer) == 8 and len(inner) == 8

    def test_inner_ring_radial_scaling(self):
        disc = mesh.build_two_layer_disc(8, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        np.testing.assert_allclose(disc.positions[0], [1.0, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(disc.positions[8], [0.6, 0.0, 0.0], atol=1e-15)

    def test_rejects_degenerate_ring(self):
        with pytest.raises(InvalidArgument):
            mesh.build_two_layer_disc(2, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)

    def test_mass_split_evenly(self):
        disc = mesh.build_two_layer_disc(10, 1.0, 0.5, 3.0, 10.0, 0.1, 1.0, 0.5)
        np.testing.assert_allclose(disc.masses, 3.0 / 20.0)

    def test_layers_positively_oriented(self):
        disc = mesh.build_two_layer_disc(12, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        for layer in (Layer.OUTER, Layer.INNER):
            edges = disc.face_array(layer)
            assert polygon_area_oracle(disc.positions, edges) > 0
            assert dynamics.enclosed_measure(disc, layer) == pytest.approx(
                polygon_area_oracle(disc.positions, edges), rel=1e-12
            )


class TestIcosphere:
    @pytest.mark.parametrize(
        "depth,vertices,faces,edges",
        [(0, 12, 20, 30), (1, 42, 80, 120), (2, 162, 320, 480)],
    )
    def test_counts_and_euler_characteristic(self, depth, vertices, faces, edges):
        v, t = mesh.subdivide_icosphere(depth)
        e = mesh.mesh_edges(t)
        assert (len(v), len(t), len(e)) == (vertices, faces, edges)
        assert len(v) - len(e) + len(t) == 2

    def test_vertices_on_unit_sphere(self):
        for depth in range(4):
            v, _ = mesh.subdivide_icosphere(depth)
            radii = np.linalg.norm(v, axis=1)
            assert np.abs(radii - 1.0).max() < 1e-12

    def test_consistently_outward_oriented(self):
        for depth in range(3):
            v, t = mesh.subdivide_icosphere(depth)
            # every directed edge appears exactly once -> consistent orientation
            directed = [(a, b) for a, b, c in t] + [(b, c) for a, b, c in t] + [(c, a) for a, b, c in t]
            assert len(directed) == len(set(directed))
            assert polyhedron_volume_oracle(v, t) > 0

    def test_volume_converges_to_ball(self):
        # oracle values frozen from the brute-force tetrahedron sum
        # (cross-checked against scipy's convex hull volume)
        expected = {1: 3.6587122085120428, 2: 4.047044679978837, 3: 4.152740817092675}
        ball = 4.0 * np.pi / 3.0
        for depth, frozen in expected.items():
            v, t = mesh.subdivide_icosphere(depth)
            oracle = polyhedron_volume_oracle(v, t)
            assert oracle == pytest.approx(frozen, rel=1e-12)
            assert oracle < ball
        # refinement tightens the approximation: 12.7% -> 3.4% -> 0.9%
        assert 1.0 - expected[2] / ball == pytest.approx(0.0338, abs=2e-3)
        assert 1.0 - expected[3] / ball < 0.01

    def test_depth_guard(self):
        with pytest.raises(InvalidArgument):
            mesh.subdivide_icosphere(6)
        with pytest.raises(InvalidArgument):
            mesh.subdivide_icosphere(-1)


class TestBuildTwoLayerSphere:
    def test_depth1_counts(self):
        sphere = mesh.build_two_layer_sphere(1, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        assert sphere.n_particles == 84
        # 120 outer edges + 120 inner edges + 42 radial + 2*120 cross
        assert len(sphere.springs) == 522
        outer = [f for f in sphere.faces if f.layer is Layer.OUTER]
        inner = [f for f in sphere.faces if f.layer is Layer.INNER]
        assert len(outer) == 80 and len(inner) == 80

    def test_enclosed_volume_matches_oracle(self):
        sphere = mesh.build_two_layer_sphere(2, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        outer_faces = sphere.face_array(Layer.OUTER)
        oracle = polyhedron_volume_oracle(sphere.positions, outer_faces)
        assert oracle == pytest.approx(4.047044679978837, rel=1e-12)
        assert dynamics.enclosed_measure(sphere, Layer.OUTER) == pytest.approx(oracle, rel=1e-12)
        # the polyhedron undershoots the ball by ~3.4% at this depth
        assert 4.0 * np.pi / 3.0 * 0.95 < oracle < 4.0 * np.pi / 3.0

    def test_inner_shell_scaled(self):
        sphere = mesh.build_two_layer_sphere(1, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        outer = dynamics.enclosed_measure(sphere, Layer.OUTER)
        inner = dynamics.enclosed_measure(sphere, Layer.INNER)
        assert inner == pytest.approx(outer * 0.6**3, rel=1e-12)


class TestBuilderInvariants:
    def test_rest_lengths_equal_build_distance(self):
        objects = [
            mesh.build_chain(5, 2.0, 1.0, 10.0, 0.1),
            mesh.build_two_layer_disc(9, 0.8, 0.5, 1.0, 10.0, 0.1, 1.0, 0.5),
            mesh.build_two_layer_sphere(1, 0.7, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5),
        ]
        for obj in objects:
            for s in obj.springs:
                distance = float(np.linalg.norm(obj.positions[s.b] - obj.positions[s.a]))
                assert s.rest_length == distance

    def test_builders_deterministic(self):
        a = mesh.build_two_layer_sphere(2, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        b = mesh.build_two_layer_sphere(2, 1.0, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        np.testing.assert_array_equal(a.positions, b.positions)
        assert [(s.a, s.b, s.rest_length) for s in a.springs] == [
            (s.a, s.b, s.rest_length) for s in b.springs
        ]
        assert a.faces == b.faces


class TestLinkObjects:
    def _two_disc_world(self):
        world = WorldState(WorldParams())
        left = mesh.build_two_layer_disc(8, 0.4, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        right = mesh.build_two_layer_disc(8, 0.4, 0.6, 1.0, 10.0, 0.1, 1.0, 0.5)
        right.positions[:, 0] += 1.0
        world.add_object(left)
        world.add_object(right)
        return world

    def test_link_rest_length_is_current_gap(self):
        world = self._two_disc_world()
        # outer particle 0 of left disc at (0.4, 0, 0); particle 4 of right at (0.6, 0, 0)
        link_id = mesh.link_objects(world, 0, 0, 1, 4, 50.0, 0.5)
        assert link_id == 0
        link = world.links[0]
        expected = float(np.linalg.norm(
            world.objects[1].positions[4] - world.objects[0].positions[0]
        ))
        assert link.spring.rest_length == expected

    def test_self_link_rejected(self):
        world = self._two_disc_world()
        with pytest.raises(SelfLink):
            mesh.link_objects(world, 1, 0, 1, 5, 10.0, 0.1)

    def test_unknown_particle_rejected(self):
        world = self._two_disc_world()
        with pytest.raises(UnknownParticle):
            mesh.link_objects(world, 0, 99, 1, 0, 10.0, 0.1)

    def test_link_force_active_iff_stretched(self):
        world = self._two_disc_world()
        mesh.link_objects(world, 0, 0, 1, 4, 50.0, 0.0)
        ga = world.global_index(0, 0)

        # at rest length: no contribution
        dynamics.clear_forces(world)
        dynamics.apply_spring_forces(world)
        at_rest = world._force[ga].copy()

        # stretch the link by moving the right disc; spring oracle:
        # f = k * (L - rest) toward the partner
        world.objects[1].positions[:, 0] += 0.3
        link = world.links[0].spring
        delta = world.objects[1].positions[4] - world.objects[0].positions[0]
        length = float(np.linalg.norm(delta))
        expected = link.stiffness * (length - link.rest_length) * (delta / length)
        dynamics.clear_forces(world)
        dynamics.apply_spring_forces(world)
        stretched = world._force[ga] - at_rest
        np.testing.assert_allclose(stretched, expected, rtol=1e-12, atol=1e-12)
