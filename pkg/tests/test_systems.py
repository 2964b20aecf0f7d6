import numpy as np
import pytest

from previewsafe.errors import ConfigError, ImageNotExactError
from previewsafe.geometry import HPolytope, Hyperbox, set_equal
from previewsafe.geometry.polytope import _as_polytope
from previewsafe.systems import (
    BrunovskyProblem,
    augment,
    collaborative,
    evariant,
    make_brunovsky,
    step,
    system_from_config,
    system_to_config,
)

MASTER_SEEDS = [11, 222, 3333]


def scalar_example_system(a=2.0, beta=1.0, gamma=1.0, r=2.0):
    # x+ = a x + u + d with |x| <= r, |u| <= beta, |d| <= gamma
    from previewsafe.systems import LinearSystem

    safe = HPolytope(
        [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [r, r, beta, beta]
    )
    return LinearSystem(
        A=[[a]], B=[[1.0]], E=[[1.0]],
        dist_set=Hyperbox.from_bounds([-gamma], [gamma]), safe=safe,
    )


class TestMakeBrunovsky:
    def test_n2_matrices(self):
        sys = make_brunovsky(2, Hyperbox.cube(2, 0.2), Hyperbox.cube(2, 1.0))
        assert np.array_equal(sys.A, [[0.0, 1.0], [0.0, 0.0]])
        assert np.array_equal(sys.B, [[0.0], [1.0]])
        assert np.array_equal(sys.E, np.eye(2))

    def test_n1(self):
        sys = make_brunovsky(1, Hyperbox.cube(1, 0.2), Hyperbox.cube(1, 1.0))
        assert np.array_equal(sys.A, [[0.0]])
        assert np.array_equal(sys.B, [[1.0]])

    def test_nilpotent(self):
        sys = make_brunovsky(5, Hyperbox.cube(5, 0.1), Hyperbox.cube(5, 1.0))
        assert np.allclose(np.linalg.matrix_power(sys.A, 5), 0.0)

    def test_input_unconstrained(self):
        sys = make_brunovsky(2, Hyperbox.cube(2, 0.2), Hyperbox.cube(2, 1.0))
        # no u-rows: last column of the safe set is identically zero
        assert np.allclose(sys.safe.H[:, -1], 0.0)


class TestStep:
    def test_shift(self):
        sys = make_brunovsky(2, Hyperbox.cube(2, 0.2), Hyperbox.cube(2, 1.0))
        out = step(sys, [0.0, 1.0], [0.0], [0.0, 0.0])
        assert np.allclose(out, [1.0, 0.0])

    def test_scalar_arithmetic(self):
        sys = scalar_example_system()
        assert step(sys, [1.0], [-1.0], [0.5]) == pytest.approx(np.array([1.5]))

    def test_zero_dynamics(self):
        from previewsafe.systems import LinearSystem

        sys = LinearSystem(
            A=np.zeros((2, 2)), B=np.zeros((2, 1)), E=np.zeros((2, 1)),
            dist_set=Hyperbox.from_bounds([0.0], [0.0]),
            safe=HPolytope.universe(3),
        )
        assert np.allclose(step(sys, [3.0, -1.0], [5.0], [2.0]), 0.0)


class TestAugment:
    def test_scalar_p1_structure(self):
        sys = scalar_example_system()
        ps = augment(sys, 1)
        assert ps.aug.n == 2
        assert np.array_equal(ps.aug.A, [[2.0, 1.0], [0.0, 0.0]])
        assert np.array_equal(ps.aug.B, [[1.0], [0.0]])
        assert np.array_equal(ps.aug.E, [[0.0], [1.0]])

    def test_p0_identity(self):
        sys = scalar_example_system()
        assert augment(sys, 0).aug is sys

    def test_shift_register_trace(self):
        sys = make_brunovsky(2, Hyperbox.cube(2, 0.3), Hyperbox.cube(2, 1.0))
        ps = augment(sys, 2)
        assert ps.aug.n == 6
        rng = np.random.default_rng(0)
        script = [rng.uniform(-0.3, 0.3, size=2) for _ in range(5)]
        xi = np.concatenate([[0.1, -0.2], script[0], script[1]])
        for t in range(3):
            xi = step(ps.aug, xi, [0.0], script[t + 2])
            # the d-blocks hold the next two scripted disturbances
            assert np.allclose(xi[2:4], script[t + 1])
            assert np.allclose(xi[4:6], script[t + 2])

    @pytest.mark.parametrize("seed", MASTER_SEEDS)
    def test_augmented_matches_base_trajectory(self, seed):
        rng = np.random.default_rng(seed)
        sys = scalar_example_system()
        for p in (1, 3):
            ps = augment(sys, p)
            T = 6
            script = [rng.uniform(-1, 1, size=1) for _ in range(T + p)]
            inputs = [rng.uniform(-1, 1, size=1) for _ in range(T)]
            x = np.array([0.5])
            xi = np.concatenate([x] + script[:p])
            for t in range(T):
                x = step(sys, x, inputs[t], script[t])
                xi = step(ps.aug, xi, inputs[t], script[t + p])
                assert np.max(np.abs(xi[:1] - x)) <= 1e-12

    def test_nesting_of_augmentations(self):
        sys = scalar_example_system()
        a1 = augment(sys, 1).aug
        a3 = augment(sys, 3).aug
        assert np.allclose(a3.A[:2, :2], a1.A)
        assert np.allclose(a3.B[:2], a1.B)


class TestCollaborative:
    def test_scalar(self):
        sys = scalar_example_system()
        co = collaborative(sys).sys
        assert co.m == 2
        assert np.array_equal(co.B, [[1.0, 1.0]])
        assert np.allclose(co.E, 0.0)
        # safe box is [-r,r] x [-beta,beta] x [-gamma,gamma]
        assert set_equal(co.safe, HPolytope.from_box(Hyperbox.from_bounds([-2, -1, -1], [2, 1, 1])))

    def test_disturbance_has_no_influence(self):
        sys = scalar_example_system()
        co = collaborative(sys).sys
        x, u = [0.3], [0.2, -0.1]
        assert np.allclose(step(co, x, u, [0.0]), step(co, x, u, [0.0]))
        assert co.dist_set.lo == pytest.approx(0.0)
        assert co.dist_set.hi == pytest.approx(0.0)

    def test_l_zero_keeps_input_dim(self):
        from previewsafe.systems import LinearSystem

        sys = LinearSystem(
            A=[[1.0]], B=[[1.0]], E=np.zeros((1, 0)),
            dist_set=Hyperbox(()), safe=HPolytope.from_bounds([-1, -1], [1, 1]),
        )
        co = collaborative(sys).sys
        assert co.m == 1


class TestBrunovskyProblem:
    def test_dist_box_recomputed(self):
        # diamond |d1| + |d2| <= 0.3: its smallest box is [-0.3, 0.3]^2
        diamond = HPolytope([[1, 1], [1, -1], [-1, 1], [-1, -1]], [0.3] * 4)
        prob = BrunovskyProblem.create(2, Hyperbox.cube(2, 1.0), diamond, 1)
        assert np.allclose(prob.dist_box.lo, [-0.3, -0.3])
        assert np.allclose(prob.dist_box.hi, [0.3, 0.3])

    def test_invalid(self):
        from previewsafe.errors import InvalidParametersError

        with pytest.raises(InvalidParametersError):
            BrunovskyProblem.create(0, Hyperbox(()), Hyperbox(()), 0)


class TestEvariant:
    def test_identity(self):
        box = Hyperbox.cube(2, 1.0)
        dist = Hyperbox.cube(2, 0.2)
        prob = evariant(2, np.eye(2), dist, box, 1)
        plain = BrunovskyProblem.create(2, box, dist, 1)
        assert prob.core_fields_equal(plain)
        assert prob.ebar is None

    def test_coordinate_embedding(self):
        # Ebar = [0; 1]: the image of [-1,1] is the segment {0} x [-1,1]
        prob = evariant(2, np.array([[0.0], [1.0]]), Hyperbox.from_bounds([-1], [1]), Hyperbox.cube(2, 2.0), 0)
        seg = HPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [0, 0, 1, 1])
        assert set_equal(_as_polytope(prob.dist), seg)
        assert np.allclose(prob.dist_box.lo, [0.0, -1.0])
        assert np.allclose(prob.dist_box.hi, [0.0, 1.0])

    def test_diagonal_segment_image(self):
        prob = evariant(2, np.array([[1.0], [1.0]]), Hyperbox.from_bounds([-1], [1]), Hyperbox.cube(2, 2.0), 0)
        diag = HPolytope([[1, -1], [-1, 1], [1, 0], [-1, 0]], [0, 0, 1, 1])
        assert set_equal(_as_polytope(prob.dist), diag)
        # bounding box of the diagonal segment is the full square
        assert np.allclose(prob.dist_box.lo, [-1.0, -1.0])
        assert np.allclose(prob.dist_box.hi, [1.0, 1.0])

    def test_unbounded_image_refused(self):
        half = HPolytope([[1.0]], [1.0])  # unbounded input set
        with pytest.raises(ImageNotExactError):
            evariant(2, np.array([[1.0], [1.0]]), half, Hyperbox.cube(2, 2.0), 0)


class TestConfigRoundtrip:
    def test_roundtrip(self):
        sys = scalar_example_system()
        cfg = system_to_config(sys, preview=2)
        sys2, p = system_from_config(cfg)
        assert p == 2
        assert np.allclose(sys2.A, sys.A)
        assert np.allclose(sys2.B, sys.B)
        assert np.allclose(sys2.E, sys.E)
        assert set_equal(sys2.safe, sys.safe)

    def test_malformed(self):
        with pytest.raises(ConfigError):
            system_from_config({"A": [[1.0]]})

    def test_inconsistent_dims(self):
        cfg = system_to_config(scalar_example_system())
        cfg["B"] = [[1.0], [1.0]]
        with pytest.raises(ConfigError):
            system_from_config(cfg)
