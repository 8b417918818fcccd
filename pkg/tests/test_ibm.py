import numpy as np
import pytest

from cubeflow.geomio import TriangleIndex, TriangleSoup, triangle_box_overlap
from cubeflow.geomio.shapes import box, extruded_polygon, icosphere
from cubeflow.grid import HALO, FieldLayout, generate_forest
from cubeflow.ibm import (
    NEAR,
    WALL,
    WallStencilSet,
    classify_cells,
    compute_forcing,
    dead_end_filter,
    forcing_weight,
    ghost_value,
)


class TestGhostValue:
    def test_dirichlet_mirror_far_branch(self):
        assert ghost_value(3.0, 99.0, 0.0, 0.75, 1.0) == pytest.approx(-1.0)

    def test_branch_boundary_agreement(self):
        g_far = ghost_value(2.0, 123.0, 0.0, 0.5, 1.0)
        g_near = ghost_value(2.0, 123.0, 0.0, 0.5 - 1e-13, 1.0)
        assert g_far == pytest.approx(-2.0)
        assert g_near == pytest.approx(-2.0, abs=1e-10)

    def test_constant_field_preserved(self):
        assert ghost_value(1.0, 1.0, 1.0, 0.25, 1.0) == pytest.approx(1.0)

    def test_continuity_in_d_random_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            q_i, q_im1, q_ib = rng.normal(size=3)
            dx = rng.uniform(0.1, 3.0)
            lo = ghost_value(q_i, q_im1, q_ib, 0.5 * dx - 1e-9 * dx, dx)
            hi = ghost_value(q_i, q_im1, q_ib, 0.5 * dx, dx)
            assert lo == pytest.approx(hi, abs=1e-6 * max(1.0, abs(hi)))

    def test_linear_field_mirror_exact_far_branch(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            alpha, beta = rng.normal(size=2)
            dx = rng.uniform(0.5, 2.0)
            d = rng.uniform(0.5, 0.999) * dx
            q = lambda x: alpha + beta * x  # noqa: E731
            g = ghost_value(q(0.0), q(-dx), q(d), d, dx)
            mirrored = 2.0 * q(d) - q(2.0 * d - dx)
            assert g == pytest.approx(mirrored, rel=1e-12, abs=1e-12)

    def test_domain_check(self):
        with pytest.raises(ValueError):
            ghost_value(1.0, 1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ghost_value(1.0, 1.0, 0.0, -0.1, 1.0)


class TestForcingWeight:
    def test_midpoint(self):
        assert forcing_weight(0.5, 1.0, "dum_fluid") == pytest.approx(1 / 3)
        assert forcing_weight(0.5, 1.0, "ghost") == pytest.approx(1 / 3)

    def test_wall_at_center(self):
        assert forcing_weight(0.0, 1.0, "dum_fluid") == 0.0
        assert forcing_weight(0.0, 1.0, "ghost") == 1.0

    def test_far_fluid_zero(self):
        assert forcing_weight(0.7, 1.0, "far_fluid") == 0.0

    def test_pair_sum_single_valued(self):
        d = np.linspace(0.0, 1.0, 11)
        total = forcing_weight(d, 1.0, "dum_fluid") + forcing_weight(d, 1.0, "ghost")
        np.testing.assert_allclose(total, 1.0 / (1.0 + d))


def layout_3d(base=2, npc=8, lo=-1.0, hi=1.0):
    forest = generate_forest((lo,) * 3, (hi,) * 3, base_cubes=base, cells_per_side=npc)
    return FieldLayout(forest)


def layout_2d(base=2, npc=8, lo=-1.0, hi=1.0, periodic=False):
    forest = generate_forest(
        (lo,) * 2, (hi,) * 2, base_cubes=base, cells_per_side=npc, periodic=(periodic,) * 2
    )
    return FieldLayout(forest)


class TestClassification:
    def test_empty_soup_all_fluid(self):
        layout = layout_2d()
        mask, _ = classify_cells(layout, None)
        assert np.all(mask.interior_codes() == 0)

    def test_single_triangle_marks_cell_and_neighbors(self):
        layout = layout_3d()
        # a triangle tucked inside one cell, placed away from the center lines
        cid, loc = layout.forest.locate_cell((0.31, 0.31, 0.31))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        off = 0.3 * cube.dx
        tri = TriangleSoup(
            np.array(
                [[ctr + [off, off, off * 0.5], ctr + [off, off * 0.2, -off * 0.4], ctr + [off * 0.1, off, -off * 0.3]]]
            )
        )
        mask, _ = classify_cells(layout, TriangleIndex(tri))
        counts = mask.counts()
        assert counts["wall"] == 1
        assert 1 <= counts["wall_adjacent"] <= 6
        # the wall cell is the one we aimed at
        assert mask.codes[(cid,) + tuple(np.asarray(loc) + HALO)] == WALL

    def test_sphere_shell_matches_brute_force(self):
        """Exhaustive per-cell scan (volume overlap + center-segment crossings
        with a direct plane/barycentric test) reproduces the wall set."""
        layout = layout_3d()
        soup = icosphere(diameter=1.2, subdivisions=1)
        mask, _ = classify_cells(layout, TriangleIndex(soup))

        centers = layout.interior_centers()
        ncell = centers.shape[0]
        wall_oracle = np.zeros(ncell, dtype=bool)
        half = np.full(3, 0.5 * layout.dx[0])
        for tid in range(len(soup)):
            wall_oracle |= triangle_box_overlap(soup.vertices[tid], centers, half)

        v0 = soup.vertices[:, 0]
        e1 = soup.vertices[:, 1] - v0
        e2 = soup.vertices[:, 2] - v0
        nrm = np.cross(e1, e2)

        def segment_hits(p, q):
            """Does segment p->q cross any triangle? Direct algebra."""
            dvec = q - p
            denom = nrm @ dvec
            with np.errstate(divide="ignore", invalid="ignore"):
                tpar = np.einsum("ij,ij->i", nrm, v0 - p) / denom
            okd = np.abs(denom) > 1e-14
            cand = okd & (tpar >= 0.0) & (tpar <= 1.0)
            if not cand.any():
                return False
            pts = p + tpar[cand, None] * dvec
            w = pts - v0[cand]
            d00 = np.einsum("ij,ij->i", e1[cand], e1[cand])
            d01 = np.einsum("ij,ij->i", e1[cand], e2[cand])
            d11 = np.einsum("ij,ij->i", e2[cand], e2[cand])
            d20 = np.einsum("ij,ij->i", w, e1[cand])
            d21 = np.einsum("ij,ij->i", w, e2[cand])
            den = d00 * d11 - d01 * d01
            u = (d11 * d20 - d01 * d21) / den
            v = (d00 * d21 - d01 * d20) / den
            return bool(np.any((u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12)))

        dx = layout.dx[0]
        rng = np.random.default_rng(2)
        sample = rng.choice(ncell, size=400, replace=False)
        got = mask.wall.reshape(-1)[layout.interior_flat]
        for k in sample:
            w = wall_oracle[k]
            if not w:
                for axis in range(3):
                    for s in (-1.0, 1.0):
                        qpt = centers[k].copy()
                        qpt[axis] += s * dx
                        if segment_hits(centers[k], qpt):
                            w = True
            assert got[k] == w, f"cell {k} at {centers[k]}"

        # shell sanity: wall cells hug radius 0.6
        r = np.linalg.norm(centers[got], axis=1)
        assert np.all(np.abs(r - 0.6) < 3.5 * dx)

    def test_duplicate_triangles_change_no_mask_bit(self):
        layout = layout_3d()
        soup = icosphere(diameter=1.2, subdivisions=1)
        doubled = TriangleSoup(np.concatenate([soup.vertices, soup.vertices]))
        m1, _ = classify_cells(layout, TriangleIndex(soup))
        m2, _ = classify_cells(layout, TriangleIndex(doubled))
        np.testing.assert_array_equal(m1.codes, m2.codes)

    def test_triangle_order_invariance(self):
        layout = layout_3d()
        soup = icosphere(diameter=1.2, subdivisions=1)
        rng = np.random.default_rng(9)
        shuffled = TriangleSoup(soup.vertices[rng.permutation(len(soup))])
        m1, _ = classify_cells(layout, TriangleIndex(soup))
        m2, _ = classify_cells(layout, TriangleIndex(shuffled))
        np.testing.assert_array_equal(m1.codes, m2.codes)

    def test_open_vs_closed_masks_differ_only_near_hole(self):
        """No flood fill: deleting the box lid changes the mask only for
        cells whose grid lines ran through the removed face."""
        layout = layout_3d()
        closed = box(center=(0, 0, 0), size=(1.0, 1.0, 1.0))
        keep = [i for i in range(len(closed)) if closed.normals[i, 2] < 0.99]
        opened = TriangleSoup(closed.vertices[keep])
        mc, _ = classify_cells(layout, TriangleIndex(closed))
        mo, _ = classify_cells(layout, TriangleIndex(opened))
        diff = mc.codes != mo.codes
        centers = layout.centers.reshape(-1, 3)
        pts = centers[diff.reshape(-1)]
        dx = layout.dx[0]
        # removed face: z = +0.5, |x|,|y| <= 0.5
        assert np.all(np.abs(pts[:, 2] - 0.5) < 2.5 * dx + 1e-12)
        assert np.all(np.abs(pts[:, 0]) < 0.5 + 2.5 * dx)
        assert np.all(np.abs(pts[:, 1]) < 0.5 + 2.5 * dx)


def stencils_for(layout, soup, slice_z=0.0):
    index = TriangleIndex(soup) if soup is not None and len(soup) else None
    mask, registry = classify_cells(layout, index, slice_z=slice_z)
    st = WallStencilSet(layout, mask, registry, slice_z=slice_z)
    return mask, st


class TestWallStencils:
    def test_figure_configuration_ghosts_s_e_w(self):
        """Crossings toward south, east, west and none toward north ghost
        exactly the six line cells S1 S2 E1 E2 W1 W2."""
        layout = layout_2d(base=2, npc=8)
        cid, loc = layout.forest.locate_cell((0.3, 0.3))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        dx = cube.dx
        segs = []
        # vertical walls crossing the x-line east and west of the center
        for xw in (ctr[0] + 0.4 * dx, ctr[0] - 0.45 * dx):
            segs.append(
                extruded_polygon(
                    np.array([[xw, ctr[1] - 0.3 * dx], [xw, ctr[1] + 0.3 * dx]]), -0.1, 0.1
                ).vertices
            )
        # horizontal wall crossing the y-line south of the center
        yw = ctr[1] - 0.3 * dx
        segs.append(
            extruded_polygon(
                np.array([[ctr[0] - 0.3 * dx, yw], [ctr[0] + 0.3 * dx, yw]]), -0.1, 0.1
            ).vertices
        )
        soup = TriangleSoup(np.concatenate(segs))
        mask, st = stencils_for(layout, soup)
        owner = np.flatnonzero(st.owner_pad == layout.padded_index(cid, loc))
        assert owner.size == 1
        k = owner[0]
        rings = st.ghost_rings()[k]  # (2*dim, 2), q order: -x +x -y +y
        assert rings[0].tolist() == [True, True]  # W1 W2
        assert rings[1].tolist() == [True, True]  # E1 E2
        assert rings[2].tolist() == [True, True]  # S1 S2
        assert rings[3].tolist() == [False, False]  # N stays fluid

    def test_zero_thickness_sheet_splits_locally(self):
        """A sheet between two cells ghosts each side's first ring in its own
        block only; no global inside/outside exists."""
        layout = layout_2d(base=2, npc=8)
        cid, loc = layout.forest.locate_cell((0.3, 0.3))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        dx = cube.dx
        yw = ctr[1] + 0.5 * dx  # sheet on the face between the cell and its north neighbor
        sheet = extruded_polygon(
            np.array([[ctr[0] - 3 * dx, yw], [ctr[0] + 3 * dx, yw]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, sheet)
        south = np.flatnonzero(st.owner_pad == layout.padded_index(cid, loc))[0]
        nloc = (loc[0], loc[1] + 1)
        north = np.flatnonzero(st.owner_pad == layout.padded_index(cid, nloc))[0]
        rs = st.ghost_rings()
        assert rs[south][3].tolist() == [True, True]  # N1 N2 ghost from the south side
        assert rs[south][2].tolist() == [False, False]
        assert rs[north][2].tolist() == [True, True]  # S1 S2 ghost from the north side
        assert rs[north][3].tolist() == [False, False]

    def test_adjacent_cell_with_no_crossing_is_pure_copy(self):
        layout = layout_3d()
        cid, loc = layout.forest.locate_cell((0.31, 0.31, 0.31))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        off = 0.25 * cube.dx
        # small triangle in the cell corner, away from every center line
        tri = TriangleSoup(
            np.array(
                [[ctr + [off, off, off], ctr + [off * 1.5, off, off], ctr + [off, off * 1.5, off]]]
            )
        )
        mask, st = stencils_for(layout, tri)
        near_pads = st.owner_pad[
            mask.codes.reshape(-1)[st.owner_pad] == NEAR
        ]
        assert near_pads.size >= 1
        rings = st.ghost_rings()
        rng_vals = np.random.default_rng(0).normal(size=layout.shape)
        for k in range(st.m):
            if mask.codes.reshape(-1)[st.owner_pad[k]] != NEAR:
                continue
            if st.has_x[k].any():
                continue
            assert not rings[k].any()
            vals = st.line_values(rng_vals, "dirichlet", comp=0)[k]
            bg = rng_vals.reshape(-1)[st.line_idx[k]]
            np.testing.assert_array_equal(vals, bg)

    def test_line_values_constant_field_with_matching_wall(self):
        layout = layout_2d()
        square = extruded_polygon(
            np.array([[-0.4, -0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, 0.4]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, square)
        st.set_wall_velocity(lambda pts, t: np.ones((pts.shape[0], 2)), 0.0)
        f = np.ones(layout.shape)
        vals = st.line_values(f, "dirichlet", comp=0)
        np.testing.assert_allclose(vals, 1.0, atol=1e-12)

    def test_neumann_line_values_copy_owner(self):
        layout = layout_2d()
        square = extruded_polygon(
            np.array([[-0.4, -0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, 0.4]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, square)
        rng = np.random.default_rng(4)
        f = rng.normal(size=layout.shape)
        vals = st.line_values(f, "neumann")
        rings = st.ghost_rings()
        flat = f.reshape(-1)
        for k in range(st.m):
            for a in range(2):
                for side, q in ((-1, 2 * a), (1, 2 * a + 1)):
                    if rings[k, q, 0]:
                        assert vals[k, a, 2 + side] == flat[st.line_idx[k, a, 2]]


class TestForcing:
    def test_no_ib_zero_forcing(self):
        layout = layout_2d()
        mask, st = stencils_for(layout, None)
        rhs = np.zeros((2,) + layout.shape)
        u = np.zeros((2,) + layout.shape)
        f = compute_forcing(layout, st, mask, rhs, u, dt=0.1)
        assert not np.any(f)

    def test_equilibrium_zero_forcing(self):
        layout = layout_2d()
        square = extruded_polygon(
            np.array([[-0.4, -0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, 0.4]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, square)
        st.set_wall_velocity(None)
        rhs = np.zeros((2,) + layout.shape)
        u = np.zeros((2,) + layout.shape)
        f = compute_forcing(layout, st, mask, rhs, u, dt=0.1)
        assert np.allclose(f, 0.0)

    def test_forcing_weights_and_targets(self):
        """A single wall crossing splits the pair force d/(dx+d) on the owner
        and (dx-d)/(dx+d) on the cell across the wall."""
        layout = layout_2d(base=2, npc=8)
        cid, loc = layout.forest.locate_cell((0.3, 0.3))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        dx = cube.dx
        yw = ctr[1] + 0.25 * dx
        sheet = extruded_polygon(
            np.array([[ctr[0] - 0.4 * dx, yw], [ctr[0] + 0.4 * dx, yw]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, sheet)
        st.set_wall_velocity(lambda pts, t: np.tile([2.0, 0.0], (pts.shape[0], 1)), 0.0)
        rhs = np.zeros((2,) + layout.shape)
        u = np.zeros((2,) + layout.shape)
        dt = 0.5
        f = compute_forcing(layout, st, mask, rhs, u, dt=dt)
        flat = f.reshape(2, -1)
        owner_pad = layout.padded_index(cid, loc)
        north_pad = layout.padded_index(cid, (loc[0], loc[1] + 1))
        d = 0.25 * dx
        w_f = d / (dx + d)
        w_g = (dx - d) / (dx + d)
        pair = 2.0 / dt
        # owner: own fluid-side weight + ghost share from the north cell's
        # crossing at distance dx - d; cells whose accumulated weight tops 1
        # are renormalized so the relaxation cannot overshoot the wall value
        d_n = dx - d
        sum_owner = w_f + (dx - d_n) / (dx + d_n)
        sum_north = w_g + d_n / (dx + d_n)
        expect_owner = sum_owner * pair / max(1.0, sum_owner)
        expect_north = sum_north * pair / max(1.0, sum_north)
        assert flat[0, owner_pad] == pytest.approx(expect_owner)
        assert flat[0, north_pad] == pytest.approx(expect_north)
        assert flat[1, owner_pad] == 0.0

    def test_dead_end_cancels_forcing(self):
        """One-cell-wide sealed cavity: the enclosed cell loses its forcing."""
        layout = layout_2d(base=2, npc=8)
        cid, loc = layout.forest.locate_cell((0.3, 0.3))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        dx = cube.dx
        h = 1.5 * dx
        ring = extruded_polygon(
            np.array(
                [
                    [ctr[0] - h, ctr[1] - h],
                    [ctr[0] + h, ctr[1] - h],
                    [ctr[0] + h, ctr[1] + h],
                    [ctr[0] - h, ctr[1] + h],
                ]
            ),
            -0.1,
            0.1,
        )
        index = TriangleIndex(ring)
        mask, registry = classify_cells(layout, index)
        dead_end_filter(mask)
        st = WallStencilSet(layout, mask, registry)
        owner_pad = layout.padded_index(cid, loc)
        # the enclosed cell is boxed in by wall cells on all four sides
        assert mask.dead_end.reshape(-1)[owner_pad]
        st.set_wall_velocity(lambda pts, t: np.tile([1.0, 0.0], (pts.shape[0], 1)), 0.0)
        rhs = np.zeros((2,) + layout.shape)
        u = np.zeros((2,) + layout.shape)
        f = compute_forcing(layout, st, mask, rhs, u, dt=0.1)
        assert f.reshape(2, -1)[0, owner_pad] == 0.0

    def test_four_of_six_neighbors_keeps_forcing(self):
        """3D: four wall neighbors out of six leaves the forcing active."""
        layout = layout_3d()
        cid, loc = layout.forest.locate_cell((0.3, 0.3, 0.3))
        cube = layout.forest.cubes[cid]
        ctr = cube.origin + (np.asarray(loc) + 0.5) * cube.dx
        dx = cube.dx
        h = 1.5 * dx
        # a square tube open along z: 4 side walls, no caps
        tube = extruded_polygon(
            np.array(
                [
                    [ctr[0] - h, ctr[1] - h],
                    [ctr[0] + h, ctr[1] - h],
                    [ctr[0] + h, ctr[1] + h],
                    [ctr[0] - h, ctr[1] + h],
                ]
            ),
            ctr[2] - 5 * dx,
            ctr[2] + 5 * dx,
        )
        mask, registry = classify_cells(layout, TriangleIndex(tube))
        dead_end_filter(mask)
        owner_pad = layout.padded_index(cid, loc)
        assert not mask.dead_end.reshape(-1)[owner_pad]

    def test_reconstruction_error_zero_when_field_matches_wall(self):
        layout = layout_2d()
        square = extruded_polygon(
            np.array([[-0.4, -0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, 0.4]]), -0.1, 0.1
        )
        mask, st = stencils_for(layout, square)
        st.set_wall_velocity(lambda pts, t: np.ones((pts.shape[0], 2)), 0.0)
        u = np.ones((2,) + layout.shape)
        errs = st.reconstruction_error(u)
        assert errs.size > 0
        np.testing.assert_allclose(errs, 0.0, atol=1e-12)


class TestBilinearOracle:
    def test_linear_field_agreement_with_axis_closure(self):
        """On fields linear along the line, the two-dimensional interpolation
        oracle and the one-dimensional closure give the same mirrored ghost."""
        from cubeflow.ibm.closure import bilinear_ghost_value

        rng = np.random.default_rng(8)
        for _ in range(50):
            a, b = rng.normal(size=2)
            q = lambda x, y: a + b * x  # noqa: E731  varies along the line only
            dx = 1.0
            d = rng.uniform(0.5, 0.99)
            q_ib = q(d, 0.0)
            pts = np.array([[0.0, 0.0], [-dx, 0.0], [0.0, dx], [-dx, dx]])
            vals = np.array([q(x, y) for x, y in pts])
            # imaginary point: mirror of the ghost cell x=+dx across the wall
            ip = (2 * d - dx, 0.0)
            oracle = bilinear_ghost_value(pts, vals, ip, q_ib)
            g = ghost_value(q(0.0, 0.0), q(-dx, 0.0), q_ib, d, dx)
            assert g == pytest.approx(oracle, rel=1e-12, abs=1e-12)

    def test_rejects_bad_shapes(self):
        from cubeflow.ibm.closure import bilinear_ghost_value

        with pytest.raises(ValueError):
            bilinear_ghost_value(np.zeros((3, 2)), np.zeros(3), (0, 0), 0.0)
