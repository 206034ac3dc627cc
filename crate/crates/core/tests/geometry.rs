mod common;

use std::f64::consts::PI;

use common::{asset, brute_distance, brute_signed_distance, manifest, ray_inside, ASSETS};
use multiscope::geometry::primitives::{box_mesh, unit_cube};
use multiscope::geometry::{penetration_count, sample_surface, Pose2, Solid};
use multiscope::sim::{make_tool_mesh, Tool};
use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;

#[test]
fn bundled_assets_match_manifest() {
    let m = manifest();
    for name in ASSETS {
        let entry = &m["meshes"][name];
        let mesh = asset(name);
        assert_eq!(mesh.vertices().len() as u64, entry["vertices"].as_u64().unwrap(), "{name}");
        assert_eq!(mesh.triangles().len() as u64, entry["triangles"].as_u64().unwrap(), "{name}");
        let area = entry["surface_area"].as_f64().unwrap();
        assert!((mesh.surface_area() - area).abs() <= 1e-9 * area, "{name}");
    }
}

#[test]
fn bundled_assets_equal_the_procedural_meshes() {
    for tool in Tool::ALL {
        let generated = make_tool_mesh(tool).unwrap();
        let loaded = asset(tool.name());
        assert_eq!(generated.triangles(), loaded.triangles(), "{}", tool.name());
        for (a, b) in generated.vertices().iter().zip(loaded.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}

#[test]
fn mesh_normals_are_unit() {
    for name in ASSETS {
        for n in asset(name).normals() {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn samples_lie_on_their_triangles_with_its_normal() {
    for name in ASSETS {
        let mesh = asset(name);
        let s = sample_surface(&mesh, 2e5, 7);
        let total: f64 = s.area_weights.iter().sum();
        assert!((total - mesh.surface_area()).abs() <= 1e-6 * mesh.surface_area(), "{name}");
        for i in 0..s.len() {
            let t = s.triangle_ids[i];
            let [a, b, c] = mesh.triangle(t);
            let q = common::closest_on_triangle(&s.points[i], &a, &b, &c);
            assert!((q - s.points[i]).norm() < 1e-9);
            assert!((s.normals[i] - mesh.normals()[t]).norm() < 1e-12);
        }
    }
}

#[test]
fn overlapping_cubes_match_brute_force_count() {
    let a = unit_cube();
    let b = box_mesh(Vector3::new(0.5, 0.0, 0.0), Vector3::new(1.5, 1.0, 1.0)).unwrap();
    let pa = sample_surface(&a, 600.0, 3);
    let pb = sample_surface(&b, 600.0, 4);
    let (sa, sb) = (Solid::new(a.clone()), Solid::new(b.clone()));
    let id = Isometry3::identity();
    let margin = 1e-3;
    let count = penetration_count(&pa, &sa, &id, &pb, &sb, &id, margin);

    let deep = |mesh, p: &Vector3<f64>| ray_inside(mesh, p) && brute_distance(mesh, p) > margin;
    let expected = pa.points.iter().filter(|p| deep(&b, p)).count() + pb.points.iter().filter(|p| deep(&a, p)).count();
    assert!(count > 0);
    assert_eq!(count, expected);
}

#[test]
fn separated_and_touching_cubes_do_not_penetrate() {
    let a = unit_cube();
    let pa = sample_surface(&a, 600.0, 3);
    let sa = Solid::new(a);
    for gap in [1.0, 0.0] {
        let b = box_mesh(Vector3::new(1.0 + gap, 0.0, 0.0), Vector3::new(2.0 + gap, 1.0, 1.0)).unwrap();
        let pb = sample_surface(&b, 600.0, 4);
        let id = Isometry3::identity();
        assert_eq!(penetration_count(&pa, &sa, &id, &pb, &Solid::new(b), &id, 1e-3), 0);
    }
}

fn solids() -> Vec<(&'static str, Solid)> {
    ASSETS.iter().map(|n| (*n, Solid::new(asset(n)))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pose_round_trip(x in -1.0..1.0f64, z in -1.0..1.0f64, theta in -10.0..10.0f64) {
        let p = Pose2::new(x, z, theta);
        prop_assert!(p.theta > -PI && p.theta <= PI);
        let q = Pose2::from_isometry(&p.to_isometry());
        prop_assert!((q.x - p.x).abs() < 1e-12);
        prop_assert!((q.z - p.z).abs() < 1e-12);
        prop_assert!((q.theta - p.theta).abs() < 1e-12);
        let iso = p.to_isometry();
        prop_assert!(iso.translation.y == 0.0);
        let y = iso.rotation * Vector3::y();
        prop_assert!((y - Vector3::y()).norm() < 1e-12);
    }

    #[test]
    fn sdf_sign_flips_across_the_surface(which in 0usize..5, pick in any::<prop::sample::Index>(), seed in 0u64..4) {
        let (name, solid) = &solids()[which];
        let s = sample_surface(solid.mesh(), 1e5, seed);
        let i = pick.index(s.len());
        let (p, n) = (s.points[i], s.normals[i]);
        prop_assert!(solid.signed_distance(&p).abs() < 1e-6, "{}", name);
        prop_assert!(solid.signed_distance(&(p + n * 1e-3)) > 0.0, "{} outside", name);
        prop_assert!(solid.signed_distance(&(p - n * 1e-3)) < 0.0, "{} inside", name);
    }

    #[test]
    fn sdf_is_one_lipschitz(
        which in 0usize..5,
        a in prop::array::uniform3(-0.06..0.16f64),
        b in prop::array::uniform3(-0.06..0.16f64),
    ) {
        let (_, solid) = &solids()[which];
        let (a, b) = (Vector3::from(a), Vector3::from(b));
        let d = (solid.signed_distance(&a) - solid.signed_distance(&b)).abs();
        prop_assert!(d <= (a - b).norm() + 1e-12);
    }

    #[test]
    fn sdf_matches_brute_force(which in 0usize..5, p in prop::array::uniform3(-0.05..0.15f64)) {
        let (_, solid) = &solids()[which];
        let p = Vector3::from(p);
        let expected = brute_signed_distance(solid.mesh(), &p);
        prop_assume!(expected.abs() > 1e-6);
        prop_assert!((solid.signed_distance(&p) - expected).abs() < 1e-9);
    }

    #[test]
    fn penetration_is_invariant_to_a_shared_rigid_motion(
        tool in 0usize..4,
        pt in prop::array::uniform3(-0.01..0.01f64),
        pp in prop::array::uniform3(-0.01..0.01f64),
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in -PI..PI,
        shift in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let tool_mesh = asset(ASSETS[tool]);
        let probe_mesh = asset("probe");
        let (ts, ps) = (sample_surface(&tool_mesh, 1e5, 1), sample_surface(&probe_mesh, 3e5, 2));
        let (tsol, psol) = (Solid::new(tool_mesh), Solid::new(probe_mesh));
        let world_t = Pose2::new(pt[0], pt[1], pt[2] * 20.0).to_isometry();
        let world_p = Isometry3::translation(0.0, 0.0, 0.05) * Pose2::new(pp[0], pp[1], pp[2] * 20.0).to_isometry();
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 1e-3);
        let g = Isometry3::from_parts(
            Translation3::from(Vector3::from(shift)),
            UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle),
        );
        let before = penetration_count(&ts, &tsol, &world_t, &ps, &psol, &world_p, 1e-3);
        let after = penetration_count(&ts, &tsol, &(g * world_t), &ps, &psol, &(g * world_p), 1e-3);
        prop_assert_eq!(before, after);
    }
}
