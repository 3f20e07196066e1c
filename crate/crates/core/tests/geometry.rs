mod common;

use encounter_core::geometry::{parse_obj, shapes, write_obj, Curvature, Vec3};
use proptest::prelude::*;
use rand::Rng;

use common::{brute_distance, brute_ray, random_unit, rng, triangle_closest};

fn random_point(r: &mut impl Rng, span: f64) -> Vec3 {
    Vec3::new(
        r.random_range(-span..span),
        r.random_range(-span..span),
        r.random_range(-span..span),
    )
}

#[test]
fn cube_closest_point_matches_scan() {
    let cube = shapes::unit_cube();
    assert_eq!(cube.triangle_count(), 12);
    let mut r = rng(21);
    for _ in 0..10_000 {
        let q = random_point(&mut r, 2.0);
        let hit = cube.closest_point(&q).unwrap();
        let scan = cube.closest_point_exhaustive(&q).unwrap();
        assert_eq!(hit.distance, scan.distance);
        assert_eq!(hit.point, scan.point);
        assert!((hit.distance - brute_distance(&cube, &q)).abs() < 1e-12);
    }
}

#[test]
fn triangle_routine_matches_projection_oracle() {
    let mut r = rng(22);
    for _ in 0..10_000 {
        let [a, b, c, p] = [0; 4].map(|_| random_point(&mut r, 1.0));
        let lib = encounter_core::geometry::closest_point_on_triangle(&p, &a, &b, &c);
        let oracle = triangle_closest(&p, &a, &b, &c);
        assert!(((lib - p).norm() - (oracle - p).norm()).abs() < 1e-12);
    }
}

#[test]
fn cube_rays_match_scan() {
    let cube = shapes::unit_cube();
    let mut r = rng(23);
    let mut hits = 0;
    let b = cube.bounds();
    for k in 0..1000 {
        let o = random_point(&mut r, 2.0);
        let d = if k % 2 == 0 {
            random_unit(&mut r)
        } else {
            let e = b.extent();
            let aim = b.min
                + Vec3::new(
                    e.x * r.random::<f64>(),
                    e.y * r.random::<f64>(),
                    e.z * r.random::<f64>(),
                );
            (aim - o).normalize()
        };
        let fast = cube.ray_cast(&o, &d).unwrap();
        let scan = cube.ray_cast_exhaustive(&o, &d).unwrap();
        assert_eq!(fast.map(|h| h.t), scan.map(|h| h.t));
        match (fast, brute_ray(&cube, &o, &d)) {
            (Some(h), Some(t)) => {
                hits += 1;
                assert!((h.t - t).abs() < 1e-12);
                assert!(cube.closest_point(&h.point).unwrap().distance < 1e-9);
            }
            (None, None) => {}
            other => panic!("hit disagreement {other:?}"),
        }
    }
    assert!(hits >= 500);
}

#[test]
fn sphere_curvature_everywhere() {
    let sphere = shapes::icosphere(Vec3::zeros(), 0.1, 3);
    let mut r = rng(24);
    for _ in 0..50 {
        let dir = random_unit(&mut r);
        let c = sphere.closest_point(&(dir * 0.2)).unwrap();
        let patch = sphere.local_patch(&c.point, c.triangle, 0.03).unwrap();
        let Curvature::Convex { radius } = patch.curvature else {
            panic!("sphere patch should be convex, got {:?}", patch.curvature)
        };
        assert!((radius - 0.1).abs() < 0.01, "radius {radius}");
        assert!((patch.normal.norm() - 1.0).abs() < 1e-9);
        assert!(patch.tangent.dot(&patch.normal).abs() < 1e-9);
    }
}

#[test]
fn cylinder_curvature_across_axis() {
    let cyl = shapes::cylinder(Vec3::zeros(), 0.2, 0.4, 96, 8);
    for angle in [0.1_f64, 1.0, 2.5, 4.0] {
        let q = Vec3::new(0.3 * angle.cos(), 0.3 * angle.sin(), 0.03);
        let c = cyl.closest_point(&q).unwrap();
        let patch = cyl.local_patch(&c.point, c.triangle, 0.03).unwrap();
        let radius = patch.curvature_radius().unwrap();
        assert!((radius - 0.2).abs() < 0.02, "radius {radius}");
        assert!(patch.tangent.z.abs() < 0.2, "tangent should run around the axis");
    }
}

#[test]
fn obj_round_trip_keeps_queries() {
    let mesh = shapes::icosphere(Vec3::new(0.1, 0.0, 0.2), 0.05, 2);
    let back = parse_obj(&write_obj(&mesh)).unwrap();
    assert_eq!(back.triangle_count(), mesh.triangle_count());
    let q = Vec3::new(0.3, 0.1, 0.0);
    let a = mesh.closest_point(&q).unwrap();
    let b = back.closest_point(&q).unwrap();
    assert!((a.distance - b.distance).abs() < 1e-12);
}

proptest! {
    #[test]
    fn closest_point_bounded_by_vertices(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
        let mesh = shapes::icosphere(Vec3::zeros(), 0.3, 2);
        let q = Vec3::new(x, y, z);
        let d = mesh.closest_point(&q).unwrap().distance;
        for v in mesh.vertices() {
            prop_assert!(d <= (v - q).norm() + 1e-15);
        }
    }
}
