//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use encounter_core::arm::{DhTable, JointVector};
use encounter_core::geometry::{Pose, PoseRecord, TriMesh, Vec3};
use encounter_core::shape_display::LinkageState;
use encounter_core::twin::{Payload, TwinMessage};
use nalgebra::{Matrix4, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Homogeneous DH chain `Rz(θ)·Tz(d)·Tx(a)·Rx(α)` multiplied out by hand.
pub fn dh_chain(dh: &DhTable, q: &JointVector) -> Matrix4<f64> {
    let mut t = Matrix4::identity();
    for (i, row) in dh.rows.iter().enumerate() {
        let th = q.0[i] + row.theta_offset;
        let (st, ct) = th.sin_cos();
        let (sa, ca) = row.alpha.sin_cos();
        #[rustfmt::skip]
        let a = Matrix4::new(
            ct, -st * ca,  st * sa, row.a * ct,
            st,  ct * ca, -ct * sa, row.a * st,
            0.0,      sa,       ca, row.d,
            0.0,     0.0,      0.0, 1.0,
        );
        t *= a;
    }
    t
}

pub fn random_joints(r: &mut impl Rng, span: f64) -> JointVector {
    JointVector(std::array::from_fn(|_| r.random_range(-span..span)))
}

/// Closest point on segment `ab` to `p`.
fn segment_closest(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point on a triangle: plane projection when it lands inside,
/// otherwise the best of the three edges.
pub fn triangle_closest(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let proj = p - n * ((p - a).dot(&n) / n.norm_squared());
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(proj - *u)).dot(&n) >= 0.0);
    if inside {
        return proj;
    }
    [
        segment_closest(p, a, b),
        segment_closest(p, b, c),
        segment_closest(p, c, a),
    ]
    .into_iter()
    .min_by(|x, y| (x - p).norm().total_cmp(&(y - p).norm()))
    .unwrap()
}

/// Minimum distance from `p` to any triangle of `mesh`.
pub fn brute_distance(mesh: &TriMesh, p: &Vec3) -> f64 {
    (0..mesh.triangle_count())
        .map(|i| {
            let [a, b, c] = mesh.corners(i);
            (triangle_closest(p, &a, &b, &c) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Ray parameter of the hit on one triangle via the plane equation and
/// edge sign tests.
pub fn triangle_ray(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let n = (b - a).cross(&(c - a));
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = (a - o).dot(&n) / denom;
    if t < 0.0 {
        return None;
    }
    let x = o + d * t;
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(x - *u)).dot(&n) >= 0.0);
    inside.then_some(t)
}

/// Nearest hit over all triangles.
pub fn brute_ray(mesh: &TriMesh, o: &Vec3, d: &Vec3) -> Option<f64> {
    (0..mesh.triangle_count())
        .filter_map(|i| {
            let [a, b, c] = mesh.corners(i);
            triangle_ray(o, d, &a, &b, &c)
        })
        .min_by(f64::total_cmp)
}

/// Height field over `[-half, half]²` with `2n²` triangles and random
/// vertex heights in `±bump`.
pub fn bumpy_terrain(n: usize, half: f64, bump: f64, seed: u64) -> TriMesh {
    let mut r = rng(seed);
    let step = 2.0 * half / n as f64;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec3::new(
                -half + i as f64 * step,
                -half + j as f64 * step,
                r.random_range(-bump..bump),
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, triangles).unwrap()
}

pub fn random_unit(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Valid message of any kind with random contents.
pub fn random_message(r: &mut impl Rng) -> TwinMessage {
    let seq = r.random::<u64>();
    let t = r.random_range(0.0..1e4);
    let lk = |r: &mut dyn rand::RngCore| LinkageState {
        theta_left: r.random_range(-4.0..4.0),
        theta_right: r.random_range(-4.0..4.0),
        s_flank: r.random_range(-0.02..0.02),
    };
    let payload = match r.random_range(0..5) {
        0 => Payload::Hello,
        1 => Payload::Heartbeat,
        2 => Payload::StateUpdate {
            q: random_joints(r, 7.0),
            linkage: lk(r),
        },
        3 => {
            let rot = UnitQuaternion::from_scaled_axis(random_unit(r) * r.random_range(0.0..3.1));
            let pose = Pose::new(
                rot,
                Vec3::new(
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                ),
            );
            Payload::TargetCommand {
                pose: PoseRecord::from(&pose),
                linkage: lk(r),
            }
        }
        _ => {
            let len = r.random_range(0..24);
            let text: String = (0..len)
                .map(|_| ['a', 'Z', ' ', '"', '\\', '\n', 'é', '☃', '\t', '0'][r.random_range(0..10)])
                .collect();
            Payload::Fault { code: r.random(), text }
        }
    };
    TwinMessage::new(seq, t, payload)
}
