mod common;

use std::f64::consts::{PI, TAU};

use encounter_core::arm::{
    forward_kinematics, inverse_kinematics, jacobian, manipulability, DhTable, IkConfig, JointLimits, JointVector,
};
use proptest::prelude::*;
use rand::Rng;

use common::{dh_chain, random_joints, rng};

fn max_chain_deviation(dh: &DhTable, q: &JointVector) -> f64 {
    let pose = forward_kinematics(dh, q);
    let m = dh_chain(dh, q);
    let rot = pose.rotation.to_rotation_matrix();
    let mut dev = 0.0_f64;
    for i in 0..3 {
        dev = dev.max((pose.translation[i] - m[(i, 3)]).abs());
        for j in 0..3 {
            dev = dev.max((rot[(i, j)] - m[(i, j)]).abs());
        }
    }
    dev
}

#[test]
fn zero_pose_matches_matrix_chain() {
    let dh = DhTable::ur3();
    assert!(max_chain_deviation(&dh, &JointVector::zeros()) < 1e-15);
    // fully stretched along -x at zero joints: a2 + a3 in x, d4 + d6 offsets
    let p = forward_kinematics(&dh, &JointVector::zeros()).translation;
    assert!((p.x - (-0.24365 - 0.21325)).abs() < 1e-12);
}

#[test]
fn random_configurations_match_matrix_chain() {
    let dh = DhTable::ur3();
    let mut r = rng(11);
    for _ in 0..1000 {
        let q = random_joints(&mut r, TAU);
        assert!(max_chain_deviation(&dh, &q) < 1e-12);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let dh = DhTable::ur3();
    let mut r = rng(12);
    let h = 1e-6;
    for _ in 0..100 {
        let q = random_joints(&mut r, PI);
        let j = jacobian(&dh, &q);
        for c in 0..6 {
            let (mut qp, mut qm) = (q, q);
            qp[c] += h;
            qm[c] -= h;
            let (pp, pm) = (forward_kinematics(&dh, &qp), forward_kinematics(&dh, &qm));
            let dp = (pp.translation - pm.translation) / (2.0 * h);
            let w = (pp.rotation * pm.rotation.inverse()).scaled_axis() / (2.0 * h);
            for i in 0..3 {
                assert!((j[(i, c)] - dp[i]).abs() < 1e-6);
                assert!((j[(i + 3, c)] - w[i]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn full_extension_is_singular() {
    let dh = DhTable::ur3();
    let stretched = JointVector([0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(manipulability(&dh, &stretched) < 1e-6);
}

#[test]
fn ik_recovers_perturbed_seeds() {
    let dh = DhTable::ur3();
    let limits = JointLimits::default();
    let mut r = rng(13);
    for _ in 0..1000 {
        let q = random_joints(&mut r, PI);
        let target = forward_kinematics(&dh, &q);
        let seed = JointVector(std::array::from_fn(|i| {
            q[i] + if r.random::<bool>() { 0.1 } else { -0.1 }
        }));
        let sol = inverse_kinematics(&dh, &target, &seed, &limits, &IkConfig::default()).unwrap();
        let (p, a) = forward_kinematics(&dh, &sol.q).error_to(&target);
        assert!(p < 1e-6 && a < 1e-5, "residual {p} m {a} rad");
        assert!(limits.contains(&sol.q));
    }
}

proptest! {
    #[test]
    fn fk_is_periodic(q in prop::array::uniform6(-PI..PI), joint in 0usize..6, turns in -2i32..=2) {
        let dh = DhTable::ur3();
        let q = JointVector(q);
        let mut shifted = q;
        shifted[joint] += TAU * turns as f64;
        let (p, a) = forward_kinematics(&dh, &q).error_to(&forward_kinematics(&dh, &shifted));
        prop_assert!(p < 1e-12 && a < 1e-12);
    }
}
