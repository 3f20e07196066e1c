use encounter_core::arm::JointVector;
use encounter_core::plant::{plant_step, PlantState};
use encounter_core::shape_display::LinkageState;
use proptest::prelude::*;

#[test]
fn constant_command_follows_exponential() {
    let (dt, tau) = (0.008, 0.05);
    let q0 = JointVector([0.0, -1.0, 1.0, 0.5, -0.5, 2.0]);
    let cmd = JointVector([0.3, -0.2, 1.5, 0.0, 0.1, -1.0]);
    let l0 = LinkageState {
        theta_left: 2.0,
        theta_right: 1.0,
        s_flank: 0.0,
    };
    let lc = LinkageState {
        theta_left: 2.1,
        theta_right: 0.9,
        s_flank: 0.01,
    };
    let mut s = PlantState::at_rest(q0, l0);
    for k in 1..=500 {
        s = plant_step(&s, &cmd, &lc, dt, tau);
        let decay = (-(k as f64) * dt / tau).exp();
        for i in 0..6 {
            assert!((s.joints[i] - (cmd[i] + (q0[i] - cmd[i]) * decay)).abs() < 1e-9);
        }
        let expect_flank = lc.s_flank + (l0.s_flank - lc.s_flank) * decay;
        assert!((s.linkage.s_flank - expect_flank).abs() < 1e-9);
    }
}

#[test]
fn zero_tau_jumps_and_fixed_point_holds() {
    let q = JointVector([0.1; 6]);
    let l = LinkageState::default();
    let s = PlantState::at_rest(JointVector::zeros(), l);
    assert_eq!(plant_step(&s, &q, &l, 0.008, 0.0).joints, q);
    let rest = PlantState::at_rest(q, l);
    let next = plant_step(&rest, &q, &l, 0.008, 0.05);
    assert_eq!(next.joints, q);
    assert_eq!(next.linkage, l);
}

proptest! {
    #[test]
    fn never_overshoots(q0 in -3.0..3.0f64, cmd in -3.0..3.0f64, tau in 0.0..0.5f64, dt in 0.001..0.05f64) {
        let l = LinkageState::default();
        let mut s = PlantState::at_rest(JointVector([q0; 6]), l);
        let target = JointVector([cmd; 6]);
        let mut gap = (q0 - cmd).abs();
        for _ in 0..100 {
            s = plant_step(&s, &target, &l, dt, tau);
            let g = (s.joints[0] - cmd).abs();
            prop_assert!(g <= gap);
            prop_assert!((s.joints[0] - cmd) * (q0 - cmd) >= 0.0);
            gap = g;
        }
    }
}
