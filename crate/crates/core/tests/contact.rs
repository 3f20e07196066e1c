mod common;

use encounter_core::contact::{contact_events, detect_approach, predict_contact};
use encounter_core::geometry::{shapes, Vec3};
use encounter_core::tracking::HandFrame;
use rand::Rng;

use common::{brute_distance, brute_ray, random_unit, rng};

#[test]
fn nearest_fingertip_wins() {
    let mesh = shapes::grid_plane(Vec3::zeros(), 0.2, 8);
    let mut r = rng(41);
    for _ in 0..200 {
        let mut frame = HandFrame::single_point(0.0, Vec3::new(0.0, 0.0, 1.0));
        for tip in frame.fingertips.iter_mut() {
            *tip = Vec3::new(
                r.random_range(-0.3..0.3),
                r.random_range(-0.3..0.3),
                r.random_range(0.001..0.3),
            );
        }
        let dists: Vec<f64> = frame.fingertips.iter().map(|p| brute_distance(&mesh, p)).collect();
        let (best, dmin) = dists
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if *d < acc.1 { (i, *d) } else { acc });
        match detect_approach(&frame, &mesh, 0.15).unwrap() {
            Some((i, d)) => {
                assert!(dmin < 0.15);
                assert!((d - dmin).abs() < 1e-12);
                assert!(dists[i] <= dmin + 1e-12);
                if dists.iter().filter(|x| (*x - dmin).abs() < 1e-12).count() == 1 {
                    assert_eq!(i, best);
                }
            }
            None => assert!(dmin >= 0.15),
        }
    }
}

#[test]
fn sphere_chord_prediction() {
    let sphere = shapes::icosphere(Vec3::zeros(), 0.1, 3);
    let mut r = rng(42);
    for _ in 0..200 {
        let start = random_unit(&mut r) * 0.25;
        let aim = random_unit(&mut r) * 0.03;
        let dir = (aim - start).normalize();
        let velocity = dir * 0.4;
        let target = predict_contact(&sphere, 1, &start, &velocity, 0.02).unwrap();
        let t = brute_ray(&sphere, &start, &dir).expect("aimed inside the sphere");
        assert!((target.point - (start + dir * t)).norm() < 1e-9);
        assert!((target.eta - t / 0.4).abs() < 1e-9);
        let analytic = target.point.normalize();
        assert!(target.normal.dot(&analytic).clamp(-1.0, 1.0).acos() < 2f64.to_radians());
        assert!(sphere.closest_point(&target.point).unwrap().distance < 1e-9);
    }
}

#[test]
fn zero_velocity_uses_closest_point() {
    let sphere = shapes::icosphere(Vec3::zeros(), 0.1, 2);
    let p = Vec3::new(0.05, 0.1, 0.12);
    let target = predict_contact(&sphere, 0, &p, &Vec3::zeros(), 0.02).unwrap();
    let c = sphere.closest_point(&p).unwrap();
    assert_eq!(target.point, c.point);
    assert_eq!(target.triangle, c.triangle);
    assert!(target.eta.is_infinite());
}

/// Two-threshold scan written as a plain state machine over the samples.
fn scan(samples: &[(f64, f64)], on: f64, off: f64) -> Vec<(f64, Option<f64>)> {
    let mut out: Vec<(f64, Option<f64>)> = Vec::new();
    let mut touching = false;
    for &(t, d) in samples {
        if !touching && d < on {
            touching = true;
            out.push((t, None));
        } else if touching && d > off {
            touching = false;
            out.last_mut().unwrap().1 = Some(t);
        }
    }
    out
}

#[test]
fn hysteresis_band_suppresses_chatter() {
    let mut r = rng(43);
    let mut samples = Vec::new();
    for k in 0..2000 {
        let t = k as f64 * 0.008;
        let d = match k {
            0..200 => 0.05,
            200..210 => 0.001,
            // noise kept inside the (5 mm, 10 mm) band
            210..1500 => r.random_range(0.0051..0.0099),
            1500..1600 => 0.02,
            _ => r.random_range(0.0..0.03),
        };
        samples.push((t, d));
    }
    let events = contact_events(&samples, 0.005, 0.01).unwrap();
    let oracle = scan(&samples, 0.005, 0.01);
    assert_eq!(events.len(), oracle.len());
    for (e, o) in events.iter().zip(&oracle) {
        assert_eq!((e.onset, e.offset), *o);
    }
    assert_eq!(events[0].offset, Some(1500.0 * 0.008));
    for w in events.windows(2) {
        assert!(w[0].offset.unwrap() <= w[1].onset);
    }
}
