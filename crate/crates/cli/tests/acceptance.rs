//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `--nocapture` to see them). Criteria cover the
//! four shipped scenarios, the time-to-zone and codec oracles, determinism,
//! physics sanity and bridge rigidity, each with its stated tolerance and
//! runtime budget.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use v2psim::agents::{step_vehicle, VehicleState};
use v2psim::geometry::{normalize_angle, Pose2, Rect, Vec2};
use v2psim::risk::{classify_severity, time_to_zone, RiskConfig, Severity};
use v2psim::scenario::{load_config_str, run, write_trace, ScenarioConfig};
use v2psim::v2p::{crc16_ccitt_false, decode_psm, encode_psm, PsmMessage, HEADING_Q_MAX};
use v2psim_cli::sweep::{run_sweep, write_sweep_csv, SweepParam};

fn shipped(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    load_config_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}")))
        .unwrap()
}

fn budget(name: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= limit,
        "{name}: runtime {elapsed:?} exceeds budget {limit:?}"
    );
}

#[test]
fn criterion_1_darting_baseline_collides_without_braking() {
    let t0 = Instant::now();
    let (_, outcome) = run(&shipped("darting_no_v2p.json"));
    assert!(outcome.collided, "baseline must end in collision");
    assert_eq!(outcome.max_severity, 0, "baseline must never brake");
    budget("criterion 1", t0, Duration::from_secs(1));
    println!("criterion 1 PASS: darting baseline collides with severity 0 ({:?})", t0.elapsed());
}

#[test]
fn criterion_2_darting_v2p_brakes_before_line_of_sight() {
    let t0 = Instant::now();
    let (records, outcome) = run(&shipped("darting_v2p.json"));
    assert!(!outcome.collided);
    assert!(outcome.stopped);
    assert_eq!(outcome.max_severity, 3);
    let first_brake = outcome.first_brake_time.expect("brake must engage");
    let first_los = records
        .iter()
        .find(|r| r.los)
        .map(|r| r.t)
        .expect("line of sight eventually clears");
    assert!(
        first_brake < first_los,
        "brake at {first_brake} must precede line of sight at {first_los}"
    );
    budget("criterion 2", t0, Duration::from_secs(1));
    println!(
        "criterion 2 PASS: v2p run stops at severity 3, brake {first_brake:.2}s < LOS {first_los:.2}s ({:?})",
        t0.elapsed()
    );
}

#[test]
fn criterion_3_severity_graded_variants() {
    let t0 = Instant::now();
    let (_, slow) = run(&shipped("slow_walk.json"));
    assert!(!slow.collided);
    assert_eq!(slow.max_severity, 1, "slow walk is a severity-1 encounter");
    budget("criterion 3 (slow walk)", t0, Duration::from_secs(1));

    let t1 = Instant::now();
    let (_, far) = run(&shipped("far_fast.json"));
    assert!(!far.collided);
    assert_eq!(far.max_severity, 2, "far-fast is a severity-2 encounter");
    budget("criterion 3 (far fast)", t1, Duration::from_secs(1));
    println!(
        "criterion 3 PASS: slow walk severity 1, far-fast severity 2 ({:?} + {:?})",
        t0.elapsed(),
        t1.elapsed()
    );
}

#[test]
fn criterion_4_ttz_matches_marching_oracle() {
    use rand::{Rng, SeedableRng};
    let t0 = Instant::now();
    let cfg = RiskConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260811);
    let oracle_dt = 1e-3;
    let mut finite_cases = 0;
    for i in 0..1000 {
        let zone = Rect::new(
            Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
            rng.gen_range(1.0..4.0),
            rng.gen_range(1.0..4.0),
        );
        // a slice of the samples exercises the stationary guard
        let speed = if i % 20 == 0 {
            rng.gen_range(0.0..0.1)
        } else {
            rng.gen_range(0.3..12.0)
        };
        let position = Vec2::new(rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0));
        // half the rays aim near the zone so finite entries are well covered
        let heading = if i % 2 == 0 {
            let toward = zone.center - position;
            normalize_angle(toward.y.atan2(toward.x) + rng.gen_range(-0.3..0.3))
        } else {
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
        };
        let agent = Pose2::new(position, heading, speed);
        let analytic = time_to_zone(&agent, &zone, &cfg);

        // forward-integration oracle: step the agent at constant velocity and
        // record the first tick inside the zone
        let marched = if agent.speed < cfg.min_speed_epsilon {
            f64::INFINITY
        } else {
            let reach = agent.position.distance(zone.center)
                + zone.half_extent_x.hypot(zone.half_extent_y)
                + 1.0;
            let horizon = reach / agent.speed;
            let step = agent.heading_unit() * (agent.speed * oracle_dt);
            let mut pos = agent.position;
            let mut t = 0.0;
            let mut hit = f64::INFINITY;
            while t <= horizon {
                if zone.contains(pos) {
                    hit = t;
                    break;
                }
                pos = pos + step;
                t += oracle_dt;
            }
            hit
        };

        assert_eq!(
            analytic.is_finite(),
            marched.is_finite(),
            "sample {i}: classification mismatch (analytic {analytic}, marched {marched})"
        );
        if analytic.is_finite() {
            finite_cases += 1;
            assert!(
                (analytic - marched).abs() <= 2.0 * oracle_dt,
                "sample {i}: analytic {analytic} vs marched {marched}"
            );
        }
    }
    assert!(finite_cases > 200, "sampler too conservative: {finite_cases} finite cases");
    budget("criterion 4", t0, Duration::from_secs(10));
    println!(
        "criterion 4 PASS: analytic TTZ within 2 ms of marching oracle on 1000 samples ({finite_cases} finite) ({:?})",
        t0.elapsed()
    );
}

#[test]
fn criterion_5_severity_grid_matches_threshold_definition() {
    let t0 = Instant::now();
    let cfg = RiskConfig::default();
    let reference = |ttz: f64| {
        if ttz >= 2.3 {
            Severity::Level1
        } else if ttz >= 1.5 {
            Severity::Level2
        } else {
            Severity::Level3
        }
    };
    let mut grid: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
    grid.push(1.5);
    grid.push(2.3);
    for ttz in grid {
        assert_eq!(classify_severity(ttz, &cfg), reference(ttz), "ttz {ttz}");
    }
    budget("criterion 5", t0, Duration::from_secs(1));
    println!("criterion 5 PASS: severity classifier exact on 0..6s grid and both boundaries ({:?})", t0.elapsed());
}

#[test]
fn criterion_6_codec_round_trip_and_corruption_detection() {
    use rand::{Rng, SeedableRng};
    let t0 = Instant::now();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let msg = PsmMessage {
            source_id: rng.gen(),
            timestamp_ms: rng.gen(),
            x_cm: rng.gen(),
            y_cm: rng.gen(),
            speed_q: rng.gen(),
            heading_q: rng.gen_range(0..HEADING_Q_MAX),
        };
        let frame = encode_psm(&msg).unwrap();
        assert_eq!(decode_psm(frame.as_bytes()).unwrap(), msg);
    }

    // the worked frame, frozen from an out-of-band CRC reference
    let expected: [u8; 22] = [
        0x50, 0x53, 0x01, 0x07, 0xE8, 0x03, 0x00, 0x00, 0x7B, 0x00, 0x00, 0x00, 0x38, 0xFF,
        0xFF, 0xFF, 0xFA, 0x00, 0x20, 0x1C, 0x5A, 0x80,
    ];
    let msg = PsmMessage {
        source_id: 7,
        timestamp_ms: 1000,
        x_cm: 123,
        y_cm: -200,
        speed_q: 250,
        heading_q: 7200,
    };
    let frame = encode_psm(&msg).unwrap();
    assert_eq!(frame.as_bytes(), &expected);
    assert_eq!(crc16_ccitt_false(b"123456789"), 0x29B1);

    // exhaustive single-bit corruption over the 20 payload bytes
    let mut silent = 0;
    for byte in 0..20 {
        for bit in 0..8 {
            let mut corrupted = *frame.as_bytes();
            corrupted[byte] ^= 1 << bit;
            if decode_psm(&corrupted).is_ok() {
                silent += 1;
            }
        }
    }
    assert_eq!(silent, 0, "{silent} single-bit corruptions went undetected");
    budget("criterion 6", t0, Duration::from_secs(5));
    println!("criterion 6 PASS: 10k round trips exact, 160/160 bit flips detected, reference frame matches ({:?})", t0.elapsed());
}

#[test]
fn criterion_7_byte_identical_reruns_and_worker_count_invariance() {
    let t0 = Instant::now();
    for name in [
        "darting_no_v2p.json",
        "darting_v2p.json",
        "slow_walk.json",
        "far_fast.json",
    ] {
        let cfg = shipped(name);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_trace(&run(&cfg).0, &mut a).unwrap();
        write_trace(&run(&cfg).0, &mut b).unwrap();
        assert_eq!(a, b, "{name}: trace differs between identical runs");
    }

    let base = shipped("darting_v2p.json");
    let params = vec![
        SweepParam::parse("channel.drop_probability=0.0:0.6:0.3").unwrap(),
        SweepParam::parse("channel.latency_mean=0.0:0.06:0.03").unwrap(),
    ];
    let serial = {
        let rows = run_sweep(&base, &params, 1).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&params, &rows, &mut buf).unwrap();
        buf
    };
    let parallel = {
        let rows = run_sweep(&base, &params, 4).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&params, &rows, &mut buf).unwrap();
        buf
    };
    assert_eq!(serial, parallel, "sweep.csv depends on worker count");
    budget("criterion 7", t0, Duration::from_secs(30));
    println!("criterion 7 PASS: reruns byte-identical, 9-cell sweep identical with 1 and 4 workers ({:?})", t0.elapsed());
}

#[test]
fn criterion_8_physics_sanity() {
    let t0 = Instant::now();

    // instant actuator, 10 m/s, 8 m/s^2: closed-form distance 6.25 m
    let mut v = VehicleState::new(Pose2::new(Vec2::zero(), 0.0, 10.0), 0.0, 4.7, 1.8);
    v.commanded_decel = 8.0;
    while v.pose.speed > 0.0 {
        v = step_vehicle(&v, 0.01);
    }
    let stop_distance = v.pose.position.x;
    assert!(
        (stop_distance - 6.25).abs() <= 0.1,
        "stop distance {stop_distance} outside 6.25 +/- 0.1"
    );

    for name in [
        "darting_no_v2p.json",
        "darting_v2p.json",
        "slow_walk.json",
        "far_fast.json",
    ] {
        let coarse = shipped(name);
        let mut fine = coarse.clone();
        fine.dt = coarse.dt / 2.0;
        let (_, a) = run(&coarse);
        let (_, b) = run(&fine);
        let drift = (a.min_separation - b.min_separation).abs();
        assert!(
            drift < 0.1,
            "{name}: halving dt moved min_separation by {drift}"
        );
    }
    budget("criterion 8", t0, Duration::from_secs(30));
    println!("criterion 8 PASS: stop distance {stop_distance:.3} m, dt-halving drift < 0.1 m on all scenarios ({:?})", t0.elapsed());
}

#[test]
fn criterion_9_bridge_rigidity_under_quarter_turn() {
    use rand::{Rng, SeedableRng};
    use v2psim::bridge::{calibrate, map_pose, RealPoseSample};

    let t0 = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let samples: Vec<RealPoseSample> = (0..1000)
        .map(|i| RealPoseSample {
            t: i as f64 * 0.1,
            pose: Pose2::new(
                Vec2::new(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(0.0..20.0),
            ),
        })
        .collect();
    let cal = calibrate(
        Pose2::new(Vec2::zero(), 0.0, 0.0),
        Pose2::new(Vec2::new(120.0, -40.0), std::f64::consts::FRAC_PI_2, 0.0),
    );
    let mapped: Vec<Pose2> = samples.iter().map(|s| map_pose(&cal, &s.pose)).collect();

    let mut max_distance_err: f64 = 0.0;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let real = samples[i].pose.position.distance(samples[j].pose.position);
            let virt = mapped[i].position.distance(mapped[j].position);
            max_distance_err = max_distance_err.max((real - virt).abs());
        }
    }
    assert!(max_distance_err < 1e-9, "pairwise distance error {max_distance_err}");

    let mut max_offset_err: f64 = 0.0;
    for (s, m) in samples.iter().zip(mapped.iter()) {
        let offset = normalize_angle(m.heading - s.pose.heading);
        max_offset_err = max_offset_err.max((offset - std::f64::consts::FRAC_PI_2).abs());
    }
    assert!(max_offset_err < 1e-9, "heading offset drift {max_offset_err}");
    budget("criterion 9", t0, Duration::from_secs(10));
    println!(
        "criterion 9 PASS: 1000-sample log rigid within {max_distance_err:.2e} m, heading offset constant within {max_offset_err:.2e} rad ({:?})",
        t0.elapsed()
    );
}
