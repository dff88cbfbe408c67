use fovea_core::codec::decode;
use fovea_core::synth;
use fovea_stream::{Config, Gaze, Session, SessionConfig, Source};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaze(ts: u64, x: f32, y: f32) -> Gaze {
    Gaze { timestamp: ts, x, y }
}

#[test]
fn burst_in_any_order_keeps_the_newest_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut burst: Vec<Gaze> = (1..=1000u64).map(|ts| gaze(ts * 7, rng.gen(), rng.gen())).collect();
        let newest = *burst.iter().max_by_key(|g| g.timestamp).unwrap();
        burst.shuffle(&mut rng);
        let mut s = Session::new(SessionConfig::default());
        for g in burst {
            s.on_gaze(g, 0).unwrap();
        }
        assert_eq!(s.latest_gaze(), Some(newest));
    }
}

#[test]
fn gaze_applied_mid_encode_waits_for_the_next_frame() {
    let frame = synth::moving_pattern(160, 96, 0).unwrap();
    let mut s = Session::new(SessionConfig::default());
    s.on_gaze(gaze(100, 0.2, 0.2), 0).unwrap();
    let plan = s.snapshot();
    // Arrives after the snapshot, i.e. while the frame is being encoded.
    s.on_gaze(gaze(200, 0.8, 0.7), 0).unwrap();
    let first = plan.encode(&frame).unwrap();
    assert_eq!(first.message.echoed_gaze_timestamp, 100);
    assert_eq!((first.message.gaze_x, first.message.gaze_y), (0.2, 0.2));
    let second = s.snapshot().encode(&frame).unwrap();
    assert_eq!(second.message.echoed_gaze_timestamp, 200);
    assert_eq!((second.message.gaze_x, second.message.gaze_y), (0.8, 0.7));
    assert_ne!(first.qp_map, second.qp_map);
}

#[test]
fn disabled_foveation_sends_an_all_zero_map() {
    let frame = synth::moving_pattern(160, 96, 3).unwrap();
    let mut s = Session::new(SessionConfig::default());
    s.on_gaze(gaze(1, 0.1, 0.9), 0).unwrap();
    s.on_config(Config { strength: 50.0, sigma: 0.03, base_qp: 12, foveation_enabled: false }).unwrap();
    let out = s.snapshot().encode(&frame).unwrap();
    assert_eq!(out.message.strength, 0.0);
    let decoded = decode(&out.message.payload).unwrap();
    assert!(decoded.qp_map.deltas().iter().all(|&d| d == 0));
}

#[test]
fn unchanged_gaze_and_still_source_give_identical_payloads() {
    let source = Source::still(synth::moving_pattern(320, 180, 5).unwrap());
    let mut s = Session::new(SessionConfig::default());
    s.on_gaze(gaze(9, 0.4, 0.6), 0).unwrap();
    let a = s.snapshot().encode(&source.frame(0)).unwrap();
    let b = s.snapshot().encode(&source.frame(1)).unwrap();
    assert_ne!(a.message.frame_id, b.message.frame_id);
    assert_eq!(a.message.payload, b.message.payload);
}

#[test]
fn bitrate_of_a_still_stream_is_stable_across_windows() {
    let source = Source::still(synth::moving_pattern(320, 180, 5).unwrap());
    let mut s = Session::new(SessionConfig::default());
    s.on_gaze(gaze(1, 0.5, 0.5), 0).unwrap();
    let period_us = 1_000_000 / 30;
    let mut rates = Vec::new();
    for i in 1..=300u64 {
        let plan = s.snapshot();
        let out = plan.encode(&source.frame(i)).unwrap();
        // Send times jitter by up to 2 ms around the nominal tick.
        let now = i * period_us + (i * 7919 % 2000);
        s.record_frame(now, out.bits, plan.gaze_received_at_us);
        if i % 30 == 0 && i >= 60 {
            rates.push(s.bitrate(now, 1.0).unwrap());
        }
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    for r in &rates {
        assert!((r / mean - 1.0).abs() <= 0.05, "{r} vs mean {mean}");
    }
}
