use std::time::Duration;

use fovea_core::codec::decode;
use fovea_core::synth;
use fovea_stream::protocol::{KIND_GAZE, KIND_STATS};
use fovea_stream::{run_probe, Config, Gaze, Message, ProbeConfig, Server, ServerConfig, SessionConfig, Source, StreamClient};
use tokio::time::timeout;

async fn start(config: ServerConfig, source: Source) -> String {
    let server = Server::bind("127.0.0.1:0", config, source).await.unwrap();
    let url = format!("ws://{}", server.local_addr().unwrap());
    tokio::spawn(server.run());
    url
}

async fn small_server() -> String {
    start(ServerConfig::default(), Source::pattern(160, 96).unwrap()).await
}

/// Sends a gaze sample and waits for the first frame that echoes it.
async fn echo_of(client: &mut StreamClient, g: Gaze) -> fovea_stream::FrameMsg {
    client.send(&Message::Gaze(g)).await.unwrap();
    timeout(Duration::from_secs(5), async {
        loop {
            let f = client.recv_frame().await.unwrap();
            if f.echoed_gaze_timestamp == g.timestamp {
                return f;
            }
        }
    })
    .await
    .expect("gaze never echoed")
}

#[tokio::test]
async fn frames_decode_from_the_first_one_received() {
    let url = small_server().await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    let first = client.recv_frame().await.unwrap();
    assert_eq!(first.echoed_gaze_timestamp, 0);
    let d = decode(&first.payload).unwrap();
    assert_eq!((d.frame.width(), d.frame.height()), (160, 96));
    // A second client joining later decodes its first frame too.
    tokio::time::sleep(Duration::from_millis(200)).await;
    let mut late = StreamClient::connect(&url).await.unwrap();
    assert!(decode(&late.recv_frame().await.unwrap().payload).is_ok());
}

#[tokio::test]
async fn gaze_is_echoed_with_its_coordinates() {
    let url = small_server().await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    let f = echo_of(&mut client, Gaze { timestamp: 42, x: 0.25, y: 0.75 }).await;
    assert_eq!((f.gaze_x, f.gaze_y), (0.25, 0.75));
    let f = echo_of(&mut client, Gaze { timestamp: 43, x: 1.5, y: -0.2 }).await;
    assert_eq!((f.gaze_x, f.gaze_y), (1.0, 0.0));
    // A stale sample is dropped, so frames keep echoing 43.
    client.send(&Message::Gaze(Gaze { timestamp: 10, x: 0.5, y: 0.5 })).await.unwrap();
    for _ in 0..5 {
        assert_eq!(client.recv_frame().await.unwrap().echoed_gaze_timestamp, 43);
    }
}

#[tokio::test]
async fn malformed_and_unknown_messages_keep_the_session() {
    let url = small_server().await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    client.send_raw(vec![]).await.unwrap();
    client.send_raw(vec![KIND_GAZE, 1, 2]).await.unwrap();
    client.send_raw(vec![0x42; 20]).await.unwrap();
    client.send_raw(vec![KIND_STATS]).await.unwrap();
    client.send(&Message::Gaze(Gaze { timestamp: 5, x: f32::NAN, y: 0.5 })).await.unwrap();
    client.send(&Message::Config(Config { strength: 50.0, sigma: -1.0, base_qp: 12, foveation_enabled: true })).await.unwrap();
    let f = echo_of(&mut client, Gaze { timestamp: 6, x: 0.3, y: 0.3 }).await;
    assert_eq!(f.sigma, 0.03);
    assert!(decode(&f.payload).is_ok());
}

#[tokio::test]
async fn config_toggles_foveation_at_the_next_tick() {
    let url = small_server().await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    let on = echo_of(&mut client, Gaze { timestamp: 1, x: 0.5, y: 0.5 }).await;
    assert_eq!(on.strength, 50.0);
    assert!(decode(&on.payload).unwrap().qp_map.deltas().iter().any(|&d| d > 0));
    client.send(&Message::Config(Config { strength: 50.0, sigma: 0.03, base_qp: 20, foveation_enabled: false })).await.unwrap();
    let off = echo_of(&mut client, Gaze { timestamp: 2, x: 0.5, y: 0.5 }).await;
    assert_eq!(off.strength, 0.0);
    let d = decode(&off.payload).unwrap();
    assert_eq!(d.base_qp, 20);
    assert!(d.qp_map.deltas().iter().all(|&d| d == 0));
}

#[tokio::test]
async fn reconnect_after_abrupt_disconnect() {
    let url = small_server().await;
    for round in 0..3u64 {
        let mut client = StreamClient::connect(&url).await.unwrap();
        let f = echo_of(&mut client, Gaze { timestamp: 100 + round, x: 0.4, y: 0.4 }).await;
        assert_eq!(f.echoed_gaze_timestamp, 100 + round);
        // Each connection has its own session.
        assert!(f.frame_id < 30, "frame_id {}", f.frame_id);
        drop(client);
    }
}

#[tokio::test]
async fn encode_failure_reports_an_error_notice_and_continues() {
    // Macroblocks must be a multiple of 16, so every encode fails.
    let config = ServerConfig { session: SessionConfig { mb_size: 24, ..Default::default() }, ..Default::default() };
    let url = start(config, Source::pattern(96, 64).unwrap()).await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    let mut notices = 0;
    while notices < 3 {
        match timeout(Duration::from_secs(5), client.recv()).await.unwrap().unwrap() {
            Some(Message::Stats(s)) if s.is_error_notice() => notices += 1,
            Some(Message::Frame(_)) => panic!("frame from a failing encoder"),
            Some(_) => {}
            None => panic!("server closed the connection"),
        }
    }
}

#[tokio::test]
async fn stats_report_the_frame_rate() {
    let url = small_server().await;
    let mut client = StreamClient::connect(&url).await.unwrap();
    client.send(&Message::Gaze(Gaze { timestamp: 1, x: 0.5, y: 0.5 })).await.unwrap();
    let mut seen = Vec::new();
    while seen.len() < 2 {
        if let Some(Message::Stats(s)) = timeout(Duration::from_secs(5), client.recv()).await.unwrap().unwrap() {
            seen.push(s);
        }
    }
    let s = seen[1];
    assert!((s.fps - 30.0).abs() <= 3.0, "{s:?}");
    assert!(s.bitrate_mbps > 0.0);
    assert!(s.last_latency_ms >= 0.0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn small_frames_arrive_within_one_frame_period() {
    let url = small_server().await;
    let report = run_probe(&url, ProbeConfig { duration: Duration::from_secs(3), ..Default::default() }).await.unwrap();
    assert!(report.frames >= 60, "{} frames", report.frames);
    assert_eq!(report.non_monotone, 0);
    assert_eq!(report.mismatched, 0);
    assert_eq!(report.decode_failures, 0);
    let max = report.max().unwrap();
    // Gaze is at most one gaze period old at the tick; encoding is instant.
    assert!(max <= 33.3 + 15.0, "max {max:.1} ms");
    assert!(report.percentile(0.0).unwrap() >= 0.0);
}

#[tokio::test]
async fn image_directory_source_loops() {
    let dir = std::env::temp_dir().join(format!("fovea-stream-src-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    synth::gradient(64, 48).unwrap().save_png(dir.join("a.png")).unwrap();
    synth::moving_pattern(64, 48, 1).unwrap().save_png(dir.join("b.png")).unwrap();
    std::fs::write(dir.join("broken.png"), b"not a png").unwrap();
    let source = Source::image_dir(&dir, Some((96, 64))).unwrap();
    let (a, b, c) = (source.frame(0), source.frame(1), source.frame(2));
    assert_eq!((a.width(), a.height()), (96, 64));
    assert_ne!(a.data(), b.data());
    assert_eq!(a.data(), c.data());
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(Source::image_dir(&dir, None).is_err());
}
