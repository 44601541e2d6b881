//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p linkspy --test acceptance`.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use linkspy::cli::{self, ExperimentSpec, Mode};
use linkspy::config::ExperimentConfig;
use linkspy::covert::{
    build_frame, compute_metrics, decode_bits, encode_text, random_bits, transmit, BitStream, ChannelConfig,
    FrameFormat, FrameScanner, ScanStep,
};
use linkspy::fingerprint::{build_dataset, default_profiles, evaluate, train, FingerprintPlan};
use linkspy::probe::{CalibrationPlan, ProbeAgent};
use linkspy::sim::defaults::*;
use linkspy::sim::{Cycles, LinkId, SimSpec, Simulator, TransferRequest, TransferTag, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENDPOINT_BUDGET: Duration = Duration::from_secs(1);
const BER_LOW: f64 = 0.027;
const BER_HIGH: f64 = 0.037;
const BER_RUNS: u64 = 5;
const BER_BITS: usize = 10_000;
const SYMBOL_SE_BOUND: f64 = 3.0;
const BANDWIDTH_TARGET_KBPS: f64 = 45.5;
const BANDWIDTH_TOL_KBPS: f64 = 0.1;
const FINGERPRINT_MIN_ACCURACY: f64 = 0.95;
const FINGERPRINT_MIN_WINDOWS: usize = 40;
const CODEC_CASES: usize = 1_000;
const CONTENTION_CASES: usize = 100;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("probe latency endpoints", endpoints),
        ("zero-noise message round trip", zero_noise_message),
        ("noisy bit error rate", noisy_ber),
        ("bandwidth at the nominal slot", bandwidth),
        ("seeded determinism", determinism),
        ("exact contention accounting", contention_oracle),
        ("workload fingerprinting", fingerprinting),
        ("codec and preamble scanning", codec_and_scanner),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2}s)", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn endpoints() -> Result<String, String> {
    let t = Instant::now();
    let mut sim = Simulator::new(&SimSpec::default().with_noise(0.0)).map_err(|e| e.to_string())?;
    let agent = ProbeAgent::new(0, 1);
    let idle = agent.issue_probe(&mut sim).map_err(|e| e.to_string())?.latency;

    let at = sim.now() + 100_000;
    sim.schedule_transfer(TransferRequest::new(1, 0, COVERT_PAYLOAD_BYTES, at, TransferTag::CovertSender))
        .map_err(|e| e.to_string())?;
    let busy = agent.issue_probe_at(&mut sim, at).map_err(|e| e.to_string())?.latency;

    let cal = agent
        .calibrate(&mut sim, CalibrationPlan::default())
        .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(idle == 28_356, || format!("idle latency {idle}"))?;
    ensure(busy == 68_368, || format!("busy latency {busy}"))?;
    ensure(cal.mu_idle == 28_356.0 && cal.mu_busy == 68_368.0, || format!("calibrated means {cal:?}"))?;
    ensure(elapsed < ENDPOINT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("idle {idle}, busy {busy}"))
}

fn zero_noise_message() -> Result<String, String> {
    let spec = SimSpec::default().with_noise(0.0);
    let cfg = ChannelConfig::for_spec(&spec, 1);
    let message = "Hello,NVLink!";
    let payload = encode_text(message).map_err(|e| e.to_string())?;
    let tx = transmit(&spec, &cfg, &payload, 4).map_err(|e| e.to_string())?;
    let decoded = tx.decoded.as_ref().map_err(|e| e.to_string())?;
    let text = decode_bits(&decoded.payload).map_err(|e| e.to_string())?;
    ensure(tx.metrics.bit_errors == 0, || format!("{} bit errors", tx.metrics.bit_errors))?;
    ensure(text == message, || format!("decoded {text:?}"))?;
    let expected_start = tx.frame_start_slot as usize;
    ensure(decoded.start == expected_start, || {
        format!("preamble found at slot {}, frame starts at {expected_start}", decoded.start)
    })?;
    Ok(format!("decoded {text:?} with 0 errors, preamble at slot {expected_start}"))
}

fn noisy_ber() -> Result<String, String> {
    let base = SimSpec::default();
    let sigma = base.latency_model.noise_sigma_cycles;
    let threshold = REPLICATION_THRESHOLD_CYCLES;
    let mut cfg = ChannelConfig::for_spec(&base, 1);
    cfg.threshold = threshold;

    let (mut errors, mut bits) = (0usize, 0usize);
    let (mut zeros, mut zero_err, mut ones, mut one_err) = (0usize, 0usize, 0usize, 0usize);
    for run in 0..BER_RUNS {
        let spec = base.clone().with_seed(run);
        let payload = random_bits(BER_BITS, run);
        let tx = transmit(&spec, &cfg, &payload, 4).map_err(|e| e.to_string())?;
        errors += tx.metrics.bit_errors;
        bits += tx.metrics.bits_sent;
        zeros += tx.symbols.zeros;
        zero_err += tx.symbols.zero_errors;
        ones += tx.symbols.ones;
        one_err += tx.symbols.one_errors;
    }
    let ber = errors as f64 / bits as f64;
    let (idle, busy) = cfg.expected_means(&base);
    let p0 = common::q_by_integration((threshold - idle) / sigma);
    let p1 = common::q_by_integration((busy - threshold) / sigma);
    let within = |errs: usize, n: usize, p: f64| {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        ((errs as f64 / n as f64) - p).abs() <= SYMBOL_SE_BOUND * se
    };
    ensure((BER_LOW..=BER_HIGH).contains(&ber), || format!("mean BER {ber:.5}"))?;
    ensure(within(zero_err, zeros, p0), || format!("0->1 rate {zero_err}/{zeros} vs {p0:.5}"))?;
    ensure(within(one_err, ones, p1), || format!("1->0 rate {one_err}/{ones} vs {p1:.5}"))?;
    Ok(format!(
        "BER {:.3}% over {bits} bits; 0->1 {zero_err}/{zeros} (Q {p0:.5}), 1->0 {one_err}/{ones} (Q {p1:.5})",
        ber * 100.0
    ))
}

fn bandwidth() -> Result<String, String> {
    // a faster clock lets a 45.5 kbit/s slot exceed the busy probe latency
    let mut spec = SimSpec::default().with_noise(0.0);
    spec.clock_hz = 3.2e9;
    let slot = (spec.clock_hz / (BANDWIDTH_TARGET_KBPS * 1000.0)).round() as Cycles;
    let mut cfg = ChannelConfig::for_spec(&spec, 1);
    cfg.slot_cycles = slot;
    let payload = random_bits(10_000, 7);
    let tx = transmit(&spec, &cfg, &payload, 4).map_err(|e| e.to_string())?;
    let kbps = tx.metrics.bandwidth_kbps;

    let default_clock = SimSpec::default().clock_hz;
    let nominal_slot = (default_clock / (BANDWIDTH_TARGET_KBPS * 1000.0)).round() as Cycles;
    let bits = random_bits(1_000, 1);
    let formula = compute_metrics(&bits, &bits, nominal_slot * bits.len() as Cycles, default_clock).bandwidth_kbps;

    ensure(tx.metrics.bit_errors == 0, || format!("{} bit errors", tx.metrics.bit_errors))?;
    ensure((kbps - BANDWIDTH_TARGET_KBPS).abs() <= BANDWIDTH_TOL_KBPS, || format!("{kbps:.4} kbps"))?;
    ensure((formula - BANDWIDTH_TARGET_KBPS).abs() <= BANDWIDTH_TOL_KBPS, || format!("formula {formula:.4} kbps"))?;
    Ok(format!("{kbps:.3} kbps end to end at slot {slot}, {formula:.3} kbps at the default clock"))
}

fn run_into(dir: &Path, mode: Mode, config: &str) -> Result<(), String> {
    let config = ExperimentConfig::from_text(config).map_err(|e| e.to_string())?;
    let spec = ExperimentSpec {
        mode,
        config,
        seed: 11,
        output_dir: dir.to_path_buf(),
    };
    cli::run(&spec).map(|_| ()).map_err(|e| e.to_string())
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).map_err(|e| e.to_string())?));
            }
        }
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Result<String, String> {
    let cases = [
        (Mode::Calibrate, "calibration_samples = 50\n"),
        (Mode::CovertSendReceive, "runs = 2\nbits = 600\nnoise_sigma_cycles = 8800\n"),
        (Mode::FingerprintEval, "traces_per_class = 4\nwindows_per_trace = 2\nwindow_samples = 64\n"),
    ];
    let mut total = 0;
    for (mode, config) in cases {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_into(a.path(), mode, config)?;
        run_into(b.path(), mode, config)?;
        let (sa, sb) = (snapshot(a.path())?, snapshot(b.path())?);
        ensure(!sa.is_empty(), || format!("{mode:?} wrote no files"))?;
        ensure(sa == sb, || format!("{mode:?} outputs differ between runs"))?;
        total += sa.len();
    }
    Ok(format!("{total} files byte-identical across repeated runs"))
}

fn contention_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut windows = 0;
    for case in 0..CONTENTION_CASES {
        let mut sim = Simulator::new(&SimSpec::default().with_noise(0.0)).map_err(|e| e.to_string())?;
        let n = rng.random_range(0..=10);
        let mut handles = Vec::new();
        for _ in 0..n {
            let (src, dst) = if rng.random_bool(0.5) { (0, 1) } else { (1, 0) };
            let bytes = rng.random_range(1..=128_000u64);
            let issue = rng.random_range(0..8_000);
            let req = TransferRequest::new(src, dst, bytes, issue, TransferTag::Workload);
            handles.push(sim.schedule_transfer(req).map_err(|e| e.to_string())?);
        }
        let resolved: Vec<_> = handles
            .iter()
            .map(|&h| {
                let t = sim.transfer(h);
                (t.start_cycle, t.end_cycle, t.request.bytes, t.request.tag)
            })
            .collect();
        ensure(resolved.iter().all(|t| t.1 <= 10_000 + 8 * 2_000), || format!("case {case} overran"))?;
        for _ in 0..5 {
            let a = rng.random_range(0..10_000);
            let b = rng.random_range(a + 1..=10_000);
            let got = sim.contending_bytes(LinkId(0), Window::new(a, b), None);
            let want = common::brute_force_contention(&resolved, (a, b));
            ensure(got == want, || format!("case {case} window [{a},{b}): {got:?} vs {want:?}"))?;
            windows += 1;
        }
    }
    Ok(format!("{CONTENTION_CASES} schedules, {windows} windows exact"))
}

fn fingerprinting() -> Result<String, String> {
    let spec = SimSpec::default();
    let plan = FingerprintPlan::new(default_profiles(spec.bytes_per_cycle), 3);
    let data = build_dataset(&spec, &plan).map_err(|e| e.to_string())?;
    let classes = plan.profiles.len();
    let per_class = (data.train.len() + data.test.len()) / classes;
    let model = train(&data.train, plan.k).map_err(|e| e.to_string())?;
    let eval = evaluate(&model, &data.test).map_err(|e| e.to_string())?;
    ensure(classes == 4, || format!("{classes} classes"))?;
    ensure(plan.k == 3, || format!("k = {}", plan.k))?;
    ensure(per_class >= FINGERPRINT_MIN_WINDOWS, || format!("{per_class} windows per class"))?;
    ensure(eval.accuracy >= FINGERPRINT_MIN_ACCURACY, || format!("accuracy {:.3}\n{}", eval.accuracy, eval.to_table()))?;
    ensure(eval.diagonal_dominant(), || format!("confusion not diagonal dominant\n{}", eval.to_table()))?;
    Ok(format!("accuracy {:.3} on {} held-out windows, {per_class} windows per class", eval.accuracy, eval.total()))
}

fn codec_and_scanner() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..CODEC_CASES {
        let len = rng.random_range(0..=64);
        let text: String = (0..len).map(|_| rng.random_range(0x20u8..=0x7e) as char).collect();
        let bits = encode_text(&text).map_err(|e| e.to_string())?;
        let back = decode_bits(&bits).map_err(|e| e.to_string())?;
        ensure(back == text, || format!("case {case}: {text:?} came back as {back:?}"))?;
    }

    let format = FrameFormat::default();
    let payload: BitStream = "0111101111000011110".parse().map_err(|e: linkspy::Error| e.to_string())?;
    let frame = build_frame(&payload, &format).map_err(|e| e.to_string())?;
    let mut line = BitStream::new();
    line.extend([false, false, true, false]);
    let offset = line.len();
    line.extend(frame.iter());
    line.extend([true, true, true, true, true]);
    let mut scanner = FrameScanner::new(format);
    for bit in line.iter() {
        if scanner.push(bit) == ScanStep::Complete {
            break;
        }
    }
    ensure(scanner.start() == Some(offset), || format!("frame start {:?}, expected {offset}", scanner.start()))?;
    ensure(scanner.is_complete(), || "frame never completed".to_string())?;
    let got = scanner.into_payload();
    ensure(got == payload, || format!("payload {got} vs {payload}"))?;
    Ok(format!("{CODEC_CASES} strings round-tripped; payload containing 1111 recovered intact"))
}
