use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{ExperimentSpec, Mode};
use crate::covert::{decode_bits_lossy, encode_text, random_bits, transmit, BitStream, ChannelMetrics, Transmission};
use crate::error::{Error, Result};
use crate::fingerprint::{build_dataset, evaluate, train, write_dataset_csv, Evaluation};
use crate::probe::{Calibration, CalibrationPlan};
use crate::sim::Simulator;
use crate::stats::q_function;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

/// Measures idle/busy probe statistics and writes them as `key = value` lines.
pub fn run_calibrate(spec: &ExperimentSpec) -> Result<(Calibration, String)> {
    let cfg = &spec.config;
    let mut sim = Simulator::new(&cfg.sim.clone().with_seed(spec.seed))?;
    let ch = cfg.channel_config(0);
    let agent = ch.receiver();
    let plan = CalibrationPlan {
        n_idle: cfg.calibration_samples,
        n_busy: cfg.calibration_samples,
        payload_bytes: cfg.payload_bytes,
        threshold_override: cfg.threshold,
    };
    let cal = agent.calibrate(&mut sim, plan)?;
    let mut report = format!("mode = calibrate\nseed = {}\nsamples = {}\n", spec.seed, cfg.calibration_samples);
    report.push_str(&cal.to_report());
    write_text(&spec.output_dir.join("report.txt"), &report)?;
    Ok((cal, report))
}

#[derive(Debug)]
pub struct CovertReport {
    pub runs: Vec<Transmission>,
    pub mean_ber: f64,
    pub mean_kbps: f64,
    pub report: String,
}

impl CovertReport {
    pub fn metrics(&self) -> Vec<ChannelMetrics> {
        self.runs.iter().map(|t| t.metrics).collect()
    }
}

/// Sends the configured payload `runs` times, run `r` seeded with `seed + r`.
pub fn run_covert(spec: &ExperimentSpec) -> Result<CovertReport> {
    spec.validate()?;
    let cfg = &spec.config;
    let message = cfg.message.as_deref().map(encode_text).transpose()?;
    let payload_for = |run: u64| -> BitStream {
        match &message {
            Some(bits) => bits.clone(),
            None => random_bits(cfg.bits.unwrap_or(0), spec.seed.wrapping_add(run)),
        }
    };
    let payload_len = message.as_ref().map_or(cfg.bits.unwrap_or(0), BitStream::len);
    let ch = cfg.channel_config(payload_len);
    ch.validate(&cfg.sim)?;

    let runs = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = spec.seed.wrapping_add(r);
            transmit(&cfg.sim.clone().with_seed(seed), &ch, &payload_for(r), cfg.lead_in_slots)
        })
        .collect::<Result<Vec<_>>>()?;

    let out = &spec.output_dir;
    let mut summary = csv::Writer::from_writer(create(&out.join("covert_summary.csv"))?);
    summary.write_record(["run", "bits", "errors", "ber", "bandwidth_kbps"])?;
    for (r, tx) in runs.iter().enumerate() {
        let m = &tx.metrics;
        summary.write_record([
            r.to_string(),
            m.bits_sent.to_string(),
            m.bit_errors.to_string(),
            format!("{:.6}", m.ber),
            format!("{:.4}", m.bandwidth_kbps),
        ])?;
    }
    let n = runs.len() as f64;
    let mean_ber = runs.iter().map(|t| t.metrics.ber).sum::<f64>() / n;
    let mean_kbps = runs.iter().map(|t| t.metrics.bandwidth_kbps).sum::<f64>() / n;
    summary.write_record([
        "mean".to_string(),
        runs.iter().map(|t| t.metrics.bits_sent).sum::<usize>().to_string(),
        runs.iter().map(|t| t.metrics.bit_errors).sum::<usize>().to_string(),
        format!("{mean_ber:.6}"),
        format!("{mean_kbps:.4}"),
    ])?;
    summary.flush().map_err(|e| Error::io(out.join("covert_summary.csv"), e))?;

    for (r, tx) in runs.iter().enumerate() {
        let path = out.join(format!("slots_run{r}.csv"));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["slot", "latency_cycles", "decoded_bit"])?;
        for o in &tx.observations {
            w.write_record([o.slot.to_string(), o.median_latency().to_string(), u8::from(o.bit).to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let sigma = cfg.sim.latency_model.noise_sigma_cycles;
    let (idle, busy) = ch.expected_means(&cfg.sim);
    let mut report = String::new();
    let _ = writeln!(report, "mode = covert-send-receive");
    let _ = writeln!(report, "seed = {}", spec.seed);
    let _ = writeln!(report, "runs = {}", runs.len());
    let _ = writeln!(report, "slot_cycles = {}", ch.slot_cycles);
    let _ = writeln!(report, "threshold = {}", ch.threshold);
    let _ = writeln!(report, "noise_sigma_cycles = {sigma}");
    if sigma > 0.0 {
        let _ = writeln!(report, "expected_zero_error_rate = {:.6}", q_function((ch.threshold - idle) / sigma));
        let _ = writeln!(report, "expected_one_error_rate = {:.6}", q_function((busy - ch.threshold) / sigma));
    }
    for (r, tx) in runs.iter().enumerate() {
        let s = &tx.symbols;
        let _ = writeln!(
            report,
            "run {r}: bits = {}, errors = {}, ber = {:.6}, kbps = {:.4}, zero_errors = {}/{}, one_errors = {}/{}, synchronized = {}",
            tx.metrics.bits_sent,
            tx.metrics.bit_errors,
            tx.metrics.ber,
            tx.metrics.bandwidth_kbps,
            s.zero_errors,
            s.zeros,
            s.one_errors,
            s.ones,
            tx.synchronized()
        );
        if message.is_some() {
            let text = match &tx.decoded {
                Ok(frame) => decode_bits_lossy(&frame.payload).unwrap_or_else(|e| format!("<{e}>")),
                Err(e) => format!("<{e}>"),
            };
            let _ = writeln!(report, "run {r} decoded: {text}");
        }
    }
    let _ = writeln!(report, "mean_ber = {mean_ber:.6}");
    let _ = writeln!(report, "mean_bandwidth_kbps = {mean_kbps:.4}");
    write_text(&out.join("report.txt"), &report)?;

    Ok(CovertReport {
        runs,
        mean_ber,
        mean_kbps,
        report,
    })
}

#[derive(Debug)]
pub struct FingerprintReport {
    pub train_windows: usize,
    pub test_windows: usize,
    pub evaluation: Option<Evaluation>,
    pub report: String,
}

/// Records labeled traces for each selected profile, writes the datasets and,
/// in evaluation mode, trains and scores the classifier on the holdout.
pub fn run_fingerprint(spec: &ExperimentSpec) -> Result<FingerprintReport> {
    spec.validate()?;
    let cfg = &spec.config;
    let plan = cfg.fingerprint_plan(spec.seed)?;
    let data = build_dataset(&cfg.sim, &plan)?;
    let out = &spec.output_dir;

    for lt in &data.traces {
        let label = lt.trace.label.as_deref().unwrap_or("unlabeled");
        let path = out.join("traces").join(format!("{label}_seed{}.csv", lt.trace.seed));
        let mut w = create(&path)?;
        lt.trace.write_csv(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    for (name, rows) in [("train.csv", &data.train), ("test.csv", &data.test)] {
        let path = out.join(name);
        let mut w = create(&path)?;
        write_dataset_csv(&mut w, rows)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let mut report = String::new();
    let mode = if spec.mode == Mode::FingerprintEval { "fingerprint-eval" } else { "fingerprint-generate" };
    let _ = writeln!(report, "mode = {mode}");
    let _ = writeln!(report, "seed = {}", spec.seed);
    let names: Vec<&str> = plan.profiles.iter().map(|p| p.name.as_str()).collect();
    let _ = writeln!(report, "profiles = {}", names.join(","));
    let _ = writeln!(report, "traces = {}", data.traces.len());
    let _ = writeln!(report, "train_windows = {}", data.train.len());
    let _ = writeln!(report, "test_windows = {}", data.test.len());

    let evaluation = if spec.mode == Mode::FingerprintEval {
        let model = train(&data.train, plan.k)?;
        let ev = evaluate(&model, &data.test)?;
        let mut w = create(&out.join("confusion.csv"))?;
        ev.write_csv(&mut w)?;
        w.flush().map_err(|e| Error::io(out.join("confusion.csv"), e))?;
        write_text(&out.join("confusion.txt"), &ev.to_table())?;
        let _ = writeln!(report, "k = {}", plan.k);
        let _ = writeln!(report, "accuracy = {:.4}", ev.accuracy);
        report.push('\n');
        report.push_str(&ev.to_table());
        Some(ev)
    } else {
        None
    };
    write_text(&out.join("report.txt"), &report)?;

    Ok(FingerprintReport {
        train_windows: data.train.len(),
        test_windows: data.test.len(),
        evaluation,
        report,
    })
}
