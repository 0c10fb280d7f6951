//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p hdemg-cli --test acceptance`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use hdemg::dataio::{align, generate_synthetic, AlignOptions, SynthConfig};
use hdemg::emgproc::{ndv, ndv_compare, preprocess, rms_envelope, sliding_rms};
use hdemg::estimator::{
    infer, postprocess, split_last_trial, train, Activation, ModelWeights, NetworkConfig, TeacherForced, TrainHyper,
};
use hdemg::evalspm::{mpcc, smooth_gaussian_fields, spm_one_sample_t, wfd_frames};
use hdemg::filter::{BandType, SosFilter};
use hdemg::impedance::{
    divider_attenuation, fit_rc, normalize_by_area, rc_impedance, standard_grid, write_impedance_csv, RcModel,
};
use hdemg::kinematics::{finger_marker_base, Finger, HandModel, HandSkeleton, IkaOptions, JointAngles, N_JOINTS};
use hdemg::stats::{mann_whitney_normal_p, mann_whitney_u, paired_t, Alternative};
use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Collects sub-checks of one criterion and prints a single verdict line.
struct Criterion {
    id: u32,
    name: &'static str,
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Self {
        Self { id, name, checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    fn finish(self) {
        let ok = self.checks.iter().all(|c| c.0);
        let detail: Vec<String> = self
            .checks
            .iter()
            .map(|(p, d)| if *p { d.clone() } else { format!("FAILED {d}") })
            .collect();
        let line = format!(
            "[{}] criterion {} ({}): {}",
            if ok { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            detail.join("; ")
        );
        let _ = writeln!(std::io::stderr(), "{line}");
        assert!(ok, "{line}");
    }
}

#[test]
fn criterion_1_kinematics_round_trip() {
    let mut c = Criterion::new(1, "kinematics round trip");
    let skel = HandSkeleton::default();
    let model = HandModel::<f64>::new(&skel).unwrap();
    let rom = skel.range_of_motion();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = IkaOptions::default();
    let n = 10_000;
    let (mut wrist_err, mut thumb_err) = (0.0f64, 0.0f64);
    let mut finger_sum = 0.0;
    let mut failures = 0;
    for _ in 0..n {
        let truth = JointAngles(std::array::from_fn(|i| rng.random_range(rom[i][0]..=rom[i][1])));
        let frame = model.fka(&truth);
        let Ok(r) = model.ika(&frame, &opts) else {
            failures += 1;
            continue;
        };
        for (g, e) in r.angles.wrist().iter().zip(truth.wrist()) {
            wrist_err = wrist_err.max((g - e).abs());
        }
        for (g, e) in r.angles.thumb().iter().zip(truth.thumb()) {
            thumb_err = thumb_err.max((g - e).abs());
        }
        let back = model.fka(&r.angles);
        let mut s = 0.0;
        for f in Finger::ALL {
            let b = finger_marker_base(f);
            for k in b..b + 4 {
                s += back.points[k].distance(frame.points[k]);
            }
        }
        finger_sum += s / 16.0;
    }
    let finger_mean = finger_sum / (n - failures) as f64;
    c.check(failures == 0, format!("{n} poses, {failures} solver failures"));
    c.check(wrist_err <= 1e-6, format!("max wrist error {wrist_err:.2e} rad"));
    c.check(thumb_err <= 1e-6, format!("max thumb error {thumb_err:.2e} rad"));
    c.check(finger_mean < 1.0, format!("mean finger marker error {finger_mean:.4} mm"));
    c.finish();
}

#[test]
fn criterion_2_envelope_pipeline() {
    let mut c = Criterion::new(2, "envelope pipeline");
    let fs = 2048.0;
    let mut worst = 0.0f64;
    // tones whose period is short against the 200-sample window
    for (amp, f) in [(1.0, 128.0), (3.5, 200.0), (0.2, 337.0)] {
        let x = Array2::from_shape_fn((8192, 1), |(i, _)| amp * (std::f64::consts::TAU * f * i as f64 / fs).sin());
        let r = sliding_rms(x.view(), 200, 25).unwrap();
        let target = amp / std::f64::consts::SQRT_2;
        for v in r.iter() {
            worst = worst.max((v - target).abs() / target);
        }
    }
    c.check(worst < 0.01, format!("sinusoid RMS worst relative error {worst:.2e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(300..2000);
        let ch = rng.random_range(1..4);
        let w = rng.random_range(1..=200.min(n));
        let s = rng.random_range(1..=50);
        let x = Array2::from_shape_fn((n, ch), |_| rng.random_range(-1.0..1.0f64));
        let got = sliding_rms(x.view(), w, s).unwrap();
        for k in 0..got.nrows() {
            for j in 0..ch {
                let mut acc = 0.0;
                for i in k * s..k * s + w {
                    acc += x[[i, j]] * x[[i, j]];
                }
                if got[[k, j]] != (acc / w as f64).sqrt() {
                    mismatches += 1;
                }
            }
        }
    }
    c.check(mismatches == 0, format!("naive oracle mismatches on 100 signals: {mismatches}"));

    let skel = HandSkeleton::default();
    let d = generate_synthetic::<f64>(&SynthConfig { seed: 3, duration_s: 32.0, ..Default::default() }, &skel).unwrap();
    let env = preprocess::<f64>(&d.emg, 200, 25, None).unwrap();
    let (mut mean_err, mut std_err) = (0.0f64, 0.0f64);
    let n = env.values.nrows() as f64;
    for col in env.values.columns() {
        let m = col.sum() / n;
        let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
        mean_err = mean_err.max(m.abs());
        std_err = std_err.max((s - 1.0).abs());
    }
    c.check(mean_err < 1e-9, format!("standardized |mean| {mean_err:.1e}"));
    c.check(std_err < 1e-9, format!("standardized |std - 1| {std_err:.1e}"));
    c.finish();
}

/// Tie-free one-sided p by enumerating every assignment of ranks to the first sample.
fn enumerated_p(u_obs: f64, n1: usize, n2: usize) -> f64 {
    let n = n1 + n2;
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let rank_sum: usize = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).sum();
        let u = rank_sum as f64 - (n1 * (n1 + 1)) as f64 / 2.0;
        total += 1;
        if u <= u_obs {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

#[test]
fn criterion_3_statistics_kernel() {
    let mut c = Criterion::new(3, "statistics kernel");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n1 in 1..=8 {
        for n2 in 1..=8 {
            for _ in 0..3 {
                let mut pool: Vec<f64> = (0..n1 + n2).map(|i| i as f64 + rng.random_range(0.0..0.5)).collect();
                for i in (1..pool.len()).rev() {
                    pool.swap(i, rng.random_range(0..=i));
                }
                let r = mann_whitney_u(&pool[..n1], &pool[n1..], Alternative::Less).unwrap();
                worst = worst.max((r.p_value - enumerated_p(r.statistic, n1, n2)).abs());
            }
        }
    }
    c.check(worst <= 0.02, format!("U test vs enumeration, max |dp| {worst:.1e}"));

    let p = mann_whitney_normal_p(1549.0, 192, 72, 0.0, Alternative::Less);
    let ratio = p / 1.43e-22;
    c.check((0.5..=2.0).contains(&ratio), format!("U = 1549 (192 vs 72): p = {p:.3e}"));

    // 29 paired differences built to give t = -1.63 exactly
    let e: Vec<f64> = (0..29).map(|i| (i as f64 * 0.7).sin()).collect();
    let em = e.iter().sum::<f64>() / 29.0;
    let sd = (e.iter().map(|v| (v - em) * (v - em)).sum::<f64>() / 28.0).sqrt();
    let shift = -1.63 * sd / 29f64.sqrt();
    let a: Vec<f64> = e.iter().map(|v| v - em + shift).collect();
    let r = paired_t(&a, &vec![0.0; 29], Alternative::Less).unwrap();
    c.check((r.statistic + 1.63).abs() < 1e-9, format!("paired t = {:.6}", r.statistic));
    c.check((r.p_value - 0.058).abs() <= 0.002, format!("one-tailed p = {:.4}", r.p_value));
    c.finish();
}

/// Amplitude of the `f_hz` component of `y` by least squares on sine and cosine.
fn tone_amplitude(y: &[f64], f_hz: f64, fs: f64, offset: usize) -> f64 {
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let ph = std::f64::consts::TAU * f_hz * (i + offset) as f64 / fs;
        let (s, c) = ph.sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += v * s;
        yc += v * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    a.hypot(b)
}

#[test]
fn criterion_4_filter() {
    let mut c = Criterion::new(4, "low-pass filter");
    let fs = 2048.0 / 25.0;
    let f = SosFilter::<f64>::butterworth(6, 1.0, fs, BandType::Lowpass).unwrap();
    let measure = |tone: f64| {
        let n = (120.0 * fs) as usize;
        let x: Vec<f64> = (0..n).map(|i| (std::f64::consts::TAU * tone * i as f64 / fs).sin()).collect();
        let y = f.filter(&x);
        let skip = n / 2;
        20.0 * tone_amplitude(&y[skip..], tone, fs, skip).log10()
    };
    let at_cut = measure(1.0);
    let decade = measure(10.0);
    c.check((at_cut + 3.01).abs() <= 0.1, format!("gain at cutoff {at_cut:.3} dB"));
    c.check(decade <= -115.0, format!("gain one decade above {decade:.1} dB"));
    c.finish();
}

fn small_batch(cfg: &NetworkConfig, rows: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let e = Array2::from_shape_fn((rows, cfg.n_emg_inputs), |_| rng.random_range(-1.0..1.0));
    let p = Array2::from_shape_fn((rows, cfg.n_joints), |_| rng.random_range(-1.0..1.0));
    let t = Array2::from_shape_fn((rows, cfg.n_joints), |_| rng.random_range(-1.0..1.0));
    (e, p, t)
}

#[test]
fn criterion_5_estimator() {
    let mut c = Criterion::new(5, "estimator");
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut worst = 0.0f64;
    for (k, act) in [Activation::Softplus, Activation::Tanh].into_iter().enumerate() {
        let cfg = NetworkConfig { n_emg_inputs: 4, n_joints: 3, hidden_layers: vec![5, 3], activation: act };
        let m = ModelWeights::<f64>::init(&cfg, 10 + k as u64).unwrap();
        let (e, p, t) = small_batch(&cfg, 7, &mut rng);
        let (_, g) = m.backprop(e.view(), p.view(), t.view()).unwrap();
        let grads: Vec<f64> = g.params().copied().collect();
        let h = 1e-5;
        for (i, &an) in grads.iter().enumerate() {
            let mut plus = m.clone();
            *plus.params_mut().nth(i).unwrap() += h;
            let mut minus = m.clone();
            *minus.params_mut().nth(i).unwrap() -= h;
            let lp = plus.backprop(e.view(), p.view(), t.view()).unwrap().0;
            let lm = minus.backprop(e.view(), p.view(), t.view()).unwrap().0;
            let fd = (lp - lm) / (2.0 * h);
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-3));
        }
    }
    c.check(worst < 1e-4, format!("gradient vs central differences, max rel err {worst:.1e}"));

    let cfg = NetworkConfig { n_emg_inputs: 6, hidden_layers: vec![8], ..Default::default() };
    let m = ModelWeights::<f64>::init(&cfg, 3).unwrap();
    let emg: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let prev: Vec<f64> = (0..N_JOINTS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let base = m.forward(&emg, &prev).unwrap();
    let mut changed = 0;
    for j in 0..N_JOINTS {
        let mut p = prev.clone();
        p[j] += 0.75;
        if m.forward(&emg, &p).unwrap()[j] != base[j] {
            changed += 1;
        }
    }
    c.check(changed == 0, format!("outputs depending on their own previous angle: {changed}"));

    let skel = HandSkeleton::default();
    let d = generate_synthetic::<f64>(&SynthConfig { seed: 1, duration_s: 300.0, ..Default::default() }, &skel).unwrap();
    let ds = align(&d.emg, &d.markers, &d.angles, &AlignOptions::new(200, 25)).unwrap();
    let (tr, te) = split_last_trial(&[ds]).unwrap();
    let data = TeacherForced::from_trials(&[&tr[0]]).unwrap();
    let val = TeacherForced::from_trials(&[&te]).unwrap();
    let hand = HandModel::<f64>::new(&skel).unwrap();
    let rest = hand.rest_pose();
    let actual = postprocess(te.angles_norm.view(), &rest, &hand).unwrap();
    let score = |m: &ModelWeights<f64>| {
        let (y, _) = infer(m, te.envelope.values.view(), &te.angles_norm.row(0).to_vec()).unwrap();
        let r = mpcc(te.angles_norm.view(), y.view()).unwrap().mpcc;
        let md = wfd_frames(&actual, &postprocess(y.view(), &rest, &hand).unwrap()).unwrap().md;
        (r, md)
    };
    let ncfg = NetworkConfig { hidden_layers: vec![32], ..Default::default() };
    let mut model = ModelWeights::<f64>::init(&ncfg, 3).unwrap();
    let (_, md0) = score(&model);
    let hyper = TrainHyper { learning_rate: 1e-3, batch_size: 256, epochs: 20, ..Default::default() };
    let t0 = std::time::Instant::now();
    train(&mut model, &data, Some(&val), &hyper, |_| {}).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let (r, md) = score(&model);
    c.check(r >= 0.6, format!("held-out MPCC {r:.3}"));
    c.check(md <= 0.7 * md0, format!("MD {md0:.1} -> {md:.1} mm"));
    c.check(secs < 1800.0, format!("training {secs:.0} s"));
    c.finish();
}

#[test]
fn criterion_6_spm_null_rate() {
    let mut c = Criterion::new(6, "SPM family-wise error");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sims = 2000;
    let mut hits = 0;
    for _ in 0..sims {
        let d = smooth_gaussian_fields(100, 16, 20.0, &mut rng);
        let r = spm_one_sample_t(d.view(), 0.05).unwrap();
        if r.t_series.iter().any(|&t| t > r.t_crit) {
            hits += 1;
        }
    }
    let fwe = hits as f64 / sims as f64;
    c.check((0.03..=0.08).contains(&fwe), format!("empirical FWE {fwe:.4} over {sims} fields"));
    c.finish();
}

#[test]
fn criterion_7_impedance() {
    let mut c = Criterion::new(7, "impedance");
    let grid = standard_grid::<f64>();
    let cases = [(661e3, 4.8e-9), (100e3, 47e-9), (2e6, 1e-9), (20e3, 100e-9), (50e3, 10e-9), (1e6, 100e-9)];
    let mut worst = 0.0f64;
    for (k, &(r, cap)) in cases.iter().enumerate() {
        let fit = fit_rc(&RcModel::new(r, cap).unwrap().spectrum(k, &grid)).unwrap();
        worst = worst.max((fit.model.r_ohm / r - 1.0).abs()).max((fit.model.c_farad / cap - 1.0).abs());
    }
    c.check(worst < 0.01, format!("fit_rc worst relative error {worst:.1e}"));

    let mut corner = 0.0f64;
    for &(r, cap) in &cases {
        let m = RcModel::new(r, cap).unwrap();
        let fc = m.corner_hz();
        let z = rc_impedance(&m, fc);
        corner = corner
            .max((fc * std::f64::consts::TAU * r * cap - 1.0).abs())
            .max((z.norm() / (r / std::f64::consts::SQRT_2) - 1.0).abs())
            .max((z.arg().to_degrees() + 45.0).abs());
    }
    c.check(corner < 1e-9, format!("corner identities, max deviation {corner:.1e}"));

    let g = divider_attenuation(Complex::new(661e3f64, 0.0), Complex::new(80e6, 0.0)).unwrap();
    c.check((g.gain.norm() - 0.9918).abs() <= 1e-4, format!("divider gain {:.6}", g.gain.norm()));
    let a = normalize_by_area(661e3f64, 0.1257).unwrap();
    c.check((a / 83e3 - 1.0).abs() <= 0.01, format!("area-normalized {a:.1} ohm cm2"));
    c.finish();
}

fn run(bin: &str, dir: &Path, args: &[&str]) {
    let out = Command::new(bin).current_dir(dir).args(args).output().expect("spawn hdemg");
    assert!(
        out.status.success(),
        "hdemg {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn artifacts(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            artifacts(root, &p, acc);
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")) {
            acc.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
        }
    }
}

fn pipeline(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let bin = env!("CARGO_BIN_EXE_hdemg");
    let grid = standard_grid::<f64>();
    let spectra: Vec<_> = (0..8)
        .map(|k| RcModel::new(2.0 * 661e3 * (1.0 + 0.05 * k as f64), 2.4e-9).unwrap().spectrum(k, &grid))
        .collect();
    write_impedance_csv(&dir.join("dry.csv"), &spectra).unwrap();
    std::fs::write(
        dir.join("spm.json"),
        r#"{"nodes": 64, "conditions": [
  {"name": "raw", "subjects": [{"actual": "p1", "predicted": "i1/predicted_raw.csv"}, {"actual": "p2", "predicted": "i2/predicted_raw.csv"}, {"actual": "p3", "predicted": "i3/predicted_raw.csv"}]},
  {"name": "filtered", "subjects": [{"actual": "p1", "predicted": "i1/predicted.csv"}, {"actual": "p2", "predicted": "i2/predicted.csv"}, {"actual": "p3", "predicted": "i3/predicted.csv"}]}
]}"#,
    )
    .unwrap();
    for s in ["1", "2", "3"] {
        run(bin, dir, &["synth", "--out", &format!("s{s}"), "--seed", s, "--duration-s", "32"]);
        run(bin, dir, &["preprocess", "--data", &format!("s{s}"), "--out", &format!("p{s}")]);
    }
    run(
        bin,
        dir,
        &["train", "--data", "p1", "--data", "p2", "--data", "p3", "--out", "m", "--epochs", "2", "--hidden", "8", "--batch-size", "256", "--learning-rate", "1e-3", "--seed", "7"],
    );
    for s in ["1", "2", "3"] {
        run(bin, dir, &["infer", "--model", "m/model.json", "--data", &format!("p{s}"), "--out", &format!("i{s}")]);
    }
    run(bin, dir, &["infer", "--model", "m/model.json", "--data", "m/heldout", "--out", "ih"]);
    run(bin, dir, &["evaluate", "--actual", "m/heldout", "--predicted", "ih/predicted.csv", "--out", "ev"]);
    run(bin, dir, &["spm", "--config", "spm.json", "--out", "spm"]);
    run(bin, dir, &["variance", "--emg", "s1/emg.bin", "--emg", "s2/emg.bin", "--out", "ndv"]);
    run(bin, dir, &["impedance", "--input", "dry=dry.csv", "--compare", "s1/emg.bin", "s2/emg.bin", "--out", "imp"]);
    let mut acc = BTreeMap::new();
    artifacts(dir, dir, &mut acc);
    acc
}

#[test]
fn criterion_8_end_to_end_determinism() {
    let mut c = Criterion::new(8, "end-to-end determinism");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let manifests = first.keys().filter(|p| p.ends_with("manifest.json")).count();
    c.check(first.keys().eq(second.keys()), format!("{} CSV/JSON artifacts in each run", first.len()));
    c.check(manifests == 15, format!("{manifests} run manifests"));
    let differing: Vec<String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    c.check(differing.is_empty(), format!("byte differences: {differing:?}"));
    c.finish();
}

#[test]
fn criterion_9_ndv_sanity() {
    let mut c = Criterion::new(9, "NDV direction");
    // every column follows its own joint; rows along a column share the mixing
    let (rows, cols) = (6, 16);
    let mixing: Vec<Vec<f64>> = (0..rows * cols)
        .map(|ch| {
            let mut w = vec![0.0; N_JOINTS];
            w[3 + ch % cols] = 1.0;
            w
        })
        .collect();
    let cfg = SynthConfig {
        seed: 9,
        duration_s: 32.0,
        n_channels: rows * cols,
        grid: (rows, cols),
        mixing: Some(mixing),
        ..Default::default()
    };
    let d = generate_synthetic::<f64>(&cfg, &HandSkeleton::default()).unwrap();
    let rms = rms_envelope::<f64>(&d.emg, 200, 25).unwrap();
    let res = ndv(rms.view(), rows, cols, Some(d.emg.channel_map.as_slice())).unwrap();
    let cmp = ndv_compare(&res.proximo_distal, &res.circumferential).unwrap();
    let p = cmp.test.p_value;
    c.check(res.excluded.is_empty(), format!("{} channels", rows * cols));
    c.check(p < 0.01, format!("one-tailed U = {}, p = {p:.2e}", cmp.test.statistic));
    c.finish();
}
