//! Offline surface-EMG analysis: Butterworth band-pass, full-wave
//! rectification, per-cycle means and the with/without-exosuit comparison.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate assumed when a recording does not state one.
pub const DEFAULT_FS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    WithExosuit,
    WithoutExosuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmgTrace {
    /// Hz
    pub fs: f64,
    /// mV
    pub samples: Vec<f64>,
    pub condition: Condition,
    /// Half-open `[start, end)` sample ranges.
    pub cycle_marks: Vec<(usize, usize)>,
}

impl EmgTrace {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 800.0 && self.fs.is_finite()) {
            return Err(Error::InvalidBand(format!(
                "sample rate {} Hz is too low for a 400 Hz band edge (needs > 800 Hz)",
                self.fs
            )));
        }
        let mut prev_end = 0;
        for &(start, end) in &self.cycle_marks {
            if start >= end || start < prev_end || end > self.samples.len() {
                return Err(Error::domain(format!(
                    "cycle [{start}, {end}) is empty, overlapping or outside {} samples",
                    self.samples.len()
                )));
            }
            prev_end = end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    /// Order of the low-pass prototype; the band-pass has twice as many poles.
    pub order: usize,
    pub low_cut: f64,
    pub high_cut: f64,
    /// Run the filter forward and backward. Doubles the effective order.
    #[serde(default)]
    pub zero_phase: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            order: 4,
            low_cut: 10.0,
            high_cut: 400.0,
            zero_phase: false,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidBand("filter order must be at least 1".into()));
        }
        if !(self.low_cut > 0.0 && self.low_cut < self.high_cut && self.high_cut < fs / 2.0) {
            return Err(Error::InvalidBand(format!(
                "need 0 < {} < {} < fs/2 = {}",
                self.low_cut,
                self.high_cut,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Second-order section with `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }

    fn poles(&self) -> [Complex64; 2] {
        // z^2 + a1 z + a2 = 0
        let disc = Complex64::new(self.a[1] * self.a[1] - 4.0 * self.a[2], 0.0).sqrt();
        [(-self.a[1] + disc) / 2.0, (-self.a[1] - disc) / 2.0]
    }
}

/// Cascade of biquads with an overall gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub gain: f64,
    pub fs: f64,
}

impl SosFilter {
    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |h, s| h * s.response(z_inv))
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// Causal single pass, direct form II transposed.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = input.iter().map(|x| x * self.gain).collect();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let y = s.b[0] * *x + z1;
                z1 = s.b[1] * *x - s.a[1] * y + z2;
                z2 = s.b[2] * *x - s.a[2] * y;
                *x = y;
            }
        }
        out
    }

    pub fn apply_zero_phase(&self, input: &[f64]) -> Vec<f64> {
        let mut y = self.apply(input);
        y.reverse();
        let mut y = self.apply(&y);
        y.reverse();
        y
    }
}

/// Digital Butterworth band-pass: analog prototype, low-pass to band-pass
/// transform around prewarped edges, then the bilinear transform.
pub fn design_bandpass(spec: &FilterSpec, fs: f64) -> Result<SosFilter> {
    spec.validate(fs)?;
    let n = spec.order;
    let k = 2.0 * fs;
    let w_lo = k * (PI * spec.low_cut / fs).tan();
    let w_hi = k * (PI * spec.high_cut / fs).tan();
    let w0_sq = w_lo * w_hi;
    let bw = w_hi - w_lo;

    let mut complex_poles = Vec::new();
    let mut real_poles = Vec::new();
    for i in 1..=n {
        let proto = Complex64::from_polar(1.0, PI * (2 * i + n - 1) as f64 / (2 * n) as f64);
        let pb = proto * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            let z = (k + s) / (k - s);
            if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
                real_poles.push(z.re);
            } else if z.im > 0.0 {
                complex_poles.push(z);
            }
        }
    }
    real_poles.sort_by(f64::total_cmp);

    // Each section takes one zero at z = 1 and one at z = -1.
    let numerator = [1.0, 0.0, -1.0];
    let mut sections: Vec<Biquad> = complex_poles
        .iter()
        .map(|z| Biquad {
            b: numerator,
            a: [1.0, -2.0 * z.re, z.norm_sqr()],
        })
        .collect();
    for pair in real_poles.chunks(2) {
        let (p, q) = (pair[0], pair[1]);
        sections.push(Biquad {
            b: numerator,
            a: [1.0, -(p + q), p * q],
        });
    }
    debug_assert_eq!(sections.len(), n);

    let mut filter = SosFilter { sections, gain: 1.0, fs };
    let f_center = fs / PI * (w0_sq.sqrt() / k).atan();
    filter.gain = 1.0 / filter.magnitude(f_center);
    Ok(filter)
}

/// Band-pass filter a trace, keeping its length, rate and cycle marks.
pub fn filter_trace(trace: &EmgTrace, spec: &FilterSpec) -> Result<EmgTrace> {
    let filter = design_bandpass(spec, trace.fs)?;
    let samples = if spec.zero_phase {
        filter.apply_zero_phase(&trace.samples)
    } else {
        filter.apply(&trace.samples)
    };
    Ok(EmgTrace {
        samples,
        ..trace.clone()
    })
}

pub fn rectify(trace: &EmgTrace) -> EmgTrace {
    EmgTrace {
        samples: trace.samples.iter().map(|x| x.abs()).collect(),
        ..trace.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleMeans {
    pub per_cycle: Vec<f64>,
    /// Mean of the per-cycle means.
    pub grand_mean: f64,
}

/// Mean sample value inside each marked cycle. Expects an already filtered
/// and rectified trace.
pub fn cycle_mean(trace: &EmgTrace) -> Result<CycleMeans> {
    if trace.cycle_marks.is_empty() {
        return Err(Error::domain("trace has no marked cycles"));
    }
    trace.validate()?;
    let per_cycle: Vec<f64> = trace
        .cycle_marks
        .iter()
        .map(|&(s, e)| trace.samples[s..e].iter().sum::<f64>() / (e - s) as f64)
        .collect();
    let grand_mean = per_cycle.iter().sum::<f64>() / per_cycle.len() as f64;
    Ok(CycleMeans { per_cycle, grand_mean })
}

/// Filter, rectify and average one recording.
pub fn process(trace: &EmgTrace, spec: &FilterSpec) -> Result<CycleMeans> {
    trace.validate()?;
    cycle_mean(&rectify(&filter_trace(trace, spec)?))
}

/// Reduction of the with-exosuit mean relative to the without-exosuit baseline, percent.
pub fn percent_reduction(mean_without: f64, mean_with: f64) -> Result<f64> {
    if !(mean_without > 0.0 && mean_without.is_finite()) {
        return Err(Error::domain(format!("baseline mean must be positive, got {mean_without}")));
    }
    Ok(100.0 * (mean_without - mean_with) / mean_without)
}

pub fn average_reduction(per_subject: &[f64]) -> Result<f64> {
    if per_subject.is_empty() {
        return Err(Error::domain("no subjects to average"));
    }
    Ok(per_subject.iter().sum::<f64>() / per_subject.len() as f64)
}

/// One respondent's scores on the eight satisfaction dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestScores(pub [u8; 8]);

impl QuestScores {
    pub const DIMENSIONS: [&'static str; 8] = [
        "dimensions",
        "weight",
        "adjustments",
        "safety",
        "durability",
        "simplicity of use",
        "comfort",
        "effectiveness",
    ];
}

/// Mean over every dimension of every respondent.
pub fn quest_total(scores: &[QuestScores]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::domain("no questionnaire respondents"));
    }
    let mut sum = 0u32;
    for (r, sheet) in scores.iter().enumerate() {
        for (dim, &s) in QuestScores::DIMENSIONS.iter().zip(&sheet.0) {
            if !(1..=5).contains(&s) {
                return Err(Error::OutOfRange(format!(
                    "respondent {} scored {dim} as {s}; scores run 1 to 5",
                    r + 1
                )));
            }
            sum += u32::from(s);
        }
    }
    Ok(f64::from(sum) / (8 * scores.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectReport {
    pub subject: String,
    pub mean_without_mv: f64,
    pub mean_with_mv: f64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmgReport {
    pub per_subject: Vec<SubjectReport>,
    pub average_pct: f64,
    pub quest_total: Option<f64>,
}

pub fn analyze_subject(name: &str, without: &EmgTrace, with: &EmgTrace, spec: &FilterSpec) -> Result<SubjectReport> {
    if without.condition != Condition::WithoutExosuit || with.condition != Condition::WithExosuit {
        return Err(Error::domain(format!(
            "subject {name}: expected a without-exosuit and a with-exosuit recording"
        )));
    }
    let mean_without = process(without, spec)?.grand_mean;
    let mean_with = process(with, spec)?.grand_mean;
    Ok(SubjectReport {
        subject: name.to_string(),
        mean_without_mv: mean_without,
        mean_with_mv: mean_with,
        reduction_pct: percent_reduction(mean_without, mean_with)?,
    })
}

pub fn build_report(per_subject: Vec<SubjectReport>, quest: Option<&[QuestScores]>) -> Result<EmgReport> {
    let reductions: Vec<f64> = per_subject.iter().map(|s| s.reduction_pct).collect();
    Ok(EmgReport {
        average_pct: average_reduction(&reductions)?,
        quest_total: quest.map(quest_total).transpose()?,
        per_subject,
    })
}

impl EmgReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.per_subject {
            let _ = writeln!(
                s,
                "{:<12} without {:.4} mV  with {:.4} mV  reduction {:6.2}%",
                r.subject, r.mean_without_mv, r.mean_with_mv, r.reduction_pct
            );
        }
        let _ = writeln!(s, "average reduction {:.2}%", self.average_pct);
        if let Some(q) = self.quest_total {
            let _ = writeln!(s, "QUEST total {q:.2}");
        }
        s
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    fs_hz: Option<f64>,
    condition: Condition,
    cycles: Vec<[f64; 2]>,
}

/// Path of the JSON sidecar describing `csv_path`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Loads `t_s,emg_mv` samples and their sidecar `{fs_hz, condition, cycles}`.
/// Cycle bounds are in seconds on the file's time axis.
pub fn read_emg(csv_path: &Path) -> Result<EmgTrace> {
    let side_path = sidecar_path(csv_path);
    let side_file = File::open(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let sidecar: Sidecar = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_reader(side_file))
        .map_err(|e| Error::Config {
            path: side_path.clone(),
            message: e.to_string(),
        })?;
    let fs = sidecar.fs_hz.unwrap_or_else(|| {
        log::warn!("{}: no fs_hz given, assuming {DEFAULT_FS} Hz", side_path.display());
        DEFAULT_FS
    });

    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let malformed = |row: usize, message: String| Error::Malformed {
        path: csv_path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_s", "emg_mv"] {
        return Err(malformed(1, "expected header t_s,emg_mv".into()));
    }
    let mut t0 = None;
    let mut samples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(i + 2, e.to_string()))?;
        let num = |k: usize| {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| malformed(i + 2, format!("column {} is not a finite number", k + 1)))
        };
        t0.get_or_insert(num(0)?);
        samples.push(num(1)?);
    }
    let t0 = t0.unwrap_or(0.0);
    let index = |t: f64| ((t - t0) * fs).round().max(0.0) as usize;
    let trace = EmgTrace {
        fs,
        samples,
        condition: sidecar.condition,
        cycle_marks: sidecar.cycles.iter().map(|&[s, e]| (index(s), index(e))).collect(),
    };
    trace.validate().map_err(|e| Error::Config {
        path: side_path,
        message: e.to_string(),
    })?;
    Ok(trace)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestFile {
    respondents: Vec<QuestScores>,
}

/// Reads `{"respondents": [[s1, ..., s8], ...]}`.
pub fn read_quest(path: &Path) -> Result<Vec<QuestScores>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed: QuestFile = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_reader(file))
        .map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    Ok(parsed.respondents)
}
