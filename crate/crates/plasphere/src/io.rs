//! Export of spectra, scans, field grids and verification reports.
//! Numbers are serialized with 17 significant digits so round-trips are
//! lossless; identical inputs produce byte-identical files.

use crate::design::{check_regime, RegimeVerdict, ScanReport};
use crate::medium::MediumConfig;
use crate::scattering::{FieldGrid, Region};
use crate::spectrum::SpectrumRecord;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// 17-significant-digit decimal form (round-trips f64 exactly).
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

fn fmt_c(z: Complex64) -> String {
    format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp.partial");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

// ---------------------------------------------------------------------------
// Spectrum table
// ---------------------------------------------------------------------------

pub fn spectrum_csv(records: &[SpectrumRecord]) -> String {
    let mut out = String::new();
    out.push_str("n");
    for i in 1..=4 {
        out.push_str(&format!(",re_tau{i},im_tau{i}"));
    }
    for i in 1..=4 {
        out.push_str(&format!(",re_alpha{i},im_alpha{i}"));
    }
    out.push_str(",flag_admissible,flag_defective\n");
    for r in records {
        out.push_str(&r.degree.to_string());
        for p in &r.taus.pairs {
            out.push(',');
            out.push_str(&fmt_c(p.tau));
        }
        for p in &r.taus.pairs {
            out.push(',');
            out.push_str(&fmt_c(p.alpha()));
        }
        out.push_str(&format!(
            ",{},{}\n",
            r.flag_admissible as u8, r.flag_defective as u8
        ));
    }
    out
}

pub fn spectrum_json(records: &[SpectrumRecord]) -> String {
    serde_json::to_string_pretty(records).expect("spectrum records serialize")
}

// ---------------------------------------------------------------------------
// Field grids
// ---------------------------------------------------------------------------

pub fn field_grid_csv(grid: &FieldGrid, include_h: bool) -> String {
    let mut out = String::new();
    out.push_str("x,y,z,region,re_Ex,im_Ex,re_Ey,im_Ey,re_Ez,im_Ez");
    if include_h {
        out.push_str(",re_Hx,im_Hx,re_Hy,im_Hy,re_Hz,im_Hz");
    }
    out.push('\n');
    for s in &grid.samples {
        out.push_str(&format!(
            "{},{},{},{}",
            fmt_f64(s.point[0]),
            fmt_f64(s.point[1]),
            fmt_f64(s.point[2]),
            match s.region {
                Region::Interior => "interior",
                Region::Exterior => "exterior",
            }
        ));
        for c in [s.e.x, s.e.y, s.e.z] {
            out.push(',');
            out.push_str(&fmt_c(c));
        }
        if include_h {
            for c in [s.h.x, s.h.y, s.h.z] {
                out.push(',');
                out.push_str(&fmt_c(c));
            }
        }
        out.push('\n');
    }
    out
}

pub fn field_grid_json(grid: &FieldGrid) -> String {
    serde_json::to_string_pretty(grid).expect("field grid serializes")
}

// ---------------------------------------------------------------------------
// Scan reports
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ScanJsonRow<'a> {
    params: &'a [(crate::design::SweepParam, f64)],
    n_star: u32,
    objective: f64,
    verdicts: Vec<RegimeVerdict>,
}

fn scan_point_config(
    base: &MediumConfig,
    params: &[(crate::design::SweepParam, f64)],
) -> Option<MediumConfig> {
    let mut eps_c = base.eps_c;
    let mut omega = base.omega;
    for (p, v) in params {
        match p {
            crate::design::SweepParam::ReEpsC => eps_c = Complex64::new(*v, eps_c.im),
            crate::design::SweepParam::Omega => omega = *v,
        }
    }
    MediumConfig::new(base.radius, base.eps_m, base.mu_m, eps_c, base.mu_c, omega).ok()
}

pub fn scan_csv(report: &ScanReport, base: &MediumConfig, theta_big: f64) -> String {
    let mut out = String::new();
    let param_names: Vec<String> = report
        .ranked
        .first()
        .map(|p| {
            p.params
                .iter()
                .map(|(k, _)| format!("{k:?}").to_lowercase())
                .collect()
        })
        .unwrap_or_default();
    for name in &param_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("n_star,objective");
    let verdict_names = [
        "resonance_cf1",
        "resonance_cf2",
        "resonance_cf3",
        "resonance_cf4",
        "cloak_re01",
        "cloak_re02",
        "cloak_re03",
        "cloak_re04",
        "cloak_cc1",
    ];
    for v in verdict_names {
        out.push(',');
        out.push_str(v);
    }
    out.push('\n');
    for p in &report.ranked {
        for (_, v) in &p.params {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        out.push_str(&format!("{},{}", p.n_star, fmt_f64(p.objective)));
        if let Some(cfg) = scan_point_config(base, &p.params) {
            for v in check_regime(&cfg, theta_big) {
                out.push(',');
                out.push_str(if v.satisfied { "1" } else { "0" });
            }
        } else {
            for _ in verdict_names {
                out.push_str(",");
            }
        }
        out.push('\n');
    }
    out
}

pub fn scan_json(report: &ScanReport, base: &MediumConfig, theta_big: f64) -> String {
    let rows: Vec<ScanJsonRow> = report
        .ranked
        .iter()
        .map(|p| ScanJsonRow {
            params: &p.params,
            n_star: p.n_star,
            objective: p.objective,
            verdicts: scan_point_config(base, &p.params)
                .map(|cfg| check_regime(&cfg, theta_big))
                .unwrap_or_default(),
        })
        .collect();
    #[derive(Serialize)]
    struct Doc<'a> {
        ranked: Vec<ScanJsonRow<'a>>,
        skipped: &'a Vec<Vec<(crate::design::SweepParam, f64)>>,
    }
    serde_json::to_string_pretty(&Doc {
        ranked: rows,
        skipped: &report.skipped,
    })
    .expect("scan report serializes")
}

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub identity: String,
    pub degree: u32,
    pub k: Complex64,
    pub radius: f64,
    pub oracle_value: Complex64,
    pub closed_form: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerifyCheck {
    pub fn new(
        identity: impl Into<String>,
        degree: u32,
        k: Complex64,
        radius: f64,
        oracle_value: Complex64,
        closed_form: Complex64,
        tolerance: f64,
    ) -> Self {
        let abs_err = (oracle_value - closed_form).norm();
        let rel_err = abs_err / closed_form.norm().max(1.0);
        Self {
            identity: identity.into(),
            degree,
            k,
            radius,
            oracle_value,
            closed_form,
            abs_err,
            rel_err,
            tolerance,
            pass: rel_err <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: String,
    pub seed: u64,
    pub checks: Vec<VerifyCheck>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn summarize(level: &str, seed: u64, checks: Vec<VerifyCheck>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let failed = checks.len() - passed;
        Self {
            level: level.to_string(),
            seed,
            checks,
            passed,
            failed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verify report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectrum_table;

    #[test]
    fn f64_formatting_round_trips() {
        for &x in &[
            std::f64::consts::PI,
            -1.04018e-2,
            1.7976931348623157e308,
            5e-324,
            0.1 + 0.2,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn spectrum_csv_has_expected_shape() {
        let cfg = MediumConfig::vacuum_background(
            1.0,
            Complex64::new(-2.0, 1e-4),
            Complex64::new(1.0, 0.0),
            2.0,
        )
        .unwrap();
        let records = spectrum_table(&cfg, 3).unwrap();
        let csv = spectrum_csv(&records);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("n,re_tau1,im_tau1"));
        assert!(header.ends_with("flag_admissible,flag_defective"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn spectrum_json_round_trips_values() {
        let cfg = MediumConfig::vacuum_background(
            1.0,
            Complex64::new(-2.0, 1e-4),
            Complex64::new(1.0, 0.0),
            2.0,
        )
        .unwrap();
        let records = spectrum_table(&cfg, 4).unwrap();
        let json = spectrum_json(&records);
        let back: Vec<SpectrumRecord> = serde_json::from_str(&json).unwrap();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.degree, b.degree);
            assert_eq!(a.taus.pairs[0].tau, b.taus.pairs[0].tau);
            assert_eq!(a.lambda_c, b.lambda_c);
            assert_eq!(a.ml_m.l2, b.ml_m.l2);
        }
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert!(!dir.path().join("out.tmp.partial").exists());
    }
}
