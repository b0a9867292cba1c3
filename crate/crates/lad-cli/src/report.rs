//! Report document and serialization with 17-significant-digit floats.
//!
//! JSON is emitted through a custom formatter so that every float carries
//! 17 significant digits (`{:.16e}`), making reruns byte-identical and the
//! values exactly recoverable. Non-finite values serialize as `null`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use lad_core::data::format_f64;
use lad_core::selector::SlcReport;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize)]
pub struct ConfigEcho {
    pub loss: String,
    pub meta: String,
    pub bias_correct: bool,
    pub variant: String,
    pub cov: String,
    pub draws: usize,
    pub seed: u64,
    pub alpha_exp: f64,
    pub omega: f64,
}

#[derive(Serialize)]
pub struct PerModel {
    pub name: String,
    pub complexity: f64,
    pub dims: u32,
    pub p_hat: f64,
    pub r_hat: Option<f64>,
    pub w_hat: f64,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub mu_q025: f64,
    pub mu_q50: f64,
    pub mu_q975: f64,
    pub gap_mean: f64,
}

/// One analysis result at a single tolerance.
#[derive(Serialize)]
pub struct CliReport {
    pub schema_version: String,
    pub config: ConfigEcho,
    pub delta: f64,
    pub tau: Option<f64>,
    pub noise_mu: Option<f64>,
    pub per_model: Vec<PerModel>,
    pub selected: Vec<String>,
    pub warnings: Vec<String>,
}

impl CliReport {
    pub fn from_slc(
        report: &SlcReport,
        dims: &[u32],
        config: ConfigEcho,
        noise_mu: Option<f64>,
    ) -> CliReport {
        let per_model = report
            .per_model
            .iter()
            .enumerate()
            .map(|(j, m)| PerModel {
                name: m.name.clone(),
                complexity: m.complexity,
                dims: dims[j],
                p_hat: m.p_hat,
                r_hat: m.r_hat,
                w_hat: m.w_hat,
                mu_mean: report.mu_summary[j].mean,
                mu_sd: report.mu_summary[j].sd,
                mu_q025: report.mu_summary[j].q025,
                mu_q50: report.mu_summary[j].q50,
                mu_q975: report.mu_summary[j].q975,
                gap_mean: report.gap_summary[j].mean,
            })
            .collect();
        let selected = report
            .selected
            .iter()
            .map(|&k| report.per_model[k].name.clone())
            .collect();
        CliReport {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            delta: report.delta,
            tau: report.tau,
            noise_mu,
            per_model,
            selected,
            warnings: report.warnings.clone(),
        }
    }
}

/// Compact JSON formatter printing every f64 with 17 significant digits
/// (non-finite values become `null`).
struct SigDigitFormatter;

impl Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serialize any report value to a JSON string (trailing newline included).
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Flat CSV rendering of a batch of reports: one row per (report, model).
pub fn reports_to_csv(reports: &[CliReport]) -> String {
    let mut out = String::from(
        "delta,tau,name,complexity,dims,p_hat,r_hat,w_hat,mu_mean,mu_sd,mu_q025,mu_q50,mu_q975,gap_mean,selected\n",
    );
    for r in reports {
        for m in &r.per_model {
            let selected = r.selected.contains(&m.name) as u8;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                format_f64(r.delta),
                opt_f64(r.tau),
                m.name,
                format_f64(m.complexity),
                m.dims,
                format_f64(m.p_hat),
                opt_f64(m.r_hat),
                format_f64(m.w_hat),
                format_f64(m.mu_mean),
                format_f64(m.mu_sd),
                format_f64(m.mu_q025),
                format_f64(m.mu_q50),
                format_f64(m.mu_q975),
                format_f64(m.gap_mean),
                selected,
            ));
        }
    }
    out
}
