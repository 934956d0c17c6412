//! Report tables, provenance records, and the event-study figure.

use std::fmt::Write as _;

use bt_core::{CredibleInterval, EventStudy, PosteriorSummary, PriorSpec};
use serde::Serialize;

use crate::error::CliError;

pub const POSTERIOR_HEADER: [&str; 7] = [
    "period",
    "ols_estimate",
    "ols_lo",
    "ols_hi",
    "bayes_mean",
    "bayes_lo",
    "bayes_hi",
];

/// Where an output came from. Contains no timestamps or host details so that reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: &'static str, input_sha256: String) -> Self {
        Provenance {
            tool: "bt",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input_sha256,
            config_sha256: None,
            prior: None,
            level: None,
            seed: None,
        }
    }

    /// Comment lines placed ahead of every CSV header.
    pub fn csv_preamble(&self) -> String {
        let mut s = format!("# input_sha256={}\n", self.input_sha256);
        if let Some(h) = &self.config_sha256 {
            let _ = writeln!(s, "# config_sha256={h}");
        }
        s
    }
}

fn to_csv<I, R>(preamble: &str, header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut buf = preamble.as_bytes().to_vec();
    let mut w = csv::Writer::from_writer(&mut buf);
    let fail = |e: csv::Error| CliError::Io(format!("writing CSV: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("writing CSV: {e}")))?;
    drop(w);
    Ok(buf)
}

/// One row per post period: OLS estimate and interval next to the posterior mean and set.
pub fn posterior_csv(
    prov: &Provenance,
    es: &EventStudy,
    ols: &[CredibleInterval],
    ps: &PosteriorSummary,
) -> Result<Vec<u8>, CliError> {
    let rows = (0..es.t_post()).map(|t| {
        vec![
            es.post_periods()[t].to_string(),
            es.beta_post()[t].to_string(),
            ols[t].lower.to_string(),
            ols[t].upper.to_string(),
            ps.tau_mean[t].to_string(),
            ps.intervals[t].lower.to_string(),
            ps.intervals[t].upper.to_string(),
        ]
    });
    to_csv(&prov.csv_preamble(), &POSTERIOR_HEADER, rows)
}

pub fn coverage_csv(prov: &Provenance, report: &bt_core::CoverageReport) -> Result<Vec<u8>, CliError> {
    let header: Vec<&str> = bt_core::CoverageReport::CSV_HEADER.split(',').collect();
    let rows = (0..report.periods.len()).map(|t| {
        vec![
            report.periods[t].to_string(),
            report.method.name().to_string(),
            report.level.to_string(),
            report.coverage[t].to_string(),
            report.mean_length[t].to_string(),
            report.bias[t].to_string(),
            report.se[t].to_string(),
        ]
    });
    to_csv(&prov.csv_preamble(), &header, rows)
}

pub fn consistency_csv(prov: &Provenance, table: &[bt_core::simulate::ConsistencyRow]) -> Result<Vec<u8>, CliError> {
    let header = [
        "t_pre",
        "n_reps",
        "median_abs_mu_error",
        "median_abs_sigma2_error",
        "boundary_fraction",
    ];
    let rows = table.iter().map(|r| {
        vec![
            r.t_pre.to_string(),
            r.n_reps.to_string(),
            r.median_abs_mu_error.to_string(),
            r.median_abs_sigma2_error.to_string(),
            r.boundary_fraction.to_string(),
        ]
    });
    to_csv(&prov.csv_preamble(), &header, rows)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(format!("writing JSON: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Static event-study figure: OLS points with confidence whiskers over all periods, and
/// posterior means with credible whiskers over post periods.
pub fn event_study_svg(es: &EventStudy, ols_pre: &[(f64, f64)], ols: &[CredibleInterval], ps: &PosteriorSummary) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;

    let mut periods: Vec<i64> = es.pre_periods().to_vec();
    periods.push(0);
    periods.extend(es.post_periods());
    let (first, last) = (periods[0] as f64, *periods.last().unwrap() as f64);

    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for &(a, b) in ols_pre {
        lo = lo.min(a);
        hi = hi.max(b);
    }
    for ci in ols.iter().chain(&ps.intervals) {
        lo = lo.min(ci.lower);
        hi = hi.max(ci.upper);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let span = hi - lo;
    let (lo, hi) = (lo - 0.05 * span, hi + 0.05 * span);

    let x = |p: f64| PAD + (p - first + 0.5) / (last - first + 1.0) * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        y(0.0),
        W - PAD,
        y(0.0)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{PAD}" x2="{:.2}" y2="{:.2}" stroke="#999"/>"##,
        x(0.0),
        x(0.0),
        H - PAD
    );
    for &p in &periods {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{p}</text>"#,
            x(p as f64),
            H - PAD + 16.0
        );
    }
    for v in [lo, 0.5 * (lo + hi), hi] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            PAD - 4.0,
            y(v) + 4.0
        );
    }

    let point = |s: &mut String, p: f64, est: f64, a: f64, b: f64, color: &str| {
        let cx = x(p);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
            y(a),
            y(b)
        );
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, y(est));
    };
    let offset = 0.12;
    for (t, &(a, b)) in ols_pre.iter().enumerate() {
        point(&mut s, es.pre_periods()[t] as f64, es.beta_pre()[t], a, b, "#555");
    }
    point(&mut s, 0.0, 0.0, 0.0, 0.0, "#555");
    for t in 0..es.t_post() {
        let p = es.post_periods()[t] as f64;
        point(&mut s, p - offset, es.beta_post()[t], ols[t].lower, ols[t].upper, "#555");
        point(
            &mut s,
            p + offset,
            ps.tau_mean[t],
            ps.intervals[t].lower,
            ps.intervals[t].upper,
            "#c0392b",
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{PAD}" y="20" fill="#555">● OLS estimate and CI</text><text x="{:.2}" y="20" fill="#c0392b">● posterior mean and credible set</text>"##,
        PAD + 160.0
    );
    s.push_str("</svg>\n");
    s
}
