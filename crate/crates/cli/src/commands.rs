use std::io::Write as _;
use std::path::Path;

use bt_core::eb::HyperGridConfig;
use bt_core::normal::two_sided_z;
use bt_core::{
    coverage_experiment, eb_posterior, hierarchical_posterior, mle_consistency_experiment, ols_intervals,
    CredibleInterval, DgpSpec, EventStudy, HyperPriorGrid, Method, PosteriorSummary,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;
use crate::io::{read_config, read_event_study, read_prior, sidecar_path, write_file};
use crate::report::{self, Provenance};
use crate::{Format, InputArgs, OutputArgs};

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Writes the per-period table (or the JSON document) and the optional figure.
fn emit(
    output: &OutputArgs,
    prov: &Provenance,
    es: &EventStudy,
    ols: &[CredibleInterval],
    ps: &PosteriorSummary,
    doc: &serde_json::Value,
) -> Result<(), CliError> {
    let json = report::to_json(doc)?;
    match output.format {
        Format::Json => write_out(output.out.as_deref(), &json)?,
        Format::Csv => {
            write_out(output.out.as_deref(), &report::posterior_csv(prov, es, ols, ps)?)?;
            if let Some(out) = &output.out {
                write_file(&sidecar_path(out), &json)?;
            }
        }
    }
    if let Some(svg) = &output.svg {
        let z = two_sided_z(output.level);
        let pre: Vec<(f64, f64)> = (0..es.t_pre())
            .map(|t| {
                let half = z * es.sigma()[(t, t)].sqrt();
                (es.beta_pre()[t] - half, es.beta_pre()[t] + half)
            })
            .collect();
        write_file(svg, report::event_study_svg(es, &pre, ols, ps).as_bytes())?;
    }
    Ok(())
}

pub fn posterior(input: &InputArgs, prior: &Path, output: &OutputArgs) -> Result<(), CliError> {
    let (es, input_hash) = read_event_study(&input.input, input.cov.as_deref())?;
    let (spec, prior_hash) = read_prior(prior)?;
    let gp = spec.build(es.t_pre(), es.t_post())?;
    let ps = bt_core::posterior(&es, &gp)?.with_credible_sets(output.level)?;
    let ols = ols_intervals(&es, output.level)?;

    let mut prov = Provenance::new("posterior", input_hash);
    prov.config_sha256 = Some(prior_hash);
    prov.prior = Some(spec);
    prov.level = Some(output.level);
    let doc = json!({ "provenance": prov, "summary": ps, "ols": ols });
    emit(output, &prov, &es, &ols, &ps, &doc)
}

pub fn eb_mle(input: &InputArgs, output: &OutputArgs) -> Result<(), CliError> {
    let (es, input_hash) = read_event_study(&input.input, input.cov.as_deref())?;
    let (fit, ps) = eb_posterior(&es, output.level)?;
    let ols = ols_intervals(&es, output.level)?;

    let mut prov = Provenance::new("eb", input_hash);
    prov.prior = Some(bt_core::PriorSpec::RandomWalk {
        mu: fit.mu_hat,
        sigma2: fit.sigma2_hat,
    });
    prov.level = Some(output.level);
    let doc = json!({
        "provenance": prov,
        "fit": fit,
        "fit_line": fit.fit_line(),
        "summary": ps,
        "ols": ols,
    });
    emit(output, &prov, &es, &ols, &ps, &doc)
}

pub fn hierarchical(
    command: &'static str,
    input: &InputArgs,
    hyper: Option<&Path>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let (es, input_hash) = read_event_study(&input.input, input.cov.as_deref())?;
    let mut prov = Provenance::new(command, input_hash);
    let grid = match hyper {
        Some(path) => {
            let (cfg, hash): (HyperGridConfig, String) = read_config(path)?;
            prov.config_sha256 = Some(hash);
            cfg.to_grid()?
        }
        None => HyperPriorGrid::default_for(&es)?,
    };
    let (hp, ps) = hierarchical_posterior(&es, &grid, output.level)?;
    let ols = ols_intervals(&es, output.level)?;
    prov.level = Some(output.level);
    let doc = json!({
        "provenance": prov,
        "hyper_posterior": hp,
        "summary": ps,
        "ols": ols,
    });
    emit(output, &prov, &es, &ols, &ps, &doc)
}

fn default_level() -> f64 {
    0.95
}

/// Experiment config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
enum SimConfig {
    Coverage {
        dgp: DgpSpec,
        method: Method,
        n_reps: usize,
        #[serde(default = "default_level")]
        level: f64,
    },
    MleConsistency {
        true_mu: f64,
        true_sigma2: f64,
        sigma_scale: f64,
        t_pre_list: Vec<usize>,
        n_reps: usize,
        #[serde(default)]
        seed: u64,
    },
}

pub fn simulate(
    config: &Path,
    out: Option<&Path>,
    seed_override: Option<u64>,
    level_override: Option<f64>,
    format: Format,
) -> Result<(), CliError> {
    let (mut cfg, hash): (SimConfig, String) = read_config(config)?;
    let mut prov = Provenance::new("simulate", hash);
    let (csv, result) = match &mut cfg {
        SimConfig::Coverage {
            dgp,
            method,
            n_reps,
            level,
        } => {
            if let Some(s) = seed_override {
                dgp.seed = s;
            }
            if let Some(l) = level_override {
                *level = l;
            }
            prov.seed = Some(dgp.seed);
            prov.level = Some(*level);
            let rep = coverage_experiment(dgp, *method, *n_reps, *level)?;
            (report::coverage_csv(&prov, &rep)?, json!(rep))
        }
        SimConfig::MleConsistency {
            true_mu,
            true_sigma2,
            sigma_scale,
            t_pre_list,
            n_reps,
            seed,
        } => {
            if level_override.is_some() {
                return Err(CliError::Parse("--level does not apply to mle_consistency".into()));
            }
            if let Some(s) = seed_override {
                *seed = s;
            }
            prov.seed = Some(*seed);
            let rows = mle_consistency_experiment(*true_mu, *true_sigma2, *sigma_scale, t_pre_list, *n_reps, *seed)?;
            (report::consistency_csv(&prov, &rows)?, json!(rows))
        }
    };
    let doc = report::to_json(&json!({ "provenance": prov, "config": cfg, "result": result }))?;
    match format {
        Format::Json => write_out(out, &doc),
        Format::Csv => {
            write_out(out, &csv)?;
            match out {
                Some(path) => write_file(&sidecar_path(path), &doc),
                None => Ok(()),
            }
        }
    }
}

pub fn validate(input: &InputArgs, prior: Option<&Path>) -> Result<(), CliError> {
    let (es, hash) = read_event_study(&input.input, input.cov.as_deref())?;
    let mut lines = format!(
        "ok: event study with {} pre-periods and {} post-periods\ninput_sha256={hash}\n",
        es.t_pre(),
        es.t_post()
    );
    if let Some(path) = prior {
        let (spec, _) = read_prior(path)?;
        let gp = spec.build(es.t_pre(), es.t_post())?;
        lines.push_str(&format!("ok: prior of dimension {}\n", gp.dim()));
    }
    write_out(None, lines.as_bytes())
}
