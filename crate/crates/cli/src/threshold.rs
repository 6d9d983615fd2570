use sparse_oracle::model::{AsymptoticParams, EffectPrior, TwoGroupsModel};
use sparse_oracle::oracle::{oracle_thresholds_asymptotic, oracle_thresholds_exact};
use sparse_oracle::rules::{bfdr_threshold, bfdr_threshold_asymptotic, bonferroni_cutoff, gw_threshold};
use sparse_oracle::Error;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Rule {
    Oracle,
    Bfdr,
    Gw,
    Bonferroni,
}

impl Rule {
    fn name(self) -> &'static str {
        match self {
            Rule::Oracle => "oracle",
            Rule::Bfdr => "bfdr",
            Rule::Gw => "gw",
            Rule::Bonferroni => "bonferroni",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    pub rule: Rule,
    /// Nominal level for bfdr, gw and bonferroni.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Prior probability of a signal.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    /// Variance of the normal effect prior. Ignored with --prior.
    #[arg(long, default_value_t = 0.9)]
    pub tau2: f64,
    /// Prior as a key=value file (kind=normal|two_point|grid).
    #[arg(long, value_name = "PATH")]
    pub prior: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Observations per mean.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    #[arg(long = "delta-a", default_value_t = 1.0)]
    pub delta_a: f64,
    /// Number of tests for bonferroni.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Limit of the BFDR level used by the asymptotic bfdr cutoff.
    #[arg(long = "alpha-inf", default_value_t = 0.0)]
    pub alpha_inf: f64,
}

fn model(args: &ThresholdArgs) -> Result<TwoGroupsModel, Error> {
    let prior = match &args.prior {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read prior file {}: {e}", path.display())))?;
            EffectPrior::from_kv(&text)?
        }
        None => EffectPrior::normal(args.tau2)?,
    };
    TwoGroupsModel::new(args.p, args.sigma, args.n, prior, args.delta0, args.delta_a)
}

/// `C` evaluated at the model itself, `2 log(delta f) / n` floored at 0.
fn plug_in_params(model: &TwoGroupsModel) -> Result<AsymptoticParams, Error> {
    let c = (2.0 * (model.delta() * model.f()).ln() / model.n()).max(0.0);
    AsymptoticParams::new(c, model)
}

fn pair_line(label: &str, a: f64, b: f64, scale: f64) -> String {
    format!("{label}: a = {a:.10}, b = {b:.10} (z scale: {:.10}, {:.10})\n", a / scale, b / scale)
}

fn cutoff_line(label: &str, c: f64, scale: f64) -> String {
    format!("{label}: |z| >= {c:.10} (xbar scale: {:.10})\n", c * scale)
}

pub fn run(args: &ThresholdArgs) -> Result<String, Error> {
    let mut out = format!("rule: {}\n", args.rule.name());
    if args.rule == Rule::Bonferroni {
        if !(args.sigma > 0.0) || args.n == 0 {
            return Err(Error::InvalidInput(format!("need sigma > 0 and n >= 1, got {} and {}", args.sigma, args.n)));
        }
        let c = bonferroni_cutoff(args.m, args.alpha)?;
        let scale = args.sigma / (args.n as f64).sqrt();
        out.push_str(&cutoff_line("exact", c, scale));
        return Ok(out);
    }
    let model = model(args)?;
    let scale = model.mean_sd();
    match args.rule {
        Rule::Oracle => {
            let thr = oracle_thresholds_exact(&model)?;
            out.push_str(&pair_line("exact", thr.a, thr.b, scale));
            match plug_in_params(&model).and_then(|params| oracle_thresholds_asymptotic(&model, &params)) {
                Ok(asym) => out.push_str(&pair_line("asymptotic", asym.a, asym.b, scale)),
                Err(e) => {
                    let _ = writeln!(out, "asymptotic: undefined ({e})");
                }
            }
        }
        Rule::Bfdr => {
            let c = bfdr_threshold(&model, args.alpha)?;
            out.push_str(&cutoff_line("exact", c, scale));
            match plug_in_params(&model)
                .and_then(|params| bfdr_threshold_asymptotic(&model, &params, args.alpha, args.alpha_inf))
            {
                Ok(c) => out.push_str(&cutoff_line("asymptotic", c, scale)),
                Err(e) => {
                    let _ = writeln!(out, "asymptotic: undefined ({e})");
                }
            }
        }
        Rule::Gw => out.push_str(&cutoff_line("exact", gw_threshold(&model, args.alpha)?, scale)),
        Rule::Bonferroni => unreachable!(),
    }
    Ok(out)
}
