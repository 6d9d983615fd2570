use super::ScenarioRow;
use sha2::{Digest, Sha256};
use std::io::{self, Write};

pub const CSV_HEADER: &str =
    "scenario_id,method,m,n,p,beta_exponent,sigma_mode,alpha,replicates,seed,MP,FDR,Power,MP_se,FDR_se,Power_se";

/// Provenance block written as `#` lines ahead of the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub sweep: String,
}

impl Manifest {
    pub fn new(seed: u64, canonical_config: &str, sweep: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash(canonical_config),
            sweep: sweep.to_string(),
        }
    }
}

/// Hex SHA-256 of a canonical config rendering.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Ten significant digits, `%g` style: fixed notation for exponents in `[-5, 10)`,
/// otherwise scientific; trailing zeros trimmed. Non-finite values print as `NA`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.9e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_else(|| "NA".into())
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[ScenarioRow], manifest: &Manifest) -> io::Result<()> {
    writeln!(out, "# sparse-oracle version: {}", manifest.version)?;
    writeln!(out, "# seed: {}", manifest.seed)?;
    writeln!(out, "# config sha256: {}", manifest.config_hash)?;
    writeln!(out, "# sweep: {}", manifest.sweep)?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.method.name(),
            r.m_total,
            r.n,
            format_number(r.p),
            r.beta_exponent.map(format_number).unwrap_or_default(),
            r.sigma_mode.name(),
            format_number(r.alpha),
            r.replicates,
            r.seed,
            format_number(s.mp),
            format_number(s.fdr),
            opt(s.power),
            format_number(s.mp_se),
            format_number(s.fdr_se),
            opt(s.power_se),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(0.05), "0.05");
        assert_eq!(format_number(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_number(2.0 / 3.0 * 1e-7), "6.666666667e-8");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(1e12), "1e12");
        assert_eq!(format_number(-0.00390625), "-0.00390625");
        assert_eq!(format_number(f64::NAN), "NA");
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
