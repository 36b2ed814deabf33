//! Versioned CSV and JSON documents written by the commands.
//!
//! CSV files start with a `# schema: <name>/<version>` line, then a header
//! row. Floats are written with 17 significant digits and missing values
//! as empty fields. JSON files hold a [`Document`]; re-serializing a parsed
//! document reproduces the file byte for byte.

use purify_core::dejmps::LadderLevel;
use purify_core::sweep::{AsymptoticRow, FiniteRow, FiniteSettings, RowStatus};
use serde::{Deserialize, Serialize};

pub const LADDER_SCHEMA: &str = "ladder/1";
pub const ASYMPTOTIC_SCHEMA: &str = "asymptotic-sweep/1";
pub const FINITE_SCHEMA: &str = "finite-sweep/1";

pub const LADDER_COLUMNS: [&str; 7] = ["k", "F_k", "t_k", "s_k", "R_k", "mu_k", "sigma2_k"];
pub const ASYMPTOTIC_COLUMNS: [&str; 9] = [
    "param",
    "F_initial",
    "rate_interpolated",
    "pair_i",
    "pair_j",
    "p_i",
    "rate_uninterpolated",
    "rate_ree_bound",
    "status",
];
pub const FINITE_COLUMNS: [&str; 14] = [
    "param",
    "F_initial",
    "N",
    "pair_i",
    "pair_j",
    "p_i",
    "baseline_k",
    "interp_lower",
    "interp_upper",
    "baseline_lower",
    "baseline_upper",
    "rate_interpolated",
    "rate_uninterpolated",
    "status",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<M, R> {
    pub schema: String,
    pub metadata: M,
    pub rows: Vec<R>,
}

/// Where the initial states came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    /// `werner` or a channel family name.
    pub source: String,
    /// Conditional `(w_z, w_x, w_y)` flip weights of the Pauli channel.
    pub pauli_weights: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderMetadata {
    #[serde(flatten)]
    pub source: SourceInfo,
    pub param: f64,
    pub k_max: usize,
    /// Depth at which the ladder stopped early on a degenerate step.
    pub truncated_at: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub k: usize,
    #[serde(rename = "F_k")]
    pub f_k: f64,
    pub t_k: f64,
    pub s_k: f64,
    #[serde(rename = "R_k")]
    pub r_k: f64,
    pub mu_k: f64,
    pub sigma2_k: f64,
}

impl From<&LadderLevel> for LadderRow {
    fn from(l: &LadderLevel) -> Self {
        Self {
            k: l.k,
            f_k: l.fidelity,
            t_k: l.t,
            s_k: l.s,
            r_k: l.rate,
            mu_k: l.mu,
            sigma2_k: l.sigma2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMetadata {
    #[serde(flatten)]
    pub source: SourceInfo,
    pub f_target: f64,
    pub k_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetadata {
    #[serde(flatten)]
    pub source: SourceInfo,
    pub settings: FiniteSettings,
    pub n_grid: Vec<usize>,
}

pub type LadderDocument = Document<LadderMetadata, LadderRow>;
pub type AsymptoticDocument = Document<AsymptoticMetadata, AsymptoticRow>;
pub type FiniteDocument = Document<FiniteMetadata, FiniteRow>;

pub trait CsvRow {
    const SCHEMA: &'static str;
    fn columns() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn opt_int(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn status(s: RowStatus) -> String {
    s.as_str().to_string()
}

impl CsvRow for LadderRow {
    const SCHEMA: &'static str = LADDER_SCHEMA;
    fn columns() -> &'static [&'static str] {
        &LADDER_COLUMNS
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            float(self.f_k),
            float(self.t_k),
            float(self.s_k),
            float(self.r_k),
            float(self.mu_k),
            float(self.sigma2_k),
        ]
    }
}

impl CsvRow for AsymptoticRow {
    const SCHEMA: &'static str = ASYMPTOTIC_SCHEMA;
    fn columns() -> &'static [&'static str] {
        &ASYMPTOTIC_COLUMNS
    }
    fn fields(&self) -> Vec<String> {
        vec![
            float(self.param),
            float(self.f_initial),
            opt_float(self.rate_interpolated),
            opt_int(self.pair_i),
            opt_int(self.pair_j),
            opt_float(self.p_i),
            opt_float(self.rate_uninterpolated),
            opt_float(self.rate_ree_bound),
            status(self.status),
        ]
    }
}

impl CsvRow for FiniteRow {
    const SCHEMA: &'static str = FINITE_SCHEMA;
    fn columns() -> &'static [&'static str] {
        &FINITE_COLUMNS
    }
    fn fields(&self) -> Vec<String> {
        vec![
            float(self.param),
            float(self.f_initial),
            self.n.to_string(),
            opt_int(self.pair_i),
            opt_int(self.pair_j),
            opt_float(self.p_i),
            opt_int(self.baseline_k),
            opt_float(self.interp_lower),
            opt_float(self.interp_upper),
            opt_float(self.baseline_lower),
            opt_float(self.baseline_upper),
            opt_float(self.rate_interpolated),
            opt_float(self.rate_uninterpolated),
            status(self.status),
        ]
    }
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> Result<String, String> {
    let mut out = format!("# schema: {}\n", R::SCHEMA).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let err = |e: csv::Error| e.to_string();
        w.write_record(R::columns()).map_err(err)?;
        for row in rows {
            w.write_record(row.fields()).map_err(err)?;
        }
        w.flush().map_err(|e| e.to_string())?;
    }
    String::from_utf8(out).map_err(|e| e.to_string())
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String, String> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}
