//! Comparison report rows and their CSV / JSON encodings.

use std::fmt;
use std::io::{self, Write};

use serde::{Serialize, Serializer};

use super::config::OutputFormat;

pub const CSV_HEADER: &str = "N,L,method,S_N,S_N_leibnitz,residual_mass,p50,p90,max,stderr";

/// Where a row's numbers come from. Declaration order is the row order
/// within a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    OriginalChain,
    ImprovedChain,
    Sim,
    Exact,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::OriginalChain => "original-chain",
            Method::ImprovedChain => "improved-chain",
            Method::Sim => "sim",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// One `(sweep point, method)` row. Reals are stored already rounded to
/// nine significant digits, so both encodings carry identical values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "L")]
    pub l: u32,
    pub method: Method,
    #[serde(rename = "S_N")]
    pub s_n: f64,
    /// Literal departure count; known-incorrect, emitted for comparison.
    #[serde(rename = "S_N_leibnitz")]
    pub s_n_leibnitz: Option<f64>,
    pub residual_mass: Option<f64>,
    pub p50: Option<u64>,
    pub p90: Option<u64>,
    pub max: Option<u64>,
    pub stderr: Option<f64>,
}

impl ReportRow {
    pub fn new(n: u32, l: u32, method: Method, s_n: f64) -> Self {
        Self {
            n,
            l,
            method,
            s_n: round_sig9(s_n),
            s_n_leibnitz: None,
            residual_mass: None,
            p50: None,
            p90: None,
            max: None,
            stderr: None,
        }
    }

    pub fn with_leibnitz(mut self, v: f64) -> Self {
        self.s_n_leibnitz = Some(round_sig9(v));
        self
    }

    pub fn with_residual(mut self, v: f64) -> Self {
        self.residual_mass = Some(round_sig9(v));
        self
    }

    pub fn with_stderr(mut self, v: f64) -> Self {
        self.stderr = Some(round_sig9(v));
        self
    }

    pub fn with_quantiles(mut self, p50: Option<u64>, p90: Option<u64>, max: Option<u64>) -> Self {
        self.p50 = p50;
        self.p90 = p90;
        self.max = max;
        self
    }

    fn sort_key(&self) -> (u32, u32, Method) {
        (self.n, self.l, self.method)
    }

    /// Every real cell is finite.
    pub fn is_finite(&self) -> bool {
        self.s_n.is_finite()
            && [self.s_n_leibnitz, self.residual_mass, self.stderr]
                .iter()
                .flatten()
                .all(|v| v.is_finite())
    }
}

/// Rows for every sweep point, ordered by `(N, L, method)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct ComparisonReport {
    rows: Vec<ReportRow>,
}

impl ComparisonReport {
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by_key(ReportRow::sort_key);
        Self { rows }
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn row(&self, n: u32, l: u32, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.sort_key() == (n, l, method))
    }

    /// Per sweep point, which chain kernel's `S_N` lies closer to the
    /// simulated mean. Points without a sim row or both kernels are skipped.
    pub fn kernel_tracking(&self) -> Vec<KernelTracking> {
        let mut out = Vec::new();
        for sim in self.rows.iter().filter(|r| r.method == Method::Sim) {
            let (Some(orig), Some(imp)) = (
                self.row(sim.n, sim.l, Method::OriginalChain),
                self.row(sim.n, sim.l, Method::ImprovedChain),
            ) else {
                continue;
            };
            out.push(KernelTracking {
                n: sim.n,
                l: sim.l,
                original_gap: (orig.s_n - sim.s_n).abs(),
                improved_gap: (imp.s_n - sim.s_n).abs(),
            });
        }
        out
    }

    pub fn write(&self, format: OutputFormat, sink: &mut impl Write) -> io::Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(sink),
            OutputFormat::Json => self.write_json(sink),
        }
    }

    pub fn write_csv(&self, sink: &mut impl Write) -> io::Result<()> {
        writeln!(sink, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.l,
                r.method,
                format_sig9(r.s_n),
                opt_real(r.s_n_leibnitz),
                opt_real(r.residual_mass),
                opt_int(r.p50),
                opt_int(r.p90),
                opt_int(r.max),
                opt_real(r.stderr),
            )?;
        }
        Ok(())
    }

    pub fn write_json(&self, sink: &mut impl Write) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *sink, &self.rows)?;
        writeln!(sink)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTracking {
    pub n: u32,
    pub l: u32,
    pub original_gap: f64,
    pub improved_gap: f64,
}

impl KernelTracking {
    pub fn improved_is_closer(&self) -> bool {
        self.improved_gap < self.original_gap
    }
}

impl fmt::Display for KernelTracking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} L={}: |S_N - sim| original-chain={} improved-chain={} -> {} closer",
            self.n,
            self.l,
            format_sig9(self.original_gap),
            format_sig9(self.improved_gap),
            if self.improved_is_closer() {
                "improved"
            } else {
                "original"
            }
        )
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

fn opt_int(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Positional decimal with nine significant digits, e.g. `0.500000000`,
/// `12.3456789`, `1234567890`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // Scientific formatting does the rounding, including carries into a
    // new leading digit.
    let sci = format!("{:.8e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    let body = if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

/// The value a reader recovers from [`format_sig9`].
pub fn round_sig9(v: f64) -> f64 {
    format_sig9(v).parse().unwrap_or(v)
}
