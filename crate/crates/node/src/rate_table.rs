//! Self-checking rate tables.
//!
//! CSV columns: `x,scheme_rate_frac,scheme_rate,dn_rate,lower,upper,collusion_ref`.
//! `x` is `d` (MBR) or `alpha` (MSR). Every column except `scheme_rate` is an
//! exact fraction; `dn_rate` is empty where the baseline is undefined and
//! `collusion_ref` is empty for MSR. For MBR `lower = 1 - k/n` and
//! `upper = 1 - B/(nd)`; for MSR `lower = 1 - d/n` and `upper = 1 - k/n`.

use std::fmt::Write as _;

use num_rational::Ratio;
use pmpir_core::pir_mbr::{dn_multiplier, mbr_bounds, rate_dn_mbr, rate_mbr};
use pmpir_core::pir_msr::{rate_dn_msr, rate_msr};

use crate::error::SimResult;
use crate::sim::fraction;

pub const CSV_HEADER: &str = "x,scheme_rate_frac,scheme_rate,dn_rate,lower,upper,collusion_ref";

type Q = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableSpec {
    /// MBR, fixed `n` and `k`, `d` in `[from, to]` (default `[k + 1, n - 1]`).
    MbrFixedK { n: usize, k: usize },
    /// MBR with `d = 2(k - 1)`: even `d` in `[from, to]` (default `[4, n - 2]`).
    MbrLinked { n: usize },
    /// MSR, `alpha` in `[from, to]` (default `[1, (n - 2) / 2]`).
    Msr { n: usize },
}

impl TableSpec {
    pub fn default_range(&self) -> (usize, usize) {
        match *self {
            TableSpec::MbrFixedK { n, k } => (k + 1, n.saturating_sub(1)),
            TableSpec::MbrLinked { n } => (4, n.saturating_sub(2)),
            TableSpec::Msr { n } => (1, n.saturating_sub(2) / 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateRow {
    pub x: usize,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub scheme: Q,
    pub dn: Option<Q>,
    pub lower: Q,
    pub upper: Q,
    pub collusion: Option<Q>,
    msr: bool,
}

impl RateRow {
    /// The sandwich inequality of the row, plus strict dominance over the
    /// baseline for MBR.
    pub fn check(&self) -> Result<(), String> {
        let ctx = format!("x = {}", self.x);
        if self.msr {
            let dn = self.dn.expect("MSR rows always carry the baseline");
            if !(dn <= self.scheme && self.scheme <= self.upper) {
                return Err(format!("{ctx}: 1 - d/n <= rate <= 1 - k/n fails"));
            }
        } else {
            if !(self.lower <= self.scheme && self.scheme <= self.upper) {
                return Err(format!("{ctx}: 1 - k/n <= rate <= 1 - B/(nd) fails"));
            }
            if let Some(dn) = self.dn {
                if !(dn < self.lower && (self.k == 1 || self.lower < self.scheme)) {
                    return Err(format!("{ctx}: baseline dominance fails"));
                }
            }
        }
        Ok(())
    }

    pub fn csv_line(&self) -> String {
        let opt = |r: Option<Q>| r.map(fraction).unwrap_or_default();
        format!(
            "{},{},{:.6},{},{},{},{}",
            self.x,
            fraction(self.scheme),
            decimal(self.scheme),
            opt(self.dn),
            fraction(self.lower),
            fraction(self.upper),
            opt(self.collusion)
        )
    }
}

pub fn decimal(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn mbr_row(n: usize, k: usize, d: usize) -> SimResult<RateRow> {
    let (lower, upper, collusion) = mbr_bounds(n, k, d)?;
    let dn = match dn_multiplier(n, k, d) {
        Some(p) => Some(rate_dn_mbr(n, k, d, p)?),
        None => None,
    };
    Ok(RateRow {
        x: d,
        n,
        k,
        d,
        scheme: rate_mbr(n, k, d)?,
        dn,
        lower,
        upper,
        collusion: Some(collusion),
        msr: false,
    })
}

fn msr_row(n: usize, alpha: usize) -> SimResult<RateRow> {
    let (k, d) = (alpha + 1, 2 * alpha);
    let dn = rate_dn_msr(n, d)?;
    Ok(RateRow {
        x: alpha,
        n,
        k,
        d,
        scheme: rate_msr(n, alpha)?,
        dn: Some(dn),
        lower: dn,
        upper: Q::from_integer(1) - Q::new(k as i128, n as i128),
        collusion: None,
        msr: true,
    })
}

pub fn rate_table(spec: TableSpec, range: Option<(usize, usize)>) -> SimResult<Vec<RateRow>> {
    let (from, to) = range.unwrap_or_else(|| spec.default_range());
    let mut rows = Vec::new();
    for x in from..=to {
        match spec {
            TableSpec::MbrFixedK { n, k } => rows.push(mbr_row(n, k, x)?),
            TableSpec::MbrLinked { n } => {
                if x % 2 == 0 && x >= 2 {
                    rows.push(mbr_row(n, x / 2 + 1, x)?);
                }
            }
            TableSpec::Msr { n } => rows.push(msr_row(n, x)?),
        }
    }
    Ok(rows)
}

/// Renders the table and collects every failing self-check.
pub fn render_csv(rows: &[RateRow]) -> (String, Vec<String>) {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let mut violations = Vec::new();
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
        if let Err(e) = r.check() {
            violations.push(e);
        }
    }
    (out, violations)
}
