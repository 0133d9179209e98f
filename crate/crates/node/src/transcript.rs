use num_rational::Ratio;
use pmpir_core::pm_codes::CodeParams;
use serde::{Deserialize, Serialize};

use crate::sim::fraction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: u64,
    pub alpha: usize,
    pub stripes: usize,
    /// Symbols per stripe.
    pub b: usize,
}

impl ParamsRecord {
    pub fn new(params: &CodeParams) -> Self {
        let g = params.geometry;
        ParamsRecord {
            n: g.n,
            k: g.k,
            d: g.d,
            q: params.field.modulus(),
            alpha: g.alpha(),
            stripes: g.stripes(),
            b: g.stripe_symbols(),
        }
    }
}

/// Client-side record of one retrieval. `f0` is 1-based and never leaves
/// the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: ParamsRecord,
    pub family: String,
    #[serde(rename = "F")]
    pub files: usize,
    pub f0: usize,
    pub seed: u64,
    pub per_server: Vec<usize>,
    pub total_downloaded: usize,
    pub file_size: usize,
    pub rate: String,
    pub rate_decimal: f64,
    pub wall_time_ms: f64,
}

impl Transcript {
    pub fn new(
        params: &CodeParams,
        files: usize,
        target: usize,
        seed: u64,
        per_server: Vec<usize>,
        file_size: usize,
        wall_time_ms: f64,
    ) -> Self {
        let total: usize = per_server.iter().sum();
        let rate = Ratio::new(file_size as i128, total.max(1) as i128);
        Transcript {
            params: ParamsRecord::new(params),
            family: params.geometry.family.name().to_string(),
            files,
            f0: target + 1,
            seed,
            per_server,
            total_downloaded: total,
            file_size,
            rate: fraction(rate),
            rate_decimal: file_size as f64 / total.max(1) as f64,
            wall_time_ms,
        }
    }

    pub fn rate_exact(&self) -> Ratio<i128> {
        Ratio::new(self.file_size as i128, self.total_downloaded as i128)
    }
}
