//! Privacy audit of the query distribution.
//!
//! Two checks per run. The structural check subtracts the public pattern
//! from every server's query and compares the remainder with an independent
//! replay of the seeded mask stream. The empirical check counts the values
//! of every query cell at every server over many trials (targets drawn
//! round-robin) and runs a chi-square uniformity test per cell.

use pmpir_core::layered::{mask_stream, pattern_for, MaskSource, Placement, QuerySet, SeededMasks};
use pmpir_core::pir_mbr::{mbr_placement, MbrPattern};
use pmpir_core::pir_msr::{msr_placement, Strategy};
use pmpir_core::pm_codes::{Family, Geometry};
use pmpir_core::{Elem, Field};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::SimResult;

/// Cells must clear this p-value...
pub const P_FLOOR: f64 = 1e-6;
/// ...in at least this fraction of cells.
pub const PASS_FRACTION: f64 = 0.99;

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub family: String,
    pub n: usize,
    pub q: u64,
    pub files: usize,
    pub trials: usize,
    pub seed: u64,
    pub structural_failures: usize,
    pub cells: usize,
    pub cells_passing: usize,
    pub pass_fraction: f64,
    pub min_p_value: f64,
    pub structural_pass: bool,
    pub uniformity_pass: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.structural_pass && self.uniformity_pass
    }
}

/// The public placement for a geometry, independent of any field.
pub fn audit_placement(g: &Geometry, strategy: Strategy) -> SimResult<Placement> {
    Ok(match g.family {
        Family::Mbr => mbr_placement(g, MbrPattern::Descending),
        Family::Msr => msr_placement(g, strategy)?,
    })
}

/// Seed of trial `t`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Audit with the honest seeded mask generator.
pub fn audit_privacy(
    g: &Geometry,
    q: u64,
    files: usize,
    trials: usize,
    seed: u64,
    placement: &Placement,
) -> SimResult<AuditReport> {
    let field = Field::new(q)?;
    audit_with(g, field, files, trials, seed, placement, |s, _| {
        Box::new(SeededMasks::new(field, s))
    })
}

/// Audit with a caller-supplied mask source per `(trial seed, target)`.
pub fn audit_with<F>(
    g: &Geometry,
    field: Field,
    files: usize,
    trials: usize,
    seed: u64,
    placement: &Placement,
    mut masks_for: F,
) -> SimResult<AuditReport>
where
    F: FnMut(u64, usize) -> Box<dyn MaskSource>,
{
    let n = g.n;
    let q = field.modulus() as usize;
    let per_server = placement.queries() * files * placement.stripes();
    let mut counts = vec![0u32; n * per_server * q];
    let patterns: Vec<Vec<Vec<Elem>>> = (0..files)
        .map(|t| (0..n).map(|i| pattern_for(placement, i, files, t)).collect())
        .collect();
    let mut structural_failures = 0;

    for trial in 0..trials {
        let s = trial_seed(seed, trial);
        let target = trial % files;
        let mut masks = masks_for(s, target);
        let qs = QuerySet::generate(field, n, placement, files, target, masks.as_mut())?;
        let reference = mask_stream(field, s, placement.queries(), files, placement.stripes());
        let mut clean = true;
        for i in 0..n {
            let query = qs.server_query(i);
            let pattern = &patterns[target][i];
            for (c, ((v, e), d)) in query.iter().zip(pattern).zip(&reference).enumerate() {
                if field.sub(*v, *e) != *d {
                    clean = false;
                }
                counts[(i * per_server + c) * q + v.value() as usize] += 1;
            }
        }
        if !clean {
            structural_failures += 1;
        }
    }

    let chi = ChiSquared::new((q - 1) as f64).expect("q >= 2");
    let expected = trials as f64 / q as f64;
    let cells = n * per_server;
    let mut passing = 0;
    let mut min_p = 1.0f64;
    for cell in counts.chunks_exact(q) {
        let stat: f64 = cell
            .iter()
            .map(|&o| {
                let diff = o as f64 - expected;
                diff * diff / expected
            })
            .sum();
        let p = chi.sf(stat);
        min_p = min_p.min(p);
        if p > P_FLOOR {
            passing += 1;
        }
    }
    let pass_fraction = passing as f64 / cells.max(1) as f64;
    Ok(AuditReport {
        family: g.family.name().to_string(),
        n,
        q: field.modulus(),
        files,
        trials,
        seed,
        structural_failures,
        cells,
        cells_passing: passing,
        pass_fraction,
        min_p_value: min_p,
        structural_pass: structural_failures == 0,
        uniformity_pass: pass_fraction >= PASS_FRACTION,
    })
}

/// Negative control: a generator that replaces the first mask of every
/// query with the target index, leaking `f0` into `D`.
pub struct LeakyMasks {
    inner: SeededMasks,
    field: Field,
    target: usize,
}

impl LeakyMasks {
    pub fn new(field: Field, seed: u64, target: usize) -> Self {
        LeakyMasks {
            inner: SeededMasks::new(field, seed),
            field,
            target,
        }
    }
}

impl MaskSource for LeakyMasks {
    fn mask(&mut self, query: usize, file: usize, stripe: usize) -> Elem {
        let honest = self.inner.mask(query, file, stripe);
        if file == 0 && stripe == 0 {
            self.field.elem(self.target as u64)
        } else {
            honest
        }
    }
}
