//! PIR over product-matrix MBR coded storage.
//!
//! Column `j >= k` of every `M^f` has zeros below row `k`, so `k` queries
//! answered by all `n` servers peel it off. Column `j < k` is symmetric with
//! an already decoded row, which leaves `j + 1` unknown rows and lets the
//! lowest `k - j - 1` servers stay silent.

use alloc::vec::Vec;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::layered::{
    reconstruct, ColumnStep, LayeredScheme, MaskSource, Placement, QuerySet, ResponseBundle,
    Retrieved, RowSource, Schedule, SeededMasks,
};
use crate::pm_codes::{CodeParams, Family, Geometry};

/// How retrieval cells are spread over servers `k..n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MbrPattern {
    /// Query `l`, stripe `s` lands on server `n - 1 - ((l + s) mod S)`.
    #[default]
    Descending,
    /// Query `l`, stripe `s` lands on server `k + ((s - l) mod S)`.
    Ascending,
}

/// Steps in processing order: columns `d - 1` down to `0`.
pub fn mbr_steps(g: &Geometry) -> Vec<ColumnStep> {
    let (k, d) = (g.k, g.d);
    (0..d)
        .rev()
        .map(|j| {
            if j >= k {
                ColumnStep {
                    column: j,
                    first_server: 0,
                    queries: k,
                    rows: (0..d)
                        .map(|r| if r < k { RowSource::Unknown } else { RowSource::Zero })
                        .collect(),
                }
            } else {
                ColumnStep {
                    column: j,
                    first_server: k - j - 1,
                    queries: j + 1,
                    rows: (0..d)
                        .map(|r| {
                            if r <= j {
                                RowSource::Unknown
                            } else {
                                RowSource::Mirror { row: j, column: r }
                            }
                        })
                        .collect(),
                }
            }
        })
        .collect()
}

pub fn mbr_schedule(g: &Geometry) -> Schedule {
    Schedule::from_steps(g.n, &mbr_steps(g))
}

pub fn mbr_placement(g: &Geometry, pattern: MbrPattern) -> Placement {
    let (n, k, s_count) = (g.n, g.k, g.stripes());
    let servers = (0..k)
        .map(|l| {
            (0..s_count)
                .map(|s| match pattern {
                    MbrPattern::Descending => n - 1 - ((l + s) % s_count),
                    MbrPattern::Ascending => k + (s + s_count - l % s_count) % s_count,
                })
                .collect()
        })
        .collect();
    Placement { servers }
}

/// Builds and certifies the MBR scheme.
pub fn mbr_scheme(params: &CodeParams, pattern: MbrPattern) -> Result<LayeredScheme> {
    let g = params.geometry;
    if g.family != Family::Mbr {
        return Err(Error::InvalidGeometry("expected MBR parameters".into()));
    }
    LayeredScheme::new(params.clone(), mbr_steps(&g), mbr_placement(&g, pattern))
}

/// Query generation with seeded masks. `target` is zero-based.
pub fn mbr_make_queries(
    scheme: &LayeredScheme,
    files: usize,
    target: usize,
    seed: u64,
) -> Result<QuerySet> {
    mbr_make_queries_with(scheme, files, target, &mut SeededMasks::new(scheme.params().field, seed))
}

pub fn mbr_make_queries_with<M: MaskSource + ?Sized>(
    scheme: &LayeredScheme,
    files: usize,
    target: usize,
    masks: &mut M,
) -> Result<QuerySet> {
    let p = scheme.params();
    QuerySet::generate(p.field, p.geometry.n, scheme.placement(), files, target, masks)
}

pub fn mbr_respond(
    scheme: &LayeredScheme,
    server: usize,
    share: &[crate::galois::Elem],
    query: &[crate::galois::Elem],
) -> Result<Vec<crate::galois::Elem>> {
    let p = scheme.params();
    crate::layered::respond(server, share, query, &scheme.schedule(), &p.geometry, p.field)
}

pub fn mbr_reconstruct(
    scheme: &LayeredScheme,
    responses: &ResponseBundle,
    queries: &QuerySet,
) -> Result<Retrieved> {
    reconstruct(scheme, responses, queries)
}

fn ratio(num: i128, den: i128) -> Ratio<i128> {
    Ratio::new(num, den)
}

fn mbr_geometry(n: usize, k: usize, d: usize) -> Result<Geometry> {
    Geometry::new(Family::Mbr, n, k, d)
}

/// Downloads per retrieval: `nk(d - k) + sum_{j=1}^{k} j(n - k + j)`.
pub fn download_count_mbr(n: usize, k: usize, d: usize) -> Result<usize> {
    mbr_geometry(n, k, d)?;
    Ok(n * k * (d - k) + (1..=k).map(|j| j * (n - k + j)).sum::<usize>())
}

/// Closed-form PIR rate of the MBR scheme.
pub fn rate_mbr(n: usize, k: usize, d: usize) -> Result<Ratio<i128>> {
    mbr_geometry(n, k, d)?;
    let (n, k, d) = (n as i128, k as i128, d as i128);
    Ok(ratio(
        3 * (n - k) * (2 * d - k + 1),
        6 * d * n - 3 * n * k + 3 * n - k * k + 1,
    ))
}

/// The same rate written as `(1 - k/n) / (1 - k(k + 1)(k - 1) / (6 n B))`.
pub fn rate_mbr_alt(n: usize, k: usize, d: usize) -> Result<Ratio<i128>> {
    let g = mbr_geometry(n, k, d)?;
    let b = g.stripe_symbols() as i128;
    let (n, k) = (n as i128, k as i128);
    let top = Ratio::from_integer(1) - ratio(k, n);
    let bottom = Ratio::from_integer(1) - ratio(k * (k + 1) * (k - 1), 6 * n * b);
    Ok(top / bottom)
}

/// The multiplier `p >= 1` with `n = p k + d`, if one exists.
pub fn dn_multiplier(n: usize, k: usize, d: usize) -> Option<usize> {
    if k == 0 || n <= d || !(n - d).is_multiple_of(k) {
        return None;
    }
    Some((n - d) / k)
}

/// Rate `p B / (d n)` of the baseline scheme, which needs `n = p k + d`.
pub fn rate_dn_mbr(n: usize, k: usize, d: usize, p: usize) -> Result<Ratio<i128>> {
    let g = mbr_geometry(n, k, d)?;
    if p == 0 || p * k + d != n {
        return Err(Error::ConstraintViolated(alloc::format!(
            "n = {n} is not p k + d = {p} * {k} + {d}"
        )));
    }
    Ok(ratio(p as i128 * g.stripe_symbols() as i128, (d * n) as i128))
}

/// `(lower, upper, collusion_ref)` = `(1 - k/n, 1 - B/(nd), 1 - (B + d - 1)/(nd))`.
/// The scheme rate always lies in `[lower, upper]`.
pub fn mbr_bounds(n: usize, k: usize, d: usize) -> Result<(Ratio<i128>, Ratio<i128>, Ratio<i128>)> {
    let g = mbr_geometry(n, k, d)?;
    let b = g.stripe_symbols() as i128;
    let (n, k, d) = (n as i128, k as i128, d as i128);
    let one = Ratio::from_integer(1);
    Ok((
        one - ratio(k, n),
        one - ratio(b, n * d),
        one - ratio(b + d - 1, n * d),
    ))
}
