//! PIR over product-matrix MSR coded storage (`d = 2k - 2`, `alpha = k - 1`).
//!
//! Column `j` of `M^f = [S1; S2]` has unknown rows `0..=j` of `S1` and
//! `S2`; the remaining rows mirror earlier columns by symmetry. The
//! responses at column `j` are therefore codewords of the layer code
//! `C_j = span{x^e : e in [0, j) u [alpha, alpha + j)}` plus the retrieval
//! pattern, and only servers `2(alpha - j - 1)..n` have to answer.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::galois::Elem;
use crate::layered::{
    certify_step, find_info_subset, reconstruct, Certificate, ColumnStep, LayeredScheme,
    MaskSource, Placement, QuerySet, ResponseBundle, Retrieved, RowSource, Schedule, SeededMasks,
};
use crate::nested_rs::{is_info_set, EvalPoints, ExponentCode};
use crate::pm_codes::{CodeParams, Family, Geometry};

/// Nested information sets `I_1 c I_2 c ... c I_alpha` of the layer codes,
/// and the point order that puts `I_j` at positions `[2a - 2j, 2a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedInfoSets {
    /// `order[t]` is the original index placed at position `t`.
    pub order: Vec<usize>,
    /// `sets[j - 1]` is `I_j` in original indices.
    pub sets: Vec<Vec<usize>>,
}

/// Finds nested information sets `|I_j| = 2j` of `C_j`, preferring the
/// trailing block of the current order so that good point sets stay fixed.
pub fn compute_nested_info_sets(points: &EvalPoints, alpha: usize) -> Result<NestedInfoSets> {
    let n = points.len();
    if alpha == 0 || n < 2 * alpha {
        return Err(Error::InvalidGeometry(format!(
            "need n >= 2 alpha, got n = {n}, alpha = {alpha}"
        )));
    }
    let top: Vec<usize> = (0..2 * alpha).collect();
    let top_code = ExponentCode::msr_layer(points.clone(), alpha, alpha)?;
    if !is_info_set(&top, &top_code)? {
        return Err(Error::NoNestedSets);
    }
    // chain[t] = I_{alpha - t}
    let mut chain = vec![top];
    if !extend_chain(points, alpha, &mut chain)? {
        return Err(Error::NoNestedSets);
    }
    chain.reverse();
    let sets = chain;

    let mut order = vec![0usize; n];
    let mut prev: Vec<usize> = Vec::new();
    for (t, set) in sets.iter().enumerate() {
        let j = t + 1;
        let fresh: Vec<usize> = set.iter().copied().filter(|i| !prev.contains(i)).collect();
        let start = 2 * alpha - 2 * j;
        for (u, &i) in fresh.iter().enumerate() {
            order[start + u] = i;
        }
        prev = set.clone();
    }
    for (u, i) in (2 * alpha..n).enumerate() {
        order[2 * alpha + u] = i;
    }
    Ok(NestedInfoSets { order, sets })
}

fn extend_chain(points: &EvalPoints, alpha: usize, chain: &mut Vec<Vec<usize>>) -> Result<bool> {
    let j = alpha - chain.len();
    if j == 0 {
        return Ok(true);
    }
    let parent = chain.last().expect("chain starts non-empty").clone();
    let code = ExponentCode::msr_layer(points.clone(), alpha, j)?;
    let size = 2 * j;
    // Lexicographic combinations over the reversed parent, so the trailing
    // block comes first.
    let reversed: Vec<usize> = parent.iter().rev().copied().collect();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let mut subset: Vec<usize> = idx.iter().map(|&t| reversed[t]).collect();
        subset.sort_unstable();
        if is_info_set(&subset, &code)? {
            chain.push(subset);
            if extend_chain(points, alpha, chain)? {
                return Ok(true);
            }
            chain.pop();
        }
        if !next_combination(&mut idx, reversed.len()) {
            return Ok(false);
        }
    }
}

/// Advances `idx` to the next `idx.len()`-subset of `0..len` in
/// lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], len: usize) -> bool {
    let size = idx.len();
    let mut t = size;
    while t > 0 {
        t -= 1;
        if idx[t] < len - size + t {
            idx[t] += 1;
            for u in t + 1..size {
                idx[u] = idx[u - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Steps in processing order: columns `alpha - 1` down to `0`.
pub fn msr_steps(g: &Geometry) -> Vec<ColumnStep> {
    let a = g.alpha();
    (0..a)
        .rev()
        .map(|j| ColumnStep {
            column: j,
            first_server: 2 * a - 2 * j - 2,
            queries: 2 * (j + 1),
            rows: (0..2 * a)
                .map(|r| {
                    if r < a {
                        if r <= j {
                            RowSource::Unknown
                        } else {
                            RowSource::Mirror { row: j, column: r }
                        }
                    } else if r - a <= j {
                        RowSource::Unknown
                    } else {
                        RowSource::Mirror {
                            row: a + j,
                            column: r - a,
                        }
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn msr_schedule(g: &Geometry) -> Schedule {
    Schedule::from_steps(g.n, &msr_steps(g))
}

/// How retrieval cells of the `2 alpha` queries are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Query `l`, stripe `s` on server `n - 1 - ((l + s) mod S)`; needs
    /// `S >= 2 alpha`.
    Tail,
    /// Queries `2g` and `2g + 1` share the block `[n - (g + 1) S, n - g S)`
    /// with cyclically shifted stripes.
    Grouped,
    /// Depth-first search with rank pruning.
    Search,
    /// Tail, then grouped, then search.
    #[default]
    Auto,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Tail => "tail",
            Strategy::Grouped => "grouped",
            Strategy::Search => "search",
            Strategy::Auto => "auto",
        }
    }
}

impl core::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tail" => Ok(Strategy::Tail),
            "grouped" => Ok(Strategy::Grouped),
            "search" => Ok(Strategy::Search),
            "auto" => Ok(Strategy::Auto),
            other => Err(Error::PlanInfeasible(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Node budget of the placement search.
pub const SEARCH_BUDGET: usize = 200_000;

/// A certified retrieval plan in serialisable form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalPlan {
    /// The strategy that produced the placement (never `Auto`).
    pub strategy: Strategy,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: u64,
    pub points: Vec<u64>,
    pub placement: Placement,
    pub certificates: Vec<Certificate>,
    /// Hex SHA-256 over the placement and certificates.
    pub digest: String,
}

/// Builds a certified plan and the scheme it drives.
pub fn msr_plan(params: &CodeParams, strategy: Strategy) -> Result<(RetrievalPlan, LayeredScheme)> {
    let g = params.geometry;
    if g.family != Family::Msr {
        return Err(Error::InvalidGeometry("expected MSR parameters".into()));
    }
    let steps = msr_steps(&g);
    let (used, placement) = match strategy {
        Strategy::Tail => (Strategy::Tail, tail_placement(&g)?),
        Strategy::Grouped => (Strategy::Grouped, grouped_placement(&g)?),
        Strategy::Search => (Strategy::Search, search_placement(params, &steps, SEARCH_BUDGET)?),
        Strategy::Auto => {
            let mut found = None;
            for s in [Strategy::Tail, Strategy::Grouped] {
                let p = match s {
                    Strategy::Tail => tail_placement(&g),
                    _ => grouped_placement(&g),
                };
                if let Ok(p) = p {
                    if let Ok(scheme) = LayeredScheme::new(params.clone(), steps.clone(), p.clone()) {
                        found = Some((s, scheme));
                        break;
                    }
                }
            }
            match found {
                Some((s, scheme)) => return Ok((plan_from_scheme(s, &scheme), scheme)),
                None => (
                    Strategy::Search,
                    search_placement(params, &steps, SEARCH_BUDGET)?,
                ),
            }
        }
    };
    let scheme = LayeredScheme::new(params.clone(), steps, placement)?;
    Ok((plan_from_scheme(used, &scheme), scheme))
}

fn plan_from_scheme(strategy: Strategy, scheme: &LayeredScheme) -> RetrievalPlan {
    let p = scheme.params();
    let g = p.geometry;
    let mut hasher = Sha256::new();
    for (l, cells) in scheme.placement().servers.iter().enumerate() {
        hasher.update((l as u64).to_le_bytes());
        for &i in cells {
            hasher.update((i as u64).to_le_bytes());
        }
    }
    for c in scheme.certificates() {
        hasher.update((c.column as u64).to_le_bytes());
        for set in c.clean_sets.iter().chain(&c.stripe_sets) {
            hasher.update((set.len() as u64).to_le_bytes());
            for &i in set {
                hasher.update((i as u64).to_le_bytes());
            }
        }
    }
    let mut digest = String::with_capacity(64);
    for b in hasher.finalize() {
        let _ = write!(digest, "{b:02x}");
    }
    RetrievalPlan {
        strategy,
        n: g.n,
        k: g.k,
        d: g.d,
        q: p.field.modulus(),
        points: p.points().as_slice().iter().map(|e| e.value()).collect(),
        placement: scheme.placement().clone(),
        certificates: scheme.certificates().to_vec(),
        digest,
    }
}

/// The tail or grouped placement without certification. It only depends on
/// the geometry, so it is usable where no code over the field exists (for
/// example when auditing query distributions over a tiny field). `Auto`
/// tries tail, then grouped; `Search` needs evaluation points and is
/// rejected.
pub fn msr_placement(g: &Geometry, strategy: Strategy) -> Result<Placement> {
    match strategy {
        Strategy::Tail => tail_placement(g),
        Strategy::Grouped => grouped_placement(g),
        Strategy::Auto => tail_placement(g).or_else(|_| grouped_placement(g)),
        Strategy::Search => Err(Error::PlanInfeasible(
            "search placement needs concrete evaluation points".into(),
        )),
    }
}

fn tail_placement(g: &Geometry) -> Result<Placement> {
    let (n, a, s_count) = (g.n, g.alpha(), g.stripes());
    if s_count < 2 * a {
        return Err(Error::PlanInfeasible(format!(
            "tail placement needs S >= 2 alpha, got S = {s_count}"
        )));
    }
    Ok(Placement {
        servers: (0..2 * a)
            .map(|l| (0..s_count).map(|s| n - 1 - ((l + s) % s_count)).collect())
            .collect(),
    })
}

fn grouped_placement(g: &Geometry) -> Result<Placement> {
    let (n, a, s_count) = (g.n, g.alpha(), g.stripes());
    let mut servers = Vec::with_capacity(2 * a);
    for l in 0..2 * a {
        let (grp, u) = (l / 2, l % 2);
        let start = n.checked_sub((grp + 1) * s_count).ok_or_else(|| {
            Error::PlanInfeasible(format!("grouped placement runs out of servers at query {l}"))
        })?;
        if s_count == 1 && u == 1 {
            return Err(Error::PlanInfeasible(
                "grouped placement needs two servers per block".into(),
            ));
        }
        servers.push(
            (0..s_count)
                .map(|s| start + (s + s_count - u) % s_count)
                .collect(),
        );
    }
    Ok(Placement { servers })
}

struct Search<'a> {
    points: &'a EvalPoints,
    g: Geometry,
    steps: &'a [ColumnStep],
    /// Lowest admissible server per query.
    floor: Vec<usize>,
    servers: Vec<Vec<usize>>,
    nodes: usize,
    budget: usize,
}

impl Search<'_> {
    fn run(&mut self, l: usize, s: usize) -> Option<bool> {
        let queries = self.floor.len();
        let stripes = self.g.stripes();
        if l == queries {
            return Some(true);
        }
        if s == stripes {
            if !self.query_ok(l) {
                return Some(false);
            }
            return self.run(l + 1, 0);
        }
        for i in (self.floor[l]..self.g.n).rev() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return None;
            }
            if self.servers[l].contains(&i) || (0..l).any(|m| self.servers[m][s] == i) {
                continue;
            }
            self.servers[l].push(i);
            match self.run(l, s + 1) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            self.servers[l].pop();
        }
        Some(false)
    }

    /// Clean-set checks for every step using query `l`, and stripe checks
    /// for steps whose last query is `l`.
    fn query_ok(&self, l: usize) -> bool {
        let placement = Placement {
            servers: self.servers[..=l].to_vec(),
        };
        for step in self.steps.iter().filter(|st| st.queries > l) {
            let unknown = step.unknown_rows();
            let Ok(code) = ExponentCode::new(self.points.clone(), unknown.clone()) else {
                return false;
            };
            let cells = &self.servers[l];
            let clean: Vec<usize> = (step.first_server..self.g.n)
                .filter(|i| !cells.contains(i))
                .collect();
            if find_info_subset(&clean, unknown.len(), &code).is_none() {
                return false;
            }
            if step.queries == l + 1 && certify_step(self.points, step, &placement, self.g).is_err() {
                return false;
            }
        }
        true
    }
}

fn search_placement(params: &CodeParams, steps: &[ColumnStep], budget: usize) -> Result<Placement> {
    let g = params.geometry;
    let queries = steps.iter().map(|s| s.queries).max().unwrap_or(0);
    let floor = (0..queries)
        .map(|l| {
            steps
                .iter()
                .filter(|s| s.queries > l)
                .map(|s| s.first_server)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut search = Search {
        points: params.points(),
        g,
        steps,
        floor,
        servers: vec![Vec::new(); queries],
        nodes: 0,
        budget,
    };
    match search.run(0, 0) {
        Some(true) => Ok(Placement {
            servers: search.servers,
        }),
        Some(false) => Err(Error::PlanInfeasible("no placement exists".into())),
        None => Err(Error::PlanInfeasible(format!(
            "placement search exceeded {budget} nodes"
        ))),
    }
}

/// Builds and certifies the MSR scheme with the given strategy.
pub fn msr_scheme(params: &CodeParams, strategy: Strategy) -> Result<LayeredScheme> {
    msr_plan(params, strategy).map(|(_, s)| s)
}

/// Query generation with seeded masks. `target` is zero-based.
pub fn msr_make_queries(
    scheme: &LayeredScheme,
    files: usize,
    target: usize,
    seed: u64,
) -> Result<QuerySet> {
    msr_make_queries_with(scheme, files, target, &mut SeededMasks::new(scheme.params().field, seed))
}

pub fn msr_make_queries_with<M: MaskSource + ?Sized>(
    scheme: &LayeredScheme,
    files: usize,
    target: usize,
    masks: &mut M,
) -> Result<QuerySet> {
    let p = scheme.params();
    QuerySet::generate(p.field, p.geometry.n, scheme.placement(), files, target, masks)
}

pub fn msr_respond(
    scheme: &LayeredScheme,
    server: usize,
    share: &[Elem],
    query: &[Elem],
) -> Result<Vec<Elem>> {
    let p = scheme.params();
    crate::layered::respond(server, share, query, &scheme.schedule(), &p.geometry, p.field)
}

pub fn msr_reconstruct(
    scheme: &LayeredScheme,
    responses: &ResponseBundle,
    queries: &QuerySet,
) -> Result<Retrieved> {
    reconstruct(scheme, responses, queries)
}

fn msr_geometry(n: usize, k: usize, d: usize) -> Result<Geometry> {
    Geometry::new(Family::Msr, n, k, d)
}

/// Downloads per retrieval: `sum_{j=1}^{alpha} 2j(n - 2 alpha + 2j)`.
pub fn download_count_msr(n: usize, k: usize, d: usize) -> Result<usize> {
    let g = msr_geometry(n, k, d)?;
    let a = g.alpha();
    Ok((1..=a).map(|j| 2 * j * (n - 2 * a + 2 * j)).sum())
}

fn check_rate_args(n: usize, alpha: usize) -> Result<()> {
    if alpha == 0 || n <= 2 * alpha {
        return Err(Error::InvalidGeometry(format!(
            "need n > 2 alpha >= 2, got n = {n}, alpha = {alpha}"
        )));
    }
    Ok(())
}

/// Closed-form PIR rate `3(n - 2a) / (3n - 2a + 2)`.
pub fn rate_msr(n: usize, alpha: usize) -> Result<Ratio<i128>> {
    check_rate_args(n, alpha)?;
    let (n, a) = (n as i128, alpha as i128);
    Ok(Ratio::new(3 * (n - 2 * a), 3 * n - 2 * a + 2))
}

/// The same rate written as `1 - (4a + 2) / (3n - 2a + 2)`.
pub fn rate_msr_alt(n: usize, alpha: usize) -> Result<Ratio<i128>> {
    check_rate_args(n, alpha)?;
    let (n, a) = (n as i128, alpha as i128);
    Ok(Ratio::from_integer(1) - Ratio::new(4 * a + 2, 3 * n - 2 * a + 2))
}

/// Baseline rate `1 - d/n`.
pub fn rate_dn_msr(n: usize, d: usize) -> Result<Ratio<i128>> {
    if n == 0 || d >= n {
        return Err(Error::InvalidGeometry(format!("need d < n, got n = {n}, d = {d}")));
    }
    Ok(Ratio::from_integer(1) - Ratio::new(d as i128, n as i128))
}
