//! Column-layered PIR engine shared by the MBR and MSR protocols.
//!
//! A scheme is a list of [`ColumnStep`]s processed in order. Each step names
//! the responding server range, how many queries are projected on that
//! column, and for every message row whether its value is still unknown,
//! structurally zero, or mirrored from an earlier step through the symmetry
//! of the message matrix. A [`Placement`] says, per query and stripe, which
//! server carries the `+1` retrieval cell.
//!
//! For a step with unknown rows `U` and query `l`, the responses are
//! `R_l = A_l + B_l` with `A_l[i] = sum_r sigma(l, r, j) x_i^r` and `B_l`
//! supported on the query's cells. Known rows are subtracted using the ledger
//! of `sigma` scalars, the rest of `A_l` is decoded from a clean information
//! set, and `B_l` hands over one codeword symbol of the wanted file per
//! stripe. Every step is certified by rank checks when the scheme is built.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::nested_rs::{decode_info_set, is_info_set, EvalPoints, ExponentCode};
use crate::pm_codes::{share_index, unpack_message, CodeParams, Geometry, MessageArray};

/// Where the value of one message row comes from at a given step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSource {
    Unknown,
    Zero,
    /// Equal to row `row` of the already processed column `column`.
    Mirror { row: usize, column: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnStep {
    pub column: usize,
    /// Servers `first_server..n` respond.
    pub first_server: usize,
    /// Queries `0..queries` are projected.
    pub queries: usize,
    pub rows: Vec<RowSource>,
}

impl ColumnStep {
    pub fn unknown_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, RowSource::Unknown))
            .map(|(r, _)| r)
            .collect()
    }
}

/// `servers[l][s]`: the server holding query `l`'s retrieval cell for
/// stripe `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub servers: Vec<Vec<usize>>,
}

impl Placement {
    pub fn queries(&self) -> usize {
        self.servers.len()
    }

    pub fn stripes(&self) -> usize {
        self.servers.first().map_or(0, Vec::len)
    }

    /// Stripe whose cell query `l` places on `server`, if any.
    pub fn stripe_at(&self, query: usize, server: usize) -> Option<usize> {
        self.servers[query].iter().position(|&i| i == server)
    }
}

/// Solvability data for one step, verified by rank checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub column: usize,
    /// Per query: the information set used to decode the `A` part.
    pub clean_sets: Vec<Vec<usize>>,
    /// Per stripe: the servers whose harvested symbols are solved.
    pub stripe_sets: Vec<Vec<usize>>,
}

/// Public per-column download schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n: usize,
    pub columns: Vec<ScheduledColumn>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledColumn {
    pub column: usize,
    pub first_server: usize,
    pub queries: usize,
}

impl Schedule {
    pub fn from_steps(n: usize, steps: &[ColumnStep]) -> Self {
        Schedule {
            n,
            columns: steps
                .iter()
                .map(|s| ScheduledColumn {
                    column: s.column,
                    first_server: s.first_server,
                    queries: s.queries,
                })
                .collect(),
        }
    }

    /// `(column, query)` pairs server `i` answers, in transport order.
    pub fn pairs_for(&self, server: usize) -> Vec<(usize, usize)> {
        self.columns
            .iter()
            .filter(|c| server >= c.first_server)
            .flat_map(|c| (0..c.queries).map(move |l| (c.column, l)))
            .collect()
    }

    pub fn server_count(&self, server: usize) -> usize {
        self.columns
            .iter()
            .filter(|c| server >= c.first_server)
            .map(|c| c.queries)
            .sum()
    }

    pub fn per_server_counts(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.server_count(i)).collect()
    }

    pub fn total_downloads(&self) -> usize {
        self.columns
            .iter()
            .map(|c| (self.n - c.first_server) * c.queries)
            .sum()
    }

    pub fn query_count(&self) -> usize {
        self.columns.iter().map(|c| c.queries).max().unwrap_or(0)
    }
}

/// A certified layered scheme bound to concrete code parameters.
#[derive(Clone, Debug)]
pub struct LayeredScheme {
    params: CodeParams,
    steps: Vec<ColumnStep>,
    placement: Placement,
    certificates: Vec<Certificate>,
}

impl LayeredScheme {
    /// Validates step ordering and certifies every step; fails with
    /// `PlanInfeasible` if any rank condition does not hold.
    pub fn new(params: CodeParams, steps: Vec<ColumnStep>, placement: Placement) -> Result<Self> {
        let g = params.geometry;
        let infeasible = |msg: alloc::string::String| Err(Error::PlanInfeasible(msg));
        let queries = steps.iter().map(|s| s.queries).max().unwrap_or(0);
        if placement.queries() < queries {
            return infeasible(format!(
                "placement covers {} queries, schedule needs {queries}",
                placement.queries()
            ));
        }
        if placement.servers.iter().any(|q| q.len() != g.stripes()) {
            return infeasible("every query needs one cell per stripe".into());
        }
        for (l, cells) in placement.servers.iter().enumerate() {
            for (t, &i) in cells.iter().enumerate() {
                if i >= g.n || cells[..t].contains(&i) {
                    return infeasible(format!("query {l} has repeated or invalid servers"));
                }
            }
        }
        for (t, step) in steps.iter().enumerate() {
            if step.rows.len() != g.message_rows() || step.column >= g.alpha() {
                return infeasible(format!("malformed step for column {}", step.column));
            }
            for src in &step.rows {
                if let RowSource::Mirror { row, column } = *src {
                    let earlier = steps[..t].iter().find(|s| s.column == column);
                    match earlier {
                        Some(e) if e.queries >= step.queries && row < g.message_rows() => {}
                        _ => {
                            return infeasible(format!(
                                "column {} mirrors column {column} before it is decoded",
                                step.column
                            ))
                        }
                    }
                }
            }
        }
        let certificates = steps
            .iter()
            .map(|s| certify_step(params.points(), s, &placement, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(LayeredScheme {
            params,
            steps,
            placement,
            certificates,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn geometry(&self) -> Geometry {
        self.params.geometry
    }

    pub fn steps(&self) -> &[ColumnStep] {
        &self.steps
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certificates
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::from_steps(self.params.geometry.n, &self.steps)
    }

    pub fn query_count(&self) -> usize {
        self.steps.iter().map(|s| s.queries).max().unwrap_or(0)
    }
}

/// First `size`-subset of `candidates` (lexicographic) that is an
/// information set of `code`.
pub(crate) fn find_info_subset(
    candidates: &[usize],
    size: usize,
    code: &ExponentCode,
) -> Option<Vec<usize>> {
    if candidates.len() < size {
        return None;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let subset: Vec<usize> = idx.iter().map(|&t| candidates[t]).collect();
        if is_info_set(&subset, code).unwrap_or(false) {
            return Some(subset);
        }
        if !crate::pir_msr::next_combination(&mut idx, candidates.len()) {
            return None;
        }
    }
}

pub(crate) fn certify_step(
    points: &EvalPoints,
    step: &ColumnStep,
    placement: &Placement,
    g: Geometry,
) -> Result<Certificate> {
    let unknown = step.unknown_rows();
    let code = ExponentCode::new(points.clone(), unknown.clone())?;
    let size = unknown.len();
    let responding: Vec<usize> = (step.first_server..g.n).collect();
    let mut clean_sets = Vec::with_capacity(step.queries);
    for l in 0..step.queries {
        let cells = &placement.servers[l];
        if let Some(&i) = cells.iter().find(|&&i| i < step.first_server) {
            return Err(Error::PlanInfeasible(format!(
                "query {l} places a cell on server {i}, which is silent at column {}",
                step.column
            )));
        }
        let clean: Vec<usize> = responding
            .iter()
            .copied()
            .filter(|i| !cells.contains(i))
            .collect();
        let set = find_info_subset(&clean, size, &code).ok_or_else(|| {
            Error::PlanInfeasible(format!(
                "no clean information set for query {l} at column {}",
                step.column
            ))
        })?;
        clean_sets.push(set);
    }
    let mut stripe_sets = Vec::with_capacity(g.stripes());
    for s in 0..g.stripes() {
        let servers: Vec<usize> = (0..step.queries).map(|l| placement.servers[l][s]).collect();
        if servers
            .iter()
            .enumerate()
            .any(|(t, i)| servers[..t].contains(i))
        {
            return Err(Error::PlanInfeasible(format!(
                "stripe {s} hits a server twice at column {}",
                step.column
            )));
        }
        let set = find_info_subset(&servers, size, &code).ok_or_else(|| {
            Error::PlanInfeasible(format!(
                "stripe {s} equations are singular at column {}",
                step.column
            ))
        })?;
        stripe_sets.push(set);
    }
    Ok(Certificate {
        column: step.column,
        clean_sets,
        stripe_sets,
    })
}

/// Source of the uniform masks `lambda_{l, s, f}`.
pub trait MaskSource {
    fn mask(&mut self, query: usize, file: usize, stripe: usize) -> Elem;
}

/// Masks drawn from ChaCha20 seeded with a 64-bit seed, in
/// `(query, file, stripe)` order.
pub struct SeededMasks {
    field: Field,
    rng: ChaCha20Rng,
}

impl SeededMasks {
    pub fn new(field: Field, seed: u64) -> Self {
        SeededMasks {
            field,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }
}

impl MaskSource for SeededMasks {
    fn mask(&mut self, _query: usize, _file: usize, _stripe: usize) -> Elem {
        self.field.random(&mut self.rng)
    }
}

/// The full seeded mask stream, indexed `[(l * files + f) * stripes + s]`.
pub fn mask_stream(field: Field, seed: u64, queries: usize, files: usize, stripes: usize) -> Vec<Elem> {
    let mut src = SeededMasks::new(field, seed);
    let mut out = Vec::with_capacity(queries * files * stripes);
    for l in 0..queries {
        for f in 0..files {
            for s in 0..stripes {
                out.push(src.mask(l, f, s));
            }
        }
    }
    out
}

/// Client-side query state: masks `D`, pattern `E^(f0)` and `Q = D + E`.
///
/// Only [`QuerySet::server_query`] slices ever leave the client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySet {
    n: usize,
    queries: usize,
    files: usize,
    stripes: usize,
    target: usize,
    placement: Placement,
    lambdas: Vec<Elem>,
    /// `[((i * queries + l) * files + f) * stripes + s]`
    values: Vec<Elem>,
}

impl QuerySet {
    pub fn generate<M: MaskSource + ?Sized>(
        field: Field,
        n: usize,
        placement: &Placement,
        files: usize,
        target: usize,
        masks: &mut M,
    ) -> Result<Self> {
        if target >= files {
            return Err(Error::BadFileIndex {
                index: target,
                files,
            });
        }
        let queries = placement.queries();
        let stripes = placement.stripes();
        let mut lambdas = Vec::with_capacity(queries * files * stripes);
        for l in 0..queries {
            for f in 0..files {
                for s in 0..stripes {
                    lambdas.push(masks.mask(l, f, s));
                }
            }
        }
        let mut values = Vec::with_capacity(n * lambdas.len());
        for i in 0..n {
            for l in 0..queries {
                let hit = placement.stripe_at(l, i);
                for f in 0..files {
                    for s in 0..stripes {
                        let mut v = lambdas[(l * files + f) * stripes + s];
                        if f == target && hit == Some(s) {
                            v = field.add(v, Elem::ONE);
                        }
                        values.push(v);
                    }
                }
            }
        }
        Ok(QuerySet {
            n,
            queries,
            files,
            stripes,
            target,
            placement: placement.clone(),
            lambdas,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn stripes(&self) -> usize {
        self.stripes
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Symbols per server query, `queries * files * stripes`.
    pub fn per_server_len(&self) -> usize {
        self.queries * self.files * self.stripes
    }

    /// `Q[i, .]`, the only part server `i` ever sees.
    pub fn server_query(&self, server: usize) -> &[Elem] {
        let len = self.per_server_len();
        &self.values[server * len..(server + 1) * len]
    }

    /// `lambda_{l, s, f}`, identical for every server (the `D` part).
    pub fn lambda(&self, query: usize, file: usize, stripe: usize) -> Elem {
        self.lambdas[(query * self.files + file) * self.stripes + stripe]
    }

    /// `D[i, .]`: repetition masks, the same slice for every server.
    pub fn masks(&self) -> &[Elem] {
        &self.lambdas
    }

    /// `E^(f0)[i, .]` for server `i` as 0/1 symbols.
    pub fn pattern(&self, server: usize) -> Vec<Elem> {
        pattern_for(&self.placement, server, self.files, self.target)
    }
}

/// `E^(f0)[i, .]` laid out like a server query.
pub fn pattern_for(placement: &Placement, server: usize, files: usize, target: usize) -> Vec<Elem> {
    let stripes = placement.stripes();
    let mut out = vec![Elem::ZERO; placement.queries() * files * stripes];
    for l in 0..placement.queries() {
        if let Some(s) = placement.stripe_at(l, server) {
            out[(l * files + target) * stripes + s] = Elem::ONE;
        }
    }
    out
}

/// Server-side projection: `R_l[i, j] = <Q_l[i, .], C[i, j, .]>` for every
/// scheduled `(j, l)`, in schedule order.
pub fn respond(
    server: usize,
    share: &[Elem],
    query: &[Elem],
    schedule: &Schedule,
    geometry: &Geometry,
    field: Field,
) -> Result<Vec<Elem>> {
    let stripes = geometry.stripes();
    let queries = schedule.query_count();
    if stripes == 0 || queries == 0 || !query.len().is_multiple_of(queries * stripes) {
        return Err(Error::LengthMismatch {
            expected: queries * stripes,
            found: query.len(),
        });
    }
    let files = query.len() / (queries * stripes);
    if share.len() != geometry.share_len(files) {
        return Err(Error::LengthMismatch {
            expected: geometry.share_len(files),
            found: share.len(),
        });
    }
    Ok(schedule
        .pairs_for(server)
        .into_iter()
        .map(|(column, l)| {
            let mut acc = Elem::ZERO;
            for f in 0..files {
                for s in 0..stripes {
                    let q = query[(l * files + f) * stripes + s];
                    let c = share[share_index(geometry, f, s, column)];
                    acc = field.add(acc, field.mul(q, c));
                }
            }
            acc
        })
        .collect())
}

/// Responses gathered by the client, keyed by `(step, query, server)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseBundle {
    schedule: Schedule,
    values: Vec<Vec<Vec<Option<Elem>>>>,
}

impl ResponseBundle {
    pub fn new(schedule: Schedule) -> Self {
        let values = schedule
            .columns
            .iter()
            .map(|c| vec![vec![None; schedule.n]; c.queries])
            .collect();
        ResponseBundle { schedule, values }
    }

    /// Stores one server's payload, laid out as produced by [`respond`].
    pub fn insert_server(&mut self, server: usize, payload: &[Elem]) -> Result<()> {
        let expected = self.schedule.server_count(server);
        if payload.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: payload.len(),
            });
        }
        let mut it = payload.iter();
        for (t, c) in self.schedule.columns.iter().enumerate() {
            if server < c.first_server {
                continue;
            }
            for l in 0..c.queries {
                self.values[t][l][server] = it.next().copied();
            }
        }
        Ok(())
    }

    /// Drops a single response (used to exercise the missing-data path).
    pub fn remove(&mut self, column: usize, query: usize, server: usize) {
        if let Some(t) = self.schedule.columns.iter().position(|c| c.column == column) {
            if let Some(slot) = self.values[t].get_mut(query) {
                slot[server] = None;
            }
        }
    }

    pub fn get(&self, step: usize, query: usize, server: usize) -> Option<Elem> {
        self.values[step][query][server]
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn received(&self) -> usize {
        self.values
            .iter()
            .flatten()
            .flatten()
            .filter(|v| v.is_some())
            .count()
    }
}

/// The `sigma(l, r, j) = sum_{s, f} lambda_{l, s, f} M^f[r, j, s]` scalars
/// recovered along the way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ledger {
    queries: usize,
    rows: usize,
    cols: usize,
    values: Vec<Option<Elem>>,
}

impl Ledger {
    fn new(queries: usize, rows: usize, cols: usize) -> Self {
        Ledger {
            queries,
            rows,
            cols,
            values: vec![None; queries * rows * cols],
        }
    }

    fn slot(&self, query: usize, row: usize, column: usize) -> usize {
        (query * self.rows + row) * self.cols + column
    }

    pub fn get(&self, query: usize, row: usize, column: usize) -> Option<Elem> {
        if query >= self.queries || row >= self.rows || column >= self.cols {
            return None;
        }
        self.values[self.slot(query, row, column)]
    }

    fn set(&mut self, query: usize, row: usize, column: usize, v: Elem) {
        let t = self.slot(query, row, column);
        self.values[t] = Some(v);
    }

    /// All recovered entries as `(query, row, column, value)`.
    pub fn entries(&self) -> Vec<(usize, usize, usize, Elem)> {
        let mut out = Vec::new();
        for l in 0..self.queries {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    if let Some(v) = self.get(l, r, c) {
                        out.push((l, r, c, v));
                    }
                }
            }
        }
        out
    }
}

/// Output of a successful retrieval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Retrieved {
    pub file: Vec<Elem>,
    pub message: MessageArray,
    pub ledger: Ledger,
}

/// Column-by-column reconstruction of the target file.
pub fn reconstruct(
    scheme: &LayeredScheme,
    responses: &ResponseBundle,
    queries: &QuerySet,
) -> Result<Retrieved> {
    let params = &scheme.params;
    let g = params.geometry;
    let f = params.field;
    let points = params.points();
    let rows = g.message_rows();
    let cols = g.alpha();
    let stripes = g.stripes();
    let mut ledger = Ledger::new(scheme.query_count(), rows, cols);
    let mut msg: Vec<Option<Elem>> = vec![None; stripes * rows * cols];
    let mslot = |s: usize, r: usize, c: usize| (s * rows + r) * cols + c;
    let decode_err = |msg: alloc::string::String| Error::DecodeFailure(msg);

    if queries.queries() != scheme.query_count() || queries.stripes() != stripes || queries.n() != g.n {
        return Err(decode_err("query set does not match the scheme".into()));
    }
    if responses.schedule() != &scheme.schedule() {
        return Err(decode_err("responses follow a different schedule".into()));
    }
    let powers: Vec<Vec<Elem>> = (0..rows).map(|e| points.power_vector(e)).collect();

    for (t, (step, cert)) in scheme.steps.iter().zip(&scheme.certificates).enumerate() {
        let j = step.column;
        let unknown = step.unknown_rows();
        let code = ExponentCode::new(points.clone(), unknown.clone())?;
        // harvested[s] = (server, C^{f0}[server, j, s])
        let mut harvested: Vec<Vec<(usize, Elem)>> = vec![Vec::new(); stripes];

        for l in 0..step.queries {
            let mut known_terms: Vec<(usize, Elem)> = Vec::new();
            for (r, src) in step.rows.iter().enumerate() {
                match *src {
                    RowSource::Unknown | RowSource::Zero => {}
                    RowSource::Mirror { row, column } => {
                        let v = ledger.get(l, row, column).ok_or_else(|| {
                            decode_err(format!("ledger lacks sigma({l}, {row}, {column})"))
                        })?;
                        known_terms.push((r, v));
                    }
                }
            }
            let mut residual = vec![Elem::ZERO; g.n];
            for i in step.first_server..g.n {
                let resp = responses.get(t, l, i).ok_or(Error::MissingResponses {
                    column: j,
                    query: l,
                    server: i,
                })?;
                let known = known_terms
                    .iter()
                    .fold(Elem::ZERO, |acc, &(r, v)| f.add(acc, f.mul(v, powers[r][i])));
                residual[i] = f.sub(resp, known);
            }
            let clean = &cert.clean_sets[l];
            let values: Vec<Elem> = clean.iter().map(|&i| residual[i]).collect();
            let decoded = decode_info_set(&values, clean, &code).map_err(|e| {
                decode_err(format!("column {j}, query {l}: clean set decode failed: {e}"))
            })?;
            for (&r, &v) in unknown.iter().zip(&decoded.coeffs) {
                ledger.set(l, r, j, v);
            }
            for &(r, v) in &known_terms {
                ledger.set(l, r, j, v);
            }
            for (r, src) in step.rows.iter().enumerate() {
                if *src == RowSource::Zero {
                    ledger.set(l, r, j, Elem::ZERO);
                }
            }
            for (s, &i) in scheme.placement.servers[l].iter().enumerate() {
                harvested[s].push((i, f.sub(residual[i], decoded.codeword[i])));
            }
        }

        for (s, cells) in harvested.iter().enumerate() {
            let mut known_terms: Vec<(usize, Elem)> = Vec::new();
            for (r, src) in step.rows.iter().enumerate() {
                match *src {
                    RowSource::Unknown => {}
                    RowSource::Zero => msg[mslot(s, r, j)] = Some(Elem::ZERO),
                    RowSource::Mirror { row, column } => {
                        let v = msg[mslot(s, row, column)].ok_or_else(|| {
                            decode_err(format!("file entry ({row}, {column}) of stripe {s} missing"))
                        })?;
                        msg[mslot(s, r, j)] = Some(v);
                        known_terms.push((r, v));
                    }
                }
            }
            let set = &cert.stripe_sets[s];
            let values = set
                .iter()
                .map(|&i| {
                    let (_, c) = cells
                        .iter()
                        .find(|(server, _)| *server == i)
                        .ok_or_else(|| decode_err(format!("no symbol from server {i}")))?;
                    let known = known_terms
                        .iter()
                        .fold(Elem::ZERO, |acc, &(r, v)| f.add(acc, f.mul(v, powers[r][i])));
                    Ok(f.sub(*c, known))
                })
                .collect::<Result<Vec<_>>>()?;
            let decoded = decode_info_set(&values, set, &code).map_err(|e| {
                decode_err(format!("column {j}, stripe {s}: solve failed: {e}"))
            })?;
            for (&r, &v) in unknown.iter().zip(&decoded.coeffs) {
                msg[mslot(s, r, j)] = Some(v);
            }
        }
    }

    let mut mats = Vec::with_capacity(stripes);
    for s in 0..stripes {
        let mut m = crate::galois::Mat::zeros(f, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = msg[mslot(s, r, c)]
                    .ok_or_else(|| decode_err(format!("entry ({r}, {c}) of stripe {s} never decoded")))?;
                m.set(r, c, v);
            }
        }
        mats.push(m);
    }
    let message = MessageArray::from_stripes(g.family, mats);
    let file = unpack_message(&message, params)
        .map_err(|e| decode_err(format!("recovered array is inconsistent: {e}")))?;
    Ok(Retrieved {
        file,
        message,
        ledger,
    })
}

/// Runs query generation, every server's projection and reconstruction in
/// process. Used by tests and by callers that do not need a transport.
pub fn retrieve_direct(
    scheme: &LayeredScheme,
    store: &crate::pm_codes::NodeStore,
    target: usize,
    seed: u64,
) -> Result<(Retrieved, QuerySet, ResponseBundle)> {
    let params = scheme.params();
    let g = params.geometry;
    let mut masks = SeededMasks::new(params.field, seed);
    let qs = QuerySet::generate(
        params.field,
        g.n,
        scheme.placement(),
        store.files(),
        target,
        &mut masks,
    )?;
    let schedule = scheme.schedule();
    let mut bundle = ResponseBundle::new(schedule.clone());
    for i in 0..g.n {
        let payload = respond(i, store.share(i), qs.server_query(i), &schedule, &g, params.field)?;
        bundle.insert_server(i, &payload)?;
    }
    let out = reconstruct(scheme, &bundle, &qs)?;
    Ok((out, qs, bundle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested_rs::EvalPoints;

    #[test]
    fn combination_search_finds_later_subsets() {
        let f = Field::new(13).unwrap();
        let x = EvalPoints::new(f, [1u64, 12, 2, 11].iter().map(|&v| f.elem(v)).collect()).unwrap();
        // span{1, x^2}: {1, 12} and {2, 11} collide, {1, 2} does not
        let code = ExponentCode::msr_layer(x, 2, 1).unwrap();
        assert_eq!(find_info_subset(&[0, 1, 2], 2, &code), Some(alloc::vec![0, 2]));
        assert_eq!(find_info_subset(&[0, 1], 2, &code), None);
        assert_eq!(find_info_subset(&[2, 3], 2, &code), None);
        assert_eq!(find_info_subset(&[1, 3], 2, &code), Some(alloc::vec![1, 3]));
    }

    #[test]
    fn schedule_counts() {
        let steps = alloc::vec![
            ColumnStep { column: 1, first_server: 0, queries: 2, rows: alloc::vec![] },
            ColumnStep { column: 0, first_server: 2, queries: 1, rows: alloc::vec![] },
        ];
        let s = Schedule::from_steps(4, &steps);
        assert_eq!(s.total_downloads(), 8 + 2);
        assert_eq!(s.per_server_counts(), alloc::vec![2, 2, 3, 3]);
        assert_eq!(s.pairs_for(3), alloc::vec![(1, 0), (1, 1), (0, 0)]);
    }
}
