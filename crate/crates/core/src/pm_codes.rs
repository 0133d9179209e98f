//! Product-matrix regenerating codes at the MBR and MSR points (`beta = 1`).
//!
//! A stripe of a file is arranged into a structured message matrix `M` and
//! encoded as `C = Psi * M` with a Vandermonde `Psi`; server `i` stores row
//! `i` of `C` for every stripe of every file.
//!
//! * MBR: `M` is `d x d`, `[[S, T], [T^t, 0]]` with `S` symmetric `k x k`.
//! * MSR (`d = 2k - 2`): `M` is `2a x a`, two stacked symmetric `a x a`
//!   blocks, where `a = alpha = k - 1`.
//!
//! Indices in this module are zero-based (servers `0..n`, rows, columns and
//! stripes likewise).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field, Mat};
use crate::nested_rs::{generator, EvalPoints};
use crate::pir_msr::compute_nested_info_sets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mbr,
    Msr,
}

impl Family {
    pub fn code(self) -> u8 {
        match self {
            Family::Mbr => 0,
            Family::Msr => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Family::Mbr),
            1 => Some(Family::Msr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Mbr => "mbr",
            Family::Msr => "msr",
        }
    }
}

/// Validated `(n, k, d)` for one family, independent of the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub d: usize,
}

impl Geometry {
    pub fn new(family: Family, n: usize, k: usize, d: usize) -> Result<Self> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidGeometry(msg));
        if k == 0 {
            return bad("k must be positive".into());
        }
        if k > d {
            return bad(format!("k = {k} exceeds d = {d}"));
        }
        if d >= n {
            return bad(format!("d = {d} must be below n = {n}"));
        }
        match family {
            Family::Mbr => {
                if n < 2 * k {
                    return bad(format!("MBR retrieval needs n >= 2k, got n = {n}, k = {k}"));
                }
            }
            Family::Msr => {
                if d != 2 * k - 2 {
                    return bad(format!("MSR requires d = 2k - 2, got d = {d}, k = {k}"));
                }
                if n < 2 * (k - 1) + 2 {
                    return bad(format!(
                        "MSR needs at least 2 stripes (n - 2 alpha >= 2), got n = {n}, alpha = {}",
                        k - 1
                    ));
                }
            }
        }
        Ok(Geometry { family, n, k, d })
    }

    pub fn alpha(&self) -> usize {
        match self.family {
            Family::Mbr => self.d,
            Family::Msr => self.k - 1,
        }
    }

    pub fn beta(&self) -> usize {
        1
    }

    /// Stripes per file: `n - k` (MBR) or `n - 2 alpha` (MSR).
    pub fn stripes(&self) -> usize {
        match self.family {
            Family::Mbr => self.n - self.k,
            Family::Msr => self.n - 2 * self.alpha(),
        }
    }

    /// Message symbols per stripe, `B`.
    pub fn stripe_symbols(&self) -> usize {
        let (k, d) = (self.k, self.d);
        match self.family {
            Family::Mbr => k * (d - k) + k * (k + 1) / 2,
            Family::Msr => {
                let a = self.alpha();
                a * (a + 1)
            }
        }
    }

    /// Symbols per file, `S * B`.
    pub fn file_symbols(&self) -> usize {
        self.stripes() * self.stripe_symbols()
    }

    /// Rows of the message matrix (`d` or `2 alpha`), i.e. the width of `Psi`.
    pub fn message_rows(&self) -> usize {
        match self.family {
            Family::Mbr => self.d,
            Family::Msr => 2 * self.alpha(),
        }
    }

    /// `sum_{i<k} min(alpha, (d - i) beta)`.
    pub fn cut_set_bound(&self) -> usize {
        (0..self.k)
            .map(|i| self.alpha().min((self.d - i) * self.beta()))
            .sum()
    }

    /// Symbols stored by one server for `files` files.
    pub fn share_len(&self, files: usize) -> usize {
        files * self.stripes() * self.alpha()
    }
}

/// A geometry bound to a field and to the evaluation points of `Psi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeParams {
    pub geometry: Geometry,
    pub field: Field,
    points: EvalPoints,
}

/// Validates a full parameter set and derives the evaluation points.
///
/// MBR uses `x = (1, ..., n)`. MSR picks the smallest nonzero elements with
/// pairwise distinct `alpha`-th powers, then reorders them so that the
/// trailing-prefix sets `[2a - 2j, 2a)` are nested information sets.
pub fn validate_params(family: Family, n: usize, k: usize, d: usize, q: u64) -> Result<CodeParams> {
    let geometry = Geometry::new(family, n, k, d)?;
    let field = Field::new(q)?;
    CodeParams::new(geometry, field)
}

impl CodeParams {
    pub fn new(geometry: Geometry, field: Field) -> Result<Self> {
        let n = geometry.n;
        let q = field.modulus();
        if (q as usize) < n + 1 {
            return Err(Error::FieldTooSmall(format!("q = {q} < n + 1 = {}", n + 1)));
        }
        let points = match geometry.family {
            Family::Mbr => EvalPoints::consecutive(field, n)?,
            Family::Msr => {
                let alpha = geometry.alpha();
                let base = distinct_power_points(field, n, alpha)?;
                let nested = compute_nested_info_sets(&base, alpha)?;
                base.permuted(&nested.order)?
            }
        };
        Ok(CodeParams {
            geometry,
            field,
            points,
        })
    }

    /// Uses caller-chosen points. MSR points are checked for distinct
    /// `alpha`-th powers but not reordered.
    pub fn with_points(geometry: Geometry, points: EvalPoints) -> Result<Self> {
        if points.len() != geometry.n {
            return Err(Error::LengthMismatch {
                expected: geometry.n,
                found: points.len(),
            });
        }
        if geometry.family == Family::Msr {
            let f = points.field();
            let powers = points.power_vector(geometry.alpha());
            if powers.iter().any(|p| p.is_zero()) {
                return Err(Error::ZeroPoint);
            }
            for (i, p) in powers.iter().enumerate() {
                if powers[..i].contains(p) {
                    return Err(Error::FieldTooSmall(format!(
                        "x^{} collides over F_{}",
                        geometry.alpha(),
                        f.modulus()
                    )));
                }
            }
        }
        Ok(CodeParams {
            geometry,
            field: points.field(),
            points,
        })
    }

    pub fn points(&self) -> &EvalPoints {
        &self.points
    }

    /// `n x rows` Vandermonde generator.
    pub fn psi(&self) -> Mat {
        generator(&self.points, self.geometry.message_rows())
            .expect("points validated against geometry")
    }

    /// The vector a helper projects onto when `failed` is repaired:
    /// `psi_failed` (MBR, length `d`) or `phi_failed` (MSR, first `alpha`
    /// powers).
    pub fn repair_vector(&self, failed: usize) -> Vec<Elem> {
        let f = self.field;
        let x = self.points.get(failed);
        let mut p = Elem::ONE;
        (0..self.geometry.alpha())
            .map(|_| {
                let v = p;
                p = f.mul(p, x);
                v
            })
            .collect()
    }
}

fn distinct_power_points(field: Field, n: usize, alpha: usize) -> Result<EvalPoints> {
    let mut chosen = Vec::with_capacity(n);
    let mut powers = Vec::with_capacity(n);
    for v in 1..field.modulus() {
        let x = field.elem(v);
        let p = field.pow(x, alpha as u64);
        if !powers.contains(&p) {
            powers.push(p);
            chosen.push(x);
            if chosen.len() == n {
                return EvalPoints::new(field, chosen);
            }
        }
    }
    Err(Error::FieldTooSmall(format!(
        "x^{alpha} takes only {} distinct values over F_{}, need {n}",
        powers.len(),
        field.modulus()
    )))
}

/// One file as a stack of per-stripe message matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageArray {
    pub family: Family,
    stripes: Vec<Mat>,
}

impl MessageArray {
    pub fn from_stripes(family: Family, stripes: Vec<Mat>) -> Self {
        MessageArray { family, stripes }
    }

    pub fn stripes(&self) -> &[Mat] {
        &self.stripes
    }

    pub fn stripe(&self, s: usize) -> &Mat {
        &self.stripes[s]
    }

    /// `M[i, j, s]`, zero-based.
    pub fn get(&self, i: usize, j: usize, s: usize) -> Elem {
        self.stripes[s].get(i, j)
    }

    pub fn stripe_count(&self) -> usize {
        self.stripes.len()
    }
}

/// Upper-triangle row-major positions of a symmetric `size x size` block.
fn upper_triangle(size: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..size).flat_map(move |i| (i..size).map(move |j| (i, j)))
}

/// Packs `S * B` file symbols, stripe by stripe.
///
/// MBR: `m_1..` fill the upper triangle of `S` row-major, then `T` row-major.
/// MSR: upper triangle of `S_1`, then of `S_2`.
pub fn pack_message(file: &[Elem], params: &CodeParams) -> Result<MessageArray> {
    let g = &params.geometry;
    let b = g.stripe_symbols();
    if file.len() != g.file_symbols() {
        return Err(Error::LengthMismatch {
            expected: g.file_symbols(),
            found: file.len(),
        });
    }
    let stripes = file
        .chunks(b)
        .map(|sym| pack_stripe(sym, g, params.field))
        .collect();
    Ok(MessageArray {
        family: g.family,
        stripes,
    })
}

fn pack_stripe(sym: &[Elem], g: &Geometry, field: Field) -> Mat {
    let mut it = sym.iter().copied();
    let mut next = || it.next().expect("stripe length checked");
    match g.family {
        Family::Mbr => {
            let (k, d) = (g.k, g.d);
            let mut m = Mat::zeros(field, d, d);
            for (i, j) in upper_triangle(k) {
                let v = next();
                m.set(i, j, v);
                m.set(j, i, v);
            }
            for i in 0..k {
                for t in k..d {
                    let v = next();
                    m.set(i, t, v);
                    m.set(t, i, v);
                }
            }
            m
        }
        Family::Msr => {
            let a = g.alpha();
            let mut m = Mat::zeros(field, 2 * a, a);
            for block in [0, a] {
                for (i, j) in upper_triangle(a) {
                    let v = next();
                    m.set(block + i, j, v);
                    m.set(block + j, i, v);
                }
            }
            m
        }
    }
}

/// Inverse of [`pack_message`]; rejects arrays that break the symmetry or
/// zero-block structure.
pub fn unpack_message(msg: &MessageArray, params: &CodeParams) -> Result<Vec<Elem>> {
    let g = &params.geometry;
    if msg.family != g.family {
        return Err(Error::InvariantViolation(format!(
            "array is {:?}, params are {:?}",
            msg.family, g.family
        )));
    }
    if msg.stripes.len() != g.stripes() {
        return Err(Error::LengthMismatch {
            expected: g.stripes(),
            found: msg.stripes.len(),
        });
    }
    let mut out = Vec::with_capacity(g.file_symbols());
    for (s, m) in msg.stripes.iter().enumerate() {
        check_stripe(m, g, s)?;
        match g.family {
            Family::Mbr => {
                for (i, j) in upper_triangle(g.k) {
                    out.push(m.get(i, j));
                }
                for i in 0..g.k {
                    for t in g.k..g.d {
                        out.push(m.get(i, t));
                    }
                }
            }
            Family::Msr => {
                let a = g.alpha();
                for block in [0, a] {
                    for (i, j) in upper_triangle(a) {
                        out.push(m.get(block + i, j));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_stripe(m: &Mat, g: &Geometry, s: usize) -> Result<()> {
    let viol = |msg: alloc::string::String| Err(Error::InvariantViolation(msg));
    match g.family {
        Family::Mbr => {
            if m.rows() != g.d || m.cols() != g.d {
                return viol(format!("stripe {s} is {}x{}", m.rows(), m.cols()));
            }
            for i in 0..g.d {
                for j in 0..g.d {
                    if m.get(i, j) != m.get(j, i) {
                        return viol(format!("stripe {s}: M[{i},{j}] != M[{j},{i}]"));
                    }
                    if i >= g.k && j >= g.k && !m.get(i, j).is_zero() {
                        return viol(format!("stripe {s}: M[{i},{j}] in the zero block"));
                    }
                }
            }
        }
        Family::Msr => {
            let a = g.alpha();
            if m.rows() != 2 * a || m.cols() != a {
                return viol(format!("stripe {s} is {}x{}", m.rows(), m.cols()));
            }
            for block in [0, a] {
                for i in 0..a {
                    for j in 0..a {
                        if m.get(block + i, j) != m.get(block + j, i) {
                            return viol(format!(
                                "stripe {s}: block at row {block} not symmetric at ({i},{j})"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Encoded shares of every file, one row per server.
///
/// Server `i` holds `C^f[i, j, s]` ordered by file, then stripe, then column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeStore {
    pub geometry: Geometry,
    files: usize,
    shares: Vec<Vec<Elem>>,
}

impl NodeStore {
    pub fn from_shares(geometry: Geometry, files: usize, shares: Vec<Vec<Elem>>) -> Result<Self> {
        if shares.len() != geometry.n {
            return Err(Error::LengthMismatch {
                expected: geometry.n,
                found: shares.len(),
            });
        }
        let len = geometry.share_len(files);
        if let Some(bad) = shares.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        Ok(NodeStore {
            geometry,
            files,
            shares,
        })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn share(&self, server: usize) -> &[Elem] {
        &self.shares[server]
    }

    pub fn shares(&self) -> &[Vec<Elem>] {
        &self.shares
    }

    pub fn into_shares(self) -> Vec<Vec<Elem>> {
        self.shares
    }

    /// `C^f[i, j, s]`.
    pub fn symbol(&self, server: usize, file: usize, stripe: usize, column: usize) -> Elem {
        self.shares[server][share_index(&self.geometry, file, stripe, column)]
    }
}

/// Position of `C^f[., j, s]` inside a server share.
#[inline]
pub fn share_index(g: &Geometry, file: usize, stripe: usize, column: usize) -> usize {
    (file * g.stripes() + stripe) * g.alpha() + column
}

/// Encodes one file.
pub fn encode(msg: &MessageArray, params: &CodeParams) -> Result<NodeStore> {
    encode_files(core::slice::from_ref(msg), params)
}

/// Encodes several files into one store.
pub fn encode_files(msgs: &[MessageArray], params: &CodeParams) -> Result<NodeStore> {
    let g = params.geometry;
    let psi = params.psi();
    let mut shares = vec![Vec::with_capacity(g.share_len(msgs.len())); g.n];
    for msg in msgs {
        if msg.stripes.len() != g.stripes() {
            return Err(Error::LengthMismatch {
                expected: g.stripes(),
                found: msg.stripes.len(),
            });
        }
        for m in &msg.stripes {
            let c = psi.mul(m)?;
            for (i, share) in shares.iter_mut().enumerate() {
                share.extend_from_slice(c.row(i));
            }
        }
    }
    NodeStore::from_shares(g, msgs.len(), shares)
}

/// Splits a flat database into files of `S * B` symbols, packs and encodes.
pub fn encode_database(symbols: &[Elem], params: &CodeParams) -> Result<NodeStore> {
    let per_file = params.geometry.file_symbols();
    if symbols.is_empty() || !symbols.len().is_multiple_of(per_file) {
        return Err(Error::LengthMismatch {
            expected: per_file * (symbols.len() / per_file).max(1),
            found: symbols.len(),
        });
    }
    let msgs = symbols
        .chunks(per_file)
        .map(|file| pack_message(file, params))
        .collect::<Result<Vec<_>>>()?;
    encode_files(&msgs, params)
}

/// One server's full share, tagged with its (zero-based) index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerShare {
    pub server: usize,
    pub symbols: Vec<Elem>,
}

fn check_distinct(ids: &[usize], n: usize) -> Result<()> {
    for (t, &i) in ids.iter().enumerate() {
        if i >= n || ids[..t].contains(&i) {
            return Err(Error::BadSubset);
        }
    }
    Ok(())
}

/// Data-collector reconstruction of every file from (the first) `k` shares.
pub fn reconstruct_data(shares: &[ServerShare], params: &CodeParams) -> Result<Vec<MessageArray>> {
    let g = params.geometry;
    if shares.len() < g.k {
        return Err(Error::NotEnoughShares {
            needed: g.k,
            got: shares.len(),
        });
    }
    let shares = &shares[..g.k];
    let ids: Vec<usize> = shares.iter().map(|s| s.server).collect();
    check_distinct(&ids, g.n)?;
    let len = shares[0].symbols.len();
    let per_file = g.share_len(1);
    if len == 0 || !len.is_multiple_of(per_file) || shares.iter().any(|s| s.symbols.len() != len) {
        return Err(Error::LengthMismatch {
            expected: per_file,
            found: len,
        });
    }
    let files = len / per_file;
    let psi_k = params.psi().select_rows(&ids);
    let decoder = match g.family {
        Family::Mbr => StripeDecoder::mbr(&psi_k, &g)?,
        Family::Msr => StripeDecoder::msr(&psi_k, params, &ids)?,
    };
    let alpha = g.alpha();
    (0..files)
        .map(|f| {
            let stripes = (0..g.stripes())
                .map(|s| {
                    let mut c = Mat::zeros(params.field, g.k, alpha);
                    for (r, sh) in shares.iter().enumerate() {
                        for j in 0..alpha {
                            c.set(r, j, sh.symbols[share_index(&g, f, s, j)]);
                        }
                    }
                    decoder.decode(&c, &g)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MessageArray {
                family: g.family,
                stripes,
            })
        })
        .collect()
}

enum StripeDecoder {
    Mbr {
        phi_inv: Mat,
        delta: Mat,
    },
    Msr {
        phi: Mat,
        lambdas: Vec<Elem>,
        /// `(Phi_{K \ i})^-1` for each collector row `i`.
        leave_one_out: Vec<Mat>,
        /// Inverse of `Phi` restricted to the first `alpha` collector rows.
        head_inv: Mat,
    },
}

impl StripeDecoder {
    fn mbr(psi_k: &Mat, g: &Geometry) -> Result<Self> {
        let k = g.k;
        let phi = psi_k.select_cols(&(0..k).collect::<Vec<_>>());
        let delta = psi_k.select_cols(&(k..g.d).collect::<Vec<_>>());
        Ok(StripeDecoder::Mbr {
            phi_inv: phi.inverse()?,
            delta,
        })
    }

    fn msr(psi_k: &Mat, params: &CodeParams, ids: &[usize]) -> Result<Self> {
        let g = params.geometry;
        let a = g.alpha();
        let f = params.field;
        let phi = psi_k.select_cols(&(0..a).collect::<Vec<_>>());
        let lambdas: Vec<Elem> = ids
            .iter()
            .map(|&i| f.pow(params.points.get(i), a as u64))
            .collect();
        let leave_one_out = (0..g.k)
            .map(|i| {
                let others: Vec<usize> = (0..g.k).filter(|&r| r != i).collect();
                phi.select_rows(&others).inverse()
            })
            .collect::<Result<Vec<_>>>()?;
        let head_inv = phi.select_rows(&(0..a).collect::<Vec<_>>()).inverse()?;
        Ok(StripeDecoder::Msr {
            phi,
            lambdas,
            leave_one_out,
            head_inv,
        })
    }

    fn decode(&self, c: &Mat, g: &Geometry) -> Result<Mat> {
        match self {
            StripeDecoder::Mbr { phi_inv, delta } => {
                // C = [Phi S + Delta T^t, Phi T]
                let (k, d) = (g.k, g.d);
                let t = phi_inv.mul(&c.select_cols(&(k..d).collect::<Vec<_>>()))?;
                let head = c.select_cols(&(0..k).collect::<Vec<_>>());
                let dt = delta.mul(&t.transpose())?;
                let f = c.field();
                let mut rhs = head.clone();
                for r in 0..k {
                    for j in 0..k {
                        rhs.set(r, j, f.sub(head.get(r, j), dt.get(r, j)));
                    }
                }
                let s = phi_inv.mul(&rhs)?;
                let mut m = Mat::zeros(f, d, d);
                for i in 0..k {
                    for j in 0..k {
                        m.set(i, j, s.get(i, j));
                    }
                    for t_col in 0..d - k {
                        m.set(i, k + t_col, t.get(i, t_col));
                        m.set(k + t_col, i, t.get(i, t_col));
                    }
                }
                Ok(m)
            }
            StripeDecoder::Msr {
                phi,
                lambdas,
                leave_one_out,
                head_inv,
            } => {
                // C Phi^t = P + Lambda Q with P, Q symmetric.
                let f = c.field();
                let a = g.alpha();
                let k = g.k;
                let mixed = c.mul(&phi.transpose())?;
                let mut p = Mat::zeros(f, k, k);
                let mut q = Mat::zeros(f, k, k);
                for i in 0..k {
                    for j in i + 1..k {
                        let den = f.sub(lambdas[i], lambdas[j]);
                        let num = f.sub(mixed.get(i, j), mixed.get(j, i));
                        let qij = f.div(num, den)?;
                        let pij = f.sub(mixed.get(i, j), f.mul(lambdas[i], qij));
                        p.set(i, j, pij);
                        p.set(j, i, pij);
                        q.set(i, j, qij);
                        q.set(j, i, qij);
                    }
                }
                let recover = |sym: &Mat| -> Result<Mat> {
                    // row i of Phi S for the first alpha collector rows
                    let mut u = Mat::zeros(f, a, a);
                    for (i, loo) in leave_one_out.iter().enumerate().take(a) {
                        let rhs: Vec<Elem> = (0..k).filter(|&j| j != i).map(|j| sym.get(i, j)).collect();
                        let ui = loo.mul_vec(&rhs)?;
                        for (c2, v) in ui.into_iter().enumerate() {
                            u.set(i, c2, v);
                        }
                    }
                    head_inv.mul(&u)
                };
                let s1 = recover(&p)?;
                let s2 = recover(&q)?;
                let mut m = Mat::zeros(f, 2 * a, a);
                for i in 0..a {
                    for j in 0..a {
                        m.set(i, j, s1.get(i, j));
                        m.set(a + i, j, s2.get(i, j));
                    }
                }
                Ok(m)
            }
        }
    }
}

/// The `F * S` symbols helper `helper_share` sends to repair `failed`: one
/// inner product `<C[i, ., s], v_failed>` per file and stripe.
pub fn helper_symbols(helper_share: &[Elem], failed: usize, params: &CodeParams) -> Vec<Elem> {
    let v = params.repair_vector(failed);
    helper_share
        .chunks(params.geometry.alpha())
        .map(|row| params.field.dot(row, &v))
        .collect()
}

/// Exact repair of server `failed` from (the first) `d` helper transmissions.
pub fn repair_node(
    failed: usize,
    helpers: &[(usize, Vec<Elem>)],
    params: &CodeParams,
) -> Result<Vec<Elem>> {
    let g = params.geometry;
    if failed >= g.n {
        return Err(Error::BadSubset);
    }
    if let Some(&(i, _)) = helpers.iter().find(|(i, _)| *i == failed) {
        return Err(Error::HelperOverlap(i));
    }
    if helpers.len() < g.d {
        return Err(Error::NotEnoughHelpers {
            needed: g.d,
            got: helpers.len(),
        });
    }
    let helpers = &helpers[..g.d];
    let ids: Vec<usize> = helpers.iter().map(|(i, _)| *i).collect();
    check_distinct(&ids, g.n)?;
    let per = helpers[0].1.len();
    if per == 0 || !per.is_multiple_of(g.stripes()) || helpers.iter().any(|(_, h)| h.len() != per) {
        return Err(Error::LengthMismatch {
            expected: g.stripes(),
            found: per,
        });
    }
    let f = params.field;
    let a = g.alpha();
    let psi_inv = params.psi().select_rows(&ids).inverse()?;
    let lambda = f.pow(params.points.get(failed), a as u64);
    let mut row = Vec::with_capacity(per * a);
    for t in 0..per {
        let received: Vec<Elem> = helpers.iter().map(|(_, h)| h[t]).collect();
        // y = M v_failed
        let y = psi_inv.mul_vec(&received)?;
        match g.family {
            Family::Mbr => row.extend_from_slice(&y),
            Family::Msr => {
                row.extend((0..a).map(|j| f.add(y[j], f.mul(lambda, y[a + j]))));
            }
        }
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elems(f: Field, v: &[u64]) -> Vec<Elem> {
        v.iter().map(|&x| f.elem(x)).collect()
    }

    #[test]
    fn params_examples() {
        let p = validate_params(Family::Mbr, 6, 3, 4, 7).unwrap();
        assert_eq!(p.geometry.stripe_symbols(), 9);
        assert_eq!(p.geometry.stripes(), 3);
        assert_eq!(p.geometry.alpha(), 4);
        let p = validate_params(Family::Msr, 6, 3, 4, 13).unwrap();
        assert_eq!(p.geometry.stripe_symbols(), 6);
        assert_eq!(p.geometry.alpha(), 2);
        assert_eq!(p.geometry.stripes(), 2);
        assert!(matches!(
            validate_params(Family::Mbr, 6, 4, 3, 7),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            validate_params(Family::Mbr, 6, 3, 4, 5),
            Err(Error::FieldTooSmall(_))
        ));
        assert!(matches!(
            validate_params(Family::Msr, 6, 3, 5, 13),
            Err(Error::InvalidGeometry(_))
        ));
        // squares of F_7 \ {0}: only three classes
        assert!(matches!(
            validate_params(Family::Msr, 6, 3, 4, 7),
            Err(Error::FieldTooSmall(_))
        ));
        assert!(matches!(
            validate_params(Family::Mbr, 6, 3, 4, 8),
            Err(Error::CompositeModulus(8))
        ));
    }

    #[test]
    fn example_points_are_kept() {
        let p = validate_params(Family::Msr, 6, 3, 4, 13).unwrap();
        let f = p.field;
        assert_eq!(p.points().as_slice(), elems(f, &[1, 2, 3, 4, 5, 6]).as_slice());
        let psi = p.psi();
        assert_eq!(psi.row(4), elems(f, &[1, 5, 12, 8]).as_slice());
        assert_eq!(psi.row(5), elems(f, &[1, 6, 10, 8]).as_slice());
    }

    #[test]
    fn cut_set_equality() {
        for n in 2..=16 {
            for k in 1..n {
                for d in k..n {
                    for fam in [Family::Mbr, Family::Msr] {
                        if let Ok(g) = Geometry::new(fam, n, k, d) {
                            assert_eq!(g.cut_set_bound(), g.stripe_symbols(), "{g:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pack_mbr_layout() {
        let p = validate_params(Family::Mbr, 6, 3, 4, 7).unwrap();
        let f = p.field;
        // three stripes; stripe 0 carries m_1..m_9 = 1..9 mod 7
        let file: Vec<Elem> = (1..=27).map(|v| f.elem(v)).collect();
        let m = pack_message(&file, &p).unwrap();
        let s0 = m.stripe(0);
        assert_eq!(s0.get(0, 3), f.elem(7)); // m_7
        assert_eq!(s0.get(2, 2), f.elem(6)); // m_6
        assert_eq!(s0.get(1, 0), f.elem(2));
        assert_eq!(s0.get(3, 2), f.elem(9));
        assert_eq!(s0.get(3, 3), Elem::ZERO);
        assert_eq!(unpack_message(&m, &p).unwrap(), file);
    }

    #[test]
    fn pack_msr_layout() {
        let p = validate_params(Family::Msr, 6, 3, 4, 13).unwrap();
        let f = p.field;
        let file: Vec<Elem> = (1..=12).map(|v| f.elem(v)).collect();
        let m = pack_message(&file, &p).unwrap();
        let expect = Mat::from_u64(f, &[&[1, 2], &[2, 3], &[4, 5], &[5, 6]]).unwrap();
        assert_eq!(m.stripe(0), &expect);
        assert_eq!(unpack_message(&m, &p).unwrap(), file);
    }

    #[test]
    fn pack_errors_and_zero() {
        let p = validate_params(Family::Mbr, 6, 3, 4, 7).unwrap();
        let zero = vec![Elem::ZERO; 27];
        let m = pack_message(&zero, &p).unwrap();
        assert!(m.stripes().iter().all(Mat::is_zero));
        assert_eq!(unpack_message(&m, &p).unwrap(), zero);
        assert!(matches!(
            pack_message(&zero[..26], &p),
            Err(Error::LengthMismatch { .. })
        ));
        let mut bad = m.clone();
        bad.stripes[1].set(0, 1, Elem::ONE);
        assert!(matches!(
            unpack_message(&bad, &p),
            Err(Error::InvariantViolation(_))
        ));
        let mut bad = m;
        bad.stripes[0].set(3, 3, Elem::ONE);
        assert!(matches!(
            unpack_message(&bad, &p),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn encode_zero_and_sizes() {
        let p = validate_params(Family::Mbr, 6, 3, 4, 7).unwrap();
        let store = encode_database(&vec![Elem::ZERO; 27 * 2], &p).unwrap();
        assert_eq!(store.files(), 2);
        assert!(store.shares().iter().all(|s| s.iter().all(|e| e.is_zero())));
        // alpha = d = 4 symbols per stripe per file
        assert_eq!(store.share(0).len(), 2 * 3 * 4);
    }

    #[test]
    fn reconstruct_and_repair_errors() {
        let p = validate_params(Family::Mbr, 6, 3, 4, 7).unwrap();
        let f = p.field;
        let file: Vec<Elem> = (0..27).map(|v| f.elem(v * 3 + 1)).collect();
        let store = encode_database(&file, &p).unwrap();
        let two: Vec<ServerShare> = (0..2)
            .map(|i| ServerShare {
                server: i,
                symbols: store.share(i).to_vec(),
            })
            .collect();
        assert_eq!(
            reconstruct_data(&two, &p),
            Err(Error::NotEnoughShares { needed: 3, got: 2 })
        );
        let dup: Vec<ServerShare> = [0, 1, 1]
            .iter()
            .map(|&i| ServerShare {
                server: i,
                symbols: store.share(i).to_vec(),
            })
            .collect();
        assert_eq!(reconstruct_data(&dup, &p), Err(Error::BadSubset));

        let helpers: Vec<(usize, Vec<Elem>)> = [0, 2, 3]
            .iter()
            .map(|&i| (i, helper_symbols(store.share(i), 1, &p)))
            .collect();
        assert_eq!(
            repair_node(1, &helpers, &p),
            Err(Error::NotEnoughHelpers { needed: 4, got: 3 })
        );
        let overlap: Vec<(usize, Vec<Elem>)> = [0, 1, 2, 3]
            .iter()
            .map(|&i| (i, helper_symbols(store.share(i), 1, &p)))
            .collect();
        assert_eq!(repair_node(1, &overlap, &p), Err(Error::HelperOverlap(1)));
    }
}
