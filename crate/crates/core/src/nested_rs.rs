//! Nested Reed-Solomon machinery.
//!
//! Codewords are evaluations of polynomials on a fixed point vector `x`. The
//! degree-ordered monomial basis `gamma_r = (x_1^(r-1), ..., x_n^(r-1))` has
//! the property that its first `j` vectors span `RS_j(x)` on every coordinate
//! subset of size at least `j`, which is what the layered PIR decoders peel.
//!
//! [`ExponentCode`] generalises `RS_j(x)` to the span of an arbitrary set of
//! monomials, so one decoder serves both plain RS codes (`J = [0, j-1]`) and
//! the MSR layer codes `RS_j(x) + x^alpha * RS_j(x)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::galois::{vandermonde, Elem, Field, Mat};

/// Pairwise distinct evaluation points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalPoints {
    field: Field,
    x: Vec<Elem>,
}

impl EvalPoints {
    /// Distinct, nonzero points; requires `n <= q - 1`.
    pub fn new(field: Field, x: Vec<Elem>) -> Result<Self> {
        if x.iter().any(|e| e.is_zero()) {
            return Err(Error::ZeroPoint);
        }
        Self::new_allowing_zero(field, x)
    }

    /// Like [`EvalPoints::new`] but accepts `0` as a point (usable for MBR,
    /// never for MSR where `x^alpha` must be nonzero).
    pub fn new_allowing_zero(field: Field, x: Vec<Elem>) -> Result<Self> {
        if x.len() as u64 > field.modulus() {
            return Err(Error::FieldTooSmall(alloc::format!(
                "{} points requested in F_{}",
                x.len(),
                field.modulus()
            )));
        }
        for (i, a) in x.iter().enumerate() {
            if a.value() >= field.modulus() {
                return Err(Error::InvalidGeometry(alloc::format!(
                    "point {a} is not reduced mod {}",
                    field.modulus()
                )));
            }
            if x[..i].contains(a) {
                return Err(Error::DuplicatePoints);
            }
        }
        Ok(EvalPoints { field, x })
    }

    /// The points `1, 2, ..., n`.
    pub fn consecutive(field: Field, n: usize) -> Result<Self> {
        if n as u64 >= field.modulus() {
            return Err(Error::FieldTooSmall(alloc::format!(
                "{n} nonzero points need q >= {}",
                n + 1
            )));
        }
        Self::new(field, (1..=n as u64).map(|v| field.elem(v)).collect())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn as_slice(&self) -> &[Elem] {
        &self.x
    }

    pub fn get(&self, i: usize) -> Elem {
        self.x[i]
    }

    /// `x_i^e` for every point.
    pub fn power_vector(&self, e: usize) -> Vec<Elem> {
        self.x
            .iter()
            .map(|&x| self.field.pow(x, e as u64))
            .collect()
    }

    /// Same points in a new order: position `t` receives `x[order[t]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.x.len() {
            return Err(Error::LengthMismatch {
                expected: self.x.len(),
                found: order.len(),
            });
        }
        let x = order.iter().map(|&i| self.x[i]).collect();
        EvalPoints::new_allowing_zero(self.field, x)
    }
}

/// Degree-ordered monomial basis `gamma_1, ..., gamma_dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    gammas: Vec<Vec<Elem>>,
}

impl MonomialBasis {
    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[Vec<Elem>] {
        &self.gammas
    }

    /// `gamma_r` with `r` counted from zero (exponent `r`).
    pub fn gamma(&self, r: usize) -> &[Elem] {
        &self.gammas[r]
    }

    /// The vectors as the columns of an `n x dim` matrix.
    pub fn to_matrix(&self, field: Field) -> Mat {
        let n = self.gammas.first().map_or(0, |g| g.len());
        let mut m = Mat::zeros(field, n, self.gammas.len());
        for (c, g) in self.gammas.iter().enumerate() {
            for (r, &v) in g.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }
}

pub fn monomial_basis(points: &EvalPoints, dim: usize) -> Result<MonomialBasis> {
    if dim > points.len() {
        return Err(Error::DimTooLarge {
            dim,
            max: points.len(),
        });
    }
    Ok(MonomialBasis {
        gammas: (0..dim).map(|e| points.power_vector(e)).collect(),
    })
}

/// Evaluates `sum_r coeffs[r] * x^r` at every point (Horner).
pub fn rs_encode(coeffs: &[Elem], points: &EvalPoints) -> Result<Vec<Elem>> {
    if coeffs.len() > points.len() {
        return Err(Error::DimTooLarge {
            dim: coeffs.len(),
            max: points.len(),
        });
    }
    let f = points.field();
    Ok(points
        .as_slice()
        .iter()
        .map(|&x| {
            coeffs
                .iter()
                .rev()
                .fold(Elem::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
        })
        .collect())
}

/// Component-wise product.
pub fn star(field: Field, a: &[Elem], b: &[Elem]) -> Result<Vec<Elem>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&u, &v)| field.mul(u, v)).collect())
}

/// Span of the monomials `{x^e : e in J}` evaluated on `points`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentCode {
    exponents: Vec<usize>,
    points: EvalPoints,
}

/// Result of an information-set decode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    /// Coefficients aligned with [`ExponentCode::exponents`].
    pub coeffs: Vec<Elem>,
    pub codeword: Vec<Elem>,
}

impl ExponentCode {
    pub fn new(points: EvalPoints, mut exponents: Vec<usize>) -> Result<Self> {
        exponents.sort_unstable();
        exponents.dedup();
        if let Some(&max) = exponents.last() {
            if max >= points.len() {
                return Err(Error::DimTooLarge {
                    dim: max + 1,
                    max: points.len(),
                });
            }
        }
        Ok(ExponentCode { exponents, points })
    }

    /// `RS_j(x)`: exponents `0..j`.
    pub fn reed_solomon(points: EvalPoints, j: usize) -> Result<Self> {
        Self::new(points, (0..j).collect())
    }

    /// `RS_j(x) + x^alpha * RS_j(x)`: exponents `[0, j) U [alpha, alpha + j)`.
    pub fn msr_layer(points: EvalPoints, alpha: usize, j: usize) -> Result<Self> {
        if j > alpha {
            return Err(Error::InvalidGeometry(alloc::format!(
                "layer {j} exceeds alpha = {alpha}"
            )));
        }
        Self::new(points, (0..j).chain(alpha..alpha + j).collect())
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    pub fn points(&self) -> &EvalPoints {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// `|I| x |J|` matrix `(x_i^e)`.
    pub fn matrix_on(&self, index_set: &[usize]) -> Mat {
        let f = self.points.field();
        let mut m = Mat::zeros(f, index_set.len(), self.exponents.len());
        for (r, &i) in index_set.iter().enumerate() {
            let x = self.points.get(i);
            for (c, &e) in self.exponents.iter().enumerate() {
                m.set(r, c, f.pow(x, e as u64));
            }
        }
        m
    }

    /// Codeword with the given coefficients (aligned with the exponents).
    pub fn encode(&self, coeffs: &[Elem]) -> Result<Vec<Elem>> {
        if coeffs.len() != self.exponents.len() {
            return Err(Error::LengthMismatch {
                expected: self.exponents.len(),
                found: coeffs.len(),
            });
        }
        let all: Vec<usize> = (0..self.points.len()).collect();
        self.matrix_on(&all).mul_vec(coeffs)
    }

    fn check_index_set(&self, index_set: &[usize]) -> Result<()> {
        let distinct = index_set
            .iter()
            .enumerate()
            .all(|(t, i)| !index_set[..t].contains(i));
        if !distinct || index_set.len() != self.exponents.len() {
            let unique = index_set
                .iter()
                .enumerate()
                .filter(|(t, i)| !index_set[..*t].contains(i))
                .count();
            return Err(Error::SizeMismatch {
                expected: self.exponents.len(),
                found: unique,
            });
        }
        if index_set.iter().any(|&i| i >= self.points.len()) {
            return Err(Error::BadSubset);
        }
        Ok(())
    }
}

/// True iff the restriction to `index_set` determines codewords uniquely.
pub fn is_info_set(index_set: &[usize], code: &ExponentCode) -> Result<bool> {
    code.check_index_set(index_set)?;
    Ok(code.matrix_on(index_set).rank() == code.dim())
}

/// Recovers the unique codeword agreeing with `values` on `index_set`.
pub fn decode_info_set(
    values: &[Elem],
    index_set: &[usize],
    code: &ExponentCode,
) -> Result<Decoded> {
    code.check_index_set(index_set)?;
    if values.len() != index_set.len() {
        return Err(Error::LengthMismatch {
            expected: index_set.len(),
            found: values.len(),
        });
    }
    let coeffs = match code.matrix_on(index_set).solve(values) {
        Ok(c) => c,
        Err(Error::SingularMatrix) => return Err(Error::NotInformationSet),
        Err(e) => return Err(e),
    };
    let codeword = code.encode(&coeffs)?;
    Ok(Decoded { coeffs, codeword })
}

/// Convenience: the full-length vector `sum_{e in J} coeffs[e] x^e` from
/// `(exponent, coefficient)` pairs.
pub fn evaluate_terms(points: &EvalPoints, terms: &[(usize, Elem)]) -> Vec<Elem> {
    let f = points.field();
    points
        .as_slice()
        .iter()
        .map(|&x| {
            terms.iter().fold(Elem::ZERO, |acc, &(e, c)| {
                f.add(acc, f.mul(c, f.pow(x, e as u64)))
            })
        })
        .collect()
}

/// Vandermonde generator of `RS_dim(x)`, i.e. the basis as matrix columns.
pub fn generator(points: &EvalPoints, dim: usize) -> Result<Mat> {
    if dim > points.len() {
        return Err(Error::DimTooLarge {
            dim,
            max: points.len(),
        });
    }
    vandermonde(points.field(), points.as_slice(), dim)
}
