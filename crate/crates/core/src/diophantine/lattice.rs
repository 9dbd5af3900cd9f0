//! Integer matrices and unimodular completion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::torus::TorusPoint;
use crate::{Error, Result};

/// Dense square-or-rectangular matrix of big integers, row major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl TryFrom<Vec<Vec<String>>> for IntMatrix {
    type Error = Error;

    fn try_from(raw: Vec<Vec<String>>) -> Result<Self> {
        let rows = raw
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| {
                        s.parse::<BigInt>()
                            .map_err(|_| Error::Parse(format!("bad integer '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        IntMatrix::from_rows(rows)
    }
}

impl From<IntMatrix> for Vec<Vec<String>> {
    fn from(m: IntMatrix) -> Self {
        m.rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect()
    }
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::invalid("ragged matrix"));
            }
        }
        Ok(IntMatrix { rows })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<Self> {
        IntMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut rows = vec![vec![BigInt::zero(); n]; n];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = BigInt::one();
        }
        IntMatrix { rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.ncols(), other.nrows(), "matrix shape mismatch");
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..other.ncols())
                    .map(|j| {
                        r.iter()
                            .zip(&other.rows)
                            .filter(|(a, _)| !a.is_zero())
                            .map(|(a, o)| a * &o[j])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        IntMatrix { rows }
    }

    /// `A·x` for a rational column vector.
    pub fn apply(&self, x: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.ncols(), x.len(), "matrix shape mismatch");
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(BigRational::zero(), |acc, (a, v)| {
                        acc + BigRational::from_integer(a.clone()) * v
                    })
            })
            .collect()
    }

    /// `A·θ mod 1`.
    pub fn apply_torus(&self, theta: &TorusPoint) -> TorusPoint {
        TorusPoint::new(self.apply(theta.coords()))
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> BigInt {
        self.rows
            .iter()
            .flatten()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Largest absolute row sum, the `ℓ∞ → ℓ∞` operator norm.
    pub fn max_row_sum(&self) -> BigInt {
        self.rows
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<BigInt>())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Frobenius norm squared, an upper bound for the squared spectral norm.
    pub fn frobenius_sq(&self) -> BigInt {
        self.rows.iter().flatten().map(|x| x * x).sum()
    }

    /// `diag(self, I_k)`.
    pub fn embed(&self, n: usize) -> IntMatrix {
        let k = self.nrows();
        assert!(k <= n && self.ncols() == k);
        let mut out = IntMatrix::identity(n);
        for i in 0..k {
            out.rows[i][..k].clone_from_slice(&self.rows[i]);
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.nrows();
        assert_eq!(n, self.ncols(), "determinant of a non-square matrix");
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.rows.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    fn is_identity(&self) -> bool {
        *self == IntMatrix::identity(self.nrows())
    }
}

/// An integer chart `L` straightening a subtorus onto `T^{d'} × {0}^{d-d'}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtorusChart {
    pub ambient_dim: usize,
    pub dim: usize,
    pub matrix: IntMatrix,
    pub inverse: IntMatrix,
    #[serde(with = "crate::torus::big_string")]
    pub complexity: BigInt,
}

impl SubtorusChart {
    pub fn identity(d: usize) -> Self {
        SubtorusChart {
            ambient_dim: d,
            dim: d,
            matrix: IntMatrix::identity(d),
            inverse: IntMatrix::identity(d),
            complexity: if d == 0 { BigInt::zero() } else { BigInt::one() },
        }
    }

    pub(crate) fn new(dim: usize, matrix: IntMatrix, inverse: IntMatrix) -> Self {
        SubtorusChart {
            ambient_dim: matrix.nrows(),
            dim,
            complexity: matrix.max_abs(),
            matrix,
            inverse,
        }
    }

    /// `|det L| = 1`, `L·L⁻¹ = I` and the recorded complexity is `max |L_ij|`.
    pub fn is_valid(&self) -> bool {
        let d = self.ambient_dim;
        self.matrix.nrows() == d
            && self.matrix.ncols() == d
            && self.inverse.nrows() == d
            && self.dim <= d
            && self.matrix.det().abs().is_one()
            && self.matrix.mul(&self.inverse).is_identity()
            && self.complexity == self.matrix.max_abs()
    }

    /// Chart coordinates of `x`: the first `dim` entries of `L·x`.
    pub fn to_chart(&self, x: &TorusPoint) -> TorusPoint {
        let y = self.matrix.apply_torus(x);
        y.project(&(0..self.dim).collect::<Vec<_>>())
    }

    /// `L⁻¹(z, 0)`.
    pub fn from_chart(&self, z: &TorusPoint) -> TorusPoint {
        assert_eq!(z.dim(), self.dim, "chart dimension mismatch");
        let mut full = z.coords().to_vec();
        full.resize(self.ambient_dim, BigRational::zero());
        TorusPoint::new(self.inverse.apply(&full))
    }

    /// True when `L·x` has zero coordinates after position `dim`.
    pub fn contains(&self, x: &TorusPoint) -> bool {
        let y = self.matrix.apply_torus(x);
        y.coords()[self.dim..].iter().all(Zero::is_zero)
    }
}

fn gcd_all(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Nearest integer to `a/b`, ties toward zero; `b > 0`.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = a.div_mod_floor(b);
    let r2 = &r * &two;
    if r2 > *b || (r2 == *b && q.is_negative()) {
        q + 1
    } else {
        q
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Completes a primitive row vector `q'` to `U ∈ GL_n(Z)` whose last row is `q'`.
///
/// Column operations reduce `q'` to `e_n`, the inverse is accumulated
/// alongside, and the rows above the last are then size-reduced greedily.
/// `det U = 1` whenever `n ≥ 2`.
pub fn complete_unimodular(q_prime: &[BigInt]) -> Result<SubtorusChart> {
    let n = q_prime.len();
    if n == 0 {
        return Err(Error::invalid("empty vector"));
    }
    if !gcd_all(q_prime).is_one() {
        return Err(Error::invalid(format!(
            "vector ({}) is not primitive",
            q_prime.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        )));
    }
    let last = n - 1;
    // v = q'·V, w = V⁻¹.
    let mut v = q_prime.to_vec();
    let mut vm = IntMatrix::identity(n).rows;
    let mut wm = IntMatrix::identity(n).rows;
    for j in 0..last {
        if v[j].is_zero() {
            continue;
        }
        let a = v[j].clone();
        let b = v[last].clone();
        let e = a.extended_gcd(&b);
        let (mut g, mut x, mut y) = (e.gcd, e.x, e.y);
        if g.is_negative() {
            g = -g;
            x = -x;
            y = -y;
        }
        let ag = &a / &g;
        let bg = &b / &g;
        for row in vm.iter_mut() {
            let cj = row[j].clone();
            let cl = row[last].clone();
            row[j] = &cj * &bg - &cl * &ag;
            row[last] = &cj * &x + &cl * &y;
        }
        let rj = wm[j].clone();
        let rl = wm[last].clone();
        wm[j] = rj.iter().zip(&rl).map(|(p, q)| &y * p - &x * q).collect();
        wm[last] = rj.iter().zip(&rl).map(|(p, q)| &ag * p + &bg * q).collect();
        v[j] = BigInt::zero();
        v[last] = g;
    }
    if v[last].is_negative() {
        for row in vm.iter_mut() {
            row[last] = -&row[last];
        }
        wm[last] = wm[last].iter().map(|x| -x).collect();
    }
    if n >= 2 && (IntMatrix { rows: wm.clone() }).det().is_negative() {
        wm[0] = wm[0].iter().map(|x| -x).collect();
        for row in vm.iter_mut() {
            row[0] = -&row[0];
        }
    }
    // Greedy size reduction of rows 0..last against all other rows.
    let mut improved = true;
    let mut passes = 0;
    while improved && passes < 64 {
        improved = false;
        passes += 1;
        for i in 0..last {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let nj = dot(&wm[j], &wm[j]);
                let k = round_div(&dot(&wm[i], &wm[j]), &nj);
                if k.is_zero() {
                    continue;
                }
                let cand: Vec<BigInt> = wm[i].iter().zip(&wm[j]).map(|(a, b)| a - &k * b).collect();
                if dot(&cand, &cand) < dot(&wm[i], &wm[i]) {
                    wm[i] = cand;
                    for row in vm.iter_mut() {
                        let add = &k * &row[i];
                        row[j] += add;
                    }
                    improved = true;
                }
            }
        }
    }
    let u = IntMatrix { rows: wm };
    let inv = IntMatrix { rows: vm };
    debug_assert!(u.mul(&inv).is_identity());
    debug_assert_eq!(u.row(last), q_prime);
    Ok(SubtorusChart::new(n - 1, u, inv))
}

/// Integer vector `v` with `q'·v = 1`: the last column of `U⁻¹`.
pub fn bezout_vector(chart: &SubtorusChart) -> Vec<BigInt> {
    chart.inverse.column(chart.ambient_dim - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| x.into()).collect()
    }

    #[test]
    fn examples() {
        let c = complete_unimodular(&big(&[0, 0, 1])).unwrap();
        assert_eq!(c.matrix, IntMatrix::identity(3));

        let c = complete_unimodular(&big(&[1, 0])).unwrap();
        assert_eq!(c.matrix.row(1), &big(&[1, 0])[..]);
        assert!(c.matrix.det().is_one());

        let c = complete_unimodular(&big(&[2, 3])).unwrap();
        assert_eq!(c.matrix, IntMatrix::from_i64(&[&[1, 1], &[2, 3]]).unwrap());
        assert!(c.is_valid());
    }

    #[test]
    fn rejects_non_primitive() {
        assert!(complete_unimodular(&big(&[2, 4])).is_err());
        assert!(complete_unimodular(&big(&[0, 0])).is_err());
    }

    #[test]
    fn negative_and_one_dimensional() {
        let c = complete_unimodular(&big(&[-1])).unwrap();
        assert_eq!(c.matrix.det(), BigInt::from(-1));
        let c = complete_unimodular(&big(&[0, -1])).unwrap();
        assert!(c.matrix.det().is_one());
        assert_eq!(c.matrix.row(1), &big(&[0, -1])[..]);
        let c = complete_unimodular(&big(&[6, -10, 15])).unwrap();
        assert!(c.is_valid());
        assert!(c.matrix.det().is_one());
        let v = bezout_vector(&c);
        assert!(dot(&v, &big(&[6, -10, 15])).is_one());
    }

    #[test]
    fn determinant() {
        let m = IntMatrix::from_i64(&[&[0, 2, 1], &[1, 0, 0], &[3, 1, 1]]).unwrap();
        // 0·(0-0) - 2·(1-0) + 1·(1-0) = -1
        assert_eq!(m.det(), BigInt::from(-1));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"[["0","2","1"],["1","0","0"],["3","1","1"]]"#);
        assert_eq!(serde_json::from_str::<IntMatrix>(&s).unwrap(), m);
    }
}
