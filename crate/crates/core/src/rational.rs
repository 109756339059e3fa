//! Exact rational matrices: reduced row echelon form, rank and nullspace.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_i64(rows: &[Vec<i64>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, Rational::from_integer(BigInt::from(v)));
            }
        }
        m
    }

    /// Exact conversion of finite floats (every f64 is a dyadic rational).
    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Option<Self> {
        let data = data
            .iter()
            .map(|&v| Rational::from_float(v))
            .collect::<Option<Vec<_>>>()?;
        Some(RationalMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// In-place RREF; returns pivot columns in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self.get(r, c).recip();
            for j in c..self.cols {
                let v = self.get(r, j) * &inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let factor = self.get(i, c).clone();
                for j in c..self.cols {
                    let v = self.get(i, j) - &factor * self.get(r, j);
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Nullspace basis, one vector per free column in increasing order,
    /// each scaled to coprime integers with a positive leading entry.
    pub fn nullspace(&self) -> Vec<Vec<BigInt>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -m.get(i, f).clone();
                }
                normalize_integer(&v)
            })
            .collect()
    }

    /// Indices of a maximal linearly independent subset of rows, chosen
    /// greedily in order.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        let mut rank = 0;
        for i in 0..self.rows {
            let mut trial = Self::zeros(kept.len() + 1, self.cols);
            for (k, &r) in kept.iter().chain(std::iter::once(&i)).enumerate() {
                for j in 0..self.cols {
                    trial.set(k, j, self.get(r, j).clone());
                }
            }
            let r = trial.rank();
            if r > rank {
                rank = r;
                kept.push(i);
            }
        }
        kept
    }
}

fn normalize_integer(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.is_negative() { -BigInt::one() } else { BigInt::one() })
        .unwrap_or_else(BigInt::one);
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g * &sign).collect()
}

pub fn to_f64(v: &[BigInt]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

pub fn rank_i64(rows: &[Vec<i64>], cols: usize) -> usize {
    RationalMatrix::from_i64(rows, cols).rank()
}

pub fn nullity_i64(rows: &[Vec<i64>], cols: usize) -> usize {
    cols - rank_i64(rows, cols)
}
