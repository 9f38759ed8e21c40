//! Polynomial curves in C^n and the characteristic projectors built from them.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::{CVector, HermitianProjector, C64};

/// Vector of polynomials in one variable. `coeffs[i][d]` is the coefficient
/// of `w^d` in component `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurve {
    pub coeffs: Vec<Vec<C64>>,
}

impl PolyCurve {
    pub fn new(coeffs: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("curve has no components".into()));
        }
        Ok(Self { coeffs })
    }

    /// Constant curve.
    pub fn constant(v: &[C64]) -> Self {
        Self { coeffs: v.iter().map(|z| vec![*z]).collect() }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| *z == C64::from(0.0)))
    }

    pub fn eval(&self, w: C64) -> CVector {
        CVector::from_iterator(
            self.n(),
            self.coeffs.iter().map(|c| c.iter().rev().fold(C64::from(0.0), |acc, a| acc * w + a)),
        )
    }

    pub fn derivative_eval(&self, w: C64) -> CVector {
        CVector::from_iterator(
            self.n(),
            self.coeffs.iter().map(|c| {
                c.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(C64::from(0.0), |acc, (d, a)| acc * w + a * d as f64)
            }),
        )
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &PolyCurve, k: C64) -> Result<PolyCurve> {
        if self.n() != other.n() {
            return Err(Error::Dimension(format!("curves in C^{} and C^{}", self.n(), other.n())));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let len = a.len().max(b.len());
                (0..len)
                    .map(|d| {
                        a.get(d).copied().unwrap_or_default() + k * b.get(d).copied().unwrap_or_default()
                    })
                    .collect()
            })
            .collect();
        Ok(PolyCurve { coeffs })
    }
}

/// `a_0 + eps a_1 + ... + eps^{j-1} a_{j-1}` for the first `j` curves of a chain.
pub fn perturbed_curve(chain: &[PolyCurve], eps: C64, j: usize) -> Result<PolyCurve> {
    let first = chain.first().ok_or_else(|| Error::Invalid("empty curve chain".into()))?;
    let mut out = first.clone();
    let mut e = C64::from(1.0);
    for a in chain.iter().take(j).skip(1) {
        e *= eps;
        out = out.add_scaled(a, e)?;
    }
    Ok(out)
}

/// Taylor coefficients in `eps` of `w(alpha + eps)`, up to `eps^order`.
pub fn characteristic_series(p: &Point, alpha: C64, order: usize) -> Vec<C64> {
    let mut w = vec![C64::from(0.0); order + 1];
    w[0] = p.characteristic(alpha);
    // eta / (alpha + eps) = eta sum_n (-eps)^n / alpha^(n+1)
    for (n, wn) in w.iter_mut().enumerate().skip(1) {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *wn = p.eta() * sign / alpha.powi(n as i32 + 1);
    }
    if order >= 1 {
        w[1] += p.xi();
    }
    w
}

fn series_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut out = vec![C64::from(0.0); n];
    for i in 0..n {
        for j in 0..(n - i) {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// Taylor coefficients in `eps` of `sum_i eps^i a_i(w(eps))` given the series
/// of `w`. Returns one vector per order.
pub fn chain_series(chain: &[PolyCurve], w: &[C64]) -> Vec<CVector> {
    let order = w.len();
    let n = chain[0].n();
    let mut out = vec![CVector::zeros(n); order];
    for (i, curve) in chain.iter().enumerate().take(order) {
        for (comp, coeffs) in curve.coeffs.iter().enumerate() {
            // Horner on truncated series
            let mut acc = vec![C64::from(0.0); order];
            for a in coeffs.iter().rev() {
                acc = series_mul(&acc, w);
                acc[0] += a;
            }
            for k in 0..(order - i) {
                out[k + i][comp] += acc[k];
            }
        }
    }
    out
}

/// A map from space-time to Hermitian projectors.
pub trait ProjectorField: Send + Sync {
    fn n(&self) -> usize;
    fn projector_at(&self, p: &Point) -> Result<HermitianProjector>;
}

/// `pi(p)` = projection onto the span of `f_i(w)`, `w = y + alpha xi + eta / alpha`.
#[derive(Clone, Debug)]
pub struct CharacteristicProjector {
    pub alpha: C64,
    pub curves: Vec<PolyCurve>,
    rank: usize,
}

impl CharacteristicProjector {
    pub fn new(alpha: C64, curves: Vec<PolyCurve>) -> Result<Self> {
        let n = curves.first().map(|c| c.n()).ok_or_else(|| Error::Invalid("no curves".into()))?;
        if curves.iter().any(|c| c.n() != n) {
            return Err(Error::Dimension("curves of unequal dimension".into()));
        }
        if alpha.im == 0.0 || alpha.norm() == 0.0 {
            return Err(Error::RealPole(alpha));
        }
        if curves.iter().all(|c| c.is_zero()) {
            return Err(Error::EmptySpan);
        }
        let rank = generic_rank(&curves);
        Ok(Self { alpha, curves, rank })
    }

    pub fn span_at_w(&self, w: C64) -> Vec<CVector> {
        self.curves.iter().map(|c| c.eval(w)).collect()
    }

    /// Projector at a given value of the characteristic variable. A rank drop
    /// at an isolated `w` is removed by a tiny complex shift of `w`.
    pub fn projector_at_w(&self, w: C64) -> Result<HermitianProjector> {
        let generic = self.rank;
        let p = HermitianProjector::project_onto(&self.span_at_w(w));
        match p {
            Ok(p) if p.rank() == generic => Ok(p),
            _ => {
                let dw = C64::from_polar(1e-9 * (1.0 + w.norm()), 0.7);
                log::warn!("characteristic projector degenerate at w = {w}; perturbing");
                let q = HermitianProjector::project_onto(&self.span_at_w(w + dw))?;
                if q.rank() != generic {
                    return Err(Error::BadProjector(format!("rank drop persists near w = {w}")));
                }
                Ok(q)
            }
        }
    }

    /// Rank of the span at a generic value of `w`.
    pub fn generic_rank(&self) -> usize {
        self.rank
    }
}

fn generic_rank(curves: &[PolyCurve]) -> usize {
    let probe = [C64::new(0.37, 0.11), C64::new(-1.3, 0.77), C64::new(2.1, -0.6)];
    probe
        .iter()
        .filter_map(|w| {
            let span: Vec<CVector> = curves.iter().map(|c| c.eval(*w)).collect();
            HermitianProjector::project_onto(&span).ok()
        })
        .map(|p| p.rank())
        .max()
        .unwrap_or(0)
}

impl ProjectorField for CharacteristicProjector {
    fn n(&self) -> usize {
        self.curves[0].n()
    }

    fn projector_at(&self, p: &Point) -> Result<HermitianProjector> {
        self.projector_at_w(p.characteristic(self.alpha))
    }
}
