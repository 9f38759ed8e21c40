//! Small dense complex matrices, Hermitian projectors and matrix-valued
//! rational functions of one complex variable kept in partial-fraction form.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default relative cutoff on singular values when deciding the rank of a span.
pub const RANK_TOL: f64 = 1e-10;

/// Two poles closer than this (relative) are treated as the same pole.
pub fn same_pole(a: C64, b: C64) -> bool {
    (a - b).norm() < 1e-8 * (1.0 + a.norm())
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 2 && m.ncols() == 2 {
        // closed form for the common 2x2 case
        let fro2 = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        return ((fro2 + disc) / 2.0).sqrt();
    }
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Orthogonalizes the columns of `m` by one-sided Jacobi rotations. The
/// returned columns are mutually orthogonal and their norms are the singular
/// values of `m` (padded with zeros when there are more columns than rows).
pub fn jacobi_columns(m: &CMatrix) -> Vec<CVector> {
    let mut cols: Vec<CVector> = m.column_iter().map(|c| c.into_owned()).collect();
    let k = cols.len();
    for _sweep in 0..40 {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let a = cols[i].norm_squared();
                let b = cols[j].norm_squared();
                let g = cols[i].dotc(&cols[j]);
                let gn = g.norm();
                if gn == 0.0 || gn <= 1e-15 * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                // rephase column j so that the inner product is real and positive
                let phase = g / gn;
                let bj = &cols[j] * phase.conj();
                let zeta = (b - a) / (2.0 * gn);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let ai = &cols[i] * C64::from(cs) - &bj * C64::from(sn);
                let aj = &cols[i] * C64::from(sn) + &bj * C64::from(cs);
                cols[i] = ai;
                cols[j] = aj;
            }
        }
        if !rotated {
            break;
        }
    }
    cols
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    jacobi_columns(m).iter().map(|c| c.norm()).collect()
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() == 2 && m.ncols() == 2 {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let scale = fro_norm(m).powi(2);
        if det.norm() <= 1e-14 * scale || !det.is_finite() {
            return Err(Error::Singular);
        }
        let inv = CMatrix::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]);
        return Ok(inv / det);
    }
    m.clone().try_inverse().ok_or(Error::Singular)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Smallest singular value divided by the largest one.
pub fn inverse_condition(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    sv.iter().copied().fold(f64::INFINITY, f64::min) / max
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

pub fn anti_hermitian_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * C64::from(0.5)
}

/// Square root and inverse square root of a Hermitian positive definite
/// matrix by the Denman-Beavers iteration.
pub fn hermitian_sqrt(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    let mut y = hermitian_part(m);
    let mut z = identity(n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let y2 = (&y + zi) * C64::from(0.5);
        let z2 = (&z + yi) * C64::from(0.5);
        let d = op_norm(&(&y2 - &y)) / op_norm(&y2).max(1e-300);
        y = y2;
        z = z2;
        if d < 1e-15 {
            break;
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok((hermitian_part(&y), hermitian_part(&z)))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let h = hermitian_part(m);
    match h.nrows() {
        0 => 0.0,
        1 => h[(0, 0)].re,
        2 => {
            let (a, d) = (h[(0, 0)].re, h[(1, 1)].re);
            let b = h[(0, 1)].norm();
            (a + d) / 2.0 - (((a - d) / 2.0).powi(2) + b * b).sqrt()
        }
        _ => h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Orthogonal projector onto a subspace of C^n.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianProjector {
    matrix: CMatrix,
    rank: usize,
}

impl HermitianProjector {
    pub fn zero(n: usize) -> Self {
        Self { matrix: zeros(n), rank: 0 }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: identity(n), rank: n }
    }

    /// Projector onto the span of the given vectors, rank decided with [`RANK_TOL`].
    pub fn project_onto(vectors: &[CVector]) -> Result<Self> {
        Self::project_onto_tol(vectors, RANK_TOL)
    }

    pub fn project_onto_tol(vectors: &[CVector], tol: f64) -> Result<Self> {
        let n = vectors.first().map(|v| v.len()).ok_or(Error::EmptySpan)?;
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("vectors of unequal length".into()));
        }
        let m = CMatrix::from_columns(vectors);
        Self::onto_columns(&m, tol)
    }

    /// Projector onto the column space of `m`.
    pub fn onto_columns(m: &CMatrix, tol: f64) -> Result<Self> {
        let n = m.nrows();
        if m.iter().any(|z| !z.is_finite()) {
            return Err(Error::Invalid("non-finite entries in span".into()));
        }
        let cols = jacobi_columns(m);
        let smax = cols.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if smax == 0.0 {
            return Err(Error::EmptySpan);
        }
        let mut p = zeros(n);
        let mut rank = 0;
        for col in &cols {
            let s = col.norm();
            if s >= tol * smax {
                let u = col / C64::from(s);
                p += &u * u.adjoint();
                rank += 1;
            }
        }
        Ok(Self { matrix: p, rank })
    }

    /// Projector onto the image of `m`.
    pub fn image_of(m: &CMatrix, tol: f64) -> Result<Self> {
        Self::onto_columns(m, tol)
    }

    /// Projector onto the kernel of `m`.
    pub fn kernel_of(m: &CMatrix, tol: f64) -> Result<Self> {
        if fro_norm(m) == 0.0 {
            return Ok(Self::identity(m.ncols()));
        }
        Ok(Self::onto_columns(&m.adjoint(), tol)?.perp())
    }

    pub fn perp(&self) -> Self {
        let n = self.n();
        Self { matrix: identity(n) - &self.matrix, rank: n - self.rank }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Columns spanning the image of the projector.
    pub fn image_basis(&self) -> Vec<CVector> {
        let mut cols = jacobi_columns(&self.matrix);
        cols.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        cols.into_iter().take(self.rank).map(|c| {
            let s = c.norm();
            c / C64::from(s)
        }).collect()
    }

    /// Max of idempotence and self-adjointness defects.
    pub fn defect(&self) -> f64 {
        let p = &self.matrix;
        op_norm(&(p * p - p)).max(op_norm(&(p - p.adjoint())))
    }
}

/// A pole of a rational map together with its Laurent coefficients,
/// `coeffs[j]` multiplying `1/(tau - alpha)^(j+1)`.
#[derive(Clone, Debug)]
pub struct PoleTerm {
    pub alpha: C64,
    pub coeffs: Vec<CMatrix>,
}

impl PoleTerm {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }
}

/// `F(tau) = constant + sum over poles of sum_j C_j / (tau - alpha)^j`.
#[derive(Clone, Debug)]
pub struct RationalMatrixMap {
    n: usize,
    pub constant: CMatrix,
    pub poles: Vec<PoleTerm>,
}

impl RationalMatrixMap {
    pub fn constant(m: CMatrix) -> Self {
        Self { n: m.nrows(), constant: m, poles: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(identity(n))
    }

    /// `I + k/(tau - alpha) M`.
    pub fn simple_factor(alpha: C64, k: C64, m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut f = Self::identity(n);
        f.add_term(alpha, 1, m * k);
        f
    }

    /// The factor `g(tau) = I + (alpha - conj alpha)/(tau - alpha) (I - pi)`.
    pub fn blaschke(alpha: C64, pi: &HermitianProjector) -> Self {
        Self::simple_factor(alpha, alpha - alpha.conj(), pi.perp().matrix())
    }

    /// The inverse of [`Self::blaschke`], with its pole at `conj alpha`.
    pub fn blaschke_inverse(alpha: C64, pi: &HermitianProjector) -> Self {
        Self::simple_factor(alpha.conj(), alpha.conj() - alpha, pi.perp().matrix())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pole_index(&self, alpha: C64) -> Option<usize> {
        self.poles.iter().position(|p| same_pole(p.alpha, alpha))
    }

    pub fn order_at(&self, alpha: C64) -> usize {
        self.pole_index(alpha).map(|i| self.poles[i].order()).unwrap_or(0)
    }

    /// Coefficient of `1/(tau - alpha)^order`, zero when absent.
    pub fn coefficient(&self, alpha: C64, order: usize) -> CMatrix {
        assert!(order >= 1);
        match self.pole_index(alpha) {
            Some(i) if self.poles[i].coeffs.len() >= order => self.poles[i].coeffs[order - 1].clone(),
            _ => zeros(self.n),
        }
    }

    pub fn residue(&self, alpha: C64) -> CMatrix {
        self.coefficient(alpha, 1)
    }

    pub fn add_term(&mut self, alpha: C64, order: usize, coeff: CMatrix) {
        assert!(order >= 1);
        let idx = match self.pole_index(alpha) {
            Some(i) => i,
            None => {
                self.poles.push(PoleTerm { alpha, coeffs: Vec::new() });
                self.poles.len() - 1
            }
        };
        let term = &mut self.poles[idx];
        while term.coeffs.len() < order {
            term.coeffs.push(zeros(self.n));
        }
        term.coeffs[order - 1] += coeff;
    }

    pub fn eval(&self, tau: C64) -> Result<CMatrix> {
        let mut out = self.constant.clone();
        for p in &self.poles {
            let d = tau - p.alpha;
            if d.norm() < 1e-12 * (1.0 + p.alpha.norm()) {
                return Err(Error::EvaluationAtPole(p.alpha));
            }
            let inv = d.inv();
            let mut pw = inv;
            for cj in &p.coeffs {
                out += cj * pw;
                pw *= inv;
            }
        }
        Ok(out)
    }

    pub fn value_at_infinity(&self) -> &CMatrix {
        &self.constant
    }

    pub fn scale_left(&self, m: &CMatrix) -> Self {
        Self {
            n: self.n,
            constant: m * &self.constant,
            poles: self
                .poles
                .iter()
                .map(|p| PoleTerm { alpha: p.alpha, coeffs: p.coeffs.iter().map(|c| m * c).collect() })
                .collect(),
        }
    }

    pub fn scale_right(&self, m: &CMatrix) -> Self {
        Self {
            n: self.n,
            constant: &self.constant * m,
            poles: self
                .poles
                .iter()
                .map(|p| PoleTerm { alpha: p.alpha, coeffs: p.coeffs.iter().map(|c| c * m).collect() })
                .collect(),
        }
    }

    /// Exact product `self(tau) * other(tau)` in partial-fraction form.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::constant(&self.constant * &other.constant);
        for q in &other.poles {
            for (j, g) in q.coeffs.iter().enumerate() {
                out.add_term(q.alpha, j + 1, &self.constant * g);
            }
        }
        for p in &self.poles {
            for (i, f) in p.coeffs.iter().enumerate() {
                out.add_term(p.alpha, i + 1, f * &other.constant);
            }
        }
        for p in &self.poles {
            for q in &other.poles {
                let merged = same_pole(p.alpha, q.alpha);
                for (i0, f) in p.coeffs.iter().enumerate() {
                    for (j0, g) in q.coeffs.iter().enumerate() {
                        let fg = f * g;
                        let (i, j) = (i0 + 1, j0 + 1);
                        if merged {
                            out.add_term(p.alpha, i + j, fg);
                            continue;
                        }
                        let (a, b) = (p.alpha, q.alpha);
                        for m in 1..=i {
                            let k = binomial(j + i - m - 1, i - m) * if (i - m) % 2 == 0 { 1.0 } else { -1.0 };
                            let w = (a - b).powi(-((j + i - m) as i32)) * k;
                            out.add_term(a, m, &fg * w);
                        }
                        for m in 1..=j {
                            let k = binomial(j + i - m - 1, j - m) * if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
                            let w = (b - a).powi(-((j + i - m) as i32)) * k;
                            out.add_term(b, m, &fg * w);
                        }
                    }
                }
            }
        }
        out
    }

    /// Drop Laurent coefficients (from the top order down) and poles whose
    /// coefficients are below `tol` in operator norm.
    pub fn prune(&mut self, tol: f64) {
        for p in &mut self.poles {
            while let Some(last) = p.coeffs.last() {
                if op_norm(last) <= tol {
                    p.coeffs.pop();
                } else {
                    break;
                }
            }
        }
        self.poles.retain(|p| !p.coeffs.is_empty());
    }

    /// Largest coefficient norm (constant included).
    pub fn scale(&self) -> f64 {
        self.poles
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .map(op_norm)
            .fold(op_norm(&self.constant), f64::max)
    }

    /// Re-expands all poles within `radius` of `center` as a single pole at
    /// `center`, keeping orders up to `max_order`. The result agrees with the
    /// original for `|tau - center|` large compared to the merged cluster, up to
    /// the dropped higher orders.
    pub fn collapse(&self, center: C64, radius: f64, max_order: usize) -> Self {
        let mut out = Self::constant(self.constant.clone());
        let mut coeffs = vec![zeros(self.n); max_order];
        for p in &self.poles {
            let delta = p.alpha - center;
            if delta.norm() > radius {
                for (j, c) in p.coeffs.iter().enumerate() {
                    out.add_term(p.alpha, j + 1, c.clone());
                }
                continue;
            }
            // 1/(tau-c-d)^m = sum_n C(m+n-1, n) d^n / (tau-c)^(m+n)
            for (m0, d) in p.coeffs.iter().enumerate() {
                let m = m0 + 1;
                let mut dn = C64::from(1.0);
                for nn in 0..=(max_order.saturating_sub(m)) {
                    let ord = m + nn;
                    if ord > max_order {
                        break;
                    }
                    coeffs[ord - 1] += d * (dn * binomial(m + nn - 1, nn));
                    dn *= delta;
                }
            }
        }
        out.poles.push(PoleTerm { alpha: center, coeffs });
        out
    }

    /// `G(tau) = F((a tau + b) / (c tau + d))`, for a non-degenerate Mobius map
    /// under which no pole of `F` is sent to infinity.
    pub fn mobius_substitute(&self, a: C64, b: C64, cc: C64, d: C64) -> Result<Self> {
        let mut out = Self::constant(self.constant.clone());
        for p in &self.poles {
            let beta = p.alpha;
            let gamma = a - beta * cc;
            if gamma.norm() < 1e-14 * (1.0 + a.norm() + (beta * cc).norm()) {
                return Err(Error::Invalid(format!("pole {beta} is sent to infinity")));
            }
            let tb = -(b - beta * d) / gamma;
            let u = cc / gamma;
            let v = (cc * tb + d) / gamma;
            for (j0, coeff) in p.coeffs.iter().enumerate() {
                let j = j0 + 1;
                for l in 0..=j {
                    let w = u.powi((j - l) as i32) * v.powi(l as i32) * binomial(j, l);
                    if l == 0 {
                        out.constant += coeff * w;
                    } else {
                        out.add_term(tb, l, coeff * w);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `sup ||F(conj tau)^* F(tau) - I||` over the given sample points.
    pub fn reality_defect(&self, samples: &[C64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in samples {
            let f = self.eval(t)?;
            let g = self.eval(t.conj())?;
            worst = worst.max(op_norm(&(g.adjoint() * f - identity(self.n))));
        }
        Ok(worst)
    }

    /// Largest difference between corresponding coefficients.
    pub fn coefficient_distance(&self, other: &Self) -> f64 {
        let mut d = op_norm(&(&self.constant - &other.constant));
        let mut alphas: Vec<C64> = self.poles.iter().map(|p| p.alpha).collect();
        for q in &other.poles {
            if !alphas.iter().any(|a| same_pole(*a, q.alpha)) {
                alphas.push(q.alpha);
            }
        }
        for a in alphas {
            let k = self.order_at(a).max(other.order_at(a));
            for j in 1..=k {
                d = d.max(op_norm(&(self.coefficient(a, j) - other.coefficient(a, j))));
            }
        }
        d
    }
}

/// Sample points off the real axis used for reality checks.
pub fn reality_samples() -> Vec<C64> {
    vec![c(0.3, 0.7), c(-1.2, 0.4), c(2.5, -1.1), c(-0.4, -2.2), c(0.0, 3.5), c(5.0, 0.01)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat2(a: [C64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &a)
    }

    #[test]
    fn projector_basic() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let p = HermitianProjector::project_onto(&[v.clone()]).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.defect() < 1e-14);
        let pv = p.matrix() * &v;
        assert!((pv - v).norm() < 1e-14);
        assert!(HermitianProjector::project_onto(&[CVector::zeros(2)]).is_err());
    }

    #[test]
    fn projector_rank_tolerance() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let w = CVector::from_vec(vec![c(1.0, 0.0), c(1e-13, 0.0)]);
        let p = HermitianProjector::project_onto(&[v, w]).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn kernel_and_image() {
        let m = mat2([c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let k = HermitianProjector::kernel_of(&m, 1e-10).unwrap();
        assert_eq!(k.rank(), 1);
        assert!(op_norm(&(&m * k.matrix())) < 1e-13);
        let im = HermitianProjector::image_of(&m, 1e-10).unwrap();
        assert!(op_norm(&(im.perp().matrix() * &m)) < 1e-13);
    }

    #[test]
    fn op_norm_matches_svd() {
        let m = mat2([c(1.0, 2.0), c(-0.5, 0.1), c(0.3, -1.0), c(2.0, 0.0)]);
        let s = m.clone().singular_values().max();
        assert!((op_norm(&m) - s).abs() < 1e-12);
    }

    #[test]
    fn jacobi_near_rank_one() {
        // nearly rank-one matrix on which a generic complex SVD loses accuracy
        let m = mat2([c(0.31404190423409895, -0.1983402982161806), c(-0.028060213913590815, -0.1140704017705616),
                      c(0.09102445912594703, 2.256149093487693), c(0.6859580957659016, 0.19857830954742894)]);
        let p = HermitianProjector::onto_columns(&m, RANK_TOL).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(op_norm(&(p.perp().matrix() * &m)) < 1e-12);
        let sv = singular_values(&m);
        let fro: f64 = fro_norm(&m);
        assert!((sv.iter().map(|s| s * s).sum::<f64>().sqrt() - fro).abs() < 1e-13);
    }

    #[test]
    fn jacobi_3x3() {
        let m = CMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.37 - 1.0, (i as f64 - j as f64) * 0.2));
        let cols = jacobi_columns(&m);
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(cols[i].dotc(&cols[j]).norm() < 1e-12);
            }
        }
        let smax = singular_values(&m).into_iter().fold(0.0, f64::max);
        let s2 = (m.adjoint() * &m).trace().re;
        assert!(smax * smax <= s2 + 1e-12);
    }

    #[test]
    fn sqrt_of_positive() {
        let m = mat2([c(2.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(1.0, 0.0)]);
        let (r, ri) = hermitian_sqrt(&m).unwrap();
        assert!(op_norm(&(&r * &r - &m)) < 1e-14);
        assert!(op_norm(&(&r * &ri - identity(2))) < 1e-14);
        let lmin = min_hermitian_eigenvalue(&m);
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        assert!((lmin * (3.0 - lmin) - det).abs() < 1e-13);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    fn random_map(seed: u64) -> RationalMatrixMap {
        let mut s = seed;
        let mut r = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut rm = |_: usize| mat2([c(r(), r()), c(r(), r()), c(r(), r()), c(r(), r())]);
        let mut f = RationalMatrixMap::constant(rm(0));
        f.add_term(c(0.3, 1.0), 1, rm(0));
        f.add_term(c(0.3, 1.0), 2, rm(0));
        f.add_term(c(-1.0, -0.5), 1, rm(0));
        f
    }

    #[test]
    fn product_is_exact() {
        let f = random_map(1);
        let mut g = random_map(2);
        g.add_term(c(2.0, 0.5), 3, identity(2));
        let h = f.mul(&g);
        for t in reality_samples() {
            let lhs = h.eval(t).unwrap();
            let rhs = f.eval(t).unwrap() * g.eval(t).unwrap();
            assert!(op_norm(&(lhs - rhs)) < 1e-11 * (1.0 + op_norm(&f.eval(t).unwrap())));
        }
        assert_eq!(h.order_at(c(0.3, 1.0)), 4);
    }

    #[test]
    fn blaschke_inverse_cancels() {
        let v = CVector::from_vec(vec![c(1.0, 0.5), c(-0.2, 1.0)]);
        let p = HermitianProjector::project_onto(&[v]).unwrap();
        let a = c(0.4, 0.9);
        let mut prod = RationalMatrixMap::blaschke(a, &p).mul(&RationalMatrixMap::blaschke_inverse(a, &p));
        prod.prune(1e-13);
        assert!(prod.poles.is_empty());
        assert!(op_norm(&(&prod.constant - identity(2))) < 1e-14);
        let g = RationalMatrixMap::blaschke(a, &p);
        assert!(g.reality_defect(&reality_samples()).unwrap() < 1e-13);
    }

    #[test]
    fn collapse_matches_far_field() {
        let mut f = RationalMatrixMap::identity(2);
        let a = c(0.0, 1.0);
        let eps = 1e-3;
        let m = mat2([c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.2), c(-0.3, 0.0)]);
        f.add_term(a, 1, m.clone());
        f.add_term(a + eps, 1, m.clone() * C64::from(-1.0));
        let g = f.collapse(a, 1e-2, 4);
        let t = c(0.5, 2.0);
        let e = op_norm(&(f.eval(t).unwrap() - g.eval(t).unwrap()));
        assert!(e < 1e-12, "{e}");
        // -m/(t-a-eps) + m/(t-a) = -m eps/(t-a)^2 - ...
        assert!(op_norm(&(g.coefficient(a, 2) + m * C64::from(eps))) < 1e-15);
    }

    #[test]
    fn mobius_substitution() {
        let f = random_map(4);
        let (a, b, cc, d) = (c(0.8, 0.0), c(0.6, 0.0), c(-0.6, 0.0), c(0.8, 0.0));
        let g = f.mobius_substitute(a, b, cc, d).unwrap();
        for t in reality_samples() {
            let m = (a * t + b) / (cc * t + d);
            let diff = op_norm(&(g.eval(t).unwrap() - f.eval(m).unwrap()));
            assert!(diff < 1e-11, "{diff}");
        }
    }

    #[test]
    fn evaluation_at_pole_fails() {
        let f = random_map(3);
        assert!(matches!(f.eval(c(0.3, 1.0)), Err(Error::EvaluationAtPole(_))));
    }
}
