//! Continuous scattering data: forward transform by Neumann iteration along
//! rotated lines, property checks, time transport, and the inverse transform
//! by positive-symbol factorization on the unit circle.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{FieldSample, GridSpec, MonopoleField};
use crate::linalg::{
    anti_hermitian_part, fro_norm, hermitian_part, hermitian_sqrt, identity, inverse, min_hermitian_eigenvalue,
    op_norm, CMatrix, C64, I,
};

/// Sampled `s(sigma, theta)`. `values[it * sigmas.len() + is]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringData {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub values: Vec<CMatrix>,
}

/// Equally spaced angles `2 pi j / n`.
pub fn circle_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// `n` equally spaced points on `[-l, l]`.
pub fn sigma_nodes(l: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -l + 2.0 * l * i as f64 / (n - 1) as f64).collect()
}

fn catmull_rom(p: [&CMatrix; 4], t: f64) -> CMatrix {
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ];
    p.iter().zip(w).fold(CMatrix::zeros(p[0].nrows(), p[0].ncols()), |acc, (m, wi)| acc + *m * C64::from(wi))
}

impl ScatteringData {
    pub fn new(n: usize, thetas: Vec<f64>, sigmas: Vec<f64>, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != thetas.len() * sigmas.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} grid",
                values.len(),
                thetas.len(),
                sigmas.len()
            )));
        }
        if values.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Dimension(format!("values must be {n}x{n}")));
        }
        if sigmas.len() < 4 {
            return Err(Error::Invalid("at least four sigma nodes required".into()));
        }
        let h = sigmas[1] - sigmas[0];
        if h <= 0.0 || sigmas.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * (1.0 + h)) {
            return Err(Error::Invalid("sigma grid must be increasing and uniform".into()));
        }
        Ok(Self { n, thetas, sigmas, values })
    }

    pub fn from_fn(n: usize, thetas: Vec<f64>, sigmas: Vec<f64>, f: impl Fn(f64, f64) -> CMatrix) -> Result<Self> {
        let values = thetas.iter().flat_map(|&th| sigmas.iter().map(move |&s| (th, s))).map(|(th, s)| f(s, th)).collect();
        Self::new(n, thetas, sigmas, values)
    }

    pub fn identity(n: usize, thetas: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        Self::from_fn(n, thetas, sigmas, |_, _| identity(n))
    }

    pub fn at(&self, it: usize, is: usize) -> &CMatrix {
        &self.values[it * self.sigmas.len() + is]
    }

    fn sigma_step(&self) -> f64 {
        self.sigmas[1] - self.sigmas[0]
    }

    /// Cubic interpolation in sigma along the `it`-th angle. Identity beyond
    /// the sampled range.
    pub fn interp_cubic(&self, it: usize, sigma: f64) -> CMatrix {
        let ns = self.sigmas.len();
        let u = (sigma - self.sigmas[0]) / self.sigma_step();
        let eye = identity(self.n);
        if !(0.0..=(ns - 1) as f64).contains(&u) {
            return eye;
        }
        let i = (u.floor() as usize).min(ns - 2);
        let t = u - i as f64;
        let get = |k: isize| -> &CMatrix {
            if k < 0 || k >= ns as isize {
                &eye
            } else {
                self.at(it, k as usize)
            }
        };
        let i = i as isize;
        catmull_rom([get(i - 1), get(i), get(i + 1), get(i + 2)], t)
    }

    /// Six-point Lagrange interpolation in sigma and its sigma-derivative,
    /// with the identity assumed beyond the sampled range.
    pub fn interp_with_derivative(&self, it: usize, sigma: f64) -> (CMatrix, CMatrix) {
        let ns = self.sigmas.len();
        let h = self.sigma_step();
        let u = (sigma - self.sigmas[0]) / h;
        let eye = identity(self.n);
        if u < -3.0 || u > (ns + 2) as f64 {
            return (eye, CMatrix::zeros(self.n, self.n));
        }
        let base = u.floor() as i64 - 2;
        let (w, dw) = lagrange6_weights(u - base as f64);
        let mut v = eye.clone();
        let mut d = CMatrix::zeros(self.n, self.n);
        for k in 0..6 {
            let idx = base + k as i64;
            if (0..ns as i64).contains(&idx) {
                let m = self.at(it, idx as usize) - &eye;
                v += &m * C64::from(w[k]);
                d += m * C64::from(dw[k] / h);
            }
        }
        (v, d)
    }

    pub fn interp(&self, it: usize, sigma: f64) -> CMatrix {
        self.interp_with_derivative(it, sigma).0
    }

    /// `S_theta(x, y, t) = s(x cos theta + y sin theta - t, theta)`.
    pub fn realize(&self, it: usize, x: f64, y: f64, t: f64) -> CMatrix {
        let th = self.thetas[it];
        self.interp(it, x * th.cos() + y * th.sin() - t)
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| op_norm(&(a - b))).fold(0.0, f64::max)
    }

    fn is_circle_grid(&self) -> bool {
        let n = self.thetas.len();
        n >= 4 && self.thetas.iter().enumerate().all(|(j, th)| (th - 2.0 * PI * j as f64 / n as f64).abs() < 1e-12)
    }
}

/// A spatial field on one time slice.
pub trait SpatialField: Send + Sync {
    fn n(&self) -> usize;
    fn sample(&self, x: f64, y: f64) -> Result<FieldSample>;
}

impl<F: Fn(f64, f64) -> Result<FieldSample> + Send + Sync> SpatialField for (usize, F) {
    fn n(&self) -> usize {
        self.0
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        (self.1)(x, y)
    }
}

/// One time slice of a gridded field, interpolated with six-point Lagrange
/// stencils in each direction and zero outside the grid.
pub struct GridSlice<'a> {
    field: &'a MonopoleField,
    it: usize,
}

impl<'a> GridSlice<'a> {
    pub fn new(field: &'a MonopoleField, it: usize) -> Result<Self> {
        if it >= field.grid.t.n {
            return Err(Error::Invalid(format!("time index {it} out of range")));
        }
        if field.grid.x.n < 6 || field.grid.y.n < 6 {
            return Err(Error::Invalid("interpolation needs at least six nodes per axis".into()));
        }
        Ok(Self { field, it })
    }
}

/// Weights and derivative weights of the Lagrange basis on nodes `0..6` at `s`.
fn lagrange6_weights(s: f64) -> ([f64; 6], [f64; 6]) {
    let mut w = [1.0; 6];
    let mut dw = [0.0; 6];
    for k in 0..6 {
        let denom: f64 = (0..6).filter(|&m| m != k).map(|m| k as f64 - m as f64).product();
        w[k] = (0..6).filter(|&m| m != k).map(|m| s - m as f64).product::<f64>() / denom;
        dw[k] = (0..6)
            .filter(|&m| m != k)
            .map(|m| (0..6).filter(|&l| l != k && l != m).map(|l| s - l as f64).product::<f64>())
            .sum::<f64>()
            / denom;
    }
    (w, dw)
}

fn lagrange6(u: f64, len: usize) -> Option<(usize, [f64; 6])> {
    if u < 0.0 || u > (len - 1) as f64 {
        return None;
    }
    let base = (u.floor() as isize - 2).clamp(0, len as isize - 6) as usize;
    Some((base, lagrange6_weights(u - base as f64).0))
}

impl SpatialField for GridSlice<'_> {
    fn n(&self) -> usize {
        self.field.n
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        let g = &self.field.grid;
        let ux = (x - g.x.min) / g.x.step();
        let uy = (y - g.y.min) / g.y.step();
        let (Some((bx, wx)), Some((by, wy))) = (lagrange6(ux, g.x.n), lagrange6(uy, g.y.n)) else {
            return Ok(FieldSample::zero(self.field.n));
        };
        let mut out = FieldSample::zero(self.field.n);
        for (j, wyj) in wy.iter().enumerate() {
            for (i, wxi) in wx.iter().enumerate() {
                let w = C64::from(wxi * wyj);
                let s = self.field.at(self.it, by + j, bx + i);
                out.ax += &s.ax * w;
                out.ay += &s.ay * w;
                out.at += &s.at * w;
                out.phi += &s.phi * w;
            }
        }
        Ok(out)
    }
}

/// Discretization of the line problem in the rotated chart: `x'` on
/// `[-x_half, x_half]` with `nx` nodes, `y'` periodic with period `y_period`
/// and `ny` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSolveConfig {
    pub x_half: f64,
    pub nx: usize,
    pub y_period: f64,
    pub ny: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub smallness: f64,
    pub check_reality: bool,
}

impl Default for SpectralSolveConfig {
    fn default() -> Self {
        Self { x_half: 12.0, nx: 481, y_period: 48.0, ny: 256, max_iter: 80, tol: 1e-14, smallness: 0.9, check_reality: true }
    }
}

impl SpectralSolveConfig {
    fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 || self.x_half <= 0.0 || self.y_period <= 0.0 {
            return Err(Error::Invalid("spectral grid too small".into()));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.x_half / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.y_period / self.ny as f64
    }

    pub fn x_at(&self, i: usize) -> f64 {
        -self.x_half + i as f64 * self.hx()
    }

    pub fn y_at(&self, j: usize) -> f64 {
        -self.y_period / 2.0 + j as f64 * self.hy()
    }

    /// Signed Fourier index of FFT bin `m`; the Nyquist bin maps to zero.
    fn signed_mode(&self, m: usize) -> i64 {
        let n = self.ny;
        if 2 * m == n {
            0
        } else if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }
}

/// Point of the physical plane at rotated coordinates `(x', y')`.
fn rotated(theta: f64, xp: f64, yp: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (-xp * s - yp * c, xp * c - yp * s)
}

/// `A_x' - i tau A_y' - sqrt(1 - tau^2) phi` on the rotated grid, row-major in
/// `(x', y')`.
pub fn reduced_potential(
    field: &dyn SpatialField,
    theta: f64,
    tau: f64,
    cfg: &SpectralSolveConfig,
) -> Result<Vec<CMatrix>> {
    if tau.abs() >= 1.0 || !tau.is_finite() {
        return Err(Error::Invalid(format!("|tau| = {} must be below 1", tau.abs())));
    }
    cfg.validate()?;
    let (s, c) = theta.sin_cos();
    let root = (1.0 - tau * tau).sqrt();
    (0..cfg.nx * cfg.ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cfg.ny, k % cfg.ny);
            let (x, y) = rotated(theta, cfg.x_at(i), cfg.y_at(j));
            let f = field.sample(x, y)?;
            let axp = &f.ax * C64::from(-s) + &f.ay * C64::from(c);
            let ayp = &f.ax * C64::from(-c) + &f.ay * C64::from(-s);
            Ok(axp - ayp * (I * tau) - &f.phi * C64::from(root))
        })
        .collect()
}

/// Which one-sided limit `tau -> 0^+` or `tau -> 0^-` on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Diagnostics of one angle.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaReport {
    pub theta: f64,
    /// Discrete `L^1` norm of the transformed potential over `(x', zeta)`.
    pub contraction: f64,
    /// Successive ratios of iterate norms.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    /// Norm of the last iterate kept.
    pub tail: f64,
    /// `max |E^- (E^+)* - I|`.
    pub reality_defect: f64,
    /// Largest change of `(E^+)* E^+` across the rows of the grid.
    pub x_variation: f64,
}

/// Planned transforms and layout for one line problem. Arrays are stored as
/// `[(i * n^2 + e) * ny + j]` so each `(x', entry)` row is contiguous in `y'`.
struct LineSolver<'a> {
    cfg: &'a SpectralSolveConfig,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl<'a> LineSolver<'a> {
    fn new(cfg: &'a SpectralSolveConfig, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { cfg, n, fft: planner.plan_fft_forward(cfg.ny), ifft: planner.plan_fft_inverse(cfg.ny) }
    }

    fn idx(&self, i: usize, e: usize, j: usize) -> usize {
        (i * self.n * self.n + e) * self.cfg.ny + j
    }

    fn pack(&self, mats: &[CMatrix]) -> Vec<C64> {
        let (n, ny) = (self.n, self.cfg.ny);
        let mut out = vec![C64::from(0.0); self.cfg.nx * n * n * ny];
        for (k, m) in mats.iter().enumerate() {
            let (i, j) = (k / ny, k % ny);
            for r in 0..n {
                for c in 0..n {
                    out[self.idx(i, r * n + c, j)] = m[(r, c)];
                }
            }
        }
        out
    }

    fn matrix(&self, data: &[C64], i: usize, j: usize) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, n, |r, c| data[self.idx(i, r * n + c, j)])
    }

    /// `sum_x h sum_m |hat rows|_F / ny` and `max_x sum_m |.|_F / ny` of a spectral array.
    fn spectral_norms(&self, hat: &[C64]) -> (f64, f64) {
        let (nx, ny, nn) = (self.cfg.nx, self.cfg.ny, self.n * self.n);
        let mut l1 = 0.0;
        let mut sup: f64 = 0.0;
        for i in 0..nx {
            let mut row = 0.0;
            for m in 0..ny {
                let s: f64 = (0..nn).map(|e| hat[self.idx(i, e, m)].norm_sqr()).sum();
                row += s.sqrt();
            }
            row /= ny as f64;
            l1 += row * self.cfg.hx();
            sup = sup.max(row);
        }
        (l1, sup)
    }

    fn pointwise_mul(&self, a: &[C64], q: &[C64]) -> Vec<C64> {
        let (n, ny) = (self.n, self.cfg.ny);
        let mut g = vec![C64::from(0.0); a.len()];
        for i in 0..self.cfg.nx {
            for r in 0..n {
                for c in 0..n {
                    let out = self.idx(i, r * n + c, 0);
                    for k in 0..n {
                        let ai = self.idx(i, r * n + k, 0);
                        let qi = self.idx(i, k * n + c, 0);
                        for j in 0..ny {
                            g[out + j] += a[ai + j] * q[qi + j];
                        }
                    }
                }
            }
        }
        g
    }

    /// Apply the line kernel mode by mode to a spectral array in place.
    fn kernel(&self, hat: &mut [C64], side: Side) {
        let (nx, ny, nn) = (self.cfg.nx, self.cfg.ny, self.n * self.n);
        let h = self.cfg.hx();
        let mut g = vec![C64::from(0.0); nx];
        let mut left = vec![C64::from(0.0); nx];
        for e in 0..nn {
            for m in 0..ny {
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = hat[self.idx(i, e, m)];
                }
                cumulative(&g, h, &mut left);
                let total = left[nx - 1];
                let dir = match side {
                    Side::Plus => self.cfg.signed_mode(m).signum(),
                    Side::Minus => -self.cfg.signed_mode(m).signum(),
                };
                for (i, l) in left.iter().enumerate() {
                    let right = total - l;
                    hat[self.idx(i, e, m)] = match dir {
                        1 => *l,
                        -1 => -right,
                        _ => (l - right) * 0.5,
                    };
                }
            }
        }
    }

    /// Neumann iteration for `d_x' E = A E` on one side.
    fn solve(&self, a: &[C64], side: Side) -> Result<(Vec<C64>, Vec<f64>, usize, f64)> {
        let (nx, ny, n) = (self.cfg.nx, self.cfg.ny, self.n);
        let mut q = vec![C64::from(0.0); a.len()];
        for i in 0..nx {
            for d in 0..n {
                let s = self.idx(i, d * n + d, 0);
                q[s..s + ny].iter_mut().for_each(|v| *v = C64::from(1.0));
            }
        }
        let mut e = q.clone();
        let mut prev = (n as f64).sqrt();
        let mut ratios = Vec::new();
        let mut its = 0;
        let mut tail = prev;
        while its < self.cfg.max_iter {
            its += 1;
            let mut g = self.pointwise_mul(a, &q);
            self.fft.process(&mut g);
            self.kernel(&mut g, side);
            let (_, norm) = self.spectral_norms(&g);
            self.ifft.process(&mut g);
            let scale = 1.0 / ny as f64;
            g.iter_mut().for_each(|v| *v *= scale);
            for (ev, gv) in e.iter_mut().zip(&g) {
                *ev += gv;
            }
            q = g;
            ratios.push(norm / prev);
            tail = norm;
            if norm < self.cfg.tol {
                break;
            }
            if its >= 4 && norm > prev && norm > 1e-10 {
                return Err(Error::NotContracting(format!("iterate norms grow: ratios {ratios:?}")));
            }
            prev = norm;
        }
        if tail >= self.cfg.tol.max(1e-12) {
            return Err(Error::NotContracting(format!("no convergence after {its} iterations, tail {tail:e}")));
        }
        Ok((e, ratios, its, tail))
    }
}

/// Fourth-order cumulative integral from the left end.
fn cumulative(g: &[C64], h: f64, out: &mut [C64]) {
    let n = g.len();
    let w = h / 24.0;
    out[0] = C64::from(0.0);
    for c in 0..n - 1 {
        let cell = if c == 0 {
            (g[0] * 9.0 + g[1] * 19.0 - g[2] * 5.0 + g[3]) * w
        } else if c == n - 2 {
            (g[n - 1] * 9.0 + g[n - 2] * 19.0 - g[n - 3] * 5.0 + g[n - 4]) * w
        } else {
            (-g[c - 1] + g[c] * 13.0 + g[c + 1] * 13.0 - g[c + 2]) * w
        };
        out[c + 1] = out[c] + cell;
    }
}

/// Frame samples and jump on one rotated line.
#[derive(Clone, Debug)]
pub struct LineSolution {
    pub theta: f64,
    /// `E^+` on the rotated grid, row-major in `(x', y')`.
    pub e_plus: Vec<CMatrix>,
    /// `(E^+)* E^+` on the last row, as a function of `y'`.
    pub jump: Vec<CMatrix>,
    pub report: ThetaReport,
}

pub fn solve_line(field: &dyn SpatialField, theta: f64, cfg: &SpectralSolveConfig) -> Result<LineSolution> {
    let pot = reduced_potential(field, theta, 0.0, cfg)?;
    let solver = LineSolver::new(cfg, field.n());
    let a = solver.pack(&pot);
    let mut hat = a.clone();
    solver.fft.process(&mut hat);
    let (contraction, _) = solver.spectral_norms(&hat);
    if contraction > cfg.smallness {
        return Err(Error::NotSmall(contraction));
    }
    let (ep, ratios, iterations, tail) = solver.solve(&a, Side::Plus)?;
    let (nx, ny) = (cfg.nx, cfg.ny);
    let e_plus: Vec<CMatrix> = (0..nx * ny).map(|k| solver.matrix(&ep, k / ny, k % ny)).collect();
    let jump_at = |i: usize, j: usize| {
        let e = &e_plus[i * ny + j];
        e.adjoint() * e
    };
    let jump: Vec<CMatrix> = (0..ny).map(|j| jump_at(nx - 1, j)).collect();
    // interior rows agree with the last one up to quadrature error
    let mut x_variation: f64 = 0.0;
    for i in (0..nx).step_by(8) {
        for (j, s) in jump.iter().enumerate() {
            x_variation = x_variation.max(op_norm(&(jump_at(i, j) - s)));
        }
    }
    let mut reality_defect = 0.0;
    if cfg.check_reality {
        let (em, _, _, _) = solver.solve(&a, Side::Minus)?;
        let eye = identity(field.n());
        for k in 0..nx * ny {
            let d = solver.matrix(&em, k / ny, k % ny) * e_plus[k].adjoint() - &eye;
            reality_defect = f64::max(reality_defect, op_norm(&d));
        }
    }
    let report = ThetaReport { theta, contraction, ratios, iterations, tail, reality_defect, x_variation };
    Ok(LineSolution { theta, e_plus, jump, report })
}

/// Trigonometric interpolation of periodic samples at `y`.
fn trig_interp(samples: &[CMatrix], cfg: &SpectralSolveConfig, fft: &dyn Fft<f64>, ys: &[f64]) -> Vec<CMatrix> {
    let (ny, n) = (cfg.ny, samples[0].nrows());
    let mut hats = vec![vec![C64::from(0.0); ny]; n * n];
    for (e, h) in hats.iter_mut().enumerate() {
        for (j, v) in h.iter_mut().enumerate() {
            *v = samples[j][(e / n, e % n)] / ny as f64;
        }
        fft.process(h);
    }
    let y0 = cfg.y_at(0);
    ys.iter()
        .map(|&y| {
            if y < y0 || y > -y0 {
                return identity(n);
            }
            let phase: Vec<C64> = (0..ny)
                .map(|m| {
                    if 2 * m == ny {
                        C64::from((PI * ny as f64 / cfg.y_period * (y - y0)).cos())
                    } else {
                        let z = 2.0 * PI * cfg.signed_mode(m) as f64 / cfg.y_period;
                        C64::from_polar(1.0, z * (y - y0))
                    }
                })
                .collect();
            CMatrix::from_fn(n, n, |r, c| hats[r * n + c].iter().zip(&phase).map(|(a, p)| a * p).sum())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ForwardResult {
    pub data: ScatteringData,
    pub reports: Vec<ThetaReport>,
}

/// Scattering data of a spatial field at the given angles and `sigma` nodes.
pub fn forward_scatter(
    field: &dyn SpatialField,
    thetas: &[f64],
    sigmas: &[f64],
    cfg: &SpectralSolveConfig,
) -> Result<ForwardResult> {
    cfg.validate()?;
    let fft = FftPlanner::new().plan_fft_forward(cfg.ny);
    let ys: Vec<f64> = sigmas.iter().map(|s| -s).collect();
    let per_theta: Vec<(Vec<CMatrix>, ThetaReport)> = thetas
        .par_iter()
        .map(|&th| {
            let line = solve_line(field, th, cfg)?;
            let vals = trig_interp(&line.jump, cfg, fft.as_ref(), &ys);
            let vals = vals.into_iter().map(|m| hermitian_part(&m)).collect();
            Ok((vals, line.report))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(thetas.len() * sigmas.len());
    let mut reports = Vec::with_capacity(thetas.len());
    for (v, r) in per_theta {
        values.extend(v);
        reports.push(r);
    }
    let data = ScatteringData::new(field.n(), thetas.to_vec(), sigmas.to_vec(), values)?;
    Ok(ForwardResult { data, reports })
}

/// Measured defects and pass flags for the three structural properties.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    /// `max |I - s|`.
    pub smallness: f64,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    /// Directional derivative of the planar realization across `theta`.
    pub transport_defect: f64,
    pub small: bool,
    pub hermitian_nonneg: bool,
    pub transversal: bool,
}

pub fn check_scattering_properties(s: &ScatteringData, small_bound: f64, tol: f64) -> PropertyReport {
    let eye = identity(s.n);
    let smallness = s.values.iter().map(|m| op_norm(&(&eye - m))).fold(0.0, f64::max);
    let hermitian_defect = s.values.iter().map(|m| op_norm(&(m - m.adjoint()))).fold(0.0, f64::max);
    let min_eigenvalue = s.values.iter().map(min_hermitian_eigenvalue).fold(f64::INFINITY, f64::min);
    let h = 1e-3;
    let mut transport_defect: f64 = 0.0;
    for (it, &th) in s.thetas.iter().enumerate() {
        let (sn, cs) = th.sin_cos();
        for &sg in s.sigmas.iter().step_by(7) {
            let (x, y) = (sg * cs, sg * sn);
            let fwd = s.realize(it, x - h * sn, y + h * cs, 0.0);
            let back = s.realize(it, x + h * sn, y - h * cs, 0.0);
            transport_defect = transport_defect.max(op_norm(&(fwd - back)) / (2.0 * h));
        }
    }
    PropertyReport {
        smallness,
        hermitian_defect,
        min_eigenvalue,
        transport_defect,
        small: smallness <= small_bound,
        hermitian_nonneg: hermitian_defect <= tol && min_eigenvalue >= -tol,
        transversal: transport_defect <= tol,
    }
}

/// `s(sigma - t, theta)` on the same nodes.
pub fn evolve_scattering(s: &ScatteringData, t: f64) -> ScatteringData {
    let h = s.sigma_step();
    let shift = t / h;
    let aligned = (shift - shift.round()).abs() < 1e-12;
    let ns = s.sigmas.len();
    let mut values = Vec::with_capacity(s.values.len());
    for it in 0..s.thetas.len() {
        for (is, &sg) in s.sigmas.iter().enumerate() {
            let v = if aligned {
                let k = is as i64 - shift.round() as i64;
                if (0..ns as i64).contains(&k) {
                    s.at(it, k as usize).clone()
                } else {
                    identity(s.n)
                }
            } else {
                s.interp_cubic(it, sg - t)
            };
            values.push(v);
        }
    }
    ScatteringData { n: s.n, thetas: s.thetas.clone(), sigmas: s.sigmas.clone(), values }
}

/// Newton iteration settings for the circle factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Newton steps that stop shrinking below this size are accepted as
    /// converged to the resolution of the symbol.
    pub stagnation_floor: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self { max_iter: 40, tol: 1e-13, stagnation_floor: 1e-6 }
    }
}

/// Small matrices at many nodes, stored entry-major: `data[e * len + j]`.
#[derive(Clone)]
struct Batch {
    n: usize,
    len: usize,
    data: Vec<C64>,
}

impl Batch {
    fn zeros(n: usize, len: usize) -> Self {
        Self { n, len, data: vec![C64::from(0.0); n * n * len] }
    }

    fn identity(n: usize, len: usize) -> Self {
        let mut b = Self::zeros(n, len);
        for d in 0..n {
            b.row_mut(d * n + d).fill(C64::from(1.0));
        }
        b
    }

    fn from_mats(m: &[CMatrix]) -> Self {
        let n = m[0].nrows();
        let mut b = Self::zeros(n, m.len());
        for (j, mj) in m.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    b.data[(r * n + c) * b.len + j] = mj[(r, c)];
                }
            }
        }
        b
    }

    fn to_mats(&self) -> Vec<CMatrix> {
        let n = self.n;
        (0..self.len).map(|j| CMatrix::from_fn(n, n, |r, c| self.data[(r * n + c) * self.len + j])).collect()
    }

    fn row(&self, e: usize) -> &[C64] {
        &self.data[e * self.len..(e + 1) * self.len]
    }

    fn row_mut(&mut self, e: usize) -> &mut [C64] {
        &mut self.data[e * self.len..(e + 1) * self.len]
    }

    /// `a * b` nodewise, with optional adjoint of `a`.
    fn mul(a: &Batch, adj_a: bool, b: &Batch) -> Batch {
        let (n, len) = (a.n, a.len);
        let mut out = Batch::zeros(n, len);
        for r in 0..n {
            for c in 0..n {
                let o = (r * n + c) * len;
                for k in 0..n {
                    let ar = if adj_a { a.row(k * n + r) } else { a.row(r * n + k) };
                    let br = b.row(k * n + c);
                    let dst = &mut out.data[o..o + len];
                    if adj_a {
                        for j in 0..len {
                            dst[j] += ar[j].conj() * br[j];
                        }
                    } else {
                        for j in 0..len {
                            dst[j] += ar[j] * br[j];
                        }
                    }
                }
            }
        }
        out
    }

    fn inverse(&self) -> Result<Batch> {
        let (n, len) = (self.n, self.len);
        let mut out = Batch::zeros(n, len);
        match n {
            1 => {
                for j in 0..len {
                    let v = self.data[j];
                    if v.norm() == 0.0 {
                        return Err(Error::Singular);
                    }
                    out.data[j] = v.inv();
                }
            }
            2 => {
                for j in 0..len {
                    let (a, b, c, d) =
                        (self.data[j], self.data[len + j], self.data[2 * len + j], self.data[3 * len + j]);
                    let det = a * d - b * c;
                    if det.norm() == 0.0 || !det.is_finite() {
                        return Err(Error::Singular);
                    }
                    let id = det.inv();
                    out.data[j] = d * id;
                    out.data[len + j] = -b * id;
                    out.data[2 * len + j] = -c * id;
                    out.data[3 * len + j] = a * id;
                }
            }
            _ => out = Batch::from_mats(&self.to_mats().iter().map(inverse).collect::<Result<Vec<_>>>()?),
        }
        Ok(out)
    }

    fn hermitian_part(&mut self) {
        let (n, len) = (self.n, self.len);
        for r in 0..n {
            for c in r..n {
                for j in 0..len {
                    let (p, q) = ((r * n + c) * len + j, (c * n + r) * len + j);
                    let v = (self.data[p] + self.data[q].conj()) * 0.5;
                    self.data[p] = v;
                    self.data[q] = v.conj();
                }
            }
        }
    }

    /// `max_j |M_j - I|_F`.
    fn distance_to_identity(&self) -> f64 {
        let (n, len) = (self.n, self.len);
        (0..len)
            .map(|j| {
                (0..n * n)
                    .map(|e| {
                        let d = if e % (n + 1) == 0 { C64::from(1.0) } else { C64::from(0.0) };
                        (self.data[e * len + j] - d).norm_sqr()
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Factorization `S = W* W` on `N` equally spaced circle nodes, with `W`
/// extending holomorphically to `|mu| > 1` and `W(infinity)` Hermitian
/// positive.
pub struct CircleFactorizer {
    n_theta: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl CircleFactorizer {
    pub fn new(n_theta: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n_theta, fft: planner.plan_fft_forward(n_theta), ifft: planner.plan_fft_inverse(n_theta) }
    }

    /// Keep the frequencies `e^{-i k theta}`, `k >= 0`, of a batch of nodal
    /// values, with the zero mode scaled by `zero_weight` and half of the
    /// Nyquist mode. With `shift`, `shift * I` is added to the zero mode.
    fn outer_part(&self, b: &mut Batch, zero_weight: f64, shift: f64) {
        let nt = self.n_theta;
        let scale = 1.0 / nt as f64;
        let n = b.n;
        let mut scratch = vec![C64::from(0.0); self.fft.get_inplace_scratch_len().max(self.ifft.get_inplace_scratch_len())];
        for e in 0..n * n {
            let row = b.row_mut(e);
            self.fft.process_with_scratch(row, &mut scratch);
            row[0] *= zero_weight;
            if e % (n + 1) == 0 {
                row[0] += C64::from(shift * nt as f64);
            }
            for (k, v) in row.iter_mut().enumerate().skip(1) {
                if 2 * k == nt {
                    *v *= 0.5;
                } else if k < nt.div_ceil(2) {
                    *v = C64::from(0.0);
                }
            }
            self.ifft.process_with_scratch(row, &mut scratch);
            row.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// `[W^{-*} X W^{-1}]_+` for Hermitian `X`.
    fn projected_step(&self, w_inv: &Batch, x: &Batch, shift: f64) -> Batch {
        let mut t = Batch::mul(&Batch::mul(w_inv, true, x), false, w_inv);
        t.hermitian_part();
        self.outer_part(&mut t, 0.5, shift);
        t
    }

    /// Derivative of the factor along a variation `ds` of the symbol, in the
    /// gauge where `W^{-1} dW` has a Hermitian constant term.
    pub fn differentiate(&self, w: &[CMatrix], ds: &[CMatrix]) -> Result<Vec<CMatrix>> {
        let wb = Batch::from_mats(w);
        let y = self.projected_step(&wb.inverse()?, &Batch::from_mats(ds), 0.0);
        Ok(Batch::mul(&y, false, &wb).to_mats())
    }

    pub fn factor(&self, s: &[CMatrix], init: Option<&[CMatrix]>, cfg: &FactorConfig) -> Result<Vec<CMatrix>> {
        if s.len() != self.n_theta {
            return Err(Error::Dimension(format!("{} samples for {} nodes", s.len(), self.n_theta)));
        }
        let init = init.map(Batch::from_mats);
        Ok(self.factor_batch(&Batch::from_mats(s), init.as_ref(), cfg)?.to_mats())
    }

    fn factor_batch(&self, sb: &Batch, init: Option<&Batch>, cfg: &FactorConfig) -> Result<Batch> {
        let n = sb.n;
        let mut w = match init {
            Some(w0) => w0.clone(),
            None => Batch::identity(n, self.n_theta),
        };
        let mut last = f64::INFINITY;
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            let k = self.projected_step(&w.inverse()?, sb, 0.5);
            let step = k.distance_to_identity();
            w = Batch::mul(&k, false, &w);
            self.outer_part(&mut w, 1.0, 0.0);
            if !step.is_finite() || (step > 10.0 * last && step > 1e-6) || step > 1e3 {
                return Err(Error::Factorization(format!("Newton step {step:e} diverging; data too large")));
            }
            // a floor set by the resolution of the symbol ends the iteration too
            let stagnant = step > 0.5 * last && step < cfg.stagnation_floor;
            last = step;
            if step < cfg.tol || stagnant {
                converged = true;
                break;
            }
        }
        if !converged && last > cfg.stagnation_floor {
            return Err(Error::Factorization(format!("Newton stalled at step {last:e}")));
        }
        // normalize W(infinity) = mean of the nodes to be Hermitian positive
        let w0 = CMatrix::from_fn(n, n, |r, c| w.row(r * n + c).iter().sum::<C64>() / self.n_theta as f64);
        let (_, inv_root) = hermitian_sqrt(&(w0.adjoint() * &w0))?;
        let ua = (&w0 * inv_root).adjoint();
        let mut u = Batch::zeros(n, self.n_theta);
        for r in 0..n {
            for c in 0..n {
                u.row_mut(r * n + c).fill(ua[(r, c)]);
            }
        }
        Ok(Batch::mul(&u, false, &w))
    }
}

/// Oracle for scalar positive symbols: `exp` of the split of `log(s) / 2`
/// into its outer part.
pub fn scalar_factor_oracle(s: &[f64]) -> Result<Vec<C64>> {
    if s.iter().any(|v| *v <= 0.0) {
        return Err(Error::Invalid("scalar symbol must be positive".into()));
    }
    let nt = s.len();
    let mut buf: Vec<C64> = s.iter().map(|v| C64::from(v.ln() / nt as f64)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nt).process(&mut buf);
    buf[0] *= 0.5;
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        if 2 * k == nt {
            *b *= 0.5;
        } else if k < nt.div_ceil(2) {
            *b = C64::from(0.0);
        }
    }
    planner.plan_fft_inverse(nt).process(&mut buf);
    Ok(buf.iter().map(|v| v.exp()).collect())
}

/// Settings for the inverse transform.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseConfig {
    pub factor: FactorConfig,
    /// Allowed Laurent-fit residual relative to the size of the fit.
    pub laurent_tol: f64,
    /// Absolute allowance on the Laurent-fit residual, for nearly vanishing fields.
    pub laurent_abs: f64,
    /// Also reconstruct `A_t`.
    pub with_time: bool,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { factor: FactorConfig::default(), laurent_tol: 1e-3, laurent_abs: 1e-6, with_time: true }
    }
}

/// `S` and `ds/dsigma` around the circle at the point `(x, y, t)`.
fn symbol_at(data: &ScatteringData, x: f64, y: f64, t: f64) -> (Batch, Batch) {
    let (n, nt, ns) = (data.n, data.thetas.len(), data.sigmas.len());
    let h = data.sigma_step();
    let mut v = Batch::zeros(n, nt);
    let mut d = Batch::zeros(n, nt);
    for (j, th) in data.thetas.iter().enumerate() {
        let u = (x * th.cos() + y * th.sin() - t - data.sigmas[0]) / h;
        if u < -3.0 || u > (ns + 2) as f64 {
            for e in (0..n * n).step_by(n + 1) {
                v.data[e * nt + j] = C64::from(1.0);
            }
            continue;
        }
        let base = u.floor() as i64 - 2;
        let (w, dw) = lagrange6_weights(u - base as f64);
        // interpolate s - I so that the identity is reproduced exactly
        for e in (0..n * n).step_by(n + 1) {
            v.data[e * nt + j] = C64::from(1.0);
        }
        for k in 0..6 {
            let idx = base + k as i64;
            if (0..ns as i64).contains(&idx) {
                let m = data.at(j, idx as usize);
                for r in 0..n {
                    for c in 0..n {
                        let mrc = if r == c { m[(r, c)] - 1.0 } else { m[(r, c)] };
                        let e = (r * n + c) * nt + j;
                        v.data[e] += mrc * w[k];
                        d.data[e] += mrc * (dw[k] / h);
                    }
                }
            }
        }
    }
    (v, d)
}

/// `E^+` at the circle nodes for the space-time point `(x, y, t)`.
pub fn frame_at(
    data: &ScatteringData,
    fac: &CircleFactorizer,
    x: f64,
    y: f64,
    t: f64,
    cfg: &FactorConfig,
) -> Result<Vec<CMatrix>> {
    Ok(fac.factor_batch(&symbol_at(data, x, y, t).0, None, cfg)?.to_mats())
}

/// `E^-` from `E^+` on the circle.
pub fn e_minus(e_plus: &[CMatrix]) -> Result<Vec<CMatrix>> {
    e_plus.iter().map(|e| inverse(&e.adjoint())).collect()
}

/// Quality of one Laurent fit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitReport {
    pub laurent_residual: f64,
    pub symmetrization_defect: f64,
}

/// Fit `X(mu_j) = mu c_1 + c_0 + mu^{-1} c_{-1}` over the nodes.
fn laurent_fit(x: &[CMatrix], thetas: &[f64]) -> ([CMatrix; 3], f64) {
    let n = x[0].nrows();
    let nt = thetas.len() as f64;
    let coeff = |k: i32| -> CMatrix {
        x.iter().zip(thetas).fold(CMatrix::zeros(n, n), |acc, (m, th)| acc + m * C64::from_polar(1.0, -k as f64 * th))
            / C64::from(nt)
    };
    let c = [coeff(-1), coeff(0), coeff(1)];
    let res = x
        .iter()
        .zip(thetas)
        .map(|(m, th)| {
            let mu = C64::from_polar(1.0, *th);
            op_norm(&(m - (&c[2] * mu + &c[1] + &c[0] / mu)))
        })
        .fold(0.0, f64::max);
    (c, res)
}

/// Derivatives of a frame sampled on the circle.
pub struct FrameJet {
    pub e: Vec<CMatrix>,
    pub dx: Vec<CMatrix>,
    pub dy: Vec<CMatrix>,
    pub dt: Option<Vec<CMatrix>>,
}

/// Fields from a frame and its derivatives by fitting the Laurent
/// coefficients of `(d_s E) E^{-1}` and `(d_t E) E^{-1}`.
pub fn reconstruct_fields(jet: &FrameJet, thetas: &[f64], laurent_tol: f64, laurent_abs: f64) -> Result<(FieldSample, FitReport)> {
    let n = jet.e[0].nrows();
    let inv: Vec<CMatrix> = jet.e.iter().map(inverse).collect::<Result<_>>()?;
    let xs: Vec<CMatrix> = thetas
        .iter()
        .enumerate()
        .map(|(j, th)| {
            let (s, c) = th.sin_cos();
            (&jet.dx[j] * (I * s) - &jet.dy[j] * (I * c)) * &inv[j]
        })
        .collect();
    let (cs, res) = laurent_fit(&xs, thetas);
    let scale = cs.iter().map(op_norm).fold(0.0, f64::max);
    if res > laurent_tol * scale + laurent_abs {
        return Err(Error::NonLaurent(format!("residual {res:e} against coefficient size {scale:e}")));
    }
    let sym_defect = op_norm(&(&cs[0] - cs[2].adjoint())).max(op_norm(&(&cs[1] - cs[1].adjoint())));
    let az = (&cs[2] + cs[0].adjoint()) * C64::from(0.5);
    let azb = -az.adjoint();
    let phi = hermitian_part(&cs[1]) * (-I);
    let ax = &az + &azb;
    let ay = (&az - &azb) * I;
    let mut report = FitReport { laurent_residual: res, symmetrization_defect: sym_defect };
    let at = match &jet.dt {
        Some(dt) => {
            let xt: Vec<CMatrix> = thetas
                .iter()
                .enumerate()
                .map(|(j, th)| {
                    let (s, c) = th.sin_cos();
                    (&dt[j] + &jet.dx[j] * C64::from(c) + &jet.dy[j] * C64::from(s)) * &inv[j]
                })
                .collect();
            let (ct, rt) = laurent_fit(&xt, thetas);
            report.laurent_residual = report.laurent_residual.max(rt);
            report.symmetrization_defect = report.symmetrization_defect.max(fro_norm(&(&ct[2] - &az)));
            anti_hermitian_part(&ct[1])
        }
        None => CMatrix::zeros(n, n),
    };
    Ok((FieldSample { ax, ay, at, phi }, report))
}

/// Frame and its space-time derivatives at one point.
pub fn frame_jet(
    data: &ScatteringData,
    fac: &CircleFactorizer,
    x: f64,
    y: f64,
    t: f64,
    cfg: &InverseConfig,
) -> Result<FrameJet> {
    let (s, ds) = symbol_at(data, x, y, t);
    let e = fac.factor_batch(&s, None, &cfg.factor)?;
    let e_inv = e.inverse()?;
    let along = |k: &dyn Fn(f64) -> f64| -> Vec<CMatrix> {
        let mut b = ds.clone();
        for (j, th) in data.thetas.iter().enumerate() {
            let f = k(*th);
            for r in 0..b.n * b.n {
                b.data[r * b.len + j] *= f;
            }
        }
        Batch::mul(&fac.projected_step(&e_inv, &b, 0.0), false, &e).to_mats()
    };
    let dx = along(&|th| th.cos());
    let dy = along(&|th| th.sin());
    let dt = if cfg.with_time { Some(along(&|_| -1.0)) } else { None };
    let e = e.to_mats();
    Ok(FrameJet { e, dx, dy, dt })
}

/// Fields and fit diagnostics at one point.
pub fn fields_from_data(
    data: &ScatteringData,
    fac: &CircleFactorizer,
    x: f64,
    y: f64,
    t: f64,
    cfg: &InverseConfig,
) -> Result<(FieldSample, FitReport)> {
    let jet = frame_jet(data, fac, x, y, t, cfg)?;
    reconstruct_fields(&jet, &data.thetas, cfg.laurent_tol, cfg.laurent_abs)
}

#[derive(Clone, Debug)]
pub struct InverseResult {
    pub field: MonopoleField,
    pub fit: FitReport,
}

/// Reconstruct the monopole field on a grid from scattering data.
pub fn inverse_scatter(data: &ScatteringData, grid: &GridSpec, cfg: &InverseConfig) -> Result<InverseResult> {
    if !data.is_circle_grid() {
        return Err(Error::Invalid("theta nodes must be 2 pi j / N".into()));
    }
    let fac = CircleFactorizer::new(data.thetas.len());
    let out: Vec<(FieldSample, FitReport)> = grid
        .points()
        .par_iter()
        .map(|p| fields_from_data(data, &fac, p.x, p.y, p.t, cfg))
        .collect::<Result<_>>()?;
    let mut fit = FitReport::default();
    let mut samples = Vec::with_capacity(out.len());
    for (s, r) in out {
        fit.laurent_residual = fit.laurent_residual.max(r.laurent_residual);
        fit.symmetrization_defect = fit.symmetrization_defect.max(r.symmetrization_defect);
        samples.push(s);
    }
    Ok(InverseResult { field: MonopoleField { n: data.n, grid: *grid, samples }, fit })
}
