//! Gauge fields and Ward maps sampled on grids, their PDE residuals, gauge
//! transformations and the Backlund update of monopole fields.

use crate::error::{Error, Result};
use crate::geometry::{tau_of_unit_mu, Point, Riemann};
use crate::holomorphic::ProjectorField;
use crate::linalg::{commutator, identity, inverse, op_norm, CMatrix, RationalMatrixMap, C64};
use crate::soliton::{bt_projector, Frame, Stencil};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default central-difference step for derivatives of frames.
pub const FRAME_STEP: f64 = 2e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    /// Three nodes `c - h, c, c + h`.
    pub fn centered(center: f64, h: f64) -> Self {
        Self { min: center - h, max: center + h, n: 3 }
    }

    pub fn step(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.n - 1) as f64
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.n && self.n > 1 {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }
}

/// Tensor grid in `(x, y, t)`; node `(it, iy, ix)` is stored at
/// `(it * ny + iy) * nx + ix`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub t: Axis,
}

impl GridSpec {
    pub fn new(x: Axis, y: Axis, t: Axis) -> Result<Self> {
        for (name, a) in [("x", x), ("y", y), ("t", t)] {
            if a.n == 0 || !(a.max >= a.min) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::Invalid(format!("bad {name} axis")));
            }
        }
        Ok(Self { x, y, t })
    }

    /// Square spatial grid with three time slices around `t0`.
    pub fn square(half_width: f64, n: usize, t0: f64) -> Self {
        let x = Axis::new(-half_width, half_width, n);
        let h = x.step();
        Self { x, y: x, t: Axis::centered(t0, h) }
    }

    pub fn len(&self) -> usize {
        self.x.n * self.y.n * self.t.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, it: usize, iy: usize, ix: usize) -> usize {
        (it * self.y.n + iy) * self.x.n + ix
    }

    pub fn unindex(&self, k: usize) -> (usize, usize, usize) {
        let ix = k % self.x.n;
        let iy = (k / self.x.n) % self.y.n;
        let it = k / (self.x.n * self.y.n);
        (it, iy, ix)
    }

    pub fn point(&self, k: usize) -> Point {
        let (it, iy, ix) = self.unindex(k);
        Point::new(self.x.at(ix), self.y.at(iy), self.t.at(it))
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    fn interior(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for it in 1..self.t.n.saturating_sub(1) {
            for iy in 1..self.y.n.saturating_sub(1) {
                for ix in 1..self.x.n.saturating_sub(1) {
                    out.push((it, iy, ix));
                }
            }
        }
        out
    }
}

/// Values of `(A_x, A_y, A_t, phi)` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub ax: CMatrix,
    pub ay: CMatrix,
    pub at: CMatrix,
    pub phi: CMatrix,
}

impl FieldSample {
    pub fn zero(n: usize) -> Self {
        let z = CMatrix::zeros(n, n);
        Self { ax: z.clone(), ay: z.clone(), at: z.clone(), phi: z }
    }

    /// From the light-cone data `A_xi`, `A_eta`, `U = A_y + phi`, `W = phi - A_y`.
    pub fn from_light_cone(a_xi: &CMatrix, a_eta: &CMatrix, u: &CMatrix, w: &CMatrix) -> Self {
        let half = C64::from(0.5);
        Self {
            ax: (a_xi - a_eta) * half,
            at: (a_xi + a_eta) * half,
            ay: (u - w) * half,
            phi: (u + w) * half,
        }
    }

    pub fn max_distance(&self, o: &Self) -> f64 {
        op_norm(&(&self.ax - &o.ax))
            .max(op_norm(&(&self.ay - &o.ay)))
            .max(op_norm(&(&self.at - &o.at)))
            .max(op_norm(&(&self.phi - &o.phi)))
    }

    /// Largest deviation from anti-Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        [&self.ax, &self.ay, &self.at, &self.phi]
            .iter()
            .map(|m| op_norm(&(*m + m.adjoint())))
            .fold(0.0, f64::max)
    }
}

/// Gauge field and Higgs field sampled on a grid.
#[derive(Clone, Debug)]
pub struct MonopoleField {
    pub n: usize,
    pub grid: GridSpec,
    pub samples: Vec<FieldSample>,
}

impl MonopoleField {
    pub fn from_fn(n: usize, grid: GridSpec, f: impl Fn(&Point) -> Result<FieldSample> + Sync) -> Result<Self> {
        let samples = (0..grid.len()).into_par_iter().map(|k| f(&grid.point(k))).collect::<Result<Vec<_>>>()?;
        Ok(Self { n, grid, samples })
    }

    pub fn at(&self, it: usize, iy: usize, ix: usize) -> &FieldSample {
        &self.samples[self.grid.index(it, iy, ix)]
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.max_distance(b)).fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.max_distance(&FieldSample::zero(self.n))).fold(0.0, f64::max)
    }
}

/// `(A_xi, A_eta, U, W)` from the frame by solving the two Lax equations at
/// two real values of `tau`.
pub fn light_cone_fields(st: &Stencil) -> Result<[CMatrix; 4]> {
    let (ta, tb) = (C64::from(0.5), C64::from(-0.5));
    let lax = |t: C64| -> Result<(CMatrix, CMatrix)> {
        let (psi, [dy, dxi, deta]) = st.derivatives(t)?;
        let inv = inverse(&psi)?;
        Ok(((&dy * t - dxi) * &inv, (deta * t - &dy) * &inv))
    };
    let (l1a, l2a) = lax(ta)?;
    let (l1b, l2b) = lax(tb)?;
    let u = (&l1a - &l1b) / (ta - tb);
    let a_xi = &u * ta - &l1a;
    let a_eta = (&l2a - &l2b) / (ta - tb);
    let w = &l2a - &a_eta * ta;
    Ok([a_xi, a_eta, u, w])
}

pub fn fields_at(frame: &dyn Frame, p: &Point, h: f64) -> Result<FieldSample> {
    let st = Stencil::new(frame, p, h)?;
    let [a_xi, a_eta, u, w] = light_cone_fields(&st)?;
    Ok(FieldSample::from_light_cone(&a_xi, &a_eta, &u, &w))
}

/// Samples `(A, phi)` of a frame on a grid.
pub fn extract_monopole(frame: &dyn Frame, grid: &GridSpec) -> Result<MonopoleField> {
    extract_monopole_with_step(frame, grid, FRAME_STEP)
}

pub fn extract_monopole_with_step(frame: &dyn Frame, grid: &GridSpec, h: f64) -> Result<MonopoleField> {
    MonopoleField::from_fn(frame.n(), *grid, |p| fields_at(frame, p, h))
}

#[derive(Clone, Copy, Debug)]
enum Dir {
    X,
    Y,
    T,
}

fn diff<T>(grid: &GridSpec, it: usize, iy: usize, ix: usize, dir: Dir, get: impl Fn(usize) -> T) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Div<C64, Output = T>,
{
    let (a, b, h) = match dir {
        Dir::X => (grid.index(it, iy, ix + 1), grid.index(it, iy, ix - 1), grid.x.step()),
        Dir::Y => (grid.index(it, iy + 1, ix), grid.index(it, iy - 1, ix), grid.y.step()),
        Dir::T => (grid.index(it + 1, iy, ix), grid.index(it - 1, iy, ix), grid.t.step()),
    };
    (get(a) - get(b)) / C64::from(2.0 * h)
}

/// Pointwise residuals of the three monopole equations.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ResidualReport {
    pub max: f64,
    pub components: [f64; 3],
    pub nodes: usize,
}

/// Max over interior nodes of the Frobenius norms of
/// `nabla_t phi + F_xy`, `nabla_x phi - F_yt` and `nabla_y phi + F_xt`.
pub fn monopole_residual(field: &MonopoleField) -> Result<ResidualReport> {
    let g = &field.grid;
    let nodes = g.interior();
    if nodes.is_empty() {
        return Err(Error::Invalid("grid needs at least three nodes along every axis".into()));
    }
    let s = &field.samples;
    let per: Vec<[f64; 3]> = nodes
        .par_iter()
        .map(|&(it, iy, ix)| {
            let d = |dir: Dir, f: fn(&FieldSample) -> &CMatrix| diff(g, it, iy, ix, dir, |k| f(&s[k]).clone());
            let c = &s[g.index(it, iy, ix)];
            let (ax, ay, at, phi) = (&c.ax, &c.ay, &c.at, &c.phi);
            let f = |a: &CMatrix, b: &CMatrix, da_b: CMatrix, db_a: CMatrix| -> CMatrix {
                -da_b + db_a + commutator(a, b)
            };
            // F_ab = -d_a A_b + d_b A_a + [A_a, A_b]
            let f_xy = f(ax, ay, d(Dir::X, |s| &s.ay), d(Dir::Y, |s| &s.ax));
            let f_yt = f(ay, at, d(Dir::Y, |s| &s.at), d(Dir::T, |s| &s.ay));
            let f_xt = f(ax, at, d(Dir::X, |s| &s.at), d(Dir::T, |s| &s.ax));
            let nab = |dir: Dir, a: &CMatrix| d(dir, |s| &s.phi) - commutator(a, phi);
            let r0 = nab(Dir::T, at) + f_xy;
            let r1 = nab(Dir::X, ax) - f_yt;
            let r2 = nab(Dir::Y, ay) + f_xt;
            let fro = |m: &CMatrix| m.norm();
            [fro(&r0), fro(&r1), fro(&r2)]
        })
        .collect();
    let mut rep = ResidualReport { nodes: per.len(), ..Default::default() };
    for r in per {
        for i in 0..3 {
            rep.components[i] = rep.components[i].max(r[i]);
        }
    }
    rep.max = rep.components.iter().copied().fold(0.0, f64::max);
    Ok(rep)
}

/// A map `u: R^{2+1} -> U(n)` with derivatives.
pub trait GaugeFunction: Sync {
    fn value(&self, p: &Point) -> CMatrix;

    /// `(d_x u, d_y u, d_t u)`, by default from a fourth-order stencil.
    fn derivatives(&self, p: &Point) -> [CMatrix; 3] {
        let h = 1e-3;
        let d = |dx: f64, dy: f64, dt: f64| {
            let f = |k: f64| self.value(&p.shifted(k * dx, k * dy, k * dt));
            (f(-2.0 * h) - f(-h) * C64::from(8.0) + f(h) * C64::from(8.0) - f(2.0 * h)) / C64::from(12.0 * h)
        };
        [d(1.0, 0.0, 0.0), d(0.0, 1.0, 0.0), d(0.0, 0.0, 1.0)]
    }
}

impl<F: Fn(&Point) -> CMatrix + Sync> GaugeFunction for F {
    fn value(&self, p: &Point) -> CMatrix {
        self(p)
    }
}

/// `A -> u A u^{-1} + (du) u^{-1}`, `phi -> u phi u^{-1}`.
pub fn gauge_transform_sample(u: &dyn GaugeFunction, p: &Point, s: &FieldSample) -> Result<FieldSample> {
    let v = u.value(p);
    let vi = inverse(&v)?;
    let [dx, dy, dt] = u.derivatives(p);
    let conj = |a: &CMatrix| &v * a * &vi;
    Ok(FieldSample {
        ax: conj(&s.ax) + dx * &vi,
        ay: conj(&s.ay) + dy * &vi,
        at: conj(&s.at) + dt * &vi,
        phi: conj(&s.phi),
    })
}

pub fn gauge_transform(u: &dyn GaugeFunction, field: &MonopoleField) -> Result<MonopoleField> {
    let samples = field
        .samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| gauge_transform_sample(u, &field.grid.point(k), s))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonopoleField { n: field.n, grid: field.grid, samples })
}

/// A map into `U(n)` sampled on a grid.
#[derive(Clone, Debug)]
pub struct WardMap {
    pub n: usize,
    pub grid: GridSpec,
    pub theta: f64,
    pub values: Vec<CMatrix>,
}

fn eval_riemann(m: &RationalMatrixMap, z: Riemann) -> Result<CMatrix> {
    match z {
        Riemann::Infinity => Ok(m.value_at_infinity().clone()),
        Riemann::Finite(t) => m.eval(t),
    }
}

/// `g = E(e^{i theta})^{-1} E(-e^{i theta})` with `E(mu) = psi(tau(mu))`.
pub fn ward_map_at(frame: &dyn Frame, theta: f64, p: &Point) -> Result<CMatrix> {
    let m = frame.map_at(p)?;
    let a = eval_riemann(&m, tau_of_unit_mu(theta))?;
    let b = eval_riemann(&m, tau_of_unit_mu(theta + std::f64::consts::PI))?;
    Ok(inverse(&a)? * b)
}

pub fn extract_ward_map(frame: &dyn Frame, theta: f64, grid: &GridSpec) -> Result<WardMap> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| ward_map_at(frame, theta, &grid.point(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WardMap { n: frame.n(), grid: *grid, theta, values })
}

impl WardMap {
    /// Currents `J_a = g_a g^{-1}` and `(J_a)_a` at an interior node.
    fn currents(&self, it: usize, iy: usize, ix: usize) -> Result<([CMatrix; 3], [CMatrix; 3])> {
        let g = &self.grid;
        let v = &self.values;
        let c = &v[g.index(it, iy, ix)];
        let gi = inverse(c)?;
        let mut j = Vec::with_capacity(3);
        let mut dj = Vec::with_capacity(3);
        for (dir, h) in [(Dir::X, g.x.step()), (Dir::Y, g.y.step()), (Dir::T, g.t.step())] {
            let (pl, mi) = match dir {
                Dir::X => (g.index(it, iy, ix + 1), g.index(it, iy, ix - 1)),
                Dir::Y => (g.index(it, iy + 1, ix), g.index(it, iy - 1, ix)),
                Dir::T => (g.index(it + 1, iy, ix), g.index(it - 1, iy, ix)),
            };
            let ga = (&v[pl] - &v[mi]) / C64::from(2.0 * h);
            let gaa = (&v[pl] - c * C64::from(2.0) + &v[mi]) / C64::from(h * h);
            let ja = &ga * &gi;
            dj.push(gaa * &gi - &ja * &ja);
            j.push(ja);
        }
        Ok(([j[0].clone(), j[1].clone(), j[2].clone()], [dj[0].clone(), dj[1].clone(), dj[2].clone()]))
    }

    /// Max over interior nodes of
    /// `|-(J_t)_t + (J_x)_x + (J_y)_y + [J_t, cos(theta) J_x + sin(theta) J_y]|`.
    pub fn residual(&self) -> Result<f64> {
        let (s, co) = self.theta.sin_cos();
        self.max_over_interior(|[jx, jy, jt], [djx, djy, djt]| {
            -djt + djx + djy + commutator(&jt, &(jx * C64::from(co) + jy * C64::from(s)))
        })
    }

    /// Max of `|(J_t)_t - (J_x)_x - (J_y)_y - [J_t, J_x]|`.
    pub fn be_residual(&self) -> Result<f64> {
        self.max_over_interior(|[jx, _jy, jt], [djx, djy, djt]| djt - djx - djy - commutator(&jt, &jx))
    }

    fn max_over_interior(&self, f: impl Fn([CMatrix; 3], [CMatrix; 3]) -> CMatrix + Sync) -> Result<f64> {
        let nodes = self.grid.interior();
        if nodes.is_empty() {
            return Err(Error::Invalid("grid needs at least three nodes along every axis".into()));
        }
        let vals = nodes
            .par_iter()
            .map(|&(it, iy, ix)| {
                let (j, dj) = self.currents(it, iy, ix)?;
                Ok(f(j, dj).norm())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// Largest `|g^* g - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.values.iter().map(|g| op_norm(&(g.adjoint() * g - identity(self.n)))).fold(0.0, f64::max)
    }

    /// `c1 g c2` for constant matrices.
    pub fn constant_gauge(&self, c1: &CMatrix, c2: &CMatrix) -> Self {
        Self { values: self.values.iter().map(|g| c1 * g * c2).collect(), ..self.clone() }
    }

    /// Energy density `1/2 sum_a |g_a g^{-1}|^2` on the middle time slice,
    /// with one-sided differences on the spatial boundary.
    pub fn energy_density(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        if g.t.n < 3 || g.x.n < 3 || g.y.n < 3 {
            return Err(Error::Invalid("energy density needs at least three nodes along every axis".into()));
        }
        let it = g.t.n / 2;
        let v = &self.values;
        let one_sided = |i: usize, n: usize, k: &dyn Fn(usize) -> usize, h: f64| -> CMatrix {
            if i == 0 {
                (&v[k(0)] * C64::from(-3.0) + &v[k(1)] * C64::from(4.0) - &v[k(2)]) / C64::from(2.0 * h)
            } else if i == n - 1 {
                (&v[k(n - 1)] * C64::from(3.0) - &v[k(n - 2)] * C64::from(4.0) + &v[k(n - 3)]) / C64::from(2.0 * h)
            } else {
                (&v[k(i + 1)] - &v[k(i - 1)]) / C64::from(2.0 * h)
            }
        };
        let mut out = Vec::with_capacity(g.x.n * g.y.n);
        for iy in 0..g.y.n {
            for ix in 0..g.x.n {
                let gi = inverse(&v[g.index(it, iy, ix)])?;
                let gx = one_sided(ix, g.x.n, &|i| g.index(it, iy, i), g.x.step());
                let gy = one_sided(iy, g.y.n, &|i| g.index(it, i, ix), g.y.step());
                let gt = one_sided(it, g.t.n, &|i| g.index(i, iy, ix), g.t.step());
                let e: f64 = [gx, gy, gt].iter().map(|d| (d * &gi).norm_squared()).sum();
                out.push(0.5 * e);
            }
        }
        Ok(out)
    }
}

/// Monopole fields of the Backlund transform of `base`, computed from the
/// fields of `base` and the transported projector:
/// `A~_xi = (1 - a'/a) (d_xi pi~) h + h^{-1} A_xi h`,
/// `A~_y - phi~ = (1 - a'/a) (d_y pi~) h + h^{-1} (A_y - phi) h`,
/// `A~_eta = A_eta`, `A~_y + phi~ = A_y + phi`, where `a' = conj alpha` and
/// `h = pi~ + (alpha / a') (1 - pi~)`.
pub fn monopole_bt_fields(
    base: &dyn Frame,
    alpha: C64,
    source: &dyn ProjectorField,
    grid: &GridSpec,
) -> Result<MonopoleField> {
    let hs = FRAME_STEP;
    MonopoleField::from_fn(base.n(), *grid, |p| {
        let st = Stencil::new(base, p, hs)?;
        let [a_xi, a_eta, u, w] = light_cone_fields(&st)?;
        let tilde = |q: &Point| -> Result<CMatrix> {
            Ok(bt_projector(&base.map_at(q)?, alpha, &source.projector_at(q)?)?.into_matrix())
        };
        let pt = tilde(p)?;
        let d = |dxi: f64, dy: f64| -> Result<CMatrix> {
            let at = |k: f64| tilde(&p.shifted_lc(k * dxi, 0.0, k * dy));
            Ok(((at(hs)? - at(-hs)?) * C64::from(8.0) - (at(2.0 * hs)? - at(-2.0 * hs)?)) / C64::from(12.0 * hs))
        };
        let (dpi_xi, dpi_y) = (d(1.0, 0.0)?, d(0.0, 1.0)?);
        let n = base.n();
        let perp = identity(n) - &pt;
        let r = alpha / alpha.conj();
        let hm = &pt + &perp * r;
        let hinv = &pt + &perp / r;
        let k = C64::from(1.0) - alpha.conj() / alpha;
        let a_xi_new = &dpi_xi * k * &hm + &hinv * &a_xi * &hm;
        // A_y - phi = -W
        let ay_minus_phi = &dpi_y * k * &hm - &hinv * &w * &hm;
        Ok(FieldSample::from_light_cone(&a_xi_new, &a_eta, &u, &(-ay_minus_phi)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holomorphic::{CharacteristicProjector, PolyCurve};
    use crate::linalg::c;
    use crate::soliton::{bt_superpose, one_soliton, FrameRef};
    use std::sync::Arc;

    fn curve_w() -> PolyCurve {
        PolyCurve::new(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap()
    }

    fn frame() -> FrameRef {
        Arc::new(one_soliton(c(0.0, 1.0), vec![curve_w()]).unwrap())
    }

    #[test]
    fn ward_frame_field_identities() {
        let f = frame();
        let p = Point::new(0.2, 0.4, -0.1);
        let s = fields_at(f.as_ref(), &p, FRAME_STEP).unwrap();
        assert!(s.hermitian_defect() < 1e-8);
        // A_t = A_x and phi = -A_y for frames of Ward type
        assert!(op_norm(&(&s.at - &s.ax)) < 1e-8);
        assert!(op_norm(&(&s.phi + &s.ay)) < 1e-8);
    }

    #[test]
    fn residual_converges() {
        let f = frame();
        let r1 = monopole_residual(&extract_monopole(f.as_ref(), &GridSpec::square(0.4, 5, 0.1)).unwrap()).unwrap();
        let r2 = monopole_residual(&extract_monopole(f.as_ref(), &GridSpec::square(0.4, 9, 0.1)).unwrap()).unwrap();
        assert!(r2.max < r1.max / 3.0, "{r1:?} {r2:?}");
    }

    #[test]
    fn bt_fields_match_direct() {
        let f = frame();
        let a2 = c(0.3, -0.8);
        let src = CharacteristicProjector::new(a2, vec![PolyCurve::constant(&[c(1.0, 0.0), c(0.2, 1.0)])]).unwrap();
        let g = GridSpec::square(0.3, 3, 0.0);
        let via = monopole_bt_fields(f.as_ref(), a2, &src, &g).unwrap();
        let two = bt_superpose(f, a2, Arc::new(src.clone())).unwrap();
        let direct = extract_monopole(&two, &g).unwrap();
        assert!(via.max_distance(&direct) < 1e-7, "{}", via.max_distance(&direct));
    }

    #[test]
    fn ward_map_theta_zero_is_inverse_psi0() {
        let f = frame();
        let p = Point::new(0.1, 0.2, 0.3);
        let g = ward_map_at(f.as_ref(), 0.0, &p).unwrap();
        let psi0 = f.eval(&p, c(0.0, 0.0)).unwrap();
        assert!(op_norm(&(g * psi0 - identity(2))) < 1e-13);
    }

    #[test]
    fn gauge_covariance_of_residual_formula() {
        let f = frame();
        let g = GridSpec::square(0.2, 3, 0.0);
        let field = extract_monopole(f.as_ref(), &g).unwrap();
        let u = |p: &Point| -> CMatrix {
            let a = 0.3 * p.x + 0.2 * p.t;
            CMatrix::from_row_slice(2, 2, &[c(a.cos(), 0.0), c(a.sin(), 0.0), c(-a.sin(), 0.0), c(a.cos(), 0.0)])
        };
        let h = gauge_transform(&u, &field).unwrap();
        for (a, b) in field.samples.iter().zip(&h.samples) {
            let d = (a.phi.clone() * &a.phi).trace() - (b.phi.clone() * &b.phi).trace();
            assert!(d.norm() < 1e-12);
        }
    }
}
