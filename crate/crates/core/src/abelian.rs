//! Exact solutions of the abelian (u(1)) reduction: plane waves solving the
//! linear wave equation, the rho-regularity ODE, and closed-form scattering
//! data for windowed plane waves.

use crate::error::{Error, Result};
use crate::fields::{FieldSample, GridSpec, MonopoleField, ResidualReport};
use crate::geometry::Point;
use crate::linalg::{CMatrix, C64};
use crate::scattering::{ScatteringData, SpatialField};
use serde::{Deserialize, Serialize};

/// `phi = A cos(k.x - omega t)`, `a = (A omega / |k|^2) (k_y, -k_x) cos(k.x - omega t)`, `a_0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelianSolution {
    pub kx: f64,
    pub ky: f64,
    pub omega: f64,
    pub amplitude: f64,
}

pub fn plane_wave(kx: f64, ky: f64, amplitude: f64) -> Result<AbelianSolution> {
    let k = kx.hypot(ky);
    if k == 0.0 || !k.is_finite() || !amplitude.is_finite() {
        return Err(Error::Invalid("plane wave needs a finite nonzero wavevector".into()));
    }
    Ok(AbelianSolution { kx, ky, omega: k, amplitude })
}

/// Scalar values and first derivatives `(f, f_x, f_y, f_t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl AbelianSolution {
    fn phase(&self, p: &Point) -> f64 {
        self.kx * p.x + self.ky * p.y - self.omega * p.t
    }

    fn k2(&self) -> f64 {
        self.kx * self.kx + self.ky * self.ky
    }

    fn jet(&self, p: &Point, scale: f64) -> Jet {
        let (s, c) = self.phase(p).sin_cos();
        Jet { v: scale * c, x: -scale * self.kx * s, y: -scale * self.ky * s, t: scale * self.omega * s }
    }

    pub fn phi(&self, p: &Point) -> Jet {
        self.jet(p, self.amplitude)
    }

    pub fn a(&self, p: &Point) -> (Jet, Jet) {
        let b = self.amplitude * self.omega / self.k2();
        (self.jet(p, b * self.ky), self.jet(p, -b * self.kx))
    }

    /// `*da - phi_t` with `*da = d_x a_2 - d_y a_1`.
    pub fn hodge_defect(&self, p: &Point) -> f64 {
        let (a1, a2) = self.a(p);
        (a2.x - a1.y - self.phi(p).t).abs()
    }

    /// Divergence `d_x a_1 + d_y a_2`.
    pub fn divergence(&self, p: &Point) -> f64 {
        let (a1, a2) = self.a(p);
        (a1.x + a2.y).abs()
    }

    /// Embedded as `i * scalar * I_n`.
    pub fn sample(&self, p: &Point, n: usize) -> FieldSample {
        let (a1, a2) = self.a(p);
        let emb = |v: f64| CMatrix::identity(n, n) * C64::new(0.0, v);
        FieldSample { ax: emb(a1.v), ay: emb(a2.v), at: emb(0.0), phi: emb(self.phi(p).v) }
    }

    pub fn sample_field(&self, grid: &GridSpec, n: usize) -> MonopoleField {
        MonopoleField { n, grid: *grid, samples: grid.points().iter().map(|p| self.sample(p, n)).collect() }
    }

    /// Monopole residual from the closed-form derivatives; only rounding
    /// remains.
    pub fn exact_residual(&self, points: &[Point]) -> ResidualReport {
        let mut rep = ResidualReport { nodes: points.len(), ..Default::default() };
        for p in points {
            let (a1, a2) = self.a(p);
            let phi = self.phi(p);
            // abelian: brackets vanish and a_0 = 0
            let r0 = phi.t - a2.x + a1.y;
            let r1 = phi.x - a2.t;
            let r2 = phi.y + a1.t;
            for (i, r) in [r0, r1, r2].into_iter().enumerate() {
                rep.components[i] = rep.components[i].max(r.abs());
            }
        }
        rep.max = rep.components.iter().copied().fold(0.0, f64::max);
        rep
    }

    /// Max over grid nodes of the two gauge constraints.
    pub fn constraint_defect(&self, grid: &GridSpec) -> f64 {
        grid.points().iter().map(|p| self.hodge_defect(p).max(self.divergence(p))).fold(0.0, f64::max)
    }
}

/// Result of integrating `du/ds = a_1 sin(alpha) - a_2 cos(alpha) + phi` along
/// `(sin alpha, -cos alpha)` from the upstream edge of the box, where `u = 0`.
#[derive(Clone, Debug)]
pub struct RhoRegularity {
    pub grid: GridSpec,
    pub t_index: usize,
    pub u: Vec<f64>,
    /// Max `|u|` on nodes at the downstream edge of the box.
    pub exit_max: f64,
    pub decays: bool,
}

fn line_to_edge(grid: &GridSpec, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
    // largest s >= 0 with (x - s dx, y - s dy) still in the box
    let mut s = f64::INFINITY;
    for (c, d, lo, hi) in [(x, dx, grid.x.min, grid.x.max), (y, dy, grid.y.min, grid.y.max)] {
        if d > 1e-15 {
            s = s.min((c - lo) / d);
        } else if d < -1e-15 {
            s = s.min((c - hi) / d);
        }
    }
    s.max(0.0)
}

pub fn rho_regular_u(sol: &AbelianSolution, alpha: f64, grid: &GridSpec, t_index: usize, step: f64) -> RhoRegularity {
    let (dx, dy) = (alpha.sin(), -alpha.cos());
    let t = grid.t.at(t_index);
    let integrand = |x: f64, y: f64| {
        let p = Point::new(x, y, t);
        let (a1, a2) = sol.a(&p);
        a1.v * alpha.sin() - a2.v * alpha.cos() + sol.phi(&p).v
    };
    let mut u = Vec::with_capacity(grid.x.n * grid.y.n);
    for iy in 0..grid.y.n {
        for ix in 0..grid.x.n {
            let (x, y) = (grid.x.at(ix), grid.y.at(iy));
            let len = line_to_edge(grid, x, y, dx, dy);
            u.push(simpson(|s| integrand(x - (len - s) * dx, y - (len - s) * dy), len, step));
        }
    }
    // downstream edge: nodes from which a small forward step leaves the box
    let mut exit_max: f64 = 0.0;
    let (hx, hy) = (grid.x.step(), grid.y.step());
    for iy in 0..grid.y.n {
        for ix in 0..grid.x.n {
            let (x, y) = (grid.x.at(ix) + 0.5 * hx * dx, grid.y.at(iy) + 0.5 * hy * dy);
            if x < grid.x.min || x > grid.x.max || y < grid.y.min || y > grid.y.max {
                exit_max = exit_max.max(u[iy * grid.x.n + ix].abs());
            }
        }
    }
    let interior_max = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    RhoRegularity { grid: *grid, t_index, u, exit_max, decays: exit_max <= 1e-3 * interior_max.max(1e-300) }
}

/// Composite Simpson on `[0, len]` with spacing at most `step`.
pub fn simpson(f: impl Fn(f64) -> f64, len: f64, step: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let mut m = (len / step).ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let m = m.max(2);
    let h = len / m as f64;
    let mut acc = f(0.0) + f(len);
    for i in 1..m {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Spatial initial data of a plane wave under a Gaussian window:
/// `phi = A G cos(k.x)`, `a = (A / |k|) (k_y, -k_x) G cos(k.x)`, `G = exp(-|x|^2 / w^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub kx: f64,
    pub ky: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl WavePacket {
    pub fn new(kx: f64, ky: f64, amplitude: f64, width: f64) -> Result<Self> {
        plane_wave(kx, ky, amplitude)?;
        if !(width > 0.0) {
            return Err(Error::Invalid("packet width must be positive".into()));
        }
        Ok(Self { kx, ky, amplitude, width })
    }

    fn scalar(&self, x: f64, y: f64) -> f64 {
        let g = (-(x * x + y * y) / (self.width * self.width)).exp();
        self.amplitude * g * (self.kx * x + self.ky * y).cos()
    }

    /// `(a_1, a_2, phi)` at a point.
    pub fn values(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let s = self.scalar(x, y);
        let k = self.kx.hypot(self.ky);
        (s * self.ky / k, -s * self.kx / k, s)
    }

    /// `g(y') = int (a_{x'} - phi) dx'` in closed form, where for direction
    /// `theta` the chart is `x' e1 + y' e2`, `e1 = (-sin, cos)`, `e2 = (-cos, -sin)`.
    pub fn line_integral(&self, theta: f64, yp: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let k = self.kx.hypot(self.ky);
        let c_theta = -(self.kx * c + self.ky * s) / k;
        let k1 = -self.kx * s + self.ky * c;
        let k2 = -self.kx * c - self.ky * s;
        let w = self.width;
        self.amplitude
            * (c_theta - 1.0)
            * std::f64::consts::PI.sqrt()
            * w
            * (-k1 * k1 * w * w / 4.0).exp()
            * (-yp * yp / (w * w)).exp()
            * (k2 * yp).cos()
    }

    /// `H[g](y) = (1/pi) PV int g(s) / (y - s) ds`, by quadrature of the
    /// symmetrized integrand `(g(y - s) - g(y + s)) / s` on `s > 0`.
    pub fn hilbert_line_integral(&self, theta: f64, yp: f64) -> f64 {
        let g = |y: f64| self.line_integral(theta, y);
        let len = yp.abs() + 12.0 * self.width;
        let step = self.width / 400.0;
        let f = |s: f64| {
            if s == 0.0 {
                // limit -2 g'(y)
                let h = 1e-5;
                -(g(yp + h) - g(yp - h)) / h
            } else {
                (g(yp - s) - g(yp + s)) / s
            }
        };
        simpson(f, len, step) / std::f64::consts::PI
    }
}

impl SpatialField for WavePacket {
    fn n(&self) -> usize {
        1
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        let (a1, a2, phi) = self.values(x, y);
        let emb = |v: f64| CMatrix::from_element(1, 1, C64::new(0.0, v));
        Ok(FieldSample { ax: emb(a1), ay: emb(a2), at: emb(0.0), phi: emb(phi) })
    }
}

/// Closed-form scattering data `s(sigma, theta) = exp(-H[g](-sigma))`.
pub fn abelian_scattering_exact(packet: &WavePacket, thetas: &[f64], sigmas: &[f64]) -> ScatteringData {
    let mut values = Vec::with_capacity(thetas.len() * sigmas.len());
    for &th in thetas {
        for &sg in sigmas {
            let v = (-packet.hilbert_line_integral(th, -sg)).exp();
            values.push(CMatrix::from_element(1, 1, C64::from(v)));
        }
    }
    ScatteringData { n: 1, thetas: thetas.to_vec(), sigmas: sigmas.to_vec(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{monopole_residual, Axis};

    #[test]
    fn dispersion() {
        let s = plane_wave(1.0, 0.0, 1.0).unwrap();
        assert_eq!(s.omega, 1.0);
        assert!(plane_wave(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn constraints_hold() {
        let s = plane_wave(0.7, -1.3, 0.5).unwrap();
        let g = GridSpec::square(3.0, 21, 0.4);
        assert!(s.constraint_defect(&g) <= 1e-10);
        assert!(s.exact_residual(&g.points()).max <= 1e-10);
    }

    #[test]
    fn grid_residual_second_order() {
        let s = plane_wave(1.0, 0.5, 1.0).unwrap();
        let r = |n: usize| monopole_residual(&s.sample_field(&GridSpec::square(1.0, n, 0.2), 2)).unwrap().max;
        let ratio = r(11) / r(21);
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn rho_regular_parallel_wave_does_not_decay() {
        // k parallel to the integration direction (sin a, -cos a) with a = pi/2
        let s = plane_wave(1.0, 0.0, 1.0).unwrap();
        let g = GridSpec::new(Axis::new(-5.0, 5.0, 41), Axis::new(-5.0, 5.0, 41), Axis::new(0.0, 0.0, 1)).unwrap();
        let r = rho_regular_u(&s, std::f64::consts::FRAC_PI_2, &g, 0, 0.01);
        assert!(!r.decays);
        assert!(r.exit_max > 0.1);
        // explicit oracle: u(x) = int_{-5}^{x} cos(s) ds (a_1 = 0, a_2 = -cos, alpha = pi/2)
        let ix = 30;
        let x = g.x.at(ix);
        let exact = x.sin() - (-5.0f64).sin();
        assert!((r.u[20 * 41 + ix] - exact).abs() < 1e-8);
    }

    #[test]
    fn rho_regular_directional_derivative() {
        let s = plane_wave(0.6, 0.8, 0.3).unwrap();
        let alpha = 0.4;
        let g = GridSpec::new(Axis::new(-3.0, 3.0, 121), Axis::new(-3.0, 3.0, 121), Axis::new(0.0, 0.0, 1)).unwrap();
        let r = rho_regular_u(&s, alpha, &g, 0, 0.005);
        let h = g.x.step();
        let (ix, iy) = (70, 50);
        let du = (alpha.sin() * (r.u[iy * 121 + ix + 1] - r.u[iy * 121 + ix - 1])
            - alpha.cos() * (r.u[(iy + 1) * 121 + ix] - r.u[(iy - 1) * 121 + ix]))
            / (2.0 * h);
        let p = Point::new(g.x.at(ix), g.y.at(iy), 0.0);
        let (a1, a2) = s.a(&p);
        let want = a1.v * alpha.sin() - a2.v * alpha.cos() + s.phi(&p).v;
        assert!((du - want).abs() < 1e-3, "{du} {want}");
    }

    #[test]
    fn packet_line_integral_closed_form() {
        let pk = WavePacket::new(2.0, 1.0, 0.02, 1.5).unwrap();
        let th = 0.9_f64;
        let yp = 0.37;
        let (s, c) = th.sin_cos();
        let f = |xp: f64| {
            let (x, y) = (-xp * s - yp * c, xp * c - yp * s);
            let (a1, a2, phi) = pk.values(x, y);
            -s * a1 + c * a2 - phi
        };
        let num = simpson(|u| f(u - 15.0), 30.0, 1e-3);
        assert!((num - pk.line_integral(th, yp)).abs() < 1e-12);
    }

    #[test]
    fn hilbert_of_gaussian() {
        // H[exp(-s^2)](y) = (2/sqrt(pi)) D(y), Dawson's integral; D(1) = 0.5380795069127684
        let pk = WavePacket::new(1e-9, 0.0, 1.0, 1.0).unwrap();
        // with kx tiny, k1 and k2 vanish and c_theta = -cos(theta); theta = pi/2 gives c = 0
        let th = std::f64::consts::FRAC_PI_2;
        let scale = -(std::f64::consts::PI.sqrt());
        let got = pk.hilbert_line_integral(th, 1.0) / scale;
        let want = 2.0 / std::f64::consts::PI.sqrt() * 0.5380795069127684;
        assert!((got - want).abs() < 1e-9, "{got} {want}");
    }
}
