//! Points of R^{2+1}, light-cone coordinates, the Lorentz group SO(2,1)
//! together with its double cover SL(2,R), and the spectral parameter in
//! its three charts.

use crate::error::{Error, Result};
use crate::linalg::{c, C64, I};
use serde::{Deserialize, Serialize};

/// Point of space-time with coordinates `(x, y, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn xi(&self) -> f64 {
        (self.t + self.x) / 2.0
    }

    pub fn eta(&self) -> f64 {
        (self.t - self.x) / 2.0
    }

    pub fn from_light_cone(xi: f64, eta: f64, y: f64) -> Self {
        Self { x: xi - eta, y, t: xi + eta }
    }

    /// Characteristic variable `w = y + alpha xi + eta / alpha`.
    pub fn characteristic(&self, alpha: C64) -> C64 {
        self.y + alpha * self.xi() + self.eta() / alpha
    }

    pub fn shifted(&self, dx: f64, dy: f64, dt: f64) -> Self {
        Self { x: self.x + dx, y: self.y + dy, t: self.t + dt }
    }

    /// Shift in light-cone coordinates.
    pub fn shifted_lc(&self, dxi: f64, deta: f64, dy: f64) -> Self {
        Self { x: self.x + dxi - deta, y: self.y + dy, t: self.t + dxi + deta }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }
}

/// The quadratic form preserved by the Lorentz group on `(x, y, t)`.
pub fn minkowski(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] - v[2] * v[2]
}

/// Element of SO(2,1) acting on `(x, y, t)`, tracked together with a lift to
/// SL(2,R) so that it can also act on the spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzElement {
    pub matrix: [[f64; 3]; 3],
    pub sigma: [[f64; 2]; 2],
}

impl LorentzElement {
    pub fn identity() -> Self {
        Self {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            sigma: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Rotation of the `(x, y)` plane by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, co) = theta.sin_cos();
        let (sh, ch) = (theta / 2.0).sin_cos();
        Self {
            matrix: [[co, -s, 0.0], [s, co, 0.0], [0.0, 0.0, 1.0]],
            sigma: [[ch, sh], [-sh, ch]],
        }
    }

    /// Boost in the `(x, t)` plane with rapidity `s`.
    pub fn boost(s: f64) -> Self {
        Self {
            matrix: [[s.cosh(), 0.0, s.sinh()], [0.0, 1.0, 0.0], [s.sinh(), 0.0, s.cosh()]],
            sigma: [[(s / 2.0).exp(), 0.0], [0.0, (-s / 2.0).exp()]],
        }
    }

    /// Validates a general element given both the 3x3 matrix and its lift.
    pub fn from_parts(matrix: [[f64; 3]; 3], sigma: [[f64; 2]; 2]) -> Result<Self> {
        let det2 = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
        if (det2 - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("SL(2,R) lift has determinant {det2}")));
        }
        let e = Self { matrix, sigma };
        let eta = [1.0, 1.0, -1.0];
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| matrix[k][i] * eta[k] * matrix[k][j]).sum();
                let target = if i == j { eta[i] } else { 0.0 };
                if (v - target).abs() > 1e-9 {
                    return Err(Error::Invalid("matrix does not preserve the Minkowski form".into()));
                }
            }
        }
        if matrix[2][2] < 0.0 {
            return Err(Error::Invalid("matrix is not orthochronous".into()));
        }
        Ok(e)
    }

    /// `self * other`, acting as `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum();
            }
        }
        let mut s = [[0.0; 2]; 2];
        for (i, row) in s.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..2).map(|k| self.sigma[i][k] * other.sigma[k][j]).sum();
            }
        }
        Self { matrix: m, sigma: s }
    }

    pub fn inverse(&self) -> Self {
        let mut m = [[0.0; 3]; 3];
        let eta = [1.0, 1.0, -1.0];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = eta[i] * self.matrix[j][i] * eta[j];
            }
        }
        let s = self.sigma;
        Self { matrix: m, sigma: [[s[1][1], -s[0][1]], [-s[1][0], s[0][0]]] }
    }

    pub fn act_on_point(&self, p: &Point) -> Point {
        let v = p.as_array();
        let r: Vec<f64> = (0..3).map(|i| (0..3).map(|k| self.matrix[i][k] * v[k]).sum()).collect();
        Point::new(r[0], r[1], r[2])
    }

    /// `sigma * lambda = (a lambda + b) / (c lambda + d)`.
    pub fn act_on_lambda(&self, lambda: Riemann) -> Riemann {
        let [[a, b], [cc, d]] = self.sigma;
        Riemann::mobius(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0), lambda)
    }

    /// The induced action in the disc chart `mu`.
    pub fn act_on_mu(&self, mu: Riemann) -> Riemann {
        SpectralParam::from_mu(mu).map_lambda(|l| self.act_on_lambda(l)).mu()
    }

    /// Action in the `tau = 1/lambda` chart, returned as Mobius coefficients
    /// `(a, b, c, d)` with `tau -> (a tau + b) / (c tau + d)`.
    pub fn tau_mobius(&self) -> [f64; 4] {
        let [[a, b], [cc, d]] = self.sigma;
        // 1 / sigma(1/tau) = (c + d tau) / (a + b tau)
        [d, cc, b, a]
    }
}

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Riemann {
    Finite(C64),
    Infinity,
}

impl Riemann {
    pub fn finite(self) -> Option<C64> {
        match self {
            Riemann::Finite(z) => Some(z),
            Riemann::Infinity => None,
        }
    }

    pub fn mobius(a: C64, b: C64, cc: C64, d: C64, z: Riemann) -> Riemann {
        match z {
            Riemann::Infinity => {
                if cc.norm() == 0.0 {
                    Riemann::Infinity
                } else {
                    Riemann::Finite(a / cc)
                }
            }
            Riemann::Finite(z) => {
                let den = cc * z + d;
                if den.norm() <= 1e-300 {
                    Riemann::Infinity
                } else {
                    Riemann::Finite((a * z + b) / den)
                }
            }
        }
    }

    pub fn distance(self, other: Riemann) -> f64 {
        // chordal distance
        let chord = |z: Riemann| -> [f64; 3] {
            match z {
                Riemann::Infinity => [0.0, 0.0, 1.0],
                Riemann::Finite(w) => {
                    let r = 1.0 + w.norm_sqr();
                    [2.0 * w.re / r, 2.0 * w.im / r, (w.norm_sqr() - 1.0) / r]
                }
            }
        };
        let (p, q) = (chord(self), chord(other));
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Lambda,
    Mu,
    Tau,
}

/// The spectral parameter, stored in the `lambda` chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam {
    lambda: Riemann,
}

impl SpectralParam {
    pub fn from_lambda(lambda: Riemann) -> Self {
        Self { lambda }
    }

    /// `lambda = i (1 + mu) / (1 - mu)`.
    pub fn from_mu(mu: Riemann) -> Self {
        Self { lambda: Riemann::mobius(I, I, c(-1.0, 0.0), c(1.0, 0.0), mu) }
    }

    /// `lambda = 1 / tau`.
    pub fn from_tau(tau: Riemann) -> Self {
        Self { lambda: Riemann::mobius(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), tau) }
    }

    pub fn from_chart(chart: Chart, z: Riemann) -> Self {
        match chart {
            Chart::Lambda => Self::from_lambda(z),
            Chart::Mu => Self::from_mu(z),
            Chart::Tau => Self::from_tau(z),
        }
    }

    pub fn lambda(&self) -> Riemann {
        self.lambda
    }

    /// `mu = (lambda - i) / (lambda + i)`.
    pub fn mu(&self) -> Riemann {
        Riemann::mobius(c(1.0, 0.0), -I, c(1.0, 0.0), I, self.lambda)
    }

    pub fn tau(&self) -> Riemann {
        Riemann::mobius(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), self.lambda)
    }

    pub fn in_chart(&self, chart: Chart) -> Riemann {
        match chart {
            Chart::Lambda => self.lambda(),
            Chart::Mu => self.mu(),
            Chart::Tau => self.tau(),
        }
    }

    pub fn map_lambda(self, f: impl FnOnce(Riemann) -> Riemann) -> Self {
        Self { lambda: f(self.lambda) }
    }
}

/// `tau` corresponding to `mu = e^{i theta}`, which is `-tan(theta/2)`.
pub fn tau_of_unit_mu(theta: f64) -> Riemann {
    SpectralParam::from_mu(Riemann::Finite(C64::from_polar(1.0, theta))).tau()
}
