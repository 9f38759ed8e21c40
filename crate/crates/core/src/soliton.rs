//! Frames of the Lax pair, Backlund transformations, limit pole data and
//! subtraction of soliton factors.

use crate::error::{Error, Result};
use crate::geometry::{LorentzElement, Point};
use crate::holomorphic::{perturbed_curve, CharacteristicProjector, PolyCurve, ProjectorField};
use crate::linalg::{
    identity, inverse, inverse_condition, op_norm, same_pole, CMatrix, HermitianProjector, RationalMatrixMap, C64,
    RANK_TOL,
};
use std::sync::Arc;

/// A solution `psi(p, tau)` of the linear system, given pointwise as a rational
/// map in `tau`.
pub trait Frame: Send + Sync {
    fn n(&self) -> usize;
    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap>;
    /// Poles in the `tau` chart with their orders.
    fn pole_data(&self) -> Vec<(C64, usize)>;

    fn eval(&self, p: &Point, tau: C64) -> Result<CMatrix> {
        self.map_at(p)?.eval(tau)
    }
}

pub type FrameRef = Arc<dyn Frame>;

/// Relative rank cutoff when reading projectors off computed residues.
pub const PEEL_RANK_TOL: f64 = 1e-6;
/// Relative size below which a Laurent coefficient counts as cancelled.
pub const CANCEL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct IdentityFrame {
    pub n: usize,
}

impl Frame for IdentityFrame {
    fn n(&self) -> usize {
        self.n
    }
    fn map_at(&self, _p: &Point) -> Result<RationalMatrixMap> {
        Ok(RationalMatrixMap::identity(self.n))
    }
    fn pole_data(&self) -> Vec<(C64, usize)> {
        Vec::new()
    }
}

/// A pole of order `k = chain.len()` at `alpha` with holomorphic curves
/// `a_0, ..., a_{k-1}`.
#[derive(Clone, Debug)]
pub struct PoleDatum {
    pub alpha: C64,
    pub chain: Vec<PolyCurve>,
}

impl PoleDatum {
    pub fn new(alpha: C64, chain: Vec<PolyCurve>) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Invalid("pole datum needs at least one curve".into()));
        }
        // validates alpha and the first curve
        CharacteristicProjector::new(alpha, vec![chain[0].clone()])?;
        let n = chain[0].n();
        if chain.iter().any(|c| c.n() != n) {
            return Err(Error::Dimension("curves of unequal dimension in chain".into()));
        }
        Ok(Self { alpha, chain })
    }

    pub fn multiplicity(&self) -> usize {
        self.chain.len()
    }

    pub fn n(&self) -> usize {
        self.chain[0].n()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitMethod {
    /// Exact limit of the transported direction from Laurent and Taylor series in `eps`.
    Series,
    /// Evaluation at `eps0, eps0/2, eps0/4` and Richardson extrapolation.
    Richardson,
}

/// Method, step sizes and acceptance rule for the limit `eps -> 0`.
#[derive(Clone, Copy, Debug)]
pub struct LimitConfig {
    pub method: LimitMethod,
    pub eps0: f64,
    pub ratio_min: f64,
    /// Relative size of extrapolation differences treated as converged.
    pub floor: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self { method: LimitMethod::Series, eps0: 1e-3, ratio_min: 3.0, floor: 1e-9 }
    }
}

#[derive(Clone)]
pub enum Layer {
    Simple { alpha: C64, source: Arc<dyn ProjectorField> },
    Limit { datum: PoleDatum },
}

impl Layer {
    fn alpha(&self) -> C64 {
        match self {
            Layer::Simple { alpha, .. } => *alpha,
            Layer::Limit { datum } => datum.alpha,
        }
    }

    fn order(&self) -> usize {
        match self {
            Layer::Simple { .. } => 1,
            Layer::Limit { datum } => datum.multiplicity(),
        }
    }
}

/// A frame built from a base frame by successive Backlund transformations.
#[derive(Clone)]
pub struct WardFrame {
    n: usize,
    base: Option<FrameRef>,
    layers: Vec<Layer>,
    limit: LimitConfig,
}

impl WardFrame {
    pub fn trivial(n: usize) -> Self {
        Self { n, base: None, layers: Vec::new(), limit: LimitConfig::default() }
    }

    pub fn on_base(base: FrameRef) -> Self {
        Self { n: base.n(), base: Some(base), layers: Vec::new(), limit: LimitConfig::default() }
    }

    pub fn with_limit_config(mut self, cfg: LimitConfig) -> Self {
        self.limit = cfg;
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    fn check_new_pole(&self, alpha: C64, n: usize) -> Result<()> {
        if alpha.im == 0.0 {
            return Err(Error::RealPole(alpha));
        }
        if n != self.n {
            return Err(Error::Dimension(format!("projector in C^{n} for frame in C^{}", self.n)));
        }
        for (b, _) in self.pole_data() {
            if same_pole(alpha, b) || same_pole(alpha, b.conj()) {
                return Err(Error::CoincidentPole(alpha));
            }
        }
        Ok(())
    }

    /// Adds a simple pole at `alpha` with the given projector field.
    pub fn superpose(&self, alpha: C64, source: Arc<dyn ProjectorField>) -> Result<Self> {
        self.check_new_pole(alpha, source.n())?;
        let mut out = self.clone();
        out.layers.push(Layer::Simple { alpha, source });
        out.probe()?;
        Ok(out)
    }

    /// Adds a pole of arbitrary multiplicity.
    pub fn add_pole(&self, datum: PoleDatum) -> Result<Self> {
        self.check_new_pole(datum.alpha, datum.n())?;
        let mut out = self.clone();
        out.layers.push(Layer::Limit { datum });
        out.probe()?;
        Ok(out)
    }

    /// Surfaces degeneracies early by evaluating at the origin.
    fn probe(&self) -> Result<()> {
        match self.map_at(&Point::new(0.0, 0.0, 0.0)) {
            Err(e @ (Error::Degenerate(_) | Error::Extrapolation(_) | Error::Singular)) => Err(e),
            _ => Ok(()),
        }
    }
}

impl Frame for WardFrame {
    fn n(&self) -> usize {
        self.n
    }

    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap> {
        let mut psi = match &self.base {
            Some(b) => b.map_at(p)?,
            None => RationalMatrixMap::identity(self.n),
        };
        for layer in &self.layers {
            psi = match layer {
                Layer::Simple { alpha, source } => {
                    let pi = source.projector_at(p)?;
                    apply_bt(&psi, *alpha, &pi)?
                }
                Layer::Limit { datum } => apply_limit(&psi, datum, p, &self.limit)?,
            };
        }
        Ok(psi)
    }

    fn pole_data(&self) -> Vec<(C64, usize)> {
        let mut out = self.base.as_ref().map(|b| b.pole_data()).unwrap_or_default();
        out.extend(self.layers.iter().map(|l| (l.alpha(), l.order())));
        out
    }
}

/// `pi~ = projection onto psi(alpha) Im pi`.
pub fn bt_projector(psi: &RationalMatrixMap, alpha: C64, pi: &HermitianProjector) -> Result<HermitianProjector> {
    if psi.order_at(alpha) > 0 || psi.order_at(alpha.conj()) > 0 {
        return Err(Error::CoincidentPole(alpha));
    }
    let m = psi.eval(alpha)?;
    if inverse_condition(&m) < 1e-12 {
        return Err(Error::Degenerate(format!("psi(alpha) is singular at alpha = {alpha}")));
    }
    let span = &m * pi.matrix();
    let out = HermitianProjector::onto_columns(&span, RANK_TOL)?;
    if out.rank() != pi.rank() {
        return Err(Error::Degenerate("transported projector lost rank".into()));
    }
    Ok(out)
}

/// `g_{alpha, pi~} psi` with `pi~` from [`bt_projector`].
pub fn apply_bt(psi: &RationalMatrixMap, alpha: C64, pi: &HermitianProjector) -> Result<RationalMatrixMap> {
    let pt = bt_projector(psi, alpha, pi)?;
    Ok(RationalMatrixMap::blaschke(alpha, &pt).mul(psi))
}

fn chain_projector(datum: &PoleDatum, eps: f64, j: usize, p: &Point) -> Result<HermitianProjector> {
    let a = datum.alpha + eps;
    let f = perturbed_curve(&datum.chain, C64::from(eps), j)?;
    let cp = CharacteristicProjector::new(a, vec![f])?;
    cp.projector_at(p)
}

/// Builds the pole of order `k` one level at a time. Level `j` adds a simple
/// pole at `alpha + eps` with curve `a_0 + ... + eps^{j-1} a_{j-1}` and sends
/// `eps -> 0`.
pub fn apply_limit(
    psi: &RationalMatrixMap,
    datum: &PoleDatum,
    p: &Point,
    cfg: &LimitConfig,
) -> Result<RationalMatrixMap> {
    let alpha = datum.alpha;
    let mut cur = apply_bt(psi, alpha, &chain_projector(datum, 0.0, 1, p)?)?;
    if cfg.method == LimitMethod::Series {
        for j in 2..=datum.multiplicity() {
            let pi = limit_direction(&cur, datum, j, p)?;
            cur = RationalMatrixMap::blaschke(alpha, &pi).mul(&cur);
        }
        return Ok(cur);
    }
    for j in 2..=datum.multiplicity() {
        let eps = [cfg.eps0, cfg.eps0 / 2.0, cfg.eps0 / 4.0];
        let mut maps = Vec::with_capacity(3);
        for e in eps {
            let pi = chain_projector(datum, e, j, p)?;
            let m = apply_bt(&cur, alpha + e, &pi)?;
            maps.push(m.collapse(alpha, 4.0 * cfg.eps0, j));
        }
        cur = richardson(&maps, cfg)?;
    }
    Ok(cur)
}

/// Projector onto `lim_{eps -> 0} psi(alpha + eps) f_eps(w(alpha + eps))`,
/// where `psi` has a pole of order `j - 1` at `alpha`. The negative powers of
/// `eps` cancel and the limit is the `eps^0` coefficient.
fn limit_direction(psi: &RationalMatrixMap, datum: &PoleDatum, j: usize, p: &Point) -> Result<HermitianProjector> {
    let alpha = datum.alpha;
    let m = psi.order_at(alpha);
    let w = crate::holomorphic::characteristic_series(p, alpha, m);
    let f = crate::holomorphic::chain_series(&datum.chain[..j], &w);
    // regular part at alpha, value only
    let mut r0 = psi.constant.clone();
    for q in &psi.poles {
        if same_pole(q.alpha, alpha) {
            continue;
        }
        let d = alpha - q.alpha;
        let mut pw = d.inv();
        for c in &q.coeffs {
            r0 += c * pw;
            pw /= d;
        }
    }
    let coeff = |mm: usize| psi.coefficient(alpha, mm);
    // V_s = sum_m C_m F_{s+m} (+ R_0 F_0 when s = 0)
    let v = |s: isize| -> crate::linalg::CVector {
        let mut acc = if s == 0 { &r0 * &f[0] } else { crate::linalg::CVector::zeros(psi.n()) };
        for mm in 1..=m {
            let idx = s + mm as isize;
            if idx >= 0 && (idx as usize) < f.len() {
                acc += coeff(mm) * &f[idx as usize];
            }
        }
        acc
    };
    let v0 = v(0);
    let scale = v0.norm();
    let tail = (1..=m as isize).map(|l| v(-l).norm()).fold(0.0, f64::max);
    if scale == 0.0 || tail > CANCEL_TOL * (scale + psi.scale()) {
        return Err(Error::Extrapolation(format!(
            "transported direction does not converge (leading size {tail:.3e}, limit size {scale:.3e})"
        )));
    }
    HermitianProjector::project_onto(&[v0])
}

/// Extrapolates coefficient-wise from values at `eps, eps/2, eps/4`, removing
/// the first- and second-order terms.
fn richardson(maps: &[RationalMatrixMap], cfg: &LimitConfig) -> Result<RationalMatrixMap> {
    let [a, b, cc] = [&maps[0], &maps[1], &maps[2]];
    let scale = a.scale().max(1.0);
    let mut worst_ratio = f64::INFINITY;
    let mut extrap = |xa: &CMatrix, xb: &CMatrix, xc: &CMatrix| -> CMatrix {
        let r_ab = xb * C64::from(2.0) - xa;
        let r_bc = xc * C64::from(2.0) - xb;
        let full = (&r_bc * C64::from(4.0) - &r_ab) / C64::from(3.0);
        let e1 = op_norm(&(&r_ab - &full));
        let e2 = op_norm(&(&r_bc - &full));
        if e1 > cfg.floor * scale {
            worst_ratio = worst_ratio.min(e1 / e2.max(1e-300));
        }
        full
    };
    let mut out = RationalMatrixMap::constant(extrap(&a.constant, &b.constant, &cc.constant));
    for pa in &a.poles {
        let k = pa.order().max(b.order_at(pa.alpha)).max(cc.order_at(pa.alpha));
        for j in 1..=k {
            let v = extrap(&a.coefficient(pa.alpha, j), &b.coefficient(pa.alpha, j), &cc.coefficient(pa.alpha, j));
            out.add_term(pa.alpha, j, v);
        }
    }
    if worst_ratio < cfg.ratio_min {
        return Err(Error::Extrapolation(format!(
            "error ratio {worst_ratio:.3} below {:.1}; limit did not stabilise",
            cfg.ratio_min
        )));
    }
    Ok(out)
}

fn check_real(alpha: C64) -> Result<()> {
    if alpha.im == 0.0 {
        Err(Error::RealPole(alpha))
    } else {
        Ok(())
    }
}

/// The 1-soliton `I + (alpha - conj alpha)/(tau - alpha) pi^perp`.
pub fn one_soliton(alpha: C64, curves: Vec<PolyCurve>) -> Result<WardFrame> {
    check_real(alpha)?;
    let cp = CharacteristicProjector::new(alpha, curves)?;
    WardFrame::trivial(cp.n()).superpose(alpha, Arc::new(cp))
}

/// Backlund transformation of an arbitrary frame.
pub fn bt_superpose(psi: FrameRef, alpha: C64, source: Arc<dyn ProjectorField>) -> Result<WardFrame> {
    WardFrame::on_base(psi).superpose(alpha, source)
}

/// Frame with a single pole of arbitrary order reached as a limit of simple poles.
pub fn limit_pole_data(datum: PoleDatum) -> Result<WardFrame> {
    WardFrame::trivial(datum.n()).add_pole(datum)
}

/// Adds a (possibly higher order) pole to an existing frame.
pub fn add_soliton(psi: FrameRef, datum: PoleDatum) -> Result<WardFrame> {
    WardFrame::on_base(psi).add_pole(datum)
}

/// Projection onto the kernel of the residue of a frame at a simple pole.
pub struct RecoveredProjector {
    pub frame: FrameRef,
    pub alpha: C64,
}

impl ProjectorField for RecoveredProjector {
    fn n(&self) -> usize {
        self.frame.n()
    }

    fn projector_at(&self, p: &Point) -> Result<HermitianProjector> {
        let map = self.frame.map_at(p)?;
        let scale = map.scale().max(1.0);
        let k = map.order_at(self.alpha);
        for j in 2..=k {
            if op_norm(&map.coefficient(self.alpha, j)) > CANCEL_TOL * scale {
                return Err(Error::NonSimplePole(format!("order {j} term at {}", self.alpha)));
            }
        }
        let r = map.residue(self.alpha);
        if op_norm(&r) <= CANCEL_TOL * scale {
            return Err(Error::Invalid(format!("no pole at {}", self.alpha)));
        }
        HermitianProjector::kernel_of(&r, PEEL_RANK_TOL)
    }
}

/// Removes `count` Blaschke factors at `alpha` from the left, returning the
/// peeled projectors (outermost first) and the remainder.
pub fn peel(
    map: &RationalMatrixMap,
    alpha: C64,
    count: usize,
) -> Result<(Vec<HermitianProjector>, RationalMatrixMap)> {
    let mut cur = map.clone();
    let tol = CANCEL_TOL * map.scale().max(1.0);
    let mut projs = Vec::with_capacity(count);
    for step in 0..count {
        let k = cur.order_at(alpha);
        if k == 0 {
            return Err(Error::PeelingStalled(format!("no pole left at {alpha} after {step} steps")));
        }
        let top = cur.coefficient(alpha, k);
        let img = HermitianProjector::image_of(&top, PEEL_RANK_TOL)?;
        let pi = img.perp();
        cur = RationalMatrixMap::blaschke_inverse(alpha, &pi).mul(&cur);
        let leftover = op_norm(&cur.coefficient(alpha.conj(), 1));
        if leftover > tol {
            return Err(Error::NonSimplePole(format!(
                "peeling at {alpha} leaves a pole at its conjugate of size {leftover:.3e}"
            )));
        }
        cur.prune(tol);
        if cur.order_at(alpha) >= k {
            return Err(Error::PeelingStalled(format!("pole order at {alpha} did not drop from {k}")));
        }
        projs.push(pi);
    }
    if cur.order_at(alpha) > 0 {
        return Err(Error::NonSimplePole(format!(
            "pole at {alpha} of order {} remains after peeling",
            cur.order_at(alpha)
        )));
    }
    Ok((projs, cur))
}

fn order_of(frame: &dyn Frame, alpha: C64) -> Option<usize> {
    frame.pole_data().into_iter().find(|(a, _)| same_pole(*a, alpha)).map(|(_, k)| k)
}

/// `psi` with all factors at `alpha` removed from the left.
pub struct PeeledFrame {
    pub source: FrameRef,
    pub alpha: C64,
    pub count: usize,
}

impl Frame for PeeledFrame {
    fn n(&self) -> usize {
        self.source.n()
    }
    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap> {
        Ok(peel(&self.source.map_at(p)?, self.alpha, self.count)?.1)
    }
    fn pole_data(&self) -> Vec<(C64, usize)> {
        self.source.pole_data().into_iter().filter(|(a, _)| !same_pole(*a, self.alpha)).collect()
    }
}

/// The product of the peeled factors, so that `psi = factors * remainder`.
pub struct PeeledFactors {
    pub source: FrameRef,
    pub alpha: C64,
    pub count: usize,
}

impl Frame for PeeledFactors {
    fn n(&self) -> usize {
        self.source.n()
    }
    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap> {
        let (projs, _) = peel(&self.source.map_at(p)?, self.alpha, self.count)?;
        let mut out = RationalMatrixMap::identity(self.n());
        for pi in &projs {
            out = out.mul(&RationalMatrixMap::blaschke(self.alpha, pi));
        }
        Ok(out)
    }
    fn pole_data(&self) -> Vec<(C64, usize)> {
        vec![(self.alpha, self.count)]
    }
}

/// Splits `psi` at a simple pole into the soliton factor `g_{alpha,pi}` on the
/// right, with `pi` read off the residue, and the remainder `g~^{-1} psi`.
pub fn subtract_simple_pole(psi: FrameRef, alpha: C64) -> Result<(WardFrame, PeeledFrame)> {
    match order_of(psi.as_ref(), alpha) {
        None => return Err(Error::Invalid(format!("frame has no pole at {alpha}"))),
        Some(1) => {}
        Some(k) => return Err(Error::NonSimplePole(format!("pole at {alpha} has order {k}"))),
    }
    let source = Arc::new(RecoveredProjector { frame: psi.clone(), alpha });
    let mut right = WardFrame::trivial(psi.n());
    right.layers.push(Layer::Simple { alpha, source });
    Ok((right, PeeledFrame { source: psi, alpha, count: 1 }))
}

/// Splits off the whole pole at `alpha`, whatever its order.
pub fn subtract_pole_data(psi: FrameRef, alpha: C64) -> Result<(PeeledFactors, PeeledFrame)> {
    let k = order_of(psi.as_ref(), alpha).ok_or_else(|| Error::Invalid(format!("frame has no pole at {alpha}")))?;
    Ok((
        PeeledFactors { source: psi.clone(), alpha, count: k },
        PeeledFrame { source: psi, alpha, count: k },
    ))
}

/// Pointwise product of two frames.
pub struct ProductFrame {
    pub left: FrameRef,
    pub right: FrameRef,
}

impl Frame for ProductFrame {
    fn n(&self) -> usize {
        self.left.n()
    }
    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap> {
        Ok(self.left.map_at(p)?.mul(&self.right.map_at(p)?))
    }
    fn pole_data(&self) -> Vec<(C64, usize)> {
        let mut out = self.left.pole_data();
        for (b, k) in self.right.pole_data() {
            match out.iter_mut().find(|(a, _)| same_pole(*a, b)) {
                Some(entry) => entry.1 += k,
                None => out.push((b, k)),
            }
        }
        out
    }
}

/// `psi'(p, tau) = psi(h p, m(tau))`, with `m` the action of the lift of `h`
/// in the `tau` chart.
pub struct LorentzFrame {
    pub h: LorentzElement,
    pub inner: FrameRef,
}

impl Frame for LorentzFrame {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn map_at(&self, p: &Point) -> Result<RationalMatrixMap> {
        let [a, b, cc, d] = self.h.tau_mobius();
        let q = self.h.act_on_point(p);
        self.inner.map_at(&q)?.mobius_substitute(a.into(), b.into(), cc.into(), d.into())
    }
    fn pole_data(&self) -> Vec<(C64, usize)> {
        // m(tau') = beta  <=>  tau' = (d beta - b) / (a - c beta)
        let [a, b, cc, d] = self.h.tau_mobius();
        self.inner
            .pole_data()
            .into_iter()
            .map(|(beta, k)| ((beta * d - b) / (C64::from(a) - beta * cc), k))
            .collect()
    }
}

pub fn lorentz_transform_frame(h: LorentzElement, frame: FrameRef) -> LorentzFrame {
    LorentzFrame { h, inner: frame }
}

/// Maps of a frame at a point and its neighbours at `+-h` and `+-2h` along
/// each light-cone direction.
pub struct Stencil {
    pub h: f64,
    pub center: RationalMatrixMap,
    /// `[+h, -h, +2h, -2h]` along `y`, `xi`, `eta`.
    pub dirs: [[RationalMatrixMap; 4]; 3],
}

/// Fourth-order central difference from values at `[+h, -h, +2h, -2h]`.
fn central4(v: [CMatrix; 4], h: f64) -> CMatrix {
    let [p1, m1, p2, m2] = v;
    ((p1 - m1) * C64::from(8.0) - (p2 - m2)) / C64::from(12.0 * h)
}

impl Stencil {
    pub fn new(frame: &dyn Frame, p: &Point, h: f64) -> Result<Self> {
        let line = |dxi: f64, deta: f64, dy: f64| -> Result<[RationalMatrixMap; 4]> {
            let m = |k: f64| frame.map_at(&p.shifted_lc(k * dxi, k * deta, k * dy));
            Ok([m(h)?, m(-h)?, m(2.0 * h)?, m(-2.0 * h)?])
        };
        Ok(Self { h, center: frame.map_at(p)?, dirs: [line(0.0, 0.0, 1.0)?, line(1.0, 0.0, 0.0)?, line(0.0, 1.0, 0.0)?] })
    }

    /// `(psi, d_y psi, d_xi psi, d_eta psi)` at `tau`.
    pub fn derivatives(&self, tau: C64) -> Result<(CMatrix, [CMatrix; 3])> {
        let psi = self.center.eval(tau)?;
        let d = |i: usize| -> Result<CMatrix> {
            let [a, b, cc, e] = &self.dirs[i];
            Ok(central4([a.eval(tau)?, b.eval(tau)?, cc.eval(tau)?, e.eval(tau)?], self.h))
        };
        Ok((psi, [d(0)?, d(1)?, d(2)?]))
    }

    /// `P = (tau d_y - d_xi) psi psi^{-1}` and `Q = (tau d_eta - d_y) psi psi^{-1}`.
    pub fn lax(&self, tau: C64) -> Result<(CMatrix, CMatrix)> {
        let (psi, [dy, dxi, deta]) = self.derivatives(tau)?;
        let inv = inverse(&psi)?;
        let p = (&dy * tau - dxi) * &inv;
        let q = (deta * tau - &dy) * &inv;
        Ok((p, q))
    }

    /// `d_y psi_1` and `d_eta psi_1`, where `psi_1` is the sum of residues.
    pub fn residue_derivatives(&self) -> (CMatrix, CMatrix) {
        let res = |m: &RationalMatrixMap| {
            m.poles.iter().fold(CMatrix::zeros(m.n(), m.n()), |acc, p| acc + &p.coeffs[0])
        };
        let d = |i: usize| central4(self.dirs[i].each_ref().map(res), self.h);
        (d(0), d(2))
    }
}

/// Measured deviations of a frame from the Ward-frame conditions.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrameReport {
    pub tau_independence: f64,
    pub reality: f64,
    pub normalization: f64,
    /// `P` and `Q` against `d_y psi_1` and `d_eta psi_1`.
    pub residue_formula: f64,
    pub anti_hermitian: f64,
}

pub const DEFAULT_TAUS: [C64; 4] =
    [C64::new(0.35, 0.2), C64::new(-0.8, 0.5), C64::new(1.7, -0.3), C64::new(-2.5, -1.4)];

pub fn check_ward_frame(frame: &dyn Frame, points: &[Point], h: f64) -> Result<FrameReport> {
    let mut r = FrameReport::default();
    for p in points {
        let st = Stencil::new(frame, p, h)?;
        let lax: Vec<(CMatrix, CMatrix)> = DEFAULT_TAUS.iter().map(|t| st.lax(*t)).collect::<Result<_>>()?;
        for (pa, qa) in &lax {
            for (pb, qb) in &lax {
                r.tau_independence = r.tau_independence.max(op_norm(&(pa - pb))).max(op_norm(&(qa - qb)));
            }
        }
        let (p0, q0) = &lax[0];
        let (dy1, deta1) = st.residue_derivatives();
        r.residue_formula = r.residue_formula.max(op_norm(&(p0 - dy1))).max(op_norm(&(q0 - deta1)));
        r.anti_hermitian =
            r.anti_hermitian.max(op_norm(&(p0 + p0.adjoint()))).max(op_norm(&(q0 + q0.adjoint())));
        r.reality = r.reality.max(st.center.reality_defect(&crate::linalg::reality_samples())?);
        r.normalization = r.normalization.max(op_norm(&(&st.center.constant - identity(frame.n()))));
    }
    Ok(r)
}

/// `|P~ - P - (conj alpha - alpha) d_y pi~|` for the Backlund transform of
/// `base` at `p`.
pub fn bt_update_defect(
    base: &dyn Frame,
    alpha: C64,
    source: &dyn ProjectorField,
    p: &Point,
    tau: C64,
    h: f64,
) -> Result<f64> {
    let tilde = |q: &Point| -> Result<HermitianProjector> {
        bt_projector(&base.map_at(q)?, alpha, &source.projector_at(q)?)
    };
    let dpi = (tilde(&p.shifted(0.0, h, 0.0))?.into_matrix() - tilde(&p.shifted(0.0, -h, 0.0))?.into_matrix())
        / C64::from(2.0 * h);
    let st0 = Stencil::new(base, p, h)?;
    let (p0, _) = st0.lax(tau)?;
    struct One<'a> {
        base: &'a dyn Frame,
        alpha: C64,
        source: &'a dyn ProjectorField,
    }
    impl Frame for One<'_> {
        fn n(&self) -> usize {
            self.base.n()
        }
        fn map_at(&self, q: &Point) -> Result<RationalMatrixMap> {
            apply_bt(&self.base.map_at(q)?, self.alpha, &self.source.projector_at(q)?)
        }
        fn pole_data(&self) -> Vec<(C64, usize)> {
            Vec::new()
        }
    }
    let st1 = Stencil::new(&One { base, alpha, source }, p, h)?;
    let (p1, _) = st1.lax(tau)?;
    Ok(op_norm(&(p1 - p0 - dpi * (alpha.conj() - alpha))))
}

/// Limit of `psi(p, tau)` as `|p| -> infinity`, checked to be independent of
/// the direction and of `t`.
pub fn spatial_infinity_limit(frame: &dyn Frame, tau: C64) -> Result<CMatrix> {
    let radii = [1e2, 1e3, 1e4];
    let q = 10.0;
    let mut limits = Vec::new();
    for t in [0.0, 5.0] {
        for d in 0..8 {
            let ang = d as f64 * std::f64::consts::PI / 4.0 + 0.1;
            let v: Vec<CMatrix> = radii
                .iter()
                .map(|r| frame.eval(&Point::new(r * ang.cos(), r * ang.sin(), t), tau))
                .collect::<Result<_>>()?;
            let l1a = (&v[1] * C64::from(q) - &v[0]) / C64::from(q - 1.0);
            let l1b = (&v[2] * C64::from(q) - &v[1]) / C64::from(q - 1.0);
            limits.push((&l1b * C64::from(q * q) - &l1a) / C64::from(q * q - 1.0));
        }
    }
    let mean = limits.iter().fold(CMatrix::zeros(frame.n(), frame.n()), |a, b| a + b) / C64::from(limits.len() as f64);
    let spread = limits.iter().map(|l| op_norm(&(l - &mean))).fold(0.0, f64::max);
    if spread > 1e-4 * (1.0 + op_norm(&mean)) {
        return Err(Error::Invalid(format!("limit at spatial infinity depends on direction (spread {spread:.3e})")));
    }
    Ok(mean)
}
