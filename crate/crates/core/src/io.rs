//! Solution specs in JSON and grid/scattering data in CSV.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written in the shortest
//! form that parses back to the same bits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Axis, FieldSample, GridSpec, MonopoleField, FRAME_STEP};
use crate::holomorphic::PolyCurve;
use crate::linalg::{CMatrix, C64};
use crate::scattering::ScatteringData;
use crate::soliton::{PoleDatum, WardFrame};

/// `[re, im]`.
pub type ComplexPair = [f64; 2];

fn cx(p: ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

/// One pole of the frame: `chain[order][component][degree]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub alpha: ComplexPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
    pub chain: Vec<Vec<Vec<ComplexPair>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub frame_step: f64,
    pub reality: f64,
    pub tau_independence: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { frame_step: FRAME_STEP, reality: 1e-10, tau_independence: 1e-6, residual: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub n: usize,
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Angle at which the Ward map is sampled.
    #[serde(default)]
    pub ward_theta: f64,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema { line: 0, column: 0, msg: msg.into() }
}

impl SolutionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SolutionSpec = serde_json::from_str(text)
            .map_err(|e| Error::Schema { line: e.line(), column: e.column(), msg: e.to_string() })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(schema("n must be positive"));
        }
        GridSpec::new(self.grid.x, self.grid.y, self.grid.t).map_err(|e| schema(e.to_string()))?;
        for (i, p) in self.poles.iter().enumerate() {
            if p.alpha[1] == 0.0 {
                return Err(schema(format!("pole {i}: Im alpha must be nonzero")));
            }
            if p.chain.is_empty() {
                return Err(schema(format!("pole {i}: empty curve chain")));
            }
            if let Some(m) = p.multiplicity {
                if m != p.chain.len() {
                    return Err(schema(format!("pole {i}: multiplicity {m} but {} curves", p.chain.len())));
                }
            }
            if p.chain.iter().any(|c| c.len() != self.n || c.iter().any(|comp| comp.is_empty())) {
                return Err(schema(format!("pole {i}: every curve needs {} nonempty components", self.n)));
            }
            for (j, q) in self.poles.iter().enumerate().take(i) {
                if q.alpha == p.alpha {
                    return Err(schema(format!("poles {j} and {i} coincide")));
                }
            }
        }
        if ![self.tolerances.frame_step, self.tolerances.reality, self.tolerances.tau_independence, self.tolerances.residual]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(schema("tolerances must be positive"));
        }
        Ok(())
    }

    pub fn pole_data(&self) -> Result<Vec<PoleDatum>> {
        self.poles
            .iter()
            .map(|p| {
                let chain = p
                    .chain
                    .iter()
                    .map(|curve| PolyCurve::new(curve.iter().map(|comp| comp.iter().copied().map(cx).collect()).collect()))
                    .collect::<Result<Vec<_>>>()?;
                PoleDatum::new(cx(p.alpha), chain)
            })
            .collect()
    }

    /// Frame built pole by pole in spec order.
    pub fn build_frame(&self) -> Result<WardFrame> {
        self.pole_data()?.into_iter().try_fold(WardFrame::trivial(self.n), |f, d| f.add_pole(d))
    }
}

/// Shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Schema { line, column: 0, msg: format!("bad number {s:?}: {e}") })
}

fn entry_headers(out: &mut String, name: &str, n: usize) {
    for r in 0..n {
        for c in 0..n {
            let _ = write!(out, ",{name}_{r}{c}_re,{name}_{r}{c}_im");
        }
    }
}

fn push_matrix(out: &mut String, m: &CMatrix) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.push(',');
            out.push_str(&fmt_f64(z.re));
            out.push(',');
            out.push_str(&fmt_f64(z.im));
        }
    }
}

fn take_matrix(vals: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let k = 2 * (r * n + c);
        C64::new(vals[k], vals[k + 1])
    })
}

/// Parsed rows of a CSV file with a header.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().ok_or_else(|| schema("empty file"))?.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line.split(',').map(|s| parse_f64(s, i + 2)).collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Schema { line: i + 2, column: 0, msg: format!("expected {} columns", header.len()) });
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Distinct values of one column in order of first appearance.
fn distinct(rows: &[Vec<f64>], col: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in rows {
        if !out.iter().any(|v| v.to_bits() == r[col].to_bits()) {
            out.push(r[col]);
        }
    }
    out
}

fn infer_grid(rows: &[Vec<f64>]) -> Result<GridSpec> {
    let axis = |col: usize| -> Axis {
        let v = distinct(rows, col);
        Axis::new(v[0], *v.last().unwrap(), v.len())
    };
    let grid = GridSpec::new(axis(0), axis(1), axis(2))?;
    if grid.len() != rows.len() {
        return Err(schema(format!("{} rows do not fill a tensor grid", rows.len())));
    }
    for (k, r) in rows.iter().enumerate() {
        let p = grid.point(k);
        if p.x != r[0] || p.y != r[1] || p.t != r[2] {
            return Err(Error::Schema { line: k + 2, column: 0, msg: "rows out of grid order".into() });
        }
    }
    Ok(grid)
}

fn grid_prefix(out: &mut String, grid: &GridSpec, k: usize) {
    let p = grid.point(k);
    let _ = write!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.t));
}

/// `x,y,t` then `A_x, A_y, A_t, phi` entries.
pub fn field_to_csv(field: &MonopoleField) -> String {
    let mut out = String::from("x,y,t");
    for name in ["ax", "ay", "at", "phi"] {
        entry_headers(&mut out, name, field.n);
    }
    out.push('\n');
    for (k, s) in field.samples.iter().enumerate() {
        grid_prefix(&mut out, &field.grid, k);
        for m in [&s.ax, &s.ay, &s.at, &s.phi] {
            push_matrix(&mut out, m);
        }
        out.push('\n');
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<MonopoleField> {
    let t = parse_table(text)?;
    let entries = t.header.len().checked_sub(3).ok_or_else(|| schema("missing coordinate columns"))?;
    let n = ((entries / 8) as f64).sqrt().round() as usize;
    if n == 0 || 8 * n * n != entries || t.header[..3] != ["x", "y", "t"] {
        return Err(schema("header is not a field grid"));
    }
    let grid = infer_grid(&t.rows)?;
    let m = 2 * n * n;
    let samples = t
        .rows
        .iter()
        .map(|r| {
            let v = &r[3..];
            FieldSample {
                ax: take_matrix(&v[..m], n),
                ay: take_matrix(&v[m..2 * m], n),
                at: take_matrix(&v[2 * m..3 * m], n),
                phi: take_matrix(&v[3 * m..], n),
            }
        })
        .collect();
    Ok(MonopoleField { n, grid, samples })
}

/// One matrix per grid node, e.g. a Ward map.
pub fn matrix_grid_to_csv(grid: &GridSpec, name: &str, values: &[CMatrix]) -> String {
    let n = values.first().map_or(0, |m| m.nrows());
    let mut out = String::from("x,y,t");
    entry_headers(&mut out, name, n);
    out.push('\n');
    for (k, m) in values.iter().enumerate() {
        grid_prefix(&mut out, grid, k);
        push_matrix(&mut out, m);
        out.push('\n');
    }
    out
}

pub fn matrix_grid_from_csv(text: &str) -> Result<(GridSpec, Vec<CMatrix>)> {
    let t = parse_table(text)?;
    let entries = t.header.len().saturating_sub(3);
    let n = ((entries / 2) as f64).sqrt().round() as usize;
    if n == 0 || 2 * n * n != entries {
        return Err(schema("header is not a matrix grid"));
    }
    let grid = infer_grid(&t.rows)?;
    Ok((grid, t.rows.iter().map(|r| take_matrix(&r[3..], n)).collect()))
}

/// One real value per grid node.
pub fn scalar_grid_to_csv(grid: &GridSpec, name: &str, values: &[f64]) -> String {
    let mut out = format!("x,y,t,{name}\n");
    for (k, v) in values.iter().enumerate() {
        grid_prefix(&mut out, grid, k);
        out.push(',');
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn scalar_grid_from_csv(text: &str) -> Result<(GridSpec, Vec<f64>)> {
    let t = parse_table(text)?;
    if t.header.len() != 4 {
        return Err(schema("header is not a scalar grid"));
    }
    let grid = infer_grid(&t.rows)?;
    Ok((grid, t.rows.iter().map(|r| r[3]).collect()))
}

/// `theta,sigma` then the entries of `s`.
pub fn scattering_to_csv(s: &ScatteringData) -> String {
    let mut out = String::from("theta,sigma");
    entry_headers(&mut out, "s", s.n);
    out.push('\n');
    for (it, th) in s.thetas.iter().enumerate() {
        for (is, sg) in s.sigmas.iter().enumerate() {
            out.push_str(&fmt_f64(*th));
            out.push(',');
            out.push_str(&fmt_f64(*sg));
            push_matrix(&mut out, s.at(it, is));
            out.push('\n');
        }
    }
    out
}

pub fn scattering_from_csv(text: &str) -> Result<ScatteringData> {
    let t = parse_table(text)?;
    let entries = t.header.len().saturating_sub(2);
    let n = ((entries / 2) as f64).sqrt().round() as usize;
    if n == 0 || 2 * n * n != entries || t.header[..2] != ["theta", "sigma"] {
        return Err(schema("header is not scattering data"));
    }
    let thetas = distinct(&t.rows, 0);
    let sigmas = distinct(&t.rows, 1);
    for (k, r) in t.rows.iter().enumerate() {
        let (it, is) = (k / sigmas.len(), k % sigmas.len());
        if thetas.get(it) != Some(&r[0]) || sigmas[is] != r[1] {
            return Err(Error::Schema { line: k + 2, column: 0, msg: "rows out of (theta, sigma) order".into() });
        }
    }
    let values = t.rows.iter().map(|r| take_matrix(&r[2..], n)).collect();
    ScatteringData::new(n, thetas, sigmas, values).map_err(|e| schema(e.to_string()))
}

/// Ordered `key=value` pairs printed on one line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.push(key, fmt_f64(v))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(line: &str) -> Self {
        Self(
            line.split_whitespace()
                .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
                .collect(),
        )
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    const SPEC: &str = r#"{
        "n": 2,
        "poles": [{"alpha": [0.0, 1.0], "chain": [[[[1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}],
        "grid": {"x": {"min": -1.0, "max": 1.0, "n": 5}, "y": {"min": -1.0, "max": 1.0, "n": 5}, "t": {"min": 0.0, "max": 0.0, "n": 1}}
    }"#;

    #[test]
    fn spec_parses_and_builds() {
        let s = SolutionSpec::parse(SPEC).unwrap();
        assert_eq!(s.poles.len(), 1);
        let f = s.build_frame().unwrap();
        assert_eq!(f.layers().len(), 1);
        assert_eq!(SolutionSpec::parse(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn schema_errors_carry_position() {
        let bad = SPEC.replace("\"n\": 2,", "\"n\": \"two\",");
        match SolutionSpec::parse(&bad) {
            Err(Error::Schema { line, column, .. }) => assert!(line == 2 && column > 0),
            other => panic!("{other:?}"),
        }
        let real = SPEC.replace("[0.0, 1.0]", "[1.0, 0.0]");
        assert!(matches!(SolutionSpec::parse(&real), Err(Error::Schema { .. })));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, f64::MIN_POSITIVE, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn field_csv_round_trip() {
        let grid = GridSpec::new(Axis::new(-0.3, 0.7, 3), Axis::new(0.0, 1.0 / 3.0, 2), Axis::new(0.1, 0.1, 1)).unwrap();
        let field = MonopoleField::from_fn(2, grid, |p| {
            let m = CMatrix::from_row_slice(2, 2, &[c(p.x, 0.1), c(p.y / 3.0, 0.0), c(0.0, p.t), c(1e-17, -p.x)]);
            Ok(FieldSample { ax: m.clone(), ay: m.adjoint(), at: m.transpose(), phi: m * C64::new(0.0, 1.0) })
        })
        .unwrap();
        let text = field_to_csv(&field);
        let back = field_from_csv(&text).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.samples, field.samples);
        assert_eq!(field_to_csv(&back), text);
    }

    #[test]
    fn scattering_csv_round_trip() {
        let s = ScatteringData::from_fn(1, vec![0.0, 0.7], vec![-1.0, -0.5, 0.0, 0.5, 1.0], |sg, th| {
            CMatrix::from_element(1, 1, C64::new(1.0 + sg * th / 7.0, 0.0))
        })
        .unwrap();
        let back = scattering_from_csv(&scattering_to_csv(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn summary_format() {
        let mut s = Summary::new();
        s.push("status", "ok").num("defect", 1e-12);
        assert_eq!(s.to_string(), "status=ok defect=1e-12");
        assert_eq!(Summary::parse(&s.to_string()), s);
    }
}
