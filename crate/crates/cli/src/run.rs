use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wsl_core::abelian::{abelian_scattering_exact, plane_wave, WavePacket};
use wsl_core::fields::{
    extract_monopole_with_step, extract_ward_map, fields_at, monopole_residual, Axis, GridSpec, MonopoleField,
    WardMap,
};
use wsl_core::geometry::{LorentzElement, Point};
use wsl_core::io::{
    field_from_csv, field_to_csv, fmt_f64, matrix_grid_from_csv, matrix_grid_to_csv, scalar_grid_to_csv,
    scattering_from_csv, scattering_to_csv, SolutionSpec, Summary,
};
use wsl_core::linalg::op_norm;
use wsl_core::scattering::{
    check_scattering_properties, circle_nodes, evolve_scattering, forward_scatter, inverse_scatter, sigma_nodes,
    GridSlice, InverseConfig, ScatteringData, SpectralSolveConfig,
};
use wsl_core::soliton::{check_ward_frame, lorentz_transform_frame, Frame, FrameRef};

use crate::{DataArgs, LineArgs};

/// Fields at `t` and `t + STATIONARY_DT` must agree to this for a solution to count as static.
const STATIONARY_TOL: f64 = 1e-6;
const STATIONARY_DT: f64 = 2.0;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(wsl_core::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(wsl_core::Error::Io(_)) => 1,
            CliError::Core(wsl_core::Error::Schema { .. }) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<wsl_core::Error> for CliError {
    fn from(e: wsl_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Out = std::result::Result<Summary, CliError>;

pub fn init_threads() -> std::result::Result<(), CliError> {
    let Ok(v) = std::env::var("WSL_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("WSL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn read(path: &Path) -> std::result::Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> std::result::Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// A file, or `default` inside a directory.
fn resolve(path: &Path, default: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default)
    } else {
        path.to_path_buf()
    }
}

fn has_interior(g: &GridSpec) -> bool {
    g.x.n >= 3 && g.y.n >= 3 && g.t.n >= 3
}

fn opt_num(s: &mut Summary, key: &str, v: Option<f64>) {
    match v {
        Some(v) => s.num(key, v),
        None => s.push(key, "na"),
    };
}

fn sample_points(grid: &GridSpec, seed: u64, count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |a: &Axis| if a.max > a.min { rng.random_range(a.min..=a.max) } else { a.min };
    (0..count)
        .map(|_| {
            let x = pick(&grid.x);
            let y = pick(&grid.y);
            let t = pick(&grid.t);
            Point::new(x, y, t)
        })
        .collect()
}

/// The middle time slice of a grid as a grid of its own.
fn middle_slice(g: &GridSpec) -> GridSpec {
    let t = g.t.at(g.t.n / 2);
    GridSpec { t: Axis::new(t, t, 1), ..*g }
}

pub fn soliton_build(spec_path: &Path, out: &Path, seed: u64, samples: usize) -> Out {
    let spec = SolutionSpec::parse(&read(spec_path)?)?;
    let frame = spec.build_frame()?;
    let tol = &spec.tolerances;
    let grid = spec.grid;
    let points = sample_points(&grid, seed, samples.max(1));

    let report = check_ward_frame(&frame, &points, tol.frame_step)?;
    let field = extract_monopole_with_step(&frame, &grid, tol.frame_step)?;
    let ward = extract_ward_map(&frame, spec.ward_theta, &grid)?;
    let (mono, aw, energy) = if has_interior(&grid) {
        (Some(monopole_residual(&field)?.max), Some(ward.residual()?), Some(ward.energy_density()?))
    } else {
        (None, None, None)
    };
    let mut stationarity: f64 = 0.0;
    for p in &points {
        let a = fields_at(&frame, p, tol.frame_step)?;
        let b = fields_at(&frame, &p.shifted(0.0, 0.0, STATIONARY_DT), tol.frame_step)?;
        stationarity = stationarity.max(a.max_distance(&b));
    }
    let stationary = stationarity <= STATIONARY_TOL;
    let pass = report.reality <= tol.reality
        && report.tau_independence <= tol.tau_independence
        && mono.is_none_or(|r| r <= tol.residual)
        && aw.is_none_or(|r| r <= tol.residual);

    write(out, "spec.json", &spec.to_json())?;
    write(out, "fields.csv", &field_to_csv(&field))?;
    write(out, "ward.csv", &matrix_grid_to_csv(&grid, "g", &ward.values))?;
    if let Some(e) = &energy {
        write(out, "energy.csv", &scalar_grid_to_csv(&middle_slice(&grid), "energy", e))?;
    }
    let poles: Vec<_> = frame
        .pole_data()
        .iter()
        .map(|(a, k)| json!({ "alpha": [a.re, a.im], "multiplicity": k }))
        .collect();
    let meta = json!({
        "n": spec.n,
        "poles": poles,
        "seed": seed,
        "samples": points.len(),
        "ward_theta": spec.ward_theta,
        "reality_defect": report.reality,
        "tau_independence_defect": report.tau_independence,
        "monopole_residual": mono,
        "ward_residual": aw,
        "stationarity_defect": stationarity,
        "stationary": stationary,
    });
    write(out, "frame.json", &(serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"))?;

    let mut s = Summary::new();
    s.push("command", "soliton.build")
        .push("n", spec.n)
        .push("poles", frame.pole_data().len())
        .push("degree", frame.pole_data().iter().map(|(_, k)| k).sum::<usize>())
        .push("seed", seed)
        .num("reality", report.reality)
        .num("tau_independence", report.tau_independence);
    opt_num(&mut s, "monopole_residual", mono);
    opt_num(&mut s, "ward_residual", aw);
    s.num("stationarity_defect", stationarity).push("stationary", stationary).push("pass", pass);
    Ok(s)
}

#[derive(Clone, Copy, Debug)]
pub enum Factor {
    Rot(f64),
    Boost(f64),
}

pub fn lorentz_apply(frame_ref: &Path, factors: &[Factor], out: Option<&Path>) -> Out {
    let spec = SolutionSpec::parse(&read(&resolve(frame_ref, "spec.json"))?)?;
    let base: FrameRef = Arc::new(spec.build_frame()?);
    let h = factors.iter().fold(LorentzElement::identity(), |h, f| {
        h.compose(&match *f {
            Factor::Rot(t) => LorentzElement::rotation(t),
            Factor::Boost(s) => LorentzElement::boost(s),
        })
    });
    let frame = lorentz_transform_frame(h, base);
    let mut s = Summary::new();
    s.push("command", "lorentz.apply").push("factors", factors.len());
    for (i, (tau, k)) in frame.pole_data().iter().enumerate() {
        let lambda = tau.inv();
        s.num(&format!("pole{i}_tau_re"), tau.re)
            .num(&format!("pole{i}_tau_im"), tau.im)
            .num(&format!("pole{i}_lambda_re"), lambda.re)
            .num(&format!("pole{i}_lambda_im"), lambda.im)
            .push(&format!("pole{i}_order"), k);
    }
    if let Some(dir) = out {
        let field = extract_monopole_with_step(&frame, &spec.grid, spec.tolerances.frame_step)?;
        let r = if has_interior(&spec.grid) { Some(monopole_residual(&field)?.max) } else { None };
        opt_num(&mut s, "monopole_residual", r);
        write(dir, "fields.csv", &field_to_csv(&field))?;
    }
    Ok(s)
}

fn data_nodes(d: &DataArgs) -> std::result::Result<(Vec<f64>, Vec<f64>), CliError> {
    if d.thetas == 0 || d.sigma_nodes < 4 || !(d.sigma_half > 0.0) {
        return Err(CliError::Usage("need --thetas >= 1, --sigma-nodes >= 4 and --sigma-half > 0".into()));
    }
    Ok((circle_nodes(d.thetas), sigma_nodes(d.sigma_half, d.sigma_nodes)))
}

pub fn scatter_forward(
    field_path: &Path,
    out: &Path,
    t_index: Option<usize>,
    data: &DataArgs,
    line: &LineArgs,
    check_reality: bool,
) -> Out {
    let field = field_from_csv(&read(&resolve(field_path, "fields.csv"))?)?;
    let it = t_index.unwrap_or(field.grid.t.n / 2);
    if it >= field.grid.t.n {
        return Err(CliError::Usage(format!("--t-index {it} out of range")));
    }
    let slice = GridSlice::new(&field, it)?;
    let (thetas, sigmas) = data_nodes(data)?;
    let cfg = SpectralSolveConfig {
        x_half: line.x_half,
        nx: line.nx,
        y_period: line.y_period,
        ny: line.ny,
        check_reality,
        ..Default::default()
    };
    let res = forward_scatter(&slice, &thetas, &sigmas, &cfg)?;
    let props = check_scattering_properties(&res.data, 0.1, 1e-8);
    write_file(out, &scattering_to_csv(&res.data))?;
    let max = |f: fn(&wsl_core::scattering::ThetaReport) -> f64| res.reports.iter().map(f).fold(0.0, f64::max);
    let mut s = Summary::new();
    s.push("command", "scatter.forward")
        .push("n", field.n)
        .push("thetas", thetas.len())
        .push("sigmas", sigmas.len())
        .num("t", field.grid.t.at(it))
        .num("contraction", max(|r| r.contraction))
        .push("iterations", res.reports.iter().map(|r| r.iterations).max().unwrap_or(0))
        .num("reality_defect", max(|r| r.reality_defect))
        .num("smallness", props.smallness)
        .num("hermitian_defect", props.hermitian_defect)
        .num("min_eigenvalue", props.min_eigenvalue);
    Ok(s)
}

pub struct InvertOpts {
    pub half: f64,
    pub nodes: usize,
    pub t: f64,
    pub with_time: bool,
    pub roundtrip: bool,
    pub roundtrip_thetas: usize,
    pub roundtrip_stride: usize,
}

/// Largest distance between `data` and the forward transform of one slice of
/// `field`, on a subset of angles and every `stride`-th radius.
pub fn roundtrip_distance(
    data: &ScatteringData,
    field: &MonopoleField,
    thetas: usize,
    stride: usize,
) -> std::result::Result<f64, CliError> {
    let it = field.grid.t.n / 2;
    let t = field.grid.t.at(it);
    let expected = if t == 0.0 { data.clone() } else { evolve_scattering(data, t) };
    let nt = data.thetas.len();
    let mut idx: Vec<usize> = (0..thetas.clamp(1, nt)).map(|k| k * nt / thetas.clamp(1, nt)).collect();
    idx.dedup();
    let sidx: Vec<usize> = (0..data.sigmas.len()).step_by(stride.max(1)).collect();
    let half = field.grid.x.max.abs().max(field.grid.x.min.abs()).max(field.grid.y.max.abs()).max(field.grid.y.min.abs());
    let cfg = SpectralSolveConfig {
        x_half: half + 1.0,
        nx: ((half + 1.0) * 40.0).ceil() as usize + 1,
        y_period: SpectralSolveConfig::default().y_period.max(4.0 * half),
        check_reality: false,
        ..Default::default()
    };
    let slice = GridSlice::new(field, it)?;
    let th: Vec<f64> = idx.iter().map(|&i| data.thetas[i]).collect();
    let sg: Vec<f64> = sidx.iter().map(|&i| data.sigmas[i]).collect();
    let again = forward_scatter(&slice, &th, &sg, &cfg)?.data;
    let mut d: f64 = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in sidx.iter().enumerate() {
            d = d.max(op_norm(&(again.at(a, b) - expected.at(i, j))));
        }
    }
    Ok(d)
}

pub fn scatter_invert(data_path: &Path, out: &Path, o: InvertOpts) -> Out {
    let data = scattering_from_csv(&read(&resolve(data_path, "scattering.csv"))?)?;
    if o.nodes < 2 || !(o.half > 0.0) {
        return Err(CliError::Usage("need --nodes >= 2 and --half > 0".into()));
    }
    let grid = if o.with_time {
        GridSpec::square(o.half, o.nodes, o.t)
    } else {
        let a = Axis::new(-o.half, o.half, o.nodes);
        GridSpec::new(a, a, Axis::new(o.t, o.t, 1))?
    };
    let cfg = InverseConfig { with_time: o.with_time, ..Default::default() };
    let res = inverse_scatter(&data, &grid, &cfg)?;
    write_file(out, &field_to_csv(&res.field))?;
    let mut s = Summary::new();
    s.push("command", "scatter.invert")
        .push("n", data.n)
        .push("nodes", o.nodes)
        .num("laurent_residual", res.fit.laurent_residual)
        .num("symmetrization_defect", res.fit.symmetrization_defect)
        .num("max_norm", res.field.max_norm());
    if o.roundtrip {
        s.num("roundtrip", roundtrip_distance(&data, &res.field, o.roundtrip_thetas, o.roundtrip_stride)?);
    }
    Ok(s)
}

pub fn scatter_evolve(data_path: &Path, t: f64, out: &Path) -> Out {
    let data = scattering_from_csv(&read(&resolve(data_path, "scattering.csv"))?)?;
    let ev = evolve_scattering(&data, t);
    write_file(out, &scattering_to_csv(&ev))?;
    let mut s = Summary::new();
    s.push("command", "scatter.evolve").num("t", t).num("change", ev.max_distance(&data));
    Ok(s)
}

pub fn verify(path: &Path) -> Out {
    let field_path = resolve(path, "fields.csv");
    let field = field_from_csv(&read(&field_path)?)?;
    let mut s = Summary::new();
    s.push("command", "verify")
        .push("n", field.n)
        .push("nodes", field.samples.len())
        .num("max_norm", field.max_norm())
        .num("hermitian_defect", field.samples.iter().map(|x| x.hermitian_defect()).fold(0.0, f64::max));
    let r = if has_interior(&field.grid) { Some(monopole_residual(&field)?.max) } else { None };
    opt_num(&mut s, "monopole_residual", r);
    if path.is_dir() && path.join("ward.csv").exists() {
        let (grid, values) = matrix_grid_from_csv(&read(&path.join("ward.csv"))?)?;
        let theta = match path.join("spec.json") {
            p if p.exists() => SolutionSpec::parse(&read(&p)?)?.ward_theta,
            _ => 0.0,
        };
        let n = values.first().map(|m| m.nrows()).unwrap_or(field.n);
        let ward = WardMap { n, grid, theta, values };
        let r = if has_interior(&grid) { Some(ward.residual()?) } else { None };
        opt_num(&mut s, "ward_residual", r);
        s.num("unitarity_defect", ward.unitarity_defect());
    }
    Ok(s)
}

pub struct OracleOpts {
    pub kx: f64,
    pub ky: f64,
    pub amp: f64,
    pub width: f64,
    pub half: f64,
    pub nodes: usize,
}

pub fn oracle_abelian(o: OracleOpts, data: &DataArgs, out: &Path) -> Out {
    if o.nodes < 2 || !(o.half > 0.0) {
        return Err(CliError::Usage("need --nodes >= 2 and --half > 0".into()));
    }
    let sol = plane_wave(o.kx, o.ky, o.amp)?;
    let grid = GridSpec::square(o.half, o.nodes, 0.0);
    let field = sol.sample_field(&grid, 1);
    let exact = sol.exact_residual(&grid.points());
    let fd = monopole_residual(&field)?;

    let packet = WavePacket::new(o.kx, o.ky, o.amp, o.width)?;
    let slice = middle_slice(&grid);
    let packet_field = MonopoleField::from_fn(1, slice, |p| {
        wsl_core::scattering::SpatialField::sample(&packet, p.x, p.y)
    })?;
    let (thetas, sigmas) = data_nodes(data)?;
    let scat = abelian_scattering_exact(&packet, &thetas, &sigmas);

    write(out, "fields.csv", &field_to_csv(&field))?;
    write(out, "packet.csv", &field_to_csv(&packet_field))?;
    write(out, "scattering.csv", &scattering_to_csv(&scat))?;
    let mut s = Summary::new();
    s.push("command", "oracle.abelian")
        .num("kx", o.kx)
        .num("ky", o.ky)
        .num("amp", o.amp)
        .num("omega", sol.omega)
        .num("exact_residual", exact.max)
        .num("constraint_defect", sol.constraint_defect(&grid))
        .num("grid_residual", fd.max)
        .num("width", o.width)
        .push("data_smallness", fmt_f64(check_scattering_properties(&scat, 0.1, 1e-8).smallness));
    Ok(s)
}
