use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use hbcomplex::assembly::{AssemblyParams, GeometryMap};
use hbcomplex::eigensolve::{lid_driven_cavity, maxwell_report, StokesOperators};
use hbcomplex::exactness::exactness_report;
use hbcomplex::hierarchy::{build_hier_mesh, HierarchicalComplex, LevelLadder};
use hbcomplex::meshspec::{generate_mesh, Generator, MeshSpec};
use hbcomplex::tpcomplex::Orientation;

use crate::output::{to_csv, Output, Payload};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// A validated mesh with its canonical text, which feeds the input digest.
struct LoadedMesh {
    name: String,
    spec: MeshSpec,
    ladder: LevelLadder,
    canonical: String,
}

impl LoadedMesh {
    fn geometry(&self) -> Result<GeometryMap, CliError> {
        GeometryMap::square(self.spec.side.unwrap_or(1.0)).map_err(|e| CliError::Validation(e.to_string()))
    }
}

fn load(path: &Path) -> Result<LoadedMesh, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let invalid = |e: hbcomplex::meshspec::MeshSpecError| CliError::Validation(format!("{}: {e}", path.display()));
    let spec = MeshSpec::from_json(&text).map_err(invalid)?;
    let ladder = spec.to_ladder().map_err(invalid)?;
    let canonical = spec.canonical().map_err(invalid)?;
    // provenance does not change the mesh, so it stays out of the digest
    let canonical = MeshSpec { generator: None, note: None, ..canonical }.to_json();
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(LoadedMesh { name, spec, ladder, canonical })
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<LoadedMesh>, CliError> {
    paths.iter().map(|p| load(p)).collect()
}

pub fn physics(cpen: Option<f64>, nu: f64) -> AssemblyParams {
    AssemblyParams { c_pen: cpen, nu, ..AssemblyParams::default() }
}

#[derive(Serialize)]
struct DimsRow {
    mesh: String,
    dim0: usize,
    dim1: usize,
    dim2: usize,
    /// `dim0 + dim2 − dim1 − 1`; zero is necessary for exactness.
    residual: i64,
}

pub fn dims(paths: &[PathBuf]) -> Result<Output, CliError> {
    let t = Instant::now();
    let meshes = load_all(paths)?;
    let rows = meshes
        .iter()
        .map(|m| {
            let c = HierarchicalComplex::new(m.ladder.clone(), Orientation::Standard, true).map_err(numerical)?;
            let [dim0, dim1, dim2] = c.dims();
            Ok(DimsRow { mesh: m.name.clone(), dim0, dim1, dim2, residual: c.dimension_residual() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let inputs: Vec<String> = meshes.into_iter().map(|m| m.canonical).collect();
    Output::record("dims", &inputs, &rows, to_csv(&rows)?, t.elapsed())
}

#[derive(Serialize)]
struct LevelRow {
    level: usize,
    coarse_components: usize,
    coarse_holes: usize,
    fine_components: usize,
    fine_holes: usize,
    support: bool,
    overlap: bool,
    verdict: String,
    h0: usize,
    h1: usize,
    h2: usize,
}

pub fn exactness(path: &Path, seed: u64) -> Result<Output, CliError> {
    let t = Instant::now();
    let m = load(path)?;
    let report = exactness_report(&m.ladder, seed).map_err(numerical)?;
    let h = report.cohomology;
    let rows: Vec<LevelRow> = report
        .levels
        .iter()
        .map(|l| LevelRow {
            level: l.level,
            coarse_components: l.coarse.0,
            coarse_holes: l.coarse.1,
            fine_components: l.fine.0,
            fine_holes: l.fine.1,
            support: l.support.pass,
            overlap: l.overlap.pass,
            verdict: l.verdict.to_string(),
            h0: h.h0,
            h1: h.h1,
            h2: h.h2,
        })
        .collect();
    Output::record("exactness", &[m.canonical], &report, to_csv(&rows)?, t.elapsed())
}

#[derive(Serialize)]
struct SpectrumRow {
    form: &'static str,
    index: usize,
    value: f64,
    exact: Option<f64>,
    relative_error: Option<f64>,
    spurious: bool,
}

pub fn maxwell(path: &Path, zero_tol: f64, rel_tol: f64, first_n: usize) -> Result<Output, CliError> {
    let t = Instant::now();
    let m = load(path)?;
    let report = maxwell_report(&m.ladder, &m.geometry()?, zero_tol, first_n, rel_tol).map_err(numerical)?;
    let mut rows: Vec<SpectrumRow> = Vec::new();
    for (i, &value) in report.eigenvalues.iter().enumerate() {
        let matched = report.spurious.matched.iter().find(|x| x.rank == i + 1);
        rows.push(SpectrumRow {
            form: "curlcurl",
            index: i + 1,
            value,
            exact: matched.map(|x| x.exact),
            relative_error: matched.map(|x| x.relative_error),
            spurious: report.spurious.spurious.contains(&(i + 1)),
        });
    }
    for (form, values) in [("grad_constraint", &report.grad_constraint), ("curl_pairing", &report.curl_pairing)] {
        rows.extend(values.iter().enumerate().map(|(i, &value)| SpectrumRow {
            form,
            index: i + 1,
            value,
            exact: None,
            relative_error: None,
            spurious: false,
        }));
    }
    Output::record("maxwell-eig", &[m.canonical], &report, to_csv(&rows)?, t.elapsed())
}

#[derive(Serialize)]
struct InfsupRow {
    mesh: String,
    elements: usize,
    velocity_dofs: usize,
    pressure_dofs: usize,
    beta: f64,
}

pub fn infsup(paths: &[PathBuf], params: &AssemblyParams) -> Result<Output, CliError> {
    let t = Instant::now();
    let meshes = load_all(paths)?;
    let rows = hbcomplex::par::map(&meshes, |m| -> Result<InfsupRow, CliError> {
        let ops = StokesOperators::assemble(&m.ladder, &m.geometry()?, params).map_err(numerical)?;
        Ok(InfsupRow {
            mesh: m.name.clone(),
            elements: build_hier_mesh(&m.ladder).len(),
            velocity_dofs: ops.velocity.dim(),
            pressure_dofs: ops.pressure.dim(),
            beta: ops.infsup().map_err(numerical)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let inputs: Vec<String> = meshes.into_iter().map(|m| m.canonical).collect();
    Output::record("infsup", &inputs, &rows, to_csv(&rows)?, t.elapsed())
}

#[derive(Serialize)]
struct CavityRow {
    elements: usize,
    unknowns: usize,
    solved_unknowns: usize,
    probe_x: f64,
    probe_y: f64,
    vorticity: f64,
    div_l2: f64,
    div_max_sampled: f64,
    residual: f64,
}

pub fn cavity(path: &Path, params: &AssemblyParams, probe: [f64; 2], samples: usize, seed: u64) -> Result<Output, CliError> {
    let t = Instant::now();
    let m = load(path)?;
    if m.spec.side.is_some_and(|s| s != 1.0) {
        return Err(CliError::Validation("the cavity runs on the unit square".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..samples).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let report = lid_driven_cavity(&m.ladder, params, probe, &points).map_err(numerical)?;
    let row = CavityRow {
        elements: report.elements,
        unknowns: report.unknowns,
        solved_unknowns: report.solved_unknowns,
        probe_x: probe[0],
        probe_y: probe[1],
        vorticity: report.vorticity,
        div_l2: report.div_l2,
        div_max_sampled: report.div_max_sampled,
        residual: report.residual,
    };
    let csv = to_csv(&[row])?;
    Output::record("cavity", &[m.canonical], &report, csv, t.elapsed())
}

pub fn generate(
    name: &str,
    level0: usize,
    degree: usize,
    params: &str,
    side: Option<f64>,
    note: Option<String>,
) -> Result<Output, CliError> {
    let params: serde_json::Value =
        serde_json::from_str(params).map_err(|e| CliError::Validation(format!("--params: {e}")))?;
    let generator: Generator = serde_json::from_value(serde_json::json!({ "name": name, "params": params }))
        .map_err(|e| CliError::Validation(format!("generator {name}: {e}")))?;
    let mut spec = generate_mesh(generator, [degree; 2], [level0; 2]).map_err(|e| CliError::Validation(e.to_string()))?;
    spec.side = side;
    spec.note = note;
    Ok(Output { payload: Payload::Spec(spec.to_json()), csv: None })
}
