//! CSV/JSON artifacts. Every JSON document carries `schema_version` and
//! `kind`; every CSV starts with a `# schema_version=... kind=...` comment
//! line followed by a header row.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{BlowupReport, EmdenFowler, POneReport, RescaledProfile, ScalingRow};
use crate::continuation::{AxisymGrid, Branch};
use crate::error::{HenonError, Result};
use crate::radial::RadialProfile;
use crate::scan::{Degeneracies, DegeneracyPoint, ScanResult};
use crate::spectral::ModeSpectrum;

pub const SCHEMA_VERSION: u32 = 1;

/// Exponent as used in file names: at most ten decimals, no trailing zeros.
pub fn p_label(p: f64) -> String {
    let s = format!("{p:.10}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    let env = Envelope { schema_version: SCHEMA_VERSION, kind: kind.to_string(), body };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &env)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a document written by [`write_json`], checking kind and version.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let env: Envelope<T> = serde_json::from_str(&text)?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(HenonError::Schema(format!(
            "{}: schema version {} (expected {SCHEMA_VERSION})",
            path.display(),
            env.schema_version
        )));
    }
    if env.kind != kind {
        return Err(HenonError::Schema(format!("{}: kind {:?} (expected {kind:?})", path.display(), env.kind)));
    }
    Ok(env.body)
}

fn csv_writer(path: &Path, kind: &str, extra: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# schema_version={SCHEMA_VERSION} kind={kind}{extra}")?;
    Ok(csv::Writer::from_writer(f))
}

fn write_rows<R: Serialize>(path: &Path, kind: &str, extra: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv_writer(path, kind, extra)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    u: f64,
    u_prime: f64,
    w: f64,
    z: f64,
    g: f64,
    one_minus_g: f64,
}

#[derive(Serialize)]
struct ProfileHeader<'a> {
    params: &'a crate::params::HenonParams,
    sup_norm: Option<f64>,
    log_sup_norm: f64,
    first_zero: f64,
    residual: f64,
    mesh_points: usize,
    /// `true` when `u`, `u_prime`, `w`, `z` are divided by the sup norm
    /// (the sup norm overflows a double for `p` very close to 1).
    normalized: bool,
    csv: String,
}

/// `<stem>.csv` (r, u, u_prime, w, z, g, one_minus_g) and `<stem>.json`.
pub fn write_profile(dir: &Path, stem: &str, profile: &RadialProfile) -> Result<Vec<PathBuf>> {
    let sup = profile.sup_norm();
    let normalized = !sup.is_finite();
    let s = if normalized { 1.0 } else { sup };
    let d = profile
        .derived
        .as_ref()
        .ok_or_else(|| HenonError::InvalidArgument("profile has no derived functions".into()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let rows = (0..profile.mesh.len()).map(|i| ProfileRow {
        r: profile.mesh.nodes()[i],
        u: s * profile.shape[i],
        u_prime: s * profile.shape_prime[i],
        w: s * d.w[i],
        z: s * d.z[i],
        g: d.g[i],
        one_minus_g: d.one_minus_g[i],
    });
    write_rows(&csv_path, "radial_profile", "", rows)?;
    let json_path = dir.join(format!("{stem}.json"));
    let header = ProfileHeader {
        params: &profile.params,
        sup_norm: if normalized { None } else { Some(sup) },
        log_sup_norm: profile.log_sup_norm,
        first_zero: profile.first_zero,
        residual: profile.residual,
        mesh_points: profile.mesh.len(),
        normalized,
        csv: format!("{stem}.csv"),
    };
    write_json(&json_path, "radial_profile", &header)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize)]
struct SpectrumHeader<'a> {
    p: f64,
    k: usize,
    mu_k: f64,
    multiplicity: u64,
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
    zero_counts: &'a [usize],
    csv: String,
}

/// `<stem>.json` with the eigenvalues and `<stem>.csv` with the
/// eigenfunctions on the mesh vertices.
pub fn write_spectrum(dir: &Path, stem: &str, n: usize, spec: &ModeSpectrum) -> Result<Vec<PathBuf>> {
    let json_path = dir.join(format!("{stem}.json"));
    write_json(
        &json_path,
        "mode_spectrum",
        &SpectrumHeader {
            p: spec.p,
            k: spec.k,
            mu_k: spec.mu_k,
            multiplicity: crate::spectral::multiplicity(spec.k, n),
            eigenvalues: &spec.eigenvalues,
            residuals: &spec.residuals,
            zero_counts: &spec.zero_counts,
            csv: format!("{stem}.csv"),
        },
    )?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path, "mode_eigenfunctions", "")?;
    let mut header = vec!["r".to_string()];
    header.extend((1..=spec.eigenfunctions.len()).map(|i| format!("psi_{i}")));
    w.write_record(&header)?;
    let cols: Vec<Vec<f64>> = (0..spec.eigenfunctions.len()).map(|i| spec.on_mesh(i)).collect();
    for (j, r) in spec.radii.iter().step_by(3).enumerate() {
        let mut rec = vec![r.to_string()];
        rec.extend(cols.iter().map(|c| c[j].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(vec![json_path, csv_path])
}

#[derive(Serialize)]
struct ScanRowOut {
    p: f64,
    lambda11: f64,
    morse_index: u64,
    morse_index_shortcut: u64,
    sup_norm: f64,
}

#[derive(Serialize)]
struct ScanHeader<'a> {
    n: usize,
    alpha: f64,
    k_max: usize,
    rows: usize,
    p_min: f64,
    p_max: f64,
    failures: &'a [(f64, String)],
    csv: &'a str,
}

/// `scan.csv` and `scan.json`.
pub fn write_scan(dir: &Path, scan: &ScanResult) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("scan.csv");
    write_rows(
        &csv_path,
        "morse_scan",
        "",
        scan.rows.iter().map(|r| ScanRowOut {
            p: r.p,
            lambda11: r.lambda_11,
            morse_index: r.morse_index,
            morse_index_shortcut: r.morse_index_shortcut,
            sup_norm: r.sup_norm,
        }),
    )?;
    let json_path = dir.join("scan.json");
    write_json(
        &json_path,
        "morse_scan",
        &ScanHeader {
            n: scan.n,
            alpha: scan.alpha,
            k_max: scan.k_max,
            rows: scan.rows.len(),
            p_min: scan.rows.first().map_or(f64::NAN, |r| r.p),
            p_max: scan.rows.last().map_or(f64::NAN, |r| r.p),
            failures: &scan.failures,
            csv: "scan.csv",
        },
    )?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize, Deserialize)]
pub struct DegeneracyDoc {
    pub n: usize,
    pub alpha: f64,
    pub tol: f64,
    pub changing_count: usize,
    pub possible_tangencies: Vec<f64>,
    pub points: Vec<DegeneracyPoint>,
    pub kernel_csv: Vec<String>,
}

/// `degeneracy.json` (self-contained, readable by `continue`) and one
/// `kernel_<i>.csv` per point.
pub fn write_degeneracies(dir: &Path, n: usize, alpha: f64, tol: f64, d: &Degeneracies) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut names = Vec::new();
    for (i, pt) in d.points.iter().enumerate() {
        let name = format!("kernel_{i}.csv");
        let path = dir.join(&name);
        let psi = pt.kernel.on_mesh(0);
        let extra = format!(" p_bar={}", pt.p_bar);
        write_rows(&path, "degeneracy_kernel", &extra, pt.kernel.radii.iter().step_by(3).zip(&psi).map(|(r, v)| (*r, *v)))?;
        names.push(name);
        out.push(path);
    }
    let json_path = dir.join("degeneracy.json");
    let doc = DegeneracyDoc {
        n,
        alpha,
        tol,
        changing_count: d.changing_count(),
        possible_tangencies: d.possible_tangencies.clone(),
        points: d.points.clone(),
        kernel_csv: names,
    };
    write_json(&json_path, "degeneracy_points", &doc)?;
    out.push(json_path);
    Ok(out)
}

pub fn read_degeneracies(path: &Path) -> Result<DegeneracyDoc> {
    read_json(path, "degeneracy_points")
}

#[derive(Serialize)]
struct BranchManifest<'a> {
    #[serde(flatten)]
    branch: &'a Branch,
    radial_points: usize,
    polar_points: usize,
    modes: usize,
    snapshots: Vec<String>,
}

/// `branch.json` plus `branch/point_<i>.csv` snapshots on `r × θ`.
pub fn write_branch(dir: &Path, grid: &AxisymGrid, branch: &Branch) -> Result<Vec<PathBuf>> {
    let snap_dir = dir.join("branch");
    fs::create_dir_all(&snap_dir)?;
    let radii = grid.radial_nodes();
    let angles = grid.polar_angles();
    let mut out = Vec::new();
    let mut names = Vec::new();
    for (i, st) in branch.states.iter().enumerate() {
        let name = format!("branch/point_{i:04}.csv");
        let path = dir.join(&name);
        let extra = format!(
            " N={} alpha={} p={} nr={} ntheta={}",
            grid.n,
            grid.alpha,
            st.p,
            radii.len(),
            angles.len()
        );
        let vals = grid.values(&st.coeffs);
        let rows = radii
            .iter()
            .enumerate()
            .flat_map(|(a, &r)| angles.iter().enumerate().map(move |(b, &t)| (a, b, r, t)))
            .map(|(a, b, r, t)| (r, t, vals[a][b]));
        let mut w = csv_writer(&path, "axisym_snapshot", &extra)?;
        w.write_record(["r", "theta", "u"])?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        names.push(name);
        out.push(path);
    }
    let json_path = dir.join("branch.json");
    write_json(
        &json_path,
        "branch",
        &BranchManifest { branch, radial_points: radii.len(), polar_points: angles.len(), modes: grid.modes(), snapshots: names },
    )?;
    out.push(json_path);
    Ok(out)
}

#[derive(Serialize)]
struct RescaledRow {
    x: f64,
    u_tilde: f64,
    limit: f64,
}

#[derive(Serialize)]
struct EmdenFowlerRow {
    t: f64,
    y: f64,
    bound: f64,
}

/// Asymptotics bundle: one CSV per table and per rescaled profile, and a
/// JSON summary.
pub fn write_asymptotics(
    dir: &Path,
    scaling: &[ScalingRow],
    p_to_1: &POneReport,
    blowup: &BlowupReport,
    rescaled: &[(RescaledProfile, EmdenFowler)],
    summary: &impl Serialize,
) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let path = dir.join("scaling.csv");
    write_rows(&path, "weighted_eigen_scaling", "", scaling.iter())?;
    out.push(path);
    let path = dir.join("p_to_1.csv");
    write_rows(&path, "p_to_1", &format!(" lambda_1={}", p_to_1.lambda_1), p_to_1.rows.iter())?;
    out.push(path);
    let path = dir.join("p_to_critical.csv");
    write_rows(&path, "p_to_critical", "", blowup.rows.iter())?;
    out.push(path);
    for (resc, ef) in rescaled {
        let path = dir.join(format!("rescaled_p{}.csv", p_label(resc.p)));
        let rows = resc.x.iter().zip(&resc.u_tilde).zip(&resc.limit).map(|((&x, &u), &l)| RescaledRow { x, u_tilde: u, limit: l });
        write_rows(&path, "rescaled_profile", &format!(" p={} mu_p={}", resc.p, resc.mu_p), rows)?;
        out.push(path);
        let path = dir.join(format!("emden_fowler_p{}.csv", p_label(resc.p)));
        let rows = ef.t.iter().zip(&ef.y).zip(&ef.bound).map(|((&t, &y), &b)| EmdenFowlerRow { t, y, bound: b });
        write_rows(&path, "emden_fowler", &format!(" p={} kappa={}", resc.p, ef.kappa), rows)?;
        out.push(path);
    }
    let path = dir.join("asymptotics.json");
    write_json(&path, "asymptotics_summary", summary)?;
    out.push(path);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(p_label(6.9), "6.9");
        assert_eq!(p_label(6.0), "6");
        assert_eq!(p_label(1.001), "1.001");
    }

    #[test]
    fn json_round_trip_checks_kind() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_json(&p, "thing", &serde_json::json!({"a": 1})).unwrap();
        let v: serde_json::Value = read_json(&p, "thing").unwrap();
        assert_eq!(v["a"], 1);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert!(read_json::<serde_json::Value>(&p, "other").is_err());
    }
}
