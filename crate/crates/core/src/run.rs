//! Manifest-driven runs: certification pipeline, artifacts and exit status.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::make_example;
use crate::error::{Result, ZollError};
use crate::geodesic::SamplingStrategy;
use crate::geometry::{ExampleRef, ManifoldManifest, ManifoldSpec};
use crate::verify::{analyze, Analyses, Analysis, CertifyOptions, Verdict, VerifyTolerances, ZollReport, MIN_LAUNCHES};

/// Samples per geodesic in `polylines.csv`.
pub const POLYLINE_SAMPLES: usize = 33;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldSource {
    Example(ExampleRef),
    Inline(ManifoldManifest),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Certify,
    Jacobi,
    Soul,
    Fibers,
    Splitting,
    All,
}

fn default_launches() -> usize {
    64
}

fn default_sampling() -> SamplingStrategy {
    SamplingStrategy::UniformParameter
}

fn default_analyses() -> Vec<Stage> {
    vec![Stage::All]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifold: ManifoldSource,
    #[serde(default = "default_launches")]
    pub launches: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingStrategy,
    #[serde(default)]
    pub tolerances: VerifyTolerances,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunManifest {
    pub fn example(example: ExampleRef) -> Self {
        RunManifest {
            manifold: ManifoldSource::Example(example),
            launches: default_launches(),
            seed: 0,
            sampling: default_sampling(),
            tolerances: VerifyTolerances::default(),
            analyses: default_analyses(),
            out: None,
        }
    }

    pub fn with_analyses(mut self, analyses: &[Stage]) -> Self {
        self.analyses = analyses.to_vec();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One manifest or a JSON array of them.
    pub fn load_all(path: &Path) -> Result<Vec<Self>> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        Ok(match value {
            serde_json::Value::Array(items) => items
                .into_iter()
                .map(serde_json::from_value)
                .collect::<std::result::Result<_, _>>()?,
            other => vec![serde_json::from_value(other)?],
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if self.launches < MIN_LAUNCHES {
            return Err(ZollError::TooFewLaunches {
                found: self.launches,
                minimum: MIN_LAUNCHES,
            });
        }
        if !matches!(
            self.sampling,
            SamplingStrategy::UniformParameter | SamplingStrategy::LowDiscrepancy
        ) {
            return Err(ZollError::InvalidInput(
                "sampling must be `uniform-parameter` or `low-discrepancy`".into(),
            ));
        }
        if self.analyses.is_empty() {
            return Err(ZollError::InvalidInput("no analyses requested".into()));
        }
        Ok(())
    }

    pub fn analyses(&self) -> Analyses {
        let mut a = Analyses::NONE;
        for s in &self.analyses {
            match s {
                Stage::Certify => {}
                Stage::Jacobi => a.jacobi = true,
                Stage::Soul => a.soul = true,
                Stage::Fibers => a.fibers = true,
                Stage::Splitting => a.splitting = true,
                Stage::All => a = Analyses::ALL,
            }
        }
        a
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            launches: self.launches,
            seed: self.seed,
            strategy: self.sampling,
            tolerances: self.tolerances,
        }
    }

    pub fn build(&self) -> Result<ManifoldSpec> {
        match &self.manifold {
            ManifoldSource::Example(ex) => make_example(ex),
            ManifoldSource::Inline(m) => m.build(),
        }
    }

    /// Example name with the parameters given in the manifest.
    pub fn label(&self) -> String {
        match &self.manifold {
            ManifoldSource::Example(ex) if ex.params.is_empty() => ex.name.clone(),
            ManifoldSource::Example(ex) => {
                let p: Vec<String> = ex
                    .params
                    .iter()
                    .map(|(k, v)| match v {
                        serde_json::Value::Object(o) if o.contains_key("name") => format!("{k}={}", o["name"]),
                        serde_json::Value::String(s) => format!("{k}={s}"),
                        _ => format!("{k}={v}"),
                    })
                    .collect();
                format!("{}({})", ex.name, p.join(","))
            }
            ManifoldSource::Inline(m) => m.name.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Certified with every check passing, or refuted where the annotations
    /// say the metric is not Zoll.
    Expected,
    /// The outcome contradicts the annotations (or, without annotations, the
    /// run did not certify cleanly).
    Contradiction,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Expected => 0,
            RunStatus::Contradiction => 1,
        }
    }
}

/// Exit code for errors that prevent a run (bad manifest, unknown example).
pub const USAGE_EXIT: i32 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ZollReport,
    pub status: RunStatus,
    pub artifacts: Vec<PathBuf>,
}

fn expects_refutation(spec: &ManifoldSpec) -> bool {
    spec.annotations.as_ref().is_some_and(|t| !t.zoll)
}

pub fn status(spec: &ManifoldSpec, report: &ZollReport) -> RunStatus {
    let ok = if expects_refutation(spec) {
        report.verdict == Verdict::Refuted
    } else {
        report.verdict == Verdict::Certified && report.all_checks_pass()
    };
    if ok {
        RunStatus::Expected
    } else {
        RunStatus::Contradiction
    }
}

/// Runs the requested analyses and, if `out` (or the manifest's `out`) is
/// set, writes `report.json`, `manifold.json`, `geodesics.csv`,
/// `polylines.csv` and, when computed, `soul.csv` and `spectrum.csv`.
pub fn run(manifest: &RunManifest, out: Option<&Path>) -> Result<RunOutcome> {
    manifest.validate()?;
    let spec = manifest.build()?;
    let analysis = analyze(&spec, &manifest.certify_options(), manifest.analyses())?;
    let status = status(&spec, &analysis.report);
    let dir = out.or(manifest.out.as_deref());
    let artifacts = match dir {
        Some(d) => write_artifacts(&spec, &analysis, d)?,
        None => Vec::new(),
    };
    Ok(RunOutcome {
        report: analysis.report,
        status,
        artifacts,
    })
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<fs::File>> {
    let path = dir.join(name);
    let f = fs::File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn write_artifacts(spec: &ManifoldSpec, a: &Analysis, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut w = create(dir, "report.json", &mut files)?;
    writeln!(w, "{}", a.report.to_json())?;
    w.flush()?;

    let mut w = create(dir, "manifold.json", &mut files)?;
    writeln!(w, "{}", spec.manifest.to_json())?;
    w.flush()?;

    let n = spec.dimension();
    let mut w = create(dir, "geodesics.csv", &mut files)?;
    let mut head = vec!["launch".to_string()];
    head.extend((0..n).map(|i| format!("p{i}")));
    head.push("return_time".into());
    head.extend((0..n).map(|i| format!("q{i}")));
    head.extend(["delta_perp".into(), "grazing".into(), "error".into()]);
    writeln!(w, "{}", head.join(","))?;
    for (i, r) in a.table.records().iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.launch.iter().map(|v| format!("{v:.17e}")));
        row.push(r.return_time.map_or(String::new(), |v| format!("{v:.17e}")));
        match &r.arrival {
            Some(q) => row.extend(q.iter().map(|v| format!("{v:.17e}"))),
            None => row.extend((0..n).map(|_| String::new())),
        }
        row.push(r.delta_perp.map_or(String::new(), |v| format!("{v:.6e}")));
        row.push(r.grazing.to_string());
        row.push(
            r.error
                .as_ref()
                .map_or(String::new(), |e| format!("\"{}\"", e.replace('"', "\"\""))),
        );
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;

    let mut w = create(dir, "polylines.csv", &mut files)?;
    let mut head = vec!["launch".to_string(), "t".to_string()];
    head.extend((0..n).map(|i| format!("x{i}")));
    writeln!(w, "{}", head.join(","))?;
    for (i, o) in a.table.outcomes.iter().enumerate() {
        let Ok(path) = o else { continue };
        let line = path.polyline(spec, POLYLINE_SAMPLES)?;
        for (t, x) in line.t.iter().zip(&line.x) {
            let mut row = vec![i.to_string(), format!("{t:.12e}")];
            row.extend(x.iter().map(|v| format!("{v:.12e}")));
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;

    if let Some(cloud) = &a.soul {
        let mut w = create(dir, "soul.csv", &mut files)?;
        cloud.write_csv(&mut w)?;
        w.flush()?;
    }

    if !a.spot_checks.is_empty() {
        let mut w = create(dir, "spectrum.csv", &mut files)?;
        writeln!(w, "launch,mesh,rank,eigenvalue")?;
        for s in &a.spot_checks {
            for (mesh, values) in [
                (crate::verify::INDEX_MESH, &s.smallest),
                (crate::verify::NULLITY_MESH, &s.smallest_fine),
            ] {
                for (r, v) in values.iter().enumerate() {
                    writeln!(w, "{},{mesh},{r},{v:.12e}", s.launch)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(files)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixRow {
    pub example: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremMatrix {
    pub rows: Vec<MatrixRow>,
}

impl TheoremMatrix {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(!self.all_pass())
    }

    /// Fixed-width text table, one row per `(example, check)`.
    pub fn to_table(&self) -> String {
        let w0 = self
            .rows
            .iter()
            .map(|r| r.example.chars().count())
            .max()
            .unwrap_or(7)
            .max(7);
        let w1 = self
            .rows
            .iter()
            .map(|r| r.check.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = format!("{:<w0$}  {:<w1$}  result  detail\n", "example", "check");
        for r in &self.rows {
            s += &format!(
                "{:<w0$}  {:<w1$}  {:<6}  {}\n",
                r.example,
                r.check,
                if r.passed { "pass" } else { "FAIL" },
                r.detail
            );
        }
        s
    }
}

/// Runs every manifest and tabulates its checks. Examples annotated as not
/// Zoll contribute a single `refutation` row.
pub fn theorem_matrix(manifests: &[RunManifest]) -> Result<TheoremMatrix> {
    if manifests.is_empty() {
        return Err(ZollError::InvalidInput("empty manifest list".into()));
    }
    let mut rows = Vec::new();
    for m in manifests {
        let example = m.label();
        let outcome = m.build().and_then(|spec| {
            m.validate()?;
            let a = analyze(&spec, &m.certify_options(), m.analyses())?;
            Ok((spec, a.report))
        });
        match outcome {
            Err(e) => rows.push(MatrixRow {
                example,
                check: "run".into(),
                passed: false,
                detail: e.to_string(),
            }),
            Ok((spec, report)) if expects_refutation(&spec) => rows.push(MatrixRow {
                example,
                check: "refutation".into(),
                passed: report.verdict == Verdict::Refuted,
                detail: format!("verdict {:?}: {}", report.verdict, report.reasons.join("; ")),
            }),
            Ok((_, report)) => {
                rows.push(MatrixRow {
                    example: example.clone(),
                    check: "verdict".into(),
                    passed: report.verdict == Verdict::Certified,
                    detail: format!("{:?}, L = {:.12}", report.verdict, report.half_length),
                });
                rows.extend(report.checks.into_iter().map(|c| MatrixRow {
                    example: example.clone(),
                    check: c.name,
                    passed: c.passed,
                    detail: c.detail,
                }));
            }
        }
    }
    Ok(TheoremMatrix { rows })
}
