use rayon::prelude::*;
use serde::Serialize;

use super::Check;
use crate::error::{Result, ZollError};
use crate::geodesic::{GeodesicPath, ReturnTable, ShootOptions};
use crate::geometry::ManifoldSpec;
use crate::jacobi::{
    a_form, assemble_index_form, focal_instants, integrate_jacobi_frame, morse_index_focal, morse_index_quadratic,
    FocalRecord,
};

pub const INDEX_MESH: usize = 256;
pub const NULLITY_MESH: usize = 512;

/// Quadratic-form route on one geodesic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpotCheck {
    pub launch: usize,
    pub focal_index: usize,
    pub index: usize,
    pub index_fine: usize,
    pub nullity_estimate: usize,
    /// Five smallest eigenvalues at the index mesh and at the nullity mesh.
    pub smallest: Vec<f64>,
    pub smallest_fine: Vec<f64>,
    pub a_form_dimension: usize,
    pub a_form_norm: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexSummary {
    /// Common focal-count index, if every launch agrees.
    pub focal_index: Option<usize>,
    /// `(index, number of launches)`.
    pub focal_index_counts: Vec<(usize, usize)>,
    pub frame_failures: Vec<String>,
    pub focal_instants: usize,
    pub multiplicities: Vec<usize>,
    /// `max |t* − L| / L` over all focal instants.
    pub max_midpoint_offset: f64,
    pub spot_checks: Vec<SpotCheck>,
    pub methods_agree: bool,
}

fn focal_record(spec: &ManifoldSpec, path: &GeodesicPath, shoot: &ShootOptions) -> Result<FocalRecord> {
    focal_instants(&integrate_jacobi_frame(spec, path, shoot)?)
}

fn spot_check(spec: &ManifoldSpec, path: &GeodesicPath, shoot: &ShootOptions, launch: usize) -> Result<SpotCheck> {
    let frame = integrate_jacobi_frame(spec, path, shoot)?;
    let focal = morse_index_focal(&focal_instants(&frame)?, frame.return_time);
    let coarse = morse_index_quadratic(&assemble_index_form(spec, &frame, INDEX_MESH)?)?;
    let fine = morse_index_quadratic(&assemble_index_form(spec, &frame, NULLITY_MESH)?)?;
    let (a_dim, a_norm, error) = match a_form(spec, &frame, true) {
        Ok(a) => (a.dimension(), a.norm(), None),
        Err(e @ ZollError::MaximalDegeneracy { found, .. }) => (found, f64::NAN, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(SpotCheck {
        launch,
        focal_index: focal,
        index: coarse.index,
        index_fine: fine.index,
        nullity_estimate: fine.nullity_estimate,
        smallest: coarse.smallest,
        smallest_fine: fine.smallest,
        a_form_dimension: a_dim,
        a_form_norm: a_norm,
        error,
    })
}

/// Focal-count index on every launch, and both routes on the launches in
/// `picks`.
pub fn index_analysis(
    spec: &ManifoldSpec,
    table: &ReturnTable,
    shoot: &ShootOptions,
    picks: &[usize],
    half_length: f64,
) -> IndexSummary {
    let records: Vec<std::result::Result<FocalRecord, String>> = table
        .outcomes
        .par_iter()
        .map(|o| match o {
            Ok(path) => focal_record(spec, path, shoot).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect();

    let mut counts: Vec<(usize, usize)> = Vec::new();
    let mut failures = Vec::new();
    let mut instants = 0;
    let mut mults = Vec::new();
    let mut offset: f64 = 0.0;
    for (i, r) in records.iter().enumerate() {
        match r {
            Ok(rec) => {
                let k = morse_index_focal(rec, rec.return_time);
                match counts.iter_mut().find(|c| c.0 == k) {
                    Some(c) => c.1 += 1,
                    None => counts.push((k, 1)),
                }
                for f in &rec.instants {
                    instants += 1;
                    if !mults.contains(&f.multiplicity) {
                        mults.push(f.multiplicity);
                    }
                    offset = offset.max((f.t - half_length).abs() / half_length);
                }
            }
            Err(e) => failures.push(format!("launch {i}: {e}")),
        }
    }
    counts.sort_unstable();
    mults.sort_unstable();
    let focal_index = (counts.len() == 1 && failures.is_empty()).then(|| counts[0].0);

    let spot_checks: Vec<SpotCheck> = picks
        .par_iter()
        .map(|&i| match &table.outcomes[i] {
            Ok(path) => spot_check(spec, path, shoot, i).unwrap_or_else(|e| failed(i, e.to_string())),
            Err(e) => failed(i, e.to_string()),
        })
        .collect();
    let methods_agree = focal_index.is_some()
        && !spot_checks.is_empty()
        && spot_checks.iter().all(|s| {
            s.error.is_none()
                && Some(s.focal_index) == focal_index
                && s.index == s.focal_index
                && s.index_fine == s.focal_index
        });
    IndexSummary {
        focal_index,
        focal_index_counts: counts,
        frame_failures: failures,
        focal_instants: instants,
        multiplicities: mults,
        max_midpoint_offset: offset,
        spot_checks,
        methods_agree,
    }
}

fn failed(launch: usize, error: String) -> SpotCheck {
    SpotCheck {
        launch,
        focal_index: usize::MAX,
        index: usize::MAX,
        index_fine: usize::MAX,
        nullity_estimate: 0,
        smallest: vec![],
        smallest_fine: vec![],
        a_form_dimension: 0,
        a_form_norm: f64::NAN,
        error: Some(error),
    }
}

impl IndexSummary {
    pub fn checks(&self, n: usize, two_sided: bool) -> Vec<Check> {
        let mut out = Vec::new();
        let quad: Vec<usize> = self.spot_checks.iter().map(|s| s.index).collect();
        out.push(Check::new(
            "morse-index-two-ways",
            self.methods_agree,
            format!(
                "focal indices {:?}, quadratic indices {quad:?} (mesh {INDEX_MESH}){}",
                self.focal_index_counts,
                if self.frame_failures.is_empty() {
                    String::new()
                } else {
                    format!(", failures: {}", self.frame_failures.join("; "))
                }
            ),
        ));
        let law = match (two_sided, self.focal_index) {
            (true, _) => (
                self.focal_instants == 0,
                format!("{} focal instants with two boundary components", self.focal_instants),
            ),
            (false, Some(k)) if k > 0 => (
                self.max_midpoint_offset <= 1e-6 && self.multiplicities == vec![k],
                format!(
                    "max |t* − L|/L {:.3e}, multiplicities {:?}, k = {k}",
                    self.max_midpoint_offset, self.multiplicities
                ),
            ),
            (false, Some(_)) => (
                self.focal_instants == 0,
                format!("{} focal instants at k = 0", self.focal_instants),
            ),
            (false, None) => (false, "focal index not uniform".into()),
        };
        out.push(Check::new("midpoint-focal-law", law.0, law.1));
        let nullities: Vec<usize> = self.spot_checks.iter().map(|s| s.nullity_estimate).collect();
        let a_norm =
            self.spot_checks.iter().map(|s| s.a_form_norm).fold(
                0.0,
                |a: f64, b| {
                    if b.is_nan() {
                        f64::INFINITY
                    } else {
                        a.max(b)
                    }
                },
            );
        out.push(Check::new(
            "maximal-degeneracy",
            !self.spot_checks.is_empty() && nullities.iter().all(|&v| v + 1 >= n) && a_norm <= 1e-6,
            format!(
                "nullity estimates {nullities:?} at mesh {NULLITY_MESH} (need ≥ {}), max |𝒜| {a_norm:.3e}",
                n - 1
            ),
        ));
        out
    }
}
