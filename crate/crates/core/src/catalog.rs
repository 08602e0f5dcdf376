//! Built-in examples with closed-form ground truth.
//!
//! Charts used:
//! - `flat_disk`, `euclidean_ball`, `ellipse`: Cartesian coordinates.
//! - `flat_band`: `(s, t)` with `s` periodic and `t ∈ [0, 2L]`.
//! - `flat_moebius`: `(x, t)`, `x ∈ [−w, w]`, glued by `(x, t + c) ~ (−x, t)`.
//! - `spherical_cap`: stereographic projection from the south pole, cap
//!   centered at the north pole.
//! - `spherical_band`: (longitude, latitude) on the unit sphere.
//! - `mapping_torus`: base chart times `t ∈ [0, 1)`, `(p, t + 1) ~ (φ⁻¹(p), t)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::error::{Result, ZollError};
use crate::geometry::boundary::{BoundaryChart, DefiningFunction, ExtendedDefining, QuadraticDefining};
use crate::geometry::deck::DeckMap;
use crate::geometry::manifest::{BoundarySource, DeckSource, ExampleRef, ManifoldManifest, MetricSource};
use crate::geometry::metric::{Euclidean, LatitudeBand, MetricField, Point, ProductMetric, StereographicSphere};
use crate::geometry::spec::{BoundaryPiece, ChartDomain, GroundTruth, ManifoldSpec};

pub const DESK_SCALE_MAX_DIM: usize = 5;

/// Names accepted by [`make_example`], each with its default parameters.
pub fn catalog() -> Vec<ExampleRef> {
    vec![
        ExampleRef::new("flat_disk").with("L", 1.0),
        ExampleRef::new("flat_band").with("L", 1.0).with("circumference", 4.0),
        ExampleRef::new("flat_moebius")
            .with("width", 1.0)
            .with("twist_length", 3.0),
        ExampleRef::new("spherical_cap").with("L", PI / 3.0).with("n", 2),
        ExampleRef::new("spherical_band").with("theta0", PI / 6.0),
        ExampleRef::new("euclidean_ball").with("n", 3).with("L", 1.0),
        ExampleRef::new("ellipse").with("a", 2.0).with("b", 1.0),
        ExampleRef::new("mapping_torus")
            .with(
                "base",
                serde_json::to_value(ExampleRef::new("flat_disk").with("L", 1.0)).unwrap(),
            )
            .with("map", "rotation")
            .with("angle", 2.0 * PI / 5.0),
        ExampleRef::new("index_ladder").with("n", 3).with("k", 1),
    ]
}

/// Catalog entry with defaults filled in for omitted parameters.
pub fn resolve(example: &ExampleRef) -> Result<ExampleRef> {
    let defaults = catalog()
        .into_iter()
        .find(|e| e.name == example.name)
        .ok_or_else(|| ZollError::UnknownExample(example.name.clone()))?;
    let mut out = defaults.clone();
    let explicit_map = example.params.get("map").and_then(Value::as_str);
    if explicit_map.is_some_and(|m| m != "rotation") && !example.params.contains_key("angle") {
        out.params.remove("angle");
    }
    for (k, v) in &example.params {
        if !defaults.params.contains_key(k) {
            return Err(ZollError::InvalidParameter(format!(
                "`{}` has no parameter `{k}`",
                example.name
            )));
        }
        out.params.insert(k.clone(), v.clone());
    }
    Ok(out)
}

fn num(ex: &ExampleRef, key: &str) -> Result<f64> {
    ex.params
        .get(key)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| ZollError::InvalidParameter(format!("`{key}` must be a finite number")))
}

fn count(ex: &ExampleRef, key: &str) -> Result<usize> {
    ex.params
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| ZollError::InvalidParameter(format!("`{key}` must be a non-negative integer")))
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ZollError::InvalidParameter(what.to_string()))
    }
}

pub fn make_example(example: &ExampleRef) -> Result<ManifoldSpec> {
    let ex = resolve(example)?;
    let mut spec = match ex.name.as_str() {
        "flat_disk" => {
            let l = num(&ex, "L")?;
            require(l > 0.0, "flat_disk needs L > 0")?;
            euclidean_ball(2, l)
        }
        "euclidean_ball" => {
            let n = count(&ex, "n")?;
            let l = num(&ex, "L")?;
            require(n >= 2, "euclidean_ball needs n >= 2")?;
            require(n <= DESK_SCALE_MAX_DIM, "euclidean_ball needs n <= 5")?;
            require(l > 0.0, "euclidean_ball needs L > 0")?;
            euclidean_ball(n, l)
        }
        "flat_band" => {
            let l = num(&ex, "L")?;
            let c = num(&ex, "circumference")?;
            require(l > 0.0 && c > 0.0, "flat_band needs L > 0 and circumference > 0")?;
            flat_band(l, c)
        }
        "flat_moebius" => {
            let w = num(&ex, "width")?;
            let c = num(&ex, "twist_length")?;
            require(w > 0.0 && c > 0.0, "flat_moebius needs width > 0 and twist_length > 0")?;
            flat_moebius(w, c)
        }
        "spherical_cap" => {
            let l = num(&ex, "L")?;
            let n = count(&ex, "n")?;
            require(l > 0.0 && l < FRAC_PI_2, "spherical_cap needs 0 < L < pi/2")?;
            require((2..=DESK_SCALE_MAX_DIM).contains(&n), "spherical_cap needs 2 <= n <= 5")?;
            spherical_cap(l, n)
        }
        "spherical_band" => {
            let t = num(&ex, "theta0")?;
            require(t > 0.0 && t < FRAC_PI_2, "spherical_band needs 0 < theta0 < pi/2")?;
            spherical_band(t)
        }
        "ellipse" => {
            let a = num(&ex, "a")?;
            let b = num(&ex, "b")?;
            require(a > 0.0 && b > 0.0, "ellipse needs positive semi-axes")?;
            require(a != b, "ellipse with a = b is flat_disk")?;
            ellipse(a, b)
        }
        "mapping_torus" => {
            let base_ref: ExampleRef = serde_json::from_value(ex.params.get("base").cloned().unwrap_or(Value::Null))
                .map_err(|e| ZollError::InvalidParameter(format!("`base`: {e}")))?;
            let base = make_example(&base_ref)?;
            let map = torus_map(&ex, base.dimension())?;
            mapping_torus(&base, &map)?
        }
        "index_ladder" => {
            let n = count(&ex, "n")?;
            let k = count(&ex, "k")?;
            index_ladder(n, k)?
        }
        other => return Err(ZollError::UnknownExample(other.to_string())),
    };
    spec.manifest.metric = MetricSource::Builtin { example: ex.clone() };
    spec.validate()?;
    Ok(spec)
}

fn torus_map(ex: &ExampleRef, n: usize) -> Result<TorusMap> {
    let kind = ex.params.get("map").and_then(Value::as_str).unwrap_or("identity");
    match kind {
        "identity" => Ok(TorusMap::identity(n)),
        "rotation" => Ok(TorusMap::rotation(n, num(ex, "angle")?)),
        "reflection" => Ok(TorusMap::reflection(n)),
        other => Err(ZollError::InvalidParameter(format!(
            "unknown mapping-torus map `{other}` (identity | rotation | reflection)"
        ))),
    }
}

/// Affine isometry `φ(p) = A p + s` of a base chart.
#[derive(Clone, Debug)]
pub struct TorusMap {
    pub matrix: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl TorusMap {
    pub fn identity(n: usize) -> Self {
        TorusMap {
            matrix: DMatrix::identity(n, n),
            shift: DVector::zeros(n),
        }
    }

    /// Rotation by `angle` in the first two chart coordinates.
    pub fn rotation(n: usize, angle: f64) -> Self {
        let mut m = DMatrix::identity(n, n);
        let (s, c) = angle.sin_cos();
        m[(0, 0)] = c;
        m[(0, 1)] = -s;
        m[(1, 0)] = s;
        m[(1, 1)] = c;
        TorusMap {
            matrix: m,
            shift: DVector::zeros(n),
        }
    }

    /// `x₀ ↦ −x₀`.
    pub fn reflection(n: usize) -> Self {
        let mut m = DMatrix::identity(n, n);
        m[(0, 0)] = -1.0;
        TorusMap {
            matrix: m,
            shift: DVector::zeros(n),
        }
    }
}

fn sphere_point(radius: f64, u: &[f64], n: usize) -> Point {
    // S^{n-1} from n-1 unit parameters: circle, equal-area S², then latitude
    // recursion
    match n {
        2 => {
            let a = 2.0 * PI * u[0];
            Point::from_vec(vec![radius * a.cos(), radius * a.sin()])
        }
        3 => {
            let z = 1.0 - 2.0 * u[0];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = 2.0 * PI * u[1];
            Point::from_vec(vec![radius * r * a.cos(), radius * r * a.sin(), radius * z])
        }
        _ => {
            let z = -(PI * u[0]).cos();
            let r = (1.0 - z * z).max(0.0).sqrt();
            let rest = sphere_point(radius * r, &u[1..], n - 1);
            let mut v: Vec<f64> = rest.iter().copied().collect();
            v.push(radius * z);
            Point::from_vec(v)
        }
    }
}

fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> ChartDomain {
    ChartDomain { lower, upper }
}

fn assemble(
    name: &str,
    metric: Arc<dyn MetricField>,
    defining: Arc<dyn DefiningFunction>,
    domain: ChartDomain,
    deck_maps: Vec<DeckMap>,
    pieces: Vec<BoundaryPiece>,
    truth: GroundTruth,
    fiber_grid: Option<Vec<usize>>,
) -> ManifoldSpec {
    let n = metric.dimension();
    let manifest = ManifoldManifest {
        name: name.to_string(),
        dimension: n,
        metric: MetricSource::Builtin {
            example: ExampleRef::new(name),
        },
        boundary: BoundarySource::Builtin,
        deck_maps: deck_maps.iter().map(DeckSource::from_map).collect(),
        domain: domain.clone(),
        annotations: Some(truth.clone()),
        fiber_grid: fiber_grid.clone(),
    };
    ManifoldSpec {
        name: name.to_string(),
        metric,
        boundary: BoundaryChart::new(defining),
        domain,
        deck_maps,
        pieces,
        annotations: Some(truth),
        fiber_grid,
        manifest,
    }
}

fn euclidean_ball(n: usize, l: f64) -> ManifoldSpec {
    let name = if n == 2 { "flat_disk" } else { "euclidean_ball" };
    let defining = QuadraticDefining {
        center: vec![0.0; n],
        weights: vec![1.0; n],
        level: l * l,
        scale: 0.5 / l,
    };
    let m = 1.25 * l;
    assemble(
        name,
        Arc::new(Euclidean { dim: n }),
        Arc::new(defining),
        boxed(vec![-m; n], vec![m; n]),
        vec![],
        vec![BoundaryPiece::new(n - 1, move |u| sphere_point(l, u, n))],
        GroundTruth {
            zoll: true,
            half_length: Some(l),
            index: Some(n - 1),
            components: Some(1),
            soul_dimension: Some(0),
        },
        None,
    )
}

fn flat_band(l: f64, c: f64) -> ManifoldSpec {
    let defining = QuadraticDefining {
        center: vec![0.0, l],
        weights: vec![0.0, 1.0],
        level: l * l,
        scale: 0.5 / l,
    };
    assemble(
        "flat_band",
        Arc::new(Euclidean { dim: 2 }),
        Arc::new(defining),
        boxed(vec![0.0, -0.25 * l], vec![c, 2.25 * l]),
        vec![DeckMap::translation(2, 0, c)],
        vec![
            BoundaryPiece::new(1, move |u| Point::from_vec(vec![c * u[0], 0.0])),
            BoundaryPiece::new(1, move |u| Point::from_vec(vec![c * u[0], 2.0 * l])),
        ],
        GroundTruth {
            zoll: true,
            half_length: Some(l),
            index: Some(0),
            components: Some(2),
            soul_dimension: Some(1),
        },
        None,
    )
}

fn flat_moebius(w: f64, c: f64) -> ManifoldSpec {
    let defining = QuadraticDefining {
        center: vec![0.0, 0.0],
        weights: vec![1.0, 0.0],
        level: w * w,
        scale: 0.5 / w,
    };
    let flip = DeckMap::new(
        1,
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
        DVector::from_vec(vec![0.0, -c]),
    )
    .expect("flip is invertible");
    // one boundary circle of length 2c: the edge x = w followed by x = −w
    let piece = BoundaryPiece::new(1, move |u| {
        let s = 2.0 * c * u[0].rem_euclid(1.0);
        if s < c {
            Point::from_vec(vec![w, s])
        } else {
            Point::from_vec(vec![-w, s - c])
        }
    });
    assemble(
        "flat_moebius",
        Arc::new(Euclidean { dim: 2 }),
        Arc::new(defining),
        boxed(vec![-1.25 * w, 0.0], vec![1.25 * w, c]),
        vec![flip],
        vec![piece],
        GroundTruth {
            zoll: true,
            half_length: Some(w),
            index: Some(0),
            components: Some(1),
            soul_dimension: Some(1),
        },
        None,
    )
}

fn spherical_cap(l: f64, n: usize) -> ManifoldSpec {
    let rho = (0.5 * l).tan();
    let defining = QuadraticDefining {
        center: vec![0.0; n],
        weights: vec![1.0; n],
        level: rho * rho,
        scale: 0.5 / rho,
    };
    let m = 1.5 * rho;
    assemble(
        "spherical_cap",
        Arc::new(StereographicSphere { dim: n, radius: 1.0 }),
        Arc::new(defining),
        boxed(vec![-m; n], vec![m; n]),
        vec![],
        vec![BoundaryPiece::new(n - 1, move |u| sphere_point(rho, u, n))],
        GroundTruth {
            zoll: true,
            half_length: Some(l),
            index: Some(n - 1),
            components: Some(1),
            soul_dimension: Some(0),
        },
        None,
    )
}

fn spherical_band(theta0: f64) -> ManifoldSpec {
    let defining = QuadraticDefining {
        center: vec![0.0, 0.0],
        weights: vec![0.0, 1.0],
        level: theta0 * theta0,
        scale: 0.5 / theta0,
    };
    let margin = (0.25 * theta0).min(0.5 * (FRAC_PI_2 - theta0));
    assemble(
        "spherical_band",
        Arc::new(LatitudeBand),
        Arc::new(defining),
        boxed(vec![0.0, -theta0 - margin], vec![2.0 * PI, theta0 + margin]),
        vec![DeckMap::translation(2, 0, 2.0 * PI)],
        vec![
            BoundaryPiece::new(1, move |u| Point::from_vec(vec![2.0 * PI * u[0], -theta0])),
            BoundaryPiece::new(1, move |u| Point::from_vec(vec![2.0 * PI * u[0], theta0])),
        ],
        GroundTruth {
            zoll: true,
            half_length: Some(theta0),
            index: Some(0),
            components: Some(2),
            soul_dimension: Some(1),
        },
        None,
    )
}

fn ellipse(a: f64, b: f64) -> ManifoldSpec {
    let defining = QuadraticDefining {
        center: vec![0.0, 0.0],
        weights: vec![1.0 / (a * a), 1.0 / (b * b)],
        level: 1.0,
        scale: 0.5 * a.min(b),
    };
    assemble(
        "ellipse",
        Arc::new(Euclidean { dim: 2 }),
        Arc::new(defining),
        boxed(vec![-1.25 * a, -1.25 * b], vec![1.25 * a, 1.25 * b]),
        vec![],
        vec![BoundaryPiece::new(1, move |u| {
            let t = 2.0 * PI * u[0];
            Point::from_vec(vec![a * t.cos(), b * t.sin()])
        })],
        GroundTruth {
            zoll: false,
            ..GroundTruth::default()
        },
        None,
    )
}

/// `M_φ = M × ℝ / (p, t) ~ (φ(p), t + 1)` with metric `g + dt²`.
pub fn mapping_torus(base: &ManifoldSpec, phi: &TorusMap) -> Result<ManifoldSpec> {
    let nb = base.dimension();
    let n = nb + 1;
    if phi.matrix.nrows() != nb || phi.shift.len() != nb {
        return Err(ZollError::InvalidInput(format!(
            "isometry acts on dimension {}, base has {nb}",
            phi.matrix.nrows()
        )));
    }
    let phi_map = DeckMap::new(0, phi.matrix.clone(), phi.shift.clone())?;
    for x in base.interior_samples(32, 11) {
        let r = phi_map.isometry_residual(base.metric.as_ref(), &x);
        let db = (base.boundary_value(&phi_map.apply(&x)) - base.boundary_value(&x)).abs();
        if r > 1e-10 || db > 1e-12 {
            return Err(ZollError::NotAnIsometry(r.max(db)));
        }
    }

    let metric: Arc<dyn MetricField> = Arc::new(ProductMetric {
        base: base.metric.clone(),
        extra: 1,
    });
    let defining: Arc<dyn DefiningFunction> = Arc::new(ExtendedDefining {
        base: base.boundary.function.clone(),
        extra: 1,
    });
    let mut deck_maps: Vec<DeckMap> = base.deck_maps.iter().map(|d| d.extended(1)).collect();
    // leaving through t = 1: (p, t) ↦ (φ⁻¹(p), t − 1)
    let inv = phi_map.inverse_differential().clone();
    let mut matrix = DMatrix::identity(n, n);
    matrix.view_mut((0, 0), (nb, nb)).copy_from(&inv);
    let s = -(&inv * &phi.shift);
    let shift = DVector::from_fn(n, |i, _| if i < nb { s[i] } else { -1.0 });
    deck_maps.push(DeckMap::new(nb, matrix, shift)?);

    let pieces = base
        .pieces
        .iter()
        .map(|piece| {
            let p = piece.clone();
            let d = p.param_dim;
            BoundaryPiece::new(d + 1, move |u| {
                let b = p.point(&u[..d]);
                Point::from_fn(n, |i, _| if i < nb { b[i] } else { u[d] })
            })
        })
        .collect();

    let mut domain = base.domain.clone();
    domain.lower.push(0.0);
    domain.upper.push(1.0);
    let truth = base.annotations.clone().map(|t| GroundTruth {
        soul_dimension: t.soul_dimension.map(|d| d + 1),
        ..t
    });
    let grid = base
        .fiber_grid
        .clone()
        .unwrap_or_else(|| {
            base.pieces
                .first()
                .map_or(vec![], |p| vec![if p.param_dim == 1 { 32 } else { 12 }; p.param_dim])
        })
        .into_iter()
        .chain(std::iter::once(4))
        .collect();
    let spec = assemble(
        "mapping_torus",
        metric,
        defining,
        domain,
        deck_maps,
        pieces,
        truth.unwrap_or_default(),
        Some(grid),
    );
    spec.validate()?;
    Ok(spec)
}

/// Zoll example with connected boundary of dimension `n` and index `k`.
pub fn index_ladder(n: usize, k: usize) -> Result<ManifoldSpec> {
    if n > DESK_SCALE_MAX_DIM {
        return Err(ZollError::DeskScaleCap(n));
    }
    require(n >= 2 && k < n, "index_ladder needs n >= 2 and 0 <= k <= n-1")?;
    let (mut spec, folds) = if k == 0 {
        (flat_moebius(1.0, 2.0), n - 2)
    } else {
        (euclidean_ball(k + 1, 1.0), n - 1 - k)
    };
    for _ in 0..folds {
        spec = mapping_torus(&spec, &TorusMap::identity(spec.dimension()))?;
    }
    spec.name = "index_ladder".into();
    spec.manifest.name = spec.name.clone();
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_example_builds() {
        for ex in catalog() {
            let spec = make_example(&ex).unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            assert_eq!(
                spec.manifest.metric,
                MetricSource::Builtin {
                    example: resolve(&ex).unwrap()
                }
            );
        }
    }

    #[test]
    fn sphere_parametrization_has_requested_radius() {
        for n in 2..=5 {
            let p = sphere_point(2.0, &vec![0.3; n - 1], n);
            assert_eq!(p.len(), n);
            assert!((p.norm() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range_cap_is_rejected() {
        let ex = ExampleRef::new("spherical_cap").with("L", 1.6);
        assert!(matches!(make_example(&ex), Err(ZollError::InvalidParameter(_))));
    }

    #[test]
    fn unknown_names_and_parameters_are_rejected() {
        assert!(matches!(
            make_example(&ExampleRef::new("torus_knot")),
            Err(ZollError::UnknownExample(_))
        ));
        let ex = ExampleRef::new("flat_disk").with("radius", 1.0);
        assert!(matches!(make_example(&ex), Err(ZollError::InvalidParameter(_))));
    }

    #[test]
    fn mapping_torus_rejects_non_isometries() {
        let base = make_example(&ExampleRef::new("ellipse")).unwrap();
        let err = mapping_torus(&base, &TorusMap::rotation(2, 0.3)).unwrap_err();
        assert!(matches!(err, ZollError::NotAnIsometry(_)));
    }

    #[test]
    fn ladder_dimensions_and_indices() {
        for n in 2..=4 {
            for k in 0..n {
                let spec = index_ladder(n, k).unwrap();
                let truth = spec.annotations.clone().unwrap();
                assert_eq!(spec.dimension(), n);
                assert_eq!(truth.index, Some(k));
                assert_eq!(truth.components, Some(1));
                assert_eq!(truth.soul_dimension, Some(n - 1 - k));
            }
        }
        assert!(matches!(index_ladder(6, 1), Err(ZollError::DeskScaleCap(6))));
    }

    #[test]
    fn manifest_round_trip_rebuilds_the_example() {
        let spec = make_example(&catalog()[7]).unwrap();
        let text = spec.manifest.to_json();
        let again = ManifoldManifest::from_json(&text).unwrap().build().unwrap();
        assert_eq!(again.manifest, spec.manifest);
        assert_eq!(again.deck_maps, spec.deck_maps);
    }
}
