//! Cutter operators on ℝ^J: closed-form projections, subgradient projectors
//! for piecewise-linear convex functions, and averaged or relaxed versions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CfpError, Point};

/// Default tolerance of [`Operator::fix_oracle`].
pub const FIX_TOL: f64 = 1e-9;
/// Tolerance of the cutter and firmly-nonexpansive inequalities.
pub const INEQ_TOL: f64 = 1e-10;

/// One affine piece `u ↦ ⟨a, u⟩ - b` of a max-affine function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Serializable description of an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// Projection onto `{u : ⟨a, u⟩ <= b}`.
    Halfspace { a: Vec<f64>, b: f64 },
    /// Projection onto `{u : ⟨a, u⟩ = b}`.
    Hyperplane { a: Vec<f64>, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Projection onto `{u : A u = d}`, `A` given by rows.
    Affine { matrix: Vec<Vec<f64>>, rhs: Vec<f64> },
    /// Subgradient projector onto `{u : max_k ⟨a_k, u⟩ - b_k <= 0}`.
    SubgradientProjector { pieces: Vec<AffinePiece> },
    /// `(Id + T) / 2`.
    FirmlyNonexpansiveAvg { inner: Box<OperatorSpec> },
    /// `Id + λ (T - Id)`.
    Relaxed { inner: Box<OperatorSpec>, lambda: f64 },
}

#[derive(Debug, Clone)]
enum Compiled {
    Halfspace { a: Point, b: f64, norm2: f64 },
    Hyperplane { a: Point, b: f64, norm2: f64 },
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
    Affine { a: DMatrix<f64>, d: Point, pinv: DMatrix<f64> },
    Subgradient { pieces: Vec<(Point, f64)> },
    Average(Box<Operator>),
    Relaxed(Box<Operator>, f64),
}

/// A validated operator with precomputed data.
#[derive(Debug, Clone)]
pub struct Operator {
    spec: OperatorSpec,
    dim: usize,
    compiled: Compiled,
}

/// Anything that maps points of ℝ^J to points of ℝ^J.
pub trait SelfMap {
    fn map(&self, x: &Point) -> Point;
}

impl SelfMap for Operator {
    fn map(&self, x: &Point) -> Point {
        self.apply(x)
    }
}

impl<F: Fn(&Point) -> Point> SelfMap for F {
    fn map(&self, x: &Point) -> Point {
        self(x)
    }
}

fn vector(values: &[f64], what: &str) -> Result<Point, CfpError> {
    if values.is_empty() {
        return Err(CfpError::InvalidOperator(format!("{what} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CfpError::InvalidOperator(format!("{what} has a non-finite entry")));
    }
    Ok(DVector::from_column_slice(values))
}

fn nonzero(a: &Point, what: &str) -> Result<f64, CfpError> {
    let norm2 = a.norm_squared();
    if norm2 > 0.0 {
        Ok(norm2)
    } else {
        Err(CfpError::InvalidOperator(format!("{what} needs a nonzero normal")))
    }
}

fn finite_scalar(v: f64, what: &str) -> Result<f64, CfpError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CfpError::InvalidOperator(format!("{what} is not finite")))
    }
}

impl Operator {
    pub fn new(spec: OperatorSpec) -> Result<Self, CfpError> {
        let (dim, compiled) = match &spec {
            OperatorSpec::Halfspace { a, b } | OperatorSpec::Hyperplane { a, b } => {
                let av = vector(a, "normal")?;
                let norm2 = nonzero(&av, "a half-space or hyperplane")?;
                let b = finite_scalar(*b, "offset")?;
                let compiled = if matches!(spec, OperatorSpec::Halfspace { .. }) {
                    Compiled::Halfspace { a: av, b, norm2 }
                } else {
                    Compiled::Hyperplane { a: av, b, norm2 }
                };
                (a.len(), compiled)
            }
            OperatorSpec::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(CfpError::InvalidOperator("ball radius must be positive".into()));
                }
                (center.len(), Compiled::Ball { center: vector(center, "center")?, radius: *radius })
            }
            OperatorSpec::Box { lo, hi } => {
                let (lo_v, hi_v) = (vector(lo, "lo")?, vector(hi, "hi")?);
                if lo.len() != hi.len() {
                    return Err(CfpError::DimensionMismatch { expected: lo.len(), got: hi.len() });
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(CfpError::InvalidOperator("box needs lo <= hi in every coordinate".into()));
                }
                (lo.len(), Compiled::Box { lo: lo_v, hi: hi_v })
            }
            OperatorSpec::Affine { matrix, rhs } => {
                let (a, d, pinv) = compile_affine(matrix, rhs)?;
                (a.ncols(), Compiled::Affine { a, d, pinv })
            }
            OperatorSpec::SubgradientProjector { pieces } => {
                let first = pieces
                    .first()
                    .ok_or_else(|| CfpError::InvalidOperator("no affine pieces".into()))?;
                let dim = first.a.len();
                let compiled = pieces
                    .iter()
                    .map(|p| {
                        let a = vector(&p.a, "piece slope")?;
                        if a.len() != dim {
                            return Err(CfpError::DimensionMismatch { expected: dim, got: a.len() });
                        }
                        nonzero(&a, "every affine piece")?;
                        Ok((a, finite_scalar(p.b, "piece offset")?))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (dim, Compiled::Subgradient { pieces: compiled })
            }
            OperatorSpec::FirmlyNonexpansiveAvg { inner } => {
                let inner = Operator::new((**inner).clone())?;
                (inner.dim, Compiled::Average(Box::new(inner)))
            }
            OperatorSpec::Relaxed { inner, lambda } => {
                check_lambda(*lambda)?;
                let inner = Operator::new((**inner).clone())?;
                (inner.dim, Compiled::Relaxed(Box::new(inner), *lambda))
            }
        };
        Ok(Operator { spec, dim, compiled })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Short name of the operator kind.
    pub fn kind(&self) -> &'static str {
        match self.spec {
            OperatorSpec::Halfspace { .. } => "halfspace",
            OperatorSpec::Hyperplane { .. } => "hyperplane",
            OperatorSpec::Ball { .. } => "ball",
            OperatorSpec::Box { .. } => "box",
            OperatorSpec::Affine { .. } => "affine",
            OperatorSpec::SubgradientProjector { .. } => "subgradient_projector",
            OperatorSpec::FirmlyNonexpansiveAvg { .. } => "firmly_nonexpansive_avg",
            OperatorSpec::Relaxed { .. } => "relaxed",
        }
    }

    /// Every built-in kind is a cutter; relaxations keep the property for `λ <= 1`.
    pub fn is_cutter(&self) -> bool {
        match &self.compiled {
            Compiled::Relaxed(inner, lambda) => *lambda <= 1.0 && inner.is_cutter(),
            Compiled::Average(inner) => inner.is_cutter(),
            _ => true,
        }
    }

    /// Whether the operator is firmly nonexpansive by construction.
    ///
    /// Projections onto closed convex sets are. A subgradient projector is one
    /// only when it has a single piece, where it is a half-space projection.
    pub fn is_firmly_nonexpansive(&self) -> bool {
        match &self.compiled {
            Compiled::Subgradient { pieces } => pieces.len() == 1,
            Compiled::Average(inner) => inner.is_nonexpansive(),
            Compiled::Relaxed(inner, lambda) => *lambda <= 1.0 && inner.is_firmly_nonexpansive(),
            _ => true,
        }
    }

    fn is_nonexpansive(&self) -> bool {
        match &self.compiled {
            Compiled::Relaxed(inner, lambda) => *lambda <= 2.0 && inner.is_firmly_nonexpansive(),
            _ => self.is_firmly_nonexpansive(),
        }
    }

    /// Declared, not tested: every built-in operator is continuous, hence
    /// `Id - T` is demiclosed at zero.
    pub fn demiclosed_at_zero(&self) -> bool {
        true
    }

    pub fn apply(&self, x: &Point) -> Point {
        match &self.compiled {
            Compiled::Halfspace { a, b, norm2 } => {
                let excess = a.dot(x) - b;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - a * (excess / norm2)
                }
            }
            Compiled::Hyperplane { a, b, norm2 } => x - a * ((a.dot(x) - b) / norm2),
            Compiled::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center + offset * (radius / dist)
                }
            }
            Compiled::Box { lo, hi } => x.zip_zip_map(lo, hi, |v, l, h| v.clamp(l, h)),
            Compiled::Affine { a, d, pinv } => x - pinv * (a * x - d),
            Compiled::Subgradient { pieces } => {
                // the lowest index among maximizing pieces supplies the subgradient
                let (k, value) = pieces
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| (k, a.dot(x) - b))
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
                if value <= 0.0 {
                    x.clone()
                } else {
                    let g = &pieces[k].0;
                    x - g * (value / g.norm_squared())
                }
            }
            Compiled::Average(inner) => (x + inner.apply(x)) * 0.5,
            Compiled::Relaxed(inner, lambda) => x + (inner.apply(x) - x) * *lambda,
        }
    }

    /// `‖T(x) - x‖`.
    pub fn residual(&self, x: &Point) -> f64 {
        (self.apply(x) - x).norm()
    }

    /// Whether `x` is a fixed point within `tol` in the Euclidean norm.
    pub fn fix_oracle(&self, x: &Point, tol: f64) -> bool {
        self.residual(x) <= tol
    }

    /// `⟨T(x) - x, T(x) - z⟩ <= 0` for a fixed point `z`.
    pub fn cutter_check(&self, x: &Point, z: &Point) -> Result<bool, CfpError> {
        if !self.fix_oracle(z, FIX_TOL) {
            return Err(CfpError::NotFixed(self.residual(z)));
        }
        let tx = self.apply(x);
        Ok((&tx - x).dot(&(&tx - z)) <= INEQ_TOL)
    }
}

fn compile_affine(
    matrix: &[Vec<f64>],
    rhs: &[f64],
) -> Result<(DMatrix<f64>, Point, DMatrix<f64>), CfpError> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(CfpError::InvalidOperator("affine constraint matrix is empty".into()));
    }
    if let Some(bad) = matrix.iter().find(|r| r.len() != cols) {
        return Err(CfpError::DimensionMismatch { expected: cols, got: bad.len() });
    }
    if rhs.len() != rows {
        return Err(CfpError::DimensionMismatch { expected: rows, got: rhs.len() });
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
    if a.iter().any(|v| !v.is_finite()) {
        return Err(CfpError::InvalidOperator("affine matrix has a non-finite entry".into()));
    }
    let d = vector(rhs, "rhs")?;
    if a.rank(1e-10 * a.norm().max(1.0)) < rows {
        return Err(CfpError::InvalidOperator("affine matrix must have full row rank".into()));
    }
    // full row rank makes A Aᵀ invertible and Aᵀ (A Aᵀ)⁻¹ the pseudo-inverse
    let gram = &a * a.transpose();
    let chol = gram
        .cholesky()
        .ok_or_else(|| CfpError::InvalidOperator("affine matrix must have full row rank".into()))?;
    let pinv = a.transpose() * chol.inverse();
    Ok((a, d, pinv))
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), CfpError> {
    if (0.0..=2.0).contains(&lambda) {
        Ok(())
    } else {
        Err(CfpError::InvalidRelaxation(lambda))
    }
}

/// `x ↦ x + λ (T(x) - x)` for `λ ∈ [0, 2]`.
pub fn relax(op: &Operator, lambda: f64) -> Result<Operator, CfpError> {
    Operator::new(OperatorSpec::Relaxed {
        inner: Box::new(op.spec.clone()),
        lambda,
    })
}

/// `(Id + T) / 2`.
pub fn average(op: &Operator) -> Operator {
    Operator::new(OperatorSpec::FirmlyNonexpansiveAvg {
        inner: Box::new(op.spec.clone()),
    })
    .expect("inner operator is already valid")
}

/// `‖N(x) - N(y)‖² <= ⟨N(x) - N(y), x - y⟩` within [`INEQ_TOL`].
pub fn fne_check<M: SelfMap + ?Sized>(map: &M, x: &Point, y: &Point) -> bool {
    let diff = map.map(x) - map.map(y);
    diff.norm_squared() <= diff.dot(&(x - y)) + INEQ_TOL
}
