//! Random operators, fixed points and feasible instances for property checks.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AffinePiece, ControlSpec, Operator, OperatorSpec, Point, Problem, RelaxationSchedule, StopRule};

/// Every operator kind the library builds, by name.
pub const KINDS: [&str; 8] = [
    "halfspace",
    "hyperplane",
    "ball",
    "box",
    "affine",
    "subgradient_projector",
    "firmly_nonexpansive_avg",
    "relaxed",
];

fn coords<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// A uniformly distributed unit vector.
pub fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn point<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Point {
    DVector::from_vec(coords(rng, dim, scale))
}

/// A random operator of the named kind on ℝ^dim.
pub fn operator<R: Rng>(kind: &str, dim: usize, rng: &mut R) -> Operator {
    Operator::new(spec(kind, dim, rng)).expect("generated parameters are valid")
}

fn spec<R: Rng>(kind: &str, dim: usize, rng: &mut R) -> OperatorSpec {
    match kind {
        "halfspace" => OperatorSpec::Halfspace { a: unit_vector(rng, dim), b: rng.gen_range(-1.0..1.0) },
        "hyperplane" => OperatorSpec::Hyperplane { a: unit_vector(rng, dim), b: rng.gen_range(-1.0..1.0) },
        "ball" => OperatorSpec::Ball { center: coords(rng, dim, 1.0), radius: rng.gen_range(0.1..2.0) },
        "box" => {
            let lo = coords(rng, dim, 1.0);
            let hi = lo.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
            OperatorSpec::Box { lo, hi }
        }
        "affine" => {
            let rows = rng.gen_range(1..dim.max(2));
            let rows = rows.min(dim);
            OperatorSpec::Affine {
                matrix: (0..rows).map(|_| unit_vector(rng, dim)).collect(),
                rhs: coords(rng, rows, 1.0),
            }
        }
        "subgradient_projector" => {
            // pieces ⟨a_k, u⟩ - b_k with b_k > 0 keep the origin strictly feasible
            let count = rng.gen_range(2..=4);
            OperatorSpec::SubgradientProjector {
                pieces: (0..count)
                    .map(|_| AffinePiece {
                        a: coords(rng, dim, 1.0).into_iter().map(|v| v + 0.05f64.copysign(v)).collect(),
                        b: rng.gen_range(0.2..1.0),
                    })
                    .collect(),
            }
        }
        "firmly_nonexpansive_avg" => {
            let inner = ["halfspace", "ball", "box", "hyperplane"].choose(rng).expect("nonempty");
            OperatorSpec::FirmlyNonexpansiveAvg { inner: Box::new(spec(inner, dim, rng)) }
        }
        "relaxed" => {
            let inner = ["halfspace", "ball", "box", "subgradient_projector"].choose(rng).expect("nonempty");
            OperatorSpec::Relaxed {
                inner: Box::new(spec(inner, dim, rng)),
                lambda: rng.gen_range(0.0..=1.0),
            }
        }
        other => panic!("unknown operator kind {other}"),
    }
}

/// A fixed point of `op`, on the boundary of its fixed set about half the time.
pub fn fixed_point<R: Rng>(op: &Operator, rng: &mut R) -> Point {
    match op.spec() {
        OperatorSpec::SubgradientProjector { .. } => {
            // the fixed set is a polyhedron around the origin: shrink toward it
            let mut z = point(rng, op.dim(), 3.0);
            while !op.fix_oracle(&z, 0.0) {
                z *= 0.5;
            }
            z
        }
        OperatorSpec::FirmlyNonexpansiveAvg { inner } | OperatorSpec::Relaxed { inner, .. } => {
            let inner = Operator::new((**inner).clone()).expect("inner spec already validated");
            fixed_point(&inner, rng)
        }
        _ => {
            let w = point(rng, op.dim(), 3.0);
            if rng.gen_bool(0.5) {
                op.apply(&w)
            } else {
                // pull an outside point onto the fixed set, or keep an inside one
                let z = op.apply(&w);
                if op.fix_oracle(&w, 0.0) { w } else { z }
            }
        }
    }
}

/// `m` half-spaces in ℝ^dim that all contain the ball of radius `radius`
/// around a random center, returned with that center.
pub fn feasible_halfspaces<R: Rng>(rng: &mut R, dim: usize, m: usize, radius: f64) -> (Vec<OperatorSpec>, Point) {
    let center = point(rng, dim, 1.0);
    let ops = (0..m)
        .map(|_| {
            let a = unit_vector(rng, dim);
            let reach: f64 = a.iter().zip(center.iter()).map(|(x, y)| x * y).sum();
            OperatorSpec::Halfspace { a, b: reach + radius + rng.gen_range(0.0..0.5) }
        })
        .collect();
    (ops, center)
}

/// A pattern containing each of `1..=m` once plus up to `m` extra entries,
/// so its window constant is at most `2m`.
pub fn almost_cyclic_pattern<R: Rng>(rng: &mut R, m: usize) -> Vec<usize> {
    let mut pattern: Vec<usize> = (1..=m).collect();
    pattern.shuffle(rng);
    for _ in 0..rng.gen_range(0..=m) {
        let at = rng.gen_range(0..=pattern.len());
        pattern.insert(at, rng.gen_range(1..=m));
    }
    pattern
}

/// A feasible half-space problem with a random almost-cyclic control and `λ ≡ 1`.
pub fn feasible_problem<R: Rng>(rng: &mut R, dim: usize, m: usize, radius: f64, stop: StopRule) -> (Problem, Point) {
    let (operators, center) = feasible_halfspaces(rng, dim, m, radius);
    let x0 = coords(rng, dim, 10.0);
    let problem = Problem {
        dim,
        operators,
        control: ControlSpec::AlmostCyclic { pattern: almost_cyclic_pattern(rng, m) },
        relaxation: RelaxationSchedule::Constant { value: 1.0 },
        x0,
        stop,
    };
    (problem, center)
}
