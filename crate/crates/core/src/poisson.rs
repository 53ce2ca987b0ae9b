//! Linear solves of the discrete Poisson problem `-div(eps grad phi) = rho`.
//!
//! The assembled operator is symmetric positive (semi-)definite, so the
//! solves use conjugate gradient with the same incomplete-factorization
//! preconditioner as the nonlinear module (Jacobi fallback on pivot
//! breakdown). Pure-flux problems are singular with constant kernel; they are
//! handled by deflation, projecting the right-hand side and every iterate
//! onto the mean-zero subspace rather than pinning a node.

use log::warn;

use crate::boundary::BoundarySpec;
use crate::error::Error;
use crate::grid::{inner, norm_l2, Field, Grid};
use crate::ops;
use crate::scalar::Real;
use crate::sparse::{ilu0, pcg, CsrMatrix, JacobiPreconditioner, Preconditioner};

const REL_TOL: f64 = 1e-10;
const ABS_FLOOR: f64 = 1e-14;

enum EitherPreconditioner<T> {
    Ilu(crate::sparse::Ilu0<T>),
    Jacobi(JacobiPreconditioner<T>),
}

impl<T: Real> Preconditioner<T> for EitherPreconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        match self {
            EitherPreconditioner::Ilu(m) => m.apply(r, z),
            EitherPreconditioner::Jacobi(m) => m.apply(r, z),
        }
    }
}

pub(crate) fn factorize_or_jacobi<T: Real>(a: &CsrMatrix<T>) -> Result<impl Preconditioner<T>, Error> {
    match ilu0(a) {
        Ok(m) => Ok(EitherPreconditioner::Ilu(m)),
        Err(Error::ZeroPivot { row }) => {
            warn!("ILU(0) hit a zero pivot in row {row}; falling back to Jacobi");
            Ok(EitherPreconditioner::Jacobi(JacobiPreconditioner::new(a)?))
        }
        Err(e) => Err(e),
    }
}

/// Solves `-div(eps grad phi) = rhs` under the given boundary conditions.
///
/// The returned potential satisfies the residual contract
/// `||neg_div_eps_grad(phi) - rhs||_2 <= 1e-10 ||rhs||_2` (absolute floor
/// `1e-14`); for pure-flux conditions it additionally has zero mean.
pub fn solve_poisson<T: Real>(
    rhs: &Field<T>,
    eps: T,
    bc: &BoundarySpec<T>,
) -> Result<Field<T>, Error> {
    let grid = rhs.grid();
    let singular = bc.is_pure_flux();
    if singular {
        // compatibility: the rhs must be (numerically) mean free
        let imbalance = inner(rhs, &Field::constant(grid, T::one()))?;
        let scale = norm_l2(rhs) + T::one();
        if imbalance.abs() > T::of(1e-10) * scale {
            return Err(Error::IncompatibleRhs {
                imbalance: imbalance.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let (a, offset) = ops::assemble_neg_div_eps_grad(&grid, eps, bc);
    let b: Vec<T> = rhs
        .values()
        .iter()
        .zip(&offset)
        .map(|(&r, &o)| r - o)
        .collect();
    let m = factorize_or_jacobi(&a)?;
    let x = pcg(
        &a,
        &b,
        &m,
        T::of(REL_TOL),
        T::of(ABS_FLOOR),
        20 * grid.n_cells().max(100),
        singular,
    )?;
    let mut phi = Field::from_values(grid, x)?;
    if singular {
        // mean-zero normalization of the returned representative
        let mean = phi.mean();
        phi = phi.map(|v| v - mean);
    }
    Ok(phi)
}

/// External potential of the boundary-driven examples: solves the Laplace
/// problem `-div(eps grad phi) = 0` with the given (at least partly
/// Dirichlet) boundary data.
pub fn external_potential<T: Real>(
    bc_values: &BoundarySpec<T>,
    eps: T,
    grid: Grid<T>,
) -> Result<Field<T>, Error> {
    if !bc_values.has_dirichlet() {
        return Err(Error::NonUniquePotential);
    }
    let zero = Field::constant(grid, T::zero());
    solve_poisson(&zero, eps, bc_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{BcKind, BoundarySpec, BoundaryValue, EdgeSpec};
    use crate::ops::neg_div_eps_grad;
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_with_zero_flux_returns_zero() {
        let grid = Grid::square(8, 1.0).unwrap();
        let rhs = Field::constant(grid, 0.0);
        let phi = solve_poisson(&rhs, 1.0, &BoundarySpec::zero_flux()).unwrap();
        assert!(phi.values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn periodic_cosine_matches_analytic_solution_at_second_order() {
        let mut errors = Vec::new();
        for n in [16, 32] {
            let grid = Grid::square(n, 2.0 * PI).unwrap();
            let rhs = Field::from_fn(grid, |x, _| x.cos());
            let phi = solve_poisson(&rhs, 1.0, &BoundarySpec::periodic()).unwrap();
            let exact = Field::from_fn(grid, |x, _| x.cos());
            errors.push(phi.max_abs_diff(&exact).unwrap());
            // mean-zero representative
            assert!(inner(&phi, &Field::constant(grid, 1.0)).unwrap().abs() < 1e-12);
            // residual contract
            let back = neg_div_eps_grad(&phi, 1.0, &BoundarySpec::periodic()).unwrap();
            let diff: f64 = back
                .values()
                .iter()
                .zip(rhs.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let rhs_norm: f64 = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(diff <= 1e-9 * rhs_norm);
        }
        let order = (errors[0] / errors[1]).log2();
        assert!((1.8..2.2).contains(&order), "order {order}");
    }

    #[test]
    fn manufactured_dirichlet_solution_refines_at_second_order() {
        let mut errors = Vec::new();
        for n in [8, 16, 32] {
            let grid = Grid::square(n, 1.0).unwrap();
            let rhs = Field::from_fn(grid, |x, y| {
                2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()
            });
            let phi = solve_poisson(&rhs, 1.0, &BoundarySpec::dirichlet(0.0)).unwrap();
            let exact = Field::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin());
            let diff = phi.zip_with(&exact, |a, b| a - b).unwrap();
            errors.push(norm_l2(&diff));
        }
        let o1 = (errors[0] / errors[1]).log2();
        let o2 = (errors[1] / errors[2]).log2();
        assert!((1.9..2.1).contains(&o1), "orders {o1} {o2}");
        assert!((1.9..2.1).contains(&o2), "orders {o1} {o2}");
    }

    #[test]
    fn solve_is_linear_in_the_rhs() {
        let grid = Grid::square(12, 1.0).unwrap();
        let rhs = Field::from_fn(grid, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let bc = BoundarySpec::dirichlet(0.0);
        let phi1 = solve_poisson(&rhs, 1.0, &bc).unwrap();
        let phi3 = solve_poisson(&rhs.scale(3.0), 1.0, &bc).unwrap();
        assert!(phi3.max_abs_diff(&phi1.scale(3.0)).unwrap() < 1e-9);
    }

    #[test]
    fn incompatible_rhs_is_rejected() {
        let grid = Grid::square(8, 1.0).unwrap();
        let rhs = Field::constant(grid, 1.0);
        assert!(matches!(
            solve_poisson(&rhs, 1.0, &BoundarySpec::zero_flux()),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn assembled_dirichlet_operator_is_symmetric_positive_definite() {
        let grid = Grid::square(8, 1.0).unwrap();
        let (a, _) = ops::assemble_neg_div_eps_grad(&grid, 1.0, &BoundarySpec::dirichlet(0.0));
        let dense = a.to_dense();
        let n = a.n();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dense[i][j], dense[j][i], "asymmetry at ({i},{j})");
            }
        }
        // positive definiteness through the quadratic form on a spread of vectors
        for seed in 0..5u64 {
            let x: Vec<f64> = (0..n)
                .map(|i| ((i as f64 + 1.3) * (seed as f64 + 0.7)).sin())
                .collect();
            let mut y = vec![0.0; n];
            a.matvec(&x, &mut y);
            let quad: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(quad > 0.0);
        }
    }

    #[test]
    fn external_potential_requires_dirichlet_data() {
        let grid = Grid::square(8, 1.0).unwrap();
        assert!(matches!(
            external_potential(&BoundarySpec::zero_flux(), 1.0, grid),
            Err(Error::NonUniquePotential)
        ));
    }

    #[test]
    fn constant_dirichlet_data_gives_constant_external_potential() {
        let grid = Grid::square(8, 1.0).unwrap();
        let phi = external_potential(&BoundarySpec::dirichlet(0.7), 1.0, grid).unwrap();
        assert!(phi.values().iter().all(|v| (v - 0.7).abs() < 1e-9));
    }

    #[test]
    fn mixed_segment_laplace_solution_respects_maximum_principle() {
        // constant Dirichlet data -A on left/right middle segments, +A on
        // bottom/top middle segments, zero-flux elsewhere
        let a = 1.0;
        let grid = Grid::square(16, 1.0).unwrap();
        let seg = |v: f64| {
            EdgeSpec::Segments(vec![
                crate::boundary::Segment {
                    start: 0.0,
                    end: 0.25,
                    kind: BcKind::ZeroFlux,
                },
                crate::boundary::Segment {
                    start: 0.25,
                    end: 0.75,
                    kind: BcKind::Dirichlet(BoundaryValue::Constant(v)),
                },
                crate::boundary::Segment {
                    start: 0.75,
                    end: 1.0,
                    kind: BcKind::ZeroFlux,
                },
            ])
        };
        let bc = BoundarySpec::new(seg(-a), seg(-a), seg(a), seg(a));
        let phi = external_potential(&bc, 0.01, grid).unwrap();
        assert!(phi.min() >= -a - 1e-9);
        assert!(phi.max() <= a + 1e-9);
        // the field is genuinely nonconstant
        assert!(phi.max() - phi.min() > 0.5);
    }
}
