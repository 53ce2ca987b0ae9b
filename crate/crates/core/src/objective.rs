//! Independent small-grid oracle: the strictly convex functional whose
//! constrained minimizer is the implicit step's solution.
//!
//! For the step residual `tau (c_i - c_i*) = div(D_i m_i grad mu_i)` the
//! functional reads
//!
//! ```text
//! F[c] = tau/2 sum_i (c_i - c_i*)^t B A_i^* B (c_i - c_i*)
//!        + sum_i c_i^t B (log c_i - 1)
//!        + 1/2 rho(c)^t B A^* B rho(c) + rho(c)^t B phi_e
//! ```
//!
//! with `B = hx*hy*I`, `A_i` the mobility-weighted stiffness matrix, `A` the
//! potential stiffness matrix, `rho` the charge density, and `*` the
//! pseudo-inverse obtained from a dense symmetric eigendecomposition
//! (eigenvalues below `1e-12 * lambda_max` are zeroed). Minimization is over
//! the affine space fixing each species' discrete mass. Everything is dense
//! and independent of the sparse Newton/GMRES path it cross-checks, so the
//! size is capped.

use crate::error::Error;
use crate::grid::{Field, Grid};
use crate::nonlinear::NonlinearSystem;
use crate::ops;
use crate::scalar::{kahan_sum, Real};

/// Hard cap on `(N + 1) * nx * ny` for the dense path.
pub const MAX_UNKNOWNS: usize = 4096;

/// Dense symmetric pseudo-inverse in factored form `V diag(w) V^t`.
struct PseudoInverse<T> {
    n: usize,
    /// Eigenvectors, column-major: `vecs[c * n + r]` is component `r` of
    /// eigenvector `c`.
    vecs: Vec<T>,
    /// Inverted eigenvalues, zeroed below the cutoff.
    inv_eigs: Vec<T>,
}

impl<T: Real> PseudoInverse<T> {
    fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.n;
        let mut coeffs = vec![T::zero(); n];
        for c in 0..n {
            let col = &self.vecs[c * n..(c + 1) * n];
            let dot = col
                .iter()
                .zip(x)
                .map(|(&a, &b)| a * b)
                .fold(T::zero(), |s, v| s + v);
            coeffs[c] = dot * self.inv_eigs[c];
        }
        let mut out = vec![T::zero(); n];
        for c in 0..n {
            let w = coeffs[c];
            if w == T::zero() {
                continue;
            }
            let col = &self.vecs[c * n..(c + 1) * n];
            for (o, &v) in out.iter_mut().zip(col) {
                *o = *o + w * v;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix.
/// Returns eigenvalues and column-major eigenvectors.
fn jacobi_eigh<T: Real>(mut a: Vec<Vec<T>>) -> (Vec<T>, Vec<T>) {
    let n = a.len();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let frob = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|&x| x * x)
        .fold(T::zero(), |s, x| s + x)
        .sqrt();
    let tol = T::epsilon() * frob.max(T::min_positive_value());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= tol * T::of(1e-3) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p][i];
                    let aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[p * n + i];
                    let viq = v[q * n + i];
                    v[p * n + i] = c * vip - s * viq;
                    v[q * n + i] = s * vip + c * viq;
                }
            }
        }
    }
    let eigs: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    (eigs, v)
}

fn pseudo_inverse_of_operator<T: Real>(
    n: usize,
    apply: impl Fn(&[T]) -> Vec<T>,
) -> PseudoInverse<T> {
    // densify by columns; the operators are symmetric
    let mut dense = vec![vec![T::zero(); n]; n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = apply(&e);
        for i in 0..n {
            dense[i][j] = col[i];
        }
        e[j] = T::zero();
    }
    // symmetrize round-off before the eigensolve
    for i in 0..n {
        for j in i + 1..n {
            let avg = T::of(0.5) * (dense[i][j] + dense[j][i]);
            dense[i][j] = avg;
            dense[j][i] = avg;
        }
    }
    let (eigs, vecs) = jacobi_eigh(dense);
    let max_eig = eigs.iter().map(|e| e.abs()).fold(T::zero(), T::max);
    let cutoff = T::of(1e-12) * max_eig;
    let inv_eigs = eigs
        .iter()
        .map(|&e| if e.abs() <= cutoff { T::zero() } else { e.recip() })
        .collect();
    PseudoInverse {
        n,
        vecs,
        inv_eigs,
    }
}

/// Dense evaluation of the step functional and its constrained minimization.
pub struct ObjectiveOracle<'a, T: Real> {
    sys: &'a NonlinearSystem<'a, T>,
    grid: Grid<T>,
    /// Mass-constraint targets `c_i*`.
    targets: Vec<Field<T>>,
    /// Pseudo-inverses of `B S_i` (mobility-weighted stiffness).
    species_pinv: Vec<PseudoInverse<T>>,
    /// Pseudo-inverse of `B P` (potential stiffness).
    poisson_pinv: PseudoInverse<T>,
}

impl<'a, T: Real> ObjectiveOracle<'a, T> {
    pub fn new(sys: &'a NonlinearSystem<'a, T>) -> Result<Self, Error> {
        if sys.unknowns() > MAX_UNKNOWNS {
            return Err(Error::TooLarge {
                unknowns: sys.unknowns(),
                limit: MAX_UNKNOWNS,
            });
        }
        let spec = sys.spec();
        let grid = spec.grid;
        let n = grid.n_cells();
        let area = grid.cell_area();
        let targets = sys.mass_targets();
        let species_pinv = spec
            .species
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                let mobility = &sys.mobility()[i];
                pseudo_inverse_of_operator(n, |x| {
                    let xf = Field::from_values_unchecked(grid, x.to_vec());
                    let lx = ops::div_c_grad(mobility, &xf, &spec.bc_mu, sp.diffusivity)
                        .expect("flux bc admits no pinned segments");
                    lx.values().iter().map(|&v| -v * area).collect()
                })
            })
            .collect();
        let poisson_pinv = pseudo_inverse_of_operator(n, |x| {
            let xf = Field::from_values_unchecked(grid, x.to_vec());
            let px = ops::neg_div_eps_grad(&xf, spec.permittivity, &spec.bc_phi)
                .expect("finite input");
            px.values().iter().map(|&v| v * area).collect()
        });
        Ok(Self {
            sys,
            grid,
            targets,
            species_pinv,
            poisson_pinv,
        })
    }

    fn check_candidate(&self, candidate: &[Field<T>]) -> Result<(), Error> {
        let spec = self.sys.spec();
        assert_eq!(candidate.len(), spec.n_species(), "species count mismatch");
        for (i, c) in candidate.iter().enumerate() {
            let min = c.min();
            if !(min > T::zero()) {
                return Err(Error::NonPositive {
                    what: format!("candidate concentration of species {i}"),
                    min: min.to_f64().unwrap_or(f64::NAN),
                });
            }
            let drift = (c.sum() - self.targets[i].sum()) * self.grid.cell_area();
            let scale = (self.targets[i].sum() * self.grid.cell_area())
                .abs()
                .max(T::one());
            if drift.abs() > T::of(1e-8) * scale {
                return Err(Error::MassConstraint {
                    species: i,
                    drift: drift.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Value of the functional at a positive, mass-feasible candidate.
    pub fn value(&self, candidate: &[Field<T>]) -> Result<T, Error> {
        self.check_candidate(candidate)?;
        Ok(self.value_unchecked(candidate))
    }

    fn value_unchecked(&self, candidate: &[Field<T>]) -> T {
        let spec = self.sys.spec();
        let area = self.grid.cell_area();
        let n = self.grid.n_cells();
        let tau = self.sys.tau();
        let mut total = T::zero();
        for (i, c) in candidate.iter().enumerate() {
            // Wasserstein displacement term
            let u: Vec<T> = c
                .values()
                .iter()
                .zip(self.targets[i].values())
                .map(|(&a, &b)| area * (a - b))
                .collect();
            let w = self.species_pinv[i].apply(&u);
            let quad = kahan_sum(u.iter().zip(&w).map(|(&a, &b)| a * b));
            total = total + T::of(0.5) * tau * quad;
            // entropy term
            let entropy = kahan_sum(c.values().iter().map(|&v| v * (v.ln() - T::one())));
            total = total + area * entropy;
        }
        // electrostatic terms through the charge density
        let rho = spec.charge_density_of(candidate);
        let v: Vec<T> = rho.values().iter().map(|&r| area * r).collect();
        let w = self.poisson_pinv.apply(&v);
        let coulomb = kahan_sum(v.iter().zip(&w).map(|(&a, &b)| a * b));
        total = total + T::of(0.5) * coulomb;
        let external = kahan_sum(
            (0..n).map(|p| rho.values()[p] * spec.external_potential.values()[p]),
        );
        total + area * external
    }

    /// Gradient of the functional with each species block projected onto the
    /// mass-preserving (zero-mean) subspace.
    fn projected_gradient(&self, candidate: &[Field<T>]) -> Vec<Vec<T>> {
        let spec = self.sys.spec();
        let area = self.grid.cell_area();
        let n = self.grid.n_cells();
        let tau = self.sys.tau();
        let rho = spec.charge_density_of(candidate);
        let v: Vec<T> = rho.values().iter().map(|&r| area * r).collect();
        let phi_like = self.poisson_pinv.apply(&v);
        let mut grads = Vec::with_capacity(candidate.len());
        for (i, c) in candidate.iter().enumerate() {
            let u: Vec<T> = c
                .values()
                .iter()
                .zip(self.targets[i].values())
                .map(|(&a, &b)| area * (a - b))
                .collect();
            let w = self.species_pinv[i].apply(&u);
            let z = spec.species[i].valence;
            let mut g: Vec<T> = (0..n)
                .map(|p| {
                    area * (tau * w[p]
                        + c.values()[p].ln()
                        + z * phi_like[p]
                        + z * spec.external_potential.values()[p])
                })
                .collect();
            let mean = kahan_sum(g.iter().copied()) / T::from_usize(n).unwrap();
            for gv in g.iter_mut() {
                *gv = *gv - mean;
            }
            grads.push(g);
        }
        grads
    }

    /// Projected gradient descent with halving line search.
    ///
    /// Returns the minimizer over the positive, mass-constrained candidates,
    /// together with the iterations used.
    pub fn minimize(
        &self,
        start: &[Field<T>],
        max_iters: usize,
        grad_tol: T,
    ) -> Result<(Vec<Field<T>>, usize), Error> {
        self.check_candidate(start)?;
        let mut current: Vec<Field<T>> = start.to_vec();
        let mut value = self.value_unchecked(&current);
        let mut step = T::one();
        for iter in 0..max_iters {
            let grads = self.projected_gradient(&current);
            let gmax = grads
                .iter()
                .flat_map(|g| g.iter())
                .map(|v| v.abs())
                .fold(T::zero(), T::max);
            if gmax <= grad_tol {
                return Ok((current, iter));
            }
            let mut accepted = false;
            for _ in 0..80 {
                let candidate: Vec<Field<T>> = current
                    .iter()
                    .zip(&grads)
                    .map(|(c, g)| {
                        let vals = c
                            .values()
                            .iter()
                            .zip(g)
                            .map(|(&cv, &gv)| cv - step * gv)
                            .collect();
                        Field::from_values_unchecked(self.grid, vals)
                    })
                    .collect();
                if candidate.iter().all(|c| c.min() > T::zero()) {
                    let cand_value = self.value_unchecked(&candidate);
                    if cand_value < value {
                        current = candidate;
                        value = cand_value;
                        accepted = true;
                        break;
                    }
                }
                step = step * T::of(0.5);
            }
            if !accepted {
                // no descent direction at working precision
                return Ok((current, iter));
            }
            step = (step * T::of(2.0)).min(T::of(1e6));
        }
        Ok((current, max_iters))
    }
}
