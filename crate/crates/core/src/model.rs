//! Problem definition for N-species Poisson--Nernst--Planck systems.

use crate::boundary::BoundarySpec;
use crate::error::Error;
use crate::grid::{check_same_grid, Field, Grid};
use crate::poisson;
use crate::scalar::Real;

/// One charged species: valence, diffusivity and initial concentration.
#[derive(Debug, Clone)]
pub struct SpeciesSpec<T> {
    pub name: String,
    /// Valence `z`.
    pub valence: T,
    /// Diffusion constant `D > 0`.
    pub diffusivity: T,
    /// Initial concentration, strictly positive everywhere.
    pub initial: Field<T>,
}

/// Full problem specification.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T> {
    pub grid: Grid<T>,
    pub species: Vec<SpeciesSpec<T>>,
    /// Permittivity `eps > 0`.
    pub permittivity: T,
    /// Constant background charge density `rho_0`.
    pub background_charge: T,
    /// External potential field (all zero when absent).
    pub external_potential: Field<T>,
    /// Conditions on the chemical potentials (zero-flux or periodic only).
    pub bc_mu: BoundarySpec<T>,
    /// Conditions on the internal potential.
    pub bc_phi: BoundarySpec<T>,
}

/// Solution snapshot: all species concentrations, the internal potential and
/// the time stamp. The potential satisfies the discrete Poisson equation for
/// the current concentrations to linear-solver tolerance.
#[derive(Debug, Clone)]
pub struct State<T> {
    pub c: Vec<Field<T>>,
    pub phi: Field<T>,
    pub t: T,
}

impl<T: Real> ProblemSpec<T> {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    /// Collects every violated invariant; an empty list means the
    /// specification is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.species.is_empty() {
            issues.push("species list is empty".into());
        }
        if !(self.permittivity > T::zero()) {
            issues.push("permittivity must be positive".into());
        }
        for (i, sp) in self.species.iter().enumerate() {
            if !(sp.diffusivity > T::zero()) {
                issues.push(format!(
                    "species {} ({}): diffusivity must be positive",
                    i, sp.name
                ));
            }
            if sp.initial.grid() != self.grid {
                issues.push(format!(
                    "species {} ({}): initial field lives on a different grid",
                    i, sp.name
                ));
                continue;
            }
            if !sp.initial.is_finite() {
                issues.push(format!(
                    "species {} ({}): initial field has non-finite entries",
                    i, sp.name
                ));
            } else if !(sp.initial.min() > T::zero()) {
                issues.push(format!(
                    "species {} ({}): initial concentration must be strictly positive \
                     (min {:e})",
                    i,
                    sp.name,
                    sp.initial.min().to_f64().unwrap_or(f64::NAN)
                ));
            }
        }
        if self.external_potential.grid() != self.grid {
            issues.push("external potential lives on a different grid".into());
        } else if !self.external_potential.is_finite() {
            issues.push("external potential has non-finite entries".into());
        }
        for msg in self.bc_mu.validate(&self.grid) {
            issues.push(format!("bc_mu: {msg}"));
        }
        for msg in self.bc_phi.validate(&self.grid) {
            issues.push(format!("bc_phi: {msg}"));
        }
        if !self.bc_mu.is_pure_flux() {
            issues.push("bc_mu: only zero-flux or periodic conditions are supported".into());
        }
        // electroneutrality is the compatibility condition of the potential
        // solve when nothing pins the potential
        if self.bc_phi.is_pure_flux() && self.species.iter().all(|sp| sp.initial.grid() == self.grid)
        {
            let mut charge_mean = self.background_charge;
            for sp in &self.species {
                charge_mean = charge_mean + sp.valence * sp.initial.mean();
            }
            if charge_mean.abs() >= T::of(1e-12) {
                issues.push(format!(
                    "electroneutrality violated: rho0 + sum_i z_i mean(c0_i) = {:e}",
                    charge_mean.to_f64().unwrap_or(f64::NAN)
                ));
            }
        }
        issues
    }

    /// Nodewise charge density `rho0 + sum_i z_i c_i` for given concentrations.
    pub fn charge_density_of(&self, concentrations: &[Field<T>]) -> Field<T> {
        assert_eq!(concentrations.len(), self.species.len());
        let mut out = Field::constant(self.grid, self.background_charge);
        for (sp, c) in self.species.iter().zip(concentrations) {
            out = out
                .zip_with(c, |acc, v| acc + sp.valence * v)
                .expect("fields share the problem grid");
        }
        out
    }

    /// Initial state: the given concentrations plus one Poisson solve for the
    /// starting potential (needed by the discrete energy at step zero).
    pub fn initial_state(&self) -> Result<State<T>, Error> {
        let issues = self.validate();
        if !issues.is_empty() {
            return Err(Error::InvalidSpec(issues));
        }
        let c: Vec<Field<T>> = self.species.iter().map(|sp| sp.initial.clone()).collect();
        let rhs = self.charge_density_of(&c);
        let phi = poisson::solve_poisson(&rhs, self.permittivity, &self.bc_phi)?;
        Ok(State {
            c,
            phi,
            t: T::zero(),
        })
    }
}

/// Nodewise charge density of a state.
pub fn charge_density<T: Real>(state: &State<T>, spec: &ProblemSpec<T>) -> Field<T> {
    spec.charge_density_of(&state.c)
}

/// Chemical potential `mu = log c + z (phi + phi_e)`.
///
/// Fails when any concentration is nonpositive; the Newton line search uses
/// this to reject candidates.
pub fn chemical_potential<T: Real>(
    c: &Field<T>,
    phi: &Field<T>,
    phi_e: &Field<T>,
    valence: T,
) -> Result<Field<T>, Error> {
    check_same_grid(c, phi)?;
    check_same_grid(c, phi_e)?;
    let min = c.min();
    if !(min > T::zero()) {
        return Err(Error::NonPositive {
            what: "concentration".into(),
            min: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    let grid = c.grid();
    let values = c
        .values()
        .iter()
        .zip(phi.values())
        .zip(phi_e.values())
        .map(|((&cv, &pv), &ev)| cv.ln() + valence * (pv + ev))
        .collect();
    Ok(Field::from_values_unchecked(grid, values))
}
