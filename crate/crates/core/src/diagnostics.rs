//! Observable quantities and invariant monitors: masses, discrete free
//! energy, electrostatic energies, extrema and the dissipation ledger.

use crate::error::Error;
use crate::grid::{inner, Field};
use crate::model::{chemical_potential, ProblemSpec, State};
use crate::ops;
use crate::scalar::{kahan_sum, Real};

/// Discrete mass `hx*hy * sum_jk c_jk`.
pub fn total_mass<T: Real>(c: &Field<T>) -> T {
    c.grid().cell_area() * c.sum()
}

/// Nodewise minimum and maximum.
pub fn extrema<T: Real>(c: &Field<T>) -> (T, T) {
    (c.min(), c.max())
}

/// Discrete free energy
/// `sum_i [c_i (log c_i - 1), 1] + [rho0 + sum_i z_i c_i, phi/2 + phi_e]`
/// with the cell-area weight in both inner products.
pub fn discrete_energy<T: Real>(state: &State<T>, spec: &ProblemSpec<T>) -> Result<T, Error> {
    let area = spec.grid.cell_area();
    let mut total = T::zero();
    for (i, c) in state.c.iter().enumerate() {
        let min = c.min();
        if !(min > T::zero()) {
            return Err(Error::NonPositive {
                what: format!("concentration of species {i}"),
                min: min.to_f64().unwrap_or(f64::NAN),
            });
        }
        let entropy = kahan_sum(c.values().iter().map(|&v| v * (v.ln() - T::one())));
        total = total + area * entropy;
    }
    let rho = spec.charge_density_of(&state.c);
    let half_phi_plus_ext = state
        .phi
        .zip_with(&spec.external_potential, |p, e| T::of(0.5) * p + e)?;
    Ok(total + inner(&rho, &half_phi_plus_ext)?)
}

/// Nonnegative dissipation functional of the energy law: the mobility-
/// weighted face sum of squared chemical-potential differences,
/// `sum_i D_i hx*hy sum_faces (m_i)_face (d mu_i)^2 / h^2`.
///
/// The energy inequality of the first-order scheme reads
/// `E^{n+1} - E^n <= -dt * value` with `mobility = c^n` and `mu` evaluated at
/// the new state.
pub fn dissipation_functional<T: Real>(
    state_next: &State<T>,
    mobility: &[Field<T>],
    spec: &ProblemSpec<T>,
) -> Result<T, Error> {
    assert_eq!(mobility.len(), spec.n_species());
    let mut total = T::zero();
    for (i, sp) in spec.species.iter().enumerate() {
        let mu = chemical_potential(
            &state_next.c[i],
            &state_next.phi,
            &spec.external_potential,
            sp.valence,
        )?;
        total = total + ops::dissipation_form(&mobility[i], &mu, &spec.bc_mu, sp.diffusivity)?;
    }
    Ok(total)
}

/// Electrostatic energy in gradient form, `1/2 int eps |grad phi|^2` over the
/// internal potential with its boundary conditions.
pub fn electrostatic_energy_gradient_form<T: Real>(state: &State<T>, spec: &ProblemSpec<T>) -> T {
    ops::electrostatic_gradient_energy(&state.phi, spec.permittivity, &spec.bc_phi)
}

/// Electrostatic energy in charge-potential form,
/// `[phi + phi_e, rho0 + sum_i z_i c_i]` (no 1/2 factor; this is the
/// boundary-driven examples' monitor).
pub fn electrostatic_energy_charge_form<T: Real>(
    state: &State<T>,
    spec: &ProblemSpec<T>,
) -> Result<T, Error> {
    let rho = spec.charge_density_of(&state.c);
    let phi_total = state.phi.zip_with(&spec.external_potential, |p, e| p + e)?;
    inner(&phi_total, &rho)
}

/// Per-step diagnostics row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub step: usize,
    pub t: T,
    /// Per-species discrete mass.
    pub mass: Vec<T>,
    /// Discrete free energy at the new state.
    pub energy: T,
    /// Gradient-form electrostatic energy.
    pub electro_grad: T,
    /// Charge-potential electrostatic energy.
    pub electro_charge: T,
    /// Per-species nodal minima.
    pub min: Vec<T>,
    /// Per-species nodal maxima.
    pub max: Vec<T>,
    pub newton_iters: usize,
    pub gmres_max: usize,
    pub halvings: usize,
    /// `(E^{n+1} - E^n) + dt * dissipation_functional`; nonpositive (up to
    /// solver tolerance) for the first-order scheme.
    pub dissipation_slack: T,
}

impl<T: Real> StepReport<T> {
    /// Fixed CSV header for `n_species` species.
    pub fn csv_header(n_species: usize) -> String {
        let mut cols = vec!["step".to_string(), "t".to_string()];
        cols.extend((1..=n_species).map(|i| format!("mass_{i}")));
        cols.push("energy".into());
        cols.push("electro_grad".into());
        cols.push("electro_charge".into());
        cols.extend((1..=n_species).map(|i| format!("min_{i}")));
        cols.extend((1..=n_species).map(|i| format!("max_{i}")));
        cols.push("newton_iters".into());
        cols.push("gmres_max".into());
        cols.push("halvings".into());
        cols.push("dissipation_slack".into());
        cols.join(",")
    }

    /// One CSV row; floats use 17 significant digits so values round-trip.
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.step.to_string(), fmt_float(self.t)];
        cols.extend(self.mass.iter().map(|&v| fmt_float(v)));
        cols.push(fmt_float(self.energy));
        cols.push(fmt_float(self.electro_grad));
        cols.push(fmt_float(self.electro_charge));
        cols.extend(self.min.iter().map(|&v| fmt_float(v)));
        cols.extend(self.max.iter().map(|&v| fmt_float(v)));
        cols.push(self.newton_iters.to_string());
        cols.push(self.gmres_max.to_string());
        cols.push(self.halvings.to_string());
        cols.push(fmt_float(self.dissipation_slack));
        cols.join(",")
    }
}

/// Decimal float formatting with 17 significant digits.
pub fn fmt_float<T: Real>(v: T) -> String {
    format!("{v:.16e}")
}
