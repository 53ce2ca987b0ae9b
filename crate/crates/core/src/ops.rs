//! Discrete differential operators on cell-centered grids.
//!
//! The flux operator accumulates face fluxes antisymmetrically, which makes
//! summation by parts (and hence discrete mass conservation) hold to
//! round-off. Ghost cells implement the boundary rules: zero-flux ghosts
//! mirror the interior value, Dirichlet ghosts use the midpoint rule
//! `u|edge = (ghost + interior) / 2`, Robin ghosts solve the homogeneous
//! Robin relation on the face.

use crate::boundary::{BcKind, BoundarySpec, Edge};
use crate::error::Error;
use crate::grid::{check_same_grid, Field, Grid};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Visits every active flux face as `(p, q, 1/h^2)` for the axis of the face:
/// all interior faces plus the wrap-around faces of periodic directions.
pub(crate) fn for_each_flux_face<T: Real>(
    grid: &Grid<T>,
    bc: &BoundarySpec<T>,
    mut f: impl FnMut(usize, usize, T),
) {
    let nx = grid.nx();
    let ny = grid.ny();
    let ih2x = (grid.hx() * grid.hx()).recip();
    let ih2y = (grid.hy() * grid.hy()).recip();
    for k in 0..ny {
        for j in 0..nx - 1 {
            f(grid.idx(j, k), grid.idx(j + 1, k), ih2x);
        }
    }
    if bc.is_periodic_x() {
        for k in 0..ny {
            f(grid.idx(nx - 1, k), grid.idx(0, k), ih2x);
        }
    }
    for k in 0..ny - 1 {
        for j in 0..nx {
            f(grid.idx(j, k), grid.idx(j, k + 1), ih2y);
        }
    }
    if bc.is_periodic_y() {
        for j in 0..nx {
            f(grid.idx(j, ny - 1), grid.idx(j, 0), ih2y);
        }
    }
}

/// Visits every boundary face of a non-periodic edge as
/// `(p, edge, s, h, 1/h^2, kind)`, with `s` the along-edge coordinate of the
/// face midpoint and `h` the spacing normal to the edge.
pub(crate) fn for_each_boundary_face<T: Real>(
    grid: &Grid<T>,
    bc: &BoundarySpec<T>,
    mut f: impl FnMut(usize, Edge, T, T, T, BcKind<T>),
) {
    let nx = grid.nx();
    let ny = grid.ny();
    let hx = grid.hx();
    let hy = grid.hy();
    let ih2x = (hx * hx).recip();
    let ih2y = (hy * hy).recip();
    if !bc.is_periodic_x() {
        for k in 0..ny {
            let s = grid.node_y(k);
            f(grid.idx(0, k), Edge::Left, s, hx, ih2x, bc.kind_at(Edge::Left, s));
            f(
                grid.idx(nx - 1, k),
                Edge::Right,
                s,
                hx,
                ih2x,
                bc.kind_at(Edge::Right, s),
            );
        }
    }
    if !bc.is_periodic_y() {
        for j in 0..nx {
            let s = grid.node_x(j);
            f(grid.idx(j, 0), Edge::Bottom, s, hy, ih2y, bc.kind_at(Edge::Bottom, s));
            f(
                grid.idx(j, ny - 1),
                Edge::Top,
                s,
                hy,
                ih2y,
                bc.kind_at(Edge::Top, s),
            );
        }
    }
}

fn reject_pinned_mu<T: Real>(bc: &BoundarySpec<T>) -> Result<(), Error> {
    if !bc.is_pure_flux() {
        return Err(Error::UnsupportedBc(
            "chemical potentials admit only zero-flux or periodic conditions".into(),
        ));
    }
    Ok(())
}

/// Discrete `D * div(c grad mu)` with arithmetic-mean face coefficients.
///
/// `cface_source` supplies the mobility (`c^n` for the first-order scheme,
/// the positive extrapolation for the second-order one) and must be strictly
/// positive. Zero-flux faces are omitted, which is exactly the ghost rule
/// `mu_ghost = mu_interior`; periodic directions wrap around.
pub fn div_c_grad<T: Real>(
    cface_source: &Field<T>,
    mu: &Field<T>,
    bc: &BoundarySpec<T>,
    diffusivity: T,
) -> Result<Field<T>, Error> {
    check_same_grid(cface_source, mu)?;
    reject_pinned_mu(bc)?;
    debug_assert!(
        cface_source.min() > T::zero(),
        "face coefficient source must be positive"
    );
    let grid = mu.grid();
    let c = cface_source.values();
    let u = mu.values();
    let half = T::of(0.5);
    let mut out = vec![T::zero(); grid.n_cells()];
    for_each_flux_face(&grid, bc, |p, q, ih2| {
        let w = diffusivity * half * (c[p] + c[q]) * ih2;
        let flux = w * (u[q] - u[p]);
        out[p] = out[p] + flux;
        out[q] = out[q] - flux;
    });
    Ok(Field::from_values_unchecked(grid, out))
}

/// Nonnegative Dirichlet form of the flux operator:
/// `hx*hy * D * sum_faces (c_p + c_q)/2 * (mu_q - mu_p)^2 / h^2`,
/// equal to `-inner(div_c_grad(c, mu), mu)` by summation by parts.
pub fn dissipation_form<T: Real>(
    cface_source: &Field<T>,
    mu: &Field<T>,
    bc: &BoundarySpec<T>,
    diffusivity: T,
) -> Result<T, Error> {
    check_same_grid(cface_source, mu)?;
    reject_pinned_mu(bc)?;
    let grid = mu.grid();
    let c = cface_source.values();
    let u = mu.values();
    let half = T::of(0.5);
    let mut acc = T::zero();
    for_each_flux_face(&grid, bc, |p, q, ih2| {
        let d = u[q] - u[p];
        acc = acc + half * (c[p] + c[q]) * d * d * ih2;
    });
    Ok(diffusivity * grid.cell_area() * acc)
}

/// Robin face coefficient: eliminating the ghost from
/// `alpha*(ghost+interior)/2 + beta*(ghost-interior)/h = 0` turns the face
/// term into `coef * phi_interior` with `coef = 2*alpha / (h*(2*beta + alpha*h))`.
fn robin_face_coefficient<T: Real>(alpha: T, beta: T, h: T) -> T {
    let two = T::of(2.0);
    two * alpha / (h * (two * beta + alpha * h))
}

/// Discrete `-div(eps grad phi)` with ghost-cell boundary handling.
///
/// The result is affine in `phi` when Dirichlet data is present; the constant
/// part carries the boundary values.
pub fn neg_div_eps_grad<T: Real>(
    phi: &Field<T>,
    eps: T,
    bc: &BoundarySpec<T>,
) -> Result<Field<T>, Error> {
    if !phi.is_finite() {
        return Err(Error::NonFinite {
            what: "potential".into(),
        });
    }
    let grid = phi.grid();
    let u = phi.values();
    let two = T::of(2.0);
    let mut out = vec![T::zero(); grid.n_cells()];
    for_each_flux_face(&grid, bc, |p, q, ih2| {
        let flux = eps * ih2 * (u[p] - u[q]);
        out[p] = out[p] + flux;
        out[q] = out[q] - flux;
    });
    for_each_boundary_face(&grid, bc, |p, _edge, s, h, ih2, kind| match kind {
        BcKind::ZeroFlux | BcKind::Periodic => {}
        BcKind::Dirichlet(value) => {
            let g = value.eval(s);
            out[p] = out[p] + eps * two * ih2 * (u[p] - g);
        }
        BcKind::Robin { alpha, beta } => {
            out[p] = out[p] + eps * robin_face_coefficient(alpha, beta, h) * u[p];
        }
    });
    Ok(Field::from_values_unchecked(grid, out))
}

/// Assembles the linear part of [`neg_div_eps_grad`] as a CSR matrix together
/// with the affine offset from inhomogeneous Dirichlet data, so that
/// `neg_div_eps_grad(phi) = A phi + offset`.
pub(crate) fn assemble_neg_div_eps_grad<T: Real>(
    grid: &Grid<T>,
    eps: T,
    bc: &BoundarySpec<T>,
) -> (CsrMatrix<T>, Vec<T>) {
    let n = grid.n_cells();
    let two = T::of(2.0);
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::with_capacity(5); n];
    let mut offset = vec![T::zero(); n];
    for i in 0..n {
        rows[i].push((i, T::zero()));
    }
    for_each_flux_face(grid, bc, |p, q, ih2| {
        let w = eps * ih2;
        rows[p].push((p, w));
        rows[p].push((q, -w));
        rows[q].push((q, w));
        rows[q].push((p, -w));
    });
    for_each_boundary_face(grid, bc, |p, _edge, s, h, ih2, kind| match kind {
        BcKind::ZeroFlux | BcKind::Periodic => {}
        BcKind::Dirichlet(value) => {
            rows[p].push((p, eps * two * ih2));
            offset[p] = offset[p] - eps * two * ih2 * value.eval(s);
        }
        BcKind::Robin { alpha, beta } => {
            rows[p].push((p, eps * robin_face_coefficient(alpha, beta, h)));
        }
    });
    (CsrMatrix::from_rows(n, rows), offset)
}

/// Discrete electrostatic gradient energy `1/2 * int eps |grad phi|^2`
/// including the boundary-face halves, so that for homogeneous conditions it
/// equals `inner(neg_div_eps_grad(phi), phi) / 2`.
pub fn electrostatic_gradient_energy<T: Real>(
    phi: &Field<T>,
    eps: T,
    bc: &BoundarySpec<T>,
) -> T {
    let grid = phi.grid();
    let u = phi.values();
    let two = T::of(2.0);
    let mut acc = T::zero();
    for_each_flux_face(&grid, bc, |p, q, ih2| {
        let d = u[p] - u[q];
        acc = acc + d * d * ih2;
    });
    for_each_boundary_face(&grid, bc, |p, _edge, s, h, ih2, kind| match kind {
        BcKind::ZeroFlux | BcKind::Periodic => {}
        BcKind::Dirichlet(value) => {
            let d = u[p] - value.eval(s);
            acc = acc + two * d * d * ih2;
        }
        BcKind::Robin { alpha, beta } => {
            acc = acc + robin_face_coefficient(alpha, beta, h) * u[p] * u[p];
        }
    });
    T::of(0.5) * eps * grid.cell_area() * acc
}
