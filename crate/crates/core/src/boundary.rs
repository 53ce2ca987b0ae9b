//! Per-edge, per-segment boundary conditions.
//!
//! Each of the four edges carries either one condition for the whole edge or
//! an ordered list of segments in physical edge coordinates (y on left/right,
//! x on bottom/top). Separate specifications are used for the potential and
//! for the species fluxes.

use crate::grid::Grid;
use crate::scalar::Real;

/// One of the four domain edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    fn index(self) -> usize {
        match self {
            Edge::Left => 0,
            Edge::Right => 1,
            Edge::Bottom => 2,
            Edge::Top => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        }
    }

    /// Opposite edge of a periodic pair.
    pub fn opposite(self) -> Edge {
        match self {
            Edge::Left => Edge::Right,
            Edge::Right => Edge::Left,
            Edge::Bottom => Edge::Top,
            Edge::Top => Edge::Bottom,
        }
    }
}

/// Dirichlet boundary data as a function of the along-edge coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryValue<T> {
    Constant(T),
    /// `slope * s + offset` where `s` is the along-edge coordinate.
    Linear { slope: T, offset: T },
}

impl<T: Real> BoundaryValue<T> {
    pub fn eval(&self, s: T) -> T {
        match *self {
            BoundaryValue::Constant(v) => v,
            BoundaryValue::Linear { slope, offset } => slope * s + offset,
        }
    }
}

/// Boundary condition kind on (part of) an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind<T> {
    Periodic,
    ZeroFlux,
    Dirichlet(BoundaryValue<T>),
    /// Homogeneous Robin condition `alpha u + beta du/dn = 0` with
    /// `alpha, beta > 0` (`n` the outward normal).
    Robin { alpha: T, beta: T },
}

/// Contiguous piece `[start, end]` of an edge with one condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    pub kind: BcKind<T>,
}

/// Condition of one whole edge.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeSpec<T> {
    /// Single condition covering the edge.
    Uniform(BcKind<T>),
    /// Ordered disjoint segments covering the edge.
    Segments(Vec<Segment<T>>),
}

/// Boundary conditions for all four edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec<T> {
    edges: [EdgeSpec<T>; 4],
}

impl<T: Real> BoundarySpec<T> {
    pub fn new(
        left: EdgeSpec<T>,
        right: EdgeSpec<T>,
        bottom: EdgeSpec<T>,
        top: EdgeSpec<T>,
    ) -> Self {
        Self {
            edges: [left, right, bottom, top],
        }
    }

    /// Same condition on all four edges.
    pub fn uniform(kind: BcKind<T>) -> Self {
        Self {
            edges: [
                EdgeSpec::Uniform(kind),
                EdgeSpec::Uniform(kind),
                EdgeSpec::Uniform(kind),
                EdgeSpec::Uniform(kind),
            ],
        }
    }

    /// Fully periodic boundary.
    pub fn periodic() -> Self {
        Self::uniform(BcKind::Periodic)
    }

    /// Zero-flux (homogeneous Neumann) boundary on all edges.
    pub fn zero_flux() -> Self {
        Self::uniform(BcKind::ZeroFlux)
    }

    /// Constant Dirichlet data on all edges.
    pub fn dirichlet(value: T) -> Self {
        Self::uniform(BcKind::Dirichlet(BoundaryValue::Constant(value)))
    }

    pub fn edge(&self, edge: Edge) -> &EdgeSpec<T> {
        &self.edges[edge.index()]
    }

    /// Condition at along-edge coordinate `s`.
    ///
    /// Faces not covered by any segment are treated as zero-flux; `validate`
    /// reports such gaps.
    pub fn kind_at(&self, edge: Edge, s: T) -> BcKind<T> {
        match self.edge(edge) {
            EdgeSpec::Uniform(kind) => *kind,
            EdgeSpec::Segments(segments) => segments
                .iter()
                .find(|seg| seg.start <= s && s <= seg.end)
                .map(|seg| seg.kind)
                .unwrap_or(BcKind::ZeroFlux),
        }
    }

    fn edge_is_periodic(&self, edge: Edge) -> bool {
        matches!(self.edge(edge), EdgeSpec::Uniform(BcKind::Periodic))
    }

    /// Both x edges periodic.
    pub fn is_periodic_x(&self) -> bool {
        self.edge_is_periodic(Edge::Left) && self.edge_is_periodic(Edge::Right)
    }

    /// Both y edges periodic.
    pub fn is_periodic_y(&self) -> bool {
        self.edge_is_periodic(Edge::Bottom) && self.edge_is_periodic(Edge::Top)
    }

    /// True when no edge pins the value (no Dirichlet or Robin anywhere);
    /// the associated Poisson operator is then singular with constant kernel.
    pub fn is_pure_flux(&self) -> bool {
        !self.has_kind(|k| matches!(k, BcKind::Dirichlet(_) | BcKind::Robin { .. }))
    }

    /// True when some segment carries Dirichlet data.
    pub fn has_dirichlet(&self) -> bool {
        self.has_kind(|k| matches!(k, BcKind::Dirichlet(_)))
    }

    fn has_kind(&self, pred: impl Fn(&BcKind<T>) -> bool) -> bool {
        self.edges.iter().any(|e| match e {
            EdgeSpec::Uniform(kind) => pred(kind),
            EdgeSpec::Segments(segments) => segments.iter().any(|s| pred(&s.kind)),
        })
    }

    /// Checks segment coverage, periodic pairing and Robin coefficient signs.
    /// Returns human-readable descriptions of every violation.
    pub fn validate(&self, grid: &Grid<T>) -> Vec<String> {
        let mut issues = Vec::new();
        let tol = T::of(1e-12);
        for edge in Edge::ALL {
            let len = match edge {
                Edge::Left | Edge::Right => grid.ly(),
                Edge::Bottom | Edge::Top => grid.lx(),
            };
            match self.edge(edge) {
                EdgeSpec::Uniform(kind) => {
                    self.validate_kind(edge, kind, true, &mut issues);
                }
                EdgeSpec::Segments(segments) => {
                    if segments.is_empty() {
                        issues.push(format!("{} edge: no segments", edge.name()));
                        continue;
                    }
                    let mut cursor = T::zero();
                    for seg in segments {
                        if seg.end <= seg.start {
                            issues.push(format!(
                                "{} edge: segment [{}, {}] is empty or reversed",
                                edge.name(),
                                seg.start,
                                seg.end
                            ));
                        }
                        if (seg.start - cursor).abs() > tol * len.max(T::one()) {
                            issues.push(format!(
                                "{} edge: segments leave a gap or overlap near {}",
                                edge.name(),
                                cursor
                            ));
                        }
                        cursor = seg.end;
                        self.validate_kind(edge, &seg.kind, false, &mut issues);
                    }
                    if (cursor - len).abs() > tol * len.max(T::one()) {
                        issues.push(format!(
                            "{} edge: segments cover up to {} but the edge has length {}",
                            edge.name(),
                            cursor,
                            len
                        ));
                    }
                }
            }
        }
        for (a, b, axis) in [(Edge::Left, Edge::Right, "x"), (Edge::Bottom, Edge::Top, "y")] {
            if self.edge_is_periodic(a) != self.edge_is_periodic(b) {
                issues.push(format!(
                    "periodic condition in {axis} must appear on both {} and {} edges",
                    a.name(),
                    b.name()
                ));
            }
        }
        issues
    }

    fn validate_kind(
        &self,
        edge: Edge,
        kind: &BcKind<T>,
        whole_edge: bool,
        issues: &mut Vec<String>,
    ) {
        match kind {
            BcKind::Periodic if !whole_edge => issues.push(format!(
                "{} edge: periodic condition must cover the full edge",
                edge.name()
            )),
            BcKind::Robin { alpha, beta } => {
                if !(*alpha > T::zero()) || !(*beta > T::zero()) {
                    issues.push(format!(
                        "{} edge: Robin coefficients must be positive (alpha, beta > 0)",
                        edge.name()
                    ));
                }
            }
            _ => {}
        }
    }
}
