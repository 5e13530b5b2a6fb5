//! Numerical thresholds used across the crate, collected in one place.

/// Fixed numerical thresholds. [`TOL`] is the single instance in use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of `|x|` from 1 for sphere points.
    pub unit_norm: f64,
    /// Allowed `⟨v, x⟩` for a tangent vector `v` at `x`.
    pub tangency: f64,
    /// `|x₀ × x|` below which arc endpoints are degenerate.
    pub degenerate_cross: f64,
    /// `⟨x₀, x⟩` above `1 - coincident` means coincident endpoints.
    pub coincident: f64,
    /// `⟨x, y⟩ ≤ -1 + antipodal` means antipodal points.
    pub antipodal: f64,
    /// Size of the nudge applied to antipodal arc endpoints.
    pub antipodal_nudge: f64,
    /// Vectors shorter than this are treated as zero by `exp`.
    pub zero_vector: f64,
    /// Sample speeds below this give a zero square-root velocity.
    pub zero_speed: f64,
    /// Central finite-difference step for scalar parameters.
    pub fd_step: f64,
    /// Step-size floor for backtracking line searches.
    pub min_step: f64,
    /// Margin kept from the open ends of the exponential-map search interval.
    pub domain_margin: f64,
}

pub const TOL: Tolerances = Tolerances {
    unit_norm: 1e-12,
    tangency: 1e-10,
    degenerate_cross: 1e-9,
    coincident: 1e-12,
    antipodal: 1e-9,
    antipodal_nudge: 1e-8,
    zero_vector: 1e-14,
    zero_speed: 1e-10,
    fd_step: 1e-5,
    min_step: 1e-12,
    domain_margin: 1e-6,
};
