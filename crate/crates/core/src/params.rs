//! Physical parameters of the aggregate, the cavity and the exciton-cavity
//! coupling.
//!
//! All energies are measured in units of the monomer excitation energy
//! `omega`; the constructors accept any positive `omega` but the CLI always
//! works with `omega = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ring handled by the bit-mask representations.
pub const MAX_SITES: usize = 24;

/// A periodic ring of `n_sites` monomers with hopping `hopping` (J) and
/// nearest-neighbour exciton-exciton interaction `interaction` (A).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateParams {
    pub n_sites: usize,
    pub omega: f64,
    pub hopping: f64,
    pub interaction: f64,
}

impl AggregateParams {
    pub fn new(n_sites: usize, omega: f64, hopping: f64, interaction: f64) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::invalid("N", format!("must lie in 1..={MAX_SITES}, got {n_sites}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid("omega", format!("must be positive, got {omega}")));
        }
        if !hopping.is_finite() {
            return Err(Error::invalid("J", "must be finite"));
        }
        if !interaction.is_finite() {
            return Err(Error::invalid("A", "must be finite"));
        }
        // A one-site ring has a self-bond: the hopping term collapses to 2J n
        // (kept), while n n on the same site has no fermionic counterpart.
        if n_sites == 1 && interaction != 0.0 {
            return Err(Error::invalid("A", "a single-site ring has no exciton-exciton bond"));
        }
        Ok(Self { n_sites, omega, hopping, interaction })
    }

    /// Parameters in units of `omega = 1`.
    pub fn dimensionless(n_sites: usize, j_over_omega: f64, a_over_omega: f64) -> Result<Self> {
        Self::new(n_sites, 1.0, j_over_omega, a_over_omega)
    }

    pub fn with_interaction(&self, interaction: f64) -> Result<Self> {
        Self::new(self.n_sites, self.omega, self.hopping, interaction)
    }
}

/// Single cavity mode with frequency `omega_c`, initially holding
/// `n_photons` photons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c: f64,
    pub n_photons: usize,
}

impl CavityParams {
    pub fn new(omega_c: f64, n_photons: usize) -> Result<Self> {
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::invalid("omega_c", format!("must be positive, got {omega_c}")));
        }
        Ok(Self { omega_c, n_photons })
    }

    /// Resonant cavity (`omega_c = omega`) loaded with one photon per monomer.
    pub fn resonant_full(params: &AggregateParams) -> Self {
        Self { omega_c: params.omega, n_photons: params.n_sites }
    }
}

/// How the exciton-cavity coupling `g` scales with the ring size.
///
/// The cavity length never enters numerically: normalization I corresponds
/// to a cavity that grows with the aggregate (constant monomer density, so
/// `g sqrt(N) / omega` is held fixed), normalization II to a cavity of fixed
/// length (`g / omega` held fixed).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CouplingRepr", try_from = "CouplingRepr")]
pub enum CouplingSpec {
    NormI { gbar: f64 },
    NormII { g_over_omega: f64 },
}

/// Serialized form `{ mode = "norm1" | "norm2", value = ... }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRepr {
    pub mode: String,
    pub value: f64,
}

impl From<CouplingSpec> for CouplingRepr {
    fn from(spec: CouplingSpec) -> Self {
        Self { mode: spec.mode_name().to_owned(), value: spec.value() }
    }
}

impl TryFrom<CouplingRepr> for CouplingSpec {
    type Error = Error;

    fn try_from(repr: CouplingRepr) -> Result<Self> {
        match repr.mode.as_str() {
            "norm1" => Self::norm_i(repr.value),
            "norm2" => Self::norm_ii(repr.value),
            other => Err(Error::Config(format!("coupling.mode must be \"norm1\" or \"norm2\", got {other:?}"))),
        }
    }
}

impl CouplingSpec {
    pub fn norm_i(gbar: f64) -> Result<Self> {
        check_coupling(gbar)?;
        Ok(CouplingSpec::NormI { gbar })
    }

    pub fn norm_ii(g_over_omega: f64) -> Result<Self> {
        check_coupling(g_over_omega)?;
        Ok(CouplingSpec::NormII { g_over_omega })
    }

    /// The dimensionless coupling value (g sqrt(N)/omega or g/omega).
    pub fn value(&self) -> f64 {
        match *self {
            CouplingSpec::NormI { gbar } => gbar,
            CouplingSpec::NormII { g_over_omega } => g_over_omega,
        }
    }

    /// Same normalization mode with a different dimensionless value.
    pub fn with_value(&self, value: f64) -> Result<Self> {
        match self {
            CouplingSpec::NormI { .. } => Self::norm_i(value),
            CouplingSpec::NormII { .. } => Self::norm_ii(value),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            CouplingSpec::NormI { .. } => "norm1",
            CouplingSpec::NormII { .. } => "norm2",
        }
    }

    /// The coupling `g` (energy units) for the given aggregate. The coupling
    /// is switched on as a step at `t = 0+` and held constant.
    pub fn resolve(&self, params: &AggregateParams) -> f64 {
        resolve_coupling(self, params)
    }
}

fn check_coupling(value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::invalid("coupling.value", format!("must be >= 0, got {value}")));
    }
    Ok(())
}

pub fn resolve_coupling(spec: &CouplingSpec, params: &AggregateParams) -> f64 {
    match *spec {
        CouplingSpec::NormI { gbar } => gbar * params.omega / (params.n_sites as f64).sqrt(),
        CouplingSpec::NormII { g_over_omega } => g_over_omega * params.omega,
    }
}

/// Dipole geometry of neighbouring monomers: transition dipole `mu`, static
/// dipole `mu_tilde`, displacement `d` and the vacuum permittivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleGeometry {
    pub mu: [f64; 3],
    pub mu_tilde: [f64; 3],
    pub d: [f64; 3],
    pub eps0: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn point_dipole(p: &[f64; 3], d: &[f64; 3], d2: f64, eps0: f64) -> f64 {
    let pd = dot(p, d);
    (dot(p, p) - 3.0 * pd * pd / d2) / (4.0 * PI * eps0 * d2 * d2.sqrt())
}

/// Hopping `J` and interaction `A` from the point-dipole interaction of
/// neighbouring transition dipoles and static dipoles respectively.
pub fn dipole_couplings(geom: &DipoleGeometry) -> Result<(f64, f64)> {
    let d2 = dot(&geom.d, &geom.d);
    if d2 <= 0.0 || !d2.is_finite() {
        return Err(Error::DegenerateGeometry);
    }
    if !(geom.eps0 > 0.0) {
        return Err(Error::invalid("eps0", "must be positive"));
    }
    Ok((
        point_dipole(&geom.mu, &geom.d, d2, geom.eps0),
        point_dipole(&geom.mu_tilde, &geom.d, d2, geom.eps0),
    ))
}
