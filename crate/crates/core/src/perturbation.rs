//! Second-order perturbation theory for the vacuum to two-exciton channel.
//!
//! The zero-momentum two-exciton states are expanded in the Bloch states
//! `|xi_r> ~ sum_j S+_j S+_{j+r} |vac>` (`r = 1..N/2`), in which
//! `H_m - 2 omega` is the tridiagonal matrix `h2`. The amplitude formula
//! assumes a resonant cavity and the `k = 0` one-exciton intermediate state
//! of energy `omega + 2J`.

use std::io::Write;

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Denominators below `RESONANCE_TOL * omega` are treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-8;
/// Energies within this distance are sorted as ties.
const TIE_TOL: f64 = 1e-12;

fn check_even(n_sites: usize) -> Result<()> {
    if !n_sites.is_multiple_of(2) || n_sites < 4 {
        return Err(Error::OddChain(n_sites));
    }
    Ok(())
}

/// `h2`: diagonal `(A, 0, ..., 0)`, off-diagonal `2J` except `2 sqrt(2) J`
/// on the last bond.
pub fn h2_matrix(n_sites: usize, hopping: f64, interaction: f64) -> Result<Mat<f64>> {
    check_even(n_sites)?;
    let d = n_sites / 2;
    let mut h = Mat::<f64>::zeros(d, d);
    h[(0, 0)] = interaction;
    for r in 0..d - 1 {
        let t = if r == d - 2 { 2.0 * std::f64::consts::SQRT_2 * hopping } else { 2.0 * hopping };
        h[(r, r + 1)] = t;
        h[(r + 1, r)] = t;
    }
    Ok(h)
}

/// Eigenmodes of `h2` and their one- to two-exciton amplitudes.
#[derive(Clone, Debug)]
pub struct TwoExcitonModes {
    pub n_sites: usize,
    pub hopping: f64,
    pub omega: f64,
    /// `E_alpha`, ascending.
    pub energies: Vec<f64>,
    /// `vectors[alpha][r]`, unit norm, first nonzero component positive.
    pub vectors: Vec<Vec<f64>>,
    /// `S_{xi -> phi_alpha}`.
    pub s_amp: Vec<f64>,
}

impl TwoExcitonModes {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn abs_s_sq(&self) -> Vec<f64> {
        self.s_amp.iter().map(|s| s * s).collect()
    }

    pub fn sum_rule(&self) -> f64 {
        self.s_amp.iter().map(|s| s * s).sum()
    }
}

/// Spectral decomposition of `h2` for a ring of `n_sites` with hopping
/// `hopping` and interaction `interaction` (energies in units of `omega`).
pub fn two_exciton_modes(n_sites: usize, hopping: f64, interaction: f64, omega: f64) -> Result<TwoExcitonModes> {
    let h2 = h2_matrix(n_sites, hopping, interaction)?;
    let d = h2.nrows();
    let evd = h2.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut modes: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|a| {
            let mut v: Vec<f64> = (0..d).map(|r| evd.U()[(r, a)]).collect();
            if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
                if first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (evd.S()[a], v)
        })
        .collect();
    modes.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= TIE_TOL {
            a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    let s_amp = modes
        .iter()
        .map(|(_, v)| std::f64::consts::SQRT_2 * v[d - 1] + 2.0 * v[..d - 1].iter().sum::<f64>())
        .collect();
    let (energies, vectors) = modes.into_iter().unzip();
    Ok(TwoExcitonModes { n_sites, hopping, omega, energies, vectors, s_amp })
}

fn guard(name: &'static str, value: f64, omega: f64) -> Result<()> {
    if value.abs() < RESONANCE_TOL * omega {
        return Err(Error::PerturbativeResonance { denominator: name, value });
    }
    Ok(())
}

/// `P_{vac -> phi_alpha}(t)` for the 1-based mode index `alpha` at time `t`
/// (inverse energy units) and coupling `g`.
pub fn transition_prob(modes: &TwoExcitonModes, alpha: usize, t: f64, g: f64) -> Result<f64> {
    if alpha == 0 || alpha > modes.len() {
        return Err(Error::invalid("alpha", format!("must lie in 1..={}, got {alpha}", modes.len())));
    }
    let j = modes.hopping;
    let e = modes.energies[alpha - 1];
    let b = e - 2.0 * j;
    guard("J", j, modes.omega)?;
    guard("E_alpha", e, modes.omega)?;
    guard("E_alpha - 2J", b, modes.omega)?;
    let n = modes.n_sites as f64;
    let s2 = modes.s_amp[alpha - 1].powi(2);
    let prefactor = g.powi(4) * n * n * (n - 1.0) * s2 / (4.0 * j * j * e * e * b * b);
    let terms = [
        b * b,
        4.0 * j * j,
        e * e,
        4.0 * j * b * (e * t).cos(),
        -2.0 * e * b * (2.0 * j * t).cos(),
        -4.0 * j * e * (b * t).cos(),
    ];
    let bracket: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    if bracket < 0.0 && bracket >= -1e-12 * scale {
        return Ok(0.0);
    }
    Ok(prefactor * bracket)
}

/// Perturbative stored energy `sum_alpha P_alpha(t) (2 omega + E_alpha)`.
pub fn two_exciton_energy(modes: &TwoExcitonModes, t: f64, g: f64) -> Result<f64> {
    let mut total = 0.0;
    for alpha in 1..=modes.len() {
        total += transition_prob(modes, alpha, t, g)? * (2.0 * modes.omega + modes.energies[alpha - 1]);
    }
    Ok(total)
}

/// CSV rows `A_over_omega,alpha,energy,abs_S_sq` for a set of interactions.
pub fn write_modes_csv(mut w: impl Write, rows: &[(f64, TwoExcitonModes)]) -> Result<()> {
    writeln!(w, "A_over_omega,alpha,energy,abs_S_sq")?;
    for (a, modes) in rows {
        for (i, (e, s)) in modes.energies.iter().zip(&modes.s_amp).enumerate() {
            writeln!(w, "{:?},{},{:?},{:?}", a, i + 1, e / modes.omega, s * s)?;
        }
    }
    Ok(())
}
