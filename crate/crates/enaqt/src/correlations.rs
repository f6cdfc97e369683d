//! Local Quantum Uncertainty of the site block.
//!
//! Two evaluation paths are provided. The general qubit–qudit closed
//! form diagonalizes W_AB with (W)ᵢⱼ = Tr{√ρ (σᵢ⊗𝟙) √ρ (σⱼ⊗𝟙)} and
//! returns 𝒰 = 1 − λ_max(W). The single-excitation fast path works
//! directly on the n×n site block: with σ_z|excited⟩ = −|excited⟩ the
//! only surviving W entry is W_zz, and
//!
//! 𝒰 = 1 − Σ_{ℓ,m} λ_ℓ^{1/2} λ_m^{1/2} |⟨v_ℓ|D|v_m⟩|²,
//!
//! where (λ, v) diagonalize the block and D = diag(−1, +1, …, +1) flags
//! which site the qubit party occupies. `embed_single_excitation` maps a
//! 3-site block into the full ℂ²⊗ℂ⁴ space so both paths can be checked
//! against each other.
//!
//! The LQU flux Φ compresses a trajectory's LQU series into the jump
//! from its initial value to its plateau (or final) value.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Qubit–qudit split of the site set. Party A is a single site; party B
/// is the ordered rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSpec {
    qubit_site: usize,
    qudit_sites: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(qubit_site: usize, qudit_sites: Vec<usize>) -> Result<Self> {
        if qubit_site == 0 || qudit_sites.contains(&0) {
            return Err(Error::Validation("site indices are 1-based".into()));
        }
        if qudit_sites.is_empty() {
            return Err(Error::Validation(
                "partition needs at least one qudit site".into(),
            ));
        }
        let mut seen = vec![qubit_site];
        for &s in &qudit_sites {
            if seen.contains(&s) {
                return Err(Error::Validation(format!(
                    "site {s} appears twice in the partition"
                )));
            }
            seen.push(s);
        }
        Ok(PartitionSpec {
            qubit_site,
            qudit_sites,
        })
    }

    /// Default split: A = site 1, B = sites 2..n in order.
    pub fn leading_site(n_sites: usize) -> Self {
        PartitionSpec {
            qubit_site: 1,
            qudit_sites: (2..=n_sites).collect(),
        }
    }

    pub fn qubit_site(&self) -> usize {
        self.qubit_site
    }

    pub fn qudit_sites(&self) -> &[usize] {
        &self.qudit_sites
    }

    pub fn n_sites(&self) -> usize {
        1 + self.qudit_sites.len()
    }

    fn ensure_covers(&self, n: usize) -> Result<()> {
        let mut all: Vec<usize> = self.qudit_sites.clone();
        all.push(self.qubit_site);
        all.sort_unstable();
        if all != (1..=n).collect::<Vec<_>>() {
            return Err(Error::Validation(format!(
                "partition must cover sites 1..{n} exactly once"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LquMethod {
    General,
    SingleExcitation,
}

impl std::fmt::Display for LquMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LquMethod::General => write!(f, "general"),
            LquMethod::SingleExcitation => write!(f, "single_excitation"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LquResult {
    pub value: f64,
    pub w_matrix: [[f64; 3]; 3],
    pub lambda_max: f64,
    pub method: LquMethod,
}

fn pauli(i: usize) -> CMatrix {
    let mut s = Array2::from_elem((2, 2), ZERO);
    match i {
        0 => {
            s[[0, 1]] = ONE;
            s[[1, 0]] = ONE;
        }
        1 => {
            s[[0, 1]] = Complex64::new(0.0, -1.0);
            s[[1, 0]] = Complex64::new(0.0, 1.0);
        }
        _ => {
            s[[0, 0]] = ONE;
            s[[1, 1]] = -ONE;
        }
    }
    s
}

/// General qubit–qudit LQU. `rho_ab` lives on ℂ²⊗ℂᵈ in qubit-major
/// ordering (|a⟩⊗|b⟩ with a the qubit bit).
pub fn lqu_general(rho_ab: &CMatrix, d: usize) -> Result<LquResult> {
    linalg::ensure_square(rho_ab)?;
    if d < 2 {
        return Err(Error::Validation(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    if rho_ab.nrows() != 2 * d {
        return Err(Error::Validation(format!(
            "state must be {}x{} for qudit dimension {d}, got {}x{}",
            2 * d,
            2 * d,
            rho_ab.nrows(),
            rho_ab.ncols()
        )));
    }
    linalg::ensure_hermitian(rho_ab, 1e-10)?;
    let trace: f64 = (0..2 * d).map(|i| rho_ab[[i, i]].re).sum();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(Error::Validation(format!(
            "state trace must be 1 within 1e-8, got {trace}"
        )));
    }

    let sqrt_rho = linalg::sqrtm_psd(rho_ab)?;
    let id_b = linalg::identity(d);
    let sigmas: Vec<CMatrix> = (0..3).map(|i| linalg::kron(&pauli(i), &id_b)).collect();

    let mut w = [[0.0_f64; 3]; 3];
    for i in 0..3 {
        let left = sqrt_rho.dot(&sigmas[i]).dot(&sqrt_rho);
        for j in 0..3 {
            let prod = left.dot(&sigmas[j]);
            let tr: Complex64 = (0..2 * d).map(|k| prod[[k, k]]).sum();
            w[i][j] = tr.re;
        }
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (w[i][j] + w[j][i]);
            w[i][j] = s;
            w[j][i] = s;
        }
    }

    let mut wc = Array2::from_elem((3, 3), ZERO);
    for i in 0..3 {
        for j in 0..3 {
            wc[[i, j]] = Complex64::new(w[i][j], 0.0);
        }
    }
    let eig = linalg::eigh(&wc)?;
    let lambda_max = eig.eigenvalues[2];
    let value = (1.0 - lambda_max).max(0.0);
    Ok(LquResult {
        value,
        w_matrix: w,
        lambda_max,
        method: LquMethod::General,
    })
}

/// Threshold below which a normalized site block is treated as empty.
pub const EMPTY_BLOCK_TRACE: f64 = 1e-9;

/// Single-excitation LQU of an n×n site block with the qubit party on
/// `qubit_site` (1-based position within the block). When `normalize` is
/// set the block is divided by its trace first and a near-zero trace is
/// an error; otherwise the raw block is used as-is.
pub fn lqu_single_excitation_for(
    site_block: &CMatrix,
    normalize: bool,
    partition: &PartitionSpec,
) -> Result<LquResult> {
    linalg::ensure_square(site_block)?;
    let n = site_block.nrows();
    if n < 2 {
        return Err(Error::Validation(format!(
            "site block must be at least 2x2, got {n}x{n}"
        )));
    }
    if partition.n_sites() != n {
        return Err(Error::Validation(format!(
            "partition lists {} sites but the block has {n}",
            partition.n_sites()
        )));
    }
    partition.ensure_covers(n)?;
    linalg::ensure_hermitian(site_block, 1e-10)?;

    let trace: f64 = (0..n).map(|i| site_block[[i, i]].re).sum();
    let block = if normalize {
        if trace <= EMPTY_BLOCK_TRACE {
            return Err(Error::EmptySiteBlock { trace });
        }
        site_block.mapv(|z| z / trace)
    } else {
        site_block.clone()
    };

    let eig = linalg::eigh(&block)?;
    let mut lambdas = eig.eigenvalues.clone();
    for l in lambdas.iter_mut() {
        if *l < 0.0 {
            if *l < -1e-8 {
                return Err(Error::NotPsd { eigenvalue: *l });
            }
            *l = 0.0;
        }
    }

    // ⟨v_ℓ|D|v_m⟩ with D = diag(±1), −1 on the qubit site.
    let d_diag: Vec<f64> = (1..=n)
        .map(|s| if s == partition.qubit_site() { -1.0 } else { 1.0 })
        .collect();
    let v = &eig.eigenvectors;
    let mut w_zz = 0.0;
    for l in 0..n {
        for m in 0..n {
            let mut elem = ZERO;
            for s in 0..n {
                elem += v[[s, l]].conj() * d_diag[s] * v[[s, m]];
            }
            w_zz += lambdas[l].sqrt() * lambdas[m].sqrt() * elem.norm_sqr();
        }
    }

    let value = (1.0 - w_zz).max(0.0);
    let mut w = [[0.0; 3]; 3];
    w[2][2] = w_zz;
    Ok(LquResult {
        value,
        w_matrix: w,
        lambda_max: w_zz,
        method: LquMethod::SingleExcitation,
    })
}

/// [`lqu_single_excitation_for`] with the default split A = site 1.
pub fn lqu_single_excitation(site_block: &CMatrix, normalize: bool) -> Result<LquResult> {
    let n = site_block.nrows().max(2);
    lqu_single_excitation_for(site_block, normalize, &PartitionSpec::leading_site(n))
}

/// Embeds a unit-trace 3×3 site block into ℂ²⊗ℂ⁴ (three qubits, the
/// partition's qubit site leading) on the single-excitation basis
/// |100⟩, |010⟩, |001⟩. Everything outside that subspace is zero.
pub fn embed_single_excitation(site_block: &CMatrix, partition: &PartitionSpec) -> Result<CMatrix> {
    linalg::ensure_square(site_block)?;
    if site_block.nrows() != 3 {
        return Err(Error::Validation(format!(
            "embedding is defined for 3-site blocks, got {}x{}",
            site_block.nrows(),
            site_block.ncols()
        )));
    }
    if partition.n_sites() != 3 {
        return Err(Error::Validation(
            "partition must split exactly 3 sites".into(),
        ));
    }
    partition.ensure_covers(3)?;
    let trace: f64 = (0..3).map(|i| site_block[[i, i]].re).sum();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(Error::Validation(format!(
            "site block must be normalized before embedding, trace = {trace}"
        )));
    }

    // Basis index of the state with the excitation on site s: the qubit
    // occupies the leading factor, the two qudit sites the trailing two.
    let index = |s: usize| -> usize {
        let a = usize::from(s == partition.qubit_site());
        let b1 = usize::from(s == partition.qudit_sites()[0]);
        let b2 = usize::from(s == partition.qudit_sites()[1]);
        4 * a + 2 * b1 + b2
    };

    let mut rho = Array2::from_elem((8, 8), ZERO);
    for i in 0..3 {
        for j in 0..3 {
            rho[[index(i + 1), index(j + 1)]] = site_block[[i, j]];
        }
    }
    Ok(rho)
}

/// Metadata-carrying outcome of [`lqu_flux`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FluxEvaluation {
    /// Φ = 𝒰(T*) − 𝒰(0).
    pub phi: f64,
    pub t_star_ps: f64,
    /// Whether a plateau was detected (otherwise T* is the last usable
    /// sample time).
    pub plateau_found: bool,
    /// Set when the LQU series turns undefined before the trajectory
    /// ends and evaluation was truncated to the defined prefix.
    pub used_last_defined: bool,
}

/// LQU flux of a trajectory: Φ = 𝒰(T*) − 𝒰(0) with T* the earliest time
/// from which the series varies by less than `plateau_tol` across
/// `plateau_window_ps`. Without a plateau, T* falls back to the final
/// time; with an undefined (NaN) tail, to the last defined sample.
pub fn lqu_flux(traj: &Trajectory, plateau_window_ps: f64, plateau_tol: f64) -> Result<FluxEvaluation> {
    let series = traj
        .series("lqu")
        .ok_or_else(|| Error::Validation("trajectory carries no LQU series".into()))?;
    let times = traj.times();
    if !(plateau_window_ps > 0.0 && plateau_tol > 0.0) {
        return Err(Error::Validation(
            "plateau window and tolerance must be positive".into(),
        ));
    }
    let span = times[times.len() - 1] - times[0];
    if plateau_window_ps >= span {
        return Err(Error::Validation(format!(
            "plateau window {plateau_window_ps} ps must be shorter than the trajectory span {span} ps"
        )));
    }
    if !series[0].is_finite() {
        return Err(Error::Validation(
            "LQU is undefined at the initial time".into(),
        ));
    }

    let last_defined = series
        .iter()
        .rposition(|u| u.is_finite())
        .expect("checked above");
    let truncated = last_defined + 1 < series.len();

    let mut t_star_idx = last_defined;
    let mut plateau_found = false;
    'outer: for a in 0..=last_defined {
        let end_time = times[a] + plateau_window_ps;
        if end_time > times[last_defined] + 1e-12 {
            break;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in a..=last_defined {
            if times[k] > end_time + 1e-12 {
                break;
            }
            if !series[k].is_finite() {
                continue 'outer;
            }
            lo = lo.min(series[k]);
            hi = hi.max(series[k]);
        }
        if hi - lo < plateau_tol {
            t_star_idx = a;
            plateau_found = true;
            break;
        }
    }

    Ok(FluxEvaluation {
        phi: series[t_star_idx] - series[0],
        t_star_ps: times[t_star_idx],
        plateau_found,
        used_last_defined: truncated,
    })
}

/// Computes the LQU of every snapshot's site block and attaches it to
/// the trajectory as the `lqu` series. With `normalize`, samples whose
/// block has drained are recorded as NaN (the measure is undefined
/// there); the raw variant is defined everywhere.
pub fn attach_lqu(traj: &mut Trajectory, normalize: bool) -> Result<()> {
    let n = traj.layout().n_sites();
    let partition = PartitionSpec::leading_site(n);
    let mut series = Vec::with_capacity(traj.times().len());
    for state in traj.states() {
        let block = state.site_block();
        match lqu_single_excitation_for(&block, normalize, &partition) {
            Ok(r) => series.push(r.value),
            Err(Error::EmptySiteBlock { .. }) => series.push(f64::NAN),
            Err(e) => return Err(e),
        }
    }
    traj.set_lqu(series);
    Ok(())
}
