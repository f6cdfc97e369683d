//! Network definition: site energies and couplings, noise rates, sink
//! wiring, unit conversion, the validated three-site preset, and
//! initial-state construction.
//!
//! Energies and couplings are stored in cm⁻¹ and divided by ħ (cm⁻¹·ps)
//! only inside the Lindbladian assembly, so the unit conversion lives on
//! exactly one code path. All rates are ps⁻¹.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

/// ħ in cm⁻¹·ps, from 1/(2πc) with c = 0.0299792458 cm/ps.
pub const HBAR_CM1_PS: f64 = 5.3089;

/// Fixed basis ordering |g⟩, |1⟩, …, |n⟩, |RC⟩.
///
/// Every module addresses the full space through these accessors; raw
/// indices never appear outside this type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLayout {
    n_sites: usize,
}

impl BasisLayout {
    pub fn new(n_sites: usize) -> Self {
        BasisLayout { n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dimension(&self) -> usize {
        self.n_sites + 2
    }

    /// Ground state |g⟩.
    pub fn g(&self) -> usize {
        0
    }

    /// Site |i⟩ for 1-based i in 1..=n.
    pub fn site(&self, i: usize) -> usize {
        assert!(i >= 1 && i <= self.n_sites, "site index {i} out of 1..={}", self.n_sites);
        i
    }

    /// Reaction center |RC⟩.
    pub fn rc(&self) -> usize {
        self.n_sites + 1
    }
}

/// Full parameterization of the network Hamiltonian and its noise
/// channels. Immutable once constructed; [`NetworkModel::new`] validates
/// every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    energies_cm1: Vec<f64>,
    couplings_cm1: Array2<f64>,
    dephasing_ps1: Option<Vec<f64>>,
    dissipation_ps1: Vec<f64>,
    sink_site: usize,
    sink_rate_ps1: f64,
    hbar_cm1_ps: f64,
}

impl NetworkModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        energies_cm1: Vec<f64>,
        couplings_cm1: Array2<f64>,
        dephasing_ps1: Option<Vec<f64>>,
        dissipation_ps1: Vec<f64>,
        sink_site: usize,
        sink_rate_ps1: f64,
        hbar_cm1_ps: f64,
    ) -> Result<Self> {
        let n = energies_cm1.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "n_sites must be at least 2, got {n}"
            )));
        }
        let all_finite = energies_cm1.iter().all(|x| x.is_finite())
            && couplings_cm1.iter().all(|x| x.is_finite())
            && dissipation_ps1.iter().all(|x| x.is_finite())
            && dephasing_ps1
                .as_deref()
                .is_none_or(|g| g.iter().all(|x| x.is_finite()))
            && sink_rate_ps1.is_finite()
            && hbar_cm1_ps.is_finite();
        if !all_finite {
            return Err(Error::Validation("model parameters must be finite".into()));
        }
        if couplings_cm1.nrows() != n || couplings_cm1.ncols() != n {
            return Err(Error::Validation(format!(
                "couplings must be {n}x{n}, got {}x{}",
                couplings_cm1.nrows(),
                couplings_cm1.ncols()
            )));
        }
        for i in 0..n {
            if couplings_cm1[[i, i]] != 0.0 {
                return Err(Error::Validation(format!(
                    "couplings must have zero diagonal, found {} at ({i},{i})",
                    couplings_cm1[[i, i]]
                )));
            }
            for j in 0..n {
                if couplings_cm1[[i, j]] != couplings_cm1[[j, i]] {
                    return Err(Error::Validation(format!(
                        "couplings must be symmetric, mismatch at ({i},{j})"
                    )));
                }
            }
        }
        if let Some(g) = dephasing_ps1.as_deref() {
            if g.len() != n {
                return Err(Error::Validation(format!(
                    "dephasing rates must list {n} sites, got {}",
                    g.len()
                )));
            }
            if g.iter().any(|&x| x < 0.0) {
                return Err(Error::Validation("dephasing rates must be nonnegative".into()));
            }
        }
        if dissipation_ps1.len() != n {
            return Err(Error::Validation(format!(
                "dissipation rates must list {n} sites, got {}",
                dissipation_ps1.len()
            )));
        }
        if dissipation_ps1.iter().any(|&x| x < 0.0) {
            return Err(Error::Validation("dissipation rates must be nonnegative".into()));
        }
        if sink_site < 1 || sink_site > n {
            return Err(Error::Validation(format!(
                "sink_site must be in 1..={n}, got {sink_site}"
            )));
        }
        if sink_rate_ps1 < 0.0 {
            return Err(Error::Validation("sink rate must be nonnegative".into()));
        }
        if hbar_cm1_ps <= 0.0 {
            return Err(Error::Validation("hbar must be positive".into()));
        }
        Ok(NetworkModel {
            energies_cm1,
            couplings_cm1,
            dephasing_ps1,
            dissipation_ps1,
            sink_site,
            sink_rate_ps1,
            hbar_cm1_ps,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.energies_cm1.len()
    }

    pub fn layout(&self) -> BasisLayout {
        BasisLayout::new(self.n_sites())
    }

    pub fn energies_cm1(&self) -> &[f64] {
        &self.energies_cm1
    }

    pub fn couplings_cm1(&self) -> &Array2<f64> {
        &self.couplings_cm1
    }

    /// Per-site dephasing rates, if the model carries them. Experiments
    /// usually supply γ per run instead.
    pub fn dephasing_ps1(&self) -> Option<&[f64]> {
        self.dephasing_ps1.as_deref()
    }

    pub fn dissipation_ps1(&self) -> &[f64] {
        &self.dissipation_ps1
    }

    /// 1-based sink site index k.
    pub fn sink_site(&self) -> usize {
        self.sink_site
    }

    pub fn sink_rate_ps1(&self) -> f64 {
        self.sink_rate_ps1
    }

    pub fn hbar_cm1_ps(&self) -> f64 {
        self.hbar_cm1_ps
    }

    /// Copy with uniform dephasing γ on every site.
    pub fn with_uniform_dephasing(&self, gamma_ps1: f64) -> Result<Self> {
        let mut m = self.clone();
        if !(gamma_ps1 >= 0.0 && gamma_ps1.is_finite()) {
            return Err(Error::Validation(format!(
                "dephasing rate must be finite and nonnegative, got {gamma_ps1}"
            )));
        }
        m.dephasing_ps1 = Some(vec![gamma_ps1; self.n_sites()]);
        Ok(m)
    }

    /// Copy with uniform dissipation Γ on every site.
    pub fn with_uniform_dissipation(&self, rate_ps1: f64) -> Result<Self> {
        if !(rate_ps1 >= 0.0 && rate_ps1.is_finite()) {
            return Err(Error::Validation(format!(
                "dissipation rate must be finite and nonnegative, got {rate_ps1}"
            )));
        }
        let mut m = self.clone();
        m.dissipation_ps1 = vec![rate_ps1; self.n_sites()];
        Ok(m)
    }

    /// Copy with a different sink rate Γ_RC.
    pub fn with_sink_rate(&self, rate_ps1: f64) -> Result<Self> {
        if !(rate_ps1 >= 0.0 && rate_ps1.is_finite()) {
            return Err(Error::Validation(format!(
                "sink rate must be finite and nonnegative, got {rate_ps1}"
            )));
        }
        let mut m = self.clone();
        m.sink_rate_ps1 = rate_ps1;
        Ok(m)
    }
}

/// Three-site network with the validated parameter set: ε = (215, 220, 0)
/// cm⁻¹, V₁₂ = −104.1, V₁₃ = 5.1, V₂₃ = 32.6 cm⁻¹, dissipation
/// Γᵢ = 5×10⁻⁴ ps⁻¹, sink from site 3 at Γ_RC = 1.0 ps⁻¹. Dephasing is
/// left unset; experiments supply γ per run.
pub fn fmo3_preset() -> NetworkModel {
    let mut v = Array2::zeros((3, 3));
    v[[0, 1]] = -104.1;
    v[[1, 0]] = -104.1;
    v[[0, 2]] = 5.1;
    v[[2, 0]] = 5.1;
    v[[1, 2]] = 32.6;
    v[[2, 1]] = 32.6;
    NetworkModel::new(
        vec![215.0, 220.0, 0.0],
        v,
        None,
        vec![5.0e-4; 3],
        3,
        1.0,
        HBAR_CM1_PS,
    )
    .expect("preset parameters are valid")
}

/// Site-basis Hamiltonian in cm⁻¹: H[i][i] = εᵢ, H[i][j] = V_ij. Returned
/// on the n-dimensional site space only; the |g⟩ and |RC⟩ rows/columns of
/// the full-space embedding are zero.
pub fn build_hamiltonian(m: &NetworkModel) -> CMatrix {
    let n = m.n_sites();
    let mut h = Array2::from_elem((n, n), ZERO);
    for i in 0..n {
        h[[i, i]] = Complex64::new(m.energies_cm1[i], 0.0);
        for j in 0..n {
            if i != j {
                h[[i, j]] = Complex64::new(m.couplings_cm1[[i, j]], 0.0);
            }
        }
    }
    h
}

/// Converts an energy in cm⁻¹ to an angular rate in ps⁻¹: x / ħ.
pub fn wavenumber_to_angular_rate(x_cm1: f64, hbar_cm1_ps: f64) -> f64 {
    x_cm1 / hbar_cm1_ps
}

/// Density matrix on the |g⟩ ⊕ sites ⊕ |RC⟩ space: Hermitian, unit
/// trace, positive semidefinite (all within documented tolerances).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    layout: BasisLayout,
    matrix: CMatrix,
}

/// Tolerances applied when validating a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct StateTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub psd: f64,
}

impl StateTolerances {
    /// Construction-time tolerances.
    pub const STRICT: StateTolerances = StateTolerances {
        hermiticity: 1e-10,
        trace: 1e-8,
        psd: 1e-8,
    };
}

impl DensityMatrix {
    pub fn new(layout: BasisLayout, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(layout, matrix, StateTolerances::STRICT)
    }

    pub fn with_tolerances(
        layout: BasisLayout,
        matrix: CMatrix,
        tol: StateTolerances,
    ) -> Result<Self> {
        let dim = layout.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Validation(format!(
                "density matrix must be {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        linalg::ensure_finite(&matrix)?;
        linalg::ensure_hermitian(&matrix, tol.hermiticity)?;
        let trace: f64 = (0..dim).map(|i| matrix[[i, i]].re).sum();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::Validation(format!(
                "density matrix trace {trace} deviates from 1 beyond {:.1e}",
                tol.trace
            )));
        }
        let min = min_eigenvalue(&matrix)?;
        if min < -tol.psd {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn layout(&self) -> BasisLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.layout.dimension())
            .map(|i| self.matrix[[i, i]].re)
            .sum()
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        let sq = self.matrix.dot(&self.matrix);
        (0..self.layout.dimension()).map(|i| sq[[i, i]].re).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[[index, index]].re
    }

    /// Smallest eigenvalue of the (symmetrized) state.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix)
    }

    /// The n×n site block ρ restricted to |1⟩..|n⟩ (trace ≤ 1 during
    /// open evolution).
    pub fn site_block(&self) -> CMatrix {
        let n = self.layout.n_sites();
        let mut out = Array2::from_elem((n, n), ZERO);
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.matrix[[self.layout.site(i + 1), self.layout.site(j + 1)]];
            }
        }
        out
    }
}

fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    // The Hermiticity gate has already run; symmetrize round-off so the
    // eigensolver's own (tighter) gate cannot trip on tolerated drift.
    let ad = linalg::dagger(a);
    let sym = (a + &ad).mapv(|z| 0.5 * z);
    let dec = linalg::eigh(&sym)?;
    Ok(dec.eigenvalues[0])
}

/// ρ(0) = |site⟩⟨site| on the full layout.
pub fn localized_state(m: &NetworkModel, site: usize) -> Result<DensityMatrix> {
    let n = m.n_sites();
    if site < 1 || site > n {
        return Err(Error::Validation(format!(
            "initial site must be in 1..={n}, got {site}"
        )));
    }
    let layout = m.layout();
    let dim = layout.dimension();
    let mut rho = Array2::from_elem((dim, dim), ZERO);
    rho[[layout.site(site), layout.site(site)]] = Complex64::new(1.0, 0.0);
    DensityMatrix::new(layout, rho)
}

/// On-disk model description (JSON). `dephasing_ps1` and
/// `dissipation_ps1` accept either one uniform rate or a per-site array.
/// Unknown keys are rejected, naming the key.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub energies_cm1: Vec<f64>,
    pub couplings_cm1: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_ps1: Option<RateSpec>,
    pub dissipation_ps1: RateSpec,
    pub sink_site: usize,
    pub sink_rate_ps1: f64,
    #[serde(default = "default_initial_site")]
    pub initial_site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar_cm1_ps: Option<f64>,
}

fn default_initial_site() -> usize {
    1
}

/// A uniform scalar rate or one value per site.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RateSpec {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl RateSpec {
    pub fn resolve(&self, n: usize) -> Vec<f64> {
        match self {
            RateSpec::Uniform(x) => vec![*x; n],
            RateSpec::PerSite(v) => v.clone(),
        }
    }
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_model(&self) -> Result<NetworkModel> {
        let n = self.energies_cm1.len();
        if self.couplings_cm1.len() != n || self.couplings_cm1.iter().any(|row| row.len() != n) {
            return Err(Error::Validation(format!(
                "couplings_cm1 must be an {n}x{n} array"
            )));
        }
        let mut v = Array2::zeros((n, n));
        for (i, row) in self.couplings_cm1.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                v[[i, j]] = *x;
            }
        }
        NetworkModel::new(
            self.energies_cm1.clone(),
            v,
            self.dephasing_ps1.as_ref().map(|g| g.resolve(n)),
            self.dissipation_ps1.resolve(n),
            self.sink_site,
            self.sink_rate_ps1,
            self.hbar_cm1_ps.unwrap_or(HBAR_CM1_PS),
        )
    }

    pub fn from_model(m: &NetworkModel, initial_site: usize) -> Self {
        let n = m.n_sites();
        ModelConfig {
            energies_cm1: m.energies_cm1().to_vec(),
            couplings_cm1: (0..n)
                .map(|i| (0..n).map(|j| m.couplings_cm1()[[i, j]]).collect())
                .collect(),
            dephasing_ps1: m.dephasing_ps1().map(|g| RateSpec::PerSite(g.to_vec())),
            dissipation_ps1: RateSpec::PerSite(m.dissipation_ps1().to_vec()),
            sink_site: m.sink_site(),
            sink_rate_ps1: m.sink_rate_ps1(),
            initial_site,
            hbar_cm1_ps: Some(m.hbar_cm1_ps()),
        }
    }
}
