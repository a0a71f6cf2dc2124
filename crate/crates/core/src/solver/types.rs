use crate::error::{Error, Result};
use crate::model::{Beamformer, Covariance};

/// Interference-temperature levels `Γ_kj` (tolerated interference from BS `k`
/// at MS `j`) for every ordered pair `k ≠ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItVector {
    links: usize,
    levels: Vec<f64>,
}

impl ItVector {
    pub fn zeros(links: usize) -> Self {
        Self::uniform(links, 0.0)
    }

    pub fn uniform(links: usize, level: f64) -> Self {
        assert!(level >= 0.0, "IT level must be >= 0");
        let mut levels = vec![level; links * links];
        for k in 0..links {
            levels[k * links + k] = 0.0;
        }
        Self { links, levels }
    }

    /// Builds from `((k, j), Γ_kj)` pairs; missing entries are zero.
    pub fn from_entries(links: usize, entries: &[((usize, usize), f64)]) -> Result<Self> {
        let mut it = Self::zeros(links);
        for &((k, j), v) in entries {
            it.set(k, j, v)?;
        }
        Ok(it)
    }

    pub fn links(&self) -> usize {
        self.links
    }

    /// `Γ_kj`.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        debug_assert_ne!(k, j);
        self.levels[k * self.links + j]
    }

    pub fn set(&mut self, k: usize, j: usize, level: f64) -> Result<()> {
        if k == j || k >= self.links || j >= self.links {
            return Err(Error::Dimension(format!(
                "no IT entry ({k},{j}) for {} links",
                self.links
            )));
        }
        if level.is_nan() || level < 0.0 {
            return Err(Error::Precondition(format!(
                "IT level ({k},{j}) must be >= 0, got {level}"
            )));
        }
        self.levels[k * self.links + j] = level;
        Ok(())
    }

    /// All `K(K−1)` entries in lexicographic `(k, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let n = self.links;
        (0..n)
            .flat_map(move |k| (0..n).filter(move |&j| j != k).map(move |j| (k, j)))
            .map(|(k, j)| ((k, j), self.get(k, j)))
    }

    /// `Σ_{j≠k} Γ_jk`: interference MS `k` is told to expect.
    pub fn received_sum(&self, k: usize) -> f64 {
        (0..self.links).filter(|&j| j != k).map(|j| self.get(j, k)).sum()
    }
}

/// Lagrange multipliers of one per-BS problem: `λ_kj` for each IT constraint
/// and `λ_kk` for the power cap, stored in a length-K vector indexed by `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    link: usize,
    values: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(links: usize, link: usize) -> Self {
        Self {
            link,
            values: vec![0.0; links],
        }
    }

    pub fn new(link: usize, values: Vec<f64>) -> Result<Self> {
        if link >= values.len() {
            return Err(Error::Dimension(format!(
                "link {link} out of range for {} duals",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::Precondition(format!("dual variables must be >= 0, got {v}")));
        }
        Ok(Self { link, values })
    }

    pub fn link(&self) -> usize {
        self.link
    }

    /// `λ_kj`.
    pub fn it(&self, j: usize) -> f64 {
        debug_assert_ne!(j, self.link);
        self.values[j]
    }

    /// `λ_kk`.
    pub fn power(&self) -> f64 {
        self.values[self.link]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Output of the inner (fixed-γ) dual solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub duals: DualPoint,
    /// `g(λ*)`, an upper bound on `F(γ)`.
    pub f_value: f64,
    /// Certified bound on `g(λ*) − F(γ)`.
    pub gap: f64,
    /// Closed-form maximiser at `λ*` after primal recovery.
    pub covariance: Covariance,
    pub beamformer: Beamformer,
    pub iterations: usize,
}

impl InnerSolution {
    /// Lower bound on `F(γ)`.
    pub fn f_lower(&self) -> f64 {
        self.f_value - self.gap
    }
}

/// Optimum of the per-BS fractional program for fixed IT levels.
#[derive(Debug, Clone)]
pub struct LinkSolution {
    pub link: usize,
    /// `E_k(Γ_k)`.
    pub gamma_star: f64,
    pub covariance: Covariance,
    pub beamformer: Beamformer,
    pub duals: DualPoint,
    /// `|F(γ*)|` from the final inner solve.
    pub f_residual: f64,
    /// `Tr(S*)/η + P_c`.
    pub total_power: f64,
    /// `Σ_{j≠k} Γ_jk + σ_k²`.
    pub effective_noise: f64,
    /// Set when `P_c = 0`: the reported value is a supremum approached as
    /// the transmit power goes to zero.
    pub limit_only: bool,
    pub bisection_iterations: usize,
}

impl LinkSolution {
    /// `hᴴ S* h` for the own channel.
    pub fn signal(&self, h: &crate::linalg::CVector) -> f64 {
        self.covariance.quad_form(h)
    }
}

/// Numerical knobs for the per-BS solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Bisection stops when `γ_b − γ_a ≤ eps · γ_b`.
    pub eps: f64,
    /// Ellipsoid stops when its certified gap falls below
    /// `inner_tol · (1 + |g| + γ P_c)`.
    pub inner_tol: f64,
    pub max_inner_iter: usize,
    pub max_bisection_iter: usize,
    /// Lower end of the initial bracket.
    pub gamma_lo: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            inner_tol: 1e-14,
            max_inner_iter: 20_000,
            max_bisection_iter: 400,
            gamma_lo: 1e-9,
        }
    }
}
