//! Network data model: scenarios, covariances, beamformers and the rate,
//! power and energy-efficiency evaluations built on them.
//!
//! Powers are in Watts throughout. Energy efficiency is kept in
//! bits/s/Hz per Watt (bits/Hz per Joule); multiply by the bandwidth to get
//! bits per Joule.

use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Immutable description of a K-cell MISO downlink.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    antennas: Vec<usize>,
    /// `channels[j][k]` is `h_jk`, the channel from BS `j` to MS `k` (length `M_j`).
    channels: Vec<Vec<CVector>>,
    noise: Vec<f64>,
    power_caps: Vec<f64>,
    circuit_power: f64,
    amp_efficiency: f64,
    bandwidth: f64,
}

/// Everything in a [`Scenario`] except the channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSkeleton {
    pub antennas: Vec<usize>,
    pub noise: Vec<f64>,
    pub power_caps: Vec<f64>,
    pub circuit_power: f64,
    pub amp_efficiency: f64,
    pub bandwidth: f64,
}

impl ScenarioSkeleton {
    /// Same parameters on every link.
    pub fn uniform(
        links: usize,
        antennas: usize,
        noise: f64,
        power_cap: f64,
        circuit_power: f64,
        amp_efficiency: f64,
        bandwidth: f64,
    ) -> Self {
        Self {
            antennas: vec![antennas; links],
            noise: vec![noise; links],
            power_caps: vec![power_cap; links],
            circuit_power,
            amp_efficiency,
            bandwidth,
        }
    }

    pub fn links(&self) -> usize {
        self.antennas.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.antennas.len();
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 links, got {k}")));
        }
        if self.noise.len() != k || self.power_caps.len() != k {
            return Err(Error::Dimension(format!(
                "{k} links but {} noise powers and {} power caps",
                self.noise.len(),
                self.power_caps.len()
            )));
        }
        if let Some(m) = self.antennas.iter().find(|&&m| m == 0) {
            return Err(Error::Config(format!("antenna count must be >= 1, got {m}")));
        }
        if let Some(s) = self.noise.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("noise power must be positive, got {s}")));
        }
        if let Some(p) = self.power_caps.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::Config(format!(
                "power cap must be nonnegative or infinite, got {p}"
            )));
        }
        if !(self.circuit_power >= 0.0 && self.circuit_power.is_finite()) {
            return Err(Error::Config(format!(
                "circuit power must be finite and >= 0, got {}",
                self.circuit_power
            )));
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "amplifier efficiency must lie in (0, 1], got {}",
                self.amp_efficiency
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

impl Scenario {
    pub fn new(skeleton: ScenarioSkeleton, channels: Vec<Vec<CVector>>) -> Result<Self> {
        skeleton.validate()?;
        let k = skeleton.links();
        if channels.len() != k || channels.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension(format!("channel table must be {k} x {k}")));
        }
        for (j, row) in channels.iter().enumerate() {
            for (l, h) in row.iter().enumerate() {
                if h.len() != skeleton.antennas[j] {
                    return Err(Error::Dimension(format!(
                        "h_{j}{l} has length {} but BS {j} has {} antennas",
                        h.len(),
                        skeleton.antennas[j]
                    )));
                }
                if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Config(format!("h_{j}{l} has non-finite entries")));
                }
            }
        }
        Ok(Self {
            antennas: skeleton.antennas,
            channels,
            noise: skeleton.noise,
            power_caps: skeleton.power_caps,
            circuit_power: skeleton.circuit_power,
            amp_efficiency: skeleton.amp_efficiency,
            bandwidth: skeleton.bandwidth,
        })
    }

    pub fn links(&self) -> usize {
        self.antennas.len()
    }

    pub fn antennas(&self, k: usize) -> usize {
        self.antennas[k]
    }

    /// `h_jk`: channel from BS `j` to MS `k`.
    pub fn channel(&self, j: usize, k: usize) -> &CVector {
        &self.channels[j][k]
    }

    pub fn noise(&self, k: usize) -> f64 {
        self.noise[k]
    }

    pub fn power_cap(&self, k: usize) -> f64 {
        self.power_caps[k]
    }

    pub fn circuit_power(&self) -> f64 {
        self.circuit_power
    }

    pub fn amp_efficiency(&self) -> f64 {
        self.amp_efficiency
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn skeleton(&self) -> ScenarioSkeleton {
        ScenarioSkeleton {
            antennas: self.antennas.clone(),
            noise: self.noise.clone(),
            power_caps: self.power_caps.clone(),
            circuit_power: self.circuit_power,
            amp_efficiency: self.amp_efficiency,
            bandwidth: self.bandwidth,
        }
    }

    /// Copy with a different circuit power.
    pub fn with_circuit_power(&self, circuit_power: f64) -> Result<Self> {
        let mut sk = self.skeleton();
        sk.circuit_power = circuit_power;
        Scenario::new(sk, self.channels.clone())
    }

    /// Copy with the same cap on every BS.
    pub fn with_power_caps(&self, cap: f64) -> Result<Self> {
        let mut sk = self.skeleton();
        sk.power_caps = vec![cap; self.links()];
        Scenario::new(sk, self.channels.clone())
    }

    /// Copy with a different noise power at MS `k`.
    pub fn with_noise(&self, k: usize, noise: f64) -> Result<Self> {
        let mut sk = self.skeleton();
        sk.noise[k] = noise;
        Scenario::new(sk, self.channels.clone())
    }

    /// Copy with `h_jk` replaced.
    pub fn with_channel(&self, j: usize, k: usize, h: CVector) -> Result<Self> {
        let mut channels = self.channels.clone();
        channels[j][k] = h;
        Scenario::new(self.skeleton(), channels)
    }
}

/// Hermitian positive semidefinite transmit covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: CMatrix,
}

impl Covariance {
    /// Validates Hermitian symmetry and positive semidefiniteness.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let m = matrix.nrows();
        for i in 0..m {
            for j in 0..m {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if dev > HERMITIAN_TOL * scale {
                    return Err(Error::Precondition(format!(
                        "covariance not Hermitian: deviation {dev:e} at ({i},{j})"
                    )));
                }
            }
        }
        let min_eig = linalg::hermitian_eigenvalues(&matrix).last().copied().unwrap_or(0.0);
        if min_eig < -PSD_TOL * scale {
            return Err(Error::Precondition(format!(
                "covariance not PSD: smallest eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn rank_one(w: &CVector) -> Self {
        Self {
            matrix: linalg::outer_self(w),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let m = diag.len();
        Self::new(CMatrix::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `hᴴ S h`.
    pub fn quad_form(&self, h: &CVector) -> f64 {
        linalg::quad_form(&self.matrix, h)
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Ratio of the second-largest to the largest eigenvalue; 0 for `S = 0`
    /// and for 1x1 matrices.
    pub fn rank_one_residual(&self) -> f64 {
        let ev = self.eigenvalues();
        if ev.len() < 2 || ev[0] <= 0.0 {
            return 0.0;
        }
        ev[1].abs() / ev[0]
    }
}

/// Rank-one transmit strategy `S = w wᴴ`; the transmit power is `‖w‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: CVector,
}

impl Beamformer {
    pub fn new(w: CVector) -> Self {
        Self { w }
    }

    pub fn from_direction(direction: &CVector, power: f64) -> Self {
        let n = linalg::norm_sqr(direction).sqrt();
        if n == 0.0 || power <= 0.0 {
            return Self {
                w: CVector::zeros(direction.len()),
            };
        }
        Self {
            w: direction.scale(power.sqrt() / n),
        }
    }

    pub fn weights(&self) -> &CVector {
        &self.w
    }

    pub fn power(&self) -> f64 {
        linalg::norm_sqr(&self.w)
    }

    pub fn direction(&self) -> Option<CVector> {
        let n = self.power().sqrt();
        (n > 0.0).then(|| self.w.unscale(n))
    }

    pub fn covariance(&self) -> Covariance {
        Covariance::rank_one(&self.w)
    }

    /// `|hᴴw|²`, exact to rounding even when `w` is nearly orthogonal to `h`
    /// (unlike `hᴴ(wwᴴ)h`).
    pub fn gain(&self, h: &CVector) -> f64 {
        linalg::inner_accurate(h, &self.w).norm_sqr()
    }
}

/// Tuple of per-link energy efficiencies.
#[derive(Debug, Clone, PartialEq)]
pub struct EEPoint(pub Vec<f64>);

impl EEPoint {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scaled to bits per Joule.
    pub fn to_bits_per_joule(&self, bandwidth: f64) -> Vec<f64> {
        self.0.iter().map(|v| v * bandwidth).collect()
    }
}

fn check_covariances(scenario: &Scenario, covariances: &[Covariance]) -> Result<()> {
    if covariances.len() != scenario.links() {
        return Err(Error::Dimension(format!(
            "{} covariances for {} links",
            covariances.len(),
            scenario.links()
        )));
    }
    for (j, s) in covariances.iter().enumerate() {
        if s.dim() != scenario.antennas(j) {
            return Err(Error::Dimension(format!(
                "S_{j} is {}x{} but BS {j} has {} antennas",
                s.dim(),
                s.dim(),
                scenario.antennas(j)
            )));
        }
    }
    Ok(())
}

/// Interference received at MS `k` from all other BSs.
pub fn received_interference(scenario: &Scenario, covariances: &[Covariance], k: usize) -> Result<f64> {
    check_covariances(scenario, covariances)?;
    Ok((0..scenario.links())
        .filter(|&j| j != k)
        .map(|j| covariances[j].quad_form(scenario.channel(j, k)).max(0.0))
        .sum())
}

/// Rate of link `k` in bits/s/Hz with interference treated as noise.
pub fn achievable_rate(scenario: &Scenario, covariances: &[Covariance], k: usize) -> Result<f64> {
    if k >= scenario.links() {
        return Err(Error::Dimension(format!("link {k} out of range")));
    }
    let interference = received_interference(scenario, covariances, k)?;
    let signal = covariances[k].quad_form(scenario.channel(k, k)).max(0.0);
    Ok((signal / (interference + scenario.noise(k))).ln_1p() / LN_2)
}

/// `Tr(S)/η + P_c`.
pub fn total_power(s: &Covariance, amp_efficiency: f64, circuit_power: f64) -> Result<f64> {
    total_power_from_trace(s.trace(), amp_efficiency, circuit_power)
}

pub fn total_power_from_trace(trace: f64, amp_efficiency: f64, circuit_power: f64) -> Result<f64> {
    if !(amp_efficiency > 0.0) {
        return Err(Error::Config(format!(
            "amplifier efficiency must be positive, got {amp_efficiency}"
        )));
    }
    Ok(trace.max(0.0) / amp_efficiency + circuit_power)
}

/// Energy efficiency of link `k`. Returns 0 when both rate and power vanish.
pub fn link_ee(scenario: &Scenario, covariances: &[Covariance], k: usize) -> Result<f64> {
    let rate = achievable_rate(scenario, covariances, k)?;
    let power = total_power(&covariances[k], scenario.amp_efficiency(), scenario.circuit_power())?;
    if power == 0.0 {
        return Ok(0.0);
    }
    Ok(rate / power)
}

/// EE tuple of all links.
pub fn ee_point(scenario: &Scenario, covariances: &[Covariance]) -> Result<EEPoint> {
    (0..scenario.links())
        .map(|k| link_ee(scenario, covariances, k))
        .collect::<Result<Vec<_>>>()
        .map(EEPoint)
}

/// EE tuple of rank-one strategies, with every gain taken as `|hᴴw|²`.
pub fn ee_point_beams(scenario: &Scenario, beams: &[Beamformer]) -> Result<EEPoint> {
    let links = scenario.links();
    if beams.len() != links {
        return Err(Error::Dimension(format!(
            "{} beamformers for {links} links",
            beams.len()
        )));
    }
    for (k, b) in beams.iter().enumerate() {
        if b.weights().len() != scenario.antennas(k) {
            return Err(Error::Dimension(format!(
                "w_{k} has {} entries but BS {k} has {} antennas",
                b.weights().len(),
                scenario.antennas(k)
            )));
        }
    }
    let eta = scenario.amp_efficiency();
    (0..links)
        .map(|k| {
            let interference: f64 = (0..links)
                .filter(|&j| j != k)
                .map(|j| beams[j].gain(scenario.channel(j, k)))
                .sum();
            let rate = (beams[k].gain(scenario.channel(k, k)) / (interference + scenario.noise(k))).ln_1p() / LN_2;
            let power = total_power_from_trace(beams[k].power(), eta, scenario.circuit_power())?;
            Ok(if power == 0.0 { 0.0 } else { rate / power })
        })
        .collect::<Result<Vec<_>>>()
        .map(EEPoint)
}

/// `a` dominates `b` under the slack rule: every component of `a` is at
/// least `b_k − tol_k` and at least one exceeds `b_k + tol_k`.
fn dominates_with(a: &[f64], b: &[f64], tol: impl Fn(usize) -> f64) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for k in 0..a.len() {
        let t = tol(k);
        if a[k] < b[k] - t {
            return false;
        }
        if a[k] > b[k] + t {
            strict = true;
        }
    }
    strict
}

/// Absolute-tolerance dominance test.
pub fn dominates(a: &EEPoint, b: &EEPoint, tol: f64) -> bool {
    dominates_with(&a.0, &b.0, |_| tol)
}

/// Dominance with a tolerance relative to each component of `b`.
pub fn dominates_relative(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    dominates_with(a, b, |k| rel_tol * b[k].abs())
}

/// True iff some point in `others` dominates `candidate`.
pub fn is_pareto_dominated(candidate: &EEPoint, others: &[EEPoint], tol: f64) -> bool {
    others.iter().any(|o| dominates(o, candidate, tol))
}

/// Indices of the non-dominated subset of `points` (first occurrence kept
/// among exact duplicates).
pub fn non_dominated_indices(points: &[EEPoint], tol: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, p)| j != i && (dominates(p, &points[i], tol) || (j < i && p.0 == points[i].0)))
        })
        .collect()
}

/// Draws i.i.d. CN(0, 1) channels; cross channels are scaled by `√cross_gain`.
pub fn generate_channels(seed: u64, skeleton: &ScenarioSkeleton, cross_gain: f64) -> Result<Scenario> {
    if !(cross_gain >= 0.0 && cross_gain.is_finite()) {
        return Err(Error::Config(format!(
            "cross gain must be finite and >= 0, got {cross_gain}"
        )));
    }
    skeleton.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = skeleton.links();
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let cross_amp = cross_gain.sqrt();
    let mut channels = Vec::with_capacity(k);
    for j in 0..k {
        let mut row = Vec::with_capacity(k);
        for l in 0..k {
            let m = skeleton.antennas[j];
            let scale = if j == l { amp } else { amp * cross_amp };
            let h = CVector::from_fn(m, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re * scale, im * scale)
            });
            row.push(h);
        }
        channels.push(row);
    }
    Scenario::new(skeleton.clone(), channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn orthogonal_pair() -> Scenario {
        let sk = ScenarioSkeleton::uniform(2, 2, 1.0, 10.0, 0.0, 0.38, 1.0);
        let ch = vec![
            vec![cv(&[1.0, 0.0]), cv(&[0.0, 1.0])],
            vec![cv(&[0.0, 1.0]), cv(&[1.0, 0.0])],
        ];
        Scenario::new(sk, ch).unwrap()
    }

    #[test]
    fn rate_with_orthogonal_channels() {
        let sc = orthogonal_pair();
        let covs = [
            Covariance::diagonal(&[4.0, 0.0]).unwrap(),
            Covariance::diagonal(&[0.0, 3.0]).unwrap(),
        ];
        let r = achievable_rate(&sc, &covs, 0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_covariances_give_zero_rate() {
        let sc = orthogonal_pair();
        let covs = [Covariance::zeros(2), Covariance::zeros(2)];
        assert_eq!(achievable_rate(&sc, &covs, 1).unwrap(), 0.0);
        // P_c = 0 and S_k = 0 is the 0/0 case.
        assert_eq!(link_ee(&sc, &covs, 0).unwrap(), 0.0);
    }

    #[test]
    fn beam_gains_match_covariances() {
        let sk = ScenarioSkeleton::uniform(2, 3, 1.0, 10.0, 1.0, 0.38, 1.0);
        let sc = generate_channels(4, &sk, 1.0).unwrap();
        let beams = [
            Beamformer::from_direction(sc.channel(0, 0), 2.0),
            Beamformer::from_direction(sc.channel(1, 0), 0.5),
        ];
        let covs: Vec<Covariance> = beams.iter().map(Beamformer::covariance).collect();
        let a = ee_point_beams(&sc, &beams).unwrap();
        let b = ee_point(&sc, &covs).unwrap();
        for k in 0..2 {
            assert!((a.0[k] - b.0[k]).abs() <= 1e-13 * b.0[k]);
        }
    }

    #[test]
    fn null_steering_leaks_nothing() {
        let sc = orthogonal_pair();
        let w = Beamformer::new(cv(&[1e3, 0.0]));
        assert_eq!(w.gain(sc.channel(0, 1)), 0.0);
        assert_eq!(w.gain(sc.channel(0, 0)), 1e6);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sc = orthogonal_pair();
        let covs = [Covariance::zeros(3), Covariance::zeros(2)];
        assert!(matches!(achievable_rate(&sc, &covs, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn total_power_examples() {
        let s = Covariance::diagonal(&[3.8]).unwrap();
        assert!((total_power(&s, 0.38, 10.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(total_power(&Covariance::zeros(3), 0.38, 294.5).unwrap(), 294.5);
        let p43 = 10f64.powf(4.3) * 1e-3;
        let s = Covariance::diagonal(&[p43]).unwrap();
        assert!((total_power(&s, 0.38, 294.5).unwrap() - 347.0).abs() < 0.2);
        assert!(matches!(total_power(&s, 0.0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn ee_is_rate_over_power() {
        let sc = orthogonal_pair().with_circuit_power(20.0 - 4.0 / 0.38).unwrap();
        let covs = [
            Covariance::diagonal(&[4.0, 0.0]).unwrap(),
            Covariance::diagonal(&[0.0, 3.0]).unwrap(),
        ];
        assert!((link_ee(&sc, &covs, 0).unwrap() - 0.05).abs() < 1e-14);
        let sc = sc.with_circuit_power(5.0).unwrap();
        let covs = [Covariance::zeros(2), Covariance::diagonal(&[0.0, 3.0]).unwrap()];
        assert_eq!(link_ee(&sc, &covs, 0).unwrap(), 0.0);
    }

    #[test]
    fn dominance_examples() {
        let c = EEPoint(vec![1.0, 1.0]);
        assert!(is_pareto_dominated(&c, &[EEPoint(vec![2.0, 2.0])], 0.0));
        assert!(!is_pareto_dominated(&c, &[EEPoint(vec![2.0, 0.5])], 0.0));
        assert!(!is_pareto_dominated(&c, &[EEPoint(vec![1.0, 1.0])], 0.0));
    }

    #[test]
    fn non_dominated_filter_keeps_front() {
        let pts = vec![
            EEPoint(vec![1.0, 3.0]),
            EEPoint(vec![2.0, 2.0]),
            EEPoint(vec![1.5, 1.5]),
            EEPoint(vec![3.0, 1.0]),
            EEPoint(vec![2.0, 2.0]),
        ];
        assert_eq!(non_dominated_indices(&pts, 0.0), vec![0, 1, 3]);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let mut sk = ScenarioSkeleton::uniform(2, 2, 1.0, 1.0, 0.0, 0.38, 1.0);
        sk.amp_efficiency = 1.5;
        assert!(generate_channels(1, &sk, 1.0).is_err());
        let sk = ScenarioSkeleton::uniform(2, 2, 0.0, 1.0, 0.0, 0.38, 1.0);
        assert!(generate_channels(1, &sk, 1.0).is_err());
        let sk = ScenarioSkeleton::uniform(2, 2, 1.0, f64::INFINITY, 0.0, 0.38, 1.0);
        assert!(generate_channels(1, &sk, 1.0).is_ok());
        let sk = ScenarioSkeleton::uniform(2, 2, 1.0, 1.0, 0.0, 0.38, 1.0);
        let bad = vec![
            vec![cv(&[1.0]), cv(&[1.0, 0.0])],
            vec![cv(&[1.0, 0.0]), cv(&[1.0, 0.0])],
        ];
        assert!(matches!(Scenario::new(sk, bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn covariance_validation() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
            ],
        );
        assert!(Covariance::new(m).is_err());
        assert!(Covariance::diagonal(&[1.0, -0.5]).is_err());
        assert!(Covariance::diagonal(&[1.0, 0.5]).is_ok());
    }

    #[test]
    fn channel_generation_is_deterministic() {
        let sk = ScenarioSkeleton::uniform(2, 3, 1e-14, 20.0, 294.5, 0.38, 5e6);
        let a = generate_channels(42, &sk, 0.5).unwrap();
        let b = generate_channels(42, &sk, 0.5).unwrap();
        assert_eq!(a, b);
        let z = generate_channels(42, &sk, 0.0).unwrap();
        assert!(z.channel(0, 1).iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert!(z.channel(1, 0).iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert!(linalg::norm_sqr(z.channel(0, 0)) > 0.0);
    }

    #[test]
    fn direct_gain_has_unit_variance_per_antenna() {
        let sk = ScenarioSkeleton::uniform(2, 3, 1.0, 1.0, 1.0, 0.38, 1.0);
        let n = 10_000u64;
        let mut acc = 0.0;
        for seed in 0..n {
            let sc = generate_channels(seed, &sk, 1.0).unwrap();
            acc += linalg::norm_sqr(sc.channel(0, 0));
        }
        let mean = acc / n as f64;
        assert!((mean - 3.0).abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn beamformer_power_matches_norm() {
        let d = cv(&[3.0, 4.0]);
        let b = Beamformer::from_direction(&d, 2.5);
        assert!((b.power() - 2.5).abs() < 1e-14);
        assert!((b.covariance().trace() - 2.5).abs() < 1e-14);
        assert!(b.covariance().rank_one_residual() < 1e-12);
    }
}
