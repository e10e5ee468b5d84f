use serde::{Deserialize, Serialize};

/// Joint outcome tallies of a two-wing experiment, outcomes `±1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStats {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub trials: u64,
    /// Frequencies in the order `++`, `+−`, `−+`, `−−`.
    pub frequencies: [f64; 4],
    /// `[n(++) + n(−−) − n(+−) − n(−+)] / trials`.
    pub correlation: f64,
    pub correlation_se: f64,
    pub p_same: f64,
    pub p_same_se: f64,
    pub marginal_a_plus: f64,
    pub marginal_b_plus: f64,
    pub marginal_se: f64,
}

impl JointStats {
    pub fn from_counts(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        let trials = n_pp + n_pm + n_mp + n_mm;
        let n = trials.max(1) as f64;
        let frequencies = [n_pp, n_pm, n_mp, n_mm].map(|c| c as f64 / n);
        let correlation = (n_pp as f64 + n_mm as f64 - n_pm as f64 - n_mp as f64) / n;
        let p_same = (n_pp + n_mm) as f64 / n;
        let se = |p: f64| (p * (1.0 - p) / n).sqrt();
        Self {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
            trials,
            frequencies,
            correlation,
            // E = 2·p_same − 1, so its standard error is twice that of p_same.
            correlation_se: 2.0 * se(p_same),
            p_same,
            p_same_se: se(p_same),
            marginal_a_plus: (n_pp + n_pm) as f64 / n,
            marginal_b_plus: (n_pp + n_mp) as f64 / n,
            marginal_se: se(0.5),
        }
    }

    /// Tallies `(wing a, wing b)` outcome pairs.
    pub fn from_outcomes(pairs: impl IntoIterator<Item = (i8, i8)>) -> Self {
        let mut c = [0u64; 4];
        for (a, b) in pairs {
            let i = match (a > 0, b > 0) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            c[i] += 1;
        }
        Self::from_counts(c[0], c[1], c[2], c[3])
    }

    pub fn differing(&self) -> u64 {
        self.n_pm + self.n_mp
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }
}

/// `½ Σ |p_i − q_i|` between two count vectors, each normalized by its own
/// total.
pub fn total_variation(p: &[u64], q: &[u64]) -> f64 {
    let sp: u64 = p.iter().sum();
    let sq: u64 = q.iter().sum();
    let n = p.len().max(q.len());
    let at = |v: &[u64], i: usize, s: u64| v.get(i).map_or(0.0, |&c| c as f64 / s.max(1) as f64);
    0.5 * (0..n).map(|i| (at(p, i, sp) - at(q, i, sq)).abs()).sum::<f64>()
}
