//! Two pendulums coupled by a spring, in the two symmetric starting
//! configurations.
//!
//! Three trajectories are produced side by side:
//!
//! * the closed-form laws as stated for the non-local model, where both
//!   modes oscillate at `ω' = (ω² + 2k/m)^½`;
//! * a local refinement: each pendulum feels only its own restoring force
//!   and the spring force, integrated with velocity Verlet;
//! * the textbook normal mode (`ω` in phase, `ω'` anti-phase), the oracle
//!   the other two are measured against.
//!
//! The in-phase closed form therefore deviates from the normal mode whenever
//! `k > 0`.

use serde::{Deserialize, Serialize};

use super::{invalid, ExperimentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PendulumMode {
    /// `x_a(0) = x_b(0) = C`.
    InPhase,
    /// `x_a(0) = −x_b(0) = C`.
    AntiPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumConfig {
    pub mode: PendulumMode,
    pub m: f64,
    pub omega: f64,
    pub k: f64,
    /// Initial amplitude C.
    pub c: f64,
    /// Duration in periods of the mode.
    pub periods: f64,
    pub steps: u64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            mode: PendulumMode::AntiPhase,
            m: 1.0,
            omega: 1.0,
            k: 0.5,
            c: 1.0,
            periods: 10.0,
            steps: 10_000,
        }
    }
}

impl PendulumConfig {
    pub fn omega_prime(&self) -> f64 {
        (self.omega * self.omega + 2.0 * self.k / self.m).sqrt()
    }

    /// Frequency of the normal mode selected by `mode`.
    pub fn mode_frequency(&self) -> f64 {
        match self.mode {
            PendulumMode::InPhase => self.omega,
            PendulumMode::AntiPhase => self.omega_prime(),
        }
    }

    pub fn delta_t(&self) -> f64 {
        self.periods * 2.0 * std::f64::consts::PI / self.mode_frequency() / self.steps as f64
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        for (name, v) in [("m", self.m), ("omega", self.omega), ("periods", self.periods)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(invalid("k", format!("must be non-negative, got {}", self.k)));
        }
        if !(self.c.is_finite() && self.c != 0.0) {
            return Err(invalid("c", format!("must be finite and non-zero, got {}", self.c)));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        // Verlet is stable for ω·Δt < 2 at the fastest mode.
        let product = self.omega_prime() * self.delta_t();
        if product >= 2.0 {
            return Err(ExperimentError::UnstableStep {
                delta_t: self.delta_t(),
                product,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumSample {
    pub t: f64,
    pub local: [f64; 2],
    pub closed_form: [f64; 2],
    pub normal_mode: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumResult {
    pub config: PendulumConfig,
    pub omega_prime: f64,
    pub mode_frequency: f64,
    pub delta_t: f64,
    pub samples: Vec<PendulumSample>,
    /// `max |local − normal mode| / |C|`.
    pub local_deviation: f64,
    /// `max |closed form − normal mode| / |C|`.
    pub closed_form_deviation: f64,
}

impl PendulumResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,local_a,local_b,closed_a,closed_b,normal_a,normal_b\n");
        for p in &self.samples {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.t, p.local[0], p.local[1], p.closed_form[0], p.closed_form[1], p.normal_mode[0], p.normal_mode[1]
            ));
        }
        s
    }
}

pub fn run_pendulum(cfg: &PendulumConfig) -> Result<PendulumResult, ExperimentError> {
    cfg.validate()?;
    let sign = match cfg.mode {
        PendulumMode::InPhase => 1.0,
        PendulumMode::AntiPhase => -1.0,
    };
    let dt = cfg.delta_t();
    let w2 = cfg.omega * cfg.omega;
    let coupling = cfg.k / cfg.m;
    let accel = |x: [f64; 2]| {
        [
            -w2 * x[0] - coupling * (x[0] - x[1]),
            -w2 * x[1] - coupling * (x[1] - x[0]),
        ]
    };
    let wp = cfg.omega_prime();
    let wn = cfg.mode_frequency();
    let pair = |w: f64, t: f64| {
        let x = cfg.c * (w * t).cos();
        [x, sign * x]
    };

    let mut x = [cfg.c, sign * cfg.c];
    let mut v = [0.0; 2];
    let mut a = accel(x);
    let mut samples = Vec::with_capacity(cfg.steps as usize + 1);
    let (mut local_dev, mut closed_dev) = (0.0f64, 0.0f64);
    for n in 0..=cfg.steps {
        let t = n as f64 * dt;
        if n > 0 {
            for i in 0..2 {
                x[i] += v[i] * dt + 0.5 * a[i] * dt * dt;
            }
            let next = accel(x);
            for i in 0..2 {
                v[i] += 0.5 * (a[i] + next[i]) * dt;
            }
            a = next;
        }
        let s = PendulumSample {
            t,
            local: x,
            closed_form: pair(wp, t),
            normal_mode: pair(wn, t),
        };
        for i in 0..2 {
            local_dev = local_dev.max((s.local[i] - s.normal_mode[i]).abs());
            closed_dev = closed_dev.max((s.closed_form[i] - s.normal_mode[i]).abs());
        }
        samples.push(s);
    }
    Ok(PendulumResult {
        config: *cfg,
        omega_prime: wp,
        mode_frequency: wn,
        delta_t: dt,
        samples,
        local_deviation: local_dev / cfg.c.abs(),
        closed_form_deviation: closed_dev / cfg.c.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: PendulumMode, k: f64) -> PendulumConfig {
        PendulumConfig {
            mode,
            k,
            ..Default::default()
        }
    }

    #[test]
    fn decoupled_pendulums() {
        for mode in [PendulumMode::InPhase, PendulumMode::AntiPhase] {
            let r = run_pendulum(&cfg(mode, 0.0)).unwrap();
            assert_eq!(r.omega_prime, 1.0);
            assert!(r.local_deviation < 1e-3);
            assert_eq!(r.closed_form_deviation, 0.0);
        }
    }

    #[test]
    fn anti_phase_follows_omega_prime() {
        let r = run_pendulum(&cfg(PendulumMode::AntiPhase, 0.5)).unwrap();
        assert!((r.omega_prime - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.local_deviation < 1e-3, "{}", r.local_deviation);
        assert_eq!(r.closed_form_deviation, 0.0);
    }

    #[test]
    fn in_phase_closed_form_disagrees_with_normal_mode() {
        let r = run_pendulum(&cfg(PendulumMode::InPhase, 0.5)).unwrap();
        assert!(r.local_deviation < 1e-3);
        assert!(r.closed_form_deviation > 0.5);
    }

    #[test]
    fn error_shrinks_with_step() {
        let coarse = run_pendulum(&PendulumConfig {
            steps: 1000,
            ..cfg(PendulumMode::AntiPhase, 0.5)
        })
        .unwrap();
        let fine = run_pendulum(&cfg(PendulumMode::AntiPhase, 0.5)).unwrap();
        // Second-order scheme: ten times the steps, about a hundredth of the error.
        let ratio = coarse.local_deviation / fine.local_deviation;
        assert!((80.0..120.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn unstable_step_rejected() {
        let e = run_pendulum(&PendulumConfig {
            steps: 2,
            ..cfg(PendulumMode::InPhase, 10.0)
        })
        .unwrap_err();
        assert!(matches!(e, ExperimentError::UnstableStep { .. }));
    }

    #[test]
    fn csv_rows() {
        let r = run_pendulum(&PendulumConfig {
            steps: 10,
            periods: 0.01,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.to_csv().lines().count(), 12);
    }
}
