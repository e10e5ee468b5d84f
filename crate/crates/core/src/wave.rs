//! One-dimensional wave equation integrated as a cellular automaton.
//!
//! The update is the standard explicit leapfrog scheme:
//!
//! ```text
//! d2x   = (ψ[i+1] − 2ψ[i] + ψ[i−1]) / Δx²
//! d2t   = v² · d2x
//! ψ'[i] = d2t · Δt² + 2ψ[i] − ψ_prev[i]
//! ```
//!
//! Every cell is written from cells `i−1`, `i`, `i+1` of the current and
//! previous grids only, so the update is space-point local.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Law;
use crate::locality::AccessFootprint;
use crate::state::{FieldGrid, FieldValues, SystemState};

/// Field ids used by [`wave_law`].
pub const PSI_FIELD: &str = "psi";
pub const PSI_PREV_FIELD: &str = "psi-prev";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("grid needs at least 3 cells, got {0}")]
    TooShort(usize),
    #[error("psi has {now} cells but {other} has {found}")]
    LengthMismatch {
        now: usize,
        other: &'static str,
        found: usize,
    },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("Courant number {0} exceeds 1")]
    Unstable(f64),
    #[error("grid holds a non-finite value")]
    NonFinite,
    #[error("trajectory shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("missing real field `{0}`")]
    MissingField(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// The last cell neighbours the first.
    #[default]
    Periodic,
    /// The two end cells are held at zero.
    FixedZero,
}

/// The three difference terms of the update at one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilTerms {
    /// Centred first difference. Part of the discretization, not used by the
    /// update.
    pub first_dx: f64,
    pub second_dx: f64,
    pub second_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub psi: Vec<f64>,
    pub psi_prev: Vec<f64>,
    pub speed: f64,
    pub delta_x: f64,
    pub delta_t: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

/// One read made by the logged update: the cell written and the neighbour
/// offset read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellAccess {
    pub cell: usize,
    pub offset: i64,
    pub previous: bool,
}

impl WaveGrid {
    /// Grid with `psi_prev` given explicitly.
    pub fn with_prev(
        psi: Vec<f64>,
        psi_prev: Vec<f64>,
        speed: f64,
        delta_x: f64,
        delta_t: f64,
        boundary: Boundary,
    ) -> Result<Self, WaveError> {
        let grid = Self {
            psi,
            psi_prev,
            speed,
            delta_x,
            delta_t,
            boundary,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid at rest: `psi_prev = psi`.
    pub fn new(
        psi: Vec<f64>,
        speed: f64,
        delta_x: f64,
        delta_t: f64,
        boundary: Boundary,
    ) -> Result<Self, WaveError> {
        let prev = psi.clone();
        Self::with_prev(psi, prev, speed, delta_x, delta_t, boundary)
    }

    /// Leapfrog bootstrap from an initial velocity: `ψ(−Δt) = ψ(0) − Δt·v`.
    pub fn from_velocity(
        psi: Vec<f64>,
        velocity: &[f64],
        speed: f64,
        delta_x: f64,
        delta_t: f64,
        boundary: Boundary,
    ) -> Result<Self, WaveError> {
        if velocity.len() != psi.len() {
            return Err(WaveError::LengthMismatch {
                now: psi.len(),
                other: "velocity",
                found: velocity.len(),
            });
        }
        let prev = psi
            .iter()
            .zip(velocity)
            .map(|(p, v)| p - delta_t * v)
            .collect();
        Self::with_prev(psi, prev, speed, delta_x, delta_t, boundary)
    }

    pub fn validate(&self) -> Result<(), WaveError> {
        let n = self.psi.len();
        if n < 3 {
            return Err(WaveError::TooShort(n));
        }
        if self.psi_prev.len() != n {
            return Err(WaveError::LengthMismatch {
                now: n,
                other: "psi_prev",
                found: self.psi_prev.len(),
            });
        }
        for (name, value) in [
            ("speed", self.speed),
            ("delta_x", self.delta_x),
            ("delta_t", self.delta_t),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(WaveError::NonPositive { name, value });
            }
        }
        let c = self.courant();
        if c > 1.0 + 1e-12 {
            return Err(WaveError::Unstable(c));
        }
        if !self.psi.iter().chain(&self.psi_prev).all(|v| v.is_finite()) {
            return Err(WaveError::NonFinite);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// `v·Δt/Δx`.
    pub fn courant(&self) -> f64 {
        self.speed * self.delta_t / self.delta_x
    }

    fn is_boundary(&self, i: usize) -> bool {
        self.boundary == Boundary::FixedZero && (i == 0 || i + 1 == self.len())
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        let n = self.len();
        ((i + n - 1) % n, (i + 1) % n)
    }

    /// Difference terms at interior cell `i` (any cell when periodic).
    pub fn stencil_terms(&self, i: usize) -> StencilTerms {
        self.terms_via(i, &mut |j| self.psi[j])
    }

    fn terms_via(&self, i: usize, read: &mut impl FnMut(usize) -> f64) -> StencilTerms {
        let (l, r) = self.neighbours(i);
        let (left, centre, right) = (read(l), read(i), read(r));
        let first_dx = (right - left) / (2.0 * self.delta_x);
        let second_dx = (right - 2.0 * centre + left) / (self.delta_x * self.delta_x);
        StencilTerms {
            first_dx,
            second_dx,
            second_dt: self.speed * self.speed * second_dx,
        }
    }

    fn update_via(
        &self,
        i: usize,
        read: &mut impl FnMut(usize) -> f64,
        read_prev: &mut impl FnMut(usize) -> f64,
    ) -> f64 {
        if self.is_boundary(i) {
            return 0.0;
        }
        let terms = self.terms_via(i, read);
        terms.second_dt * self.delta_t * self.delta_t + 2.0 * read(i) - read_prev(i)
    }

    /// One synchronous update of every cell.
    pub fn step(&self) -> WaveGrid {
        let next = (0..self.len())
            .map(|i| self.update_via(i, &mut |j| self.psi[j], &mut |j| self.psi_prev[j]))
            .collect();
        WaveGrid {
            psi: next,
            psi_prev: self.psi.clone(),
            ..*self
        }
    }

    /// [`step`](Self::step) that also records every cell it reads, as an
    /// offset from the cell being written (wrapping counts as ±1).
    pub fn step_logged(&self, log: &mut Vec<CellAccess>) -> WaveGrid {
        let n = self.len() as i64;
        let offset = |cell: usize, j: usize| {
            let d = (j as i64 - cell as i64).rem_euclid(n);
            if d > n / 2 {
                d - n
            } else {
                d
            }
        };
        let mut next = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let mut now_reads = Vec::new();
            let mut prev_reads = Vec::new();
            let value = self.update_via(
                i,
                &mut |j| {
                    now_reads.push(j);
                    self.psi[j]
                },
                &mut |j| {
                    prev_reads.push(j);
                    self.psi_prev[j]
                },
            );
            for (reads, previous) in [(now_reads, false), (prev_reads, true)] {
                log.extend(reads.into_iter().map(|j| CellAccess {
                    cell: i,
                    offset: offset(i, j),
                    previous,
                }));
            }
            next.push(value);
        }
        WaveGrid {
            psi: next,
            psi_prev: self.psi.clone(),
            ..*self
        }
    }

    /// Swaps current and previous grids, running time backwards.
    pub fn time_reversed(&self) -> WaveGrid {
        WaveGrid {
            psi: self.psi_prev.clone(),
            psi_prev: self.psi.clone(),
            ..*self
        }
    }

    /// `Σ[(ψ−ψ_prev)²/Δt² + v²((ψ[i+1]−ψ[i])/Δx)²]`.
    pub fn discrete_energy(&self) -> f64 {
        let n = self.len();
        let links = match self.boundary {
            Boundary::Periodic => n,
            Boundary::FixedZero => n - 1,
        };
        let kinetic: f64 = self
            .psi
            .iter()
            .zip(&self.psi_prev)
            .map(|(a, b)| ((a - b) / self.delta_t).powi(2))
            .sum();
        let potential: f64 = (0..links)
            .map(|i| {
                let d = (self.psi[(i + 1) % n] - self.psi[i]) / self.delta_x;
                self.speed * self.speed * d * d
            })
            .sum();
        kinetic + potential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub delta_x: f64,
    pub delta_t: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    /// Samples `f(x, t)` at the same steps and cells as `like`.
    pub fn sample(like: &Trajectory, f: impl Fn(f64, f64) -> f64) -> Trajectory {
        let snapshots = like
            .snapshots
            .iter()
            .map(|s| Snapshot {
                step: s.step,
                t: s.t,
                psi: (0..s.psi.len())
                    .map(|i| f(i as f64 * like.delta_x, s.t))
                    .collect(),
            })
            .collect();
        Trajectory {
            delta_x: like.delta_x,
            delta_t: like.delta_t,
            snapshots,
        }
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory holds the initial snapshot")
    }

    /// CSV with header `t,cell,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cell,value\n");
        for s in &self.snapshots {
            for (i, v) in s.psi.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", s.t, i, v);
            }
        }
        out
    }
}

/// Runs `steps` updates, keeping every `stride`-th grid and the final one.
pub fn run_wave(init: &WaveGrid, steps: u64, stride: u64) -> Trajectory {
    let stride = stride.max(1);
    let mut grid = init.clone();
    let snap = |k: u64, g: &WaveGrid| Snapshot {
        step: k,
        t: k as f64 * g.delta_t,
        psi: g.psi.clone(),
    };
    let mut snapshots = vec![snap(0, &grid)];
    for k in 1..=steps {
        grid = grid.step();
        if k % stride == 0 || k == steps {
            snapshots.push(snap(k, &grid));
        }
    }
    Trajectory {
        delta_x: init.delta_x,
        delta_t: init.delta_t,
        snapshots,
    }
}

/// Runs `steps` updates and returns only the final grid.
pub fn advance(init: &WaveGrid, steps: u64) -> WaveGrid {
    let mut grid = init.clone();
    for _ in 0..steps {
        grid = grid.step();
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// Root mean square difference over every compared value.
    pub l2: f64,
    pub max: f64,
}

pub fn compare_analytic(trajectory: &Trajectory, analytic: &Trajectory) -> Result<ErrorNorms, WaveError> {
    if trajectory.snapshots.len() != analytic.snapshots.len() {
        return Err(WaveError::ShapeMismatch(format!(
            "{} snapshots vs {}",
            trajectory.snapshots.len(),
            analytic.snapshots.len()
        )));
    }
    let (mut sum, mut max, mut count) = (0.0f64, 0.0f64, 0usize);
    for (a, b) in trajectory.snapshots.iter().zip(&analytic.snapshots) {
        if a.psi.len() != b.psi.len() || a.step != b.step {
            return Err(WaveError::ShapeMismatch(format!(
                "snapshot at step {} has {} cells, other at step {} has {}",
                a.step,
                a.psi.len(),
                b.step,
                b.psi.len()
            )));
        }
        for (x, y) in a.psi.iter().zip(&b.psi) {
            let d = (x - y).abs();
            sum += d * d;
            max = max.max(d);
            count += 1;
        }
    }
    let l2 = if count == 0 { 0.0 } else { (sum / count as f64).sqrt() };
    Ok(ErrorNorms { l2, max })
}

/// Gaussian `exp(−(x−centre)²/(2σ²))` on a periodic domain of length `period`,
/// using the nearest image.
pub fn periodic_gaussian(x: f64, centre: f64, sigma: f64, period: f64) -> f64 {
    let d = (x - centre).rem_euclid(period);
    let d = d.min(period - d);
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Engine law running the update over the real fields `psi` and `psi-prev`
/// of a one-dimensional state.
pub fn wave_law(speed: f64, boundary: Boundary) -> Law {
    Law::new(
        "wave-update",
        |_| true,
        move |state: &mut SystemState| {
            let grid = grid_from_state(state, speed, boundary)?;
            let next = grid.step();
            set_real(state, PSI_FIELD, next.psi)?;
            set_real(state, PSI_PREV_FIELD, next.psi_prev)?;
            Ok::<(), WaveError>(())
        },
        AccessFootprint::stencil(1),
    )
}

fn real_field(state: &SystemState, id: &'static str) -> Result<Vec<f64>, WaveError> {
    match state.field(id).map(|f| &f.values) {
        Some(FieldValues::Real(v)) => Ok(v.clone()),
        _ => Err(WaveError::MissingField(id)),
    }
}

fn set_real(state: &mut SystemState, id: &'static str, values: Vec<f64>) -> Result<(), WaveError> {
    let field = state.field_mut(id).ok_or(WaveError::MissingField(id))?;
    field.values = FieldValues::Real(values);
    Ok(())
}

/// Reads the wave fields of `state` into a grid.
pub fn grid_from_state(state: &SystemState, speed: f64, boundary: Boundary) -> Result<WaveGrid, WaveError> {
    WaveGrid::with_prev(
        real_field(state, PSI_FIELD)?,
        real_field(state, PSI_PREV_FIELD)?,
        speed,
        state.space.delta_x(),
        state.clock().delta_t(),
        boundary,
    )
}

/// Adds the `psi`/`psi-prev` fields of `grid` to a state.
pub fn install_grid(state: &mut SystemState, grid: &WaveGrid) -> Result<(), crate::state::StateError> {
    state.add_field(FieldGrid::real(PSI_FIELD, &state.space, grid.psi.clone())?)?;
    state.add_field(FieldGrid::real(PSI_PREV_FIELD, &state.space, grid.psi_prev.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(psi: Vec<f64>, courant: f64, boundary: Boundary) -> WaveGrid {
        WaveGrid::new(psi, 1.0, 1.0, courant, boundary).unwrap()
    }

    #[test]
    fn constant_stays_constant() {
        let g = grid(vec![2.5; 10], 0.7, Boundary::Periodic);
        assert_eq!(g.step().psi, vec![2.5; 10]);
    }

    #[test]
    fn bump_splits_at_courant_one() {
        let mut psi = vec![0.0; 7];
        psi[3] = 1.0;
        let next = grid(psi, 1.0, Boundary::Periodic).step();
        // d2t·Δt² = ψ[i+1] − 2ψ[i] + ψ[i−1] at Courant 1, so
        // ψ' = ψ[i+1] + ψ[i−1] − ψ_prev[i].
        assert_eq!(next.psi, vec![0.0, 0.0, 1.0, -1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn construction_checks() {
        assert_eq!(
            WaveGrid::new(vec![0.0; 2], 1.0, 1.0, 1.0, Boundary::Periodic),
            Err(WaveError::TooShort(2))
        );
        assert!(matches!(
            WaveGrid::new(vec![0.0; 5], 1.0, 1.0, 1.5, Boundary::Periodic),
            Err(WaveError::Unstable(_))
        ));
        assert!(matches!(
            WaveGrid::new(vec![0.0; 5], 1.0, 0.0, 1.0, Boundary::Periodic),
            Err(WaveError::NonPositive { name: "delta_x", .. })
        ));
        assert!(matches!(
            WaveGrid::with_prev(vec![0.0; 5], vec![0.0; 4], 1.0, 1.0, 1.0, Boundary::Periodic),
            Err(WaveError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn fixed_boundary_holds_ends_at_zero() {
        let g = grid(vec![0.0, 1.0, 2.0, 1.0, 0.0], 0.5, Boundary::FixedZero);
        let n = advance(&g, 17);
        assert_eq!(n.psi[0], 0.0);
        assert_eq!(n.psi[4], 0.0);
    }

    #[test]
    fn zero_steps_is_initial_only() {
        let g = grid(vec![0.0, 1.0, 0.0, 0.0], 1.0, Boundary::Periodic);
        let t = run_wave(&g, 0, 1);
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].psi, g.psi);
    }

    #[test]
    fn stride_keeps_final_snapshot() {
        let g = grid(vec![0.0, 1.0, 0.0, 0.0], 1.0, Boundary::Periodic);
        let t = run_wave(&g, 10, 4);
        let steps: Vec<u64> = t.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 4, 8, 10]);
        assert_eq!(t.last().t, 10.0);
    }

    #[test]
    fn compare_self_is_zero_and_shape_checked() {
        let g = grid(vec![0.0, 1.0, 0.5, 0.0], 0.5, Boundary::Periodic);
        let t = run_wave(&g, 5, 1);
        assert_eq!(compare_analytic(&t, &t).unwrap(), ErrorNorms { l2: 0.0, max: 0.0 });
        let shorter = run_wave(&g, 4, 1);
        assert!(compare_analytic(&t, &shorter).is_err());
    }

    #[test]
    fn first_difference_is_computed() {
        let g = grid(vec![0.0, 1.0, 3.0, 0.0], 0.5, Boundary::Periodic);
        assert_eq!(g.stencil_terms(1).first_dx, 1.5);
    }

    #[test]
    fn csv_layout() {
        let g = grid(vec![0.0, 1.0, 0.0], 1.0, Boundary::Periodic);
        let csv = run_wave(&g, 1, 1).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,cell,value");
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[4], "1,0,1");
    }

    fn arb_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 8)
    }

    proptest! {
        #[test]
        fn update_is_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            g1 in arb_values(), p1 in arb_values(),
            g2 in arb_values(), p2 in arb_values(),
            courant in 0.1f64..1.0,
        ) {
            let mk = |psi: Vec<f64>, prev: Vec<f64>| {
                WaveGrid::with_prev(psi, prev, 1.0, 1.0, courant, Boundary::FixedZero).unwrap()
            };
            let combine = |x: &[f64], y: &[f64]| -> Vec<f64> {
                x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
            };
            let s1 = mk(g1.clone(), p1.clone()).step();
            let s2 = mk(g2.clone(), p2.clone()).step();
            let mixed = mk(combine(&g1, &g2), combine(&p1, &p2)).step();
            for (m, e) in mixed.psi.iter().zip(combine(&s1.psi, &s2.psi)) {
                prop_assert!((m - e).abs() < 1e-12 * (1.0 + e.abs()));
            }
        }

        #[test]
        fn stepping_reversed_grid_recovers_previous(
            psi in arb_values(), prev in arb_values(), courant in 0.1f64..1.0,
        ) {
            let g = WaveGrid::with_prev(psi, prev, 1.0, 1.0, courant, Boundary::Periodic).unwrap();
            let back = g.step().time_reversed().step();
            for (x, y) in back.psi.iter().zip(&g.psi_prev) {
                prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
