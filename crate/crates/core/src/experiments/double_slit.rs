//! Two-slit interference and its loss under a which-path interaction.
//!
//! Lattice of 3 × M cells: the electron starts at x=1 as a two-path object,
//! one path per slit. A free step fans every path out over the M screen
//! cells at x=2, with phase `k·r` from the configured slit-to-cell distance
//! `r`; paths that land on the same cell merge and their amplitudes add. The
//! screen at x=2 then picks one cell with probability `|amplitude|²`.
//!
//! With the marker on, a marker object covering both slit cells interacts
//! with the electron first. The interaction keeps only the path it touched,
//! so nothing is left to interfere.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{invalid, map_trials, ExperimentError, Runtime, Simulator, World};
use crate::interaction::{InteractionObject, OutcomeState, OutcomeTable};
use crate::physics::{Environment, Physics};
use crate::rng::RngState;
use crate::state::{Complex, ObjectId, ParticleInfo, Path, PathState, QuantumObject, Space, SpacePoint};
use crate::Error;

pub const ELECTRON: &str = "electron";
pub const SCREEN: &str = "screen";
pub const MARKER: &str = "marker";
pub const MARK: &str = "mark";
pub const HIT: &str = "hit";

const SLIT_X: usize = 1;
const SCREEN_X: usize = 2;
const MAX_STEPS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    /// Screen cells M (odd, so that one cell sits on the axis).
    pub cells: usize,
    pub wavelength: f64,
    /// Distance between the slits.
    pub separation: f64,
    /// Slit plane to screen.
    pub distance: f64,
    /// Screen cell pitch.
    pub pitch: f64,
    pub amplitudes: [Complex; 2],
}

impl Default for SlitGeometry {
    fn default() -> Self {
        let a = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            cells: 11,
            wavelength: 1.0,
            separation: 25.0,
            distance: 100.0,
            pitch: 1.0,
            amplitudes: [a, a],
        }
    }
}

impl SlitGeometry {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.cells < 5 || self.cells % 2 == 0 {
            return Err(invalid("cells", format!("need an odd count of at least 5, got {}", self.cells)));
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("separation", self.separation),
            ("distance", self.distance),
            ("pitch", self.pitch),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        let norm: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("amplitudes", "must not both be zero"));
        }
        Ok(())
    }

    fn centre(&self) -> usize {
        (self.cells - 1) / 2
    }

    /// Lattice cells standing in for the two slits.
    pub fn slit_cells(&self) -> [SpacePoint; 2] {
        let c = self.centre();
        [SpacePoint::xy(SLIT_X, c - 2), SpacePoint::xy(SLIT_X, c + 2)]
    }

    /// Physical screen coordinate of cell `j`.
    pub fn cell_y(&self, j: usize) -> f64 {
        (j as f64 - self.centre() as f64) * self.pitch
    }

    /// `e^{ikr}` from slit `s` to screen cell `j`.
    pub fn phase(&self, slit: usize, j: usize) -> Complex {
        let ys = if slit == 0 { -self.separation / 2.0 } else { self.separation / 2.0 };
        let r = self.distance.hypot(self.cell_y(j) - ys);
        Complex::from_polar(1.0, 2.0 * PI / self.wavelength * r)
    }

    fn branch(&self, slit: usize, j: usize) -> Complex {
        self.amplitudes[slit] * self.phase(slit, j)
    }

    /// `|ψ₁ + ψ₂|²` per cell, normalized.
    pub fn coherent(&self) -> Vec<f64> {
        normalized((0..self.cells).map(|j| (self.branch(0, j) + self.branch(1, j)).norm_sqr()))
    }

    /// `|ψ₁|² + |ψ₂|²` per cell, normalized.
    pub fn incoherent(&self) -> Vec<f64> {
        normalized((0..self.cells).map(|j| self.branch(0, j).norm_sqr() + self.branch(1, j).norm_sqr()))
    }
}

fn normalized(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, Default)]
pub struct DoubleSlitPhysics {
    pub geometry: SlitGeometry,
}

impl DoubleSlitPhysics {
    fn slit_of(&self, p: SpacePoint) -> usize {
        usize::from(p.0[1] > self.geometry.centre())
    }
}

impl Physics for DoubleSlitPhysics {
    fn evolve(&self, obj: &mut QuantumObject, _env: &Environment<'_>, _rng: &mut RngState) -> Result<(), Error> {
        let g = &self.geometry;
        let scale = 1.0 / (g.cells as f64).sqrt();
        for k in 0..obj.particle_count() {
            if obj.particles[k].tag != ELECTRON {
                continue;
            }
            let mut merged: Vec<Path> = Vec::new();
            for path in &obj.paths {
                let cell = *path.states[k].spacepoints.iter().next().expect("non-empty support");
                if cell.0[0] != SLIT_X {
                    push_merged(&mut merged, path.clone());
                    continue;
                }
                let slit = self.slit_of(cell);
                for j in 0..g.cells {
                    let mut p = path.clone();
                    p.amplitude = path.amplitude * g.phase(slit, j) * scale;
                    p.states[k].spacepoints = [SpacePoint::xy(SCREEN_X, j)].into();
                    push_merged(&mut merged, p);
                }
            }
            obj.paths = merged;
            obj.normalize_amplitudes()?;
        }
        Ok(())
    }

    fn interacts(&self, a: &ParticleInfo, b: &ParticleInfo) -> bool {
        matches!(
            (a.tag.as_str(), b.tag.as_str()),
            (ELECTRON, SCREEN) | (SCREEN, ELECTRON) | (ELECTRON, MARKER) | (MARKER, ELECTRON)
        )
    }

    fn outcome(&self, ia: &InteractionObject, _rng: &mut RngState) -> Result<OutcomeTable, Error> {
        let tags: Vec<&str> = ia.particles().iter().map(|p| p.tag.as_str()).collect();
        let k = tags
            .iter()
            .position(|t| *t == ELECTRON)
            .ok_or_else(|| invalid("interaction", format!("no outcome rule for {tags:?}")))?;
        let electron = &ia.states()[k];
        if tags.contains(&MARKER) {
            return Ok(OutcomeTable::single(
                vec![ia.particles()[k].clone(), ParticleInfo::new(MARK, 0.0)],
                vec![
                    OutcomeState::at(&[0, 0])
                        .with_momentum(electron.momentum)
                        .with_spindir(electron.spindir),
                    OutcomeState::at(&[0, 0]),
                ],
            )?);
        }
        Ok(OutcomeTable::single(vec![ParticleInfo::new(HIT, 0.0)], vec![OutcomeState::at(&[0, 0])])?)
    }

    fn finished(&self, objects: &[&QuantumObject]) -> bool {
        !objects.iter().any(|o| o.particles.iter().any(|p| p.tag == ELECTRON))
    }
}

fn push_merged(paths: &mut Vec<Path>, p: Path) {
    match paths.iter_mut().find(|q| q.states == p.states) {
        Some(q) => q.amplitude += p.amplitude,
        None => paths.push(p),
    }
}

pub fn slit_world(geometry: &SlitGeometry, marker: bool) -> Result<World, Error> {
    geometry.validate()?;
    let space = Space::new(&[3, geometry.cells], 1.0)?;
    let single = |id: u64, tag: &str, mass: f64, cells: Vec<SpacePoint>| {
        QuantumObject::particle(
            ObjectId(id),
            ParticleInfo::new(tag, mass),
            vec![(Complex::new(1.0, 0.0), PathState::at(cells))],
        )
    };
    let mut objects = vec![single(1, SCREEN, 0.0, (0..geometry.cells).map(|j| SpacePoint::xy(SCREEN_X, j)).collect())?];
    let slits = geometry.slit_cells();
    if marker {
        objects.push(single(2, MARKER, 0.0, slits.to_vec())?);
    }
    let electron = QuantumObject::particle(
        ObjectId(3),
        ParticleInfo::new(ELECTRON, 1.0),
        slits
            .iter()
            .zip(geometry.amplitudes)
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(&p, a)| (a, PathState::at([p]).with_momentum([1.0, 0.0, 0.0])))
            .collect(),
    )?;
    objects.push(electron);
    Ok(World {
        space,
        fields: Vec::new(),
        objects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleSlitConfig {
    pub marker: bool,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub geometry: SlitGeometry,
    /// Width of the moving average applied before computing visibility.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub runtime: Runtime,
}

fn default_window() -> usize {
    1
}

impl DoubleSlitConfig {
    pub fn new(marker: bool, trials: u64, seed: u64) -> Self {
        Self {
            marker,
            trials,
            seed,
            geometry: SlitGeometry::default(),
            window: 1,
            runtime: Runtime::Centralized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenHistogram {
    pub marker: bool,
    pub trials: u64,
    pub counts: Vec<u64>,
    /// Oracle probabilities: coherent sum without marker, branch sum with.
    pub expected: Vec<f64>,
    pub visibility: f64,
    pub expected_visibility: f64,
    /// Largest `|count − N·p| / σ` over the cells.
    pub max_deviation_sigma: f64,
}

impl ScreenHistogram {
    pub fn from_counts(marker: bool, counts: Vec<u64>, expected: Vec<f64>, window: usize) -> Self {
        let trials: u64 = counts.iter().sum();
        let n = trials as f64;
        let max_deviation_sigma = counts
            .iter()
            .zip(&expected)
            .map(|(&c, &p)| {
                // Unit floor keeps near-empty cells from dominating.
                let sigma = (n * p * (1.0 - p)).max(1.0).sqrt();
                (c as f64 - n * p).abs() / sigma
            })
            .fold(0.0, f64::max);
        let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self {
            marker,
            trials,
            visibility: visibility(&as_f64, window),
            expected_visibility: visibility(&expected, window),
            counts,
            expected,
            max_deviation_sigma,
        }
    }

    pub fn within_three_sigma(&self) -> bool {
        self.max_deviation_sigma <= 3.0
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.trials.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// `(max − min) / (max + min)` of the moving average of width `window`
/// (clamped at the edges).
pub fn visibility(values: &[f64], window: usize) -> f64 {
    let w = window.max(1);
    let half = w / 2;
    let smoothed: Vec<f64> = (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + w - half).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let max = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = smoothed.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        return 0.0;
    }
    (max - min) / (max + min)
}

/// Screen index of the hit recorded in `objects`.
pub fn hit_cell(objects: &[QuantumObject]) -> Option<usize> {
    objects.iter().find_map(|o| {
        let k = o.particles.iter().position(|p| p.tag == HIT)?;
        o.paths[0].states[k].spacepoints.iter().next().map(|p| p.0[1])
    })
}

pub fn run_double_slit(cfg: &DoubleSlitConfig) -> Result<ScreenHistogram, Error> {
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1").into());
    }
    let g = cfg.geometry;
    let world = slit_world(&g, cfg.marker)?;
    let sim = Simulator::new(Arc::new(DoubleSlitPhysics { geometry: g }), MAX_STEPS);
    let hits = map_trials(cfg.trials, cfg.seed, |trial, s| {
        let objects = sim.run_trial(world.clone(), s, cfg.runtime)?;
        hit_cell(&objects).ok_or_else(|| ExperimentError::MissingOutcome { trial }.into())
    })?;
    let mut counts = vec![0u64; g.cells];
    for j in hits {
        counts[j] += 1;
    }
    let expected = if cfg.marker { g.incoherent() } else { g.coherent() };
    Ok(ScreenHistogram::from_counts(cfg.marker, counts, expected, cfg.window))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_axis_cell_is_twice_the_branch_sum() {
        // Equal path lengths to the central cell: |1+1|² = 2·(|1|²+|1|²)/2.
        let g = SlitGeometry::default();
        let c = g.centre();
        let coherent = (g.branch(0, c) + g.branch(1, c)).norm_sqr();
        let incoherent = g.branch(0, c).norm_sqr() + g.branch(1, c).norm_sqr();
        assert!((coherent - 2.0 * incoherent).abs() < 1e-12);
    }

    #[test]
    fn oracle_visibilities() {
        let g = SlitGeometry::default();
        assert!(visibility(&g.coherent(), 1) > 0.99);
        assert!(visibility(&g.incoherent(), 1) < 1e-12);
    }

    #[test]
    fn visibility_smoothing() {
        assert_eq!(visibility(&[1.0, 3.0, 1.0, 3.0], 1), 0.5);
        assert!(visibility(&[1.0, 3.0, 1.0, 3.0, 1.0], 2) < 0.5);
        assert_eq!(visibility(&[0.0, 0.0], 1), 0.0);
    }

    #[test]
    fn fan_out_reproduces_coherent_oracle() {
        let g = SlitGeometry::default();
        let world = slit_world(&g, false).unwrap();
        let mut electron = world.objects.last().unwrap().clone();
        let env = Environment {
            space: &world.space,
            fields: &[],
        };
        let physics = DoubleSlitPhysics { geometry: g };
        physics.evolve(&mut electron, &env, &mut RngState::from_seed(0)).unwrap();
        assert_eq!(electron.path_count(), g.cells);
        let oracle = g.coherent();
        for p in &electron.paths {
            let j = p.states[0].spacepoints.iter().next().unwrap().0[1];
            assert!((p.amplitude.norm_sqr() - oracle[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn histograms_match_oracles() {
        for marker in [false, true] {
            let h = run_double_slit(&DoubleSlitConfig::new(marker, 4000, 11)).unwrap();
            assert_eq!(h.trials, 4000);
            assert!(h.max_deviation_sigma < 4.5, "marker {marker}: {h:?}");
        }
    }

    #[test]
    fn rejects_even_cell_count() {
        let g = SlitGeometry {
            cells: 10,
            ..Default::default()
        };
        assert!(slit_world(&g, false).is_err());
    }
}
