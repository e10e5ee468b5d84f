//! Subcommand execution. Each command resolves its parameters, runs the core
//! driver and hands back JSON, CSV and a short text summary.

use std::fmt::Write as _;
use std::path::Path;

use causim_core::experiments::{
    lhv_oracle, model_correlation, run_bell_experiment, run_bell_scan, run_double_slit, run_pendulum, BellConfig,
    BellForm, DoubleSlitConfig, JointStats, PendulumConfig, PendulumMode, Runtime, SlitGeometry, SpindirPolicy,
    Strategy,
};
use causim_core::locality::specs;
use causim_core::refined::Scheduler;
use causim_core::wave::{compare_analytic, periodic_gaussian, run_wave, Boundary, ErrorNorms, Trajectory};
use causim_core::{classify_model, parse_model_spec, ExperimentConfig, WaveGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{AnalyzeArgs, BellArgs, DoubleSlitArgs, LhvArgs, PendulumArgs, RuntimeArg, WaveArgs};
use crate::CliError;

/// What a command produced, before it is written out.
pub struct Output {
    pub params: Value,
    pub result: Value,
    pub csv: Vec<u8>,
    pub summary: String,
}

/// Defaults, then the config's seed and `[experiment]` table, then flags.
pub fn resolve<P>(flags: &impl Serialize, config: Option<&ExperimentConfig>) -> Result<P, CliError>
where
    P: Serialize + DeserializeOwned + Default,
{
    let mut merged = to_value(&P::default())?;
    let obj = merged.as_object_mut().expect("parameter structs serialize as maps");
    if let Some(cfg) = config {
        if obj.contains_key("seed") {
            obj.insert("seed".into(), cfg.seed.into());
        }
        if let Value::Object(table) = to_value(&cfg.experiment)? {
            obj.extend(table);
        }
    }
    if let Value::Object(given) = to_value(flags)? {
        obj.extend(given);
    }
    serde_json::from_value(merged).map_err(|e| CliError::Config(format!("[experiment]: {e}")))
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn three(name: &str, v: &[f64]) -> Result<[f64; 3], CliError> {
    <[f64; 3]>::try_from(v).map_err(|_| CliError::Config(format!("{name} needs exactly three values, got {}", v.len())))
}

fn runtime(kind: RuntimeArg, scheduler: Scheduler) -> Runtime {
    match kind {
        RuntimeArg::Centralized => Runtime::Centralized,
        RuntimeArg::Refined => Runtime::Refined(scheduler),
    }
}

/// The spelling a value has on the command line and in the config.
fn label(v: &impl Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn runtime_label(r: Runtime) -> String {
    match r {
        Runtime::Centralized => "centralized".into(),
        Runtime::Refined(Scheduler::RoundRobin) => "refined, round-robin".into(),
        Runtime::Refined(Scheduler::Randomized) => "refined, randomized".into(),
    }
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BellParams {
    pub angle_a: f64,
    pub angle_b: f64,
    pub angles: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    pub runtime: RuntimeArg,
    pub scheduler: Scheduler,
    pub form: BellForm,
    pub fixed_spindir: Option<f64>,
}

impl Default for BellParams {
    fn default() -> Self {
        Self {
            angle_a: 0.0,
            angle_b: 30.0,
            angles: None,
            trials: 100_000,
            seed: 0,
            runtime: RuntimeArg::Centralized,
            scheduler: Scheduler::RoundRobin,
            form: BellForm::Identical,
            fixed_spindir: None,
        }
    }
}

#[derive(Serialize)]
struct BellRow<'a> {
    pair: &'a str,
    angle_x: f64,
    angle_y: f64,
    trials: u64,
    n_pp: u64,
    n_pm: u64,
    n_mp: u64,
    n_mm: u64,
    correlation: f64,
    correlation_se: f64,
    p_same: f64,
}

fn bell_row<'a>(pair: &'a str, x: f64, y: f64, s: &JointStats) -> BellRow<'a> {
    BellRow {
        pair,
        angle_x: x,
        angle_y: y,
        trials: s.trials,
        n_pp: s.n_pp,
        n_pm: s.n_pm,
        n_mp: s.n_mp,
        n_mm: s.n_mm,
        correlation: s.correlation,
        correlation_se: s.correlation_se,
        p_same: s.p_same,
    }
}

pub fn bell(args: &BellArgs, config: Option<&ExperimentConfig>) -> Result<Output, CliError> {
    let p: BellParams = resolve(args, config)?;
    let policy = match p.fixed_spindir {
        Some(t) => SpindirPolicy::Fixed(t),
        None => SpindirPolicy::Uniform,
    };
    let rt = runtime(p.runtime, p.scheduler);
    let params = to_value(&p)?;
    let mut summary = String::new();

    if let Some(angles) = &p.angles {
        let angles = three("angles", angles)?;
        let scan = run_bell_scan(angles, p.form, policy, p.trials, p.seed, rt)?;
        let [a, b, c] = angles;
        let csv = csv_rows([
            bell_row("ab", a, b, &scan.ab),
            bell_row("ac", a, c, &scan.ac),
            bell_row("bc", b, c, &scan.bc),
        ])?;
        let _ = writeln!(
            summary,
            "bell scan at a={a}° b={b}° c={c}°, {} trials per pair, seed {}, {}",
            p.trials,
            p.seed,
            runtime_label(rt)
        );
        for (name, s) in [("E(a,b)", &scan.ab), ("E(a,c)", &scan.ac), ("E(b,c)", &scan.bc)] {
            let _ = writeln!(summary, "  {name} = {:+.4} ± {:.4}", s.correlation, s.correlation_se);
        }
        let _ = writeln!(
            summary,
            "  {} form margin {:+.4} ± {:.4} (model {:+.4}; negative violates)",
            label(&p.form),
            scan.margin,
            scan.margin_se,
            scan.lhv.model_margin
        );
        let _ = writeln!(
            summary,
            "  local strategies: {} of {} meet the premise, largest functional {} (bound 0)",
            scan.lhv.admissible, scan.lhv.strategies, scan.lhv.admissible_max
        );
        return Ok(Output {
            params,
            result: to_value(&scan)?,
            csv,
            summary,
        });
    }

    let stats = run_bell_experiment(&BellConfig {
        angle_a: p.angle_a,
        angle_b: p.angle_b,
        policy,
        trials: p.trials,
        seed: p.seed,
        runtime: rt,
    })?;
    let expected = matches!(policy, SpindirPolicy::Uniform).then(|| model_correlation(p.angle_b - p.angle_a));
    let csv = csv_rows([bell_row("ab", p.angle_a, p.angle_b, &stats)])?;
    let _ = writeln!(
        summary,
        "bell at a={}° b={}°, {} trials, seed {}, {}",
        p.angle_a,
        p.angle_b,
        p.trials,
        p.seed,
        runtime_label(rt)
    );
    let _ = writeln!(
        summary,
        "  ++ {}  +- {}  -+ {}  -- {}",
        stats.n_pp, stats.n_pm, stats.n_mp, stats.n_mm
    );
    let _ = write!(summary, "  E = {:+.4} ± {:.4}", stats.correlation, stats.correlation_se);
    if let Some(e) = expected {
        let _ = write!(summary, "  (cos 2Δ = {e:+.4})");
    }
    let _ = writeln!(summary);
    let _ = writeln!(
        summary,
        "  P(same) = {:.4}, P(a=+) = {:.4}, P(b=+) = {:.4}",
        stats.p_same, stats.marginal_a_plus, stats.marginal_b_plus
    );
    let mut result = to_value(&stats)?;
    result["expected_correlation"] = json!(expected);
    Ok(Output {
        params,
        result,
        csv,
        summary,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitParams {
    pub marker: bool,
    pub trials: u64,
    pub seed: u64,
    pub runtime: RuntimeArg,
    pub scheduler: Scheduler,
    pub window: usize,
    pub geometry: SlitGeometry,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        Self {
            marker: false,
            trials: 100_000,
            seed: 0,
            runtime: RuntimeArg::Centralized,
            scheduler: Scheduler::RoundRobin,
            window: 1,
            geometry: SlitGeometry::default(),
        }
    }
}

#[derive(Serialize)]
struct ScreenRow {
    cell: usize,
    y: f64,
    count: u64,
    frequency: f64,
    expected: f64,
}

pub fn doubleslit(args: &DoubleSlitArgs, config: Option<&ExperimentConfig>) -> Result<Output, CliError> {
    let p: DoubleSlitParams = resolve(args, config)?;
    let rt = runtime(p.runtime, p.scheduler);
    let hist = run_double_slit(&DoubleSlitConfig {
        marker: p.marker,
        trials: p.trials,
        seed: p.seed,
        geometry: p.geometry,
        window: p.window,
        runtime: rt,
    })?;
    let freq = hist.frequencies();
    let csv = csv_rows((0..hist.counts.len()).map(|j| ScreenRow {
        cell: j,
        y: p.geometry.cell_y(j),
        count: hist.counts[j],
        frequency: freq[j],
        expected: hist.expected[j],
    }))?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "double slit, marker {}, {} trials, seed {}, {}",
        if p.marker { "on" } else { "off" },
        p.trials,
        p.seed,
        runtime_label(rt)
    );
    let peak = freq.iter().chain(&hist.expected).fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
    for (j, (&f, &e)) in freq.iter().zip(&hist.expected).enumerate() {
        let bar = "#".repeat((f / peak * 40.0).round() as usize);
        let _ = writeln!(summary, "  {j:>3} {bar:<40} {f:.4} (expected {e:.4})");
    }
    let _ = writeln!(
        summary,
        "  visibility {:.4} (expected {:.4}), largest cell deviation {:.2}σ",
        hist.visibility, hist.expected_visibility, hist.max_deviation_sigma
    );
    Ok(Output {
        params: to_value(&p)?,
        result: to_value(&hist)?,
        csv,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveInit {
    /// Right-moving Gaussian pulse.
    Gaussian,
    /// Right-moving sine with `modes` wavelengths across the grid.
    Sine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveParams {
    pub cells: usize,
    pub steps: u64,
    pub courant: f64,
    pub init: WaveInit,
    pub boundary: Boundary,
    pub stride: u64,
    pub speed: f64,
    pub delta_x: f64,
    /// Gaussian standard deviation, in lengths.
    pub width: f64,
    pub modes: u32,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            cells: 200,
            steps: 400,
            courant: 1.0,
            init: WaveInit::Gaussian,
            boundary: Boundary::Periodic,
            stride: 10,
            speed: 1.0,
            delta_x: 1.0,
            width: 10.0,
            modes: 1,
        }
    }
}

#[derive(Serialize)]
struct WaveResult {
    delta_t: f64,
    courant: f64,
    snapshots: usize,
    /// Against the exact translating profile; periodic boundary only.
    translation_error: Option<ErrorNorms>,
    energy_initial: f64,
    energy_max_relative_drift: f64,
    final_psi: Vec<f64>,
}

pub fn wave(args: &WaveArgs, config: Option<&ExperimentConfig>) -> Result<Output, CliError> {
    let p: WaveParams = resolve(args, config)?;
    if p.cells < 3 {
        return Err(CliError::Config(format!("cells must be at least 3, got {}", p.cells)));
    }
    if p.stride == 0 {
        return Err(CliError::Config("stride must be at least 1".into()));
    }
    let length = p.cells as f64 * p.delta_x;
    let profile = |x: f64| match p.init {
        WaveInit::Gaussian => periodic_gaussian(x, length / 4.0, p.width, length),
        WaveInit::Sine => (2.0 * std::f64::consts::PI * f64::from(p.modes) * x / length).sin(),
    };
    let delta_t = p.courant * p.delta_x / p.speed;
    let xs = (0..p.cells).map(|i| i as f64 * p.delta_x);
    let psi = xs.clone().map(profile).collect();
    // The previous grid is the pulse one step earlier, i.e. shifted right.
    let prev = xs.map(|x| profile(x + p.speed * delta_t)).collect();
    let grid = WaveGrid::with_prev(psi, prev, p.speed, p.delta_x, delta_t, p.boundary)?;

    let trajectory = run_wave(&grid, p.steps, p.stride);
    let translation_error = match p.boundary {
        Boundary::Periodic => {
            let exact = Trajectory::sample(&trajectory, |x, t| profile((x - p.speed * t).rem_euclid(length)));
            Some(compare_analytic(&trajectory, &exact)?)
        }
        Boundary::FixedZero => None,
    };
    let energy_initial = grid.discrete_energy();
    let mut g = grid.clone();
    let mut drift = 0.0f64;
    for _ in 0..p.steps {
        g = g.step();
        drift = drift.max((g.discrete_energy() - energy_initial).abs() / energy_initial.max(f64::MIN_POSITIVE));
    }

    let result = WaveResult {
        delta_t,
        courant: grid.courant(),
        snapshots: trajectory.snapshots.len(),
        translation_error,
        energy_initial,
        energy_max_relative_drift: drift,
        final_psi: trajectory.last().psi.clone(),
    };
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "wave, {} cells, {} steps at Courant {}, {} start, {} boundary",
        p.cells,
        p.steps,
        result.courant,
        label(&p.init),
        label(&p.boundary)
    );
    match translation_error {
        Some(e) => {
            let _ = writeln!(summary, "  vs exact translation: max {:.3e}, rms {:.3e}", e.max, e.l2);
        }
        None => {
            let _ = writeln!(summary, "  no translation reference with fixed ends");
        }
    }
    let _ = writeln!(
        summary,
        "  discrete energy {:.6}, largest relative drift {:.3e}",
        energy_initial, drift
    );
    Ok(Output {
        params: to_value(&p)?,
        result: to_value(&result)?,
        csv: trajectory.to_csv().into_bytes(),
        summary,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub mode: PendulumMode,
    pub m: f64,
    pub omega: f64,
    pub k: f64,
    pub c: f64,
    pub periods: f64,
    pub steps: u64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        let d = PendulumConfig::default();
        Self {
            mode: d.mode,
            m: d.m,
            omega: d.omega,
            k: d.k,
            c: d.c,
            periods: d.periods,
            steps: d.steps,
        }
    }
}

pub fn pendulum(args: &PendulumArgs, config: Option<&ExperimentConfig>) -> Result<Output, CliError> {
    let p: PendulumParams = resolve(args, config)?;
    let res = run_pendulum(&PendulumConfig {
        mode: p.mode,
        m: p.m,
        omega: p.omega,
        k: p.k,
        c: p.c,
        periods: p.periods,
        steps: p.steps,
    })?;
    let result = json!({
        "omega_prime": res.omega_prime,
        "mode_frequency": res.mode_frequency,
        "delta_t": res.delta_t,
        "samples": res.samples.len(),
        "local_deviation": res.local_deviation,
        "closed_form_deviation": res.closed_form_deviation,
        "final": res.samples.last(),
    });
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "coupled pendulums, {}, m={} ω={} k={}, {} periods in {} steps",
        label(&p.mode), p.m, p.omega, p.k, p.periods, p.steps
    );
    let _ = writeln!(
        summary,
        "  ω' = {:.6}, mode frequency {:.6}, Δt = {:.3e}",
        res.omega_prime, res.mode_frequency, res.delta_t
    );
    let _ = writeln!(summary, "  local integration vs normal mode: {:.3e} (relative)", res.local_deviation);
    let _ = writeln!(summary, "  C cos ω't vs normal mode: {:.3e} (relative)", res.closed_form_deviation);
    Ok(Output {
        params: to_value(&p)?,
        result,
        csv: res.to_csv().into_bytes(),
        summary,
    })
}

#[derive(Serialize)]
struct LawRow<'a> {
    law: &'a str,
    class: String,
    offenders: String,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Output, CliError> {
    let text = read_spec(&args.path)?;
    let spec = parse_model_spec(&text).map_err(causim_core::Error::from)?;
    let report = classify_model(&spec);
    let csv = csv_rows(report.laws.iter().map(|l| LawRow {
        law: &l.law,
        class: l.class.to_string(),
        offenders: l.offenders.join(";"),
    }))?;
    Ok(Output {
        params: json!({ "path": args.path }),
        result: to_value(&report)?,
        csv,
        summary: report.to_string(),
    })
}

/// A file on disk, else a bundled model of that name.
fn read_spec(path: &Path) -> Result<String, CliError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => {
            let bundled = path.to_str().and_then(|name| specs::ALL.iter().find(|(n, _)| *n == name));
            match bundled {
                Some((_, text)) => Ok(text.to_string()),
                None => Err(CliError::Input {
                    path: path.display().to_string(),
                    source: e,
                }),
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LhvParams {
    pub angles: Vec<f64>,
    pub form: BellForm,
}

impl Default for LhvParams {
    fn default() -> Self {
        Self {
            angles: vec![0.0, 30.0, 60.0],
            form: BellForm::Identical,
        }
    }
}

#[derive(Serialize)]
struct StrategyRow {
    a_at_a: i8,
    a_at_b: i8,
    a_at_c: i8,
    b_at_a: i8,
    b_at_b: i8,
    b_at_c: i8,
    admissible: bool,
    functional: f64,
}

pub fn lhv(args: &LhvArgs, config: Option<&ExperimentConfig>) -> Result<Output, CliError> {
    let p: LhvParams = resolve(args, config)?;
    let angles = three("angles", &p.angles)?;
    let report = lhv_oracle(angles, p.form);
    let strategies = Strategy::all();
    let csv = csv_rows(strategies.iter().map(|s| StrategyRow {
        a_at_a: s.a[0],
        a_at_b: s.a[1],
        a_at_c: s.a[2],
        b_at_a: s.b[0],
        b_at_b: s.b[1],
        b_at_c: s.b[2],
        admissible: s.admissible(p.form),
        functional: s.functional(p.form),
    }))?;
    let [a, b, c] = angles;
    let mut summary = String::new();
    let _ = writeln!(summary, "local strategies at a={a}° b={b}° c={c}°, {} form", label(&p.form));
    let _ = writeln!(
        summary,
        "  {} enumerated, {} reproduce the equal-setting outcomes",
        report.strategies, report.admissible
    );
    let _ = writeln!(
        summary,
        "  their largest functional is {} (bound 0), {} reach it",
        report.admissible_max, report.equality_cases
    );
    let _ = writeln!(summary, "  without that premise the largest is {}", report.unconstrained_max);
    let _ = writeln!(summary, "  pair model margin {:+.4} (negative violates)", report.model_margin);
    Ok(Output {
        params: to_value(&p)?,
        result: to_value(&report)?,
        csv,
        summary,
    })
}
