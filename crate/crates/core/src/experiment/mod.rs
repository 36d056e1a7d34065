//! Named scenarios that turn a [`ScenarioConfig`] into CSV, graymap and
//! summary files.
//!
//! | scenario | files |
//! |---|---|
//! | `spectrum` | `spectrum.csv` |
//! | `lightcone` | `lightcone_<side>.csv`, `lightcone_<side>.pgm`, `lightcone_<side>.pgm.txt` |
//! | `bipartite` | `bipartite.csv` |
//! | `ratio-sweep` | `ratio_sweep.csv` |
//! | `reshuffle` | `reshuffle.csv` |
//!
//! Every scenario also writes `summary.txt` with the edge-state diagnostics
//! of the pre-quench chain and scenario-specific results.

mod config;
mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use config::{parse_config, ConfigError, ScenarioConfig, ScenarioKind};
pub use output::{fmt_num, heatmap_pgm, percentile_99};

use crate::dynamics::{
    initial_edge_state_with, run_quench_with, time_grid, EdgeSide, EvolutionPath, QuenchOptions,
    QuenchSpec, Trajectory,
};
use crate::error::Error;
use crate::lattice::{
    build_hamiltonian, edge_correction, is_pt_symmetric, LatticeConfig, PT_TOLERANCE,
};
use crate::observables::{
    bipartite_norms, center_of_mass, reflection_ratio, site_density, BipartiteSplit,
};
use crate::spectral::{
    ep_locate, linear_grid, match_branches, spectrum_sweep, zero_mode_report, Eigensystem,
    EpLocation, SweepOptions,
};
use output::{heatmap_note, Table};

pub const SPECTRUM_HEADER: [&str; 7] =
    ["v_over_w", "index", "branch", "re_e", "im_e", "com", "side"];
pub const LIGHTCONE_HEADER: [&str; 3] = ["t", "site", "density"];
pub const BIPARTITE_HEADER: [&str; 4] = ["t", "rho_left", "rho_right", "side_init"];
pub const RATIO_HEADER: [&str; 4] = [
    "v_over_w",
    "rho_right_init_right_half",
    "rho_left_init_left_half",
    "ratio",
];
pub const RESHUFFLE_HEADER: [&str; 6] = ["v_over_w", "index", "re_e", "im_e", "com", "side"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{stage}: {source}")]
    Simulation {
        stage: String,
        #[source]
        source: Error,
    },

    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for configuration problems, 3 for everything that fails later.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Simulation { .. } | RunError::Io { .. } => 3,
        }
    }
}

fn stage(name: impl Into<String>) -> impl FnOnce(Error) -> RunError {
    let stage = name.into();
    move |source| RunError::Simulation { stage, source }
}

/// Where the files of a run went and the text of `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

/// Validates `cfg`, runs its scenario and writes the files into
/// `cfg.output_dir`. Output bytes depend only on the configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput, RunError> {
    cfg.validate()?;
    let mut sink = Sink::new(&cfg.output_dir)?;
    let mut summary = edge_summary(cfg)?;
    match cfg.scenario {
        ScenarioKind::Spectrum => spectrum(cfg, &mut sink, &mut summary)?,
        ScenarioKind::Lightcone => lightcone(cfg, &mut sink, &mut summary)?,
        ScenarioKind::Bipartite => bipartite(cfg, &mut sink, &mut summary)?,
        ScenarioKind::RatioSweep => ratio_sweep(cfg, &mut sink, &mut summary)?,
        ScenarioKind::Reshuffle => reshuffle(cfg, &mut sink, &mut summary)?,
    }
    sink.write("summary.txt", summary.as_bytes())?;
    Ok(ScenarioOutput {
        files: sink.files,
        summary,
    })
}

fn quench_options(cfg: &ScenarioConfig) -> QuenchOptions {
    QuenchOptions {
        condition_ceiling: cfg.condition_ceiling,
        zero_mode_tol: cfg.zero_mode_tol,
    }
}

fn sweep_options(cfg: &ScenarioConfig) -> SweepOptions {
    SweepOptions {
        condition_ceiling: cfg.condition_ceiling,
        threshold: cfg.threshold,
    }
}

fn initial_config(cfg: &ScenarioConfig) -> LatticeConfig {
    let lattice = cfg.lattice().with_v(cfg.v_initial * cfg.w);
    if cfg.initial_embedded {
        lattice
    } else {
        lattice.without_region()
    }
}

fn quench(cfg: &ScenarioConfig, v_final: f64, side: EdgeSide, times: Vec<f64>) -> QuenchSpec {
    let spec = QuenchSpec::new(&cfg.lattice(), cfg.v_initial, v_final, side, times);
    if cfg.initial_embedded {
        spec
    } else {
        spec.with_pure_initial()
    }
}

fn path_name(path: EvolutionPath) -> &'static str {
    match path {
        EvolutionPath::Spectral => "spectral",
        EvolutionPath::Propagator => "propagator",
    }
}

/// Chain description, symmetry and the pre-quench edge states.
fn edge_summary(cfg: &ScenarioConfig) -> Result<String, RunError> {
    let lattice = cfg.lattice();
    let initial = initial_config(cfg);
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", cfg.scenario);
    let _ = writeln!(s, "sites = {}", lattice.dim());
    let _ = writeln!(s, "w = {}", fmt_num(lattice.w));
    match lattice.region {
        Some(r) => {
            let _ = writeln!(
                s,
                "region = {}..{} (u_re {}, u_im {})",
                r.start,
                r.end,
                fmt_num(lattice.u_re),
                fmt_num(lattice.u_im)
            );
        }
        None => {
            let _ = writeln!(s, "region = none");
        }
    }
    let pt = is_pt_symmetric(&lattice, PT_TOLERANCE).map_err(stage("PT check"))?;
    let _ = writeln!(s, "pt_symmetric = {pt}");
    let _ = writeln!(s, "initial_v_over_w = {}", fmt_num(cfg.v_initial));
    let _ = writeln!(s, "initial_embedded = {}", cfg.initial_embedded);

    let h = build_hamiltonian(&initial).map_err(stage("initial Hamiltonian"))?;
    let es =
        Eigensystem::compute(&h, cfg.condition_ceiling).map_err(stage("initial eigensystem"))?;
    let report = zero_mode_report(&es).map_err(stage("zero-mode report"))?;
    let _ = writeln!(s, "initial_min_abs_e = {}", fmt_num(report.min_abs_e));
    let _ = writeln!(s, "initial_gap_to_bulk = {}", fmt_num(report.gap_to_bulk));
    for side in [EdgeSide::Left, EdgeSide::Right] {
        let name = side.as_str();
        let psi = initial_edge_state_with(&h, side, cfg.zero_mode_tol)
            .map_err(stage(format!("{name} edge state")))?;
        let com = center_of_mass(&psi).map_err(stage(format!("{name} edge state")))?;
        let correction = edge_correction(&lattice, &psi).map_err(stage("edge correction"))?;
        let _ = writeln!(s, "edge_{name}_com = {}", fmt_num(com));
        let _ = writeln!(
            s,
            "edge_{name}_correction = {} {}",
            fmt_num(correction.re),
            fmt_num(correction.im)
        );
    }
    Ok(s)
}

fn spectrum(cfg: &ScenarioConfig, sink: &mut Sink, summary: &mut String) -> Result<(), RunError> {
    let (lo, hi, step) = cfg.sweep_range();
    let grid = linear_grid(lo, hi, step).map_err(stage("sweep grid"))?;
    let rows = spectrum_sweep(&cfg.lattice(), &grid, &sweep_options(cfg))
        .map_err(stage("spectrum sweep"))?;
    let branches = match_branches(&rows).map_err(stage("branch matching"))?;
    let mut table = Table::new(&SPECTRUM_HEADER);
    for (row, branch) in rows.iter().zip(&branches) {
        table.row([
            fmt_num(row.v_over_w),
            row.index.to_string(),
            branch.to_string(),
            fmt_num(row.re_e),
            fmt_num(row.im_e),
            fmt_num(row.com),
            row.side.as_str().to_string(),
        ]);
    }
    sink.write("spectrum.csv", &table.into_bytes())?;

    let ep = ep_locate(&rows, cfg.ep_tol).map_err(stage("EP location"))?;
    let _ = match ep {
        EpLocation::At { v_star } => writeln!(summary, "ep = {}", fmt_num(v_star)),
        EpLocation::AlwaysReal => writeln!(summary, "ep = always-real"),
        EpLocation::NeverMerges => writeln!(summary, "ep = never-merges"),
    };
    let mut defective: Vec<f64> = rows
        .iter()
        .filter(|r| r.near_defective)
        .map(|r| r.v_over_w)
        .collect();
    defective.dedup();
    let _ = writeln!(summary, "near_defective_points = {}", defective.len());
    Ok(())
}

fn run_sides(
    cfg: &ScenarioConfig,
    v_final: f64,
    sides: &[EdgeSide],
    times: &[f64],
) -> Result<Vec<(Trajectory, EvolutionPath)>, RunError> {
    let options = quench_options(cfg);
    let runs: Vec<_> = sides
        .par_iter()
        .map(|&side| {
            run_quench_with(&quench(cfg, v_final, side, times.to_vec()), &options).map_err(stage(
                format!("quench to v/w = {v_final}, {} edge", side.as_str()),
            ))
        })
        .collect();
    runs.into_iter().collect()
}

fn lightcone(cfg: &ScenarioConfig, sink: &mut Sink, summary: &mut String) -> Result<(), RunError> {
    let times = time_grid(cfg.t_max, cfg.dt).map_err(stage("time grid"))?;
    let runs = run_sides(cfg, cfg.v_final, &cfg.sides, &times)?;
    let _ = writeln!(summary, "final_v_over_w = {}", fmt_num(cfg.v_final));
    for (side, (traj, path)) in cfg.sides.iter().zip(&runs) {
        let name = format!("lightcone_{}", side.as_str());
        let densities: Vec<Vec<f64>> = traj.states().iter().map(site_density).collect();
        let mut table = Table::new(&LIGHTCONE_HEADER);
        for (t, column) in traj.times().iter().zip(&densities) {
            let t = fmt_num(*t);
            for (site, d) in column.iter().enumerate() {
                table.row([t.as_str(), &(site + 1).to_string(), &fmt_num(*d)]);
            }
        }
        sink.write(&format!("{name}.csv"), &table.into_bytes())?;

        let (pgm, rho_max) = heatmap_pgm(&densities);
        let image = PathBuf::from(format!("{name}.pgm"));
        let first = traj.times().first().copied().unwrap_or(0.0);
        let last = traj.times().last().copied().unwrap_or(0.0);
        let note = heatmap_note(&image, traj.dim(), densities.len(), (first, last), rho_max);
        sink.write(&format!("{name}.pgm"), &pgm)?;
        sink.write(&format!("{name}.pgm.txt"), note.as_bytes())?;

        let norms = traj.norms_sqr();
        let spread = norms.iter().fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
        let _ = writeln!(summary, "{}_path = {}", side.as_str(), path_name(*path));
        let _ = writeln!(
            summary,
            "{}_max_norm_deviation = {}",
            side.as_str(),
            fmt_num(spread)
        );
    }
    Ok(())
}

fn bipartite(cfg: &ScenarioConfig, sink: &mut Sink, summary: &mut String) -> Result<(), RunError> {
    let lattice = cfg.lattice();
    let split = BipartiteSplit::for_config(&lattice).map_err(stage("bipartite split"))?;
    let times = time_grid(cfg.t_max, cfg.dt).map_err(stage("time grid"))?;
    let runs = run_sides(cfg, cfg.v_final, &cfg.sides, &times)?;
    let mut table = Table::new(&BIPARTITE_HEADER);
    for (side, (traj, _)) in cfg.sides.iter().zip(&runs) {
        for (t, psi) in traj.times().iter().zip(traj.states()) {
            let (l, r) = bipartite_norms(psi, split).map_err(stage("bipartite norms"))?;
            table.row([
                fmt_num(*t),
                fmt_num(l),
                fmt_num(r),
                side.as_str().to_string(),
            ]);
        }
    }
    sink.write("bipartite.csv", &table.into_bytes())?;

    let _ = writeln!(summary, "final_v_over_w = {}", fmt_num(cfg.v_final));
    let _ = writeln!(summary, "split_site = {}", split.split_site());
    for (side, (_, path)) in cfg.sides.iter().zip(&runs) {
        let _ = writeln!(summary, "{}_path = {}", side.as_str(), path_name(*path));
    }
    let find = |want: EdgeSide| {
        cfg.sides
            .iter()
            .position(|&s| s == want)
            .map(|i| &runs[i].0)
    };
    if let (Some(right), Some(left)) = (find(EdgeSide::Right), find(EdgeSide::Left)) {
        let ratio = reflection_ratio(right, left, split, cfg.t_sample)
            .map_err(stage("reflection ratio"))?;
        let _ = writeln!(summary, "ratio_at_t_sample = {}", fmt_num(ratio));
    }
    Ok(())
}

/// `v/w` where linear interpolation of `ratio - 1` first changes sign.
pub fn first_crossing(points: &[(f64, f64)]) -> Option<f64> {
    points.windows(2).find_map(|p| {
        let ((x0, y0), (x1, y1)) = ((p[0].0, p[0].1 - 1.0), (p[1].0, p[1].1 - 1.0));
        if y0 == 0.0 {
            Some(x0)
        } else if y0 * y1 < 0.0 || y1 == 0.0 {
            Some(x0 + (x1 - x0) * y0 / (y0 - y1))
        } else {
            None
        }
    })
}

fn ratio_sweep(
    cfg: &ScenarioConfig,
    sink: &mut Sink,
    summary: &mut String,
) -> Result<(), RunError> {
    let (lo, hi, step) = cfg.sweep_range();
    let grid = linear_grid(lo, hi, step).map_err(stage("sweep grid"))?;
    let split = BipartiteSplit::for_config(&cfg.lattice()).map_err(stage("bipartite split"))?;
    let times = time_grid(cfg.t_sample, cfg.dt).map_err(stage("time grid"))?;
    let t_sample = *times.last().expect("time grid is never empty");
    let sides = [EdgeSide::Right, EdgeSide::Left];
    let points: Vec<Result<_, RunError>> = grid
        .par_iter()
        .map(|&v_final| {
            let runs = run_sides(cfg, v_final, &sides, &times)?;
            let (right, left) = (&runs[0].0, &runs[1].0);
            let last = |traj: &Trajectory| traj.states().last().cloned().expect("sampled");
            let (_, rho_r) =
                bipartite_norms(&last(right), split).map_err(stage("bipartite norms"))?;
            let (rho_l, _) =
                bipartite_norms(&last(left), split).map_err(stage("bipartite norms"))?;
            let ratio = reflection_ratio(right, left, split, t_sample)
                .map_err(stage(format!("reflection ratio at v/w = {v_final}")))?;
            let fallback = runs.iter().any(|(_, p)| *p == EvolutionPath::Propagator);
            Ok((v_final, rho_r, rho_l, ratio, fallback))
        })
        .collect();
    let mut table = Table::new(&RATIO_HEADER);
    let mut curve = Vec::with_capacity(grid.len());
    let mut fallbacks = 0;
    for p in points {
        let (v, rho_r, rho_l, ratio, fallback) = p?;
        table.row([fmt_num(v), fmt_num(rho_r), fmt_num(rho_l), fmt_num(ratio)]);
        curve.push((v, ratio));
        fallbacks += usize::from(fallback);
    }
    sink.write("ratio_sweep.csv", &table.into_bytes())?;

    let _ = writeln!(summary, "t_sample = {}", fmt_num(t_sample));
    let _ = writeln!(summary, "split_site = {}", split.split_site());
    let _ = match first_crossing(&curve) {
        Some(v) => writeln!(summary, "crossing = {}", fmt_num(v)),
        None => writeln!(summary, "crossing = none"),
    };
    let _ = writeln!(summary, "propagator_fallbacks = {fallbacks}");
    Ok(())
}

fn reshuffle(cfg: &ScenarioConfig, sink: &mut Sink, summary: &mut String) -> Result<(), RunError> {
    let rows = spectrum_sweep(&cfg.lattice(), &cfg.v_values, &sweep_options(cfg))
        .map_err(stage("reshuffle spectra"))?;
    let mut table = Table::new(&RESHUFFLE_HEADER);
    for row in &rows {
        table.row([
            fmt_num(row.v_over_w),
            row.index.to_string(),
            fmt_num(row.re_e),
            fmt_num(row.im_e),
            fmt_num(row.com),
            row.side.as_str().to_string(),
        ]);
    }
    sink.write("reshuffle.csv", &table.into_bytes())?;

    for point in rows.chunk_by(|a, b| a.v_over_w == b.v_over_w) {
        let v = fmt_num(point[0].v_over_w);
        let real = point.iter().filter(|r| r.im_e.abs() < cfg.ep_tol).count();
        let count = |gain: bool, side: crate::observables::Side| {
            point
                .iter()
                .filter(|r| r.im_e.abs() >= cfg.ep_tol && (r.im_e > 0.0) == gain && r.side == side)
                .count()
        };
        use crate::observables::Side::{Left, Right};
        let _ = writeln!(
            summary,
            "v_over_w {v}: real {real}, gain left {} right {}, loss left {} right {}",
            count(true, Left),
            count(true, Right),
            count(false, Left),
            count(false, Right)
        );
    }
    Ok(())
}
