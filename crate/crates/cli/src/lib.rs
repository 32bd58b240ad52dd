//! Command implementations behind the `rdoa` binary.
//!
//! Every command computes all of its artifacts in memory and writes them
//! only once the computation succeeded, together with `config.toml` (the
//! effective configuration) and `manifest.json`.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rdoa_core::paving::Paving;
use rdoa_core::rnis::{estimate_wn, level_set_baseline, rnisevia, PlantSet, RnisOptions};
use rdoa_core::sim::{batch, trajectories_csv, Controller, RandomAdmissible};
use rdoa_core::synth::{self, extract_verified, linear_gain, LinearGain};
use rdoa_core::BoxVec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{Overrides, ParseError, ProblemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pave,
    Rnis,
    Levelset,
    Optimize,
    Synth,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pave => "pave",
            Command::Rnis => "rnis",
            Command::Levelset => "levelset",
            Command::Optimize => "optimize",
            Command::Synth => "synth",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxCounts {
    pub inner: usize,
    pub outer: usize,
    pub boundary: usize,
}

impl BoxCounts {
    fn of(p: &Paving) -> Self {
        Self {
            inner: p.boxes_in().len(),
            outer: p.boxes_out().len(),
            boundary: p.boxes_bou().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub lyapunov: String,
    pub config_sha256: String,
    pub seed: u64,
    pub eps: f64,
    pub alpha: f64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub boxes: Option<BoxCounts>,
    pub artifacts: Vec<String>,
}

/// Artifacts of one command, before they are written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub boxes: Option<BoxCounts>,
    /// Short human-readable result for the terminal.
    pub summary: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

/// Runs `cmd` and writes its artifacts, the effective configuration and the
/// manifest into `out`. Nothing is left behind when the command fails.
pub fn run(cmd: Command, cfg: &ProblemConfig, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let outcome = execute(cmd, cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let config_text = cfg.to_toml();
    let mut files = outcome.files;
    files.push(("config.toml".into(), config_text.clone()));
    let manifest = Manifest {
        command: cmd.name().into(),
        lyapunov: cfg.lyapunov_label(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: cfg.run.seed,
        eps: cfg.run.eps,
        alpha: cfg.plant.alpha,
        threads: rayon::current_num_threads(),
        wall_time_s: wall,
        boxes: outcome.boxes,
        artifacts: files.iter().map(|(name, _)| name.clone()).collect(),
    };
    files.push((
        "manifest.json".into(),
        serde_json::to_string_pretty(&manifest)? + "\n",
    ));
    commit(out, &files)?;
    println!("{}", outcome.summary);
    Ok(manifest)
}

fn commit(out: &Path, files: &[(String, String)]) -> Result<()> {
    let created = !out.exists();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        if let Err(e) = fs::write(&path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir(out);
            }
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}

/// Computes the artifacts of `cmd` without touching the file system.
pub fn execute(cmd: Command, cfg: &ProblemConfig) -> Result<Outcome> {
    let p = cfg.plant()?;
    match cmd {
        Command::Pave => pave(cfg, &p),
        Command::Rnis => rnis(cfg, &p),
        Command::Levelset => levelset(cfg, &p),
        Command::Optimize => optimize(cfg, &p),
        Command::Synth => synthesize(cfg, &p).map(|s| s.outcome),
        Command::Simulate => simulate(cfg, &p),
    }
}

fn gain(cfg: &ProblemConfig, p: &PlantSet) -> Result<LinearGain> {
    Ok(linear_gain(
        p,
        cfg.controller.pole,
        cfg.controller.contraction,
    )?)
}

// The origin core, when enabled and verifiable.
fn core(cfg: &ProblemConfig, p: &PlantSet) -> Option<LinearGain> {
    if !cfg.run.core {
        return None;
    }
    match gain(cfg, p) {
        Ok(g) => Some(g),
        Err(e) => {
            eprintln!("warning: running without origin core: {e}");
            None
        }
    }
}

fn options(cfg: &ProblemConfig, g: Option<&LinearGain>) -> RnisOptions {
    let mut o = cfg.rnis_options();
    o.core = g.map(|g| g.x0.clone());
    o
}

/// Projection of the inner boxes united with `X₀`: maximal intervals for a
/// one-dimensional state, covered cells (then `X₀`) otherwise.
pub fn projection_lines(pav: &Paving, x0: Option<&BoxVec>) -> Vec<String> {
    let tree = pav.project();
    if pav.n() == 1 {
        let mut spans = tree.components_1d();
        if let Some(b) = x0 {
            spans.push((b.dims()[0].lo(), b.dims()[0].hi()));
        }
        union_1d(spans)
            .into_iter()
            .map(|(a, b)| format!("[{a},{b}]"))
            .collect()
    } else {
        let mut lines: Vec<String> = tree.covered_cells().iter().map(|c| c.to_string()).collect();
        if let Some(b) = x0 {
            lines.push(b.to_string());
        }
        lines
    }
}

/// Sorted union of closed intervals.
pub fn union_1d(mut spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn lines(v: &[String]) -> String {
    v.iter().map(|l| format!("{l}\n")).collect()
}

fn pave(cfg: &ProblemConfig, p: &PlantSet) -> Result<Outcome> {
    let l = cfg.lyapunov_fn()?;
    let wn = estimate_wn(p, &l, cfg.run.eps)?;
    let proj = projection_lines(&wn, None);
    Ok(Outcome {
        summary: format!(
            "decrease set: {} inner boxes, projection {}",
            wn.boxes_in().len(),
            proj.join(" ")
        ),
        boxes: Some(BoxCounts::of(&wn)),
        files: vec![
            ("wn.paving".into(), wn.to_text()),
            ("projection.txt".into(), lines(&proj)),
        ],
    })
}

fn rnis(cfg: &ProblemConfig, p: &PlantSet) -> Result<Outcome> {
    let l = cfg.lyapunov_fn()?;
    let g = core(cfg, p);
    let out = rnisevia(p, &l, &options(cfg, g.as_ref()))?;
    let x0 = g.as_ref().map(|g| &g.x0);
    let proj = projection_lines(&out.paving, x0);
    let mut files = vec![
        ("paving.txt".into(), out.paving.to_text()),
        ("projection.txt".into(), lines(&proj)),
        ("iterations.csv".into(), out.stats_csv()),
    ];
    if let Some(b) = x0 {
        files.push(("x0.txt".into(), format!("{b}\n")));
    }
    Ok(Outcome {
        summary: format!(
            "invariant set: {} inner boxes after {} passes, measure {:.4}, projection with X0 {}",
            out.paving.boxes_in().len(),
            out.iterations(),
            out.projection().measure(),
            proj.join(" ")
        ),
        boxes: Some(BoxCounts::of(&out.paving)),
        files,
    })
}

fn levelset(cfg: &ProblemConfig, p: &PlantSet) -> Result<Outcome> {
    let l = cfg.lyapunov_fn()?;
    let g = core(cfg, p);
    let wn = estimate_wn(p, &l, cfg.run.eps)?;
    let x0 = g.as_ref().map(|g| &g.x0);
    let ls = level_set_baseline(p, &l, &wn, x0, cfg.run.eps);
    let mut text = format!("c {}\n", ls.c);
    if p.n() == 1 {
        for (a, b) in ls.components_1d() {
            writeln!(text, "[{a},{b}]").unwrap();
        }
    }
    Ok(Outcome {
        summary: format!("level set: c = {}", ls.c),
        boxes: Some(BoxCounts::of(&ls.sublevel)),
        files: vec![
            ("levelset.txt".into(), text),
            ("sublevel.paving".into(), ls.sublevel.to_text()),
        ],
    })
}

fn optimize(cfg: &ProblemConfig, p: &PlantSet) -> Result<Outcome> {
    let g = core(cfg, p);
    let mut opts = options(cfg, g.as_ref());
    opts.eps = cfg.pso.eps.unwrap_or(cfg.run.eps);
    let seeds: Vec<_> = match cfg.lyapunov_spec()? {
        Some(s) if cfg.pso.seed_with_lyapunov && s.d == cfg.pso.d => vec![s],
        _ => Vec::new(),
    };
    let (spec, res) = synth::pso_optimize(p, cfg.pso.d, &opts, &cfg.pso_options(), &seeds)?;
    let l = synth::lyapunov_from_p(&spec)?;
    let entries: Vec<String> = spec.entries().iter().map(f64::to_string).collect();
    let mut best = String::from("[lyapunov]\n");
    writeln!(best, "d = {}", spec.d).unwrap();
    writeln!(best, "p = [{}]", entries.join(", ")).unwrap();
    writeln!(best, "# objective {}", res.objective).unwrap();
    writeln!(best, "# L = {}", l.expr()).unwrap();
    let mut history = String::from("iteration,best\n");
    for (i, v) in res.history.iter().enumerate() {
        writeln!(history, "{},{v}", i + 1).unwrap();
    }
    Ok(Outcome {
        summary: format!(
            "best objective {} after {} evaluations; L = {}",
            res.objective,
            res.evaluations,
            l.expr()
        ),
        boxes: None,
        files: vec![("lyapunov.toml".into(), best), ("pso.csv".into(), history)],
    })
}

struct Synthesized {
    outcome: Outcome,
    paving: Paving,
    gain: LinearGain,
    controller: synth::ControllerSpec,
}

fn synthesize(cfg: &ProblemConfig, p: &PlantSet) -> Result<Synthesized> {
    let l = cfg.lyapunov_fn()?;
    let g = gain(cfg, p)?;
    let core = cfg.run.core.then_some(&g);
    let out = rnisevia(p, &l, &options(cfg, core))?;
    let spacing = cfg.controller.spacing.unwrap_or(10.0 * cfg.run.eps);
    let (ctl, report) = extract_verified(
        &out.paving,
        &g.k,
        Some(&g.x0),
        spacing,
        cfg.controller.grid,
        cfg.controller.rounds,
    )?;
    if !report.passed() {
        let mut msg = format!(
            "controller verification failed at {} of {} grid points:",
            report.violations.len(),
            report.checked
        );
        for (x, u) in report.violations.iter().take(20) {
            write!(msg, "\n  x = {x:?}, u = {u:?}").unwrap();
        }
        bail!(msg);
    }
    let verify = format!(
        "PASS\nchecked {}\nskipped_in_x0 {}\nviolations 0\n",
        report.checked, report.skipped
    );
    let outcome = Outcome {
        summary: format!(
            "controller: {} components, {} training points, verified at {} grid points",
            ctl.components.len(),
            ctl.table().len(),
            report.checked
        ),
        boxes: Some(BoxCounts::of(&out.paving)),
        files: vec![
            ("paving.txt".into(), out.paving.to_text()),
            ("controller.txt".into(), ctl.to_text()),
            ("verify.txt".into(), verify),
        ],
    };
    Ok(Synthesized {
        outcome,
        paving: out.paving,
        gain: g,
        controller: ctl,
    })
}

fn simulate(cfg: &ProblemConfig, p: &PlantSet) -> Result<Outcome> {
    let opts = cfg.sim_options()?;
    let s = synthesize(cfg, p)?;
    let region = match cfg.sim_region()? {
        Some(r) => r,
        None if p.n() == 1 => projection_lines(&s.paving, Some(&s.gain.x0))
            .iter()
            .map(|l| l.parse::<BoxVec>())
            .collect::<Result<_, _>>()?,
        None => bail!("sim.region is required for n > 1"),
    };
    let random = RandomAdmissible::new(&s.paving, s.gain.k.clone());
    let ctl: &dyn Controller = match cfg.sim.policy.as_str() {
        "random" => &random,
        _ => &s.controller,
    };
    let (runs, summary) = batch(p, ctl, &region, cfg.sim.count, &opts, cfg.run.seed);
    let l = cfg.lyapunov_fn()?;
    let csv = trajectories_csv(&runs, p.n(), p.m(), Some(&l));
    let text = format!(
        "count {}\nconverged {}\nescaped {}\nmax_steps {}\n",
        summary.count, summary.converged, summary.escaped, summary.max_steps
    );
    let mut files = s.outcome.files;
    files.push(("trajectories.csv".into(), csv));
    files.push(("summary.txt".into(), text));
    Ok(Outcome {
        summary: format!(
            "{} policy: {}/{} converged, {} escaped, at most {} steps",
            cfg.sim.policy, summary.converged, summary.count, summary.escaped, summary.max_steps
        ),
        boxes: s.outcome.boxes,
        files,
    })
}
