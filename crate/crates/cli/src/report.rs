//! Wall-time table over finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::Manifest;

/// Manifests in `dir` and its immediate subdirectories.
pub fn collect(dirs: &[PathBuf]) -> Result<Vec<Manifest>> {
    let mut found = Vec::new();
    for dir in dirs {
        let mut paths = vec![dir.join("manifest.json")];
        if dir.is_dir() {
            let mut subs: Vec<PathBuf> = fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            subs.sort();
            paths.extend(subs.into_iter().map(|p| p.join("manifest.json")));
        }
        for p in paths.into_iter().filter(|p| p.is_file()) {
            found.push(read(&p)?);
        }
    }
    Ok(found)
}

fn read(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

const ORDER: [&str; 6] = ["pave", "rnis", "levelset", "optimize", "synth", "simulate"];

/// One row per Lyapunov function, one column per command, wall times in
/// seconds. Repeated runs of a command show the latest manifest read.
pub fn table(manifests: &[Manifest]) -> String {
    let mut commands: Vec<&str> = Vec::new();
    let mut rows: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for m in manifests {
        if !commands.contains(&m.command.as_str()) {
            commands.push(&m.command);
        }
        rows.entry(&m.lyapunov)
            .or_default()
            .insert(&m.command, m.wall_time_s);
    }
    commands.sort_by_key(|c| ORDER.iter().position(|o| o == c).unwrap_or(ORDER.len()));
    let label_w = rows
        .keys()
        .map(|k| k.len())
        .max()
        .unwrap_or(0)
        .max("lyapunov".len());
    let col_w: Vec<usize> = commands.iter().map(|c| c.len().max(8)).collect();
    let mut out = format!("{:<label_w$}", "lyapunov");
    for (c, w) in commands.iter().zip(&col_w) {
        write!(out, "  {c:>w$}").unwrap();
    }
    out.push('\n');
    for (label, times) in &rows {
        write!(out, "{label:<label_w$}").unwrap();
        for (c, w) in commands.iter().zip(&col_w) {
            match times.get(c) {
                Some(t) => write!(out, "  {t:>w$.2}").unwrap(),
                None => write!(out, "  {:>w$}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}
