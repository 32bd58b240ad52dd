//! Feedback controller extraction from an invariant-set paving, its
//! verification, and the controller text format.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{Pchip, SynthError};
use crate::interval::BoxVec;
use crate::paving::Paving;
use crate::Interval;

pub const METHOD: &str = "pchip";

/// Fitted control law on one connected component `[lo, hi]` of the
/// projection, one interpolant per control coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerComponent {
    pub lo: f64,
    pub hi: f64,
    pub fits: Vec<Pchip>,
}

/// `μ̃(x) = Kx` on `X₀`, the component interpolant elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    /// `m × n`.
    pub k: DMatrix<f64>,
    pub x0: Option<BoxVec>,
    pub components: Vec<ControllerComponent>,
}

impl ControllerSpec {
    pub fn n(&self) -> usize {
        self.k.ncols()
    }

    pub fn m(&self) -> usize {
        self.k.nrows()
    }

    /// Training pairs `(x, u)`, i.e. the interpolation knots.
    pub fn table(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for c in &self.components {
            for (i, &x) in c.fits[0].knots().iter().enumerate() {
                out.push((vec![x], c.fits.iter().map(|f| f.values()[i]).collect()));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n(), "state dimension");
        if x.iter().all(|&v| v == 0.0) {
            return vec![0.0; self.m()];
        }
        if self.x0.as_ref().is_some_and(|b| b.contains_point(x)) || self.components.is_empty() {
            return (0..self.m())
                .map(|l| (0..self.n()).map(|j| self.k[(l, j)] * x[j]).sum())
                .collect();
        }
        let t = x[0];
        let dist = |c: &ControllerComponent| (c.lo - t).max(t - c.hi).max(0.0);
        let c = self
            .components
            .iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .expect("nonempty");
        c.fits.iter().map(|f| f.eval(t)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# feedback controller\n");
        writeln!(s, "n {}", self.n()).unwrap();
        writeln!(s, "m {}", self.m()).unwrap();
        writeln!(s, "method {METHOD}").unwrap();
        let gain: Vec<String> = (0..self.m())
            .flat_map(|l| (0..self.n()).map(move |j| (l, j)))
            .map(|(l, j)| self.k[(l, j)].to_string())
            .collect();
        writeln!(s, "gain {}", gain.join(" ")).unwrap();
        match &self.x0 {
            Some(b) => writeln!(s, "x0 {b}").unwrap(),
            None => writeln!(s, "x0 none").unwrap(),
        }
        for c in &self.components {
            writeln!(s, "component [{},{}]", c.lo, c.hi).unwrap();
            for (i, x) in c.fits[0].knots().iter().enumerate() {
                write!(s, "knot {x}").unwrap();
                for f in &c.fits {
                    write!(s, " {}", f.values()[i]).unwrap();
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SynthError> {
        let mut n = None;
        let mut m = None;
        let mut gain: Option<Vec<f64>> = None;
        let mut x0 = None;
        let mut comps: Vec<(f64, f64, Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| SynthError::Parse { line, msg };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (key, rest) = raw.split_once(char::is_whitespace).unwrap_or((raw, ""));
            let rest = rest.trim();
            let nums = |s: &str| -> Result<Vec<f64>, SynthError> {
                s.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(format!("bad number '{t}'")))
                    })
                    .collect()
            };
            match key {
                "n" | "m" => {
                    let v: usize = rest
                        .parse()
                        .map_err(|_| err(format!("bad count '{rest}'")))?;
                    if key == "n" {
                        n = Some(v);
                    } else {
                        m = Some(v);
                    }
                }
                "method" if rest == METHOD => {}
                "method" => return Err(err(format!("unknown method '{rest}'"))),
                "gain" => gain = Some(nums(rest)?),
                "x0" if rest == "none" => x0 = None,
                "x0" => x0 = Some(rest.parse::<BoxVec>().map_err(|e| err(e.to_string()))?),
                "component" => {
                    let iv: Interval = rest
                        .parse()
                        .map_err(|e: crate::interval::IntervalError| err(e.to_string()))?;
                    comps.push((iv.lo(), iv.hi(), Vec::new(), Vec::new()));
                }
                "knot" => {
                    let v = nums(rest)?;
                    let c = comps
                        .last_mut()
                        .ok_or_else(|| err("knot before any component".into()))?;
                    if v.len() < 2 {
                        return Err(err("knot needs a state and a control".into()));
                    }
                    c.2.push(v[0]);
                    c.3.push(v[1..].to_vec());
                }
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        let at_end = |msg: &str| SynthError::Parse {
            line: text.lines().count(),
            msg: msg.to_string(),
        };
        let n = n.ok_or_else(|| at_end("missing n"))?;
        let m = m.ok_or_else(|| at_end("missing m"))?;
        if n != 1 {
            return Err(SynthError::StateDimension(n));
        }
        let gain = gain.ok_or_else(|| at_end("missing gain"))?;
        if gain.len() != m * n {
            return Err(at_end("gain has the wrong number of entries"));
        }
        if x0.as_ref().is_some_and(|b: &BoxVec| b.dim() != n) {
            return Err(at_end("x0 has the wrong dimension"));
        }
        let mut components = Vec::new();
        for (lo, hi, xs, us) in comps {
            if xs.is_empty() {
                return Err(at_end("component without knots"));
            }
            if us.iter().any(|u| u.len() != m) || !xs.windows(2).all(|w| w[0] < w[1]) {
                return Err(at_end("knots must increase and carry m controls"));
            }
            let fits = (0..m)
                .map(|l| Pchip::new(xs.clone(), us.iter().map(|u| u[l]).collect()))
                .collect();
            components.push(ControllerComponent { lo, hi, fits });
        }
        Ok(Self {
            k: DMatrix::from_row_slice(m, n, &gain),
            x0,
            components,
        })
    }
}

/// Training set and interpolants from the inner boxes of `pav`.
///
/// Each connected component of the state projection is split into cells
/// of width about `spacing`; at each cell midpoint and at both component
/// ends the control is the midpoint of the widest admissible control
/// interval there (for `m > 1`, of the inner box with the largest control
/// volume).
pub fn extract_controller(
    pav: &Paving,
    k: &DMatrix<f64>,
    x0: Option<&BoxVec>,
    spacing: f64,
) -> Result<ControllerSpec, SynthError> {
    fit(pav, k, x0, spacing, &[])
}

/// [`extract_controller`] followed by [`verify_controller`]; every violating
/// grid point becomes an extra training point and the fit is repeated, at
/// most `rounds` times. Returns the last fit and its report.
pub fn extract_verified(
    pav: &Paving,
    k: &DMatrix<f64>,
    x0: Option<&BoxVec>,
    spacing: f64,
    grid: usize,
    rounds: usize,
) -> Result<(ControllerSpec, VerifyReport), SynthError> {
    let mut extra: Vec<f64> = Vec::new();
    let mut round = 0;
    loop {
        let ctl = fit(pav, k, x0, spacing, &extra)?;
        let report = verify_controller(pav, &ctl, grid);
        if report.passed() || round == rounds {
            return Ok((ctl, report));
        }
        round += 1;
        extra.extend(report.violations.iter().map(|(x, _)| x[0]));
    }
}

fn fit(
    pav: &Paving,
    k: &DMatrix<f64>,
    x0: Option<&BoxVec>,
    spacing: f64,
    extra: &[f64],
) -> Result<ControllerSpec, SynthError> {
    let n = pav.n();
    if n != 1 {
        return Err(SynthError::StateDimension(n));
    }
    assert!(spacing > 0.0, "spacing must be positive");
    let x0 = x0.filter(|b| !b.is_empty()).cloned();
    if pav.is_in_empty() && x0.is_none() {
        return Err(SynthError::NothingToFit);
    }
    let m = pav.m();
    let mut components = Vec::new();
    for (a, b) in pav.project().components_1d() {
        let cells = ((b - a) / spacing).round().max(1.0) as usize;
        let mut points: Vec<f64> = (0..cells)
            .map(|i| a + (b - a) * (i as f64 + 0.5) / cells as f64)
            .chain([a, b])
            .chain(extra.iter().copied().filter(|x| (a..=b).contains(x)))
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut xs = Vec::new();
        let mut us: Vec<Vec<f64>> = Vec::new();
        for x in points {
            if let Some(u) = training_control(pav, x) {
                xs.push(x);
                us.push(u);
            }
        }
        if xs.is_empty() {
            continue;
        }
        if let Some(i) = xs.iter().position(|&x| x == 0.0) {
            us[i].fill(0.0);
        }
        let fits = (0..m)
            .map(|l| Pchip::new(xs.clone(), us.iter().map(|u| u[l]).collect()))
            .collect();
        components.push(ControllerComponent { lo: a, hi: b, fits });
    }
    Ok(ControllerSpec {
        k: k.clone(),
        x0,
        components,
    })
}

fn training_control(pav: &Paving, x: f64) -> Option<Vec<f64>> {
    let column: Vec<&BoxVec> = pav
        .boxes_in()
        .iter()
        .filter(|b| b.dims()[0].contains(x))
        .collect();
    if column.is_empty() {
        return None;
    }
    if pav.m() == 1 {
        let mut spans: Vec<(f64, f64)> = column
            .iter()
            .map(|b| (b.dims()[1].lo(), b.dims()[1].hi()))
            .collect();
        spans.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in spans {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let mut best = merged[0];
        for &s in &merged[1..] {
            if s.1 - s.0 > best.1 - best.0 {
                best = s;
            }
        }
        return Some(vec![best.0 + (best.1 - best.0) / 2.0]);
    }
    let tail = |b: &BoxVec| b.tail(1);
    let mut best = tail(column[0]);
    for b in &column[1..] {
        let t = tail(b);
        if t.volume() > best.volume() {
            best = t;
        }
    }
    Some(best.midpoint())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checked: usize,
    /// Grid points inside `X₀`, covered by the linear law instead.
    pub skipped: usize,
    /// Points `(x, μ̃(x))` outside every inner box.
    pub violations: Vec<(Vec<f64>, Vec<f64>)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `μ̃` at `grid` evenly spaced points (endpoints included) of
/// every projection component and checks `(x, μ̃(x))` against the inner
/// boxes.
pub fn verify_controller(pav: &Paving, ctl: &ControllerSpec, grid: usize) -> VerifyReport {
    assert_eq!(pav.n(), 1, "one-dimensional state");
    let mut report = VerifyReport {
        checked: 0,
        skipped: 0,
        violations: Vec::new(),
    };
    let mut point = vec![0.0; 1 + pav.m()];
    for (a, b) in pav.project().components_1d() {
        for i in 0..grid {
            let x = if grid == 1 {
                a + (b - a) / 2.0
            } else if i + 1 == grid {
                b
            } else {
                a + (b - a) * i as f64 / (grid - 1) as f64
            };
            if ctl.x0.as_ref().is_some_and(|b| b.contains_point(&[x])) {
                report.skipped += 1;
                continue;
            }
            let u = ctl.eval(&[x]);
            point[0] = x;
            point[1..].copy_from_slice(&u);
            report.checked += 1;
            if !pav.in_contains_point(&point) {
                report.violations.push((vec![x], u));
            }
        }
    }
    report
}
