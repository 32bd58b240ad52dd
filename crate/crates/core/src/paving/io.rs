//! Line-oriented paving text format.
//!
//! ```text
//! dim=2 n=1 m=1 root=[-2,2],[-2,2]
//! IN [-2,-1],[0,1]
//! BOU [-1,-0.5],[0,0.5]
//! ```
//!
//! Box lines are ordered by lower corner (then upper corner, then label).

use std::fmt::Write;

use super::{Label, Paving, PavingError};
use crate::interval::{BoxVec, IntervalFloat};

impl<T: IntervalFloat> Paving<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "dim={} n={} m={} root={}",
            self.dim(),
            self.n(),
            self.m(),
            self.root()
        )
        .unwrap();
        let mut rows: Vec<(Label, &BoxVec<T>)> = [Label::In, Label::Out, Label::Bou]
            .into_iter()
            .flat_map(|l| self.boxes(l).iter().map(move |b| (l, b)))
            .collect();
        rows.sort_by(|a, b| a.1.lex_cmp(b.1).then(a.0.cmp(&b.0)));
        for (label, b) in rows {
            writeln!(out, "{} {}", label.as_str(), b).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PavingError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(PavingError::Malformed {
            line: 1,
            message: "missing header".into(),
        })?;
        let malformed = |line: usize, message: String| PavingError::Malformed { line, message };
        let mut dim = None;
        let mut n = None;
        let mut m = None;
        let mut root = None;
        for field in header.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| malformed(1, format!("bad header field '{field}'")))?;
            let num = || {
                v.parse::<usize>()
                    .map_err(|_| malformed(1, format!("bad value for {k}")))
            };
            match k {
                "dim" => dim = Some(num()?),
                "n" => n = Some(num()?),
                "m" => m = Some(num()?),
                "root" => {
                    root = Some(
                        v.parse::<BoxVec<T>>()
                            .map_err(|e| malformed(1, e.to_string()))?,
                    )
                }
                _ => return Err(malformed(1, format!("unknown header field '{k}'"))),
            }
        }
        let missing = |what: &str| malformed(1, format!("header lacks {what}"));
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let root = root.ok_or_else(|| missing("root"))?;
        if n + m != dim {
            return Err(malformed(1, format!("n + m = {} but dim = {dim}", n + m)));
        }
        if root.dim() != dim {
            return Err(PavingError::DimMismatch {
                line: 1,
                expected: dim,
                got: root.dim(),
            });
        }
        let mut p = Paving::new(root, n);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let (tag, rest) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| malformed(lineno, "expected '<label> <box>'".into()))?;
            let label = match tag {
                "IN" => Label::In,
                "OUT" => Label::Out,
                "BOU" => Label::Bou,
                other => return Err(malformed(lineno, format!("unknown label '{other}'"))),
            };
            let b: BoxVec<T> = rest
                .parse()
                .map_err(|e: crate::interval::IntervalError| malformed(lineno, e.to_string()))?;
            if b.dim() != dim {
                return Err(PavingError::DimMismatch {
                    line: lineno,
                    expected: dim,
                    got: b.dim(),
                });
            }
            p.push(label, b);
        }
        p.canonicalize();
        Ok(p)
    }
}
