//! Text formats for models and sample files.
//!
//! General model:
//! ```text
//! tree-bayesnet v1 n=<n>
//! root <p_plus>
//! edge <parent> <child> <q_pp> <q_pm>   (n-1 lines)
//! ```
//! Symmetric model:
//! ```text
//! tree-ising-sym v1 n=<n>
//! edge <i> <j> <alpha>                  (n-1 lines)
//! ```
//! Sample file: a `# samples n=<n>` header followed by one line per sample,
//! each with `n` whitespace-separated values in `{+1, -1}` (written as
//! `1` / `-1`). Lines starting with `#` are ignored in all formats.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{ModelError, SymmetricTreeModel, TreeModel};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("expected {expected} edge lines, found {got}")]
    EdgeCount { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse { line, msg: msg.into() }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_header(line: usize, text: &str, tag: &str) -> Result<usize, IoError> {
    let mut it = text.split_whitespace();
    let (name, version, nfield) = (it.next(), it.next(), it.next());
    if name != Some(tag) || version != Some("v1") {
        return Err(parse_err(line, format!("expected header `{tag} v1 n=<n>`")));
    }
    let nfield = nfield.ok_or_else(|| parse_err(line, "missing n=<n> field"))?;
    let n = nfield
        .strip_prefix("n=")
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| parse_err(line, format!("bad field `{nfield}`, expected n=<n>")))?;
    if it.next().is_some() {
        return Err(parse_err(line, "trailing fields after header"));
    }
    Ok(n)
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, IoError> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad number `{tok}`")))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, IoError> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("bad node index `{tok}`")))
}

/// Parses a general model from its text form.
pub fn parse_tree_model(text: &str) -> Result<TreeModel, IoError> {
    let mut lines = content_lines(text);
    let (hline, htext) = lines.next().ok_or(IoError::MissingHeader)?;
    let n = parse_header(hline, htext, "tree-bayesnet")?;

    let (rline, rtext) = lines
        .next()
        .ok_or_else(|| parse_err(hline, "missing `root <p>` line"))?;
    let rtoks: Vec<&str> = rtext.split_whitespace().collect();
    if rtoks.len() != 2 || rtoks[0] != "root" {
        return Err(parse_err(rline, "expected `root <p>`"));
    }
    let root_prob = parse_f64(rline, rtoks[1])?;

    let mut edges = Vec::new();
    let mut cond = Vec::new();
    for (lno, ltext) in lines {
        let toks: Vec<&str> = ltext.split_whitespace().collect();
        if toks.len() != 5 || toks[0] != "edge" {
            return Err(parse_err(lno, "expected `edge <parent> <child> <q_pp> <q_pm>`"));
        }
        edges.push((parse_usize(lno, toks[1])?, parse_usize(lno, toks[2])?));
        cond.push((parse_f64(lno, toks[3])?, parse_f64(lno, toks[4])?));
    }
    if n > 0 && edges.len() != n - 1 {
        return Err(IoError::EdgeCount { expected: n.saturating_sub(1), got: edges.len() });
    }
    Ok(TreeModel::new(n, edges, root_prob, cond)?)
}

/// Serializes a general model; [`parse_tree_model`] round-trips the output.
pub fn write_tree_model(m: &TreeModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tree-bayesnet v1 n={}", m.n);
    let _ = writeln!(out, "root {}", m.root_prob);
    for (e, &(qpp, qpm)) in m.edges.iter().zip(&m.cond) {
        let _ = writeln!(out, "edge {} {} {} {}", e.0, e.1, qpp, qpm);
    }
    out
}

/// Parses a symmetric model from its text form.
pub fn parse_symmetric_model(text: &str) -> Result<SymmetricTreeModel, IoError> {
    let mut lines = content_lines(text);
    let (hline, htext) = lines.next().ok_or(IoError::MissingHeader)?;
    let n = parse_header(hline, htext, "tree-ising-sym")?;
    let mut edges = Vec::new();
    let mut alpha = Vec::new();
    for (lno, ltext) in lines {
        let toks: Vec<&str> = ltext.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "edge" {
            return Err(parse_err(lno, "expected `edge <i> <j> <alpha>`"));
        }
        edges.push((parse_usize(lno, toks[1])?, parse_usize(lno, toks[2])?));
        alpha.push(parse_f64(lno, toks[3])?);
    }
    if n > 0 && edges.len() != n - 1 {
        return Err(IoError::EdgeCount { expected: n.saturating_sub(1), got: edges.len() });
    }
    Ok(SymmetricTreeModel::new(n, edges, alpha)?)
}

/// Serializes a symmetric model; [`parse_symmetric_model`] round-trips it.
pub fn write_symmetric_model(m: &SymmetricTreeModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tree-ising-sym v1 n={}", m.n);
    for (e, &a) in m.edges.iter().zip(&m.alpha) {
        let _ = writeln!(out, "edge {} {} {}", e.0, e.1, a);
    }
    out
}

/// Parses a sample file: `# samples n=<n>` header, one assignment per line.
pub fn parse_samples(text: &str) -> Result<(usize, Vec<Vec<i8>>), IoError> {
    let mut n: Option<usize> = None;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if n.is_none() {
                let mut it = rest.split_whitespace();
                if it.next() == Some("samples") {
                    if let Some(v) = it.next().and_then(|f| f.strip_prefix("n=")) {
                        n = Some(
                            v.parse::<usize>()
                                .map_err(|_| parse_err(lno, "bad n=<n> in header"))?,
                        );
                    }
                }
            }
            continue;
        }
        let n = n.ok_or(IoError::MissingHeader)?;
        let mut row = Vec::with_capacity(n);
        for tok in line.split_whitespace() {
            match tok {
                "1" | "+1" => row.push(1i8),
                "-1" => row.push(-1i8),
                other => return Err(parse_err(lno, format!("bad value `{other}`"))),
            }
        }
        if row.len() != n {
            return Err(parse_err(lno, format!("expected {n} values, got {}", row.len())));
        }
        samples.push(row);
    }
    let n = n.ok_or(IoError::MissingHeader)?;
    Ok((n, samples))
}

/// Serializes samples with the `# samples n=<n>` header.
pub fn write_samples(n: usize, samples: &[Vec<i8>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# samples n={n}");
    for s in samples {
        for (t, v) in s.iter().enumerate() {
            if t > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_model_roundtrip() {
        let m = TreeModel::new(
            4,
            vec![(0, 1), (1, 2), (1, 3)],
            0.3,
            vec![(0.8, 0.25), (0.5, 0.5), (1.0, 0.0)],
        )
        .unwrap();
        let text = write_tree_model(&m);
        let back = parse_tree_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_tree_model(&back), text);
    }

    #[test]
    fn symmetric_model_roundtrip() {
        let m = SymmetricTreeModel::new(3, vec![(0, 1), (1, 2)], vec![0.5, -0.25]).unwrap();
        let text = write_symmetric_model(&m);
        let back = parse_symmetric_model(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let text = "# a comment\n\ntree-bayesnet v1 n=2\n# another\nroot 0.5\nedge 0 1 0.9 0.1\n";
        let m = parse_tree_model(text).unwrap();
        assert_eq!(m.n, 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "tree-bayesnet v1 n=2\nroot 0.5\nedge 0 1 0.9\n";
        match parse_tree_model(text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_tree_model(""), Err(IoError::MissingHeader)));
        assert!(matches!(
            parse_tree_model("tree-bayesnet v1 n=3\nroot 0.5\nedge 0 1 0.9 0.1\n"),
            Err(IoError::EdgeCount { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn samples_roundtrip() {
        let rows = vec![vec![1i8, -1, 1], vec![-1, -1, -1]];
        let text = write_samples(3, &rows);
        let (n, back) = parse_samples(&text).unwrap();
        assert_eq!(n, 3);
        assert_eq!(back, rows);
        let (_, with_plus) = parse_samples("# samples n=2\n+1 -1\n").unwrap();
        assert_eq!(with_plus, vec![vec![1i8, -1]]);
    }

    #[test]
    fn samples_require_header_and_width() {
        assert!(matches!(parse_samples("1 -1\n"), Err(IoError::MissingHeader)));
        assert!(parse_samples("# samples n=3\n1 -1\n").is_err());
        assert!(parse_samples("# samples n=2\n1 0\n").is_err());
    }
}
