//! Model files for external solvers: MPS writer and reader, LP writer.
//!
//! The MPS writer keeps the fixed-format field layout. Column and row names
//! are generated from indices (`X_0_3_12`) and may be longer than eight
//! characters, so the output is also valid free-format MPS, which is how
//! [`read_mps`] parses it.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{MilpModel, Sense};

const OBJ_ROW: &str = "OBJ";

fn num(v: f64) -> String {
    // Shortest representation that parses back to the same f64.
    format!("{v}")
}

fn line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    let _ = writeln!(out, " {f1:<2} {f2:<8}  {f3:<8}  {f4}");
}

/// Serializes `model` as MPS.
pub fn export_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { &model.name };
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let tag = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {tag}  {}", c.name);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(k, a) in &c.terms {
            by_col[k].push((r, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (k, v) in model.variables.iter().enumerate() {
        if v.integer != in_int {
            let kind = if v.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{markers:<4}  'MARKER'                 {kind}");
            markers += 1;
            in_int = v.integer;
        }
        let mut wrote = false;
        if v.cost != 0.0 {
            line(&mut out, "", &v.name, OBJ_ROW, &num(v.cost));
            wrote = true;
        }
        for &(r, a) in &by_col[k] {
            line(&mut out, "", &v.name, &model.constraints[r].name, &num(a));
            wrote = true;
        }
        if !wrote {
            line(&mut out, "", &v.name, OBJ_ROW, "0");
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{markers:<4}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            line(&mut out, "", "RHS", &c.name, &num(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for v in &model.variables {
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            line(&mut out, "FX", "BND", &v.name, &num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            line(&mut out, "FR", "BND", &v.name, "");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            line(&mut out, "MI", "BND", &v.name, "");
        } else if lo != 0.0 {
            line(&mut out, "LO", "BND", &v.name, &num(lo));
        }
        if hi.is_finite() {
            line(&mut out, "UP", "BND", &v.name, &num(hi));
        } else if v.integer {
            line(&mut out, "PL", "BND", &v.name, "");
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn parse_num(token: &str, line_no: usize) -> Result<f64> {
    token
        .parse()
        .map_err(|_| Error::ModelFormat(format!("line {line_no}: bad number '{token}'")))
}

/// Parses free-format MPS (which includes the output of [`export_mps`]).
/// `RANGES` and objective constants are not supported.
pub fn read_mps(text: &str) -> Result<MilpModel> {
    let mut model = MilpModel::new("");
    let mut section = Section::None;
    let mut rows: HashMap<String, Option<usize>> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut integer = false;
    let mut objective_name: Option<String> = None;
    let mut ended = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    model.name = tokens.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => {
                    return Err(Error::ModelFormat(format!(
                        "line {line_no}: unsupported section '{other}'"
                    )))
                }
            };
            continue;
        }
        let bad = || Error::ModelFormat(format!("line {line_no}: malformed entry"));
        match section {
            Section::None => return Err(bad()),
            Section::Rows => {
                let [tag, name] = tokens[..] else {
                    return Err(bad());
                };
                let sense = match tag {
                    "N" => {
                        if objective_name.is_none() {
                            objective_name = Some(name.to_string());
                        }
                        rows.insert(name.to_string(), None);
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(bad()),
                };
                let r = model.add_constraint(name, Vec::new(), sense, 0.0);
                rows.insert(name.to_string(), Some(r));
            }
            Section::Columns => {
                if tokens.get(1) == Some(&"'MARKER'") {
                    match tokens.get(2) {
                        Some(&"'INTORG'") => integer = true,
                        Some(&"'INTEND'") => integer = false,
                        _ => return Err(bad()),
                    }
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(bad());
                }
                let name = tokens[0];
                let k = *cols.entry(name.to_string()).or_insert_with(|| {
                    model.add_var(name, 0.0, f64::INFINITY, integer, 0.0)
                });
                for pair in tokens[1..].chunks(2) {
                    let value = parse_num(pair[1], line_no)?;
                    match rows.get(pair[0]) {
                        Some(None) => {
                            if Some(pair[0]) == objective_name.as_deref() {
                                model.variables[k].cost = value;
                            }
                        }
                        Some(Some(r)) => {
                            if value != 0.0 {
                                model.constraints[*r].terms.push((k, value));
                            }
                        }
                        None => {
                            return Err(Error::ModelFormat(format!(
                                "line {line_no}: unknown row '{}'",
                                pair[0]
                            )))
                        }
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(bad());
                }
                for pair in tokens[1..].chunks(2) {
                    let value = parse_num(pair[1], line_no)?;
                    match rows.get(pair[0]) {
                        Some(Some(r)) => model.constraints[*r].rhs = value,
                        Some(None) => {
                            return Err(Error::ModelFormat(format!(
                                "line {line_no}: objective constants are not supported"
                            )))
                        }
                        None => {
                            return Err(Error::ModelFormat(format!(
                                "line {line_no}: unknown row '{}'",
                                pair[0]
                            )))
                        }
                    }
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(bad());
                }
                let k = *cols.get(tokens[2]).ok_or_else(|| {
                    Error::ModelFormat(format!("line {line_no}: unknown column '{}'", tokens[2]))
                })?;
                let value = match tokens.get(3) {
                    Some(t) => Some(parse_num(t, line_no)?),
                    None => None,
                };
                let v = &mut model.variables[k];
                let need = |value: Option<f64>| value.ok_or_else(bad);
                match tokens[0] {
                    "UP" => v.upper = need(value)?,
                    "LO" => v.lower = need(value)?,
                    "FX" => {
                        let x = need(value)?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "BV" => {
                        v.integer = true;
                        v.lower = 0.0;
                        v.upper = 1.0;
                    }
                    "LI" => {
                        v.integer = true;
                        v.lower = need(value)?;
                    }
                    "UI" => {
                        v.integer = true;
                        v.upper = need(value)?;
                    }
                    _ => return Err(bad()),
                }
            }
        }
    }
    if !ended {
        return Err(Error::ModelFormat("missing ENDATA".into()));
    }
    Ok(model)
}

fn lp_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    let mut on_line = 0;
    for (a, name) in terms {
        if on_line == 8 {
            out.push_str("\n   ");
            on_line = 0;
        }
        let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
        if first {
            let _ = write!(out, "{sign}{} {name}", num(a.abs()));
        } else {
            let _ = write!(out, " {sign} {} {name}", num(a.abs()));
        }
        first = false;
        on_line += 1;
    }
    if first {
        out.push('0');
    }
}

/// Serializes `model` in the CPLEX LP text format.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n obj: ");
    lp_terms(
        &mut out,
        model
            .variables
            .iter()
            .filter(|v| v.cost != 0.0)
            .map(|v| (v.cost, v.name.clone())),
    );
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}: ", c.name);
        lp_terms(
            &mut out,
            c.terms
                .iter()
                .map(|&(k, a)| (a, model.variables[k].name.clone())),
        );
        let _ = writeln!(out, " {} {}", c.sense, num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let lo = if v.lower == f64::NEG_INFINITY {
            "-inf".to_string()
        } else {
            num(v.lower)
        };
        let hi = if v.upper == f64::INFINITY {
            "+inf".to_string()
        } else {
            num(v.upper)
        };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
    }
    let ints: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.integer)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MilpModel {
        let mut m = MilpModel::new("sample");
        let x = m.add_var("x", 0.0, 4.0, false, 1.5);
        let y = m.add_var("long_column_name", 1.0, 7.0, true, -2.0);
        let z = m.add_var("z", f64::NEG_INFINITY, f64::INFINITY, false, 0.0);
        m.add_constraint("c1", vec![(x, 1.0), (y, -0.1)], Sense::Le, 3.25);
        m.add_constraint("c2", vec![(y, 2.0), (z, 1.0)], Sense::Eq, 0.0);
        m.add_constraint("c3", vec![(x, 1.0), (z, 1.0)], Sense::Ge, -1.0);
        m
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let text = export_mps(&m);
        let back = read_mps(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_model_skeleton() {
        let m = MilpModel::new("empty");
        let text = export_mps(&m);
        assert!(text.contains("ROWS") && text.contains("COLUMNS") && text.ends_with("ENDATA\n"));
        let back = read_mps(&text).unwrap();
        assert_eq!(back.n_vars(), 0);
        assert_eq!(back.n_constraints(), 0);
    }

    #[test]
    fn reader_rejects_garbage() {
        assert!(read_mps("NAME x\nROWS\n N OBJ\n").is_err());
        assert!(read_mps("NAME x\nRANGES\nENDATA\n").is_err());
        assert!(read_mps("NAME x\nROWS\n N OBJ\nCOLUMNS\n x NOPE 1\nENDATA\n").is_err());
    }

    #[test]
    fn lp_format_lists_integers() {
        let text = export_lp(&sample());
        assert!(text.starts_with("\\ sample\nMinimize\n obj: 1.5 x - 2 long_column_name"));
        assert!(text.contains(" c2: 2 long_column_name + 1 z = 0"));
        assert!(text.contains("General\n long_column_name\n"));
        assert!(text.contains(" -inf <= z <= +inf"));
    }
}
