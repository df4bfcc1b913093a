//! Readers for time series, edge lists and count files, and the key=value
//! configuration file.

use std::fs;

use bandgp::models::GraphSpec;

use crate::error::{CliError, Result};

pub fn read_to_string(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

/// `t,y` rows; a first row that does not parse as numbers is taken as a header.
pub fn parse_series(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::MalformedCsv {
            line: e.position().map_or(k + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(CliError::MalformedCsv {
                line,
                msg: format!("expected 2 fields `t,y`, found {}", rec.len()),
            });
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                t.push(v[0]);
                y.push(v[1]);
            }
            Ok(_) => return Err(CliError::MalformedCsv { line, msg: "non-finite value".into() }),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(CliError::MalformedCsv { line, msg: e.to_string() }),
        }
    }
    if t.is_empty() {
        return Err(CliError::MalformedCsv { line: 0, msg: "no data rows".into() });
    }
    Ok((t, y))
}

pub fn read_series(path: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_series(&read_to_string(path)?)
}

/// Edge list plus any inline `node i count` observations.
pub fn read_graph(path: &str) -> Result<(GraphSpec, Vec<(usize, f64)>)> {
    Ok(GraphSpec::parse_edge_list(&read_to_string(path)?)?)
}

/// `i count` lines (an optional leading `node` keyword is accepted).
pub fn parse_counts(text: &str, path: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::MalformedInput {
            path: path.to_string(),
            line: k + 1,
            msg,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let toks = match toks.as_slice() {
            ["node", rest @ ..] => rest,
            all => all,
        };
        let [i, c] = toks else {
            return Err(err(format!("expected `i count`, got `{line}`")));
        };
        let i = i.parse::<usize>().map_err(|e| err(format!("bad node `{i}`: {e}")))?;
        let c = c.parse::<f64>().map_err(|e| err(format!("bad count `{c}`: {e}")))?;
        out.push((i, c));
    }
    Ok(out)
}

pub fn read_counts(path: &str) -> Result<Vec<(usize, f64)>> {
    parse_counts(&read_to_string(path)?, path)
}

/// `key = value` lines with `#` comments.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected `key = value`", k + 1)))?;
        out.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(out)
}

/// Appends config entries as `--key value` unless the flag is already given.
pub fn merge_config(mut args: Vec<String>, config: &[(String, String)]) -> Vec<String> {
    for (key, value) in config {
        let flag = format!("--{key}");
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given || key == "config" {
            continue;
        }
        match value.as_str() {
            "true" => args.push(flag),
            "false" => {}
            _ => {
                args.push(flag);
                args.push(value.clone());
            }
        }
    }
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_header_is_optional() {
        assert_eq!(parse_series("t,y\n0,1\n1,2\n").unwrap(), (vec![0.0, 1.0], vec![1.0, 2.0]));
        assert_eq!(parse_series("0, 1\n1 ,2").unwrap().0, vec![0.0, 1.0]);
        assert!(matches!(parse_series("0,1\nx,2"), Err(CliError::MalformedCsv { line: 2, .. })));
        assert!(matches!(parse_series("0,1,2"), Err(CliError::MalformedCsv { .. })));
        assert!(parse_series("t,y\n").is_err());
    }

    #[test]
    fn counts_and_config() {
        assert_eq!(parse_counts("0 3\nnode 2 1 # c\n", "f").unwrap(), vec![(0, 3.0), (2, 1.0)]);
        assert!(parse_counts("0 3 4", "f").is_err());
        let cfg = parse_config("reps = 3\n# x\nverbose=true\nquiet=false\n").unwrap();
        let args = merge_config(vec!["bandgp".into(), "x".into(), "--reps".into(), "9".into()], &cfg);
        assert_eq!(args, vec!["bandgp", "x", "--reps", "9", "--verbose"]);
    }
}
