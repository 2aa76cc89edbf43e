//! CSV ingestion. Every file needs a header row; groups are keyed by
//! `(file, group label)` so the same label in two files gives two groups.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use monotest::{CensoredSample, DensitySample, RegressionSample};

use crate::InputError;

struct Group {
    file: usize,
    rows: Vec<csv::StringRecord>,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, InputError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| InputError(format!("{}: missing column `{name}`", path.display())))
}

/// Groups in order of first appearance, and each file's header.
fn read_groups(paths: &[PathBuf], group_col: &str) -> Result<(Vec<Group>, Vec<csv::StringRecord>), InputError> {
    let mut groups: Vec<Group> = Vec::new();
    let mut headers = Vec::new();
    for (f, path) in paths.iter().enumerate() {
        let file = File::open(path)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?
            .clone();
        let g = column(&header, group_col, path)?;
        let mut index: HashMap<String, usize> = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            let label = record.get(g).unwrap_or_default().to_string();
            let slot = *index.entry(label).or_insert_with(|| {
                groups.push(Group {
                    file: f,
                    rows: Vec::new(),
                });
                groups.len() - 1
            });
            groups[slot].rows.push(record);
        }
        headers.push(header);
    }
    if groups.is_empty() {
        return Err(InputError("no observations in the input".into()));
    }
    Ok((groups, headers))
}

fn number(record: &csv::StringRecord, col: usize, what: &str) -> Result<f64, InputError> {
    let raw = record.get(col).unwrap_or_default();
    let line = record.position().map_or(0, |p| p.line());
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(InputError(format!("line {line}: `{raw}` is not a valid {what}"))),
    }
}

/// Column indices for each file, resolved against that file's header.
fn columns(
    paths: &[PathBuf],
    headers: &[csv::StringRecord],
    names: &[&str],
) -> Result<Vec<Vec<usize>>, InputError> {
    paths
        .iter()
        .zip(headers)
        .map(|(p, h)| names.iter().map(|n| column(h, n, p)).collect())
        .collect()
}

/// Rows `group,x`.
pub fn read_density(paths: &[PathBuf]) -> Result<Vec<DensitySample>, InputError> {
    let (groups, headers) = read_groups(paths, "group")?;
    let cols = columns(paths, &headers, &["x"])?;
    groups
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let x = cols[g.file][0];
            let obs = g
                .rows
                .iter()
                .map(|r| number(r, x, "observation"))
                .collect::<Result<Vec<_>, _>>()?;
            DensitySample::new(j, obs).map_err(|e| InputError(e.to_string()))
        })
        .collect()
}

/// Rows `group,i,y`; responses are ordered by the design index `i`.
pub fn read_regression(paths: &[PathBuf]) -> Result<Vec<RegressionSample>, InputError> {
    let (groups, headers) = read_groups(paths, "group")?;
    let cols = columns(paths, &headers, &["i", "y"])?;
    groups
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let (ic, yc) = (cols[g.file][0], cols[g.file][1]);
            let mut pairs = g
                .rows
                .iter()
                .map(|r| {
                    let raw = r.get(ic).unwrap_or_default();
                    let i = raw
                        .parse::<u64>()
                        .map_err(|_| InputError(format!("`{raw}` is not a valid design index")))?;
                    Ok((i, number(r, yc, "response")?))
                })
                .collect::<Result<Vec<_>, InputError>>()?;
            pairs.sort_by_key(|p| p.0);
            if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(InputError(format!("group {j}: repeated design index")));
            }
            RegressionSample::new(j, pairs.into_iter().map(|p| p.1).collect())
                .map_err(|e| InputError(e.to_string()))
        })
        .collect()
}

fn event_flag(raw: &str) -> Result<bool, InputError> {
    match raw {
        "1" | "true" | "TRUE" => Ok(true),
        "0" | "false" | "FALSE" => Ok(false),
        _ => Err(InputError(format!("`{raw}` is not a valid event indicator (use 0 or 1)"))),
    }
}

/// Rows `group,x,delta` with `delta = 1` for an observed event.
pub fn read_censored(paths: &[PathBuf]) -> Result<Vec<CensoredSample>, InputError> {
    let (groups, headers) = read_groups(paths, "group")?;
    let cols = columns(paths, &headers, &["x", "delta"])?;
    groups
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let (xc, dc) = (cols[g.file][0], cols[g.file][1]);
            let mut times = Vec::with_capacity(g.rows.len());
            let mut events = Vec::with_capacity(g.rows.len());
            for r in &g.rows {
                times.push(number(r, xc, "time")?);
                events.push(event_flag(r.get(dc).unwrap_or_default())?);
            }
            CensoredSample::new(j, times, events).map_err(|e| InputError(e.to_string()))
        })
        .collect()
}
