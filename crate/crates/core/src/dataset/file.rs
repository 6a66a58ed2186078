//! Text dataset format: a header `# n_sites=<int> basis=<x|y|z> seed=<uint>`
//! followed by one shot per line as `0`/`1` characters.

use std::path::Path;

use super::MeasurementDataset;
use crate::error::{Error, Result};
use crate::mps::PauliBasis;

pub fn render_dataset(d: &MeasurementDataset) -> String {
    let mut s = String::with_capacity(48 + d.len() * (d.n_sites + 1));
    s.push_str(&format!("# n_sites={} basis={} seed={}\n", d.n_sites, d.basis, d.seed));
    for shot in &d.shots {
        s.extend(shot.iter().map(|&b| if b == 0 { '0' } else { '1' }));
        s.push('\n');
    }
    s
}

pub fn write_dataset(d: &MeasurementDataset, path: &Path) -> Result<()> {
    crate::io::atomic_write_str(path, &render_dataset(d))
}

pub fn read_dataset(path: &Path) -> Result<MeasurementDataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_dataset(text: &str) -> Result<MeasurementDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let rest = header.strip_prefix('#').ok_or_else(|| perr(1, "header must start with '#'"))?;
    let (mut n, mut basis, mut seed) = (None, None, None);
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| perr(1, format!("malformed header field '{field}'")))?;
        match k {
            "n_sites" => n = Some(v.parse::<usize>().map_err(|_| perr(1, format!("bad n_sites '{v}'")))?),
            "basis" => basis = Some(v.parse::<PauliBasis>().map_err(|_| perr(1, format!("bad basis '{v}'")))?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|_| perr(1, format!("bad seed '{v}'")))?),
            other => return Err(perr(1, format!("unknown header field '{other}'"))),
        }
    }
    let n = n.ok_or_else(|| perr(1, "header lacks n_sites"))?;
    let basis = basis.ok_or_else(|| perr(1, "header lacks basis"))?;
    let seed = seed.ok_or_else(|| perr(1, "header lacks seed"))?;
    if n == 0 {
        return Err(perr(1, "n_sites must be positive"));
    }
    let mut shots = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let mut shot = Vec::with_capacity(n);
        for c in line.chars() {
            match c {
                '0' => shot.push(0),
                '1' => shot.push(1),
                other => return Err(perr(lineno, format!("illegal character '{other}'"))),
            }
        }
        if shot.len() != n {
            return Err(perr(lineno, format!("expected {n} bits, found {}", shot.len())));
        }
        shots.push(shot);
    }
    if shots.is_empty() {
        return Err(perr(1, "no shots after header"));
    }
    MeasurementDataset::new(n, basis, shots, seed)
}
