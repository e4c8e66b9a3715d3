//! Transcript CSV: one row per round, columns
//! `t, x_0.., z_0.., loss_value, grad_0.., eta, r, r_prime, queries`.
//! Reals are written in plain decimal with 17 significant digits, which
//! reads back to the same `f64`.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::ogd::{RoundRecord, Transcript};

/// Decimal (never exponent) rendering with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // the exponent of the 17-digit scientific form is exact
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let prec = (16 - exp).max(0) as usize;
    format!("{x:.prec$}")
}

pub fn header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x_{i}")));
    cols.extend((0..n).map(|i| format!("z_{i}")));
    cols.push("loss_value".into());
    cols.extend((0..n).map(|i| format!("grad_{i}")));
    cols.extend(["eta", "r", "r_prime", "queries"].map(String::from));
    cols.join(",")
}

pub fn emit(transcript: &Transcript) -> String {
    let n = transcript.dim();
    let mut out = header(n);
    out.push('\n');
    for r in &transcript.rounds {
        let mut cells = vec![r.t.to_string()];
        cells.extend(r.x.iter().map(|v| format_real(*v)));
        cells.extend(r.z.iter().map(|v| format_real(*v)));
        cells.push(format_real(r.loss_value));
        cells.extend(r.grad.iter().map(|v| format_real(*v)));
        cells.extend([r.eta, r.r, r.r_prime].map(format_real));
        cells.push(r.queries.to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn csv_error(line: usize, message: impl Into<String>) -> Error {
    Error::Csv { line, message: message.into() }
}

/// Reads the rounds back; the dimension comes from the header.
pub fn parse_rounds(text: &str) -> Result<Vec<RoundRecord>> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| csv_error(1, "missing header"))?;
    let width = head.split(',').count();
    if width < 8 || (width - 6) % 3 != 0 {
        return Err(csv_error(1, format!("unexpected column count {width}")));
    }
    let n = (width - 6) / 3;
    if head != header(n) {
        return Err(csv_error(1, "header does not match the transcript layout"));
    }
    let mut rounds = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(csv_error(lineno, format!("expected {width} cells, found {}", cells.len())));
        }
        let real = |k: usize| -> Result<f64> {
            cells[k].parse().map_err(|_| csv_error(lineno, format!("bad number '{}'", cells[k])))
        };
        let reals = |from: usize| -> Result<Point> { (from..from + n).map(real).collect::<Result<Vec<_>>>().map(Point::new) };
        rounds.push(RoundRecord {
            t: cells[0].parse().map_err(|_| csv_error(lineno, "bad round index"))?,
            x: reals(1)?,
            z: reals(1 + n)?,
            loss_value: real(1 + 2 * n)?,
            grad: reals(2 + 2 * n)?,
            eta: real(2 + 3 * n)?,
            r: real(3 + 3 * n)?,
            r_prime: real(4 + 3 * n)?,
            queries: cells[5 + 3 * n].parse().map_err(|_| csv_error(lineno, "bad query count"))?,
        });
    }
    Ok(rounds)
}

/// Rebuilds a transcript from its CSV and the metadata kept in the summary.
pub fn parse(text: &str, seed: u64, schedule: &str, adversary: &str, sim_evaluations: u64) -> Result<Transcript> {
    let rounds = parse_rounds(text)?;
    Ok(Transcript {
        seed,
        schedule: schedule.to_string(),
        adversary: adversary.to_string(),
        total_queries: rounds.iter().map(|r| r.queries).sum(),
        rounds,
        sim_evaluations,
    })
}
