//! Transcript and report file formats.
//!
//! Transcript CSV: header `t,x,p` for binary transcripts and `t,x,p_1..p_K`
//! for multiclass ones; `t` is 1-based, binary outcomes are `{0,1}` and
//! multiclass outcomes are written 1-based to match the `p_i` column names.
//! Floats use deterministic 17-significant-digit scientific notation, which
//! round-trips `f64` bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{RegretReport, Transcript};

/// 17 significant digits: exact round-trip for every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_transcript<W: Write>(mut w: W, t: &Transcript) -> Result<()> {
    if t.is_binary() {
        writeln!(w, "t,x,p")?;
        for round in 0..t.len() {
            writeln!(
                w,
                "{},{},{}",
                round + 1,
                t.outcome(round),
                fmt_f64(t.binary_pred(round))
            )?;
        }
    } else {
        let headers: Vec<String> = (1..=t.arity()).map(|i| format!("p_{i}")).collect();
        writeln!(w, "t,x,{}", headers.join(","))?;
        for round in 0..t.len() {
            let row: Vec<String> = t.prediction(round).iter().map(|&c| fmt_f64(c)).collect();
            writeln!(w, "{},{},{}", round + 1, t.outcome(round) + 1, row.join(","))?;
        }
    }
    Ok(())
}

pub fn write_transcript_file(path: &Path, t: &Transcript) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_transcript(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn read_transcript<R: BufRead>(r: R) -> Result<Transcript> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty transcript file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let binary = cols == ["t", "x", "p"];
    if !binary {
        if cols.len() < 3 || cols[0] != "t" || cols[1] != "x" {
            return Err(Error::Parse(format!("unrecognized header: {header}")));
        }
        for (i, c) in cols[2..].iter().enumerate() {
            if *c != format!("p_{}", i + 1) {
                return Err(Error::Parse(format!("unrecognized header column: {c}")));
            }
        }
    }
    let arity = if binary { 2 } else { cols.len() - 2 };

    let mut outcomes: Vec<usize> = Vec::new();
    let mut preds: Vec<f64> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                fields.len()
            )));
        }
        let x: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad outcome {}", lineno + 2, fields[1])))?;
        outcomes.push(x);
        for f in &fields[2..] {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad float {f}", lineno + 2)))?;
            preds.push(v);
        }
    }
    if binary {
        let scalar = preds;
        let outs: Vec<u8> = outcomes
            .iter()
            .map(|&x| {
                u8::try_from(x).map_err(|_| Error::Parse(format!("binary outcome {x}")))
            })
            .collect::<Result<_>>()?;
        Transcript::binary(scalar, outs)
    } else {
        // Multiclass outcomes are stored 1-based on disk.
        let outs: Vec<usize> = outcomes
            .iter()
            .map(|&x| {
                if x == 0 {
                    Err(Error::Parse("multiclass outcome 0 (outcomes are 1-based)".into()))
                } else {
                    Ok(x - 1)
                }
            })
            .collect::<Result<_>>()?;
        Transcript::multiclass(arity, preds, outs)
    }
}

pub fn read_transcript_file(path: &Path) -> Result<Transcript> {
    read_transcript(BufReader::new(File::open(path)?))
}

/// Writes reports sharing one schema as a CSV table, one row per report.
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[RegretReport]) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    writeln!(w, "{}", first.csv_header())?;
    for r in reports {
        if r.csv_header() != first.csv_header() {
            return Err(Error::Validation("reports do not share a schema".into()));
        }
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}
