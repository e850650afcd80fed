//! Plot-ready tables: score histograms and the threshold sweep.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;

use morphguard::embeddings::format_float;
use morphguard::metrics::{MorphFilter, SweepRow, SystemScores};
use morphguard::{Error, Result};

/// Uniform bins over `[0, pi]`. The last bin is closed on the right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistogramSpec {
    bin_count: usize,
}

impl HistogramSpec {
    pub fn new(bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::InvalidParams("--bins must be positive".into()));
        }
        Ok(Self { bin_count })
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let n = self.bin_count as f64;
        (PI * bin as f64 / n, PI * (bin + 1) as f64 / n)
    }

    pub fn bin_of(&self, score: f64) -> usize {
        let raw = (score / PI * self.bin_count as f64).floor();
        (raw.max(0.0) as usize).min(self.bin_count - 1)
    }

    pub fn counts(&self, scores: &[f64]) -> Vec<u64> {
        let mut counts = vec![0; self.bin_count];
        for &s in scores {
            counts[self.bin_of(s)] += 1;
        }
        counts
    }
}

/// Score populations by histogram label: `mated`, `nonmated` and
/// `morph:<kind>` for each morph kind.
pub fn labelled_scores(scores: &SystemScores) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![
        ("mated".to_owned(), scores.mated().to_vec()),
        ("nonmated".to_owned(), scores.nonmated().to_vec()),
    ];
    for label in scores.morph_labels() {
        let values = scores.morph_scores(MorphFilter::Label(&label));
        out.push((format!("morph:{label}"), values));
    }
    out
}

pub fn write_histogram(
    scores: &SystemScores,
    spec: HistogramSpec,
    out: &mut dyn Write,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["label", "bin_lo", "bin_hi", "count"])
        .map_err(csv_err)?;
    for (label, values) in labelled_scores(scores) {
        for (bin, count) in spec.counts(&values).into_iter().enumerate() {
            let (lo, hi) = spec.edges(bin);
            wtr.write_record([
                label.as_str(),
                &format_float(lo),
                &format_float(hi),
                &count.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Sweep columns: `t,fmr,fnmr,apcer`, one `mmpmr:<kind>` per non-worst-case
/// kind, then `wcmmpmr`. Undefined rates are left empty.
pub fn write_sweep(rows: &[SweepRow], out: &mut dyn Write) -> Result<()> {
    let kinds: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r.mmpmr.keys().map(String::as_str))
        .collect();
    let mut header = vec!["t".to_owned(), "fmr".into(), "fnmr".into(), "apcer".into()];
    header.extend(kinds.iter().map(|k| format!("mmpmr:{k}")));
    header.push("wcmmpmr".into());
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for row in rows {
        let mut fields = vec![
            format_float(row.t),
            format_float(row.fmr),
            format_float(row.fnmr),
            opt(row.apcer),
        ];
        fields.extend(kinds.iter().map(|k| opt(row.mmpmr.get(*k).copied())));
        fields.push(opt(row.wcmmpmr));
        wtr.write_record(&fields).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidRecord(format!("{other:?}")),
    }
}
