//! CSV and JSON artifact formats.
//!
//! Writers emit a fixed header and format floats with `Display` (shortest
//! round-trip representation) except sample fidelities, which use 9 decimals.
//! Readers check the header, report failures as [`Error::Parse`] with the
//! 1-based line number, and reject empty files.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::evolution::{EvaluatedSample, GenerationStats, Individual, Metrics};
use crate::qfi::QfiCurve;
use crate::sampling::{Bin, BinnedDistribution, SampleRecord};

pub const SAMPLES_HEADER: [&str; 3] = ["fidelity", "gate_count", "depth"];
pub const BINS_HEADER: [&str; 5] = ["bin_lo", "bin_hi", "count", "mean_fidelity", "probability"];
pub const QFI_HEADER: [&str; 4] = ["fidelity", "p_hat", "qfi_raw", "qfi_smooth"];
pub const HISTORY_HEADER: [&str; 9] =
    ["generation", "best_score", "mean_fid", "median_fid", "iqr_fid", "mean_sv", "mean_rob", "mean_depth", "mean_gates"];
pub const EVO_SAMPLES_HEADER: [&str; 8] =
    ["generation", "score", "score_raw", "fidelity", "sv", "robustness", "depth", "gates"];

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Deserialize { err, .. } => Error::parse(line, err.to_string()),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::parse(line, format!("expected {expected_len} fields, found {len}"))
        }
        other => Error::parse(line, format!("{other:?}")),
    }
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header).map_err(csv_error)?;
    Ok(out)
}

fn put<W: Write>(out: &mut csv::Writer<W>, fields: &[String]) -> Result<()> {
    out.write_record(fields).map_err(csv_error)
}

fn read_rows<R: Read, T: DeserializeOwned>(r: R, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let found = rdr.headers().map_err(csv_error)?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Err(Error::parse(1, "empty file"));
    }
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(1, format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_error)?;
    if rows.is_empty() {
        return Err(Error::parse(2, "no data rows"));
    }
    Ok(rows)
}

/// Incremental samples CSV writer for streamed ensembles.
pub struct SamplesWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> SamplesWriter<W> {
    pub fn new(w: W) -> Result<SamplesWriter<W>> {
        Ok(SamplesWriter { out: writer(w, &SAMPLES_HEADER)? })
    }

    pub fn write(&mut self, r: &SampleRecord) -> Result<()> {
        put(&mut self.out, &[format!("{:.9}", r.fidelity), r.gate_count.to_string(), r.depth.to_string()])
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_samples<'a, W: Write>(w: W, records: impl IntoIterator<Item = &'a SampleRecord>) -> Result<()> {
    let mut out = SamplesWriter::new(w)?;
    for r in records {
        out.write(r)?;
    }
    out.finish().map(drop)
}

pub fn read_samples<R: Read>(r: R) -> Result<Vec<SampleRecord>> {
    read_rows(r, &SAMPLES_HEADER)
}

#[derive(Deserialize)]
struct BinRow {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
    mean_fidelity: f64,
    probability: f64,
}

pub fn write_bins<W: Write>(w: W, bins: &BinnedDistribution) -> Result<()> {
    let mut out = writer(w, &BINS_HEADER)?;
    for b in &bins.bins {
        put(
            &mut out,
            &[b.lo.to_string(), b.hi.to_string(), b.count.to_string(), b.mean_fidelity.to_string(), b.probability.to_string()],
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_bins<R: Read>(r: R) -> Result<BinnedDistribution> {
    let rows: Vec<BinRow> = read_rows(r, &BINS_HEADER)?;
    let bins = rows
        .into_iter()
        .map(|b| Bin { lo: b.bin_lo, hi: b.bin_hi, count: b.count, mean_fidelity: b.mean_fidelity, probability: b.probability })
        .collect();
    BinnedDistribution::from_bins(bins)
}

/// One grid row of a QFI curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiRow {
    pub fidelity: f64,
    pub p_hat: f64,
    pub qfi_raw: f64,
    pub qfi_smooth: f64,
}

pub fn write_qfi<W: Write>(w: W, curve: &QfiCurve) -> Result<()> {
    let mut out = writer(w, &QFI_HEADER)?;
    for i in 0..curve.grid.len() {
        put(
            &mut out,
            &[
                curve.grid[i].to_string(),
                curve.p_hat[i].to_string(),
                curve.qfi_raw[i].to_string(),
                curve.qfi_smooth[i].to_string(),
            ],
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_qfi<R: Read>(r: R) -> Result<Vec<QfiRow>> {
    read_rows(r, &QFI_HEADER)
}

pub fn write_history<W: Write>(w: W, history: &[GenerationStats]) -> Result<()> {
    let mut out = writer(w, &HISTORY_HEADER)?;
    for h in history {
        put(
            &mut out,
            &[
                h.generation.to_string(),
                h.best_score.to_string(),
                h.mean_fid.to_string(),
                h.median_fid.to_string(),
                h.iqr_fid.to_string(),
                h.mean_sv.to_string(),
                h.mean_rob.to_string(),
                h.mean_depth.to_string(),
                h.mean_gates.to_string(),
            ],
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(r: R) -> Result<Vec<GenerationStats>> {
    read_rows(r, &HISTORY_HEADER)
}

/// One evaluated individual without its circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvoSampleRow {
    pub generation: usize,
    pub score: f64,
    pub score_raw: f64,
    pub fidelity: f64,
    pub sv: f64,
    pub robustness: f64,
    pub depth: usize,
    pub gates: usize,
}

impl From<&EvaluatedSample> for EvoSampleRow {
    fn from(s: &EvaluatedSample) -> EvoSampleRow {
        let i = &s.individual;
        EvoSampleRow {
            generation: s.generation,
            score: i.score,
            score_raw: i.score_raw,
            fidelity: i.metrics.fidelity,
            sv: i.metrics.sv,
            robustness: i.metrics.robustness,
            depth: i.metrics.depth,
            gates: i.metrics.gate_count,
        }
    }
}

pub fn write_evo_samples<'a, W: Write>(w: W, samples: impl IntoIterator<Item = &'a EvaluatedSample>) -> Result<()> {
    let mut out = writer(w, &EVO_SAMPLES_HEADER)?;
    for s in samples {
        let r = EvoSampleRow::from(s);
        put(
            &mut out,
            &[
                r.generation.to_string(),
                r.score.to_string(),
                r.score_raw.to_string(),
                r.fidelity.to_string(),
                r.sv.to_string(),
                r.robustness.to_string(),
                r.depth.to_string(),
                r.gates.to_string(),
            ],
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_evo_samples<R: Read>(r: R) -> Result<Vec<EvoSampleRow>> {
    read_rows(r, &EVO_SAMPLES_HEADER)
}

const BEST_EXTRA: [&str; 3] = ["metrics", "score", "score_raw"];

/// Circuit JSON with `metrics`, `score` and `score_raw` added at top level.
pub fn best_to_json(best: &Individual) -> Result<String> {
    let mut v = serde_json::to_value(&best.circuit)?;
    let obj = v.as_object_mut().expect("circuit serializes to an object");
    obj.insert("metrics".into(), serde_json::to_value(best.metrics)?);
    obj.insert("score".into(), serde_json::to_value(best.score)?);
    obj.insert("score_raw".into(), serde_json::to_value(best.score_raw)?);
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn best_from_json(s: &str) -> Result<Individual> {
    let mut v: Value = serde_json::from_str(s)?;
    let obj = v.as_object_mut().ok_or_else(|| Error::invalid("best-circuit JSON must be an object"))?;
    let mut take = |k: &str| obj.remove(k).ok_or_else(|| Error::invalid(format!("best-circuit JSON lacks {k:?}")));
    let [metrics, score, score_raw] = BEST_EXTRA.map(&mut take);
    let metrics: Metrics = serde_json::from_value(metrics?)?;
    let (score, score_raw): (f64, f64) = (serde_json::from_value(score?)?, serde_json::from_value(score_raw?)?);
    let circuit: Circuit = serde_json::from_value(v)?;
    Ok(Individual { circuit, metrics, score, score_raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvoConfig, Objective};
    use crate::qfi::{build_qfi_curve, QfiParams};
    use crate::sampling::{bin_samples, sample_ensemble, SamplerConfig};

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn line_of(e: Error) -> u64 {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn samples_round_trip() {
        let recs = sample_ensemble(&SamplerConfig::new(2, 50, 3)).unwrap();
        let s = text(|b| write_samples(b, &recs));
        assert!(s.starts_with("fidelity,gate_count,depth\n"));
        assert_eq!(s.lines().count(), 51);
        let back = read_samples(s.as_bytes()).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            assert!((a.fidelity - b.fidelity).abs() <= 5e-10);
            assert_eq!((a.gate_count, a.depth), (b.gate_count, b.depth));
        }
        assert_eq!(text(|b| write_samples(b, &back)), s);
    }

    #[test]
    fn nine_decimal_fidelity() {
        let r = SampleRecord { fidelity: 0.5, gate_count: 3, depth: 2 };
        assert_eq!(text(|b| write_samples(b, [&r])), "fidelity,gate_count,depth\n0.500000000,3,2\n");
    }

    #[test]
    fn bins_round_trip_exactly() {
        let bins = bin_samples(&sample_ensemble(&SamplerConfig::new(3, 400, 1)).unwrap(), 40).unwrap();
        let s = text(|b| write_bins(b, &bins));
        assert_eq!(read_bins(s.as_bytes()).unwrap(), bins);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "bin_lo,bin_hi,count,mean_fidelity,probability\n0,0.5,1,0.2,0.5\n0.5,1,x,0.7,0.5\n";
        assert_eq!(line_of(read_bins(bad.as_bytes()).unwrap_err()), 3);
        let short = "fidelity,gate_count,depth\n0.5,1,1\n0.5,1\n";
        assert_eq!(line_of(read_samples(short.as_bytes()).unwrap_err()), 3);
        assert_eq!(line_of(read_bins("a,b\n1,2\n".as_bytes()).unwrap_err()), 1);
        assert_eq!(line_of(read_bins("".as_bytes()).unwrap_err()), 1);
        assert_eq!(line_of(read_history(HISTORY_HEADER.join(",").as_bytes()).unwrap_err()), 2);
    }

    #[test]
    fn qfi_csv_matches_curve() {
        let bins = bin_samples(&sample_ensemble(&SamplerConfig::new(2, 3000, 5)).unwrap(), 50).unwrap();
        let curve = build_qfi_curve(&bins, &QfiParams::default(), Some(2)).unwrap();
        let rows = read_qfi(text(|b| write_qfi(b, &curve)).as_bytes()).unwrap();
        assert_eq!(rows.len(), curve.grid.len());
        for (i, r) in rows.iter().enumerate() {
            assert_eq!([r.fidelity, r.p_hat, r.qfi_raw, r.qfi_smooth], [curve.grid[i], curve.p_hat[i], curve.qfi_raw[i], curve.qfi_smooth[i]]);
        }
    }

    #[test]
    fn evolution_artifacts_round_trip() {
        let cfg = EvoConfig { pop_size: 6, generations: 3, ..EvoConfig::new(2, 8) };
        let r = evolve(&cfg, &Objective::fidelity()).unwrap();
        let h = text(|b| write_history(b, &r.history));
        assert_eq!(read_history(h.as_bytes()).unwrap(), r.history);
        let s = text(|b| write_evo_samples(b, &r.all_samples));
        let rows = read_evo_samples(s.as_bytes()).unwrap();
        assert_eq!(rows, r.all_samples.iter().map(EvoSampleRow::from).collect::<Vec<_>>());
        let best = best_from_json(&best_to_json(&r.best).unwrap()).unwrap();
        assert_eq!(best, r.best);
    }

    #[test]
    fn best_json_is_circuit_plus_metrics() {
        let r = evolve(&EvoConfig { pop_size: 4, generations: 1, ..EvoConfig::new(2, 0) }, &Objective::fidelity()).unwrap();
        let v: Value = serde_json::from_str(&best_to_json(&r.best).unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["n", "gates", "metrics", "score", "score_raw"] {
            assert!(keys.contains(&k));
        }
        assert!(best_from_json(r#"{"n":2,"gates":[]}"#).is_err());
    }
}
