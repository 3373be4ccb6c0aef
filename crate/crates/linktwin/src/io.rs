//! File formats: profile batches, training datasets, optimization traces,
//! learning curves, and content hashing.
//!
//! All tabular data is CSV with documented headers; profile batches carry a
//! `#`-prefixed metadata line (seed and total power) ahead of the header.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::link_sim::PowerProfile;
use crate::optimizer::OptimizationTrace;
use crate::surrogate::LearningCurves;

/// Metadata stamped into a profile-batch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeta {
    pub seed: u64,
    pub total_power_dbm: f64,
}

/// Write a profile batch: metadata comment, header, one row per profile with
/// per-channel dBm powers plus the realized excursion.
pub fn write_profiles_csv<W: Write>(
    mut out: W,
    profiles: &[PowerProfile],
    meta: &BatchMeta,
) -> Result<()> {
    let channels = profiles.first().map_or(0, |p| p.channel_count());
    writeln!(
        out,
        "# seed={} total_power_dbm={:.6} count={}",
        meta.seed,
        meta.total_power_dbm,
        profiles.len()
    )?;
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..channels).map(|k| format!("p{k:02}_dbm")).collect();
    header.push("excursion_db".into());
    writer.write_record(&header)?;
    for profile in profiles {
        let mut row: Vec<String> = profile
            .powers_dbm()
            .iter()
            .map(|v| format!("{v:.12}"))
            .collect();
        row.push(format!("{:.12}", profile.excursion_db()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a profile batch written by [`write_profiles_csv`].
pub fn read_profiles_csv<R: Read>(input: R) -> Result<(Vec<PowerProfile>, BatchMeta)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = parse_batch_meta(first.trim())?;

    let mut csv_reader = csv::Reader::from_reader(reader);
    let width = csv_reader.headers()?.len();
    if width < 2 {
        return Err(Error::InvalidConfig("profile CSV has no channels".into()));
    }
    let channels = width - 1;
    let mut profiles = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        let powers: Vec<f64> = (0..channels)
            .map(|k| parse_field(&record, k))
            .collect::<Result<_>>()?;
        profiles.push(PowerProfile::from_dbm(powers)?);
    }
    Ok((profiles, meta))
}

fn parse_batch_meta(line: &str) -> Result<BatchMeta> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::InvalidConfig("profile CSV missing metadata line".into()))?;
    let mut seed = None;
    let mut total = None;
    for token in body.split_whitespace() {
        if let Some(v) = token.strip_prefix("seed=") {
            seed = v.parse::<u64>().ok();
        } else if let Some(v) = token.strip_prefix("total_power_dbm=") {
            total = v.parse::<f64>().ok();
        }
    }
    match (seed, total) {
        (Some(seed), Some(total_power_dbm)) => Ok(BatchMeta {
            seed,
            total_power_dbm,
        }),
        _ => Err(Error::InvalidConfig(
            "profile CSV metadata line incomplete".into(),
        )),
    }
}

fn parse_field(record: &csv::StringRecord, index: usize) -> Result<f64> {
    record
        .get(index)
        .ok_or_else(|| Error::InvalidConfig(format!("missing CSV field {index}")))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidConfig(format!("bad CSV number at field {index}: {e}")))
}

/// One training row: the TX profile and the observed RX powers, all dBm.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub tx_dbm: Vec<f64>,
    pub rx_signal_dbm: Vec<f64>,
    pub rx_noise_dbm: Vec<f64>,
}

/// Write dataset rows: `tx00.. , s00.. , n00..` per channel, dBm.
pub fn write_dataset_csv<W: Write>(out: W, records: &[DatasetRecord]) -> Result<()> {
    let channels = records.first().map_or(0, |r| r.tx_dbm.len());
    let mut writer = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(3 * channels);
    for prefix in ["tx", "s", "n"] {
        header.extend((0..channels).map(|k| format!("{prefix}{k:02}_dbm")));
    }
    writer.write_record(&header)?;
    for record in records {
        let row: Vec<String> = record
            .tx_dbm
            .iter()
            .chain(&record.rx_signal_dbm)
            .chain(&record.rx_noise_dbm)
            .map(|v| format!("{v:.12}"))
            .collect();
        writer.write_record(&row)?;
    }
    writer.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?.flush()?;
    Ok(())
}

/// Read dataset rows written by [`write_dataset_csv`].
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<DatasetRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let width = reader.headers()?.len();
    if width % 3 != 0 || width == 0 {
        return Err(Error::InvalidConfig(format!(
            "dataset CSV width {width} is not 3 x channels"
        )));
    }
    let channels = width / 3;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let parse_block = |offset: usize| -> Result<Vec<f64>> {
            (0..channels).map(|k| parse_field(&row, offset + k)).collect()
        };
        records.push(DatasetRecord {
            tx_dbm: parse_block(0)?,
            rx_signal_dbm: parse_block(channels)?,
            rx_noise_dbm: parse_block(2 * channels)?,
        });
    }
    Ok(records)
}

/// Write one optimization trace: `iteration, capacity_bps, p00..` rows.
pub fn write_trace_csv<W: Write>(out: W, trace: &OptimizationTrace) -> Result<()> {
    let channels = trace
        .iterations
        .first()
        .map_or(0, |r| r.powers_dbm.len());
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string(), "capacity_bps".to_string(), "gradient_norm".to_string()];
    header.extend((0..channels).map(|k| format!("p{k:02}_dbm")));
    writer.write_record(&header)?;
    for (i, record) in trace.iterations.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            format!("{:.6e}", record.capacity_bps),
            format!("{:.6e}", record.gradient_norm),
        ];
        row.extend(record.powers_dbm.iter().map(|v| format!("{v:.9}")));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write learning curves: `epoch, train_mae, val_mae` on the normalized
/// scale.
pub fn write_curves_csv<W: Write>(out: W, curves: &LearningCurves) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["epoch", "train_mae", "val_mae"])?;
    for (epoch, (t, v)) in curves.train_mae.iter().zip(&curves.val_mae).enumerate() {
        writer.write_record(&[epoch.to_string(), format!("{t:.9}"), format!("{v:.9}")])?;
    }
    writer.flush()?;
    Ok(())
}

/// SHA-256 of a file's content, lowercase hex.
pub fn file_sha256(path: &Path) -> Result<String> {
    use sha2::Digest;
    let bytes = std::fs::read(path)?;
    let digest = sha2::Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile_gen::{excursion_schedule, generate_batch, ProfileBatchSpec};

    #[test]
    fn profile_csv_round_trip() {
        let spec = ProfileBatchSpec {
            count: 6,
            excursion_schedule_db: excursion_schedule(6, 6.0, 45.0),
            candidates_per_draw: 3,
            total_power_dbm: 13.0,
            channels: 40,
            seed: 5,
        };
        let profiles = generate_batch(&spec).unwrap();
        let meta = BatchMeta {
            seed: 5,
            total_power_dbm: 13.0,
        };
        let mut buffer = Vec::new();
        write_profiles_csv(&mut buffer, &profiles, &meta).unwrap();
        let (back, meta_back) = read_profiles_csv(buffer.as_slice()).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(back.len(), profiles.len());
        for (a, b) in back.iter().zip(&profiles) {
            for (x, y) in a.powers_dbm().iter().zip(b.powers_dbm()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dataset_csv_round_trip() {
        let records = vec![
            DatasetRecord {
                tx_dbm: vec![-3.0, -4.0],
                rx_signal_dbm: vec![-1.0, -2.5],
                rx_noise_dbm: vec![-21.0, -20.0],
            },
            DatasetRecord {
                tx_dbm: vec![-6.0, -2.0],
                rx_signal_dbm: vec![-4.0, -0.5],
                rx_noise_dbm: vec![-22.0, -19.5],
            },
        ];
        let mut buffer = Vec::new();
        write_dataset_csv(&mut buffer, &records).unwrap();
        let back = read_dataset_csv(buffer.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&records) {
            for (x, y) in a.tx_dbm.iter().zip(&b.tx_dbm) {
                assert!((x - y).abs() < 1e-9);
            }
            for (x, y) in a.rx_noise_dbm.iter().zip(&b.rx_noise_dbm) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_missing_metadata_line() {
        let text = "p00_dbm,excursion_db\n-3.0,0.0\n";
        assert!(read_profiles_csv(text.as_bytes()).is_err());
    }
}
