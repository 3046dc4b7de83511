//! Run-directory output and data-file input.
//!
//! Every fitting command writes a manifest (seed, config snapshot, version,
//! timestamps, warning counters) plus plot-ready CSV/JSON files. Numeric CSV
//! fields use 17-significant-digit scientific notation so parsed values
//! round-trip bit for bit.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::datagen::FunctionalData;
use crate::error::{Error, Result};
use crate::functional::FunctionalFit;
use crate::induced::InducedPriorResult;
use crate::metrics::{MetricsReport, Partition};
use crate::summary::{PosteriorSummary, WarningCounters};

/// Full round-trip decimal formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Manifest written at run start and finalized on exit.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub version: String,
    pub started_at_unix_ms: u128,
    pub finished_at_unix_ms: Option<u128>,
    pub warnings: Option<WarningCounters>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            seed,
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at_unix_ms: now_ms(),
            finished_at_unix_ms: None,
            warnings: None,
        }
    }

    /// Write (or rewrite) the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let file = fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    /// Stamp the finish time and warning counters, then rewrite.
    pub fn finalize(&mut self, dir: &Path, warnings: Option<WarningCounters>) -> Result<()> {
        self.finished_at_unix_ms = Some(now_ms());
        self.warnings = warnings;
        self.write(dir)
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(fs::File::create(path)?)
}

/// prior.csv: kplus, probability, mc_se.
pub fn write_prior_csv(path: &Path, result: &InducedPriorResult) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "kplus,probability,mc_se")?;
    for (i, (p, se)) in result.pmf.iter().zip(&result.mc_se).enumerate() {
        writeln!(f, "{},{},{}", i + 1, fmt_f64(*p), fmt_f64(*se))?;
    }
    Ok(())
}

/// kplus_posterior.csv: kplus, probability.
pub fn write_kplus_csv(path: &Path, pmf: &[f64]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "kplus,probability")?;
    for (i, p) in pmf.iter().enumerate() {
        writeln!(f, "{},{}", i + 1, fmt_f64(*p))?;
    }
    Ok(())
}

/// coclustering.csv: dense matrix with an id header row and column.
pub fn write_coclustering_csv(path: &Path, matrix: &[Vec<f64>], ids: &[String]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,{}", ids.join(","))?;
    for (i, row) in matrix.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(f, "{},{}", ids[i], cells.join(","))?;
    }
    Ok(())
}

/// partition.csv: id, label.
pub fn write_partition_csv(path: &Path, partition: &Partition, ids: &[String]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,label")?;
    for (id, l) in ids.iter().zip(partition.labels()) {
        writeln!(f, "{id},{l}")?;
    }
    Ok(())
}

/// fitted.csv: id, fitted.
pub fn write_fitted_csv(path: &Path, fitted: &[f64], ids: &[String]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,fitted")?;
    for (id, v) in ids.iter().zip(fitted) {
        writeln!(f, "{id},{}", fmt_f64(*v))?;
    }
    Ok(())
}

/// alpha1_trace.csv: draw, alpha1 (retained draws).
pub fn write_alpha1_trace_csv(path: &Path, draws: &[f64]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "draw,alpha1")?;
    for (i, a) in draws.iter().enumerate() {
        writeln!(f, "{},{}", i + 1, fmt_f64(*a))?;
    }
    Ok(())
}

/// Write the standard run directory for a fitted chain.
pub fn write_run_directory(dir: &Path, summary: &PosteriorSummary, ids: &[String]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_kplus_csv(&dir.join("kplus_posterior.csv"), &summary.kplus_pmf)?;
    write_coclustering_csv(&dir.join("coclustering.csv"), &summary.coclustering, ids)?;
    write_partition_csv(&dir.join("partition.csv"), &summary.point_partition, ids)?;
    write_fitted_csv(&dir.join("fitted.csv"), &summary.fitted, ids)?;
    write_alpha1_trace_csv(&dir.join("alpha1_trace.csv"), &summary.alpha1_draws)?;
    let f = create(&dir.join("acceptance.json"))?;
    serde_json::to_writer_pretty(f, &summary.acceptance)?;
    Ok(())
}

/// cluster_means.csv: cluster, t, mean.
pub fn write_cluster_means_csv(
    path: &Path,
    grid: &[f64],
    cluster_means: &[(usize, Vec<f64>)],
) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "cluster,t,mean")?;
    for (cluster, mean) in cluster_means {
        for (t, v) in grid.iter().zip(mean) {
            writeln!(f, "{cluster},{},{}", fmt_f64(*t), fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// subject_fits.csv: id, t, fitted.
pub fn write_subject_fits_csv(
    path: &Path,
    ids: &[String],
    grid: &[f64],
    fits: &[Vec<f64>],
) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,t,fitted")?;
    for (id, fit) in ids.iter().zip(fits) {
        for (t, v) in grid.iter().zip(fit) {
            writeln!(f, "{id},{},{}", fmt_f64(*t), fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// Write the functional run directory (standard files plus curve outputs).
pub fn write_functional_run_directory(
    dir: &Path,
    fit: &FunctionalFit,
    ids: &[String],
) -> Result<()> {
    write_run_directory(dir, &fit.summary, ids)?;
    write_cluster_means_csv(&dir.join("cluster_means.csv"), &fit.grid, &fit.cluster_means)?;
    write_subject_fits_csv(&dir.join("subject_fits.csv"), ids, &fit.grid, &fit.subject_fits)?;
    Ok(())
}

pub fn write_metrics_json(path: &Path, report: &MetricsReport) -> Result<()> {
    let f = create(path)?;
    serde_json::to_writer_pretty(f, report)?;
    Ok(())
}

/// data.csv (univariate): header y, one value per row.
pub fn write_univariate_csv(path: &Path, y: &[f64]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "y")?;
    for v in y {
        writeln!(f, "{}", fmt_f64(*v))?;
    }
    Ok(())
}

/// truth.csv: header id,label.
pub fn write_truth_csv(path: &Path, truth: &Partition, ids: &[String]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,label")?;
    for (id, l) in ids.iter().zip(truth.labels()) {
        writeln!(f, "{id},{l}")?;
    }
    Ok(())
}

/// data.csv (functional): long format id,t,y.
pub fn write_functional_csv(path: &Path, data: &FunctionalData, ids: &[String]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,t,y")?;
    for (id, curve) in ids.iter().zip(&data.curves) {
        for (t, v) in data.grid.iter().zip(curve) {
            writeln!(f, "{id},{},{}", fmt_f64(*t), fmt_f64(*v))?;
        }
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(raw: &str, row: usize, what: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::Data {
        row,
        msg: format!("cannot parse {what} from {raw:?}"),
    })
}

/// Read a univariate data CSV (header `y`).
pub fn read_univariate_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "y")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'y'".to_string() })?;
    let mut y = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2; // header is row 1
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        let raw = record.get(col).ok_or_else(|| Error::Data {
            row,
            msg: "missing value".to_string(),
        })?;
        let v: f64 = parse_field(raw, row, "a number")?;
        if !v.is_finite() {
            return Err(Error::Data { row, msg: format!("non-finite value {v}") });
        }
        y.push(v);
    }
    if y.is_empty() {
        return Err(Error::Data { row: 2, msg: "no observations".to_string() });
    }
    Ok(y)
}

/// Read a truth CSV (header id,label); returns ids and labels in file order.
pub fn read_truth_csv(path: &Path) -> Result<(Vec<String>, Partition)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let id_col = headers
        .iter()
        .position(|h| h.trim() == "id")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'id'".to_string() })?;
    let label_col = headers
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'label'".to_string() })?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        ids.push(record.get(id_col).unwrap_or("").trim().to_string());
        let l: usize = parse_field(record.get(label_col).unwrap_or(""), row, "a label")?;
        labels.push(l);
    }
    if labels.is_empty() {
        return Err(Error::Data { row: 2, msg: "no rows".to_string() });
    }
    Ok((ids, Partition::new(&labels)))
}

/// Read long-format functional data (header id,t,y). All subjects must share
/// one time grid; t is rescaled to [0, 1] and the affine rescaling `(t - lo)
/// / (hi - lo)` is returned for the manifest.
pub fn read_functional_csv(path: &Path) -> Result<(Vec<String>, FunctionalData, (f64, f64))> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data { row: 1, msg: format!("missing column '{name}'") })
    };
    let (id_col, t_col, y_col) = (find("id")?, find("t")?, find("y")?);
    let mut ids: Vec<String> = Vec::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut grids: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        let t: f64 = parse_field(record.get(t_col).unwrap_or(""), row, "a time")?;
        let y: f64 = parse_field(record.get(y_col).unwrap_or(""), row, "a value")?;
        if !t.is_finite() || !y.is_finite() {
            return Err(Error::Data { row, msg: "non-finite field".to_string() });
        }
        match ids.iter().position(|existing| *existing == id) {
            Some(pos) => {
                grids[pos].push(t);
                curves[pos].push(y);
            }
            None => {
                ids.push(id);
                grids.push(vec![t]);
                curves.push(vec![y]);
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::Data { row: 2, msg: "no rows".to_string() });
    }
    for g in &grids {
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data {
                row: 2,
                msg: "each subject's times must be strictly increasing".to_string(),
            });
        }
    }
    let reference = &grids[0];
    for (pos, g) in grids.iter().enumerate() {
        if g.len() != reference.len()
            || g.iter().zip(reference).any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::Data {
                row: 2,
                msg: format!(
                    "subject {} has a different time grid; all subjects must share one grid",
                    ids[pos]
                ),
            });
        }
    }
    let lo = reference[0];
    let hi = *reference.last().expect("non-empty");
    let span = if hi > lo { hi - lo } else { 1.0 };
    let grid: Vec<f64> = reference.iter().map(|t| (t - lo) / span).collect();
    let truth = Partition::new(&vec![1; ids.len()]);
    Ok((
        ids,
        FunctionalData {
            grid,
            curves,
            truth,
        },
        (lo, hi),
    ))
}

/// Read kplus_posterior.csv (or prior.csv) back into a pmf vector.
pub fn read_kplus_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let k_col = headers
        .iter()
        .position(|h| h.trim() == "kplus")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'kplus'".to_string() })?;
    let p_col = headers
        .iter()
        .position(|h| h.trim() == "probability")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'probability'".to_string() })?;
    let mut pmf: Vec<(usize, f64)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        let k: usize = parse_field(record.get(k_col).unwrap_or(""), row, "kplus")?;
        let p: f64 = parse_field(record.get(p_col).unwrap_or(""), row, "probability")?;
        pmf.push((k, p));
    }
    pmf.sort_by_key(|(k, _)| *k);
    Ok(pmf.into_iter().map(|(_, p)| p).collect())
}

/// Read a dense co-clustering CSV (id header row and column) back.
pub fn read_coclustering_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let ids: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut matrix = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        let mut vals = Vec::with_capacity(ids.len());
        for cell in record.iter().skip(1) {
            vals.push(parse_field::<f64>(cell, row, "a probability")?);
        }
        if vals.len() != ids.len() {
            return Err(Error::Data { row, msg: "ragged co-clustering row".to_string() });
        }
        matrix.push(vals);
    }
    if matrix.len() != ids.len() {
        return Err(Error::Data { row: 2, msg: "co-clustering matrix is not square".to_string() });
    }
    Ok((ids, matrix))
}

/// Read a partition CSV (id,label).
pub fn read_partition_csv(path: &Path) -> Result<(Vec<String>, Partition)> {
    read_truth_csv(path)
}

/// Read fitted.csv back (id, fitted), in file order.
pub fn read_fitted_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "fitted")
        .ok_or_else(|| Error::Data { row: 1, msg: "missing column 'fitted'".to_string() })?;
    let mut vals = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::Data { row, msg: e.to_string() })?;
        vals.push(parse_field::<f64>(record.get(col).unwrap_or(""), row, "a number")?);
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips() {
        for &x in &[0.1, -3.5e-7, 12815504.569147611, f64::MIN_POSITIVE, 1.0 / 3.0] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn univariate_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let y = vec![1.5, -2.25, 1.0 / 3.0];
        write_univariate_csv(&path, &y).unwrap();
        let back = read_univariate_csv(&path).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn univariate_csv_reports_row_of_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "y\n1.0\nnot-a-number\n2.0\n").unwrap();
        match read_univariate_csv(&path) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn functional_csv_round_trip_and_rescaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        std::fs::write(
            &path,
            "id,t,y\na,0,1.0\na,5,2.0\na,10,3.0\nb,0,4.0\nb,5,5.0\nb,10,6.0\n",
        )
        .unwrap();
        let (ids, data, (lo, hi)) = read_functional_csv(&path).unwrap();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(data.grid, vec![0.0, 0.5, 1.0]);
        assert_eq!((lo, hi), (0.0, 10.0));
        assert_eq!(data.curves[1], vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn functional_csv_rejects_mismatched_grids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        std::fs::write(&path, "id,t,y\na,0,1.0\na,1,2.0\nb,0,3.0\nb,0.7,4.0\n").unwrap();
        assert!(matches!(read_functional_csv(&path), Err(Error::Data { .. })));
    }

    #[test]
    fn truth_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let truth = Partition::new(&[3, 3, 1, 2]);
        let ids: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
        write_truth_csv(&path, &truth, &ids).unwrap();
        let (back_ids, back) = read_truth_csv(&path).unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back, truth);
    }

    #[test]
    fn run_directory_files_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let pmf = vec![0.25, 0.5, 0.25];
        write_kplus_csv(&dir.path().join("kplus_posterior.csv"), &pmf).unwrap();
        assert_eq!(read_kplus_csv(&dir.path().join("kplus_posterior.csv")).unwrap(), pmf);
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let cc = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        write_coclustering_csv(&dir.path().join("cc.csv"), &cc, &ids).unwrap();
        let (back_ids, back) = read_coclustering_csv(&dir.path().join("cc.csv")).unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back, cc);
        let fitted = vec![1.25, -0.5];
        write_fitted_csv(&dir.path().join("fitted.csv"), &fitted, &ids).unwrap();
        assert_eq!(read_fitted_csv(&dir.path().join("fitted.csv")).unwrap(), fitted);
    }

    #[test]
    fn manifest_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("afmm fit --seed 7", 7, serde_json::json!({"k": 25}));
        m.write(dir.path()).unwrap();
        m.finalize(dir.path(), Some(WarningCounters::default())).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.seed, 7);
        assert!(back.finished_at_unix_ms.is_some());
    }
}
