//! Prediction-log storage: run logs of per-checkpoint softmax matrices.
//!
//! On disk a log is a directory holding a JSON manifest, a little-endian
//! `u32` labels file and one matrix file per checkpoint. Matrix files are
//! either raw little-endian `f32` (row-major) or CSV with a
//! `point_id,class_0,...` header; the encoding is chosen by file extension.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on softmax row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;
/// Tolerance when cross-checking a manifest-supplied global accuracy.
pub const ACCURACY_CROSS_CHECK: f64 = 1e-9;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint {checkpoint}, row {row}: softmax row sums to {sum} (expected 1 within 1e-4)")]
    RowSum {
        checkpoint: usize,
        row: usize,
        sum: f64,
    },
    #[error("checkpoint {checkpoint}, row {row}, class {class}: invalid probability {value}")]
    Probability {
        checkpoint: usize,
        row: usize,
        class: usize,
        value: f32,
    },
    #[error("checkpoint {index}: resource {current} does not exceed previous resource {previous}")]
    ResourceOrder {
        index: usize,
        previous: f64,
        current: f64,
    },
    #[error("checkpoint {index}: invalid resource {value}")]
    Resource { index: usize, value: f64 },
    #[error("point {point}: label {label} out of range for {num_classes} classes")]
    Label {
        point: usize,
        label: u32,
        num_classes: usize,
    },
    #[error("checkpoint {index}: manifest global accuracy {manifest} disagrees with recomputed {computed}")]
    AccuracyMismatch {
        index: usize,
        manifest: f64,
        computed: f64,
    },
    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("log has no checkpoints")]
    Empty,
    #[error("cannot merge an empty list of logs")]
    NoRuns,
    #[error("run {run}: header ({points} points, {classes} classes) differs from first run")]
    HeaderMismatch {
        run: usize,
        points: usize,
        classes: usize,
    },
    #[error("run {run}: label differs from first run at point {point}")]
    LabelMismatch { run: usize, point: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Row-major `num_points × num_classes` matrix of softmax probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxMatrix {
    num_points: usize,
    num_classes: usize,
    data: Vec<f32>,
}

impl SoftmaxMatrix {
    pub fn new(num_points: usize, num_classes: usize, data: Vec<f32>) -> Result<Self, LogError> {
        if num_points.checked_mul(num_classes) != Some(data.len()) {
            return Err(LogError::Shape(format!(
                "matrix has {} entries, expected {num_points} x {num_classes}",
                data.len()
            )));
        }
        Ok(Self {
            num_points,
            num_classes,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, LogError> {
        let num_classes = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * num_classes);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != num_classes {
                return Err(LogError::Shape(format!(
                    "row {i} has {} entries, expected {num_classes}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), num_classes, data)
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, point: usize) -> &[f32] {
        let start = point * self.num_classes;
        &self.data[start..start + self.num_classes]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// One evaluation of a model snapshot over the point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    resource: f64,
    softmax: SoftmaxMatrix,
    global_accuracy: f64,
}

impl Checkpoint {
    pub fn resource(&self) -> f64 {
        self.resource
    }

    pub fn softmax(&self) -> &SoftmaxMatrix {
        &self.softmax
    }

    pub fn global_accuracy(&self) -> f64 {
        self.global_accuracy
    }

    /// Whether the prediction on `point` matches `label`.
    pub fn is_correct(&self, point: usize, label: u32) -> bool {
        argmax(self.softmax.row(point)) == label as usize
    }
}

/// Fraction of points whose argmax prediction equals the label.
pub fn compute_global_accuracy(softmax: &SoftmaxMatrix, labels: &[u32]) -> Result<f64, LogError> {
    if softmax.num_points() != labels.len() {
        return Err(LogError::Shape(format!(
            "{} labels for {} matrix rows",
            labels.len(),
            softmax.num_points()
        )));
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(softmax.row(i)) == y as usize)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// A single training run evaluated at increasing resource values.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    run_id: String,
    num_points: usize,
    num_classes: usize,
    labels: Vec<u32>,
    checkpoints: Vec<Checkpoint>,
}

impl RunLog {
    /// Validates the header, labels and every `(resource, matrix)` pair.
    ///
    /// A log without checkpoints is representable in memory but cannot be
    /// saved or profiled.
    pub fn new(
        run_id: impl Into<String>,
        num_classes: usize,
        labels: Vec<u32>,
        checkpoints: Vec<(f64, SoftmaxMatrix)>,
    ) -> Result<Self, LogError> {
        let num_points = labels.len();
        if num_classes == 0 {
            return Err(LogError::Shape("num_classes must be positive".into()));
        }
        for (point, &label) in labels.iter().enumerate() {
            if label as usize >= num_classes {
                return Err(LogError::Label {
                    point,
                    label,
                    num_classes,
                });
            }
        }
        let mut built = Vec::with_capacity(checkpoints.len());
        let mut previous: Option<f64> = None;
        for (index, (resource, softmax)) in checkpoints.into_iter().enumerate() {
            if !resource.is_finite() || resource < 0.0 {
                return Err(LogError::Resource {
                    index,
                    value: resource,
                });
            }
            if let Some(prev) = previous {
                if resource <= prev {
                    return Err(LogError::ResourceOrder {
                        index,
                        previous: prev,
                        current: resource,
                    });
                }
            }
            previous = Some(resource);
            if softmax.num_points() != num_points || softmax.num_classes() != num_classes {
                return Err(LogError::Shape(format!(
                    "checkpoint {index} is {}x{}, header says {num_points}x{num_classes}",
                    softmax.num_points(),
                    softmax.num_classes()
                )));
            }
            validate_rows(index, &softmax)?;
            let global_accuracy = compute_global_accuracy(&softmax, &labels)?;
            built.push(Checkpoint {
                resource,
                softmax,
                global_accuracy,
            });
        }
        Ok(Self {
            run_id: run_id.into(),
            num_points,
            num_classes,
            labels,
            checkpoints: built,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn global_accuracies(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.global_accuracy).collect()
    }
}

fn validate_rows(checkpoint: usize, m: &SoftmaxMatrix) -> Result<(), LogError> {
    for row in 0..m.num_points() {
        let mut sum = 0.0f64;
        for (class, &value) in m.row(row).iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(LogError::Probability {
                    checkpoint,
                    row,
                    class,
                    value,
                });
            }
            sum += f64::from(value);
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(LogError::RowSum {
                checkpoint,
                row,
                sum,
            });
        }
    }
    Ok(())
}

/// Several runs over the same labelled point set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCollection {
    runs: Vec<RunLog>,
}

impl RunCollection {
    pub fn runs(&self) -> &[RunLog] {
        &self.runs
    }

    pub fn num_points(&self) -> usize {
        self.runs[0].num_points
    }

    pub fn num_classes(&self) -> usize {
        self.runs[0].num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.runs[0].labels
    }
}

pub fn merge_runs(logs: Vec<RunLog>) -> Result<RunCollection, LogError> {
    let Some(first) = logs.first() else {
        return Err(LogError::NoRuns);
    };
    for (run, log) in logs.iter().enumerate().skip(1) {
        if log.num_points != first.num_points || log.num_classes != first.num_classes {
            return Err(LogError::HeaderMismatch {
                run,
                points: log.num_points,
                classes: log.num_classes,
            });
        }
        if let Some(point) = log
            .labels
            .iter()
            .zip(&first.labels)
            .position(|(a, b)| a != b)
        {
            return Err(LogError::LabelMismatch { run, point });
        }
    }
    Ok(RunCollection { runs: logs })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub num_points: usize,
    pub num_classes: usize,
    pub labels_file: String,
    pub checkpoints: Vec<ManifestCheckpoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestCheckpoint {
    pub resource: f64,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_accuracy: Option<f64>,
}

/// Matrix encoding used by [`save_log_as`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixEncoding {
    #[default]
    Binary,
    Csv,
}

/// Reads and fully validates a log directory (or a path to its manifest).
pub fn load_log(path: impl AsRef<Path>) -> Result<RunLog, LogError> {
    let path = path.as_ref();
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        (dir, path.to_path_buf())
    };
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| LogError::Manifest(e.to_string()))?;
    if manifest.checkpoints.is_empty() {
        return Err(LogError::Manifest("no checkpoints listed".into()));
    }

    let labels = read_labels(&dir.join(&manifest.labels_file), manifest.num_points)?;
    let mut matrices = Vec::with_capacity(manifest.checkpoints.len());
    for entry in &manifest.checkpoints {
        let file = dir.join(&entry.file);
        let m = if is_csv(&file) {
            read_csv_matrix(&file, manifest.num_points, manifest.num_classes)?
        } else {
            read_binary_matrix(&file, manifest.num_points, manifest.num_classes)?
        };
        matrices.push((entry.resource, m));
    }
    let log = RunLog::new(manifest.run_id, manifest.num_classes, labels, matrices)?;
    for (index, (entry, ckpt)) in manifest.checkpoints.iter().zip(&log.checkpoints).enumerate() {
        if let Some(stated) = entry.global_accuracy {
            if (stated - ckpt.global_accuracy).abs() > ACCURACY_CROSS_CHECK {
                return Err(LogError::AccuracyMismatch {
                    index,
                    manifest: stated,
                    computed: ckpt.global_accuracy,
                });
            }
        }
    }
    Ok(log)
}

/// Writes `log` into `dir` using binary matrix files.
pub fn save_log(log: &RunLog, dir: impl AsRef<Path>) -> Result<(), LogError> {
    save_log_as(log, dir, MatrixEncoding::Binary)
}

pub fn save_log_as(
    log: &RunLog,
    dir: impl AsRef<Path>,
    encoding: MatrixEncoding,
) -> Result<(), LogError> {
    let dir = dir.as_ref();
    if log.checkpoints.is_empty() {
        return Err(LogError::Empty);
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let labels_file = "labels.u32".to_string();
    let labels_path = dir.join(&labels_file);
    let mut bytes = Vec::with_capacity(log.labels.len() * 4);
    for &y in &log.labels {
        bytes.extend_from_slice(&y.to_le_bytes());
    }
    fs::write(&labels_path, bytes).map_err(io_err(&labels_path))?;

    let mut entries = Vec::with_capacity(log.checkpoints.len());
    for (i, ckpt) in log.checkpoints.iter().enumerate() {
        let file = match encoding {
            MatrixEncoding::Binary => format!("checkpoint_{i:05}.f32"),
            MatrixEncoding::Csv => format!("checkpoint_{i:05}.csv"),
        };
        let path = dir.join(&file);
        match encoding {
            MatrixEncoding::Binary => write_binary_matrix(&path, &ckpt.softmax)?,
            MatrixEncoding::Csv => write_csv_matrix(&path, &ckpt.softmax)?,
        }
        entries.push(ManifestCheckpoint {
            resource: ckpt.resource,
            file,
            global_accuracy: Some(ckpt.global_accuracy),
        });
    }
    let manifest = Manifest {
        run_id: log.run_id.clone(),
        num_points: log.num_points,
        num_classes: log.num_classes,
        labels_file,
        checkpoints: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| LogError::Manifest(e.to_string()))?;
    fs::write(&path, json).map_err(io_err(&path))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_labels(path: &Path, num_points: usize) -> Result<Vec<u32>, LogError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != num_points * 4 {
        return Err(LogError::Shape(format!(
            "labels file {} has {} bytes, expected {}",
            path.display(),
            bytes.len(),
            num_points * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_binary_matrix(
    path: &Path,
    num_points: usize,
    num_classes: usize,
) -> Result<SoftmaxMatrix, LogError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let expected = num_points * num_classes * 4;
    if bytes.len() != expected {
        return Err(LogError::Shape(format!(
            "matrix file {} has {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    SoftmaxMatrix::new(num_points, num_classes, data)
}

fn write_binary_matrix(path: &Path, m: &SoftmaxMatrix) -> Result<(), LogError> {
    let mut bytes = Vec::with_capacity(m.data.len() * 4);
    for v in &m.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_csv_matrix(
    path: &Path,
    num_points: usize,
    num_classes: usize,
) -> Result<SoftmaxMatrix, LogError> {
    let csv_err = |message: String| LogError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.len() != num_classes + 1 || &headers[0] != "point_id" {
        return Err(csv_err(format!(
            "header must be point_id,class_0..class_{}",
            num_classes.saturating_sub(1)
        )));
    }
    for (c, h) in headers.iter().skip(1).enumerate() {
        if h != format!("class_{c}") {
            return Err(csv_err(format!("unexpected header column `{h}`")));
        }
    }
    let mut data = Vec::with_capacity(num_points * num_classes);
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let id: usize = record[0]
            .parse()
            .map_err(|_| csv_err(format!("bad point_id `{}`", &record[0])))?;
        if id != rows {
            return Err(csv_err(format!("row {rows} has point_id {id}")));
        }
        for field in record.iter().skip(1) {
            let v: f32 = field
                .parse()
                .map_err(|_| csv_err(format!("bad value `{field}` in row {rows}")))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows != num_points {
        return Err(LogError::Shape(format!(
            "{} has {rows} rows, expected {num_points}",
            path.display()
        )));
    }
    SoftmaxMatrix::new(num_points, num_classes, data)
}

fn write_csv_matrix(path: &Path, m: &SoftmaxMatrix) -> Result<(), LogError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        write!(w, "point_id")?;
        for c in 0..m.num_classes {
            write!(w, ",class_{c}")?;
        }
        writeln!(w)?;
        for i in 0..m.num_points {
            write!(w, "{i}")?;
            // `Display` for f32 is shortest-round-trip, so reloading is bit-exact.
            for v in m.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(path))
}
