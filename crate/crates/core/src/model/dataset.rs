use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{domain, PuError, Result};

/// One `(x, y, s)` record. A labeled record is always positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: bool,
    s: bool,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: bool, s: bool) -> Result<Self> {
        if s && !y {
            return Err(domain("a labeled record (s=1) must be positive (y=1)"));
        }
        Ok(Self { x, y, s })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn s(&self) -> bool {
        self.s
    }

    /// True class. Only evaluation code should look at this.
    pub fn y(&self) -> bool {
        self.y
    }
}

/// Provenance recorded next to every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub scenario_fingerprint: String,
    pub target_c: Option<f64>,
    /// `#{s=1} / #{y=1}`; absent when the sample has no positives.
    pub achieved_c: Option<f64>,
    pub seed: u64,
    pub n: usize,
    pub dims: usize,
}

/// A finite PU sample. Training code sees it through [`ObservableView`].
#[derive(Debug, Clone, PartialEq)]
pub struct PuDataset {
    samples: Vec<Sample>,
    meta: DatasetMeta,
}

fn label_frequency(samples: &[Sample]) -> Option<f64> {
    let positives = samples.iter().filter(|r| r.y).count();
    let labeled = samples.iter().filter(|r| r.s).count();
    (positives > 0).then(|| labeled as f64 / positives as f64)
}

impl PuDataset {
    pub fn new(
        samples: Vec<Sample>,
        scenario_fingerprint: impl Into<String>,
        target_c: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        let dims = samples.first().map_or(0, |r| r.x.len());
        if let Some(bad) = samples.iter().find(|r| r.x.len() != dims) {
            return Err(PuError::DimensionMismatch {
                expected: dims,
                got: bad.x.len(),
            });
        }
        let meta = DatasetMeta {
            scenario_fingerprint: scenario_fingerprint.into(),
            target_c,
            achieved_c: label_frequency(&samples),
            seed,
            n: samples.len(),
            dims,
        };
        Ok(Self { samples, meta })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.meta.dims
    }

    /// The `(x, s)` view available to estimators.
    pub fn observable(&self) -> ObservableView<'_> {
        ObservableView { data: self }
    }

    /// Full records including the hidden class. For evaluation only.
    pub fn records_with_truth(&self) -> &[Sample] {
        &self.samples
    }

    /// Recompute `#{s=1} / #{y=1}` from the records.
    pub fn recompute_label_frequency(&self) -> Option<f64> {
        label_frequency(&self.samples)
    }

    /// Write the CSV table (`x_0..x_{p-1},y,s`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.meta.dims).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        header.push("s".into());
        w.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(self.meta.dims + 2);
        for r in &self.samples {
            row.clear();
            // `{:?}` prints the shortest string that parses back to the same bits.
            row.extend(r.x.iter().map(|v| format!("{v:?}")));
            row.push(u8::from(r.y).to_string());
            row.push(u8::from(r.s).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse the CSV table; `meta` must describe the same records.
    pub fn read_csv<R: Read>(input: R, meta: DatasetMeta) -> Result<Self> {
        let fmt_err = |reason: String| PuError::Format { path: None, reason };
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let dims = headers
            .len()
            .checked_sub(2)
            .ok_or_else(|| fmt_err("missing y,s columns".into()))?;
        let expected: Vec<String> = (0..dims)
            .map(|j| format!("x_{j}"))
            .chain(["y".to_string(), "s".to_string()])
            .collect();
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(fmt_err(format!("unexpected header {headers:?}")));
        }
        let bit = |field: &str, line: usize| -> Result<bool> {
            match field {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(fmt_err(format!(
                    "line {line}: expected 0 or 1, got {other:?}"
                ))),
            }
        };
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let x = rec
                .iter()
                .take(dims)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| fmt_err(format!("line {line}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let y = bit(&rec[dims], line)?;
            let s = bit(&rec[dims + 1], line)?;
            samples.push(Sample::new(x, y, s).map_err(|e| fmt_err(format!("line {line}: {e}")))?);
        }
        if samples.len() != meta.n || (meta.n > 0 && dims != meta.dims) {
            return Err(fmt_err(format!(
                "metadata describes {}x{} records, table has {}x{}",
                meta.n,
                meta.dims,
                samples.len(),
                dims
            )));
        }
        Ok(Self { samples, meta })
    }

    /// Path of the JSON metadata sidecar for a CSV path.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Write `<path>` (CSV) and its `.json` sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        self.write_csv(fs::File::create(csv_path)?)?;
        let meta = serde_json::to_string_pretty(&self.meta)?;
        fs::write(Self::sidecar_path(csv_path), meta + "\n")?;
        Ok(())
    }

    pub fn load(csv_path: &Path) -> Result<Self> {
        let with_path = |e: PuError| match e {
            PuError::Format { reason, .. } => PuError::Format {
                path: Some(csv_path.to_path_buf()),
                reason,
            },
            other => other,
        };
        let meta: DatasetMeta =
            serde_json::from_str(&fs::read_to_string(Self::sidecar_path(csv_path))?)?;
        Self::read_csv(fs::File::open(csv_path)?, meta).map_err(with_path)
    }
}

/// Features and label indicators only.
#[derive(Debug, Clone, Copy)]
pub struct ObservableView<'a> {
    data: &'a PuDataset,
}

impl<'a> ObservableView<'a> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.data.dims()
    }

    pub fn x(&self, i: usize) -> &'a [f64] {
        &self.data.samples[i].x
    }

    pub fn s(&self, i: usize) -> bool {
        self.data.samples[i].s
    }

    pub fn features(&self) -> Vec<&'a [f64]> {
        self.data.samples.iter().map(|r| r.x.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.data.samples.iter().map(|r| r.s).collect()
    }

    pub fn n_labeled(&self) -> usize {
        self.data.samples.iter().filter(|r| r.s).count()
    }
}
