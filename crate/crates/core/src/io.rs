//! On-disk formats.
//!
//! Matrices are headerless comma-separated text, one row per observation.
//! Floats are written with 17 significant digits so that reading a file
//! back reproduces every value bit for bit. Fits and dataset metadata are
//! JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{Dataset, SimulationSpec};
use crate::types::{Coefficients, FitResult, FullNoise, NoiseSqrtCov, SolverKind};

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    let mut fields = Vec::with_capacity(m.ncols());
    for row in m.row_iter() {
        fields.clear();
        fields.extend(row.iter().map(|&v| format_f64(v)));
        w.write_record(&fields).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Parses a headerless numeric table. Rows and columns in errors are 1-based.
pub fn read_matrix_csv<R: Read>(reader: R, source_name: &str) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |row: usize, col: usize, msg: String| Error::Parse {
        source_name: source_name.to_string(),
        row,
        col,
        msg,
    };
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match ncols {
            None => ncols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(
                    row,
                    record.len().min(c) + 1,
                    format!("expected {c} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, j + 1, format!("not a number: {field:?}")))?;
            data.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.unwrap_or(0);
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(path)?), m)
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_csv(File::open(path)?, &path.display().to_string())
}

/// Everything needed to regenerate and interpret a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub spec: SimulationSpec,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub block_sizes: Vec<usize>,
    pub base_sigma: f64,
    pub sigma_star: Vec<f64>,
    pub true_support: Vec<usize>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl DatasetMeta {
    pub fn from_dataset(data: &Dataset) -> Self {
        Self {
            spec: data.spec.clone(),
            seed: data.spec.seed,
            n: data.spec.n,
            p: data.spec.p,
            q: data.spec.q,
            block_sizes: data.spec.block_sizes.clone(),
            base_sigma: data.base_sigma,
            sigma_star: data.sigma_star.clone(),
            true_support: data.true_support.clone(),
            train_rows: data.train_rows.clone(),
            test_rows: data.test_rows.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}

/// Serialized noise estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseRecord {
    Block {
        sigmas: Vec<f64>,
        block_sizes: Vec<usize>,
    },
    /// `Σ = Σ_i μ_i u_i u_iᵀ`; `eigvecs[i]` is `u_i`.
    Eigen {
        eigvals: Vec<f64>,
        eigvecs: Vec<Vec<f64>>,
    },
    Identity,
}

impl NoiseRecord {
    pub fn from_noise(noise: &NoiseSqrtCov) -> Self {
        match noise {
            NoiseSqrtCov::BlockDiag {
                sigmas,
                block_sizes,
            } => NoiseRecord::Block {
                sigmas: sigmas.clone(),
                block_sizes: block_sizes.clone(),
            },
            NoiseSqrtCov::Full(full) => NoiseRecord::Eigen {
                eigvals: full.eigvals().iter().copied().collect(),
                eigvecs: full
                    .eigvecs()
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect(),
            },
            NoiseSqrtCov::FixedIdentity => NoiseRecord::Identity,
        }
    }

    pub fn to_noise(&self) -> Result<NoiseSqrtCov> {
        Ok(match self {
            NoiseRecord::Block {
                sigmas,
                block_sizes,
            } => NoiseSqrtCov::BlockDiag {
                sigmas: sigmas.clone(),
                block_sizes: block_sizes.clone(),
            },
            NoiseRecord::Eigen { eigvals, eigvecs } => {
                let n = eigvals.len();
                if eigvecs.len() != n || eigvecs.iter().any(|c| c.len() != n) {
                    return Err(Error::ShapeMismatch(format!(
                        "eigenvector table must be {n}x{n}"
                    )));
                }
                let flat: Vec<f64> = eigvecs.iter().flatten().copied().collect();
                NoiseSqrtCov::Full(FullNoise::from_eigen(
                    DMatrix::from_column_slice(n, n, &flat),
                    DVector::from_vec(eigvals.clone()),
                )?)
            }
            NoiseRecord::Identity => NoiseSqrtCov::FixedIdentity,
        })
    }
}

/// The `fit.json` document. Coefficients are sparse row triplets
/// `[row, b_1, ..., b_q]` over the active rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub solver: SolverKind,
    pub converged: bool,
    pub lambda: f64,
    pub lambda_max: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub epochs: usize,
    pub n_features: usize,
    pub n_tasks: usize,
    pub support: Vec<usize>,
    pub coefficients: Vec<Vec<f64>>,
    pub noise: NoiseRecord,
    pub gap_history: Vec<(usize, f64)>,
    /// The resolved configuration that produced this fit.
    pub config: serde_json::Value,
}

impl FitRecord {
    pub fn new(fit: &FitResult, config: serde_json::Value) -> Self {
        let b = fit.coefficients.values();
        let coefficients = fit
            .coefficients
            .active_rows()
            .iter()
            .map(|&j| {
                std::iter::once(j as f64)
                    .chain(b.row(j).iter().copied())
                    .collect()
            })
            .collect();
        Self {
            solver: fit.solver,
            converged: fit.converged,
            lambda: fit.lambda,
            lambda_max: fit.lambda_max,
            primal: fit.primal,
            dual: fit.dual,
            gap: fit.gap,
            epochs: fit.epochs_run,
            n_features: b.nrows(),
            n_tasks: b.ncols(),
            support: fit.coefficients.active_rows().to_vec(),
            coefficients,
            noise: NoiseRecord::from_noise(&fit.noise),
            gap_history: fit.gap_history.clone(),
            config,
        }
    }

    pub fn coefficient_matrix(&self) -> Result<Coefficients> {
        let mut b = DMatrix::zeros(self.n_features, self.n_tasks);
        for triplet in &self.coefficients {
            let bad = || Error::ShapeMismatch(format!("malformed coefficient row {triplet:?}"));
            let (&head, values) = triplet.split_first().ok_or_else(bad)?;
            if values.len() != self.n_tasks || head < 0.0 || head.fract() != 0.0 {
                return Err(bad());
            }
            let j = head as usize;
            if j >= self.n_features {
                return Err(bad());
            }
            b.row_mut(j).iter_mut().zip(values).for_each(|(d, &v)| *d = v);
        }
        Ok(Coefficients::new(b))
    }

    pub fn to_fit_result(&self) -> Result<FitResult> {
        Ok(FitResult {
            solver: self.solver,
            coefficients: self.coefficient_matrix()?,
            noise: self.noise.to_noise()?,
            primal: self.primal,
            dual: self.dual,
            gap: self.gap,
            epochs_run: self.epochs,
            lambda: self.lambda,
            lambda_max: self.lambda_max,
            converged: self.converged,
            gap_history: self.gap_history.clone(),
        })
    }
}

/// Scalar summary of a noise estimate for tabular output: the block levels,
/// `Tr Σ / n` for a full matrix, and `1` for the identity.
pub fn noise_levels(noise: &NoiseSqrtCov) -> Vec<f64> {
    match noise {
        NoiseSqrtCov::BlockDiag { sigmas, .. } => sigmas.clone(),
        NoiseSqrtCov::Full(full) => vec![full.trace() / full.dim() as f64],
        NoiseSqrtCov::FixedIdentity => vec![1.0],
    }
}

/// Writes a headed CSV table.
pub fn write_table<W: Write>(writer: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per path point: `lambda, lambda_ratio, support_size, primal,
/// gap, converged, sigma_1..sigma_K`.
pub fn write_path_csv<W: Write>(writer: W, fits: &[FitResult]) -> Result<()> {
    let k = fits.first().map_or(0, |f| noise_levels(&f.noise).len());
    let mut header: Vec<String> = [
        "lambda",
        "lambda_ratio",
        "support_size",
        "primal",
        "gap",
        "converged",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=k).map(|i| format!("sigma_{i}")));
    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| {
            let ratio = if f.lambda_max > 0.0 {
                f.lambda / f.lambda_max
            } else {
                f64::NAN
            };
            let mut row = vec![
                format_f64(f.lambda),
                format_f64(ratio),
                f.coefficients.support_size().to_string(),
                format_f64(f.primal),
                format_f64(f.gap),
                f.converged.to_string(),
            ];
            row.extend(noise_levels(&f.noise).into_iter().map(format_f64));
            row
        })
        .collect();
    write_table(writer, &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_error_names_row_and_column() {
        let text = "1,2,3\n4,x,6\n";
        match read_matrix_csv(text.as_bytes(), "Y.csv") {
            Err(Error::Parse { row, col, source_name, .. }) => {
                assert_eq!((row, col), (2, 2));
                assert_eq!(source_name, "Y.csv");
            }
            other => panic!("unexpected {other:?}"),
        }
        match read_matrix_csv("1,2\n3\n".as_bytes(), "X.csv") {
            Err(Error::Parse { row: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reads_row_major_layout() {
        let m = read_matrix_csv("1,2\n3,4\n5,6\n".as_bytes(), "m").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    }

    #[test]
    fn noise_record_round_trip() {
        let full = FullNoise::from_eigen(
            DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]),
            DVector::from_vec(vec![2.0, 0.5]),
        )
        .unwrap();
        for noise in [
            NoiseSqrtCov::Full(full),
            NoiseSqrtCov::BlockDiag {
                sigmas: vec![0.1, 0.3],
                block_sizes: vec![2, 3],
            },
            NoiseSqrtCov::FixedIdentity,
        ] {
            let rec = NoiseRecord::from_noise(&noise);
            let text = serde_json::to_string(&rec).unwrap();
            let back: NoiseRecord = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_noise().unwrap(), noise);
        }
    }

    #[test]
    fn fit_record_empty_support() {
        let fit = FitResult {
            solver: SolverKind::Mtl,
            coefficients: Coefficients::zeros(4, 2),
            noise: NoiseSqrtCov::FixedIdentity,
            primal: 1.0,
            dual: 1.0,
            gap: 0.0,
            epochs_run: 0,
            lambda: 2.0,
            lambda_max: 2.0,
            converged: true,
            gap_history: vec![(0, 0.0)],
        };
        let rec = FitRecord::new(&fit, serde_json::Value::Null);
        assert!(rec.coefficients.is_empty());
        assert_eq!(rec.to_fit_result().unwrap(), fit);
    }

    proptest! {
        #[test]
        fn matrix_csv_round_trips_bitwise(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(-1e300f64..1e300, 36),
            small in proptest::collection::vec(-1e-300f64..1e-300, 36),
        ) {
            let m = DMatrix::from_fn(rows, cols, |i, j| {
                let k = i * 6 + j;
                if k % 3 == 0 { small[k] } else { seed[k] / 1e150 }
            });
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, &m).unwrap();
            let back = read_matrix_csv(buf.as_slice(), "m").unwrap();
            prop_assert_eq!(back.shape(), m.shape());
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn fit_record_round_trips(
            values in proptest::collection::vec(-5.0f64..5.0, 12),
            zero_rows in proptest::collection::vec(any::<bool>(), 4),
            sigmas in proptest::collection::vec(1e-3f64..10.0, 2),
        ) {
            let b = DMatrix::from_fn(4, 3, |i, j| if zero_rows[i] { 0.0 } else { values[i * 3 + j] });
            let fit = FitResult {
                solver: SolverKind::Sbhcl,
                coefficients: Coefficients::new(b),
                noise: NoiseSqrtCov::BlockDiag { sigmas, block_sizes: vec![3, 2] },
                primal: 0.75,
                dual: 0.7499,
                gap: 1e-4,
                epochs_run: 20,
                lambda: 0.1,
                lambda_max: 1.0,
                converged: false,
                gap_history: vec![(0, 1.0), (10, 1e-2), (20, 1e-4)],
            };
            let text = serde_json::to_string(&FitRecord::new(&fit, serde_json::json!({"tol": 1e-6}))).unwrap();
            let back: FitRecord = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_fit_result().unwrap(), fit);
        }
    }
}
