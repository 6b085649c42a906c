//! CSV ingestion, collinearity diagnostics and the synthetic municipalities data.
//!
//! Row numbers in errors count data rows from 1, not counting the header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix, Tolerance};
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    /// Zero-based column position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub header: bool,
    pub response_column: ResponseColumn,
    /// Prepend a column of ones.
    pub intercept: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            header: true,
            response_column: ResponseColumn::Index(0),
            intercept: false,
        }
    }
}

pub const INTERCEPT_NAME: &str = "(intercept)";

/// A dataset together with its column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub response_name: String,
    /// One per column of X, intercept included.
    pub column_names: Vec<String>,
}

impl LabeledDataset {
    /// Names of the non-intercept columns.
    pub fn predictor_names(&self) -> &[String] {
        let skip = usize::from(self.data.has_intercept());
        &self.column_names[skip..]
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LabeledDataset> {
    read_csv(File::open(path)?, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers: Option<Vec<String>> = if opts.header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in rdr.records() {
        rows.push(record?.iter().map(str::to_owned).collect());
    }
    let width = headers
        .as_ref()
        .map(Vec::len)
        .or_else(|| rows.first().map(Vec::len))
        .ok_or_else(|| Error::InvalidDataset("empty file".into()))?;
    if width < 2 && !opts.intercept {
        return Err(Error::InvalidDataset(
            "need a response column and at least one predictor".into(),
        ));
    }
    let names = headers.unwrap_or_else(|| (1..=width).map(|j| format!("V{j}")).collect());

    let resp = match &opts.response_column {
        ResponseColumn::Index(j) if *j < width => *j,
        ResponseColumn::Index(j) => {
            return Err(Error::InvalidDataset(format!(
                "response column {j} out of range for {width} columns"
            )))
        }
        ResponseColumn::Name(name) => {
            if !opts.header {
                return Err(Error::InvalidDataset(
                    "response column by name needs a header row".into(),
                ));
            }
            names
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidDataset(format!("no column named {name:?}")))?
        }
    };

    let n = rows.len();
    let p = width - 1;
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let mut k = 0;
        for (j, field) in row.iter().enumerate() {
            let parse_err = |message: String| Error::Parse {
                row: i + 1,
                column: names[j].clone(),
                message,
            };
            if field.is_empty() {
                return Err(parse_err("missing value".into()));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {field:?}")));
            }
            if j == resp {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryResponse {
                        row: i + 1,
                        value: field.clone(),
                    });
                }
                y[i] = v;
            } else {
                x[(i, k)] = v;
                k += 1;
            }
        }
    }

    let response_name = names[resp].clone();
    let mut column_names: Vec<String> = names
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != resp)
        .map(|(_, s)| s)
        .collect();
    let data = if opts.intercept {
        column_names.insert(0, INTERCEPT_NAME.to_owned());
        Dataset::with_intercept(x, y)?
    } else {
        Dataset::new(x, y, false)?
    };
    Ok(LabeledDataset {
        data,
        response_name,
        column_names,
    })
}

/// Response first, then the predictors; the intercept column is not written.
pub fn write_csv<W: Write>(writer: W, labeled: &LabeledDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![labeled.response_name.clone()];
    header.extend(labeled.predictor_names().iter().cloned());
    wtr.write_record(&header)?;
    let x = labeled.data.predictors();
    for i in 0..labeled.data.n() {
        let mut rec = vec![labeled.data.y()[i].to_string()];
        rec.extend(x.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, labeled: &LabeledDataset) -> Result<()> {
    write_csv(File::create(path)?, labeled)
}

/// Matrix whose eigenvalues define κ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KappaBasis {
    /// Pearson correlation matrix of the predictors.
    #[default]
    Correlation,
    /// Raw cross-product X′X of the predictors.
    CrossProduct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub correlation: SymMatrix,
    pub basis: KappaBasis,
    /// Descending eigenvalues of the basis matrix.
    pub eigenvalues: Vec<f64>,
    /// √(λ_max/λ_min); +∞ when the basis matrix is numerically singular.
    pub kappa: f64,
}

/// Pearson correlations of the non-intercept columns. Fails on a constant
/// column, named by its 1-based predictor position.
pub fn correlation_matrix(x: &DMatrix<f64>) -> Result<SymMatrix> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::InvalidDataset("need at least two rows".into()));
    }
    let mut centered = x.clone();
    for j in 0..p {
        let mut col = centered.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        let scale = x.column(j).amax().max(f64::MIN_POSITIVE);
        if norm <= 1e-12 * scale * (n as f64).sqrt() {
            return Err(Error::ConstantColumn(format!("predictor {}", j + 1)));
        }
        col /= norm;
    }
    let mut r = centered.transpose() * &centered;
    r.fill_diagonal(1.0);
    SymMatrix::new(r)
}

pub fn diagnostics(data: &Dataset, basis: KappaBasis) -> Result<DiagnosticsReport> {
    let x = data.predictors();
    let correlation = correlation_matrix(&x)?;
    let target = match basis {
        KappaBasis::Correlation => correlation.clone(),
        KappaBasis::CrossProduct => SymMatrix::new(x.transpose() * &x)?,
    };
    let decomp = sym_eigen(&target);
    let (hi, lo) = (decomp.max_eigenvalue(), decomp.min_eigenvalue());
    let kappa = if lo <= decomp.zero_cut(&Tolerance::default()) {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    };
    Ok(DiagnosticsReport {
        correlation,
        basis,
        eigenvalues: decomp.eigenvalues.iter().copied().collect(),
        kappa,
    })
}

/// Target correlation structure for the synthetic municipalities data.
pub const MUNICIPALITIES_CORRELATION: [f64; 16] = [
    1.0000, 0.9937, 0.9707, 0.9514, //
    0.9937, 1.0000, 0.9527, 0.9222, //
    0.9707, 0.9527, 1.0000, 0.9765, //
    0.9514, 0.9222, 0.9765, 1.0000,
];
pub const MUNICIPALITIES_N: usize = 83;
/// Coefficients of the logistic model that generates the synthetic response.
pub const MUNICIPALITIES_BETA: [f64; 4] = [1.5, -1.0, 0.5, -0.8];
pub const MUNICIPALITIES_SEED: u64 = 83;

/// Synthetic stand-in for the 83-municipality data: four standardized
/// predictors whose sample correlation matrix equals
/// [`MUNICIPALITIES_CORRELATION`] exactly (up to rounding), and a Bernoulli
/// response from [`MUNICIPALITIES_BETA`] without intercept.
///
/// Normal draws are centered, whitened to identity sample covariance, then
/// colored with the symmetric square root of the target correlation.
pub fn synthetic_municipalities(seed: u64) -> Result<LabeledDataset> {
    let n = MUNICIPALITIES_N;
    let p = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in z.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let cov = SymMatrix::new(z.transpose() * &z / (n as f64 - 1.0))?;
    let whiten = sym_eigen(&cov).map(|l| 1.0 / l.sqrt());
    let target = SymMatrix::from_row_slice(p, &MUNICIPALITIES_CORRELATION)?;
    let color = sym_eigen(&target).map(f64::sqrt);
    let x = z * whiten.as_matrix() * color.as_matrix();

    let beta = DVector::from_column_slice(&MUNICIPALITIES_BETA);
    let eta = &x * beta;
    let y = eta.map(|e| {
        let u: f64 = rng.random();
        if u < 1.0 / (1.0 + (-e).exp()) {
            1.0
        } else {
            0.0
        }
    });
    Ok(LabeledDataset {
        data: Dataset::new(x, y, false)?,
        response_name: "increase".into(),
        column_names: ["population", "unemployed", "new_buildings", "bankruptcies"]
            .map(String::from)
            .to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_row_example() {
        let opts = CsvOptions {
            intercept: true,
            ..CsvOptions::default()
        };
        // a 2x2 design needs n > m, so add one row and check the first two
        let d = read_csv("y,x\n1,0.5\n0,-0.5\n1,2".as_bytes(), &opts).unwrap();
        assert_eq!(
            d.data.x().row(0).iter().copied().collect::<Vec<_>>(),
            [1.0, 0.5]
        );
        assert_eq!(
            d.data.x().row(1).iter().copied().collect::<Vec<_>>(),
            [1.0, -0.5]
        );
        assert_eq!(d.data.y().as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(d.column_names, [INTERCEPT_NAME, "x"]);
        assert_eq!(d.response_name, "y");
    }

    #[test]
    fn bad_rows_are_numbered() {
        let opts = CsvOptions::default();
        match read_csv("y,x\n1,0.5\n2,-0.5\n0,1".as_bytes(), &opts) {
            Err(Error::NonBinaryResponse { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "2");
            }
            other => panic!("{other:?}"),
        }
        match read_csv("y,x\n1,0.5\n0,abc\n0,1".as_bytes(), &opts) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_csv("y,x\n1,\n0,1\n1,2".as_bytes(), &opts),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn response_by_name_and_headerless() {
        let opts = CsvOptions {
            response_column: ResponseColumn::Name("y".into()),
            ..CsvOptions::default()
        };
        let d = read_csv("a,y\n0.5,1\n-0.5,0\n2,1".as_bytes(), &opts).unwrap();
        assert_eq!(d.data.y().as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(d.column_names, ["a"]);

        let opts = CsvOptions {
            header: false,
            ..CsvOptions::default()
        };
        let d = read_csv("1,0.5\n0,-0.5\n1,2".as_bytes(), &opts).unwrap();
        assert_eq!(d.response_name, "V1");
        assert_eq!(d.column_names, ["V2"]);
    }

    #[test]
    fn round_trip() {
        let d = synthetic_municipalities(5).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &d).unwrap();
        let back = read_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn identical_columns_give_infinite_kappa() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 5.0, 5.0]);
        let data =
            Dataset::new(x, DVector::from_column_slice(&[0.0, 1.0, 0.0, 1.0]), false).unwrap();
        let r = diagnostics(&data, KappaBasis::Correlation).unwrap();
        assert_abs_diff_eq!(r.correlation[(0, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(r.kappa, f64::INFINITY);
    }

    #[test]
    fn orthogonal_columns_give_unit_kappa() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let data =
            Dataset::new(x, DVector::from_column_slice(&[0.0, 1.0, 1.0, 0.0]), false).unwrap();
        let r = diagnostics(&data, KappaBasis::Correlation).unwrap();
        assert_abs_diff_eq!(r.kappa, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.correlation[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 3.0, 2.0, 3.0, 3.0, 3.0, 4.0, 3.0]);
        let data =
            Dataset::new(x, DVector::from_column_slice(&[0.0, 1.0, 1.0, 0.0]), false).unwrap();
        assert!(matches!(
            diagnostics(&data, KappaBasis::Correlation),
            Err(Error::ConstantColumn(_))
        ));
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 4.0]);
        let data = Dataset::with_intercept(x, DVector::from_column_slice(&[0.0, 1.0, 1.0]));
        let r = diagnostics(&data.unwrap(), KappaBasis::Correlation).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0]);
    }

    #[test]
    fn synthetic_data_hits_target_correlation() {
        let d = synthetic_municipalities(MUNICIPALITIES_SEED).unwrap();
        assert_eq!(d.data.n(), MUNICIPALITIES_N);
        let r = diagnostics(&d.data, KappaBasis::Correlation).unwrap();
        for (a, b) in r.correlation.iter().zip(MUNICIPALITIES_CORRELATION.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
        assert!(r.kappa > 30.0);
        let raw = diagnostics(&d.data, KappaBasis::CrossProduct).unwrap();
        assert!(raw.kappa.is_finite());
    }
}
