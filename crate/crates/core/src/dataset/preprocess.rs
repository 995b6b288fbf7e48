//! Chronological split, z-score normalization and rolling windows.

use serde::{Deserialize, Serialize};

use super::TemporalFeatureTable;
use crate::compute::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// First test index; train is `[0, boundary)`.
    pub boundary: usize,
    /// Total number of time points.
    pub len: usize,
    pub train_ratio: f64,
}

impl SplitSpec {
    pub fn train_len(&self) -> usize {
        self.boundary
    }

    pub fn test_len(&self) -> usize {
        self.len - self.boundary
    }
}

/// `boundary = floor(train_ratio * len)`; both segments must hold more than
/// `window` points so each yields at least one example.
pub fn split(len: usize, train_ratio: f64, window: usize) -> Result<SplitSpec> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    if len < 2 {
        return Err(Error::InvalidArgument(format!(
            "series of length {len} cannot be split"
        )));
    }
    let boundary = (train_ratio * len as f64).floor() as usize;
    let needed = window + 1;
    if boundary < needed {
        return Err(Error::SegmentTooShort {
            segment: "train",
            len: boundary,
            needed,
        });
    }
    if len - boundary < needed {
        return Err(Error::SegmentTooShort {
            segment: "test",
            len: len - boundary,
            needed,
        });
    }
    Ok(SplitSpec {
        boundary,
        len,
        train_ratio,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeScope {
    #[default]
    TrainOnly,
    FullSeries,
}

impl NormalizeScope {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizeScope::TrainOnly => "train_only",
            NormalizeScope::FullSeries => "full_series",
        }
    }
}

impl std::str::FromStr for NormalizeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train_only" => Ok(NormalizeScope::TrainOnly),
            "full_series" => Ok(NormalizeScope::FullSeries),
            _ => Err(Error::InvalidArgument(format!("unknown normalize scope `{s}`"))),
        }
    }
}

/// Per-product z-score parameters (population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(table: &TemporalFeatureTable, split: &SplitSpec, scope: NormalizeScope) -> Result<Self> {
        if split.len != table.len() {
            return Err(Error::InvalidArgument(format!(
                "split covers {} points but table has {}",
                split.len,
                table.len()
            )));
        }
        let rows = match scope {
            NormalizeScope::TrainOnly => split.boundary,
            NormalizeScope::FullSeries => table.len(),
        };
        let values = table.values();
        let count = rows as f64;
        let mut mean = Vec::with_capacity(table.width());
        let mut std = Vec::with_capacity(table.width());
        for (n, code) in table.product_codes().iter().enumerate() {
            let m = (0..rows).map(|t| values[(t, n)]).sum::<f64>() / count;
            let var = (0..rows).map(|t| (values[(t, n)] - m).powi(2)).sum::<f64>() / count;
            let s = var.sqrt();
            if s == 0.0 || !s.is_finite() {
                return Err(Error::ZeroVariance(code.clone()));
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, table: &TemporalFeatureTable) -> Result<TemporalFeatureTable> {
        if table.width() != self.mean.len() {
            return Err(Error::InvalidArgument(format!(
                "normalizer fitted on {} products, table has {}",
                self.mean.len(),
                table.width()
            )));
        }
        let mut values = table.values().clone();
        for t in 0..values.rows() {
            for (n, v) in values.row_mut(t).iter_mut().enumerate() {
                *v = (*v - self.mean[n]) / self.std[n];
            }
        }
        table.with_values(values)
    }
}

/// One supervised example: every node's history window and next value.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    /// `N × window`, oldest lag first.
    pub x: Matrix,
    /// `N × 1` labels.
    pub y: Matrix,
    /// Absolute time index of the label row.
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    pub window: usize,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

/// Builds rolling windows inside each segment; no window crosses the boundary.
pub fn make_windows(normalized: &TemporalFeatureTable, split: &SplitSpec, window: usize) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    if split.len != normalized.len() {
        return Err(Error::InvalidArgument("split does not match table length".into()));
    }
    let values = normalized.values();
    let segment = |name: &'static str, start: usize, end: usize| -> Result<Vec<Example>> {
        let len = end - start;
        if len <= window {
            return Err(Error::SegmentTooShort {
                segment: name,
                len,
                needed: window + 1,
            });
        }
        (start..end - window)
            .map(|k| {
                let t = k + window;
                let n = values.cols();
                let mut x = Matrix::zeros(n, window);
                for lag in 0..window {
                    for node in 0..n {
                        x[(node, lag)] = values[(k + lag, node)];
                    }
                }
                let y = Matrix::column_vector(values.row(t));
                Ok(Example { x, y, t })
            })
            .collect()
    };
    Ok(WindowedDataset {
        window,
        train: segment("train", 0, split.boundary)?,
        test: segment("test", split.boundary, split.len)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureKind;

    fn single_column(values: &[f64]) -> TemporalFeatureTable {
        TemporalFeatureTable::with_daily_dates(FeatureKind::SalesOrder, vec!["A".into()], Matrix::column_vector(values))
            .unwrap()
    }

    #[test]
    fn split_default_sizes() {
        let s = split(221, 0.95, 5).unwrap();
        assert_eq!((s.boundary, s.train_len(), s.test_len()), (209, 209, 12));
        assert_eq!(split(100, 0.5, 5).unwrap().boundary, 50);
    }

    #[test]
    fn split_guards_short_segments() {
        assert!(matches!(
            split(10, 0.95, 5),
            Err(Error::SegmentTooShort { segment: "test", .. })
        ));
        assert!(split(100, 1.0, 5).is_err());
        assert!(split(1, 0.5, 5).is_err());
    }

    #[test]
    fn normalizer_population_std() {
        let table = single_column(&[1.0, 2.0, 3.0, 100.0, 200.0, 300.0]);
        let s = SplitSpec {
            boundary: 3,
            len: 6,
            train_ratio: 0.5,
        };
        let norm = Normalizer::fit(&table, &s, NormalizeScope::TrainOnly).unwrap();
        assert!((norm.mean[0] - 2.0).abs() < 1e-15);
        assert!((norm.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z = norm.apply(&table).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (t, e) in expect.iter().enumerate() {
            assert!((z.values()[(t, 0)] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn normalizer_fixed_point() {
        let table = single_column(&[-1.0, 1.0, -1.0, 1.0]);
        let s = SplitSpec {
            boundary: 4,
            len: 4,
            train_ratio: 0.99,
        };
        let norm = Normalizer::fit(&table, &s, NormalizeScope::TrainOnly).unwrap();
        assert_eq!((norm.mean[0], norm.std[0]), (0.0, 1.0));
        assert_eq!(norm.apply(&table).unwrap(), table);
    }

    #[test]
    fn normalizer_rejects_constant_train_segment() {
        let table = single_column(&[5.0, 5.0, 5.0, 7.0]);
        let s = SplitSpec {
            boundary: 3,
            len: 4,
            train_ratio: 0.75,
        };
        assert!(matches!(
            Normalizer::fit(&table, &s, NormalizeScope::TrainOnly),
            Err(Error::ZeroVariance(_))
        ));
        assert!(Normalizer::fit(&table, &s, NormalizeScope::FullSeries).is_ok());
    }

    #[test]
    fn windows_count_and_labels() {
        let vals: Vec<f64> = (0..16).map(f64::from).collect();
        let table = single_column(&vals);
        let s = SplitSpec {
            boundary: 8,
            len: 16,
            train_ratio: 0.5,
        };
        let ds = make_windows(&table, &s, 5).unwrap();
        assert_eq!(ds.train.len(), 3);
        assert_eq!(ds.train[0].x.row(0), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.train.iter().map(|e| e.t).collect::<Vec<_>>(), vec![5, 6, 7]);
        assert_eq!(ds.test[0].x.row(0), &[8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(ds.test[0].t, 13);
    }

    #[test]
    fn windows_reject_segment_equal_to_window() {
        let table = single_column(&(0..10).map(f64::from).collect::<Vec<_>>());
        let s = SplitSpec {
            boundary: 5,
            len: 10,
            train_ratio: 0.5,
        };
        assert!(make_windows(&table, &s, 5).is_err());
    }
}
