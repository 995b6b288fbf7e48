//! Feature tables, CSV ingestion, preprocessing and the synthetic generator.

mod io;
mod preprocess;
mod synth;

use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

pub use io::{ingest, read_edges, read_feature, read_nodes, write_edges, write_feature, write_nodes};
pub use preprocess::{make_windows, split, Example, NormalizeScope, Normalizer, SplitSpec, WindowedDataset};
pub use synth::{fixture, simulate_latent, synth_generate, write_fixture, Fixture, FixtureConfig, SynthConfig};

use crate::compute::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Production,
    SalesOrder,
    Delivery,
    FactoryIssue,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Production,
        FeatureKind::SalesOrder,
        FeatureKind::Delivery,
        FeatureKind::FactoryIssue,
    ];

    /// Name used for the CSV file stem and in configs.
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Production => "production",
            FeatureKind::SalesOrder => "sales_order",
            FeatureKind::Delivery => "delivery",
            FeatureKind::FactoryIssue => "factory_issue",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }
}

/// One temporal feature over all products: `values[t][n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalFeatureTable {
    feature: FeatureKind,
    product_codes: Vec<String>,
    dates: Vec<NaiveDate>,
    values: Matrix,
}

impl TemporalFeatureTable {
    pub fn new(
        feature: FeatureKind,
        product_codes: Vec<String>,
        dates: Vec<NaiveDate>,
        values: Matrix,
    ) -> Result<Self> {
        if values.shape() != (dates.len(), product_codes.len()) {
            return Err(Error::InvalidArgument(format!(
                "table values are {:?} but there are {} dates and {} products",
                values.shape(),
                dates.len(),
                product_codes.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "timestamps must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = product_codes.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate product column `{dup}`")));
        }
        if !values.is_finite() {
            return Err(Error::InvalidArgument("table contains non-finite values".into()));
        }
        Ok(Self {
            feature,
            product_codes,
            dates,
            values,
        })
    }

    /// Table with consecutive daily dates starting at 2023-01-01.
    pub fn with_daily_dates(feature: FeatureKind, product_codes: Vec<String>, values: Matrix) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date");
        let dates = (0..values.rows())
            .map(|t| start.checked_add_days(Days::new(t as u64)).expect("date in range"))
            .collect();
        Self::new(feature, product_codes, dates, values)
    }

    pub fn feature(&self) -> FeatureKind {
        self.feature
    }

    pub fn product_codes(&self) -> &[String] {
        &self.product_codes
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn width(&self) -> usize {
        self.product_codes.len()
    }

    pub fn column_of(&self, code: &str) -> Option<usize> {
        self.product_codes.iter().position(|c| c == code)
    }

    /// Reorders/restricts columns to `codes`.
    pub fn select(&self, codes: &[String]) -> Result<Self> {
        let missing: Vec<&str> = codes
            .iter()
            .filter(|c| self.column_of(c).is_none())
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::ProductMismatch(format!(
                "missing from {} table: {}",
                self.feature,
                missing.join(", ")
            )));
        }
        let cols: Vec<usize> = codes.iter().filter_map(|c| self.column_of(c)).collect();
        Ok(Self {
            feature: self.feature,
            product_codes: codes.to_vec(),
            dates: self.dates.clone(),
            values: self.values.select_columns(&cols),
        })
    }

    pub(crate) fn with_values(&self, values: Matrix) -> Result<Self> {
        Self::new(self.feature, self.product_codes.clone(), self.dates.clone(), values)
    }
}
