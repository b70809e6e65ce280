//! Auto-MPG loading, feature/target scaling and seeded train/test splits.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model inputs, in the column order used everywhere downstream.
pub const FEATURE_NAMES: [&str; 7] = [
    "cylinders",
    "displacement",
    "horsepower",
    "weight",
    "acceleration",
    "model_year",
    "origin",
];

/// One line of the UCI `auto-mpg.data` file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub mpg: f64,
    pub cylinders: u32,
    /// Cubic inches.
    pub displacement: f64,
    pub horsepower: Option<f64>,
    /// Pounds.
    pub weight: f64,
    /// Seconds for 0–60 mph.
    pub acceleration: f64,
    pub model_year: u32,
    /// 1 = USA, 2 = Europe, 3 = Japan.
    pub origin: u8,
    pub car_name: String,
}

impl RawRecord {
    fn features(&self) -> Option<Vec<f64>> {
        Some(vec![
            self.cylinders as f64,
            self.displacement,
            self.horsepower?,
            self.weight,
            self.acceleration,
            self.model_year as f64,
            self.origin as f64,
        ])
    }
}

fn parse_field<T: FromStr>(token: &str, name: &str, line: usize) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {name} from {token:?}"),
    })
}

fn parse_real(token: &str, name: &str, line: usize) -> Result<f64> {
    let v: f64 = parse_field(token, name, line)?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("{name} {token:?} is not finite"),
        });
    }
    Ok(v)
}

/// Parses the UCI `auto-mpg.data` layout: eight whitespace-separated numeric columns
/// followed by the quoted car name. Missing horsepower is written `?`. Blank lines are skipped.
pub fn parse_auto_mpg(text: &str) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (numeric, name) = match raw.find('"') {
            Some(pos) => {
                let name = raw[pos + 1..].trim_end();
                let name = name.strip_suffix('"').ok_or_else(|| Error::Parse {
                    line,
                    msg: "unterminated car name".into(),
                })?;
                (&raw[..pos], name.to_string())
            }
            None => (raw, String::new()),
        };
        let tokens: Vec<&str> = numeric.split_whitespace().collect();
        if tokens.len() != 8 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 8 numeric columns, found {}", tokens.len()),
            });
        }
        let horsepower = match tokens[3] {
            "?" => None,
            t => Some(parse_real(t, "horsepower", line)?),
        };
        let origin: u8 = parse_field(tokens[7], "origin", line)?;
        if !(1..=3).contains(&origin) {
            return Err(Error::Parse {
                line,
                msg: format!("origin code {origin} is not 1, 2 or 3"),
            });
        }
        records.push(RawRecord {
            mpg: parse_real(tokens[0], "mpg", line)?,
            cylinders: parse_field(tokens[1], "cylinders", line)?,
            displacement: parse_real(tokens[2], "displacement", line)?,
            horsepower,
            weight: parse_real(tokens[4], "weight", line)?,
            acceleration: parse_real(tokens[5], "acceleration", line)?,
            model_year: parse_field(tokens[6], "model year", line)?,
            origin,
            car_name: name,
        });
    }
    Ok(records)
}

/// Feature matrix (one row per instance) and regression targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::argument(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if let Some((i, row)) = features
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != feature_names.len())
        {
            return Err(Error::argument(format!(
                "row {i} has {} values, expected {}",
                row.len(),
                feature_names.len()
            )));
        }
        Ok(Self {
            feature_names,
            features,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.feature_names.len()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Drops records with missing values and assembles the MPG regression dataset.
pub fn drop_missing(records: &[RawRecord]) -> Result<Dataset> {
    let (features, targets): (Vec<_>, Vec<_>) = records
        .iter()
        .filter_map(|r| r.features().map(|f| (f, r.mpg)))
        .unzip();
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        features,
        targets,
    )
}

/// The UCI `auto-mpg.data` file (398 records) shipped with the crate.
pub const BUNDLED_AUTO_MPG: &str = include_str!("../data/auto-mpg.data");

/// Reads a dataset from disk: `.csv` files through [`load_csv`], anything else as UCI
/// `auto-mpg.data`.
pub fn load_path(path: &std::path::Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    let is_csv = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"));
    let loaded = if is_csv {
        load_csv(&text)
    } else {
        load_auto_mpg(&text)
    };
    loaded.map_err(|e| e.context(path.display().to_string()))
}

/// Convenience: parse and clean in one step.
pub fn load_auto_mpg(text: &str) -> Result<Dataset> {
    drop_missing(&parse_auto_mpg(text)?)
}

/// Generic numeric CSV: every column but the last is a feature, the last is the target.
/// A first line that does not parse as numbers is taken as the header.
pub fn load_csv(text: &str) -> Result<Dataset> {
    let mut names: Option<Vec<String>> = None;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "need at least one feature column and a target column".into(),
            });
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Err(_) if names.is_none() && features.is_empty() => {
                names = Some(
                    cells[..cells.len() - 1]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                );
            }
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    msg: "non-numeric cell".into(),
                })
            }
            Ok(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        msg: "non-finite cell".into(),
                    });
                }
                let expected = names
                    .as_ref()
                    .map(|n| n.len() + 1)
                    .or(features.first().map(|f: &Vec<f64>| f.len() + 1));
                if let Some(expected) = expected {
                    if values.len() != expected {
                        return Err(Error::Parse {
                            line,
                            msg: format!("expected {expected} columns, found {}", values.len()),
                        });
                    }
                }
                let (x, y) = values.split_at(values.len() - 1);
                features.push(x.to_vec());
                targets.push(y[0]);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let names = names.unwrap_or_else(|| (0..features[0].len()).map(|i| format!("x{i}")).collect());
    Dataset::new(names, features, targets)
}

/// Per-column statistics of the standardize-then-min-max transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Extremes of the standardized fitting data.
    pub min: f64,
    pub max: f64,
    /// Constant column: every value maps to 0.
    pub degenerate: bool,
}

impl ColumnScaling {
    fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if std == 0.0 {
            return Self {
                mean,
                std,
                min: 0.0,
                max: 0.0,
                degenerate: true,
            };
        }
        let (min, max) = values
            .iter()
            .map(|v| (v - mean) / std)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                (lo.min(z), hi.max(z))
            });
        Self {
            mean,
            std,
            min,
            max,
            degenerate: max <= min,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let z = (x - self.mean) / self.std;
        2.0 * (z - self.min) / (self.max - self.min) - 1.0
    }

    pub fn invert(&self, scaled: f64) -> f64 {
        if self.degenerate {
            return self.mean;
        }
        let z = (scaled + 1.0) * 0.5 * (self.max - self.min) + self.min;
        z * self.std + self.mean
    }
}

/// z-score followed by min-max to `[−1, 1]`, fitted column by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: Vec<ColumnScaling>,
}

impl Scaler {
    /// Fits on the rows of a feature matrix.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::argument(format!(
                "scaler needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::argument("ragged feature matrix"));
        }
        let columns = (0..width)
            .map(|j| {
                let values: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                ColumnScaling::fit(&values)
            })
            .collect::<Vec<_>>();
        for (j, c) in columns.iter().enumerate() {
            if c.degenerate {
                log::warn!("column {j} is constant on the fitting rows; it scales to 0");
            }
        }
        Ok(Self { columns })
    }

    /// Fits a single-column scaler, e.g. for regression targets.
    pub fn fit_column(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::argument(format!(
                "scaler needs at least 2 values, got {}",
                values.len()
            )));
        }
        let column = ColumnScaling::fit(values);
        if column.degenerate {
            log::warn!("target column is constant on the fitting rows; it scales to 0");
        }
        Ok(Self {
            columns: vec![column],
        })
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn has_degenerate_columns(&self) -> bool {
        self.columns.iter().any(|c| c.degenerate)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.columns.len() {
            return Err(Error::argument(format!(
                "row has {} columns, scaler was fitted on {}",
                row.len(),
                self.columns.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.columns)
            .map(|(x, c)| c.apply(*x))
            .collect())
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    fn single(&self) -> Result<&ColumnScaling> {
        match self.columns.as_slice() {
            [c] => Ok(c),
            _ => Err(Error::argument(format!(
                "expected a single-column scaler, this one has {} columns",
                self.columns.len()
            ))),
        }
    }

    pub fn apply_column(&self, values: &[f64]) -> Result<Vec<f64>> {
        let c = self.single()?;
        Ok(values.iter().map(|&v| c.apply(v)).collect())
    }

    /// Maps scaled targets back to original units.
    pub fn invert_target(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        let c = self.single()?;
        Ok(scaled.iter().map(|&v| c.invert(v)).collect())
    }
}

/// Training share of the data, written `k/m`.
///
/// The training set holds `k · ⌊N/m⌋` rows, which gives 78, 156 and 312 rows for
/// `1/5`, `2/5` and `4/5` of the 392 cleaned Auto-MPG instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TrainFraction {
    numerator: u32,
    denominator: u32,
}

impl TrainFraction {
    pub const ONE_FIFTH: TrainFraction = TrainFraction {
        numerator: 1,
        denominator: 5,
    };
    pub const TWO_FIFTHS: TrainFraction = TrainFraction {
        numerator: 2,
        denominator: 5,
    };
    pub const FOUR_FIFTHS: TrainFraction = TrainFraction {
        numerator: 4,
        denominator: 5,
    };

    pub fn new(numerator: u32, denominator: u32) -> Result<Self> {
        if numerator == 0 || numerator >= denominator {
            return Err(Error::argument(format!(
                "train fraction {numerator}/{denominator} must lie strictly between 0 and 1"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn train_size(&self, n: usize) -> usize {
        self.numerator as usize * (n / self.denominator as usize)
    }
}

impl fmt::Display for TrainFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for TrainFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s.split_once('/').ok_or_else(|| {
            Error::argument(format!("train fraction {s:?} is not of the form k/m"))
        })?;
        let parse = |t: &str| {
            t.trim().parse::<u32>().map_err(|_| {
                Error::argument(format!("train fraction {s:?} is not of the form k/m"))
            })
        };
        Self::new(parse(num)?, parse(den)?)
    }
}

impl TryFrom<String> for TrainFraction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TrainFraction> for String {
    fn from(f: TrainFraction) -> String {
        f.to_string()
    }
}

/// Seeded shuffle of `0..n`, cut into (train, test) index lists.
pub fn split_indices(
    n: usize,
    fraction: TrainFraction,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = fraction.train_size(n);
    if n_train == 0 || n_train >= n {
        return Err(Error::argument(format!(
            "fraction {fraction} of {n} rows leaves an empty train or test side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split_train_test(
    dataset: &Dataset,
    fraction: TrainFraction,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), fraction, seed)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST_LINE: &str =
        "18.0   8   307.0   130.0   3504.   12.0   70  1\t\"chevrolet chevelle malibu\"";

    #[test]
    fn parses_first_uci_line() {
        let r = &parse_auto_mpg(FIRST_LINE).unwrap()[0];
        assert_eq!(r.mpg, 18.0);
        assert_eq!(r.cylinders, 8);
        assert_eq!(r.horsepower, Some(130.0));
        assert_eq!(r.weight, 3504.0);
        assert_eq!(r.model_year, 70);
        assert_eq!(r.origin, 1);
        assert_eq!(r.car_name, "chevrolet chevelle malibu");
    }

    #[test]
    fn empty_input_gives_no_records() {
        assert!(parse_auto_mpg("").unwrap().is_empty());
        assert!(parse_auto_mpg("\n\n").unwrap().is_empty());
    }

    #[test]
    fn missing_horsepower_and_errors() {
        let text =
            format!("{FIRST_LINE}\n25.0   4   98.00   ?   2046.   19.0   71  1\t\"ford pinto\"");
        let records = parse_auto_mpg(&text).unwrap();
        assert_eq!(records[1].horsepower, None);
        assert_eq!(drop_missing(&records).unwrap().len(), 1);

        let bad =
            format!("{FIRST_LINE}\n25.0   4   98.00   x   2046.   19.0   71  1\t\"ford pinto\"");
        assert!(matches!(
            parse_auto_mpg(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
        let short = "25.0   4   98.00   2046.   19.0   71  1\t\"ford pinto\"";
        assert!(matches!(
            parse_auto_mpg(short),
            Err(Error::Parse { line: 1, .. })
        ));
        let origin = "25.0   4   98.00   90.0  2046.   19.0   71  4\t\"ford pinto\"";
        assert!(matches!(
            parse_auto_mpg(origin),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn all_missing_is_empty_dataset() {
        let text = "25.0   4   98.00   ?   2046.   19.0   71  1\t\"ford pinto\"";
        let records = parse_auto_mpg(text).unwrap();
        assert!(matches!(drop_missing(&records), Err(Error::EmptyDataset)));
    }

    #[test]
    fn scaler_maps_extremes_and_midpoint() {
        let s = Scaler::fit_column(&[1.0, 2.0, 3.0]).unwrap();
        let out = s.apply_column(&[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
        assert!((out[2] - 1.0).abs() < 1e-15);
        assert!(out[3] > 1.0);
        let back = s.invert_target(&out).unwrap();
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0, 5.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_degenerate_column_maps_to_zero() {
        let rows = vec![vec![1.0, 4.0], vec![2.0, 4.0], vec![3.0, 4.0]];
        let s = Scaler::fit(&rows).unwrap();
        assert!(s.columns[1].degenerate && s.has_degenerate_columns());
        assert_eq!(s.apply_row(&[2.0, 100.0]).unwrap()[1], 0.0);
        assert!(Scaler::fit(&rows[..1]).is_err());
        assert!(s.apply_row(&[1.0]).is_err());
        assert!(s.apply_column(&[1.0]).is_err());
    }

    #[test]
    fn fractions() {
        assert_eq!(
            "1/5".parse::<TrainFraction>().unwrap(),
            TrainFraction::ONE_FIFTH
        );
        assert!("5/5".parse::<TrainFraction>().is_err());
        assert!("0/5".parse::<TrainFraction>().is_err());
        assert!("0.2".parse::<TrainFraction>().is_err());
        assert_eq!(TrainFraction::ONE_FIFTH.train_size(392), 78);
        assert_eq!(TrainFraction::TWO_FIFTHS.train_size(392), 156);
        assert_eq!(TrainFraction::FOUR_FIFTHS.train_size(392), 312);
        let json = serde_json::to_string(&TrainFraction::FOUR_FIFTHS).unwrap();
        assert_eq!(json, "\"4/5\"");
    }

    #[test]
    fn split_errors_on_empty_side() {
        assert!(split_indices(4, TrainFraction::ONE_FIFTH, 0).is_err());
        let (train, test) = split_indices(10, TrainFraction::ONE_FIFTH, 0).unwrap();
        assert_eq!((train.len(), test.len()), (2, 8));
    }

    #[test]
    fn csv_loader() {
        let d = load_csv("a,b,y\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.features, vec![vec![1.0, 2.0], vec![4.0, 5.0]]);
        assert_eq!(d.targets, vec![3.0, 6.0]);
        assert!(load_csv("1,2,3\n4,5\n").is_err());
        assert!(load_csv("a,b\n").is_err());
    }
}
