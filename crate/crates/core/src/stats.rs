//! Feature/satisfaction correlation study: Pearson coefficients on the
//! full dataset and on adjacent-level subsets, with significance gating
//! and table emission in the familiar four-group layout.

use crate::features::FeatureId;
use crate::preprocess::Dataset;
use crate::{Error, Result};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::io::Write;

/// Sample Pearson correlation coefficient.
///
/// Needs at least 3 points and nonzero variance on both sides.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Two-tailed p-value for a Pearson r via the t statistic
/// `t = r * sqrt((n-2) / (1-r^2))` with `n-2` degrees of freedom.
pub fn significance(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    2.0 * (1.0 - dist.cdf(t))
}

/// The comparison groups of the correlation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Group {
    All,
    LowMedium,
    MediumHigh,
    HighVeryHigh,
}

impl Group {
    pub const ALL: [Group; 4] = [
        Group::All,
        Group::LowMedium,
        Group::MediumHigh,
        Group::HighVeryHigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::All => "All",
            Group::LowMedium => "L/M",
            Group::MediumHigh => "M/H",
            Group::HighVeryHigh => "H/VH",
        }
    }

    /// The pair of labels the group restricts to, if any.
    fn labels(self) -> Option<(usize, usize)> {
        match self {
            Group::All => None,
            Group::LowMedium => Some((0, 1)),
            Group::MediumHigh => Some((1, 2)),
            Group::HighVeryHigh => Some((2, 3)),
        }
    }
}

/// One significant correlation entry.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrEntry {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Correlation of every feature with satisfaction, per group.
///
/// A cell is `None` when the correlation was undefined (zero variance)
/// or not significant at the configured level.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub alpha: f64,
    /// `cells[feature][group]`, indexed per `FeatureId::ALL` and `Group::ALL`.
    pub cells: Vec<[Option<CorrEntry>; 4]>,
}

/// Compute the correlation report over an imputed dataset.
///
/// Within an adjacent pair group the two labels are coded {0, 1}, so a
/// positive sign means the feature rises with satisfaction inside the
/// pair, matching the full-table convention.
pub fn correlation_report(dataset: &Dataset, alpha: f64) -> CorrelationReport {
    let n_features = dataset.x.first().map_or(0, |r| r.len());
    let cells = crate::par::map_range(n_features, |f| {
        let mut row = [None; 4];
        for (g_idx, group) in Group::ALL.iter().enumerate() {
            let (xs, ys): (Vec<f64>, Vec<f64>) = match group.labels() {
                None => (
                    dataset.x.iter().map(|r| r[f]).collect(),
                    dataset.y.iter().map(|&y| y as f64).collect(),
                ),
                Some((a, b)) => {
                    let idx: Vec<usize> = (0..dataset.len())
                        .filter(|&i| dataset.y[i] == a || dataset.y[i] == b)
                        .collect();
                    (
                        idx.iter().map(|&i| dataset.x[i][f]).collect(),
                        idx.iter()
                            .map(|&i| if dataset.y[i] == a { 0.0 } else { 1.0 })
                            .collect(),
                    )
                }
            };
            if let Ok(r) = pearson(&xs, &ys) {
                let p = significance(r, xs.len());
                if p < alpha {
                    row[g_idx] = Some(CorrEntry { r, p, n: xs.len() });
                }
            }
        }
        row
    });
    CorrelationReport { alpha, cells }
}

impl CorrelationReport {
    pub fn entry(&self, feature: FeatureId, group: Group) -> Option<CorrEntry> {
        let g = Group::ALL.iter().position(|g| *g == group).unwrap();
        self.cells[feature as usize][g]
    }

    /// CSV in the table shape: feature, category, then one r per group
    /// with `-` for omitted cells.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["feature".to_string(), "category".to_string()];
        header.extend(Group::ALL.iter().map(|g| g.name().to_string()));
        wtr.write_record(&header)?;
        for (i, feature) in FeatureId::ALL.iter().enumerate() {
            let mut rec = vec![feature.name().to_string(), feature.category().name().to_string()];
            for g in 0..4 {
                rec.push(match self.cells[i][g] {
                    Some(e) => format!("{:.3}", e.r),
                    None => "-".to_string(),
                });
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Aligned text table, one block per feature category.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{:<24} {:>8} {:>8} {:>8} {:>8}",
            "Feature", "All", "L/M", "M/H", "H/VH"
        )?;
        let mut current = None;
        for (i, feature) in FeatureId::ALL.iter().enumerate() {
            if current != Some(feature.category()) {
                current = Some(feature.category());
                writeln!(w, "-- {} --", feature.category().name())?;
            }
            let fmt = |e: Option<CorrEntry>| match e {
                Some(e) => format!("{:.3}", e.r),
                None => "-".to_string(),
            };
            writeln!(
                w,
                "{:<24} {:>8} {:>8} {:>8} {:>8}",
                feature.name(),
                fmt(self.cells[i][0]),
                fmt(self.cells[i][1]),
                fmt(self.cells[i][2]),
                fmt(self.cells[i][3]),
            )?;
        }
        Ok(())
    }
}
