//! Year-long hourly profiles and their reduction to weighted typical days
//! by Ward clustering.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::model::{BusId, TypicalDay};

pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("column {column}: header must look like <bus>:demand or <bus>:renewable")]
    Header { column: String },
    #[error("row {row}, column {column}: invalid value {value:?}")]
    BadValue { row: usize, column: String, value: String },
    #[error("row {row}, column {column}: negative demand {value}")]
    NegativeDemand { row: usize, column: String, value: f64 },
    #[error("{rows} hourly rows is not a whole number of days")]
    Shape { rows: usize },
    #[error("no days found")]
    NoDays,
    #[error("cluster count {k} must be between 1 and the number of days ({days})")]
    ClusterCount { k: usize, days: usize },
}

/// Hourly demand and renewable output per bus, indexed `[day][hour][bus]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearProfiles {
    pub buses: Vec<BusId>,
    pub demand: Vec<Vec<Vec<f64>>>,
    pub renewable: Vec<Vec<Vec<f64>>>,
}

impl YearProfiles {
    pub fn num_days(&self) -> usize {
        self.demand.len()
    }
}

/// Reads a profile table: a header of `<bus>:demand` / `<bus>:renewable`
/// columns and one row per hour. A bus without a renewable column has
/// none. Rows are grouped into days of 24.
pub fn load_profiles<R: Read>(source: R) -> Result<YearProfiles, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let mut buses: Vec<BusId> = Vec::new();
    let mut columns = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let (bus, kind) = h.rsplit_once(':').ok_or_else(|| ScenarioError::Header { column: h.into() })?;
        let is_demand = match kind {
            "demand" => true,
            "renewable" => false,
            _ => return Err(ScenarioError::Header { column: h.into() }),
        };
        let b = match buses.iter().position(|x| x == bus) {
            Some(b) => b,
            None => {
                buses.push(bus.to_string());
                buses.len() - 1
            }
        };
        columns.push((b, is_demand));
    }

    let nb = buses.len();
    let mut demand_rows: Vec<Vec<f64>> = Vec::new();
    let mut renewable_rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2;
        let mut d = vec![0.0; nb];
        let mut g = vec![0.0; nb];
        for (c, field) in rec.iter().enumerate() {
            let column = headers.get(c).unwrap_or("?").to_string();
            let v: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| ScenarioError::BadValue {
                row,
                column: column.clone(),
                value: field.to_string(),
            })?;
            let (b, is_demand) = columns[c];
            if is_demand {
                if v < 0.0 {
                    return Err(ScenarioError::NegativeDemand { row, column, value: v });
                }
                d[b] = v;
            } else {
                g[b] = v;
            }
        }
        demand_rows.push(d);
        renewable_rows.push(g);
    }
    if demand_rows.is_empty() {
        return Err(ScenarioError::NoDays);
    }
    if !demand_rows.len().is_multiple_of(HOURS_PER_DAY) {
        return Err(ScenarioError::Shape { rows: demand_rows.len() });
    }
    let chunk = |rows: Vec<Vec<f64>>| rows.chunks(HOURS_PER_DAY).map(|c| c.to_vec()).collect();
    Ok(YearProfiles {
        buses,
        demand: chunk(demand_rows),
        renewable: chunk(renewable_rows),
    })
}

pub fn load_profiles_file(path: &Path) -> Result<YearProfiles, ScenarioError> {
    load_profiles(std::fs::File::open(path)?)
}

/// Per-day features: each bus's demand and renewable series divided by
/// that series' peak over the year.
fn features(p: &YearProfiles) -> Vec<Vec<f64>> {
    let nb = p.buses.len();
    let peak = |data: &[Vec<Vec<f64>>], b: usize| {
        data.iter().flatten().map(|h| h[b].abs()).fold(0.0, f64::max)
    };
    let dpk: Vec<f64> = (0..nb).map(|b| peak(&p.demand, b)).collect();
    let rpk: Vec<f64> = (0..nb).map(|b| peak(&p.renewable, b)).collect();
    (0..p.num_days())
        .map(|j| {
            let mut f = Vec::with_capacity(2 * nb * HOURS_PER_DAY);
            for b in 0..nb {
                for (data, pk) in [(&p.demand, dpk[b]), (&p.renewable, rpk[b])] {
                    if pk > 0.0 {
                        f.extend(data[j].iter().map(|h| h[b] / pk));
                    }
                }
            }
            f
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Agglomerative Ward clustering into `k` groups. Returns member lists in
/// order of their lowest member; ties merge the lowest-indexed pair.
pub fn ward_clusters(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active = vec![true; n];
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for _ in 0..n.saturating_sub(k) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                if d[i][j] < best.0 {
                    best = (d[i][j], i, j);
                }
            }
        }
        let (dij, i, j) = best;
        let (ni, nj) = (members[i].len() as f64, members[j].len() as f64);
        for m in (0..n).filter(|&m| active[m] && m != i && m != j) {
            let nm = members[m].len() as f64;
            let v = ((ni + nm) * d[i][m] + (nj + nm) * d[j][m] - nm * dij) / (ni + nj + nm);
            d[i][m] = v;
            d[m][i] = v;
        }
        active[j] = false;
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        members[i].sort_unstable();
    }
    (0..n).filter(|&i| active[i]).map(|i| members[i].clone()).collect()
}

/// Reduces the year to `k` typical days. Each cluster is represented by
/// its member closest to the cluster mean and weighted by its size.
pub fn cluster_days(p: &YearProfiles, k: usize) -> Result<Vec<TypicalDay>, ScenarioError> {
    let n = p.num_days();
    if n == 0 {
        return Err(ScenarioError::NoDays);
    }
    if k == 0 || k > n {
        return Err(ScenarioError::ClusterCount { k, days: n });
    }
    let feats = features(p);
    let dim = feats[0].len();
    let mut out = Vec::with_capacity(k);
    for group in ward_clusters(&feats, k) {
        let mut centroid = vec![0.0; dim];
        for &m in &group {
            for (c, v) in centroid.iter_mut().zip(&feats[m]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= group.len() as f64);
        let rep = *group
            .iter()
            .min_by(|&&a, &&b| sq_dist(&feats[a], &centroid).total_cmp(&sq_dist(&feats[b], &centroid)))
            .expect("clusters are non-empty");
        out.push(typical_day(p, rep, group.len() as f64));
    }
    Ok(out)
}

fn typical_day(p: &YearProfiles, j: usize, weight: f64) -> TypicalDay {
    let series = |data: &[Vec<Vec<f64>>], b: usize| -> Vec<f64> { data[j].iter().map(|h| h[b]).collect() };
    let mut demand = BTreeMap::new();
    let mut renewable = BTreeMap::new();
    for (b, bus) in p.buses.iter().enumerate() {
        demand.insert(bus.clone(), series(&p.demand, b));
        let g = series(&p.renewable, b);
        if g.iter().any(|&v| v != 0.0) {
            renewable.insert(bus.clone(), g);
        }
    }
    TypicalDay {
        id: format!("day{}", j + 1),
        weight,
        hours: HOURS_PER_DAY,
        demand,
        spill_max: renewable.clone(),
        renewable,
        c_rs: 0.0,
        phi_d: 0.03,
        phi_r: 0.05,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(days: &[[f64; 2]]) -> String {
        let mut s = String::from("1:demand,2:demand,2:renewable\n");
        for d in days {
            for h in 0..24 {
                let x = h as f64;
                s.push_str(&format!("{},{},{}\n", d[0] + x, d[1] + 0.5 * x, (x - 12.0).abs()));
            }
        }
        s
    }

    #[test]
    fn shapes() {
        let days: Vec<[f64; 2]> = (0..10).map(|j| [10.0 + j as f64, 5.0]).collect();
        let p = load_profiles(csv_text(&days).as_bytes()).unwrap();
        assert_eq!(p.num_days(), 10);
        assert_eq!(p.demand[0].len(), 24);
        assert_eq!(p.demand[0][0].len(), 2);
        assert_eq!(p.buses, vec!["1", "2"]);
        assert_eq!(p.renewable[3][0][1], 12.0);
    }

    #[test]
    fn rejects_bad_input() {
        let err = load_profiles("1:demand\n".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "no days found");
        let mut text = csv_text(&[[1.0, 1.0]]);
        text = text.replacen("\n3,", "\nNaN,", 1);
        let err = load_profiles(text.as_bytes()).unwrap_err();
        assert!(matches!(err, ScenarioError::BadValue { row: 4, .. }), "{err}");
        let err = load_profiles("1:load\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ScenarioError::Header { .. }));
        let short: String = csv_text(&[[1.0, 1.0]]).lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(load_profiles(short.as_bytes()), Err(ScenarioError::Shape { rows: 9 })));
        let neg = "1:demand\n-1\n";
        assert!(matches!(load_profiles(neg.as_bytes()), Err(ScenarioError::NegativeDemand { .. })));
    }

    #[test]
    fn cluster_counts_and_weights() {
        let days: Vec<[f64; 2]> = (0..6).map(|j| [10.0 + j as f64, 5.0]).collect();
        let p = load_profiles(csv_text(&days).as_bytes()).unwrap();
        let all = cluster_days(&p, 6).unwrap();
        assert!(all.iter().all(|d| d.weight == 1.0));
        let one = cluster_days(&p, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].weight, 6.0);
        assert!(matches!(cluster_days(&p, 7), Err(ScenarioError::ClusterCount { .. })));
        assert!(matches!(cluster_days(&p, 0), Err(ScenarioError::ClusterCount { .. })));
    }

    #[test]
    fn duplicate_groups_split_cleanly() {
        let mut days = vec![[10.0, 5.0]; 5];
        days.extend(vec![[40.0, 30.0]; 5]);
        days.swap(1, 7);
        let p = load_profiles(csv_text(&days).as_bytes()).unwrap();
        let typ = cluster_days(&p, 2).unwrap();
        assert_eq!(typ.iter().map(|d| d.weight).collect::<Vec<_>>(), vec![5.0, 5.0]);
        assert_eq!(typ[0].id, "day1");
        assert_eq!(typ[1].id, "day2");
        assert_eq!(typ[1].demand["1"][0], 40.0);
    }
}
