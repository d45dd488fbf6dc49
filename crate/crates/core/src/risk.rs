//! Wildfire-risk ingestion: gridded fire-potential rasters integrated along
//! line corridors, per-line daily risk tables, representative planning
//! profiles, and shutoff-day detection.
//!
//! Line integration samples the raster at the midpoints of equal
//! subdivisions of the polyline (default step 0.5 mi) with nearest-cell
//! lookup, so a constant field integrates exactly to value x length at any
//! step. Distances are haversine miles; positions along a segment
//! interpolate linearly in latitude/longitude, which is accurate at
//! corridor scale.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::net::{Line, Network};

pub const EARTH_RADIUS_MILES: f64 = 3958.7613;

/// Default integration step along a line corridor, in miles.
pub const DEFAULT_STEP_MILES: f64 = 0.5;

/// Default fraction of highest-risk days forming the representative
/// planning profile.
pub const DEFAULT_TOP_FRACTION: f64 = 0.10;

/// Default percentile for the shutoff trigger threshold.
pub const DEFAULT_PERCENTILE: f64 = 0.75;

/// Raster coverage margin in degrees: sample points may fall this far
/// outside the cell bounding box before lookup fails.
pub const DEFAULT_COVERAGE_MARGIN_DEG: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum RiskError {
    #[error("i/o error reading '{path}': {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("line '{0}' has no geometry to integrate over")]
    NoGeometry(String),
    #[error("line '{line}' leaves raster coverage at ({lat:.4}, {lon:.4})")]
    Coverage { line: String, lat: f64, lon: f64 },
    #[error("raster for {0} has no cells")]
    EmptyRaster(NaiveDate),
    #[error("risk table: {0}")]
    BadTable(String),
    #[error("percentile must lie in (0, 1], got {0}")]
    BadPercentile(f64),
    #[error("fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("no daily totals to take a percentile of")]
    Empty,
}

/// Great-circle distance in miles between two (lat, lon) points.
pub fn haversine_miles(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
    let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().asin()
}

#[derive(Debug, Clone, Copy)]
pub struct RasterCell {
    pub lat: f64,
    pub lon: f64,
    pub value: f64,
}

/// One day of gridded fire-potential values (arbitrary cell layout;
/// lookup is nearest-cell).
#[derive(Debug, Clone)]
pub struct RiskRaster {
    pub date: NaiveDate,
    pub cells: Vec<RasterCell>,
    pub coverage_margin_deg: f64,
}

impl RiskRaster {
    pub fn new(date: NaiveDate, cells: Vec<RasterCell>) -> RiskRaster {
        RiskRaster {
            date,
            cells,
            coverage_margin_deg: DEFAULT_COVERAGE_MARGIN_DEG,
        }
    }

    /// Loads a `date,lat,lon,value` cell table, one raster per listed
    /// date, dates ascending.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<RiskRaster>, RiskError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RiskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RiskRaster::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Vec<RiskRaster>, RiskError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut by_day: BTreeMap<NaiveDate, Vec<RasterCell>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| RiskError::Parse(e.to_string()))?;
            if rec.len() != 4 {
                return Err(RiskError::Parse("expected date,lat,lon,value".into()));
            }
            let date: NaiveDate = rec[0]
                .trim()
                .parse()
                .map_err(|_| RiskError::Parse(format!("bad date '{}'", &rec[0])))?;
            let field = |i: usize, label: &str| -> Result<f64, RiskError> {
                let v: f64 = rec[i]
                    .trim()
                    .parse()
                    .map_err(|_| RiskError::Parse(format!("bad {label} '{}'", &rec[i])))?;
                if !v.is_finite() {
                    return Err(RiskError::Parse(format!("{label} '{}' is not finite", &rec[i])));
                }
                Ok(v)
            };
            let lat = field(1, "latitude")?;
            let lon = field(2, "longitude")?;
            let value = field(3, "value")?;
            if value < 0.0 {
                return Err(RiskError::Parse(format!("negative value {value} on {date}")));
            }
            by_day.entry(date).or_default().push(RasterCell { lat, lon, value });
        }
        if by_day.is_empty() {
            return Err(RiskError::Empty);
        }
        Ok(by_day
            .into_iter()
            .map(|(date, cells)| RiskRaster::new(date, cells))
            .collect())
    }

    /// Nearest-cell value; errors when the point falls outside the cell
    /// bounding box plus margin.
    fn value_at(&self, lat: f64, lon: f64, line_id: &str) -> Result<f64, RiskError> {
        if self.cells.is_empty() {
            return Err(RiskError::EmptyRaster(self.date));
        }
        let m = self.coverage_margin_deg;
        let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in &self.cells {
            lat_min = lat_min.min(c.lat);
            lat_max = lat_max.max(c.lat);
            lon_min = lon_min.min(c.lon);
            lon_max = lon_max.max(c.lon);
        }
        if lat < lat_min - m || lat > lat_max + m || lon < lon_min - m || lon > lon_max + m {
            return Err(RiskError::Coverage {
                line: line_id.to_string(),
                lat,
                lon,
            });
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.cells.iter().enumerate() {
            let d = (c.lat - lat).powi(2) + (c.lon - lon).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(self.cells[best].value)
    }
}

/// Point at arc length `s` miles along a polyline (linear interpolation in
/// lat/lon within each segment).
fn point_at(geometry: &[[f64; 2]], seg_lengths: &[f64], s: f64) -> [f64; 2] {
    let mut remaining = s;
    for (i, &len) in seg_lengths.iter().enumerate() {
        if remaining <= len || i == seg_lengths.len() - 1 {
            let t = if len > 0.0 {
                (remaining / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let a = geometry[i];
            let b = geometry[i + 1];
            return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        }
        remaining -= len;
    }
    *geometry.last().expect("geometry validated non-empty")
}

/// Integrates raster values along a line corridor: the polyline is split
/// into `ceil(length/step)` equal pieces and each contributes
/// `value(midpoint) * piece_length`.
pub fn integrate_line_risk(
    raster: &RiskRaster,
    line: &Line,
    step_miles: f64,
) -> Result<f64, RiskError> {
    let geometry = line
        .geometry
        .as_ref()
        .ok_or_else(|| RiskError::NoGeometry(line.id.clone()))?;
    let seg_lengths: Vec<f64> = geometry
        .windows(2)
        .map(|w| haversine_miles(w[0], w[1]))
        .collect();
    let total: f64 = seg_lengths.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let pieces = (total / step_miles).ceil().max(1.0) as usize;
    let piece_len = total / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let mid = (i as f64 + 0.5) * piece_len;
        let p = point_at(geometry, &seg_lengths, mid);
        acc += raster.value_at(p[0], p[1], &line.id)? * piece_len;
    }
    Ok(acc)
}

/// Per-line daily risk, aligned with the network line order.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    pub line_ids: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Indexed `[day][line]`.
    pub values: Vec<Vec<f64>>,
}

impl RiskTable {
    /// Loads a `line_id,date,risk` CSV; every network line must be covered
    /// on every listed date, exactly once.
    pub fn load_csv(path: impl AsRef<Path>, net: &Network) -> Result<RiskTable, RiskError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RiskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RiskTable::from_csv_str(&text, net)
    }

    pub fn from_csv_str(text: &str, net: &Network) -> Result<RiskTable, RiskError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut cells: BTreeMap<(NaiveDate, usize), f64> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| RiskError::Parse(e.to_string()))?;
            if rec.len() != 3 {
                return Err(RiskError::Parse("expected line_id,date,risk".into()));
            }
            let line_id = rec[0].trim();
            let line = net
                .line_index(line_id)
                .ok_or_else(|| RiskError::BadTable(format!("unknown line '{line_id}'")))?;
            let date: NaiveDate = rec[1]
                .trim()
                .parse()
                .map_err(|_| RiskError::Parse(format!("bad date '{}'", &rec[1])))?;
            let v: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| RiskError::Parse(format!("bad risk '{}'", &rec[2])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(RiskError::BadTable(format!(
                    "risk {v} must be non-negative ('{line_id}' {date})"
                )));
            }
            if cells.insert((date, line), v).is_some() {
                return Err(RiskError::BadTable(format!(
                    "duplicate entry for '{line_id}' {date}"
                )));
            }
        }
        if cells.is_empty() {
            return Err(RiskError::BadTable("risk table is empty".into()));
        }
        let mut dates: Vec<NaiveDate> = cells.keys().map(|&(d, _)| d).collect();
        dates.dedup();
        let mut values = vec![vec![0.0f64; net.lines.len()]; dates.len()];
        for (di, &date) in dates.iter().enumerate() {
            for (li, l) in net.lines.iter().enumerate() {
                match cells.get(&(date, li)) {
                    Some(&v) => values[di][li] = v,
                    None => {
                        return Err(RiskError::BadTable(format!(
                            "line '{}' has no value for {date}",
                            l.id
                        )))
                    }
                }
            }
        }
        Ok(RiskTable {
            line_ids: net.lines.iter().map(|l| l.id.clone()).collect(),
            dates,
            values,
        })
    }

    /// Builds the table by integrating one raster per day over every line.
    pub fn from_rasters(
        net: &Network,
        rasters: &[RiskRaster],
        step_miles: f64,
    ) -> Result<RiskTable, RiskError> {
        // Lines without an explicit polyline integrate over the straight
        // segment between their endpoint buses, when both have coordinates.
        let effective: Vec<Line> = net
            .lines
            .iter()
            .map(|line| {
                let mut l = line.clone();
                if l.geometry.is_none() {
                    let a = &net.buses[l.from_bus];
                    let b = &net.buses[l.to_bus];
                    if let (Some(alat), Some(alon), Some(blat), Some(blon)) =
                        (a.latitude, a.longitude, b.latitude, b.longitude)
                    {
                        l.geometry = Some(vec![[alat, alon], [blat, blon]]);
                    }
                }
                l
            })
            .collect();
        let mut sorted: Vec<&RiskRaster> = rasters.iter().collect();
        sorted.sort_by_key(|r| r.date);
        let mut dates = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for raster in sorted {
            let mut row = Vec::with_capacity(effective.len());
            for line in &effective {
                row.push(integrate_line_risk(raster, line, step_miles)?);
            }
            dates.push(raster.date);
            values.push(row);
        }
        if dates.is_empty() {
            return Err(RiskError::BadTable("no rasters supplied".into()));
        }
        Ok(RiskTable {
            line_ids: net.lines.iter().map(|l| l.id.clone()).collect(),
            dates,
            values,
        })
    }

    /// Serializes back to the per-line CSV form with 9 significant digits;
    /// written values re-parse to the same decimal string.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("line_id,date,risk\n");
        for (li, id) in self.line_ids.iter().enumerate() {
            for (di, date) in self.dates.iter().enumerate() {
                out.push_str(&format!("{id},{date},{:.8e}\n", self.values[di][li]));
            }
        }
        out
    }

    pub fn daily_totals(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Restricts to days whose month-day falls within `[start, end]`
    /// (month, day) inclusive, in any year. The window must not wrap the
    /// year boundary.
    pub fn restrict_window(&self, start: (u32, u32), end: (u32, u32)) -> RiskTable {
        let keep: Vec<usize> = self
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                let md = (d.month(), d.day());
                md >= start && md <= end
            })
            .map(|(i, _)| i)
            .collect();
        RiskTable {
            line_ids: self.line_ids.clone(),
            dates: keep.iter().map(|&i| self.dates[i]).collect(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    /// Per-line mean of the `ceil(fraction * days)` largest daily values:
    /// the representative high-risk planning profile.
    pub fn representative_profile(&self, fraction: f64) -> Result<RiskProfile, RiskError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(RiskError::BadFraction(fraction));
        }
        if self.dates.is_empty() {
            return Err(RiskError::Empty);
        }
        let k = ((fraction * self.dates.len() as f64).ceil() as usize).max(1);
        let mut values = Vec::with_capacity(self.line_ids.len());
        for li in 0..self.line_ids.len() {
            let mut col: Vec<f64> = self.values.iter().map(|row| row[li]).collect();
            col.sort_by(|a, b| b.total_cmp(a));
            values.push(col[..k].iter().sum::<f64>() / k as f64);
        }
        Ok(RiskProfile {
            values,
            source_days: self.dates.len(),
            top_days: k,
        })
    }
}

/// Representative per-line risk used by planning models.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    pub values: Vec<f64>,
    pub source_days: usize,
    pub top_days: usize,
}

impl RiskProfile {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Nearest-rank percentile of daily totals: sorted ascending, the element
/// at 1-based rank `ceil(p * n)`.
pub fn psps_threshold(daily_totals: &[f64], percentile: f64) -> Result<f64, RiskError> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(RiskError::BadPercentile(percentile));
    }
    if daily_totals.is_empty() {
        return Err(RiskError::Empty);
    }
    let mut sorted = daily_totals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile * sorted.len() as f64).ceil() as usize)
        .clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// A day whose total risk reaches the shutoff threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PspsDay {
    pub index: usize,
    pub date: NaiveDate,
    /// True when the previous calendar day is also a shutoff day.
    pub consecutive_with_previous: bool,
}

/// Flags days with total risk at or above the threshold, in chronological
/// order, marking consecutive calendar pairs (battery state carries over).
pub fn psps_days(table: &RiskTable, threshold: f64) -> Vec<PspsDay> {
    let totals = table.daily_totals();
    let mut out: Vec<PspsDay> = Vec::new();
    for (i, (&date, &total)) in table.dates.iter().zip(&totals).enumerate() {
        if total >= threshold {
            let consecutive = out
                .last()
                .map(|prev: &PspsDay| prev.date.succ_opt() == Some(date))
                .unwrap_or(false);
            out.push(PspsDay {
                index: i,
                date,
                consecutive_with_previous: consecutive,
            });
        }
    }
    out
}
