//! CSV result tables.
//!
//! Every table has a header row and rows in a fixed order. Real numbers are
//! written with 9 significant digits by [`fmt_num`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use corridor_tilt_core::{ConvergenceTrace, QuadratureGrid, RegionTag, Scenario};

/// `%.9g`-style rendering: fixed notation for decimal exponents in [-5, 9),
/// scientific otherwise, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    s
}

/// The value a reader of [`fmt_num`]'s output recovers.
pub fn round_sig(x: f64) -> f64 {
    fmt_num(x).parse().expect("formatted number parses")
}

pub fn region_label(tag: RegionTag) -> String {
    match tag {
        RegionTag::Ground => "ground".to_owned(),
        RegionTag::Corridor(i) => format!("corridor{i}"),
    }
}

pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut inner = self.writer.into_inner().map_err(|e| e.into_error())?;
        inner.flush()?;
        Ok(())
    }
}

pub fn write_tilts(path: &Path, scenario: &Scenario, tilts: &[f64], masses: &[f64]) -> Result<()> {
    let mut t = Table::create(
        path,
        &[
            "station_id",
            "x",
            "y",
            "azimuth_deg",
            "tilt_deg",
            "cell_mass",
        ],
    )?;
    for ((bs, &tilt), &mass) in scenario.stations().iter().zip(tilts).zip(masses) {
        t.row([
            bs.id.to_string(),
            fmt_num(bs.x),
            fmt_num(bs.y),
            fmt_num(bs.azimuth_deg),
            fmt_num(tilt),
            fmt_num(mass),
        ])?;
    }
    t.finish()
}

pub fn write_partition(
    path: &Path,
    grid: &QuadratureGrid,
    assignment: &[usize],
    rss: &[f64],
) -> Result<()> {
    let mut t = Table::create(
        path,
        &[
            "x",
            "y",
            "h",
            "region_tag",
            "weight",
            "station_id",
            "rss_dbm",
        ],
    )?;
    for ((p, &s), &r) in grid.points().iter().zip(assignment).zip(rss) {
        t.row([
            fmt_num(p.loc.x),
            fmt_num(p.loc.y),
            fmt_num(p.loc.height),
            region_label(p.tag),
            fmt_num(p.weight),
            (s + 1).to_string(),
            fmt_num(r),
        ])?;
    }
    t.finish()
}

/// Empty `cdf` writes the header only.
pub fn write_cdf(path: &Path, cdf: &[(f64, f64)]) -> Result<()> {
    let mut t = Table::create(path, &["rss_dbm", "cdf"])?;
    for &(v, p) in cdf {
        t.row([fmt_num(v), fmt_num(p)])?;
    }
    t.finish()
}

/// Row 0 is the initial state; row `k` follows outer iteration `k`.
pub fn write_convergence(path: &Path, trace: &ConvergenceTrace) -> Result<()> {
    let mut t = Table::create(
        path,
        &[
            "outer_iter",
            "phi_dbm",
            "inner_iters",
            "max_centroid_gap_deg",
        ],
    )?;
    t.row([
        "0".to_owned(),
        fmt_num(trace.initial_phi),
        "0".to_owned(),
        String::new(),
    ])?;
    for (k, o) in trace.outer.iter().enumerate() {
        t.row([
            (k + 1).to_string(),
            fmt_num(o.phi_new),
            o.inner.iterations().to_string(),
            fmt_num(o.centroid_gap_deg),
        ])?;
    }
    t.finish()
}

/// Tilts from a table with `station_id` and `tilt_deg` columns, ordered by
/// station id. Ids must be exactly 1..=`stations`.
pub fn read_tilts(path: &Path, stations: usize) -> Result<Vec<f64>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: no `{name}` column", path.display()))
    };
    let (id_col, tilt_col) = (column("station_id")?, column("tilt_deg")?);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("").trim().to_owned();
        let id: usize = field(id_col)
            .parse()
            .with_context(|| format!("{}: row {}: bad station_id", path.display(), line + 1))?;
        let tilt: f64 = field(tilt_col)
            .parse()
            .with_context(|| format!("{}: row {}: bad tilt_deg", path.display(), line + 1))?;
        rows.push((id, tilt));
    }
    if rows.len() != stations {
        bail!(
            "{}: expected {stations} tilts, found {}",
            path.display(),
            rows.len()
        );
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
        bail!(
            "{}: station ids must be exactly 1..={stations}",
            path.display()
        );
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
