//! CSV formats for sites, observations and quantile maps.
//!
//! Sites: `label,x,y`. Observations: one column per site label, optionally
//! preceded by a `time` column; empty cells are missing values.

use crate::error::{Error, Result};
use crate::gaussian::sites::SiteSet;
use crate::inference::Dataset;
use crate::simulation::QuantileMap;
use std::io::{Read, Write};

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_f64(s: &str, line: u64, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidData(format!("line {line}: cannot parse {what} '{s}'")))
}

pub fn read_sites<R: Read>(r: R) -> Result<SiteSet> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols != ["label", "x", "y"] {
        return Err(Error::InvalidData(format!("line 1: sites header must be 'label,x,y', found '{}'", cols.join(","))));
    }
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::InvalidData(format!("line {line}: expected 3 fields, found {}", rec.len())));
        }
        labels.push(rec[0].to_string());
        coords.push([parse_f64(&rec[1], line, "x")?, parse_f64(&rec[2], line, "y")?]);
    }
    SiteSet::new(coords, labels)
}

pub fn write_sites<W: Write>(sites: &SiteSet, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["label", "x", "y"])?;
    for (l, c) in sites.labels().iter().zip(sites.coords()) {
        wr.write_record([l.clone(), c[0].to_string(), c[1].to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads observations whose columns are matched to `sites` by label.
pub fn read_observations<R: Read>(r: R, sites: &SiteSet) -> Result<Dataset> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    let mut names: Vec<&str> = header.iter().collect();
    let has_time = names.first() == Some(&"time");
    if has_time {
        names.remove(0);
    }
    if names.len() != sites.len() {
        return Err(Error::InvalidData(format!(
            "line 1: {} observation columns for {} sites",
            names.len(),
            sites.len()
        )));
    }
    let mut col_of = vec![usize::MAX; sites.len()];
    for (j, name) in names.iter().enumerate() {
        let k = sites
            .index_of(name)
            .ok_or_else(|| Error::InvalidData(format!("line 1: column '{name}' is not a known site")))?;
        if col_of[k] != usize::MAX {
            return Err(Error::InvalidData(format!("line 1: column '{name}' repeated")));
        }
        col_of[k] = j;
    }
    let off = usize::from(has_time);
    let mut rows = Vec::new();
    let mut time = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != names.len() + off {
            return Err(Error::InvalidData(format!("line {line}: expected {} fields, found {}", names.len() + off, rec.len())));
        }
        if has_time {
            let t = rec[0]
                .parse::<i64>()
                .map_err(|_| Error::InvalidData(format!("line {line}: cannot parse time '{}'", &rec[0])))?;
            time.push(t);
        }
        let row = col_of
            .iter()
            .map(|&j| {
                let s = &rec[j + off];
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(s, line, "value").map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(&rows, sites.clone(), has_time.then_some(time))
}

/// Writes rows under a header of site labels; `NaN` becomes an empty cell.
pub fn write_observations<W: Write>(sites: &SiteSet, rows: &[Vec<f64>], time: Option<&[i64]>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = Vec::new();
    if time.is_some() {
        header.push("time".into());
    }
    header.extend(sites.labels().iter().cloned());
    wr.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != sites.len() {
            return Err(Error::InvalidData(format!("row {i} has {} values for {} sites", row.len(), sites.len())));
        }
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(t) = time {
            rec.push(t[i].to_string());
        }
        rec.extend(row.iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_dataset<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.row(i).to_vec()).collect();
    write_observations(data.sites(), &rows, Some(data.time()), w)
}

/// `label,x,y,q<p>...` per grid point.
pub fn write_quantile_map<W: Write>(grid: &SiteSet, map: &QuantileMap, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["label".to_string(), "x".into(), "y".into()];
    header.extend(map.probabilities.iter().map(|p| format!("q{p}")));
    wr.write_record(&header)?;
    for (g, (l, c)) in grid.labels().iter().zip(grid.coords()).enumerate() {
        let mut rec = vec![l.clone(), c[0].to_string(), c[1].to_string()];
        rec.extend(map.values[g].iter().map(|v| v.to_string()));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
