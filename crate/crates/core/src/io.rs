//! CSV and binary layouts for paths, solutions and limit predictions.
//!
//! Every CSV starts with `# key=value` metadata lines. Floats are written with
//! the shortest representation that parses back to the same value.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::fbm::{DyadicGrid, FbmPath, Hurst, SeedSpec};
use crate::limits::LimitPrediction;
use crate::reference::SolutionPath;

const MAGIC: &[u8; 4] = b"FBM1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathHeader {
    pub m: u32,
    pub horizon: u32,
    pub hurst: f64,
    pub seed: Option<SeedSpec>,
}

impl PathHeader {
    pub fn of(path: &FbmPath) -> PathHeader {
        PathHeader {
            m: path.grid().level(),
            horizon: path.grid().horizon(),
            hurst: path.hurst().value(),
            seed: path.seed(),
        }
    }

    fn lines(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("m".to_string(), self.m.to_string()),
            ("T".to_string(), self.horizon.to_string()),
            ("H".to_string(), self.hurst.to_string()),
        ];
        if let Some(s) = self.seed {
            v.push(("seed".into(), s.seed.to_string()));
            v.push(("stream".into(), s.stream.to_string()));
        }
        v
    }
}

fn write_meta(w: &mut impl Write, items: &[(String, String)]) -> Result<()> {
    for (k, v) in items {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Metadata pairs and data rows of a CSV produced by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn parse_meta<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta_value(key)
            .ok_or_else(|| format_err(format!("missing header field {key}")))?
            .parse()
            .map_err(|_| format_err(format!("bad header field {key}")))
    }

    fn header(&self) -> Result<PathHeader> {
        let seed = match (self.meta_value("seed"), self.meta_value("stream")) {
            (Some(_), Some(_)) => Some(SeedSpec::new(self.parse_meta("seed")?, self.parse_meta("stream")?)),
            _ => None,
        };
        Ok(PathHeader {
            m: self.parse_meta("m")?,
            horizon: self.parse_meta("T")?,
            hurst: self.parse_meta("H")?,
            seed,
        })
    }
}

pub fn read_csv(r: impl BufRead) -> Result<CsvTable> {
    let mut meta = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| format_err(format!("malformed metadata line {line:?}")))?;
            meta.push((k.to_string(), v.to_string()));
        } else if let Some(cols) = &columns {
            let row = line
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|_| format_err(format!("bad number {x:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != cols.len() {
                return Err(format_err(format!("row with {} fields, expected {}", row.len(), cols.len())));
            }
            rows.push(row);
        } else {
            columns = Some(line.split(',').map(str::to_string).collect());
        }
    }
    Ok(CsvTable {
        meta,
        columns: columns.ok_or_else(|| format_err("no column header"))?,
        rows,
    })
}

fn write_rows(w: &mut impl Write, columns: &[&str], cols: &[&[f64]]) -> Result<()> {
    writeln!(w, "{}", columns.join(","))?;
    let n = cols[0].len();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (c, col) in cols.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&col[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_path_csv(w: &mut impl Write, path: &FbmPath) -> Result<()> {
    write_meta(w, &PathHeader::of(path).lines())?;
    let t: Vec<f64> = path.grid().times().collect();
    write_rows(w, &["t", "B"], &[&t, path.values()])
}

pub fn read_path_csv(r: impl BufRead) -> Result<FbmPath> {
    let table = read_csv(r)?;
    path_from_table(&table)
}

fn path_from_table(table: &CsvTable) -> Result<FbmPath> {
    let h = table.header()?;
    let values = table.column("B").ok_or_else(|| format_err("missing column B"))?;
    FbmPath::from_values(DyadicGrid::new(h.m, h.horizon)?, Hurst::new(h.hurst)?, h.seed, values)
}

/// Path, solution and (if present) Jacobian in one table.
pub fn write_solution_csv(w: &mut impl Write, path: &FbmPath, sol: &SolutionPath) -> Result<()> {
    if path.grid() != sol.grid() {
        return Err(Error::Length("solution and path grids differ".into()));
    }
    let mut meta = PathHeader::of(path).lines();
    meta.push(("scheme".into(), sol.meta().scheme.clone()));
    meta.push(("model".into(), sol.meta().model.clone()));
    write_meta(w, &meta)?;
    let t: Vec<f64> = path.grid().times().collect();
    match sol.jacobian() {
        Some(j) => write_rows(w, &["t", "B", "Y", "J"], &[&t, path.values(), sol.values(), j]),
        None => write_rows(w, &["t", "B", "Y"], &[&t, path.values(), sol.values()]),
    }
}

pub fn read_solution_csv(r: impl BufRead) -> Result<(FbmPath, SolutionPath)> {
    let table = read_csv(r)?;
    let path = path_from_table(&table)?;
    let meta = crate::reference::SolutionMeta {
        scheme: table.meta_value("scheme").unwrap_or_default().to_string(),
        model: table.meta_value("model").unwrap_or_default().to_string(),
    };
    let y = table.column("Y").ok_or_else(|| format_err("missing column Y"))?;
    let sol = SolutionPath::new(path.grid(), y, table.column("J"), meta)?;
    Ok((path, sol))
}

pub fn write_prediction_csv(
    w: &mut impl Write,
    prediction: &LimitPrediction,
    extra_meta: &[(String, String)],
) -> Result<()> {
    let mut meta = vec![("kind".to_string(), format!("{:?}", prediction.kind))];
    meta.extend(prediction.constants.iter().map(|(k, v)| (k.clone(), v.to_string())));
    meta.extend_from_slice(extra_meta);
    write_meta(w, &meta)?;
    let t: Vec<f64> = prediction.grid.times().collect();
    write_rows(w, &["t", "value"], &[&t, &prediction.values])
}

/// Little-endian layout: magic, m, T, H, seed flag, seed, stream, count, values.
pub fn write_path_binary(w: &mut impl Write, path: &FbmPath) -> Result<()> {
    let h = PathHeader::of(path);
    w.write_all(MAGIC)?;
    w.write_all(&h.m.to_le_bytes())?;
    w.write_all(&h.horizon.to_le_bytes())?;
    w.write_all(&h.hurst.to_le_bytes())?;
    let s = h.seed.unwrap_or(SeedSpec::new(0, 0));
    w.write_all(&[h.seed.is_some() as u8])?;
    w.write_all(&s.seed.to_le_bytes())?;
    w.write_all(&s.stream.to_le_bytes())?;
    w.write_all(&(path.values().len() as u64).to_le_bytes())?;
    for v in path.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path_binary(r: &mut impl Read) -> Result<FbmPath> {
    fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        r.read_exact(&mut b)?;
        Ok(b)
    }
    if &take::<4>(r)? != MAGIC {
        return Err(format_err("not a path file"));
    }
    let m = u32::from_le_bytes(take(r)?);
    let horizon = u32::from_le_bytes(take(r)?);
    let hurst = f64::from_le_bytes(take(r)?);
    let has_seed = take::<1>(r)?[0] != 0;
    let seed = u64::from_le_bytes(take(r)?);
    let stream = u64::from_le_bytes(take(r)?);
    let n = u64::from_le_bytes(take(r)?) as usize;
    let grid = DyadicGrid::new(m, horizon)?;
    if n != grid.len() {
        return Err(format_err(format!("{n} values for {} grid points", grid.len())));
    }
    let values = (0..n)
        .map(|_| Ok(f64::from_le_bytes(take(r)?)))
        .collect::<Result<Vec<_>>>()?;
    FbmPath::from_values(
        grid,
        Hurst::new(hurst)?,
        has_seed.then(|| SeedSpec::new(seed, stream)),
        values,
    )
}
