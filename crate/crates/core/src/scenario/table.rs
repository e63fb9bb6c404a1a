use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WIGNER_CONVENTION: &str = "vacuum-variance-1/2";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
}

impl Provenance {
    pub fn new(config_sha256: &str, seed: Option<u64>) -> Self {
        Self {
            config_sha256: config_sha256.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Named numeric columns with units and a provenance block.
///
/// On disk:
///
/// ```text
/// # config-sha256=<hex>
/// # seed=<n or none>
/// # version=<crate version>
/// # units=<unit>,<unit>,...
/// # warning=<text>          (zero or more)
/// <column>,<column>,...
/// <row>
/// ```
///
/// Floats use the shortest representation that parses back to the same value;
/// `NaN` marks a quantity that does not apply to the row.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl PartialEq for ResultTable {
    fn eq(&self, other: &Self) -> bool {
        let bits = |rows: &Vec<Vec<f64>>| -> Vec<Vec<u64>> {
            rows.iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect()
        };
        self.columns == other.columns
            && self.units == other.units
            && self.provenance == other.provenance
            && self.warnings == other.warnings
            && bits(&self.rows) == bits(&other.rows)
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl ResultTable {
    pub fn new(columns: &[(&str, &str)], provenance: Provenance) -> Self {
        Self {
            columns: columns.iter().map(|(c, _)| c.to_string()).collect(),
            units: columns.iter().map(|(_, u)| u.to_string()).collect(),
            rows: Vec::new(),
            provenance,
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.provenance;
        writeln!(out, "# config-sha256={}", p.config_sha256)?;
        match p.seed {
            Some(s) => writeln!(out, "# seed={s}")?,
            None => writeln!(out, "# seed=none")?,
        }
        writeln!(out, "# version={}", p.version)?;
        writeln!(out, "# units={}", self.units.join(","))?;
        for w in &self.warnings {
            writeln!(out, "# warning={}", w.replace('\n', " "))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Parses a table, rejecting input without the full provenance block.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut meta: Vec<(String, String)> = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(m) = line.strip_prefix("# ") {
                let (k, v) = m
                    .split_once('=')
                    .ok_or_else(|| io_err(format!("malformed header line '{line}'")))?;
                meta.push((k.to_string(), v.to_string()));
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let get = |key: &str| -> Result<String> {
            meta.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| io_err(format!("missing provenance line '# {key}=…'")))
        };
        let seed = match get("seed")?.as_str() {
            "none" => None,
            s => Some(s.parse::<u64>().map_err(io_err)?),
        };
        let provenance = Provenance {
            config_sha256: get("config-sha256")?,
            seed,
            version: get("version")?,
        };
        let units: Vec<String> = get("units")?.split(',').map(str::to_string).collect();
        let warnings = meta
            .iter()
            .filter(|(k, _)| k == "warning")
            .map(|(_, v)| v.clone())
            .collect();
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let columns: Vec<String> = reader.headers().map_err(io_err)?.iter().map(str::to_string).collect();
        if columns.len() != units.len() {
            return Err(io_err("units and columns differ in length"));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(io_err)?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(io_err))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self {
            columns,
            units,
            rows,
            provenance,
            warnings,
        })
    }
}

/// Wigner function sampled on a rectangular grid; `values[i][j]` is at
/// `(x_axis[j], p_axis[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub convention: String,
}

impl WignerGrid {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("finite grid serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: WignerGrid = serde_json::from_str(text).map_err(io_err)?;
        if g.convention != WIGNER_CONVENTION {
            return Err(io_err(format!("unexpected convention '{}'", g.convention)));
        }
        if g.values.len() != g.p_axis.len() || g.values.iter().any(|r| r.len() != g.x_axis.len()) {
            return Err(io_err("grid shape does not match its axes"));
        }
        Ok(g)
    }
}
